//! Equilibrium density `f_eq = exp(-(phi - C1) / D)` and its normalization.

use crate::diagnostics::free_energy;
use crate::error::{Error, Result};
use crate::grid::{integrate, ScalarField, TensorGrid};
use crate::params::ParameterSet;

const BRACKET: (f64, f64) = (-1.0e3, 1.0e3);
const MASS_TOL: f64 = 1.0e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumState {
    pub density: ScalarField,
    /// Normalization constant `C1`.
    pub constant: f64,
    pub free_energy: f64,
}

fn density_for(phi: &[f64], diff: &[f64], c: f64) -> Vec<f64> {
    phi.iter()
        .zip(diff)
        .map(|(p, d)| (-(p - c) / d).exp())
        .collect()
}

fn check_diffusion(diff: &[f64]) -> Result<()> {
    match diff.iter().position(|&d| !(d > 0.0)) {
        Some(cell) => Err(Error::InvalidParameter(format!(
            "diffusion not positive in cell {cell}"
        ))),
        None => Ok(()),
    }
}

/// Constant `c` with `integrate(exp(-(phi - c) / D)) = 1` on `grid`.
///
/// Bisection on `[-1e3, 1e3]` followed by a Newton polish; the mass is
/// strictly increasing in `c`.
pub fn solve_normalization(params: &ParameterSet, grid: &TensorGrid) -> Result<f64> {
    let phi = params.potential_cells(grid).into_values();
    let diff = params.diffusion_cells(grid).into_values();
    check_diffusion(&diff)?;
    let vol = grid.cell_volume();
    let mass = |c: f64| vol * density_for(&phi, &diff, c).iter().sum::<f64>();

    let (mut lo, mut hi) = BRACKET;
    if !(mass(lo) < 1.0 && mass(hi) > 1.0) {
        return Err(Error::NormalizationBracket { lo, hi });
    }
    while hi - lo > 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut c = 0.5 * (lo + hi);
    for _ in 0..3 {
        let f = density_for(&phi, &diff, c);
        let m = vol * f.iter().sum::<f64>();
        if (m - 1.0).abs() <= 1e-16 {
            break;
        }
        let dm = vol * f.iter().zip(&diff).map(|(v, d)| v / d).sum::<f64>();
        c -= (m - 1.0) / dm;
    }
    if (mass(c) - 1.0).abs() > MASS_TOL {
        return Err(Error::NormalizationBracket { lo, hi });
    }
    Ok(c)
}

pub fn equilibrium_state(params: &ParameterSet, grid: &TensorGrid) -> Result<EquilibriumState> {
    let constant = solve_normalization(params, grid)?;
    let phi = params.potential_cells(grid).into_values();
    let diff = params.diffusion_cells(grid).into_values();
    let density = ScalarField::new(*grid, density_for(&phi, &diff, constant))?;
    density.check_positive()?;
    let free_energy = free_energy(&density, params)?;
    Ok(EquilibriumState {
        density,
        constant,
        free_energy,
    })
}

impl EquilibriumState {
    pub fn mass(&self) -> f64 {
        integrate(&self.density)
    }

    /// Largest `|D log f_eq + phi - C1|` over the cells.
    pub fn residual(&self, params: &ParameterSet) -> f64 {
        let grid = self.density.grid();
        let phi = params.potential_cells(grid);
        let diff = params.diffusion_cells(grid);
        self.density
            .values()
            .iter()
            .zip(phi.values())
            .zip(diff.values())
            .map(|((f, p), d)| (d * f.ln() + p - self.constant).abs())
            .fold(0.0, f64::max)
    }
}
