//! Scalar functionals of a density: free energy, velocity and dissipation,
//! relative entropy, CKP and maximum-principle checks.

pub mod fit;
pub mod identity;

pub use fit::{fit_decay_rate, fit_decay_rate_with, fit_series, DecayFit, FitOptions, Quantity};
pub use identity::{second_derivative_identity, IdentityReport, Regime};

use crate::equilibrium::EquilibriumState;
use crate::error::{Error, Result};
use crate::grid::{FaceField, ScalarField};
use crate::params::ParameterSet;
use crate::solver::CellCoefficients;

/// `integral D f (log f - 1) + f phi`.
pub fn free_energy(f: &ScalarField, params: &ParameterSet) -> Result<f64> {
    f.check_positive()?;
    let grid = f.grid();
    let phi = params.potential_cells(grid);
    let diff = params.diffusion_cells(grid);
    let sum: f64 = f
        .values()
        .iter()
        .zip(phi.values())
        .zip(diff.values())
        .map(|((&v, p), d)| d * v * (v.ln() - 1.0) + v * p)
        .sum();
    Ok(grid.cell_volume() * sum)
}

fn check_same_grid(a: &ScalarField, b: &ScalarField) -> Result<()> {
    if a.grid() == b.grid() {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// `F[f] - F[f_eq]`, summed in the cancellation-free form
/// `integral D (f log(f / f_eq) - f + f_eq) + C1 (mass(f) - mass(f_eq))`.
pub fn relative_free_energy(
    f: &ScalarField,
    eq: &EquilibriumState,
    params: &ParameterSet,
) -> Result<f64> {
    f.check_positive()?;
    check_same_grid(f, &eq.density)?;
    let grid = f.grid();
    let diff = params.diffusion_cells(grid);
    let (mut kl, mut dm) = (0.0, 0.0);
    for ((&v, &e), d) in f.values().iter().zip(eq.density.values()).zip(diff.values()) {
        kl += d * (v * (v / e).ln() - v + e);
        dm += v - e;
    }
    Ok(grid.cell_volume() * (kl + eq.constant * dm))
}

/// Chemical potential `D log f + phi` per cell.
fn chemical_potential(f: &[f64], c: &CellCoefficients) -> Vec<f64> {
    f.iter()
        .zip(&c.diff)
        .zip(&c.phi)
        .map(|((v, d), p)| d * v.ln() + p)
        .collect()
}

pub(crate) fn velocity_with(f: &ScalarField, c: &CellCoefficients) -> Result<FaceField> {
    f.check_positive()?;
    let grid = *f.grid();
    let h = grid.spacing();
    let mu = chemical_potential(f.values(), c);
    let mut u = FaceField::zeros(grid);
    for axis in 0..grid.dim() {
        let comp = u.axis_mut(axis);
        for (l, slot) in comp.iter_mut().enumerate() {
            if let Some(r) = grid.upper_neighbor(l, axis) {
                let pi_f = 0.5 * (c.mob[l] + c.mob[r]);
                *slot = -(mu[r] - mu[l]) / (h * pi_f);
            }
        }
    }
    Ok(u)
}

/// Face-normal velocity `u = -(1 / pi_f) (mu_R - mu_L) / h` with
/// `mu = D log f + phi` formed per cell.
pub fn velocity(f: &ScalarField, params: &ParameterSet, t: f64) -> Result<FaceField> {
    velocity_with(f, &CellCoefficients::new(params, f.grid(), t))
}

/// `|u|^2` per cell, averaging the squares of the two faces on each axis.
pub(crate) fn cell_speed_squared(u: &FaceField) -> Vec<f64> {
    let grid = *u.grid();
    (0..grid.n_cells())
        .map(|cell| {
            (0..grid.dim())
                .map(|a| {
                    let (lo, hi) = (u.lower(cell, a), u.upper(cell, a));
                    0.5 * (lo * lo + hi * hi)
                })
                .sum()
        })
        .collect()
}

pub(crate) fn dissipation_with(f: &ScalarField, c: &CellCoefficients) -> Result<f64> {
    let u = velocity_with(f, c)?;
    let s = cell_speed_squared(&u);
    let sum: f64 = f
        .values()
        .iter()
        .zip(&c.mob)
        .zip(&s)
        .map(|((v, p), s)| p * s * v)
        .sum();
    Ok(f.grid().cell_volume() * sum)
}

/// `integral pi |u|^2 f`.
pub fn dissipation(f: &ScalarField, params: &ParameterSet, t: f64) -> Result<f64> {
    dissipation_with(f, &CellCoefficients::new(params, f.grid(), t))
}

/// `integral D (f log f - f log f_eq)`.
pub fn relative_entropy(
    f: &ScalarField,
    eq: &EquilibriumState,
    params: &ParameterSet,
) -> Result<f64> {
    f.check_positive()?;
    check_same_grid(f, &eq.density)?;
    let grid = f.grid();
    let diff = params.diffusion_cells(grid);
    let sum: f64 = f
        .values()
        .iter()
        .zip(eq.density.values())
        .zip(diff.values())
        .map(|((&v, &e), d)| d * v * (v / e).ln())
        .sum();
    Ok(grid.cell_volume() * sum)
}

pub fn l1_distance(a: &ScalarField, b: &ScalarField) -> f64 {
    a.grid().cell_volume()
        * a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).abs())
            .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CkpReport {
    pub l1: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `||f - f_eq||_1^2 <= 2 integral f log(f / f_eq)`, with slack `1e-12`.
pub fn ckp_check(f: &ScalarField, eq: &EquilibriumState) -> CkpReport {
    let vol = f.grid().cell_volume();
    let mut kl = 0.0;
    for (&v, &e) in f.values().iter().zip(eq.density.values()) {
        if v > 0.0 {
            kl += v * (v / e).ln();
        }
    }
    let l1 = l1_distance(f, &eq.density);
    let bound = 2.0 * vol * kl;
    CkpReport {
        l1,
        bound,
        holds: l1 * l1 <= bound + 1e-12,
    }
}

/// Pointwise bounds `exp(min h0 / D) f_eq <= f <= exp(max h0 / D) f_eq` with
/// `h0 = D log(f0 / f_eq)`.
pub fn max_principle_envelope(
    f0: &ScalarField,
    eq: &EquilibriumState,
    params: &ParameterSet,
) -> Result<(ScalarField, ScalarField)> {
    f0.check_positive()?;
    check_same_grid(f0, &eq.density)?;
    let grid = *f0.grid();
    let diff = params.diffusion_cells(&grid);
    let h0: Vec<f64> = f0
        .values()
        .iter()
        .zip(eq.density.values())
        .zip(diff.values())
        .map(|((v, e), d)| d * (v / e).ln())
        .collect();
    let lo = h0.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = h0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bound = |m: f64| {
        let vals = eq
            .density
            .values()
            .iter()
            .zip(diff.values())
            .map(|(e, d)| (m / d).exp() * e)
            .collect();
        ScalarField::new(grid, vals)
    };
    Ok((bound(lo)?, bound(hi)?))
}

/// Largest distance by which `f` leaves `[lower, upper]` (0 when inside).
pub fn envelope_violation(f: &ScalarField, lower: &ScalarField, upper: &ScalarField) -> f64 {
    f.values()
        .iter()
        .zip(lower.values())
        .zip(upper.values())
        .map(|((v, lo), hi)| (lo - v).max(v - hi).max(0.0))
        .fold(0.0, f64::max)
}

/// Uniform lower bound `-(||D|| ||log f - 1|| + ||phi||) * mass` for `F`, with
/// `||log f - 1||` taken from the extreme values of `f`.
pub fn free_energy_lower_bound(
    f_min: f64,
    f_max: f64,
    mass: f64,
    params: &ParameterSet,
    grid: &crate::grid::TensorGrid,
) -> f64 {
    let sup = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let d = sup(params.diffusion_cells(grid).values());
    let phi = sup(params.potential_cells(grid).values());
    let log_sup = (f_min.ln() - 1.0).abs().max((f_max.ln() - 1.0).abs());
    -(d * log_sup + phi) * mass
}

/// `(F - F_eq) / (D_dis / (2 D))` with `D` the largest cell value of the diffusion.
pub fn log_sobolev_ratio(f_rel: f64, dissipation: f64, params: &ParameterSet, grid: &crate::grid::TensorGrid) -> f64 {
    let d = params
        .diffusion_cells(grid)
        .values()
        .iter()
        .copied()
        .fold(0.0, f64::max);
    f_rel / (dissipation / (2.0 * d))
}

/// Bound `(g0^(1-p) - d/c)^(-1/(p-1)) e^(-c t)` for solutions of
/// `g' <= -c g + d g^p`.
pub fn gronwall_envelope(c: f64, d: f64, p: f64, g0: f64, t: f64) -> Result<f64> {
    if !(c > 0.0 && d > 0.0 && p > 1.0) {
        return Err(Error::InvalidParameter(
            "need c > 0, d > 0 and p > 1".into(),
        ));
    }
    let cap = (c / d).powf(1.0 / (p - 1.0));
    if !(g0 > 0.0 && g0 < cap) {
        return Err(Error::InvalidParameter(format!(
            "g0 = {g0} outside (0, {cap})"
        )));
    }
    Ok((g0.powf(1.0 - p) - d / c).powf(-1.0 / (p - 1.0)) * (-c * t).exp())
}
