//! Reference solutions for small linear problems and refined quadratures.
//!
//! For constant `D` and constant mobility the discrete flux is linear in `f`,
//! so the semi-discrete system is `f' = L f` with a dense `L` obtained by
//! probing [`assemble_flux`]. Time integration here is independent of the
//! Newton solver.

use crate::diagnostics::{dissipation, free_energy};
use crate::error::{Error, Result};
use crate::grid::{integrate, ScalarField, TensorGrid};
use crate::params::ParameterSet;
use crate::solver::assemble_flux;

pub const MAX_DENSE_CELLS: usize = 4096;

/// Row-major `n x n` matrix of the linear finite-volume operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    grid: TensorGrid,
    n: usize,
    matrix: Vec<f64>,
}

impl DenseOperator {
    pub fn grid(&self) -> &TensorGrid {
        &self.grid
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.n + j]
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .chunks(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.entry(i, j)).sum())
            .collect()
    }

    /// `max_i sum_j |L_ij|`.
    pub fn norm_inf(&self) -> f64 {
        self.matrix
            .chunks(self.n)
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Column `j` of `L` is `-div J(1 + e_j) + div J(1)`; the flux only accepts
/// positive densities, so probes are shifted by the constant state.
pub fn build_linear_operator(params: &ParameterSet, grid: &TensorGrid) -> Result<DenseOperator> {
    if !params.diffusion.is_constant() || !params.mobility.is_constant() {
        return Err(Error::InvalidParameter(
            "linear operator needs constant diffusion and mobility".into(),
        ));
    }
    let n = grid.n_cells();
    if n > MAX_DENSE_CELLS {
        return Err(Error::InvalidParameter(format!(
            "{n} cells exceed the dense limit {MAX_DENSE_CELLS}"
        )));
    }
    let base = ScalarField::constant(*grid, 1.0);
    let div0 = assemble_flux(&base, params, 0.0)?.divergence().into_values();
    let mut matrix = vec![0.0; n * n];
    for j in 0..n {
        let mut probe = base.clone();
        probe.values_mut()[j] += 1.0;
        let div = assemble_flux(&probe, params, 0.0)?.divergence();
        for (i, (a, b)) in div.values().iter().zip(&div0).enumerate() {
            matrix[i * n + j] = -(a - b);
        }
    }
    Ok(DenseOperator {
        grid: *grid,
        n,
        matrix,
    })
}

fn rk4_step(op: &DenseOperator, y: &[f64], dt: f64) -> Vec<f64> {
    let axpy = |a: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        a.iter().zip(k).map(|(x, v)| x + s * v).collect()
    };
    let k1 = op.apply(y);
    let k2 = op.apply(&axpy(y, &k1, 0.5 * dt));
    let k3 = op.apply(&axpy(y, &k2, 0.5 * dt));
    let k4 = op.apply(&axpy(y, &k3, dt));
    y.iter()
        .enumerate()
        .map(|(i, v)| v + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Classical RK4 for `f' = L f` up to time `t`. The step is at most `h^2 / 4`
/// and inside the RK4 stability interval for `||L||_inf`.
pub fn reference_evolve(op: &DenseOperator, f0: &ScalarField, t: f64) -> Result<ScalarField> {
    let h = op.grid.spacing();
    let stable = 2.5 / op.norm_inf().max(f64::MIN_POSITIVE);
    reference_evolve_with_step(op, f0, t, stable.min(0.25 * h * h))
}

/// As [`reference_evolve`] with steps no longer than `dt_max`.
pub fn reference_evolve_with_step(
    op: &DenseOperator,
    f0: &ScalarField,
    t: f64,
    dt_max: f64,
) -> Result<ScalarField> {
    if f0.grid() != &op.grid {
        return Err(Error::GridMismatch);
    }
    if !(t >= 0.0) || !(dt_max > 0.0) {
        return Err(Error::InvalidParameter("need t >= 0 and dt_max > 0".into()));
    }
    let mut y = f0.values().to_vec();
    if t > 0.0 {
        let steps = (t / dt_max).ceil() as usize;
        let dt = t / steps as f64;
        for _ in 0..steps {
            y = rk4_step(op, &y, dt);
        }
    }
    ScalarField::new(op.grid, y)
}

/// `(I - dt L)^-1 f_old` by Gaussian elimination with partial pivoting.
pub fn implicit_step(op: &DenseOperator, f_old: &ScalarField, dt: f64) -> Result<ScalarField> {
    let n = op.n;
    let mut a: Vec<f64> = op.matrix.iter().map(|v| -dt * v).collect();
    for i in 0..n {
        a[i * n + i] += 1.0;
    }
    let mut b = f_old.values().to_vec();
    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if a[i * n + k].abs() > a[p * n + k].abs() {
                p = i;
            }
        }
        if a[p * n + k] == 0.0 {
            return Err(Error::LinearSolve("singular implicit operator".into()));
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            b.swap(k, p);
        }
        for i in k + 1..n {
            let m = a[i * n + k] / a[k * n + k];
            for j in k..n {
                a[i * n + j] -= m * a[k * n + j];
            }
            b[i] -= m * b[k];
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k * n + j] * b[j]).sum();
        b[k] = (b[k] - s) / a[k * n + k];
    }
    ScalarField::new(op.grid, b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    Mass,
    FreeEnergy,
    /// Dissipation with the mobility at the given time.
    Dissipation(f64),
}

/// Evaluates `functional` of the analytic density on a grid `refine` times
/// finer than `grid` (same boundary).
pub fn refined_functional(
    params: &ParameterSet,
    functional: Functional,
    f_analytic: impl Fn(&[f64]) -> f64,
    grid: &TensorGrid,
    refine: usize,
) -> Result<f64> {
    if refine < 2 {
        return Err(Error::InvalidParameter("refine must be at least 2".into()));
    }
    let fine = TensorGrid::new(grid.dim(), grid.cells_per_dim() * refine, grid.boundary())?;
    let f = ScalarField::from_fn(fine, f_analytic);
    match functional {
        Functional::Mass => Ok(integrate(&f)),
        Functional::FreeEnergy => free_energy(&f, params),
        Functional::Dissipation(t) => dissipation(&f, params, t),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::equilibrium_state;
    use crate::grid::Boundary;
    use crate::params::{self, DiffusionField, MobilityField, PotentialField};
    use approx::assert_relative_eq;
    use std::f64::consts::{LN_2, PI};

    fn linear(phi: PotentialField) -> ParameterSet {
        ParameterSet::new("lin", phi, DiffusionField::constant(1.0).unwrap(), MobilityField::unit())
    }

    #[test]
    fn periodic_laplacian() {
        let g = TensorGrid::new(1, 4, Boundary::Periodic).unwrap();
        let op = build_linear_operator(&linear(PotentialField::constant(0.0)), &g).unwrap();
        let s = 1.0 / (g.spacing() * g.spacing());
        let row = [-2.0, 1.0, 0.0, 1.0];
        for i in 0..4 {
            for j in 0..4 {
                assert_relative_eq!(op.entry(i, j), s * row[(j + 4 - i) % 4], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn operator_structure() {
        let g = TensorGrid::new(1, 32, Boundary::Periodic).unwrap();
        let p = linear(params::preset_potential_1d(2).unwrap());
        let op = build_linear_operator(&p, &g).unwrap();
        let scale = op.norm_inf();
        assert!(op.column_sums().iter().all(|s| s.abs() <= 1e-12 * scale));
        for i in 0..32 {
            for j in 0..32 {
                if i != j {
                    assert!(op.entry(i, j) >= 0.0);
                }
            }
        }
        let eq = equilibrium_state(&p, &g).unwrap();
        let lf = op.apply(eq.density.values());
        assert!(lf.iter().all(|v| v.abs() <= 1e-12 * scale));
    }

    #[test]
    fn rejects_variable_coefficients() {
        let g = TensorGrid::new(1, 8, Boundary::Periodic).unwrap();
        let p = ParameterSet::new(
            "v",
            PotentialField::constant(0.0),
            params::preset_diffusion_single_mode(1).unwrap(),
            MobilityField::unit(),
        );
        assert!(build_linear_operator(&p, &g).is_err());
    }

    #[test]
    fn heat_mode_decays_at_discrete_eigenvalue() {
        let g = TensorGrid::new(1, 32, Boundary::Periodic).unwrap();
        let op = build_linear_operator(&linear(PotentialField::constant(0.0)), &g).unwrap();
        let f0 = ScalarField::from_fn(g, |x| 0.5 * (1.0 + (PI * x[0]).cos()));
        assert_eq!(reference_evolve(&op, &f0, 0.0).unwrap(), f0);
        let f = reference_evolve(&op, &f0, 0.1).unwrap();
        let h = g.spacing();
        let mu = 2.0 / (h * h) * (1.0 - (PI * h).cos());
        let amp = |v: &ScalarField| {
            v.values()
                .iter()
                .enumerate()
                .map(|(i, y)| y * (PI * g.coord(i)).cos())
                .sum::<f64>()
        };
        assert_relative_eq!(amp(&f) / amp(&f0), (-mu * 0.1).exp(), max_relative = 1e-6);
        assert!((integrate(&f) - integrate(&f0)).abs() <= 1e-12);
    }

    #[test]
    fn refined_functionals() {
        let g = TensorGrid::new(1, 50, Boundary::Periodic).unwrap();
        let p = linear(PotentialField::constant(0.0));
        let fe = refined_functional(&p, Functional::FreeEnergy, |_| 0.5, &g, 3).unwrap();
        assert_relative_eq!(fe, -1.0 - LN_2, max_relative = 1e-14);
        let ic = params::preset_gaussian_ic(1, 0.01).unwrap();
        let m10 = refined_functional(&p, Functional::Mass, |x| ic.density(x), &g, 10).unwrap();
        let m20 = refined_functional(&p, Functional::Mass, |x| ic.density(x), &g, 20).unwrap();
        assert!((m10 - m20).abs() <= 1e-4);
        let eq = equilibrium_state(&p, &g).unwrap();
        let c = eq.constant;
        let d = refined_functional(&p, Functional::Dissipation(0.0), |_| (c).exp(), &g, 4).unwrap();
        assert!(d.abs() <= 1e-20);
        assert!(refined_functional(&p, Functional::Mass, |_| 1.0, &g, 1).is_err());
    }
}
