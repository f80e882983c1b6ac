//! Exponentially fitted two-point flux.
//!
//! For the face between a cell `L` and its upper neighbor `R`:
//!
//! ```text
//! z = (dphi + avg(log f) * dD) / D_f
//! J = D_f / (h pi_f) * (B(z) f_L - B(-z) f_R),   B(z) = z / (e^z - 1)
//! ```
//!
//! `D_f`, `pi_f` are arithmetic face means and `dphi`, `dD` are differences of
//! cell values. The flux vanishes on the discrete equilibrium, reduces to the
//! heat flux when `D` and `phi` are constant and satisfies `J * dmu <= 0` for
//! the chemical potential `mu = D log f + phi`.

use crate::error::Result;
use crate::grid::{FaceField, ScalarField, TensorGrid};
use crate::params::ParameterSet;

use super::linalg::CsrBuilder;
use super::linalg::CsrMatrix;

/// Cell values of the coefficients, `pi` at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct CellCoefficients {
    pub phi: Vec<f64>,
    pub diff: Vec<f64>,
    pub mob: Vec<f64>,
}

impl CellCoefficients {
    pub fn new(params: &ParameterSet, grid: &TensorGrid, t: f64) -> Self {
        Self {
            phi: params.potential_cells(grid).into_values(),
            diff: params.diffusion_cells(grid).into_values(),
            mob: params.mobility_cells(grid, t).into_values(),
        }
    }

    pub fn set_time(&mut self, params: &ParameterSet, grid: &TensorGrid, t: f64) {
        self.mob = params.mobility_cells(grid, t).into_values();
    }
}

/// `B(z) = z / (e^z - 1)`.
pub fn bernoulli(z: f64) -> f64 {
    if z.abs() < 1e-2 {
        let z2 = z * z;
        1.0 - 0.5 * z + z2 / 12.0 - z2 * z2 / 720.0 + z2 * z2 * z2 / 30240.0
    } else {
        z / z.exp_m1()
    }
}

/// `B'(z)`.
pub fn bernoulli_deriv(z: f64) -> f64 {
    if z.abs() < 1e-2 {
        let z2 = z * z;
        -0.5 + z / 6.0 - z2 * z / 180.0 + z2 * z2 * z / 5040.0
    } else {
        bernoulli(z) * (1.0 - bernoulli(-z)) / z
    }
}

struct Face {
    coeff: f64,
    z: f64,
    dz_dl: f64,
    dz_dr: f64,
}

#[inline]
fn face(f: &[f64], c: &CellCoefficients, l: usize, r: usize, h: f64) -> Face {
    let d_f = 0.5 * (c.diff[l] + c.diff[r]);
    let pi_f = 0.5 * (c.mob[l] + c.mob[r]);
    let dd = c.diff[r] - c.diff[l];
    let avg_log = 0.5 * (f[l].ln() + f[r].ln());
    let z = (c.phi[r] - c.phi[l] + avg_log * dd) / d_f;
    let k = 0.5 * dd / d_f;
    Face {
        coeff: d_f / (h * pi_f),
        z,
        dz_dl: k / f[l],
        dz_dr: k / f[r],
    }
}

/// Upper-face fluxes for every cell; walls stay zero.
pub(crate) fn flux_values(f: &[f64], grid: &TensorGrid, c: &CellCoefficients) -> FaceField {
    let h = grid.spacing();
    let mut out = FaceField::zeros(*grid);
    for axis in 0..grid.dim() {
        let comp = out.axis_mut(axis);
        for (l, slot) in comp.iter_mut().enumerate() {
            if let Some(r) = grid.upper_neighbor(l, axis) {
                let fc = face(f, c, l, r, h);
                *slot = fc.coeff * (bernoulli(fc.z) * f[l] - bernoulli(-fc.z) * f[r]);
            }
        }
    }
    out
}

/// Discrete flux `J(f)` at time `t`. Requires `f > 0`.
pub fn assemble_flux(f: &ScalarField, params: &ParameterSet, t: f64) -> Result<FaceField> {
    f.check_positive()?;
    let grid = f.grid();
    let c = CellCoefficients::new(params, grid, t);
    Ok(flux_values(f.values(), grid, &c))
}

/// Jacobian of `f + dt * div J(f)`.
pub(crate) fn step_jacobian(
    f: &[f64],
    grid: &TensorGrid,
    c: &CellCoefficients,
    dt: f64,
) -> CsrMatrix {
    let h = grid.spacing();
    let n = grid.n_cells();
    let mut b = CsrBuilder::new(n, 1 + 2 * grid.dim());
    for (cell, _) in f.iter().enumerate() {
        b.add(cell, cell, 1.0);
    }
    let s = dt / h;
    for axis in 0..grid.dim() {
        for l in 0..n {
            let Some(r) = grid.upper_neighbor(l, axis) else {
                continue;
            };
            let fc = face(f, c, l, r, h);
            let bp = bernoulli(fc.z);
            let bm = bernoulli(-fc.z);
            let g = bernoulli_deriv(fc.z) * f[l] + bernoulli_deriv(-fc.z) * f[r];
            let dj_dl = fc.coeff * (bp + g * fc.dz_dl);
            let dj_dr = fc.coeff * (-bm + g * fc.dz_dr);
            // J leaves L through its upper face and enters R through its lower face.
            b.add(l, l, s * dj_dl);
            b.add(l, r, s * dj_dr);
            b.add(r, l, -s * dj_dl);
            b.add(r, r, -s * dj_dr);
        }
    }
    b.build()
}

/// Matrix of `f + dt * div J` with `z` frozen at its value for `f`. It is an
/// M-matrix with unit column sums, so solves with positive data stay positive.
pub(crate) fn frozen_step_matrix(
    f: &[f64],
    grid: &TensorGrid,
    c: &CellCoefficients,
    dt: f64,
) -> CsrMatrix {
    let h = grid.spacing();
    let n = grid.n_cells();
    let mut b = CsrBuilder::new(n, 1 + 2 * grid.dim());
    for cell in 0..n {
        b.add(cell, cell, 1.0);
    }
    let s = dt / h;
    for axis in 0..grid.dim() {
        for l in 0..n {
            let Some(r) = grid.upper_neighbor(l, axis) else {
                continue;
            };
            let fc = face(f, c, l, r, h);
            let out = s * fc.coeff * bernoulli(fc.z);
            let back = s * fc.coeff * bernoulli(-fc.z);
            b.add(l, l, out);
            b.add(l, r, -back);
            b.add(r, l, -out);
            b.add(r, r, back);
        }
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::equilibrium_state;
    use crate::grid::{face_gradient, Boundary};
    use crate::params::{self, DiffusionField, MobilityField, PotentialField};
    use approx::assert_relative_eq;

    fn heat() -> ParameterSet {
        ParameterSet::new(
            "heat",
            PotentialField::constant(0.0),
            DiffusionField::constant(1.0).unwrap(),
            MobilityField::unit(),
        )
    }

    #[test]
    fn bernoulli_branches_agree() {
        for &z in &[1e-2_f64, -1e-2, 0.3, -0.3] {
            let exact = z / z.exp_m1();
            assert_relative_eq!(bernoulli(z), exact, max_relative = 1e-14);
            let hs = 1e-6;
            let fd = (bernoulli(z + hs) - bernoulli(z - hs)) / (2.0 * hs);
            assert_relative_eq!(bernoulli_deriv(z), fd, max_relative = 1e-8);
        }
        assert_eq!(bernoulli(0.0), 1.0);
        assert_relative_eq!(bernoulli(-800.0), 800.0);
        assert_eq!(bernoulli(800.0), 0.0);
        assert_relative_eq!(bernoulli_deriv(-800.0), -1.0);
        for &z in &[0.0099_f64, 0.0101, -0.0099, -0.0101] {
            assert_relative_eq!(bernoulli(z) - bernoulli(-z), -z, max_relative = 1e-13);
        }
    }

    #[test]
    fn heat_flux() {
        let g = TensorGrid::new(1, 16, Boundary::Periodic).unwrap();
        let f = ScalarField::from_fn(g, |x| 1.0 + 0.5 * (std::f64::consts::PI * x[0]).sin());
        let j = assemble_flux(&f, &heat(), 0.0).unwrap();
        let grad = face_gradient(&f);
        for (a, b) in j.axis(0).iter().zip(grad.axis(0)) {
            assert_relative_eq!(*a, -b, epsilon = 1e-13);
        }
    }

    #[test]
    fn linear_drift_example() {
        let g = TensorGrid::new(1, 4, Boundary::NoFlux).unwrap();
        let p = ParameterSet::new(
            "lin",
            PotentialField::linear(0.0, &[1.0]),
            DiffusionField::constant(1.0).unwrap(),
            MobilityField::unit(),
        );
        let f = ScalarField::constant(g, 0.5);
        let j = assemble_flux(&f, &p, 0.0).unwrap();
        for cell in 0..3 {
            assert_relative_eq!(j.axis(0)[cell], -0.5, max_relative = 1e-14);
        }
        assert_eq!(j.axis(0)[3], 0.0);
        let gp = g.with_boundary(Boundary::Periodic);
        let j = assemble_flux(&ScalarField::constant(gp, 0.5), &p, 0.0).unwrap();
        for cell in 0..3 {
            assert_relative_eq!(j.axis(0)[cell], -0.5, max_relative = 1e-14);
        }
    }

    #[test]
    fn equilibrium_has_zero_flux() {
        for dim in 1..=3 {
            let n = [64, 16, 8][dim - 1];
            for bc in [Boundary::Periodic, Boundary::NoFlux] {
                let g = TensorGrid::new(dim, n, bc).unwrap();
                for d in [
                    params::resolve_diffusion("D:single", dim, n).unwrap(),
                    params::resolve_diffusion("D:multi", dim, n).unwrap(),
                ] {
                    let p = ParameterSet::new(
                        "eq",
                        params::preset_potential(dim).unwrap(),
                        d,
                        params::preset_mobility(dim).unwrap(),
                    );
                    let eq = equilibrium_state(&p, &g).unwrap();
                    let j = assemble_flux(&eq.density, &p, 0.37).unwrap();
                    assert!(j.max_abs() <= 1e-12, "dim {dim} {bc}: {}", j.max_abs());
                }
            }
        }
    }

    #[test]
    fn rejects_nonpositive_density() {
        let g = TensorGrid::new(1, 4, Boundary::Periodic).unwrap();
        let f = ScalarField::new(g, vec![0.5, 0.0, 0.5, 0.5]).unwrap();
        assert!(assemble_flux(&f, &heat(), 0.0).is_err());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let g = TensorGrid::new(2, 5, Boundary::Periodic).unwrap();
        let p = ParameterSet::new(
            "j",
            params::preset_potential(2).unwrap(),
            params::preset_diffusion_single_mode(2).unwrap(),
            params::preset_mobility(2).unwrap(),
        );
        let c = CellCoefficients::new(&p, &g, 0.1);
        let f: Vec<f64> = (0..g.n_cells()).map(|i| 0.2 + 0.05 * ((i * 7) % 11) as f64).collect();
        let dt = 0.3;
        let jac = step_jacobian(&f, &g, &c, dt);
        let resid = |v: &[f64]| -> Vec<f64> {
            let div = flux_values(v, &g, &c).divergence();
            v.iter().zip(div.values()).map(|(a, d)| a + dt * d).collect()
        };
        let eps = 1e-7;
        for col in 0..g.n_cells() {
            let mut fp = f.clone();
            let mut fm = f.clone();
            fp[col] += eps;
            fm[col] -= eps;
            let rp = resid(&fp);
            let rm = resid(&fm);
            for row in 0..g.n_cells() {
                let fd = (rp[row] - rm[row]) / (2.0 * eps);
                assert!((jac.get(row, col) - fd).abs() <= 1e-6 * (1.0 + fd.abs()));
            }
        }
    }
}
