//! Second time derivative of the free energy: a finite difference of three
//! consecutive values against the quadrature of the energy-law right-hand side.
//!
//! Terms, with `u` the cell velocity, `G[j][k] = d_j u_k` and `l = log f`:
//!
//! ```text
//!  1  2 (Hess phi u.u) f              8  pi_t |u|^2 f
//!  2  2 D |G|^2 f                     9  |u|^2 (u.grad pi) f
//!  3  -(l - 1) (grad|u|^2 . grad D) f 10 -2 (l - 1) / pi |u|^2 (grad pi . grad D) f
//!  4  -2 (1 + l) (u.grad D) div u f   11  2 (l - 1) / pi (u.grad pi)(u.grad D) f
//!  5  2 pi / D |u|^2 l (u.grad D) f   12  D / pi (grad|u|^2 . grad pi) f
//!  6  2 / D l^2 (u.grad D)^2 f        13 -2 D / pi sum u_j G[j][k] d_k pi f
//!  7  2 / D l (u.grad D)(u.grad phi) f
//! ```
//!
//! The homogeneous law keeps terms 1-2, the inhomogeneous-diffusion law 1-7
//! and the variable-mobility law all thirteen.

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::params::ParameterSet;
use crate::solver::CellCoefficients;

use super::velocity_with;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Homogeneous,
    InhomogeneousD,
    VariableMobility,
}

impl Regime {
    pub fn term_count(self) -> usize {
        match self {
            Regime::Homogeneous => 2,
            Regime::InhomogeneousD => 7,
            Regime::VariableMobility => 13,
        }
    }

    /// Narrowest regime whose hypotheses `params` satisfy.
    pub fn for_params(params: &ParameterSet) -> Self {
        if !params.mobility.is_unit() {
            Regime::VariableMobility
        } else if params.diffusion.is_constant() {
            Regime::Homogeneous
        } else {
            Regime::InhomogeneousD
        }
    }

    fn check(self, params: &ParameterSet) -> Result<()> {
        let unit = params.mobility.is_unit();
        match self {
            Regime::Homogeneous if !(unit && params.diffusion.is_constant()) => Err(
                Error::RegimeMismatch("homogeneous law needs constant D and unit mobility".into()),
            ),
            Regime::InhomogeneousD if !unit => Err(Error::RegimeMismatch(
                "inhomogeneous-diffusion law needs unit mobility".into(),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub regime: Regime,
    pub terms: Vec<f64>,
}

impl IdentityReport {
    /// `|lhs - rhs| / max(|lhs|, |rhs|, dissipation)`.
    pub fn relative_residual(&self, dissipation: f64) -> f64 {
        let scale = self.lhs.abs().max(self.rhs.abs()).max(dissipation);
        if scale == 0.0 {
            0.0
        } else {
            self.residual / scale
        }
    }
}

/// Per-term quadratures of the right-hand side at `(f, t)`; always 13 entries.
pub fn identity_terms(f: &ScalarField, params: &ParameterSet, t: f64) -> Result<Vec<f64>> {
    let grid = *f.grid();
    let dim = grid.dim();
    let h = grid.spacing();
    let coeffs = CellCoefficients::new(params, &grid, t);
    let u = velocity_with(f, &coeffs)?;
    let n = grid.n_cells();

    let uc: Vec<[f64; 3]> = (0..n)
        .map(|c| {
            let mut v = [0.0; 3];
            for (a, va) in v.iter_mut().enumerate().take(dim) {
                *va = 0.5 * (u.lower(c, a) + u.upper(c, a));
            }
            v
        })
        .collect();

    let mut terms = [0.0; 13];
    for cell in 0..n {
        let x = grid.center(cell);
        let x = &x[..dim];
        let fv = f.values()[cell];
        let l = fv.ln();
        let d = coeffs.diff[cell];
        let p = coeffs.mob[cell];
        let gd = params.diffusion.gradient(x);
        let gphi = params.potential.gradient(x);
        let hphi = params.potential.hessian(x);
        let gp = params.mobility.gradient(x, t);
        let pt = params.mobility.time_derivative(x, t);
        let w = uc[cell];

        // g[j][k] = d_j u_k
        let mut g = [[0.0; 3]; 3];
        for j in 0..dim {
            for k in 0..dim {
                g[j][k] = if j == k {
                    (u.upper(cell, j) - u.lower(cell, j)) / h
                } else {
                    let up = grid.upper_neighbor(cell, j);
                    let dn = grid.lower_neighbor(cell, j);
                    let span = [up, dn].iter().filter(|v| v.is_some()).count() as f64 * h;
                    let hi = up.map_or(w[k], |c| uc[c][k]);
                    let lo = dn.map_or(w[k], |c| uc[c][k]);
                    (hi - lo) / span
                };
            }
        }
        let dot = |a: &[f64; 3], b: &[f64; 3]| (0..dim).map(|i| a[i] * b[i]).sum::<f64>();
        let u2 = dot(&w, &w);
        let mut grad_u2 = [0.0; 3];
        for (j, gj) in grad_u2.iter_mut().enumerate().take(dim) {
            *gj = 2.0 * (0..dim).map(|k| w[k] * g[j][k]).sum::<f64>();
        }
        let hess_uu: f64 = (0..dim)
            .flat_map(|j| (0..dim).map(move |k| (j, k)))
            .map(|(j, k)| hphi[j][k] * w[j] * w[k])
            .sum();
        let frob: f64 = (0..dim).flat_map(|j| g[j][..dim].iter()).map(|v| v * v).sum();
        let div_u: f64 = (0..dim).map(|j| g[j][j]).sum();
        let u_gd = dot(&w, &gd);
        let u_gp = dot(&w, &gp);
        let u_gphi = dot(&w, &gphi);
        let adv: f64 = (0..dim)
            .flat_map(|j| (0..dim).map(move |k| (j, k)))
            .map(|(j, k)| w[j] * g[j][k] * gp[k])
            .sum();

        let vals = [
            2.0 * hess_uu,
            2.0 * d * frob,
            -(l - 1.0) * dot(&grad_u2, &gd),
            -2.0 * (1.0 + l) * u_gd * div_u,
            2.0 * p / d * u2 * l * u_gd,
            2.0 / d * l * l * u_gd * u_gd,
            2.0 / d * l * u_gd * u_gphi,
            pt * u2,
            u2 * u_gp,
            -2.0 * (l - 1.0) / p * u2 * dot(&gp, &gd),
            2.0 * (l - 1.0) / p * u_gp * u_gd,
            d / p * dot(&grad_u2, &gp),
            -2.0 * d / p * adv,
        ];
        for (acc, v) in terms.iter_mut().zip(vals) {
            *acc += v * fv;
        }
    }
    let vol = grid.cell_volume();
    Ok(terms.iter().map(|v| v * vol).collect())
}

/// Compares `(F(t+dt) - 2F(t) + F(t-dt)) / dt^2` with the right-hand side of
/// the energy law selected by `regime`, evaluated at `(f, t)`.
pub fn second_derivative_identity(
    f: &ScalarField,
    params: &ParameterSet,
    t: f64,
    regime: Regime,
    free_energies: [f64; 3],
    dt: f64,
) -> Result<IdentityReport> {
    regime.check(params)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter("finite-difference step must be positive".into()));
    }
    let [prev, cur, next] = free_energies;
    let lhs = (next - 2.0 * cur + prev) / (dt * dt);
    let terms = identity_terms(f, params, t)?;
    let rhs = terms[..regime.term_count()].iter().sum();
    Ok(IdentityReport {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        regime,
        terms,
    })
}
