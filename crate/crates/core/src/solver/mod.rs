//! Backward-Euler time stepping with a damped Newton solve per step.

pub mod flux;
pub mod linalg;

pub use flux::{assemble_flux, bernoulli, CellCoefficients};

use crate::diagnostics::{dissipation_with, free_energy, relative_free_energy};
use crate::equilibrium::{equilibrium_state, EquilibriumState};
use crate::error::{Error, Result};
use crate::grid::{integrate, ScalarField, TensorGrid};
use crate::params::ParameterSet;

/// Smallest damping factor tried before giving up.
const MIN_DAMPING: f64 = 1.0 / 1048576.0;
/// Below this damping a frozen-coefficient step replaces the Newton step.
const PICARD_DAMPING: f64 = 1.0 / 16.0;
/// Mass defect (relative) tolerated before an extra Newton pass is taken.
const MASS_DEFECT_TOL: f64 = 5e-14;
const MASS_EXTRA_ITERS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub t_final: f64,
    pub n_steps: usize,
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    pub positivity_floor: f64,
    pub record_every: usize,
}

impl SolverConfig {
    pub fn new(t_final: f64, n_steps: usize) -> Self {
        Self {
            t_final,
            n_steps,
            ..Self::default()
        }
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad("t_final must be positive");
        }
        if self.n_steps < 1 {
            return bad("n_steps must be at least 1");
        }
        if !(self.newton_tol > 0.0 && self.newton_tol < 1.0) {
            return bad("newton_tol must lie in (0, 1)");
        }
        if self.newton_max_iters < 1 {
            return bad("newton_max_iters must be at least 1");
        }
        if !(self.positivity_floor > 0.0) {
            return bad("positivity_floor must be positive");
        }
        if self.record_every < 1 {
            return bad("record_every must be at least 1");
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            t_final: 1.0,
            n_steps: 50,
            newton_tol: 1e-10,
            newton_max_iters: 50,
            positivity_floor: 1e-280,
            record_every: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub mass: f64,
    pub free_energy: f64,
    pub f_rel: f64,
    pub dissipation: f64,
    pub f_min: f64,
    pub f_max: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyTrace {
    pub rows: Vec<TraceRow>,
}

impl EnergyTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn max_mass_error(&self, reference: f64) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.mass - reference).abs())
            .fold(0.0, f64::max)
    }

    /// Largest increase `F(t_{k+1}) - F(t_k)` between consecutive rows.
    pub fn max_energy_increase(&self) -> f64 {
        self.rows
            .windows(2)
            .map(|w| w[1].free_energy - w[0].free_energy)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Newton iteration counts and the final residual of one implicit step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub iterations: usize,
    pub residual: f64,
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn residual(f: &[f64], f_old: &[f64], grid: &TensorGrid, c: &CellCoefficients, dt: f64) -> Vec<f64> {
    let div = flux::flux_values(f, grid, c).divergence();
    f.iter()
        .zip(f_old)
        .zip(div.values())
        .map(|((a, b), d)| a - b + dt * d)
        .collect()
}

fn newton(
    f_old: &[f64],
    grid: &TensorGrid,
    c: &CellCoefficients,
    dt: f64,
    config: &SolverConfig,
) -> Result<(Vec<f64>, StepStats)> {
    let scale = sup_norm(f_old);
    let old_mass: f64 = f_old.iter().sum();
    let mut f = f_old.to_vec();
    let mut extra = 0;
    let mut rel = f64::INFINITY;
    for it in 0..=config.newton_max_iters {
        let r = residual(&f, f_old, grid, c, dt);
        rel = sup_norm(&r) / scale;
        let defect = (f.iter().sum::<f64>() - old_mass).abs() / old_mass;
        if rel <= config.newton_tol {
            if defect <= MASS_DEFECT_TOL || extra >= MASS_EXTRA_ITERS {
                return Ok((f, StepStats { iterations: it, residual: rel }));
            }
            extra += 1;
        }
        if it == config.newton_max_iters {
            break;
        }
        // Solve for the relative update `delta / f`; the log f terms make
        // columns of nearly empty cells huge otherwise.
        let mut jac = flux::step_jacobian(&f, grid, c, dt);
        jac.scale_columns(&f);
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta: Vec<f64> = match linalg::solve(&jac, &rhs, grid.dim()) {
            Ok(eta) => eta.iter().zip(&f).map(|(e, v)| e * v).collect(),
            Err(_) => Vec::new(),
        };
        let positive = |lambda: f64| {
            !delta.is_empty() && f.iter().zip(&delta).all(|(a, d)| a + lambda * d > 0.0)
        };
        let mut lambda = 1.0;
        while !positive(lambda) && lambda >= PICARD_DAMPING {
            lambda *= 0.5;
        }
        if lambda >= PICARD_DAMPING {
            for (a, d) in f.iter_mut().zip(&delta) {
                *a += lambda * d;
            }
            continue;
        }
        // Linearizing log f in nearly empty cells overshoots; fall back to a
        // frozen-coefficient step, which keeps the iterate positive.
        let frozen = flux::frozen_step_matrix(&f, grid, c, dt);
        let mut picard = linalg::solve(&frozen, f_old, grid.dim())?;
        // The exact solution is bounded below by f_old / diag; iterative
        // solves can miss that in nearly empty cells.
        for (i, x) in picard.iter_mut().enumerate() {
            let bound = f_old[i] / frozen.get(i, i);
            if !(*x >= bound) {
                *x = bound;
            }
        }
        linalg::gauss_seidel(&frozen, f_old, &mut picard, 2);
        if picard.iter().all(|&v| v > 0.0) {
            f = picard;
            continue;
        }
        if delta.is_empty() {
            return Err(Error::LinearSolve("Newton and frozen-coefficient solves both failed".into()));
        }
        while !positive(lambda) {
            lambda *= 0.5;
            if lambda < MIN_DAMPING {
                return Err(Error::PositivityLoss);
            }
        }
        for (a, d) in f.iter_mut().zip(&delta) {
            *a += lambda * d;
        }
    }
    Err(Error::NonConvergence {
        iterations: config.newton_max_iters,
        residual: rel,
    })
}

/// One implicit step `f_new + dt div J(f_new, t_new) = f_old`.
pub fn backward_euler_step(
    f_old: &ScalarField,
    params: &ParameterSet,
    t_new: f64,
    dt: f64,
    config: &SolverConfig,
) -> Result<ScalarField> {
    Ok(backward_euler_step_with_stats(f_old, params, t_new, dt, config)?.0)
}

pub fn backward_euler_step_with_stats(
    f_old: &ScalarField,
    params: &ParameterSet,
    t_new: f64,
    dt: f64,
    config: &SolverConfig,
) -> Result<(ScalarField, StepStats)> {
    if !(dt > 0.0) {
        return Err(Error::InvalidConfig("time step must be positive".into()));
    }
    f_old.check_positive()?;
    let grid = f_old.grid();
    let c = CellCoefficients::new(params, grid, t_new);
    let (f, stats) = newton(f_old.values(), grid, &c, dt, config)?;
    Ok((ScalarField::new(*grid, f)?, stats))
}

/// Checks the initial density and applies the positivity floor.
pub fn prepare_initial(f0: &ScalarField, floor: f64) -> Result<ScalarField> {
    if f0.values().iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidInitialCondition("density is identically zero".into()));
    }
    if let Some(cell) = f0.values().iter().position(|&v| v < 0.0) {
        return Err(Error::InvalidInitialCondition(format!(
            "negative density in cell {cell}"
        )));
    }
    let f = f0.map(|v| v.max(floor));
    let mass = integrate(&f);
    if (mass - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidInitialCondition(format!(
            "initial mass {mass} is not 1"
        )));
    }
    Ok(f)
}

/// State handed to a [`run_with_observer`] callback on every recorded row.
pub struct Snapshot<'a> {
    pub step: usize,
    pub row: &'a TraceRow,
    pub density: &'a ScalarField,
    pub equilibrium: &'a EquilibriumState,
}

fn trace_row(
    f: &ScalarField,
    params: &ParameterSet,
    eq: &EquilibriumState,
    coeffs: &CellCoefficients,
    t: f64,
) -> Result<TraceRow> {
    Ok(TraceRow {
        t,
        mass: integrate(f),
        free_energy: free_energy(f, params)?,
        f_rel: relative_free_energy(f, eq, params)?,
        dissipation: dissipation_with(f, coeffs)?,
        f_min: f.min(),
        f_max: f.max(),
    })
}

/// Advances `config.n_steps` implicit steps from `f0`.
pub fn run(
    f0: &ScalarField,
    params: &ParameterSet,
    config: &SolverConfig,
) -> Result<(ScalarField, EnergyTrace)> {
    run_with_observer(f0, params, config, |_| {})
}

/// Like [`run`], calling `observe` on the initial state and on every recorded step.
pub fn run_with_observer(
    f0: &ScalarField,
    params: &ParameterSet,
    config: &SolverConfig,
    mut observe: impl FnMut(&Snapshot<'_>),
) -> Result<(ScalarField, EnergyTrace)> {
    config.validate()?;
    let grid = *f0.grid();
    let mut f = prepare_initial(f0, config.positivity_floor)?;
    let eq = equilibrium_state(params, &grid)?;
    let dt = config.dt();
    let mut coeffs = CellCoefficients::new(params, &grid, 0.0);
    let mut trace = EnergyTrace::default();

    let row = trace_row(&f, params, &eq, &coeffs, 0.0)?;
    observe(&Snapshot { step: 0, row: &row, density: &f, equilibrium: &eq });
    trace.rows.push(row);

    for step in 1..=config.n_steps {
        let t = step as f64 * dt;
        coeffs.set_time(params, &grid, t);
        let (next, _) = newton(f.values(), &grid, &coeffs, dt, config)
            .map_err(|e| Error::Step { step, source: Box::new(e) })?;
        f = ScalarField::new(grid, next)?;
        if step % config.record_every == 0 || step == config.n_steps {
            let row = trace_row(&f, params, &eq, &coeffs, t)?;
            observe(&Snapshot { step, row: &row, density: &f, equilibrium: &eq });
            trace.rows.push(row);
        }
    }
    Ok((f, trace))
}
