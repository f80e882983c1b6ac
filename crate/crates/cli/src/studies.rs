//! Refinement studies shared by `verify` and the acceptance suite.

use fpflow::diagnostics::{l1_distance, second_derivative_identity, Regime};
use fpflow::oracle::{build_linear_operator, reference_evolve_with_step};
use fpflow::params::{preset_gaussian_ic, preset_potential_1d, resolve_diffusion, resolve_mobility, DEFAULT_IC_VARIANCE};
use fpflow::solver::run_with_observer;
use fpflow::{run, Boundary, DiffusionField, MobilityField, ParameterSet, Result, SolverConfig, TensorGrid};

/// 1D parameters with the `k_p = 2` potential.
pub fn params_1d(diffusion: &str, mobility: &str, n_cells: usize) -> Result<ParameterSet> {
    Ok(ParameterSet::new(
        format!("{diffusion} {mobility}"),
        preset_potential_1d(2)?,
        resolve_diffusion(diffusion, 1, n_cells)?,
        resolve_mobility(mobility, 1)?,
    ))
}

/// Parameters of each energy-law regime in 1D.
pub fn regime_params(regime: Regime, n_cells: usize) -> Result<ParameterSet> {
    match regime {
        Regime::Homogeneous => params_1d("D:homogeneous", "pi:unit", n_cells),
        Regime::InhomogeneousD => params_1d("D:single", "pi:unit", n_cells),
        Regime::VariableMobility => params_1d("D:single", "pi:standard", n_cells),
    }
}

/// Relative residual of the second-derivative identity at `t = 0.05` on a
/// periodic 1D run to `t = 0.1` with `N_t = N^2 / 40`, for each `N`.
pub fn identity_ladder(regime: Regime, ladder: &[usize]) -> Result<Vec<f64>> {
    ladder
        .iter()
        .map(|&n| {
            let grid = TensorGrid::new(1, n, Boundary::Periodic)?;
            let params = regime_params(regime, n)?;
            let f0 = preset_gaussian_ic(1, DEFAULT_IC_VARIANCE)?.discretize(&grid)?;
            let n_steps = (n * n / 40).max(4);
            let cfg = SolverConfig::new(0.1, n_steps);
            let mid = n_steps / 2;
            let mut snap = None;
            let (_, trace) = run_with_observer(&f0, &params, &cfg, |s| {
                if s.step == mid {
                    snap = Some(s.density.clone());
                }
            })?;
            let rows = &trace.rows;
            let fe = [rows[mid - 1].free_energy, rows[mid].free_energy, rows[mid + 1].free_energy];
            let f_mid = snap.expect("mid step is recorded");
            let rep = second_derivative_identity(&f_mid, &params, rows[mid].t, regime, fe, cfg.dt())?;
            Ok(rep.relative_residual(rows[mid].dissipation))
        })
        .collect()
}

/// Parameters of the linear oracle comparison: `D = 1`, `pi = 1`, `k_p = 2`.
pub fn linear_params() -> Result<ParameterSet> {
    Ok(ParameterSet::new(
        "linear",
        preset_potential_1d(2)?,
        DiffusionField::constant(1.0)?,
        MobilityField::unit(),
    ))
}

/// L1 distance at `t = 0.1` between the solver with each step count and RK4
/// with step `1e-6`, on the periodic 32-cell grid. `solver_params` lets a
/// caller perturb the solver side only.
pub fn oracle_errors(solver_params: &ParameterSet, step_counts: &[usize]) -> Result<Vec<f64>> {
    let grid = TensorGrid::new(1, 32, Boundary::Periodic)?;
    let f0 = preset_gaussian_ic(1, DEFAULT_IC_VARIANCE)?.discretize(&grid)?;
    let op = build_linear_operator(&linear_params()?, &grid)?;
    let reference = reference_evolve_with_step(&op, &f0, 0.1, 1e-6)?;
    step_counts
        .iter()
        .map(|&k| {
            let (f, _) = run(&f0, solver_params, &SolverConfig::new(0.1, k))?;
            Ok(l1_distance(&f, &reference))
        })
        .collect()
}

/// Largest relative gap between `(F_{k+1} - F_k) / dt` and `-D_dis(t_{k+1})`
/// for the periodic 1D linear preset run to `t_final`.
pub fn energy_law_mismatch(n_cells: usize, n_steps: usize, t_final: f64) -> Result<f64> {
    let grid = TensorGrid::new(1, n_cells, Boundary::Periodic)?;
    let params = linear_params()?;
    let f0 = preset_gaussian_ic(1, DEFAULT_IC_VARIANCE)?.discretize(&grid)?;
    let cfg = SolverConfig::new(t_final, n_steps);
    let dt = cfg.dt();
    let (_, trace) = run(&f0, &params, &cfg)?;
    Ok(trace
        .rows
        .windows(2)
        .map(|w| {
            let slope = (w[1].free_energy - w[0].free_energy) / dt;
            (slope + w[1].dissipation).abs() / w[1].dissipation
        })
        .fold(0.0, f64::max))
}
