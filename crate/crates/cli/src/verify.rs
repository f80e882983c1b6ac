//! Property suites behind `fpflow verify`.

use std::path::Path;
use std::time::Instant;

use fpflow::diagnostics::{
    ckp_check, dissipation, envelope_violation, free_energy, max_principle_envelope,
    relative_free_energy, Regime,
};
use fpflow::solver::run_with_observer;
use fpflow::{
    equilibrium_state, integrate, ParameterSet, ScalarField, SolverConfig, TraceRow,
};

use crate::error::{CliError, Result};
use crate::presets;
use crate::studies::{energy_law_mismatch, identity_ladder, linear_params, oracle_errors};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Level {
    /// 1D suites
    Fast,
    /// Adds 2D/3D runs and refinement studies
    Full,
}

/// Deliberate defects for checking that the suite catches them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Fault {
    /// The solver sees the potential with its sign flipped, so the flux
    /// drifts uphill; diagnostics keep the true potential.
    FluxSign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

struct Observed {
    name: String,
    rows: Vec<TraceRow>,
    ckp_failures: usize,
    envelope_excess: f64,
    spacing: f64,
    last: ScalarField,
    newton_tol: f64,
}

fn solver_side(params: &ParameterSet, fault: Option<Fault>) -> ParameterSet {
    match fault {
        Some(Fault::FluxSign) => ParameterSet {
            potential: params.potential.scaled(-1.0),
            ..params.clone()
        },
        None => params.clone(),
    }
}

/// Runs with the solver-side parameters and evaluates every row with the true
/// ones.
fn observe(
    name: String,
    params: &ParameterSet,
    f0: &ScalarField,
    config: &SolverConfig,
    fault: Option<Fault>,
) -> fpflow::Result<Observed> {
    let grid = *f0.grid();
    let eq = equilibrium_state(params, &grid)?;
    let solver_params = solver_side(params, fault);
    let mut rows = Vec::new();
    let mut envelope = None;
    let mut ckp_failures = 0;
    let mut envelope_excess: f64 = 0.0;
    let mut failure = None;
    let (last, _) = run_with_observer(f0, &solver_params, config, |s| {
        let f = s.density;
        let row = (|| {
            if envelope.is_none() {
                envelope = Some(max_principle_envelope(f, &eq, params)?);
            }
            Ok::<_, fpflow::Error>(TraceRow {
                t: s.row.t,
                mass: integrate(f),
                free_energy: free_energy(f, params)?,
                f_rel: relative_free_energy(f, &eq, params)?,
                dissipation: dissipation(f, params, s.row.t)?,
                f_min: f.min(),
                f_max: f.max(),
            })
        })();
        match row {
            Ok(r) => rows.push(r),
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
        if let Some((lo, hi)) = &envelope {
            envelope_excess = envelope_excess.max(envelope_violation(f, lo, hi));
        }
        if !ckp_check(f, &eq).holds {
            ckp_failures += 1;
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(Observed {
        name,
        rows,
        ckp_failures,
        envelope_excess,
        spacing: grid.spacing(),
        last,
        newton_tol: config.newton_tol,
    })
}

fn preset_runs(
    names: &[&str],
    fault: Option<Fault>,
    from_equilibrium: bool,
) -> Result<Vec<Observed>> {
    let mut specs = Vec::new();
    for n in names {
        specs.extend(presets::expand(n, Path::new("."))?);
    }
    let runs = crate::runner::execute_all(&specs, |spec| {
        let exp = spec.build()?;
        let (name, f0) = if from_equilibrium {
            let eq = equilibrium_state(&exp.params, &exp.grid).map_err(|source| {
                CliError::Solver {
                    name: spec.name.clone(),
                    source,
                }
            })?;
            (format!("{} from f_eq", spec.name), eq.density)
        } else {
            (spec.name.clone(), exp.initial.clone())
        };
        let mut config = exp.config.clone();
        if from_equilibrium {
            config = SolverConfig {
                t_final: config.t_final * 50.0 / config.n_steps as f64,
                n_steps: 50,
                ..config
            };
        }
        observe(name.clone(), &exp.params, &f0, &config, fault)
            .map_err(|source| CliError::Solver { name, source })
    })?;
    runs.into_iter().collect()
}

fn worst(runs: &[Observed], metric: impl Fn(&Observed) -> f64) -> (f64, &str) {
    runs.iter()
        .map(|r| (metric(r), r.name.as_str()))
        .fold((f64::NEG_INFINITY, ""), |a, b| if b.0 > a.0 { b } else { a })
}

fn check(name: &'static str, passed: bool, detail: String) -> PropertyResult {
    PropertyResult { name, passed, detail }
}

fn run_properties(runs: &[Observed], eq_runs: &[Observed]) -> Vec<PropertyResult> {
    let all: Vec<&Observed> = runs.iter().chain(eq_runs).collect();
    let n_runs = all.len();
    let mass = |r: &Observed| r.rows.iter().map(|x| (x.mass - 1.0).abs()).fold(0.0, f64::max);
    let (m, at) = worst(runs, mass);
    let mut out = vec![check(
        "mass-conservation",
        m <= 1e-11,
        format!("max |mass - 1| {m:.2e} ({at}), limit 1e-11, {} runs", runs.len()),
    )];
    let min_f = all
        .iter()
        .flat_map(|r| r.rows.iter().map(|x| x.f_min))
        .fold(f64::INFINITY, f64::min);
    out.push(check(
        "positivity",
        min_f > 0.0,
        format!("smallest cell value {min_f:e} over {n_runs} runs"),
    ));
    let rise = |r: &Observed| {
        r.rows
            .windows(2)
            .map(|w| w[1].free_energy - w[0].free_energy)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut worst_rise = (f64::NEG_INFINITY, "");
    let mut decays = true;
    for r in &all {
        let d = rise(r);
        decays &= d <= 10.0 * r.newton_tol;
        if d > worst_rise.0 {
            worst_rise = (d, &r.name);
        }
    }
    out.push(check(
        "discrete-energy-decay",
        decays,
        format!(
            "largest F(t_k+1) - F(t_k) {:.2e} ({}), limit 10 newton_tol",
            worst_rise.0, worst_rise.1
        ),
    ));
    let ckp: usize = all.iter().map(|r| r.ckp_failures).sum();
    out.push(check("ckp", ckp == 0, format!("{ckp} failing snapshots over {n_runs} runs")));
    let (env, at) = worst(runs, |r| r.envelope_excess / (5.0 * r.spacing));
    out.push(check(
        "max-principle",
        env <= 1.0,
        format!("largest excursion {env:.3} x 5h ({at})"),
    ));
    let (fr, at_f) = worst(eq_runs, |r| r.rows.iter().map(|x| x.f_rel.abs()).fold(0.0, f64::max));
    let (dd, at_d) = worst(eq_runs, |r| r.rows.iter().map(|x| x.dissipation).fold(0.0, f64::max));
    out.push(check(
        "equilibrium-stationarity",
        fr <= 1e-10 && dd <= 1e-10,
        format!("max F_rel {fr:.2e} ({at_f}), max D_dis {dd:.2e} ({at_d}), limit 1e-10"),
    ));
    out
}

fn symmetry_error(f: &ScalarField) -> f64 {
    let grid = f.grid();
    let n = grid.cells_per_dim();
    let v = f.values();
    let mut err: f64 = 0.0;
    for cell in 0..grid.n_cells() {
        let idx = grid.multi_index(cell);
        for axis in 0..grid.dim() {
            let mut m = idx;
            m[axis] = n - 1 - idx[axis];
            let mirror = grid.flat_index(&m[..grid.dim()]);
            err = err.max((v[cell] - v[mirror]).abs());
        }
    }
    err
}

fn symmetry(runs: &[Observed]) -> PropertyResult {
    let periodic: Vec<&Observed> = runs.iter().filter(|r| r.name.ends_with("-periodic")).collect();
    let (e, at) = periodic
        .iter()
        .map(|r| (symmetry_error(&r.last), r.name.as_str()))
        .fold((0.0, ""), |a, b| if b.0 > a.0 { b } else { a });
    check(
        "symmetry",
        e <= 1e-10,
        format!("max |f(x) - f(-x)| {e:.2e} over {} periodic runs {at}", periodic.len()),
    )
}

fn oracle(fault: Option<Fault>) -> fpflow::Result<PropertyResult> {
    let solver = solver_side(&linear_params()?, fault);
    let e = oracle_errors(&solver, &[100, 200])?;
    let ratio = e[0] / e[1];
    Ok(check(
        "oracle-equivalence",
        e[0] <= 5e-3 && (ratio - 2.0).abs() <= 0.4,
        format!("L1 {:.3e} at dt 1e-3, {:.3e} at dt 5e-4, ratio {ratio:.3}", e[0], e[1]),
    ))
}

fn identity_refinement() -> fpflow::Result<PropertyResult> {
    let mut passed = true;
    let mut parts = Vec::new();
    for regime in [Regime::Homogeneous, Regime::InhomogeneousD, Regime::VariableMobility] {
        let r = identity_ladder(regime, &[100, 200, 400])?;
        passed &= r.windows(2).all(|w| w[1] < w[0]);
        parts.push(format!("{regime:?} {:.2e} {:.2e} {:.2e}", r[0], r[1], r[2]));
    }
    Ok(check("identity-refinement", passed, parts.join("; ")))
}

fn energy_law() -> fpflow::Result<PropertyResult> {
    let a = energy_law_mismatch(200, 400, 0.1)?;
    let b = energy_law_mismatch(400, 800, 0.1)?;
    Ok(check(
        "energy-law",
        a <= 0.1 && b <= 0.6 * a,
        format!("relative mismatch {a:.3e} at (200, 400), {b:.3e} at (400, 800)"),
    ))
}

fn core_err(name: &str) -> impl Fn(fpflow::Error) -> CliError + '_ {
    move |source| CliError::Solver {
        name: name.into(),
        source,
    }
}

/// Runs the suites for `level`, optionally with an injected defect.
pub fn run_suite(level: Level, fault: Option<Fault>) -> Result<Vec<PropertyResult>> {
    let mut names = vec!["fig-fe-1d"];
    if level == Level::Full {
        names.extend(["fig-fe-2d-C", "fig-fe-3d"]);
    }
    let runs = preset_runs(&names, fault, false)?;
    let eq_runs = preset_runs(&names, fault, true)?;
    let mut out = run_properties(&runs, &eq_runs);
    out.push(oracle(fault).map_err(core_err("oracle-equivalence"))?);
    out.push(symmetry(&runs));
    if level == Level::Full {
        out.push(identity_refinement().map_err(core_err("identity-refinement"))?);
        out.push(energy_law().map_err(core_err("energy-law"))?);
    }
    Ok(out)
}

/// Prints one line per property; fails with the names of failing ones.
pub fn cmd_verify(level: Level, fault: Option<Fault>) -> Result<()> {
    let start = Instant::now();
    let results = run_suite(level, fault)?;
    for r in &results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    println!("{} properties in {:.1} s", results.len(), start.elapsed().as_secs_f64());
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name.to_string())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verify { failed })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fpflow::{Boundary, TensorGrid};

    #[test]
    fn mirror_error_detects_asymmetry() {
        let g = TensorGrid::new(2, 4, Boundary::Periodic).unwrap();
        let even = ScalarField::from_fn(g, |x| 1.0 + x[0] * x[0] + x[1].abs());
        assert!(symmetry_error(&even) <= 1e-15);
        let odd = ScalarField::from_fn(g, |x| 2.0 + x[1]);
        assert!(symmetry_error(&odd) > 0.1);
    }
}
