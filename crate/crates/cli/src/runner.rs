//! Runs experiments while checking every snapshot against the CKP inequality
//! and the maximum-principle envelope.

use std::time::{Duration, Instant};

use fpflow::diagnostics::{
    ckp_check, envelope_violation, fit_decay_rate_with, max_principle_envelope, DecayFit,
    Quantity,
};
use fpflow::solver::run_with_observer;
use fpflow::{EnergyTrace, ScalarField};

use crate::error::{CliError, Result};
use crate::spec::{Experiment, ExperimentSpec};

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub spec: ExperimentSpec,
    pub trace: EnergyTrace,
    pub final_density: ScalarField,
    /// Decay fit of `F_rel`, or why it was unavailable.
    pub fit: std::result::Result<DecayFit, String>,
    pub ckp_failures: usize,
    /// Largest distance outside the maximum-principle envelope.
    pub envelope_excess: f64,
    pub elapsed: Duration,
}

impl RunRecord {
    pub fn fit(&self) -> Option<&DecayFit> {
        self.fit.as_ref().ok()
    }
}

/// Runs `exp` and collects per-snapshot checks.
pub fn execute_experiment(spec: &ExperimentSpec, exp: &Experiment) -> Result<RunRecord> {
    let start = Instant::now();
    let mut envelope = None;
    let mut ckp_failures = 0;
    let mut envelope_excess: f64 = 0.0;
    let mut check_error = None;
    let observed = run_with_observer(&exp.initial, &exp.params, &exp.config, |s| {
        if envelope.is_none() {
            match max_principle_envelope(s.density, s.equilibrium, &exp.params) {
                Ok(env) => envelope = Some(env),
                Err(e) => check_error = Some(e),
            }
        }
        if let Some((lo, hi)) = &envelope {
            envelope_excess = envelope_excess.max(envelope_violation(s.density, lo, hi));
        }
        if !ckp_check(s.density, s.equilibrium).holds {
            ckp_failures += 1;
        }
    });
    let solver = |source| CliError::Solver {
        name: spec.name.clone(),
        source,
    };
    let (final_density, trace) = observed.map_err(solver)?;
    if let Some(e) = check_error {
        return Err(solver(e));
    }
    let fit = fit_decay_rate_with(&trace, Quantity::FRel, &spec.fit).map_err(|e| e.to_string());
    Ok(RunRecord {
        spec: spec.clone(),
        trace,
        final_density,
        fit,
        ckp_failures,
        envelope_excess,
        elapsed: start.elapsed(),
    })
}

pub fn execute(spec: &ExperimentSpec) -> Result<RunRecord> {
    execute_experiment(spec, &spec.build()?)
}

/// Thread pool for sweeps, capped by `FPFLOW_THREADS` when set.
pub fn sweep_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("FPFLOW_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("FPFLOW_THREADS must be a positive integer, got '{v}'")))?;
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| CliError::Usage(format!("cannot start worker threads: {e}")))
}

/// Runs every spec on the sweep pool, keeping input order.
pub fn execute_all<T: Send>(
    specs: &[ExperimentSpec],
    each: impl Fn(&ExperimentSpec) -> Result<T> + Sync,
) -> Result<Vec<Result<T>>> {
    use rayon::prelude::*;
    let pool = sweep_pool()?;
    Ok(pool.install(|| specs.par_iter().map(&each).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use std::path::Path;

    #[test]
    fn short_preset_run_passes_checks() {
        let mut spec = presets::expand("fig-fe-1d-DM-noflux", Path::new(".")).unwrap().remove(0);
        spec.n_steps = 25;
        let rec = execute(&spec).unwrap();
        assert_eq!(rec.trace.len(), 26);
        assert_eq!(rec.ckp_failures, 0);
        assert!(rec.envelope_excess <= 5.0 * 2.0 / 200.0);
        assert!(rec.fit.is_ok());
        assert!(rec.trace.max_mass_error(1.0) <= 1e-11);
    }

    #[test]
    fn short_traces_report_missing_fit() {
        let mut spec = presets::expand("fig-fe-1d-homo-periodic", Path::new(".")).unwrap().remove(0);
        spec.n_steps = 5;
        let rec = execute(&spec).unwrap();
        assert!(rec.fit.unwrap_err().contains("at least"));
    }
}
