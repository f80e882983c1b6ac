//! Experiment specifications and their resolution into solver inputs.

use std::path::PathBuf;

use fpflow::diagnostics::FitOptions;
use fpflow::params::{
    resolve_diffusion, resolve_initial_condition, resolve_mobility, resolve_potential,
};
use fpflow::{Boundary, ParameterSet, ScalarField, SolverConfig, TensorGrid};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub dim: usize,
    pub n_cells: usize,
    pub n_steps: usize,
    pub t_final: f64,
    pub boundary: Boundary,
    pub potential: String,
    pub diffusion: String,
    pub mobility: String,
    pub ic: String,
    pub output_dir: PathBuf,
    pub record_every: usize,
    pub fit: FitOptions,
}

/// Everything the solver needs for one run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub grid: TensorGrid,
    pub params: ParameterSet,
    pub initial: ScalarField,
    pub config: SolverConfig,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl ExperimentSpec {
    /// Checks ranges and that every preset name resolves.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(usage(format!("invalid experiment name '{}'", self.name)));
        }
        if !(1..=3).contains(&self.dim) {
            return Err(usage(format!("dim must be 1, 2 or 3, got {}", self.dim)));
        }
        if self.n_cells < 2 {
            return Err(usage(format!("n-cells must be at least 2, got {}", self.n_cells)));
        }
        if self.n_steps == 0 {
            return Err(usage("n-steps must be positive"));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(usage(format!("t-final must be positive, got {}", self.t_final)));
        }
        if self.record_every == 0 {
            return Err(usage("record-every must be positive"));
        }
        if !(0.0..1.0).contains(&self.fit.transient_frac) {
            return Err(usage("fit-transient-frac must lie in [0, 1)"));
        }
        if !(self.fit.floor >= 0.0) {
            return Err(usage("fit-floor must be non-negative"));
        }
        self.resolve_params()?;
        resolve_initial_condition(&self.ic, self.dim).map_err(|e| usage(e.to_string()))?;
        Ok(())
    }

    fn resolve_params(&self) -> Result<ParameterSet> {
        let map = |e: fpflow::Error| usage(e.to_string());
        Ok(ParameterSet::new(
            &self.name,
            resolve_potential(&self.potential, self.dim).map_err(map)?,
            resolve_diffusion(&self.diffusion, self.dim, self.n_cells).map_err(map)?,
            resolve_mobility(&self.mobility, self.dim).map_err(map)?,
        ))
    }

    pub fn grid(&self) -> Result<TensorGrid> {
        TensorGrid::new(self.dim, self.n_cells, self.boundary).map_err(|e| usage(e.to_string()))
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            record_every: self.record_every,
            ..SolverConfig::new(self.t_final, self.n_steps)
        }
    }

    pub fn build(&self) -> Result<Experiment> {
        self.validate()?;
        let grid = self.grid()?;
        let params = self.resolve_params()?;
        let initial = resolve_initial_condition(&self.ic, self.dim)
            .and_then(|ic| ic.build(&grid, &params))
            .map_err(|source| CliError::Solver {
                name: self.name.clone(),
                source,
            })?;
        Ok(Experiment {
            grid,
            params,
            initial,
            config: self.solver_config(),
        })
    }

    pub fn trace_file(&self) -> PathBuf {
        self.output_dir.join(format!("{}_trace.csv", self.name))
    }

    pub fn plot_file(&self) -> PathBuf {
        self.output_dir.join(format!("{}_fe.svg", self.name))
    }

    pub fn equilibrium_file(&self) -> PathBuf {
        self.output_dir.join(format!("{}_eq.csv", self.name))
    }
}

pub fn parse_boundary(s: &str) -> Result<Boundary> {
    s.parse()
        .map_err(|_| usage(format!("unknown boundary '{s}' (expected periodic or noflux)")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentSpec {
        ExperimentSpec {
            name: "s".into(),
            dim: 1,
            n_cells: 16,
            n_steps: 4,
            t_final: 0.1,
            boundary: Boundary::Periodic,
            potential: "phi1d:k2".into(),
            diffusion: "D:single".into(),
            mobility: "pi:standard".into(),
            ic: "ic:gaussian".into(),
            output_dir: PathBuf::from("."),
            record_every: 1,
            fit: FitOptions::default(),
        }
    }

    #[test]
    fn valid_sample_builds() {
        let e = sample().build().unwrap();
        assert_eq!(e.grid.n_cells(), 16);
        assert_eq!(e.config.n_steps, 4);
    }

    #[test]
    fn unknown_preset_names_the_preset() {
        let mut s = sample();
        s.diffusion = "D:bogus".into();
        let err = s.validate().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("D:bogus"));
    }

    #[test]
    fn range_checks() {
        let edits: [fn(&mut ExperimentSpec); 6] = [
            |s| s.n_steps = 0,
            |s| s.n_cells = 0,
            |s| s.dim = 4,
            |s| s.t_final = -1.0,
            |s| s.name = "a/b".into(),
            |s| s.dim = 2,
        ];
        for edit in edits {
            let mut s = sample();
            edit(&mut s);
            assert_eq!(s.validate().unwrap_err().exit_code(), 2);
        }
    }

    #[test]
    fn boundary_names() {
        assert_eq!(parse_boundary("noflux").unwrap(), Boundary::NoFlux);
        assert!(parse_boundary("dirichlet").is_err());
    }
}
