//! Config files and flag overrides.
//!
//! A config file is TOML with an `[experiment]` table whose keys match the
//! long flags, plus optional `[[members]]` tables for `compare`:
//!
//! ```toml
//! [experiment]
//! preset = "fig-fe-1d"
//! boundary = "periodic"
//! out = "results"
//!
//! [[members]]
//! preset = "fig-fe-1d-homo"
//! ```
//!
//! Precedence is preset, then `[experiment]`, then the member table, then
//! command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use fpflow::diagnostics::FitOptions;
use fpflow::Boundary;
use serde::Deserialize;

use crate::error::{CliError, Result};
use crate::presets;
use crate::spec::{parse_boundary, ExperimentSpec};

#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SpecOverrides {
    /// Experiment preset, family or `<preset>-<boundary>` (see `fpflow presets`)
    #[arg(long)]
    pub preset: Option<String>,
    /// Base name of the output files
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Cells per dimension
    #[arg(long)]
    pub n_cells: Option<usize>,
    /// Number of implicit time steps
    #[arg(long)]
    pub n_steps: Option<usize>,
    #[arg(long)]
    pub t_final: Option<f64>,
    /// periodic or noflux
    #[arg(long)]
    pub boundary: Option<String>,
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long)]
    pub diffusion: Option<String>,
    #[arg(long)]
    pub mobility: Option<String>,
    /// Initial condition preset
    #[arg(long)]
    pub ic: Option<String>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record every k-th step (the last step is always recorded)
    #[arg(long)]
    pub record_every: Option<usize>,
    /// Fraction of leading trace rows skipped by the decay fit
    #[arg(long)]
    pub fit_transient_frac: Option<f64>,
    /// Relative floor below which rows are dropped from the decay fit
    #[arg(long)]
    pub fit_floor: Option<f64>,
}

macro_rules! merge_fields {
    ($base:expr, $top:expr, $($f:ident),*) => {
        SpecOverrides { $($f: $top.$f.clone().or_else(|| $base.$f.clone())),* }
    };
}

impl SpecOverrides {
    /// Fields set in `top` win over those in `self`.
    pub fn merged(&self, top: &SpecOverrides) -> SpecOverrides {
        merge_fields!(
            self, top, preset, name, dim, n_cells, n_steps, t_final, boundary, potential,
            diffusion, mobility, ic, out, record_every, fit_transient_frac, fit_floor
        )
    }

    fn boundary(&self) -> Result<Option<Boundary>> {
        self.boundary.as_deref().map(parse_boundary).transpose()
    }

    fn apply(&self, spec: &mut ExperimentSpec) {
        if let Some(v) = self.dim {
            spec.dim = v;
        }
        if let Some(v) = self.n_cells {
            spec.n_cells = v;
        }
        if let Some(v) = self.n_steps {
            spec.n_steps = v;
        }
        if let Some(v) = self.t_final {
            spec.t_final = v;
        }
        if let Some(v) = &self.potential {
            spec.potential = v.clone();
        }
        if let Some(v) = &self.diffusion {
            spec.diffusion = v.clone();
        }
        if let Some(v) = &self.mobility {
            spec.mobility = v.clone();
        }
        if let Some(v) = &self.ic {
            spec.ic = v.clone();
        }
        if let Some(v) = &self.out {
            spec.output_dir = v.clone();
        }
        if let Some(v) = self.record_every {
            spec.record_every = v;
        }
        if let Some(v) = self.fit_transient_frac {
            spec.fit.transient_frac = v;
        }
        if let Some(v) = self.fit_floor {
            spec.fit.floor = v;
        }
    }

    /// Concrete specs described by these settings.
    pub fn resolve(&self) -> Result<Vec<ExperimentSpec>> {
        let out = self.out.clone().unwrap_or_else(|| PathBuf::from("."));
        let boundary = self.boundary()?;
        let mut specs = match &self.preset {
            Some(p) => {
                let mut specs = presets::expand(p, &out)?;
                if let Some(b) = boundary {
                    specs.retain(|s| s.boundary == b);
                    if specs.is_empty() {
                        return Err(CliError::Usage(format!(
                            "preset '{p}' has no {b} variant"
                        )));
                    }
                }
                specs
            }
            None => vec![default_spec(boundary.unwrap_or(Boundary::Periodic), &out)],
        };
        let many = specs.len() > 1;
        for spec in &mut specs {
            self.apply(spec);
            if let Some(name) = &self.name {
                spec.name = if many {
                    format!("{name}-{}", spec.name)
                } else {
                    name.clone()
                };
            }
            spec.validate()?;
        }
        Ok(specs)
    }
}

/// The 1D constant-diffusion experiment, used when no preset is named.
fn default_spec(boundary: Boundary, out: &Path) -> ExperimentSpec {
    ExperimentSpec {
        name: "custom".into(),
        dim: 1,
        n_cells: 200,
        n_steps: 50,
        t_final: 2.0,
        boundary,
        potential: "phi1d:k2".into(),
        diffusion: "D:homogeneous".into(),
        mobility: "pi:standard".into(),
        ic: "ic:gaussian".into(),
        output_dir: out.to_path_buf(),
        record_every: 1,
        fit: FitOptions::default(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub experiment: SpecOverrides,
    #[serde(default)]
    pub members: Vec<SpecOverrides>,
}

impl ConfigFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::parse(&text, path)
    }
}

/// Flags shared by the experiment subcommands.
#[derive(Debug, Clone, Default, Args)]
pub struct SpecArgs {
    /// TOML config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: SpecOverrides,
}

impl SpecArgs {
    /// Specs from the config file, its members (or `extra_members`) and the
    /// flags.
    pub fn resolve(&self, extra_members: &[String]) -> Result<Vec<ExperimentSpec>> {
        let file = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let members: Vec<SpecOverrides> = if !extra_members.is_empty() {
            extra_members
                .iter()
                .map(|p| SpecOverrides {
                    preset: Some(p.clone()),
                    ..Default::default()
                })
                .collect()
        } else {
            file.members.clone()
        };
        if members.is_empty() {
            return file.experiment.merged(&self.overrides).resolve();
        }
        let mut specs = Vec::new();
        for m in &members {
            let mut cli = self.overrides.clone();
            if m.preset.is_some() {
                // A member's own preset beats a shared one from the flags.
                cli.preset = None;
            }
            specs.extend(file.experiment.merged(m).merged(&cli).resolve()?);
        }
        Ok(specs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_and_preset() {
        let file = ConfigFile::parse(
            "[experiment]\npreset = \"fig-fe-1d-D1\"\nn-steps = 80\nt-final = 1.5\n",
            Path::new("x.toml"),
        )
        .unwrap();
        let cli = SpecOverrides {
            n_steps: Some(20),
            boundary: Some("noflux".into()),
            ..Default::default()
        };
        let specs = file.experiment.merged(&cli).resolve().unwrap();
        assert_eq!(specs.len(), 1);
        let s = &specs[0];
        assert_eq!(s.name, "fig-fe-1d-D1-noflux");
        assert_eq!((s.n_steps, s.t_final, s.n_cells), (20, 1.5, 200));
        assert_eq!(s.diffusion, "D:single");
    }

    #[test]
    fn defaults_without_preset() {
        let specs = SpecOverrides::default().resolve().unwrap();
        assert_eq!(specs.len(), 1);
        assert_eq!(specs[0].name, "custom");
        assert_eq!(specs[0].boundary, Boundary::Periodic);
    }

    #[test]
    fn name_override_keeps_names_distinct() {
        let o = SpecOverrides {
            preset: Some("fig-fe-1d-homo".into()),
            name: Some("mine".into()),
            ..Default::default()
        };
        let names: Vec<String> = o.resolve().unwrap().into_iter().map(|s| s.name).collect();
        assert_eq!(names, ["mine-fig-fe-1d-homo-periodic", "mine-fig-fe-1d-homo-noflux"]);
    }

    #[test]
    fn members_and_errors() {
        let file = ConfigFile::parse(
            "[experiment]\nboundary = \"periodic\"\n[[members]]\npreset = \"fig-fe-1d-homo\"\n[[members]]\npreset = \"fig-fe-1d-DM\"\n",
            Path::new("x.toml"),
        )
        .unwrap();
        assert_eq!(file.members.len(), 2);
        assert!(ConfigFile::parse("[experiment]\nbogus = 1\n", Path::new("x")).is_err());
        assert!(ConfigFile::parse("[experiment]\nn-cells = \"many\"\n", Path::new("x")).is_err());
        let bad = SpecOverrides {
            boundary: Some("dirichlet".into()),
            ..Default::default()
        };
        assert_eq!(bad.resolve().unwrap_err().exit_code(), 2);
    }
}
