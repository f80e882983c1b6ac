//! Named free-energy decay experiments.
//!
//! The 3D run uses `N = 20` with `N_t = 10`, about `20^3 x 10` unknowns in
//! total; the other grids keep `N_t` at half or a quarter of `N`. 1D runs use
//! `T = 2` so the slowest variant reaches the round-off floor; 2D and 3D use
//! `T = 1`.

use std::path::Path;

use fpflow::diagnostics::FitOptions;
use fpflow::Boundary;

use crate::error::{CliError, Result};
use crate::spec::ExperimentSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub dim: usize,
    pub n_cells: usize,
    pub n_steps: usize,
    pub t_final: f64,
    pub potential: &'static str,
    pub diffusion: &'static str,
    pub mobility: &'static str,
    pub ic: &'static str,
    pub boundaries: &'static [Boundary],
}

const BOTH: &[Boundary] = &[Boundary::Periodic, Boundary::NoFlux];
const NOFLUX: &[Boundary] = &[Boundary::NoFlux];

const fn fe(
    name: &'static str,
    dim: usize,
    n_cells: usize,
    n_steps: usize,
    t_final: f64,
    potential: &'static str,
    diffusion: &'static str,
) -> Preset {
    Preset {
        name,
        dim,
        n_cells,
        n_steps,
        t_final,
        potential,
        diffusion,
        mobility: "pi:standard",
        ic: "ic:gaussian",
        boundaries: BOTH,
    }
}

pub const PRESETS: &[Preset] = &[
    fe("fig-fe-1d-homo", 1, 200, 50, 2.0, "phi1d:k2", "D:homogeneous"),
    fe("fig-fe-1d-D1", 1, 200, 50, 2.0, "phi1d:k2", "D:single"),
    fe("fig-fe-1d-DM", 1, 200, 50, 2.0, "phi1d:k2", "D:multi"),
    fe("fig-fe-2d-C-homo", 2, 40, 10, 1.0, "phi:sine", "D:homogeneous"),
    fe("fig-fe-2d-C-D1", 2, 40, 10, 1.0, "phi:sine", "D:single"),
    fe("fig-fe-2d-C-DM", 2, 40, 10, 1.0, "phi:sine", "D:multi"),
    fe("fig-fe-2d-homo", 2, 80, 20, 1.0, "phi:sine", "D:homogeneous"),
    fe("fig-fe-2d-D1", 2, 80, 20, 1.0, "phi:sine", "D:single"),
    fe("fig-fe-2d-DM", 2, 80, 20, 1.0, "phi:sine", "D:multi"),
    fe("fig-fe-3d-C-homo", 3, 10, 5, 1.0, "phi:sine", "D:homogeneous"),
    fe("fig-fe-3d-C-D1", 3, 10, 5, 1.0, "phi:sine", "D:single"),
    fe("fig-fe-3d-C-DM", 3, 10, 5, 1.0, "phi:sine", "D:multi-coarse"),
    fe("fig-fe-3d-homo", 3, 20, 10, 1.0, "phi:sine", "D:homogeneous"),
    fe("fig-fe-3d-D1", 3, 20, 10, 1.0, "phi:sine", "D:single"),
    fe("fig-fe-3d-DM", 3, 20, 10, 1.0, "phi:sine", "D:multi"),
    // Convex potential 1 + x^2 / 2 with constant D and unit mobility, for the
    // dissipation decay check.
    Preset {
        name: "fig-dis-1d-quadratic",
        dim: 1,
        n_cells: 200,
        n_steps: 300,
        t_final: 3.0,
        potential: "phi:quadratic",
        diffusion: "D:homogeneous",
        mobility: "pi:unit",
        ic: "ic:gaussian",
        boundaries: NOFLUX,
    },
];

/// Families group the three diffusion variants of one experiment.
pub const FAMILIES: &[&str] = &[
    "fig-fe-1d",
    "fig-fe-2d-C",
    "fig-fe-2d",
    "fig-fe-3d-C",
    "fig-fe-3d",
];

const VARIANTS: &[&str] = &["homo", "D1", "DM"];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

impl Preset {
    pub fn spec(&self, boundary: Boundary, output_dir: &Path) -> ExperimentSpec {
        ExperimentSpec {
            name: format!("{}-{}", self.name, boundary.name()),
            dim: self.dim,
            n_cells: self.n_cells,
            n_steps: self.n_steps,
            t_final: self.t_final,
            boundary,
            potential: self.potential.into(),
            diffusion: self.diffusion.into(),
            mobility: self.mobility.into(),
            ic: self.ic.into(),
            output_dir: output_dir.to_path_buf(),
            record_every: 1,
            fit: FitOptions::default(),
        }
    }
}

fn split_boundary(name: &str) -> (&str, Option<Boundary>) {
    for b in [Boundary::Periodic, Boundary::NoFlux] {
        if let Some(stem) = name.strip_suffix(&format!("-{}", b.name())) {
            return (stem, Some(b));
        }
    }
    (name, None)
}

/// Expands a preset, family or `<name>-<boundary>` into concrete specs.
pub fn expand(name: &str, output_dir: &Path) -> Result<Vec<ExperimentSpec>> {
    let (stem, bc) = split_boundary(name);
    let members: Vec<&Preset> = if let Some(p) = find(stem) {
        vec![p]
    } else if FAMILIES.contains(&stem) {
        VARIANTS
            .iter()
            .filter_map(|v| find(&format!("{stem}-{v}")))
            .collect()
    } else {
        return Err(CliError::Usage(format!(
            "unknown experiment preset '{name}' (see `fpflow presets`)"
        )));
    };
    let mut specs = Vec::new();
    for p in members {
        for &b in p.boundaries {
            if bc.is_none_or(|want| want == b) {
                specs.push(p.spec(b, output_dir));
            }
        }
    }
    if specs.is_empty() {
        return Err(CliError::Usage(format!(
            "preset '{stem}' has no {} variant",
            bc.map_or("", |b| b.name())
        )));
    }
    Ok(specs)
}

/// One line per preset, for `fpflow presets`.
pub fn listing() -> String {
    let mut out = String::new();
    for p in PRESETS {
        let bcs: Vec<&str> = p.boundaries.iter().map(|b| b.name()).collect();
        out.push_str(&format!(
            "{:<22} {}D N={:<3} N_t={:<3} T={} {} {} {} {} [{}]\n",
            p.name,
            p.dim,
            p.n_cells,
            p.n_steps,
            p.t_final,
            p.potential,
            p.diffusion,
            p.mobility,
            p.ic,
            bcs.join(",")
        ));
    }
    out.push_str(&format!("families: {}\n", FAMILIES.join(", ")));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for p in PRESETS {
            for &b in p.boundaries {
                p.spec(b, Path::new(".")).validate().unwrap();
            }
        }
    }

    #[test]
    fn expansion() {
        let out = Path::new("o");
        let s = expand("fig-fe-1d-D1", out).unwrap();
        let names: Vec<_> = s.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["fig-fe-1d-D1-periodic", "fig-fe-1d-D1-noflux"]);
        assert_eq!(s[0].n_cells, 200);
        assert_eq!(s[0].diffusion, "D:single");
        assert_eq!(expand("fig-fe-3d", out).unwrap().len(), 6);
        assert_eq!(expand("fig-fe-2d-C-periodic", out).unwrap().len(), 3);
        let one = expand("fig-fe-3d-DM-noflux", out).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!((one[0].n_cells, one[0].n_steps), (20, 10));
        assert_eq!(expand("fig-fe-3d-C-DM", out).unwrap()[0].diffusion, "D:multi-coarse");
        assert_eq!(expand("fig-dis-1d-quadratic", out).unwrap().len(), 1);
        assert!(expand("fig-dis-1d-quadratic-periodic", out).is_err());
        let err = expand("fig-fe-4d", out).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("fig-fe-4d"));
    }

    #[test]
    fn families_have_three_variants() {
        for f in FAMILIES {
            assert_eq!(expand(f, Path::new(".")).unwrap().len(), 6, "{f}");
        }
    }
}
