//! The `run`, `compare` and `equilibrium` subcommands.

use std::fs;
use std::path::Path;

use fpflow::equilibrium_state;

use crate::error::{CliError, Result};
use crate::output::{
    compare_csv, equilibrium_csv, trace_csv, write_atomic, CompareRow,
};
use crate::runner::{execute, execute_all, RunRecord};
use crate::spec::ExperimentSpec;
use crate::svg::{semilog_plot, Series};

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn fit_summary(rec: &RunRecord) -> String {
    match &rec.fit {
        Ok(f) => format!(
            "F_rel rate {:.6e} r2 {:.6} window [{}, {}] ({} points)",
            f.rate, f.r_squared, f.window.0, f.window.1, f.n_points
        ),
        Err(reason) => format!("F_rel fit unavailable: {reason}"),
    }
}

fn write_run(rec: &RunRecord) -> Result<()> {
    let spec = &rec.spec;
    let t = rec.trace.times();
    let y: Vec<f64> = rec.trace.rows.iter().map(|r| r.f_rel).collect();
    let svg = semilog_plot(
        &format!("{}: relative free energy", spec.name),
        "t",
        "F - F_eq",
        &[Series { label: &spec.name, x: &t, y: &y }],
    );
    write_atomic(&spec.trace_file(), &trace_csv(&rec.trace))?;
    write_atomic(&spec.plot_file(), svg.as_bytes())
}

fn run_and_write(spec: &ExperimentSpec) -> Result<RunRecord> {
    let rec = execute(spec)?;
    write_run(&rec)?;
    Ok(rec)
}

fn report(rec: &RunRecord) {
    println!(
        "{}: {}; max mass error {:.2e}; {:.2} s",
        rec.spec.name,
        fit_summary(rec),
        rec.trace.max_mass_error(1.0),
        rec.elapsed.as_secs_f64()
    );
    println!(
        "  wrote {} and {}",
        rec.spec.trace_file().display(),
        rec.spec.plot_file().display()
    );
}

/// Runs every spec (concurrently), writing a trace and plot for each.
pub fn cmd_run(specs: &[ExperimentSpec]) -> Result<Vec<RunRecord>> {
    for s in specs {
        s.validate()?;
        prepare_dir(&s.output_dir)?;
    }
    let results = execute_all(specs, run_and_write)?;
    let mut records = Vec::new();
    let mut first_err = None;
    for r in results {
        match r {
            Ok(rec) => {
                report(&rec);
                records.push(rec);
            }
            Err(e) => {
                eprintln!("error: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(records),
    }
}

/// Runs at least two specs on the same grid and writes `compare.csv` and
/// `compare.svg` next to the member traces.
pub fn cmd_compare(specs: &[ExperimentSpec]) -> Result<Vec<RunRecord>> {
    if specs.len() < 2 {
        return Err(CliError::Usage(format!(
            "compare needs at least two experiments, got {}",
            specs.len()
        )));
    }
    let first = &specs[0];
    for s in &specs[1..] {
        if s.dim != first.dim || s.n_cells != first.n_cells {
            return Err(CliError::Usage(format!(
                "compare members must share dim and grid: {} is {}D N={}, {} is {}D N={}",
                first.name, first.dim, first.n_cells, s.name, s.dim, s.n_cells
            )));
        }
    }
    let mut names: Vec<&str> = specs.iter().map(|s| s.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::Usage("compare members must have distinct names".into()));
    }
    let records = cmd_run(specs)?;
    let rows: Vec<CompareRow<'_>> = records
        .iter()
        .map(|r| CompareRow {
            name: &r.spec.name,
            fit: r.fit(),
        })
        .collect();
    let dir = &first.output_dir;
    let csv_path = dir.join("compare.csv");
    write_atomic(&csv_path, &compare_csv(&rows))?;
    let columns: Vec<(Vec<f64>, Vec<f64>)> = records
        .iter()
        .map(|r| (r.trace.times(), r.trace.rows.iter().map(|row| row.f_rel).collect()))
        .collect();
    let series: Vec<Series<'_>> = records
        .iter()
        .zip(&columns)
        .map(|(r, (x, y))| Series { label: &r.spec.name, x, y })
        .collect();
    let svg_path = dir.join("compare.svg");
    let svg = semilog_plot(
        &format!("{}D relative free energy", first.dim),
        "t",
        "F - F_eq",
        &series,
    );
    write_atomic(&svg_path, svg.as_bytes())?;
    let mut ranked: Vec<&RunRecord> = records.iter().filter(|r| r.fit().is_some()).collect();
    ranked.sort_by(|a, b| b.fit().unwrap().rate.total_cmp(&a.fit().unwrap().rate));
    let order: Vec<&str> = ranked.iter().map(|r| r.spec.name.as_str()).collect();
    println!("fastest to slowest: {}", order.join(" > "));
    println!("wrote {} and {}", csv_path.display(), svg_path.display());
    Ok(records)
}

/// Writes `<name>_eq.csv` for every spec and reports the defining residual.
pub fn cmd_equilibrium(specs: &[ExperimentSpec]) -> Result<()> {
    for spec in specs {
        spec.validate()?;
        prepare_dir(&spec.output_dir)?;
        let exp = spec.build()?;
        let eq = equilibrium_state(&exp.params, &exp.grid).map_err(|source| CliError::Solver {
            name: spec.name.clone(),
            source,
        })?;
        let path = spec.equilibrium_file();
        write_atomic(&path, &equilibrium_csv(&eq))?;
        let peak = eq.density.argmax();
        let c = exp.grid.center(peak);
        println!(
            "{}: C1 {:e} F_eq {:e} mass {:e} residual max|D log f_eq + phi - C1| {:.3e}; argmax cell {} at {:?}",
            spec.name,
            eq.constant,
            eq.free_energy,
            eq.mass(),
            eq.residual(&exp.params),
            peak,
            &c[..spec.dim]
        );
        println!("  wrote {}", path.display());
    }
    Ok(())
}
