//! CSV files and atomic writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use fpflow::diagnostics::DecayFit;
use fpflow::{EnergyTrace, EquilibriumState, TraceRow};

use crate::error::{CliError, Result};

pub const TRACE_HEADER: [&str; 7] = ["t", "mass", "F", "F_rel", "D_dis", "f_min", "f_max"];

/// Shortest round-trip representation in exponent form.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

/// Writes through a sibling temporary file so readers never see partial output.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        })
        .and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::io(path, e));
    }
    Ok(())
}

fn csv_bytes(build: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    build(&mut w).expect("writing csv to memory cannot fail");
    w.into_inner().expect("flushing an in-memory buffer cannot fail")
}

pub fn trace_csv(trace: &EnergyTrace) -> Vec<u8> {
    csv_bytes(|w| {
        w.write_record(TRACE_HEADER)?;
        for r in &trace.rows {
            w.write_record(
                [r.t, r.mass, r.free_energy, r.f_rel, r.dissipation, r.f_min, r.f_max].map(num),
            )?;
        }
        Ok(())
    })
}

/// Parses a file written by [`trace_csv`].
pub fn read_trace(path: &Path) -> Result<EnergyTrace> {
    let bad = |reason: String| CliError::Config {
        path: path.to_path_buf(),
        reason,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().ne(TRACE_HEADER) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut trace = EnergyTrace::default();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let v: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| bad(format!("'{s}': {e}"))))
            .collect::<Result<_>>()?;
        if v.len() != TRACE_HEADER.len() {
            return Err(bad(format!("row has {} fields", v.len())));
        }
        trace.rows.push(TraceRow {
            t: v[0],
            mass: v[1],
            free_energy: v[2],
            f_rel: v[3],
            dissipation: v[4],
            f_min: v[5],
            f_max: v[6],
        });
    }
    Ok(trace)
}

/// Cell-center coordinates and `f_eq`, then `# C1=<value> F_eq=<value>`.
pub fn equilibrium_csv(eq: &EquilibriumState) -> Vec<u8> {
    let grid = *eq.density.grid();
    let axes = ["x", "y", "z"];
    let mut bytes = csv_bytes(|w| {
        let mut header: Vec<&str> = axes[..grid.dim()].to_vec();
        header.push("f_eq");
        w.write_record(&header)?;
        for (cell, &v) in eq.density.values().iter().enumerate() {
            let c = grid.center(cell);
            let mut row: Vec<String> = c[..grid.dim()].iter().map(|&x| num(x)).collect();
            row.push(num(v));
            w.write_record(&row)?;
        }
        Ok(())
    });
    bytes.extend_from_slice(
        format!("# C1={} F_eq={}\n", num(eq.constant), num(eq.free_energy)).as_bytes(),
    );
    bytes
}

pub struct CompareRow<'a> {
    pub name: &'a str,
    pub fit: Option<&'a DecayFit>,
}

/// `name,rate,r_squared`; failed fits are written as `NaN`.
pub fn compare_csv(rows: &[CompareRow<'_>]) -> Vec<u8> {
    csv_bytes(|w| {
        w.write_record(["name", "rate", "r_squared"])?;
        for r in rows {
            let (rate, r2) = r.fit.map_or((f64::NAN, f64::NAN), |f| (f.rate, f.r_squared));
            w.write_record([r.name.to_string(), num(rate), num(r2)])?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64) -> TraceRow {
        TraceRow {
            t,
            mass: 1.0 - 1e-16,
            free_energy: 0.1 + t,
            f_rel: (-t).exp() * 1e-300,
            dissipation: std::f64::consts::PI,
            f_min: 1e-280,
            f_max: 3.5,
        }
    }

    #[test]
    fn trace_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let trace = EnergyTrace {
            rows: (0..5).map(|k| row(0.1 * k as f64)).collect(),
        };
        let path = dir.path().join("a_trace.csv");
        write_atomic(&path, &trace_csv(&trace)).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,mass,F,F_rel,D_dis,f_min,f_max\n"));
        assert!(text.ends_with('\n'));
        assert_eq!(read_trace(&path).unwrap(), trace);
        let leftovers = fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(leftovers, 1);
    }

    #[test]
    fn unwritable_target_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        fs::write(&file, b"x").unwrap();
        let err = write_atomic(&file.join("sub/out.csv"), b"1").unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn compare_rows() {
        let fit = DecayFit {
            rate: 2.5,
            intercept: 0.0,
            r_squared: 0.999,
            window: (0.0, 1.0),
            n_points: 10,
        };
        let text = String::from_utf8(compare_csv(&[
            CompareRow { name: "a", fit: Some(&fit) },
            CompareRow { name: "b", fit: None },
        ]))
        .unwrap();
        assert_eq!(text, "name,rate,r_squared\na,2.5e0,9.99e-1\nb,NaN,NaN\n");
    }
}
