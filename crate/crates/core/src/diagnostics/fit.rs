//! Exponential decay rates by least squares on `log y` versus `t`.

use crate::error::{Error, Result};
use crate::solver::EnergyTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    FRel,
    Dissipation,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::FRel => "F_rel",
            Quantity::Dissipation => "D_dis",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Fraction of leading rows dropped as transient.
    pub transient_frac: f64,
    /// Rows below `floor * y(first row)` are dropped as round-off.
    pub floor: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            transient_frac: 0.1,
            floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub n_points: usize,
}

const MIN_ROWS: usize = 20;
const MIN_POINTS: usize = 5;

/// Fits `y ~ exp(intercept - rate * t)` on the windowed rows.
pub fn fit_series(t: &[f64], y: &[f64], opts: &FitOptions) -> Result<DecayFit> {
    if t.len() != y.len() {
        return Err(Error::Fit("time and value columns differ in length".into()));
    }
    if t.len() < MIN_ROWS {
        return Err(Error::Fit(format!(
            "need at least {MIN_ROWS} rows, got {}",
            t.len()
        )));
    }
    if !(0.0..1.0).contains(&opts.transient_frac) || !(opts.floor >= 0.0) {
        return Err(Error::Fit("invalid windowing options".into()));
    }
    let skip = (opts.transient_frac * t.len() as f64).ceil() as usize;
    let cutoff = opts.floor * y[0];
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .skip(skip)
        .filter(|(_, &v)| v > 0.0 && v >= cutoff)
        .map(|(&ti, &v)| (ti, v.ln()))
        .collect();
    if pts.len() < MIN_POINTS {
        return Err(Error::Fit(format!(
            "only {} rows survive windowing, need {MIN_POINTS}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let lm = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let stl: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - lm)).sum();
    let sll: f64 = pts.iter().map(|p| (p.1 - lm).powi(2)).sum();
    if stt == 0.0 {
        return Err(Error::Fit("window spans a single time".into()));
    }
    let slope = stl / stt;
    let intercept = lm - slope * tm;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if sll == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / sll).clamp(0.0, 1.0)
    };
    Ok(DecayFit {
        rate: -slope,
        intercept,
        r_squared,
        window: (pts[0].0, pts[pts.len() - 1].0),
        n_points: pts.len(),
    })
}

pub fn fit_decay_rate(trace: &EnergyTrace, quantity: Quantity) -> Result<DecayFit> {
    fit_decay_rate_with(trace, quantity, &FitOptions::default())
}

pub fn fit_decay_rate_with(
    trace: &EnergyTrace,
    quantity: Quantity,
    opts: &FitOptions,
) -> Result<DecayFit> {
    let t = trace.times();
    let y: Vec<f64> = trace
        .rows
        .iter()
        .map(|r| match quantity {
            Quantity::FRel => r.f_rel,
            Quantity::Dissipation => r.dissipation,
        })
        .collect();
    fit_series(&t, &y, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid(n: usize, t1: f64) -> Vec<f64> {
        (0..n).map(|i| t1 * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn exact_exponential() {
        let t = grid(100, 3.0);
        let y: Vec<f64> = t.iter().map(|t| 3.0 * (-2.0 * t).exp()).collect();
        let fit = fit_series(&t, &y, &FitOptions::default()).unwrap();
        assert!((fit.rate - 2.0).abs() <= 1e-9);
        assert!(fit.r_squared > 1.0 - 1e-12);
        assert_relative_eq!(fit.intercept, 3.0_f64.ln(), max_relative = 1e-9);
        assert_eq!(fit.n_points, 90);
    }

    #[test]
    fn round_off_floor_is_excluded() {
        let t = grid(200, 40.0);
        let y: Vec<f64> = t
            .iter()
            .enumerate()
            .map(|(i, t)| (-t).exp() + if i % 2 == 0 { 1e-15 } else { 3e-15 })
            .collect();
        let fit = fit_series(&t, &y, &FitOptions::default()).unwrap();
        assert!((fit.rate - 1.0).abs() <= 1e-3, "rate {}", fit.rate);
        assert!(fit.window.1 < 28.0);
    }

    #[test]
    fn too_few_rows() {
        let t = grid(19, 1.0);
        let y: Vec<f64> = t.iter().map(|t| (-t).exp()).collect();
        assert!(fit_series(&t, &y, &FitOptions::default()).is_err());
        let t = grid(30, 30.0);
        let y: Vec<f64> = t.iter().map(|t| (-10.0 * t).exp()).collect();
        assert!(matches!(fit_series(&t, &y, &FitOptions::default()), Err(Error::Fit(_))));
    }

    proptest! {
        #[test]
        fn scaling_does_not_change_rate(
            scale in 1e-6f64..1e6,
            rate in 0.1f64..5.0,
            noise in proptest::collection::vec(-1e-3f64..1e-3, 50),
        ) {
            let t = grid(50, 2.0);
            let y: Vec<f64> = t.iter().zip(&noise).map(|(t, e)| (-rate * t).exp() * (1.0 + e)).collect();
            let ys: Vec<f64> = y.iter().map(|v| v * scale).collect();
            let a = fit_series(&t, &y, &FitOptions::default()).unwrap();
            let b = fit_series(&t, &ys, &FitOptions::default()).unwrap();
            prop_assert!((a.rate - b.rate).abs() <= 1e-9 * a.rate.abs().max(1.0));
            prop_assert!((a.r_squared - b.r_squared).abs() <= 1e-9);
        }
    }
}
