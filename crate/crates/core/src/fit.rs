//! Convergence-order estimation: least-squares slopes of `log value` against
//! `log t` over dyadic sweeps.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values below this are treated as round-off and excluded from fits.
pub const NOISE_FLOOR: f64 = 1e-12;

/// A measured value must exceed its reference error by this factor to be fitted.
pub const REFERENCE_MARGIN: f64 = 100.0;

/// One row of a sweep: the time step, the measured value, and the error
/// estimate of the reference it was measured against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub t: f64,
    pub value: f64,
    pub error_estimate: f64,
}

/// `log value ≈ slope · log t + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Time steps excluded by the noise-floor and reference-margin rules.
    pub discarded_points: Vec<f64>,
}

impl SlopeFit {
    /// Model prediction `exp(intercept) · t^slope`.
    pub fn predict(&self, t: f64) -> f64 {
        (self.intercept + self.slope * t.ln()).exp()
    }
}

/// Outcome of an order estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum OrderEstimate {
    Fitted(SlopeFit),
    /// Every value is at or below the noise floor: the compared maps agree.
    ExactMatch,
}

impl OrderEstimate {
    pub fn slope(&self) -> Option<f64> {
        match self {
            OrderEstimate::Fitted(f) => Some(f.slope),
            OrderEstimate::ExactMatch => None,
        }
    }

    pub fn fitted(&self) -> Option<&SlopeFit> {
        match self {
            OrderEstimate::Fitted(f) => Some(f),
            OrderEstimate::ExactMatch => None,
        }
    }
}

/// Fits a slope, discarding points with `value < NOISE_FLOOR` or
/// `value < REFERENCE_MARGIN · reference_error`. At least three points must remain.
pub fn loglog_fit(ts: &[f64], values: &[f64], reference_errors: &[f64]) -> Result<SlopeFit> {
    assert_eq!(ts.len(), values.len());
    assert_eq!(ts.len(), reference_errors.len());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut discarded_points = Vec::new();
    for ((&t, &v), &e) in ts.iter().zip(values).zip(reference_errors) {
        if v.is_finite() && t > 0.0 && v >= NOISE_FLOOR && v >= REFERENCE_MARGIN * e {
            xs.push(t.ln());
            ys.push(v.ln());
        } else {
            discarded_points.push(t);
        }
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientPoints { needed: 3, usable: xs.len() });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(SlopeFit { slope, intercept, r2, discarded_points })
}

/// Like [`loglog_fit`], but reports [`OrderEstimate::ExactMatch`] when every
/// value is at or below the noise floor.
pub fn estimate_order(points: &[SweepPoint]) -> Result<OrderEstimate> {
    if points.iter().all(|p| p.value.abs() <= NOISE_FLOOR) {
        return Ok(OrderEstimate::ExactMatch);
    }
    let ts: Vec<f64> = points.iter().map(|p| p.t).collect();
    let vs: Vec<f64> = points.iter().map(|p| p.value).collect();
    let es: Vec<f64> = points.iter().map(|p| p.error_estimate).collect();
    Ok(OrderEstimate::Fitted(loglog_fit(&ts, &vs, &es)?))
}

/// Dyadic grid `t₀·2^{−k}` for `k = 0..count`.
pub fn dyadic_grid(t0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| t0 * 0.5f64.powi(k as i32)).collect()
}

/// Writes sweep rows as CSV with columns `t,value,error_estimate`.
pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "value", "error_estimate"])?;
    for p in points {
        w.write_record([format!("{:.16e}", p.t), format!("{:.16e}", p.value), format!("{:.16e}", p.error_estimate)])?;
    }
    w.flush()?;
    Ok(())
}
