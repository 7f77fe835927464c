//! Least-squares slopes on log₁₀ data.

use serde::{Deserialize, Serialize};

/// Below this coefficient of determination no slope verdict is given.
pub const MIN_R2: f64 = 0.9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
    /// The slope when `r2 ≥ MIN_R2`, otherwise `None`.
    pub verdict: Option<f64>,
}

/// Ordinary least squares of `log₁₀ y` against `log₁₀ x`. Points with a
/// non-positive coordinate are dropped; fewer than two remaining points give
/// `None`.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && a.is_finite() && b.is_finite())
        .map(|(a, b)| (a.log10(), b.log10()))
        .collect();
    let n = pts.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(SlopeFit {
        slope,
        intercept,
        r2,
        points: n,
        verdict: (r2 >= MIN_R2).then_some(slope),
    })
}
