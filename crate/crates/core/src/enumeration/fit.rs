//! Log-log regression of counts against `c·B^a (log B)^{b-1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Least-squares slope of y against x.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Fit exponents to `(B, N)` pairs over the top half of the grid.
///
/// The log-power is fitted first from `log(N·B^{-a_pred})` against `log log B`;
/// the power is then the slope of `log N - (b̂-1)·log log B` against `log B`.
/// The constant uses the predicted exponents at the last grid point.
pub fn fit_exponents(points: &[(f64, f64)], predicted_a: f64, predicted_b: f64) -> Result<FitResult> {
    if points.len() < 8 {
        return Err(Error::DegenerateGrid(format!("{} grid points, need at least 8", points.len())));
    }
    let (first, last) = (points[0].0, points[points.len() - 1].0);
    if !(first > 1.0) || (last / first).log10() < 3.0 - 1e-9 {
        return Err(Error::DegenerateGrid(format!("grid {first}..{last} spans fewer than 3 decades above 1")));
    }
    let top = &points[points.len() / 2..];
    if top.iter().any(|&(_, n)| !(n > 0.0)) {
        return Err(Error::DegenerateGrid("zero counts in the top half of the grid".into()));
    }
    let lb: Vec<f64> = top.iter().map(|p| p.0.ln()).collect();
    let llb: Vec<f64> = lb.iter().map(|x| x.ln()).collect();
    let ln: Vec<f64> = top.iter().map(|p| p.1.ln()).collect();

    let reduced: Vec<f64> = ln.iter().zip(&lb).map(|(n, b)| n - predicted_a * b).collect();
    let b_hat = 1.0 + slope(&llb, &reduced);
    let corrected: Vec<f64> = ln.iter().zip(&llb).map(|(n, l)| n - (b_hat - 1.0) * l).collect();
    let a_hat = slope(&lb, &corrected);
    let (bl, nl) = points[points.len() - 1];
    let c_hat = nl / (bl.powf(predicted_a) * bl.ln().powf(predicted_b - 1.0));
    Ok(FitResult { a: a_hat, b: b_hat, c: c_hat })
}
