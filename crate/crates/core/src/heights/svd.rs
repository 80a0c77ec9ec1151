//! Singular values of small integer matrices.
//!
//! One-sided Jacobi on the columns, with the smallest value re-derived from
//! the exact determinant so that ratios σ_i/σ_{i+1} keep full relative
//! accuracy even for badly conditioned inputs.

use crate::error::{Error, Result};

use super::IntMatrix;

const MAX_SWEEPS: usize = 80;

/// Singular values in decreasing order.
pub fn singular_values(m: &IntMatrix) -> Result<Vec<f64>> {
    let det = m.det()?;
    if det == 0 {
        return Err(Error::Singular);
    }
    singular_values_with_det(m, det)
}

pub fn singular_values_with_det(m: &IntMatrix, det: i128) -> Result<Vec<f64>> {
    let n = m.n;
    if n == 2 {
        return Ok(two_by_two(&m.data, det).to_vec());
    }
    let mut cols: Vec<Vec<f64>> =
        (0..n).map(|j| (0..n).map(|i| m.data[i * n + j] as f64).collect()).collect();
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for j in 0..n {
            for k in j + 1..n {
                let alpha: f64 = cols[j].iter().map(|x| x * x).sum();
                let beta: f64 = cols[k].iter().map(|x| x * x).sum();
                let gamma: f64 = cols[j].iter().zip(&cols[k]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 4.0 * f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let (x, y) = (cols[j][i], cols[k][i]);
                    cols[j][i] = c * x - s * y;
                    cols[k][i] = s * x + c * y;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNoConvergence(MAX_SWEEPS));
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let others: f64 = sv[..n - 1].iter().product();
    sv[n - 1] = (det.unsigned_abs() as f64) / others;
    Ok(sv)
}

/// Closed form for 2×2 matrices `[[a, b], [c, d]]`.
pub fn two_by_two(e: &[i64], det: i128) -> [f64; 2] {
    let s1 = two_by_two_sigma1_sq(e);
    let s1 = s1.sqrt();
    [s1, det.unsigned_abs() as f64 / s1]
}

/// σ_1² of a 2×2 integer matrix, from exact integer invariants.
pub fn two_by_two_sigma1_sq(e: &[i64]) -> f64 {
    let (a, b, c, d) = (e[0] as i128, e[1] as i128, e[2] as i128, e[3] as i128);
    let frob = a * a + b * b + c * c + d * d;
    // F² - 4 det² factors as a product of two sums of squares.
    let disc = ((a - d) * (a - d) + (b + c) * (b + c)) * ((a + d) * (a + d) + (b - c) * (b - c));
    (frob as f64 + (disc as f64).sqrt()) / 2.0
}
