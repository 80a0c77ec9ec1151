//! The archimedean height integral `∫_{PGL_n(ℝ)} H_∞(s, g)^{-1} dg`.
//!
//! In Cartan coordinates `a_i = log(x_i / x_{i+1})` the Haar density is
//! `Π_{i<j} (x_i/x_j - x_j/x_i) = e^{⟨2ρ,a⟩} Π_{i<j} (1 - e^{-2 L_ij})` with
//! `L_ij = a_i + … + a_{j-1}`, so the integral becomes
//! `∫_{a >= 0} e^{-⟨s - κ, a⟩} Π_{i<j} (1 - e^{-2 L_ij}) da`.
//! Values exclude the global Haar normalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::series::kappa;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Gauss–Legendre nodes per panel.
    pub nodes: usize,
    /// Width of the first panel at the origin.
    pub first_width: f64,
    /// Panels grow by this factor until the exponential decays by `e^{-4}` across one.
    pub growth: f64,
    /// Integration stops where the exponential weight drops below `e^{-decay}`.
    pub decay: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { nodes: 12, first_width: 0.25, growth: 2.0, decay: 40.0 }
    }
}

impl QuadratureSpec {
    /// Twice the resolution: double the nodes and halve the first panel.
    pub fn refined(&self) -> Self {
        QuadratureSpec { nodes: self.nodes * 2, first_width: self.first_width / 2.0, ..*self }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m);
    for i in 1..=m {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Quadrature rule on `[0, ∞)` for integrands dominated by `e^{-β a}`.
fn half_line_rule(beta: f64, q: &QuadratureSpec, gl: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let end = q.decay / beta;
    let max_width = 4.0 / beta;
    let mut out = Vec::new();
    let mut left = 0.0;
    let mut width = q.first_width.min(max_width);
    while left < end {
        let right = left + width;
        let (mid, half) = ((left + right) / 2.0, width / 2.0);
        out.extend(gl.iter().map(|&(x, w)| (mid + half * x, half * w)));
        left = right;
        width = (width * q.growth).min(max_width);
    }
    out
}

/// `∫_{a >= 0} e^{-⟨s - κ, a⟩} Π_{i<j} (1 - e^{-2 L_ij}) da` for PGL_n.
pub fn arch_integral(n: usize, s: &[f64], q: &QuadratureSpec) -> Result<f64> {
    if s.len() + 1 != n {
        return Err(Error::LengthMismatch { expected: n.saturating_sub(1), got: s.len() });
    }
    let beta: Vec<f64> = s.iter().zip(kappa(n)).map(|(s, k)| s - k).collect();
    if let Some(i) = beta.iter().position(|b| !(*b > 0.0)) {
        return Err(Error::Divergent(format!("s_{} = {} must exceed κ = {}", i + 1, s[i], kappa(n)[i])));
    }
    if q.nodes == 0 || !(q.first_width > 0.0) || !(q.growth >= 1.0) || !(q.decay > 0.0) {
        return Err(Error::Quadrature(format!("invalid quadrature spec {q:?}")));
    }
    let gl = gauss_legendre(q.nodes);
    let rules: Vec<Vec<(f64, f64)>> = beta.iter().map(|&b| half_line_rule(b, q, &gl)).collect();
    let r = n - 1;
    let mut idx = vec![0usize; r];
    let mut total = 0.0;
    let mut prefix = vec![0.0; n];
    loop {
        let mut weight = 1.0;
        let mut expo = 0.0;
        for k in 0..r {
            let (x, w) = rules[k][idx[k]];
            prefix[k + 1] = prefix[k] + x;
            weight *= w;
            expo += beta[k] * x;
        }
        let mut density = 1.0;
        for i in 0..n {
            for j in i + 1..n {
                density *= -(-2.0 * (prefix[j] - prefix[i])).exp_m1();
            }
        }
        total += weight * density * (-expo).exp();
        let mut k = 0;
        while k < r {
            idx[k] += 1;
            if idx[k] < rules[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == r {
            break;
        }
    }
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::Quadrature(format!("non-positive or non-finite value {total}")));
    }
    Ok(total)
}
