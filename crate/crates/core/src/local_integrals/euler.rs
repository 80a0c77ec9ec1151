//! Riemann zeta values and regularized Euler products over finite places.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{DivisorChoice, PlaceSet};
use crate::primes::primes_up_to;

use super::series::{kappa, local_factor_closed};

const BERNOULLI: [f64; 6] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0];

/// ζ(σ) for real σ > 1 by Euler–Maclaurin summation.
pub fn zeta(sigma: f64) -> Result<f64> {
    if !(sigma > 1.0) {
        return Err(Error::Divergent(format!("ζ({sigma}) is outside σ > 1")));
    }
    let n = 20.0f64;
    let mut sum: f64 = (1..20).map(|k| (k as f64).powf(-sigma)).sum();
    sum += n.powf(1.0 - sigma) / (sigma - 1.0) + 0.5 * n.powf(-sigma);
    let mut rising = sigma; // σ(σ+1)…(σ+2j-2)
    let mut fact = 2.0; // (2j)!
    for (j, b) in BERNOULLI.iter().enumerate() {
        let j = j + 1;
        sum += b / fact * rising * n.powf(-sigma - 2.0 * j as f64 + 1.0);
        rising *= (sigma + 2.0 * j as f64 - 1.0) * (sigma + 2.0 * j as f64);
        fact *= ((2 * j + 1) * (2 * j + 2)) as f64;
    }
    Ok(sum)
}

/// Partial zeta function with the Euler factors at the finite places of S removed.
pub fn zeta_s(sigma: f64, s: &PlaceSet) -> Result<f64> {
    let z = zeta(sigma)?;
    Ok(s.finite_primes().iter().fold(z, |acc, &p| acc * (1.0 - (p as f64).powf(-sigma))))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EulerProduct {
    /// `(α, s_α - κ_α)` for every α outside D: the arguments of the factored-out ζ_S.
    pub zeta_arguments: Vec<(usize, f64)>,
    /// `Π_{p ∉ S, p <= p_max} f_p(s)`.
    pub value: f64,
    /// The full product lies in `[value, upper]`.
    pub upper: f64,
    pub p_max: u64,
}

/// Product of regularized local factors `f_p(s)` over primes outside S.
///
/// Every `f_p >= 1`, and `f_p - 1 <= (n-1) p^{-1} (1-1/p)^{-n} Σ_α p^{-(s_α-κ_α)}`,
/// which bounds the tail beyond `p_max`.
pub fn euler_product(n: usize, s: &[f64], d: &DivisorChoice, places: &PlaceSet, p_max: u64) -> Result<EulerProduct> {
    if p_max < 50 {
        return Err(Error::InvalidJob(format!("p_max = {p_max} must be at least 50")));
    }
    if s.len() + 1 != n {
        return Err(Error::LengthMismatch { expected: n - 1, got: s.len() });
    }
    d.validate(n - 1)?;
    let k = kappa(n);
    let sigma: Vec<(usize, f64)> = (0..n - 1).filter(|&i| !d.contains(i)).map(|i| (i, s[i] - k[i])).collect();
    if let Some((i, v)) = sigma.iter().find(|(_, v)| !(*v > 0.5)) {
        return Err(Error::Divergent(format!(
            "Euler product needs s_α - κ_α > 1/2, got {v} at α = {}",
            i + 1
        )));
    }
    let mut log_value = 0.0;
    if !sigma.is_empty() {
        for p in primes_up_to(p_max) {
            if !places.contains_prime(p) {
                log_value += local_factor_closed(n, p, s, d, true)?.regularized.ln();
            }
        }
    }
    let big = p_max as f64;
    let tail: f64 = (n - 1) as f64
        * (1.0 - 1.0 / big).powi(-(n as i32))
        * sigma.iter().map(|&(_, v)| big.powf(-v) / v).sum::<f64>();
    let value = log_value.exp();
    Ok(EulerProduct { zeta_arguments: sigma, value, upper: value * tail.exp(), p_max })
}
