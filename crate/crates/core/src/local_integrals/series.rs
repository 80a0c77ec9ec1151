//! Local height integrals at finite places.
//!
//! `J_p(s) = Σ_a p^{-⟨s,a⟩} vol(K t(a) K)`, the sum running over `a ∈ ℕ^{n-1}`
//! with `a_α = 0` on the boundary components in D when the place lies outside
//! S. Writing `x_α = p^{-(s_α - κ_α)}` and grouping by support `T`,
//! `J_p = Σ_T R_T Π_{α∈T} x_α/(1 - x_α)`, and the regularized factor
//! `f_p = J_p Π (1 - x_α)` is a weighted average of the ratios `R_T >= 1`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::DivisorChoice;
use crate::primes::is_prime;

use super::cells::{support_ratio, two_rho_pairing};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalFactor {
    pub p: u64,
    pub s: Vec<f64>,
    /// Largest `Σ a` included in the truncated sum (0 for the closed form).
    pub cutoff: u32,
    pub value: f64,
    /// Upper bound for `J_p - value`; the true value lies in `[value, value + tail]`.
    pub tail: f64,
    pub regularized: f64,
    pub regularized_tail: f64,
}

/// `κ_α` for PGL_n.
pub fn kappa(n: usize) -> Vec<f64> {
    (1..n).map(|i| (i * (n - i)) as f64).collect()
}

/// Indices α that are summed over (`α ∉ 𝒜_D` when `restricted`, all otherwise).
fn free_indices(n: usize, d: &DivisorChoice, restricted: bool) -> Vec<usize> {
    (0..n - 1).filter(|&i| !restricted || !d.contains(i)).collect()
}

fn check_args(n: usize, p: u64, s: &[f64], d: &DivisorChoice) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidJob("n must be at least 2".into()));
    }
    if s.len() + 1 != n {
        return Err(Error::LengthMismatch { expected: n - 1, got: s.len() });
    }
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    d.validate(n - 1)
}

fn shifted(n: usize, s: &[f64], free: &[usize]) -> Result<Vec<f64>> {
    let k = kappa(n);
    let x: Vec<f64> = free.iter().map(|&i| s[i] - k[i]).collect();
    if let Some(i) = free.iter().zip(&x).find(|(_, &v)| !(v > 0.0)).map(|(i, _)| *i) {
        return Err(Error::Divergent(format!("s_{} = {} must exceed κ = {}", i + 1, s[i], k[i])));
    }
    Ok(x)
}

/// `Π_{α free} (1 - p^{-(s_α - κ_α)})`.
pub fn regularizer(n: usize, p: u64, s: &[f64], d: &DivisorChoice, restricted: bool) -> f64 {
    let k = kappa(n);
    free_indices(n, d, restricted)
        .iter()
        .map(|&i| 1.0 - (p as f64).powf(-(s[i] - k[i])))
        .product()
}

/// Closed-form `J_p(s)` by summing geometric series over supports.
///
/// `restricted` applies the integrality condition `a_α = 0` for α in D.
pub fn local_factor_closed(n: usize, p: u64, s: &[f64], d: &DivisorChoice, restricted: bool) -> Result<LocalFactor> {
    check_args(n, p, s, d)?;
    let free = free_indices(n, d, restricted);
    let sigma = shifted(n, s, &free)?;
    let g: Vec<f64> = sigma
        .iter()
        .map(|&v| {
            let x = (p as f64).powf(-v);
            x / -(-(v * (p as f64).ln())).exp_m1()
        })
        .collect();
    let mut value = 0.0;
    let mut excess = 0.0; // Σ_T (R_T - 1) Π_T x Π_{T^c}(1 - x)
    let x: Vec<f64> = sigma.iter().map(|&v| (p as f64).powf(-v)).collect();
    for mask in 0u32..(1 << free.len()) {
        let mut support = vec![false; n - 1];
        let mut term = 1.0;
        let mut weight = 1.0;
        for (k, &i) in free.iter().enumerate() {
            if mask >> k & 1 == 1 {
                support[i] = true;
                term *= g[k];
                weight *= x[k];
            } else {
                weight *= 1.0 - x[k];
            }
        }
        let r = support_ratio(p, &support);
        value += r * term;
        excess += (r - 1.0) * weight;
    }
    Ok(LocalFactor {
        p,
        s: s.to_vec(),
        cutoff: 0,
        value,
        tail: 0.0,
        regularized: 1.0 + excess,
        regularized_tail: 0.0,
    })
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Bound on `Σ_{|a| > cutoff} R_max Π x^a` with `r` free coordinates and all `x <= xmax < 1`.
fn tail_bound(r: usize, xmax: f64, rmax: f64, cutoff: u32) -> f64 {
    if r == 0 {
        return 0.0;
    }
    let r = r as u64;
    let mut k = cutoff as u64 + 1;
    let term = |k: u64| binomial(k + r - 1, r - 1) * xmax.powi(k as i32);
    let mut sum = 0.0;
    loop {
        let t = term(k);
        let ratio = xmax * (k + r) as f64 / (k + 1) as f64;
        // term ratios decrease in k, so once below 1 the rest is geometric
        if ratio < 1.0 && t / (1.0 - ratio) <= 1e-3 * (sum + t) || t == 0.0 {
            return rmax * (sum + t / (1.0 - ratio));
        }
        sum += t;
        k += 1;
        if k > cutoff as u64 + 1_000_000 {
            return f64::INFINITY;
        }
    }
}

/// Truncated sum of the defining series over `Σ a <= cutoff` with exact cell
/// volumes, plus a rigorous tail bound. With `cutoff = None` the smallest
/// cutoff whose tail is below `rel_tol` times the partial sum is chosen.
pub fn local_series(
    n: usize,
    p: u64,
    s: &[f64],
    d: &DivisorChoice,
    cutoff: Option<u32>,
    rel_tol: f64,
) -> Result<LocalFactor> {
    check_args(n, p, s, d)?;
    let free = free_indices(n, d, true);
    let sigma = shifted(n, s, &free)?;
    let xmax = sigma.iter().map(|&v| (p as f64).powf(-v)).fold(0.0, f64::max);
    let rmax = support_ratio(p, &vec![true; n - 1]);
    let cutoff = match cutoff {
        Some(c) => c,
        None => {
            let mut c = 4;
            while tail_bound(free.len(), xmax, rmax, c) > rel_tol && c < 10_000 {
                c += 4;
            }
            c
        }
    };
    let mut value = 0.0;
    let mut a = vec![0u32; n - 1];
    let mut add_term = |a: &[u32]| {
        let exponent: f64 = a.iter().zip(s).map(|(&k, &si)| k as f64 * si).sum::<f64>()
            - two_rho_pairing(n, a) as f64;
        let supp: Vec<bool> = a.iter().map(|&k| k > 0).collect();
        value += support_ratio(p, &supp) * (p as f64).powf(-exponent);
    };
    visit(&free, 0, cutoff, &mut a, &mut add_term);
    let tail = tail_bound(free.len(), xmax, rmax, cutoff);
    if tail > rel_tol * value {
        return Err(Error::CutoffTooSmall { cutoff, tail: tail / value, requested: rel_tol });
    }
    let reg = regularizer(n, p, s, d, true);
    Ok(LocalFactor {
        p,
        s: s.to_vec(),
        cutoff,
        value,
        tail,
        regularized: value * reg,
        regularized_tail: tail * reg,
    })
}

/// Calls `f` on every `a` supported on `free[k..]` with `Σ a <= left`.
fn visit(free: &[usize], k: usize, left: u32, a: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
    if k == free.len() {
        f(a);
        return;
    }
    for v in 0..=left {
        a[free[k]] = v;
        visit(free, k + 1, left - v, a, f);
    }
    a[free[k]] = 0;
}
