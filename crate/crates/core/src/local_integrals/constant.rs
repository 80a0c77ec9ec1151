//! Leading constant `c` in `N(B) ~ c B^a (log B)^{b-1}` for PGL_n over ℚ.
//!
//! The height zeta function at `sλ` has a pole of order b at `s = a`. Its
//! leading coefficient is the product of
//! - `Π_{α ∈ A(λ) \ D} λ_α^{-1} Π_{p ∈ S} (1 - 1/p)` from the poles of the partial zeta factors,
//! - `ζ_S(aλ_α - κ_α)` for the remaining α outside D,
//! - the regularized Euler product at `aλ`,
//! - `lim (s-a)^{d} J_v(sλ)` at each place v of S,
//!
//! and a Tauberian argument turns it into `c` by dividing by `a (b-1)!`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{invariants, AsymptoticInvariants, DivisorChoice, PicClass, PlaceSet};
use crate::root_data::{build_root_datum, CartanType};

use super::arch::{arch_integral, QuadratureSpec};
use super::euler::{euler_product, zeta_s};
use super::series::{kappa, local_factor_closed};

/// Haar normalization of the archimedean integral, fixed by matching the
/// prediction for rational points of PGL_2 with `λ = (2)` to the exhaustive
/// count `N(10^8) = 303828464`.
pub const ARCH_NORMALIZATION: f64 = 5.997_333_9;

pub const NORMALIZATION_NOTE: &str =
    "calibrated once: PGL_2, lambda=(2), D=none, S={inf}, N(1e8)=303828464 from exhaustive count";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantOptions {
    pub p_max: u64,
    pub quadrature: QuadratureSpec,
    pub normalization: f64,
    /// Offsets from `a` used to extrapolate Laurent leading coefficients.
    pub epsilons: [f64; 3],
    /// Relative disagreement between first- and second-order extrapolants that is tolerated.
    pub extrapolation_tol: f64,
}

impl Default for ConstantOptions {
    fn default() -> Self {
        ConstantOptions {
            p_max: 1_000_000,
            quadrature: QuadratureSpec::default(),
            normalization: ARCH_NORMALIZATION,
            epsilons: [0.04, 0.02, 0.01],
            extrapolation_tol: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaceContribution {
    /// `"inf"` or the prime.
    pub place: String,
    pub pole_order: usize,
    /// `(s-a)^d J_v(sλ)` at `s = a + ε` for each ε; empty when `d = 0`.
    pub raw: Vec<f64>,
    pub leading: f64,
    pub extrapolation_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZetaValue {
    /// 1-based simple root index.
    pub alpha: usize,
    pub argument: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantReport {
    pub n: usize,
    pub lambda: String,
    pub divisor: String,
    pub places: String,
    pub a: String,
    pub b: usize,
    /// 1-based indices attaining `a`.
    pub a_lambda: Vec<usize>,
    pub r_lambda: usize,
    pub d_lambda: usize,
    pub char_group_order: u64,
    pub zeta_residues: f64,
    pub zeta_values: Vec<ZetaValue>,
    pub euler_value: f64,
    pub euler_upper: f64,
    pub place_values: Vec<PlaceContribution>,
    pub tauberian_factor: f64,
    pub c_unnormalized: f64,
    pub normalization_calibration: f64,
    pub normalization_note: String,
    pub c_predicted: f64,
}

impl ConstantReport {
    pub fn a_f64(&self) -> f64 {
        let (num, den) = self.a.split_once('/').unwrap_or((&self.a, "1"));
        num.parse::<f64>().unwrap_or(f64::NAN) / den.parse::<f64>().unwrap_or(f64::NAN)
    }

    /// `c B^a (log B)^{b-1}`.
    pub fn predict(&self, b: f64) -> f64 {
        self.c_predicted * b.powf(self.a_f64()) * b.ln().powi(self.b as i32 - 1)
    }
}

/// Extrapolate `g(ε) = L + c_1 ε + c_2 ε² + …` to ε = 0 from nodes `h, h/2, h/4`.
///
/// Returns the second-order value and its distance to the first-order one.
pub fn richardson(eps: [f64; 3], g: [f64; 3]) -> Result<(f64, f64)> {
    let halving = (eps[1] * 2.0 - eps[0]).abs() < 1e-12 && (eps[2] * 2.0 - eps[1]).abs() < 1e-12;
    if !halving {
        return Err(Error::InvalidJob(format!("extrapolation nodes {eps:?} must halve")));
    }
    let first = 2.0 * g[2] - g[1];
    let second = (8.0 * g[2] - 6.0 * g[1] + g[0]) / 3.0;
    Ok((second, (second - first).abs()))
}

fn leading_coefficient(
    label: String,
    order: usize,
    a: f64,
    opts: &ConstantOptions,
    mut value_at: impl FnMut(f64) -> Result<f64>,
) -> Result<PlaceContribution> {
    if order == 0 {
        let v = value_at(a)?;
        return Ok(PlaceContribution { place: label, pole_order: 0, raw: vec![], leading: v, extrapolation_error: 0.0 });
    }
    let mut raw = [0.0; 3];
    for (r, &e) in raw.iter_mut().zip(&opts.epsilons) {
        *r = e.powi(order as i32) * value_at(a + e)?;
    }
    let (leading, err) = richardson(opts.epsilons, raw)?;
    if !(leading > 0.0) || err > opts.extrapolation_tol * leading.abs() {
        return Err(Error::Extrapolation(raw));
    }
    Ok(PlaceContribution { place: label, pole_order: order, raw: raw.to_vec(), leading, extrapolation_error: err })
}

/// Predicted leading constant for `(D,S)`-integral points of PGL_n(ℚ) of `λ`-height.
pub fn predicted_constant(
    n: usize,
    lambda: &PicClass,
    d: &DivisorChoice,
    places: &PlaceSet,
    opts: &ConstantOptions,
) -> Result<ConstantReport> {
    let rd = build_root_datum(CartanType::pgl(n)?);
    let inv: AsymptoticInvariants = invariants(&rd, lambda, d, places)?;
    let a = inv.a_f64();
    let lam = lambda.as_f64();
    let k = kappa(n);
    let at = |s: f64| -> Vec<f64> { lam.iter().map(|l| s * l).collect() };

    let mut zeta_residues = 1.0;
    let mut zeta_values = Vec::new();
    for i in (0..n - 1).filter(|&i| !d.contains(i)) {
        if inv.a_lambda.contains(&i) {
            let s_factor: f64 = places.finite_primes().iter().map(|&p| 1.0 - 1.0 / p as f64).product();
            zeta_residues *= s_factor / lam[i];
        } else {
            let arg = a * lam[i] - k[i];
            zeta_values.push(ZetaValue { alpha: i + 1, argument: arg, value: zeta_s(arg, places)? });
        }
    }
    let euler = euler_product(n, &at(a), d, places, opts.p_max)?;

    let order = inv.d_lambda;
    let mut place_values = vec![leading_coefficient("inf".into(), order, a, opts, |s| {
        arch_integral(n, &at(s), &opts.quadrature)
    })?];
    for &p in places.finite_primes() {
        place_values.push(leading_coefficient(p.to_string(), order, a, opts, |s| {
            Ok(local_factor_closed(n, p, &at(s), d, false)?.value)
        })?);
    }

    let tauberian_factor = 1.0 / (a * inv.b_factorial());
    let c_unnormalized = zeta_residues
        * zeta_values.iter().map(|z| z.value).product::<f64>()
        * euler.value
        * place_values.iter().map(|v| v.leading).product::<f64>()
        * tauberian_factor;
    let c_predicted = c_unnormalized * opts.normalization;
    if !(c_predicted > 0.0) || !c_predicted.is_finite() {
        return Err(Error::Quadrature(format!("non-positive constant {c_predicted}")));
    }
    Ok(ConstantReport {
        n,
        lambda: lambda.to_string(),
        divisor: d.to_string(),
        places: places.to_string(),
        a: inv.a.to_string(),
        b: inv.b,
        a_lambda: inv.a_lambda.iter().map(|i| i + 1).collect(),
        r_lambda: inv.r_lambda,
        d_lambda: inv.d_lambda,
        char_group_order: 1,
        zeta_residues,
        zeta_values,
        euler_value: euler.value,
        euler_upper: euler.upper,
        place_values,
        tauberian_factor,
        c_unnormalized,
        normalization_calibration: opts.normalization,
        normalization_note: NORMALIZATION_NOTE.into(),
        c_predicted,
    })
}
