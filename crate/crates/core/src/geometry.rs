//! Picard-lattice bookkeeping on the wonderful compactification.
//!
//! Classes are written in the basis of boundary divisors `D_α`, one per
//! simple root. All comparisons are exact.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primes::is_prime;
use crate::root_data::RootDatum;

/// Coefficients `(λ_α)` of a class `Σ λ_α D_α`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PicClass {
    pub coeffs: Vec<Rational64>,
}

impl PicClass {
    pub fn new(coeffs: Vec<Rational64>) -> Self {
        PicClass { coeffs }
    }

    pub fn from_integers(v: &[i64]) -> Self {
        PicClass { coeffs: v.iter().map(|&x| Rational64::from(x)).collect() }
    }

    pub fn rank(&self) -> usize {
        self.coeffs.len()
    }

    /// Interior of the simplicial cone spanned by the `D_α`.
    pub fn is_big(&self) -> bool {
        !self.coeffs.is_empty() && self.coeffs.iter().all(|c| c.is_positive())
    }

    pub fn scaled(&self, t: Rational64) -> Self {
        PicClass { coeffs: self.coeffs.iter().map(|c| c * t).collect() }
    }

    pub fn min_coeff(&self) -> Rational64 {
        self.coeffs.iter().copied().min().unwrap_or_else(Rational64::zero)
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| *c.numer() as f64 / *c.denom() as f64).collect()
    }

    fn check_rank(&self, r: usize) -> Result<()> {
        if self.rank() != r {
            return Err(Error::LengthMismatch { expected: r, got: self.rank() });
        }
        Ok(())
    }
}

impl fmt::Display for PicClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// How a class was specified on the command line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LambdaSpec {
    Anticanonical,
    LogAnticanonical,
    Explicit(PicClass),
}

impl LambdaSpec {
    pub fn resolve(&self, rd: &RootDatum, d: &DivisorChoice) -> Result<PicClass> {
        match self {
            LambdaSpec::Anticanonical => Ok(anticanonical(rd)),
            LambdaSpec::LogAnticanonical => log_anticanonical(rd, d),
            LambdaSpec::Explicit(c) => {
                c.check_rank(rd.rank())?;
                Ok(c.clone())
            }
        }
    }
}

impl FromStr for LambdaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "anticanonical" => Ok(LambdaSpec::Anticanonical),
            "log-anticanonical" => Ok(LambdaSpec::LogAnticanonical),
            other => {
                let coeffs = other
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<Rational64>()
                            .map_err(|_| Error::Parse(format!("bad rational {t:?} in lambda")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(LambdaSpec::Explicit(PicClass::new(coeffs)))
            }
        }
    }
}

impl fmt::Display for LambdaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaSpec::Anticanonical => write!(f, "anticanonical"),
            LambdaSpec::LogAnticanonical => write!(f, "log-anticanonical"),
            LambdaSpec::Explicit(c) => write!(f, "{c}"),
        }
    }
}

/// The set of boundary components making up D, as 0-based simple-root indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct DivisorChoice {
    pub in_d: BTreeSet<usize>,
}

impl DivisorChoice {
    pub fn empty() -> Self {
        DivisorChoice::default()
    }

    pub fn full(rank: usize) -> Self {
        DivisorChoice { in_d: (0..rank).collect() }
    }

    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        DivisorChoice { in_d: indices.into_iter().collect() }
    }

    pub fn contains(&self, alpha: usize) -> bool {
        self.in_d.contains(&alpha)
    }

    pub fn len(&self) -> usize {
        self.in_d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.in_d.is_empty()
    }

    pub fn validate(&self, rank: usize) -> Result<()> {
        match self.in_d.iter().find(|&&i| i >= rank) {
            Some(i) => Err(Error::Parse(format!("divisor index {} exceeds rank {rank}", i + 1))),
            None => Ok(()),
        }
    }

    /// Parse `"1,3"` (1-based), `"all"`/`"full"` or `"none"` against a rank.
    pub fn parse(s: &str, rank: usize) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let d = match t.as_str() {
            "all" | "full" => DivisorChoice::full(rank),
            "none" | "" => DivisorChoice::empty(),
            _ => {
                let mut set = BTreeSet::new();
                for tok in t.split(',') {
                    let i: usize = tok
                        .trim()
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad divisor index {tok:?}")))?;
                    if i == 0 {
                        return Err(Error::Parse("divisor indices are 1-based".into()));
                    }
                    set.insert(i - 1);
                }
                DivisorChoice { in_d: set }
            }
        };
        d.validate(rank)?;
        Ok(d)
    }
}

impl fmt::Display for DivisorChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.in_d.is_empty() {
            return write!(f, "none");
        }
        let parts: Vec<String> = self.in_d.iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// A finite set of places of ℚ; the archimedean place is always present.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PlaceSet {
    finite_primes: BTreeSet<u64>,
}

impl PlaceSet {
    pub fn infinity_only() -> Self {
        PlaceSet::default()
    }

    pub fn with_primes(primes: impl IntoIterator<Item = u64>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for p in primes {
            if !is_prime(p) {
                return Err(Error::NotPrime(p));
            }
            set.insert(p);
        }
        Ok(PlaceSet { finite_primes: set })
    }

    pub fn finite_primes(&self) -> &BTreeSet<u64> {
        &self.finite_primes
    }

    pub fn contains_prime(&self, p: u64) -> bool {
        self.finite_primes.contains(&p)
    }

    /// `|S|`, counting the archimedean place.
    pub fn len(&self) -> usize {
        1 + self.finite_primes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn without(&self, p: u64) -> Self {
        let mut s = self.clone();
        s.finite_primes.remove(&p);
        s
    }

    pub fn with(&self, p: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        let mut s = self.clone();
        s.finite_primes.insert(p);
        Ok(s)
    }
}

impl FromStr for PlaceSet {
    type Err = Error;

    /// `"inf"`, `"inf,2,3"`; the archimedean place is implied when omitted.
    fn from_str(s: &str) -> Result<Self> {
        let mut primes = Vec::new();
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match tok.to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "∞" => {}
                num => primes.push(
                    num.parse::<u64>().map_err(|_| Error::Parse(format!("bad place {tok:?}")))?,
                ),
            }
        }
        PlaceSet::with_primes(primes)
    }
}

impl fmt::Display for PlaceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "inf")?;
        for p in &self.finite_primes {
            write!(f, ",{p}")?;
        }
        Ok(())
    }
}

/// The numbers controlling `N ~ c B^a (log B)^{b-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AsymptoticInvariants {
    pub a: Rational64,
    /// 0-based indices where the maximum defining `a` is attained.
    pub a_lambda: BTreeSet<usize>,
    pub r_lambda: usize,
    pub d_lambda: usize,
    pub b: usize,
}

/// `-K_X = Σ (κ_α + 1) D_α`.
pub fn anticanonical(rd: &RootDatum) -> PicClass {
    PicClass::new(rd.kappa.iter().map(|&k| Rational64::from(k + 1)).collect())
}

/// `-(K_X + D)`: drops one from the coefficient of each component of D.
pub fn log_anticanonical(rd: &RootDatum, d: &DivisorChoice) -> Result<PicClass> {
    d.validate(rd.rank())?;
    Ok(PicClass::new(
        rd.kappa
            .iter()
            .enumerate()
            .map(|(i, &k)| Rational64::from(if d.contains(i) { k } else { k + 1 }))
            .collect(),
    ))
}

/// The ratio whose maximum over α defines `a(λ)`.
pub fn pole_ratio(rd: &RootDatum, lambda: &PicClass, d: &DivisorChoice, alpha: usize) -> Rational64 {
    let k = rd.kappa[alpha];
    let num = if d.contains(alpha) { k } else { k + 1 };
    Rational64::from(num) / lambda.coeffs[alpha]
}

pub fn invariants(
    rd: &RootDatum,
    lambda: &PicClass,
    d: &DivisorChoice,
    s: &PlaceSet,
) -> Result<AsymptoticInvariants> {
    lambda.check_rank(rd.rank())?;
    d.validate(rd.rank())?;
    if !lambda.is_big() {
        return Err(Error::NotBig(lambda.to_string()));
    }
    let ratios: Vec<Rational64> = (0..rd.rank()).map(|i| pole_ratio(rd, lambda, d, i)).collect();
    let a = *ratios.iter().max().expect("rank >= 1");
    let a_lambda: BTreeSet<usize> = (0..rd.rank()).filter(|&i| ratios[i] == a).collect();
    let r_lambda = a_lambda.len();
    let d_lambda = a_lambda.iter().filter(|&&i| d.contains(i)).count();
    let b = r_lambda - d_lambda + s.len() * d_lambda;
    Ok(AsymptoticInvariants { a, a_lambda, r_lambda, d_lambda, b })
}

/// Base fields understood by [`character_group_order`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BaseField {
    Rationals,
    /// Any other number field, identified by its class number.
    NumberField { class_number: u64 },
}

/// Order of the group of automorphic characters contributing to the leading pole.
///
/// Over ℚ every unramified automorphic character of a split group is trivial.
pub fn character_group_order(
    field: &BaseField,
    _d: &DivisorChoice,
    _lambda: &PicClass,
    _s: &PlaceSet,
) -> Result<u64> {
    match field {
        BaseField::Rationals => Ok(1),
        BaseField::NumberField { class_number } => Err(Error::UnsupportedField(format!(
            "number field with class number {class_number}"
        ))),
    }
}

impl AsymptoticInvariants {
    pub fn a_f64(&self) -> f64 {
        *self.a.numer() as f64 / *self.a.denom() as f64
    }

    /// `(b-1)!` as a float.
    pub fn b_factorial(&self) -> f64 {
        (1..self.b).map(|k| k as f64).product::<f64>().max(1.0)
    }

    pub fn is_one(&self) -> bool {
        self.a.is_one()
    }
}
