//! Adelic heights on PGL_n(ℚ).
//!
//! A point is a primitive integer matrix up to sign. Its Cartan coordinates
//! at a prime p are the successive differences of the p-adic Smith exponents;
//! at infinity they are the logarithms of successive singular value ratios.
//! The local height attached to a class λ is `|α(t_v)|^{λ_α}` multiplied
//! over simple roots, i.e. `p^{⟨λ,a⟩}` or `exp⟨λ,a⟩`.

pub mod snf;
pub mod svd;

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DivisorChoice, PicClass, PlaceSet};
use crate::primes::prime_divisors;

pub use snf::smith_exponents;
pub use svd::singular_values;

/// Dense square integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IntMatrix {
    pub n: usize,
    pub data: Vec<i64>,
}

impl IntMatrix {
    pub fn new(n: usize, data: Vec<i64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::InvalidMatrix(format!("{} entries for size {n}", data.len())));
        }
        Ok(IntMatrix { n, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0; n * n];
        for i in 0..n {
            data[i * n + i] = 1;
        }
        IntMatrix { n, data }
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.n + j]
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> Result<i128> {
        det_i128(&self.data, self.n)
    }

    pub fn content(&self) -> i64 {
        self.data.iter().fold(0i64, |g, &x| g.gcd(&x))
    }

    pub fn max_abs_entry(&self) -> i64 {
        self.data.iter().map(|x| x.abs()).max().unwrap_or(0)
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        let n = self.n;
        let mut data = vec![0i64; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        IntMatrix { n, data }
    }

    pub fn scale(&self, c: i64) -> IntMatrix {
        IntMatrix { n: self.n, data: self.data.iter().map(|x| x * c).collect() }
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .data
            .chunks(self.n)
            .map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
            .collect();
        write!(f, "{}", rows.join(";"))
    }
}

impl FromStr for IntMatrix {
    type Err = Error;

    /// Row-major text: rows separated by `;`, entries by `,`, e.g. `"2,1;0,2"`.
    fn from_str(s: &str) -> Result<Self> {
        let rows: Vec<Vec<i64>> = s
            .split(';')
            .map(|row| {
                row.split(',')
                    .map(|t| t.trim().parse::<i64>().map_err(|_| Error::Parse(format!("bad entry {t:?}"))))
                    .collect()
            })
            .collect::<Result<_>>()?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMatrix(format!("{s:?} is not square")));
        }
        IntMatrix::new(n, rows.concat())
    }
}

pub(crate) fn det_i128(data: &[i64], n: usize) -> Result<i128> {
    match n {
        1 => return Ok(data[0] as i128),
        2 => return Ok(data[0] as i128 * data[3] as i128 - data[1] as i128 * data[2] as i128),
        3 => {
            let a = |i: usize| data[i] as i128;
            return Ok(a(0) * (a(4) * a(8) - a(5) * a(7)) - a(1) * (a(3) * a(8) - a(5) * a(6))
                + a(2) * (a(3) * a(7) - a(4) * a(6)));
        }
        _ => {}
    }
    let overflow = || Error::InvalidMatrix("determinant overflows i128".into());
    let mut m: Vec<i128> = data.iter().map(|&x| x as i128).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k * n + k] == 0 {
            match (k + 1..n).find(|&i| m[i * n + k] != 0) {
                Some(i) => {
                    for j in 0..n {
                        m.swap(k * n + j, i * n + j);
                    }
                    sign = -sign;
                }
                None => return Ok(0),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = m[i * n + j]
                    .checked_mul(m[k * n + k])
                    .zip(m[i * n + k].checked_mul(m[k * n + j]))
                    .and_then(|(x, y)| x.checked_sub(y))
                    .ok_or_else(overflow)?;
                m[i * n + j] = t / prev;
            }
        }
        prev = m[k * n + k];
    }
    Ok(sign * m[n * n - 1])
}

/// A point of PGL_n(ℚ): primitive, nonsingular, first nonzero entry positive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GroupPoint {
    matrix: IntMatrix,
    det: i128,
}

impl GroupPoint {
    /// Accepts any nonsingular integer matrix; scales to the primitive, sign-canonical representative.
    pub fn new(matrix: IntMatrix) -> Result<Self> {
        if matrix.n < 2 {
            return Err(Error::InvalidMatrix("PGL_n needs n >= 2".into()));
        }
        let det = matrix.det()?;
        if det == 0 {
            return Err(Error::Singular);
        }
        let g = matrix.content();
        let first = *matrix.data.iter().find(|&&x| x != 0).expect("nonsingular");
        let c = if first < 0 { -g } else { g };
        let n = matrix.n;
        let data: Vec<i64> = matrix.data.iter().map(|x| x / c).collect();
        let det = det / (c as i128).pow(n as u32);
        Ok(GroupPoint { matrix: IntMatrix { n, data }, det })
    }

    /// Trusted constructor for the enumeration hot path.
    pub(crate) fn from_canonical(matrix: IntMatrix, det: i128) -> Self {
        debug_assert_eq!(matrix.content(), 1);
        GroupPoint { matrix, det }
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.n
    }

    pub fn det(&self) -> i128 {
        self.det
    }

    /// Primes at which some Cartan coordinate can be nonzero.
    pub fn bad_primes(&self) -> Vec<u64> {
        prime_divisors(self.det.unsigned_abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Place {
    Prime(u64),
    Infinity,
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Prime(p) => write!(f, "{p}"),
            Place::Infinity => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CartanVector {
    Finite(Vec<u32>),
    Archimedean(Vec<f64>),
}

/// Dominant Cartan coordinates of a point at one place.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalCartanData {
    pub place: Place,
    pub a: CartanVector,
}

impl LocalCartanData {
    pub fn is_trivial(&self) -> bool {
        match &self.a {
            CartanVector::Finite(v) => v.iter().all(|&x| x == 0),
            CartanVector::Archimedean(v) => v.iter().all(|&x| x == 0.0),
        }
    }

    pub fn len(&self) -> usize {
        match &self.a {
            CartanVector::Finite(v) => v.len(),
            CartanVector::Archimedean(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn finite_from_exponents(e: &[u32]) -> Vec<u32> {
    e.windows(2).map(|w| w[1] - w[0]).collect()
}

pub fn local_cartan(point: &GroupPoint, place: Place) -> Result<LocalCartanData> {
    let m = point.matrix();
    let a = match place {
        Place::Prime(p) => {
            let e = smith_exponents(m, p)?;
            CartanVector::Finite(finite_from_exponents(&e))
        }
        Place::Infinity => {
            let s = svd::singular_values_with_det(m, point.det)?;
            CartanVector::Archimedean(s.windows(2).map(|w| (w[0] / w[1]).ln()).collect())
        }
    };
    Ok(LocalCartanData { place, a })
}

/// Local height `H_v(λ, g_v)`.
pub fn local_height(d: &LocalCartanData, lambda: &PicClass) -> Result<f64> {
    if d.len() != lambda.rank() {
        return Err(Error::LengthMismatch { expected: d.len(), got: lambda.rank() });
    }
    let lam = lambda.as_f64();
    Ok(match (&d.a, d.place) {
        (CartanVector::Finite(a), Place::Prime(p)) => {
            let e = finite_exponent(a, lambda);
            pow_rational(p, e)
        }
        (CartanVector::Archimedean(a), _) => a.iter().zip(&lam).map(|(x, l)| x * l).sum::<f64>().exp(),
        _ => return Err(Error::InvalidMatrix("place and coordinate kind disagree".into())),
    })
}

/// `⟨λ, a⟩` for integral a.
pub fn finite_exponent(a: &[u32], lambda: &PicClass) -> Rational64 {
    a.iter().zip(&lambda.coeffs).map(|(&x, l)| l * x as i64).sum()
}

fn pow_rational(p: u64, e: Rational64) -> f64 {
    if e.is_integer() {
        (p as f64).powi(e.to_integer() as i32)
    } else {
        (p as f64).powf(e.to_f64().unwrap())
    }
}

/// `H(λ, γ) = finite_part × arch_part`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeightValue {
    /// `(p, ⟨λ, a(p)⟩)` for every prime dividing det; the finite part is `Π p^{exponent}`.
    pub finite_factors: Vec<(u64, Rational64)>,
    pub finite_part: f64,
    pub arch_part: f64,
    pub total: f64,
}

impl HeightValue {
    /// The finite part as an exact integer, when all exponents are integral and it fits.
    pub fn finite_exact(&self) -> Option<u128> {
        let mut acc: u128 = 1;
        for (p, e) in &self.finite_factors {
            if !e.is_integer() || *e.numer() < 0 {
                return None;
            }
            acc = acc.checked_mul((*p as u128).checked_pow(e.to_integer() as u32)?)?;
        }
        Some(acc)
    }
}

/// All Cartan data of a point: one vector per bad prime, plus infinity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CartanProfile {
    pub finite: Vec<(u64, Vec<u32>)>,
    /// Successive singular value ratios σ_i/σ_{i+1}.
    pub arch_ratios: Vec<f64>,
}

impl CartanProfile {
    pub fn of(point: &GroupPoint) -> Result<Self> {
        let m = point.matrix();
        let finite = point
            .bad_primes()
            .into_iter()
            .map(|p| (p, finite_from_exponents(&snf::smith_exponents_with_det(m, p, point.det))))
            .collect();
        let s = svd::singular_values_with_det(m, point.det)?;
        Ok(CartanProfile { finite, arch_ratios: s.windows(2).map(|w| w[0] / w[1]).collect() })
    }

    pub fn height(&self, lambda: &PicClass) -> HeightValue {
        let finite_factors: Vec<(u64, Rational64)> =
            self.finite.iter().map(|(p, a)| (*p, finite_exponent(a, lambda))).collect();
        let finite_part: f64 = finite_factors.iter().map(|&(p, e)| pow_rational(p, e)).product();
        let arch_part: f64 = self
            .arch_ratios
            .iter()
            .zip(&lambda.coeffs)
            .map(|(&r, l)| if l.is_integer() { r.powi(l.to_integer() as i32) } else { r.powf(l.to_f64().unwrap()) })
            .product();
        HeightValue { finite_factors, finite_part, arch_part, total: finite_part * arch_part }
    }

    /// (D,S)-integrality: Cartan coordinates along D vanish at every prime outside S.
    pub fn is_integral(&self, d: &DivisorChoice, s: &PlaceSet) -> bool {
        self.finite
            .iter()
            .filter(|(p, _)| !s.contains_prime(*p))
            .all(|(_, a)| d.in_d.iter().all(|&i| a[i] == 0))
    }
}

pub fn global_height(point: &GroupPoint, lambda: &PicClass) -> Result<HeightValue> {
    if lambda.rank() + 1 != point.n() {
        return Err(Error::LengthMismatch { expected: point.n() - 1, got: lambda.rank() });
    }
    Ok(CartanProfile::of(point)?.height(lambda))
}

pub fn delta_indicator(point: &GroupPoint, d: &DivisorChoice, s: &PlaceSet) -> Result<bool> {
    d.validate(point.n() - 1)?;
    let m = point.matrix();
    for p in point.bad_primes() {
        if s.contains_prime(p) {
            continue;
        }
        let a = finite_from_exponents(&snf::smith_exponents_with_det(m, p, point.det));
        if d.in_d.iter().any(|&i| a[i] != 0) {
            return Ok(false);
        }
    }
    Ok(true)
}
