//! Per-candidate height evaluation for the counting loop.
//!
//! For a primitive integer matrix the finite part of the height only needs
//! the invariant factors d_k = D_k / D_{k-1} (D_k the gcd of k×k minors):
//! `Π_p p^{⟨λ,a(p)⟩} = Π_k (d_{k+1}/d_k)^{λ_k}`. Sizes 2 and 3 use this and
//! closed forms for the singular value ratios; larger sizes fall back on the
//! general Cartan profile.

use num_integer::Integer;

use crate::geometry::{DivisorChoice, PicClass, PlaceSet};
use crate::heights::svd::two_by_two_sigma1_sq;
use crate::heights::{CartanProfile, GroupPoint, IntMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluated {
    pub height: f64,
    pub integral: bool,
}

#[derive(Debug, Clone)]
pub struct HeightKernel {
    n: usize,
    lambda: PicClass,
    lambda_f: Vec<f64>,
    lambda_i: Option<Vec<i32>>,
    in_d: Vec<bool>,
    s: PlaceSet,
    s_primes: Vec<u64>,
    d: DivisorChoice,
    min_lambda: f64,
    cutoff: f64,
}

fn pow_l(x: f64, li: Option<i32>, lf: f64) -> f64 {
    match li {
        Some(k) => x.powi(k),
        None => x.powf(lf),
    }
}

impl HeightKernel {
    pub fn new(n: usize, lambda: &PicClass, d: &DivisorChoice, s: &PlaceSet) -> Self {
        let lambda_i = lambda
            .coeffs
            .iter()
            .map(|c| (c.is_integer() && c.to_integer().abs() < 1000).then(|| c.to_integer() as i32))
            .collect::<Option<Vec<_>>>();
        HeightKernel {
            n,
            lambda: lambda.clone(),
            lambda_f: lambda.as_f64(),
            lambda_i,
            in_d: (0..n - 1).map(|i| d.contains(i)).collect(),
            s: s.clone(),
            s_primes: s.finite_primes().iter().copied().collect(),
            d: d.clone(),
            min_lambda: lambda.as_f64().into_iter().fold(f64::INFINITY, f64::min),
            cutoff: f64::INFINITY,
        }
    }

    /// Candidates whose cheap height lower bound exceeds `cutoff` may be
    /// reported as `None`.
    pub fn with_cutoff(mut self, cutoff: f64) -> Self {
        self.cutoff = cutoff;
        self
    }

    fn li(&self, k: usize) -> Option<i32> {
        self.lambda_i.as_ref().map(|v| v[k])
    }

    /// True when `x` has no prime factors outside S.
    fn is_s_unit(&self, mut x: u128) -> bool {
        for &p in &self.s_primes {
            let p = p as u128;
            while x.is_multiple_of(p) {
                x /= p;
            }
        }
        x == 1
    }

    /// `None` for singular or non-primitive candidates.
    pub fn evaluate(&self, e: &[i64]) -> Option<Evaluated> {
        match self.n {
            2 => self.eval2(e),
            3 => self.eval3(e),
            _ => self.eval_general(e),
        }
    }

    fn eval2(&self, e: &[i64]) -> Option<Evaluated> {
        let det = e[0] as i128 * e[3] as i128 - e[1] as i128 * e[2] as i128;
        if det == 0 {
            return None;
        }
        if e[0].gcd(&e[1]).gcd(&e[2]).gcd(&e[3]) != 1 {
            return None;
        }
        // finite part |det|^λ times (σ1/σ2)^λ = (σ1²/|det|)^λ collapses to (σ1²)^λ.
        let s1sq = two_by_two_sigma1_sq(e);
        let height = pow_l(s1sq, self.li(0), self.lambda_f[0]);
        let integral = !self.in_d[0] || self.is_s_unit(det.unsigned_abs());
        Some(Evaluated { height, integral })
    }

    fn eval3(&self, e: &[i64]) -> Option<Evaluated> {
        let m = |i: usize, j: usize| e[i * 3 + j];
        // cof[i][j] = cofactor of entry (i, j); adj = cofᵀ.
        let mut cof = [0i64; 9];
        for i in 0..3 {
            for j in 0..3 {
                let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
                let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
                cof[i * 3 + j] = m(i1, j1) * m(i2, j2) - m(i1, j2) * m(i2, j1);
            }
        }
        let det = m(0, 0) as i128 * cof[0] as i128
            + m(0, 1) as i128 * cof[1] as i128
            + m(0, 2) as i128 * cof[2] as i128;
        if det == 0 {
            return None;
        }
        if e.iter().fold(0i64, |g, x| g.gcd(x)) != 1 {
            return None;
        }
        let dd2 = cof.iter().fold(0i64, |g, x| g.gcd(x)) as u128;
        if self.cutoff.is_finite() {
            // σ_1(M) >= |row|, σ_1(adj M) >= |cofactor row|, H >= (h_1 h_2)^{min λ}.
            let rows = (0..3).map(|i| e[3 * i..3 * i + 3].iter().map(|&x| x as f64 * x as f64).sum::<f64>());
            let cofs = (0..3).map(|i| cof[3 * i..3 * i + 3].iter().map(|&x| x as f64 * x as f64).sum::<f64>());
            let lower = rows.fold(0.0, f64::max) * cofs.fold(0.0, f64::max) / (dd2 * dd2) as f64;
            if lower.powf(self.min_lambda / 2.0) > self.cutoff {
                return None;
            }
        }
        let adet = det.unsigned_abs();
        let d3 = adet / dd2;
        let q1 = dd2;
        let q2 = d3 / dd2;

        let s1sq = sym3_max_eigenvalue(&gram3(e));
        let sadj_sq = sym3_max_eigenvalue(&gram3(&cof));
        let s1 = s1sq.sqrt();
        let sadj = sadj_sq.sqrt();
        let r1 = s1sq / sadj;
        let r2 = sadj_sq / (s1 * adet as f64);
        let height = pow_l(q1 as f64 * r1, self.li(0), self.lambda_f[0])
            * pow_l(q2 as f64 * r2, self.li(1), self.lambda_f[1]);
        let integral = (!self.in_d[0] || self.is_s_unit(q1)) && (!self.in_d[1] || self.is_s_unit(q2));
        Some(Evaluated { height, integral })
    }

    fn eval_general(&self, e: &[i64]) -> Option<Evaluated> {
        let m = IntMatrix { n: self.n, data: e.to_vec() };
        if m.content() != 1 {
            return None;
        }
        let point = GroupPoint::new(m).ok()?;
        let profile = CartanProfile::of(&point).ok()?;
        Some(Evaluated {
            height: profile.height(&self.lambda).total,
            integral: profile.is_integral(&self.d, &self.s),
        })
    }
}

/// Upper triangle of AᵀA for a 3×3 matrix (entries: 00, 01, 02, 11, 12, 22).
fn gram3(a: &[i64]) -> [f64; 6] {
    let col = |i: usize, j: usize| -> i128 { (0..3).map(|k| a[k * 3 + i] as i128 * a[k * 3 + j] as i128).sum() };
    [
        col(0, 0) as f64,
        col(0, 1) as f64,
        col(0, 2) as f64,
        col(1, 1) as f64,
        col(1, 2) as f64,
        col(2, 2) as f64,
    ]
}

/// Largest eigenvalue of a symmetric 3×3 matrix by cyclic Jacobi rotations.
pub fn sym3_max_eigenvalue(g: &[f64; 6]) -> f64 {
    let mut a = [[g[0], g[1], g[2]], [g[1], g[3], g[4]], [g[2], g[4], g[5]]];
    for _ in 0..50 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        let scale = a[0][0].abs() + a[1][1].abs() + a[2][2].abs();
        if off <= 1e-18 * scale || off == 0.0 {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let apq = a[p][q];
            a[p][p] -= t * apq;
            a[q][q] += t * apq;
            a[p][q] = 0.0;
            a[q][p] = 0.0;
            for r in 0..3 {
                if r != p && r != q {
                    let (arp, arq) = (a[r][p], a[r][q]);
                    a[r][p] = c * arp - s * arq;
                    a[p][r] = a[r][p];
                    a[r][q] = s * arp + c * arq;
                    a[q][r] = a[r][q];
                }
            }
        }
    }
    a[0][0].max(a[1][1]).max(a[2][2])
}
