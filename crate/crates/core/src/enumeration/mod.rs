//! Exhaustive counting of PGL_n(ℚ)-points of bounded height.
//!
//! Points are enumerated in a box of integer matrices whose side comes from
//! a proven lower bound for the height in terms of the largest singular
//! value. Work is sharded by the first row; shards produce per-grid-point
//! histograms that are summed, so results do not depend on scheduling.

pub mod fit;
pub mod kernel;

use std::time::Instant;

use num_integer::{Integer, Roots};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DivisorChoice, PicClass, PlaceSet};
use crate::heights::{GroupPoint, IntMatrix};

pub use fit::{fit_exponents, FitResult};
pub use kernel::{Evaluated, HeightKernel};

/// Exponent θ with `H(λ, γ) >= σ_1(γ)^θ` for every point γ of PGL_n.
///
/// With m = min λ_α: `H(λ) >= H(m·1)^{...}` and `H(1) = h_{ω_1} h_{ω_{n-1}} >= σ_1^{n/(n-1)}`
/// because `σ_1(γ) <= h_{ω_{n-1}}(γ)^{n-1}`.
pub fn sigma1_exponent(n: usize, lambda: &PicClass) -> f64 {
    let m = lambda.min_coeff();
    let m = *m.numer() as f64 / *m.denom() as f64;
    m * n as f64 / (n as f64 - 1.0)
}

/// Largest entry any point of height `<= b` can have.
pub fn entry_bound(n: usize, lambda: &PicClass, b: f64) -> Result<u64> {
    if !lambda.is_big() {
        return Err(Error::NotBig(lambda.to_string()));
    }
    if lambda.rank() + 1 != n {
        return Err(Error::LengthMismatch { expected: n - 1, got: lambda.rank() });
    }
    if !(b > 0.0) {
        return Err(Error::InvalidJob(format!("height bound {b} must be positive")));
    }
    let x = b.max(1.0).powf(1.0 / sigma1_exponent(n, lambda));
    Ok(((x * (1.0 + 1e-12)).floor() as u64).max(1))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CountJob {
    pub n: usize,
    pub lambda: PicClass,
    pub divisor: DivisorChoice,
    pub places: PlaceSet,
    pub grid: Vec<f64>,
    pub entry_bound: u64,
    /// Skip candidates whose proven height lower bound exceeds the largest B.
    #[serde(default = "default_true")]
    pub pruning: bool,
}

fn default_true() -> bool {
    true
}

impl CountJob {
    /// A job whose entry bound is the completeness bound of the largest grid point.
    pub fn new(n: usize, lambda: PicClass, divisor: DivisorChoice, places: PlaceSet, grid: Vec<f64>) -> Result<Self> {
        let top = grid.last().copied().ok_or_else(|| Error::InvalidJob("empty grid".into()))?;
        let entry_bound = entry_bound(n, &lambda, top)?;
        let job = CountJob { n, lambda, divisor, places, grid, entry_bound, pruning: true };
        job.validate()?;
        Ok(job)
    }

    pub fn max_b(&self) -> f64 {
        *self.grid.last().expect("validated")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidJob("n must be at least 2".into()));
        }
        if self.lambda.rank() + 1 != self.n {
            return Err(Error::LengthMismatch { expected: self.n - 1, got: self.lambda.rank() });
        }
        if !self.lambda.is_big() {
            return Err(Error::NotBig(self.lambda.to_string()));
        }
        self.divisor.validate(self.n - 1)?;
        if self.grid.is_empty() {
            return Err(Error::InvalidJob("empty grid".into()));
        }
        if self.grid.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
            return Err(Error::InvalidJob("grid values must be positive and finite".into()));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidJob("grid must be strictly increasing".into()));
        }
        let required = entry_bound(self.n, &self.lambda, self.max_b())?;
        if self.entry_bound < required {
            return Err(Error::IncompleteBound { given: self.entry_bound, required });
        }
        Ok(())
    }

    /// For 3×3 matrices with `λ_1 = λ_2` and a flip-symmetric divisor the
    /// involution `M ↦ prim(adj M)` preserves height and integrality and swaps
    /// `σ_1(M)` with `σ_1(prim adj M)`. Returns an integer `K` with
    /// `min(σ_1(M), σ_1(prim adj M))² <= K` for all points of height `<= max B`;
    /// any such `K` gives an exact count.
    fn symmetric_limit(&self) -> Option<i128> {
        if !self.pruning || self.n != 3 {
            return None;
        }
        let c = &self.lambda.coeffs;
        if c[0] != c[1] || self.divisor.contains(0) != self.divisor.contains(1) {
            return None;
        }
        let l = *c[0].numer() as f64 / *c[0].denom() as f64;
        Some((self.max_b().max(1.0).powf(1.0 / l) * (1.0 + 1e-9)).floor() as i128 + 1)
    }

    /// Squared row norm above which a row cannot occur in an enumerated matrix.
    fn row_norm_sq_limit(&self) -> Option<i128> {
        if !self.pruning {
            return None;
        }
        if let Some(k) = self.symmetric_limit() {
            return Some(k);
        }
        let s = self.max_b().max(1.0).powf(1.0 / sigma1_exponent(self.n, &self.lambda));
        Some((s * s * (1.0 + 1e-12)).floor() as i128)
    }

    /// Squared form of `H(λ) >= (max|r_i| · |r_i × r_j| / gcd(r_i × r_j))^{min λ}` for 3×3 matrices.
    fn pair_sq_limit(&self) -> Option<f64> {
        let m = self.lambda.min_coeff();
        let m = *m.numer() as f64 / *m.denom() as f64;
        (self.pruning && self.n == 3).then(|| self.max_b().max(1.0).powf(2.0 / m) * (1.0 + 1e-9))
    }

    /// Estimated number of candidate matrices the counting loop will visit.
    ///
    /// Exact for 2×2; for pruned 3×3 jobs it streams the admissible rows,
    /// samples first rows and bounds the inner loops by their neighbour counts.
    pub fn estimated_candidates(&self) -> f64 {
        let m = self.entry_bound as i64;
        if let (3, Some(limit), Some(pair_limit)) = (self.n, self.row_norm_sq_limit(), self.pair_sq_limit()) {
            let mut total = 0u64;
            for_each_ball_row3(m, limit, |_| total += 1);
            let firsts = total.saturating_sub(1) / 2;
            if firsts == 0 {
                return 0.0;
            }
            let step = (total / (2 * ESTIMATE_SAMPLES)).max(1);
            let mut samples = Vec::new();
            let mut k = 0u64;
            for_each_ball_row3(m, limit, |r| {
                if k.is_multiple_of(step) && is_sign_canonical(r) {
                    samples.push((*r, norm_sq(r)));
                }
                k += 1;
            });
            let mut counts = vec![0f64; samples.len()];
            for_each_ball_row3(m, limit, |r| {
                let rn = norm_sq(r);
                for (c, (f, fnorm)) in counts.iter_mut().zip(&samples) {
                    if pair_within(f, *fnorm, r, rn, pair_limit) {
                        *c += 1.0;
                    }
                }
            });
            return counts.iter().map(|c| c * c).sum::<f64>() / counts.len() as f64 * firsts as f64;
        }
        let rows = candidate_rows(self.n, m, self.row_norm_sq_limit());
        let firsts = rows.iter().filter(|r| is_sign_canonical(r)).count();
        firsts as f64 * (rows.len() as f64).powi(self.n as i32 - 1)
    }
}

const ESTIMATE_SAMPLES: u64 = 24;

/// Calls `f` on every vector of `[-m, m]^3` with squared norm `<= limit`, lexicographically.
fn for_each_ball_row3(m: i64, limit: i128, mut f: impl FnMut(&[i64; 3])) {
    let bound = |rest: i128| (rest.max(0).sqrt() as i64).min(m);
    for x in -bound(limit)..=bound(limit) {
        let rx = limit - (x as i128).pow(2);
        for y in -bound(rx)..=bound(rx) {
            let ry = rx - (y as i128).pow(2);
            for z in -bound(ry)..=bound(ry) {
                f(&[x, y, z]);
            }
        }
    }
}

fn pair_within(a: &[i64], a_norm: i128, b: &[i64], b_norm: i128, limit: f64) -> bool {
    let c = cross(a, b);
    let g = c.iter().fold(0i64, |g, x| g.gcd(x));
    if g == 0 {
        return false; // parallel rows: singular
    }
    let g = g as f64;
    a_norm.max(b_norm) as f64 * norm_sq(&c) as f64 / (g * g) <= limit
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub b: f64,
    pub integral: u64,
    pub rational: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountResult {
    pub rows: Vec<CountRow>,
    pub job: CountJob,
    pub wall_time_secs: f64,
    pub workers: usize,
    pub candidates: u64,
}

impl CountResult {
    pub fn grid(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.b).collect()
    }
}

fn is_sign_canonical(row: &[i64]) -> bool {
    row.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)
}

/// All integer vectors in `[-m, m]^n` (lexicographic), optionally restricted by squared norm.
fn candidate_rows(n: usize, m: i64, norm_sq_limit: Option<i128>) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut v = vec![-m; n];
    loop {
        let ok = norm_sq_limit.is_none_or(|lim| v.iter().map(|&x| x as i128 * x as i128).sum::<i128>() <= lim);
        if ok {
            out.push(v.clone());
        }
        let mut k = n;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if v[k] < m {
                v[k] += 1;
                for x in v.iter_mut().skip(k + 1) {
                    *x = -m;
                }
                break;
            }
        }
    }
}

/// Primitive, nonsingular, sign-canonical integer matrices with entries in `[-m, m]`,
/// in lexicographic order of their row-major entries.
pub fn enumerate_points(n: usize, m: u64) -> impl Iterator<Item = GroupPoint> {
    let m = m as i64;
    let rows = if m == 0 { Vec::new() } else { candidate_rows(n, m, None) };
    let firsts: Vec<Vec<i64>> = rows.iter().filter(|r| is_sign_canonical(r)).cloned().collect();
    firsts.into_iter().flat_map(move |first| {
        let rows = rows.clone();
        ShardIter::new(first, rows, n).filter_map(move |e| {
            let mat = IntMatrix { n, data: e };
            if mat.content() != 1 {
                return None;
            }
            let det = mat.det().ok()?;
            (det != 0).then(|| GroupPoint::from_canonical(mat, det))
        })
    })
}

/// Odometer over the rows after a fixed first row.
struct ShardIter {
    first: Vec<i64>,
    rows: Vec<Vec<i64>>,
    idx: Vec<usize>,
    n: usize,
    done: bool,
}

impl ShardIter {
    fn new(first: Vec<i64>, rows: Vec<Vec<i64>>, n: usize) -> Self {
        let done = rows.is_empty();
        ShardIter { first, rows, idx: vec![0; n - 1], n, done }
    }
}

impl Iterator for ShardIter {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        if self.done {
            return None;
        }
        let mut e = self.first.clone();
        for &i in &self.idx {
            e.extend_from_slice(&self.rows[i]);
        }
        let mut k = self.n - 1;
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            if self.idx[k] + 1 < self.rows.len() {
                self.idx[k] += 1;
                for x in self.idx.iter_mut().skip(k + 1) {
                    *x = 0;
                }
                break;
            }
        }
        Some(e)
    }
}

/// Index of the first grid point `>= h`, or `None` when h exceeds the grid.
fn bin_of(grid: &[f64], h: f64) -> Option<usize> {
    let k = grid.partition_point(|&b| b < h);
    (k < grid.len()).then_some(k)
}

#[derive(Debug, Clone)]
struct Histogram {
    integral: Vec<u64>,
    rational: Vec<u64>,
    candidates: u64,
}

impl Histogram {
    fn new(len: usize) -> Self {
        Histogram { integral: vec![0; len], rational: vec![0; len], candidates: 0 }
    }

    fn merge(mut self, other: Histogram) -> Histogram {
        for (a, b) in self.integral.iter_mut().zip(&other.integral) {
            *a += b;
        }
        for (a, b) in self.rational.iter_mut().zip(&other.rational) {
            *a += b;
        }
        self.candidates += other.candidates;
        self
    }
}

fn cross(a: &[i64], b: &[i64]) -> [i64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm_sq(v: &[i64]) -> i128 {
    v.iter().map(|&x| x as i128 * x as i128).sum()
}

struct ShardContext<'a> {
    job: &'a CountJob,
    kernel: Option<&'a HeightKernel>,
    rows: &'a [Vec<i64>],
    row_norms: Vec<i128>,
    /// Squared form of `H(λ) >= (max|r_i| · |r_i × r_j| / gcd(r_i × r_j))^{min λ}` for 3×3 matrices.
    pair_sq_limit: Option<f64>,
    symmetric: Option<i128>,
}

impl<'a> ShardContext<'a> {
    fn new(job: &'a CountJob, kernel: Option<&'a HeightKernel>, rows: &'a [Vec<i64>]) -> Self {
        ShardContext {
            job,
            kernel,
            rows,
            row_norms: rows.iter().map(|r| norm_sq(r)).collect(),
            pair_sq_limit: job.pair_sq_limit(),
            symmetric: job.symmetric_limit(),
        }
    }

    fn pair_ok(&self, r: &[i64], r_norm: i128, i: usize) -> bool {
        pair_within(r, r_norm, &self.rows[i], self.row_norms[i], self.pair_sq_limit.unwrap_or(f64::INFINITY))
    }

    fn neighbours(&self, r: &[i64]) -> Vec<usize> {
        let rn = norm_sq(r);
        (0..self.rows.len()).filter(|&i| self.pair_ok(r, rn, i)).collect()
    }
}

/// Exact test that `t·I - A` is positive semidefinite for a symmetric 3×3 `A`.
fn dominates(t: i128, a: &[[i128; 3]; 3]) -> bool {
    let b = |i: usize, j: usize| if i == j { t - a[i][j] } else { -a[i][j] };
    let minor2 = |i: usize, j: usize| b(i, i) * b(j, j) - b(i, j) * b(j, i);
    let det = b(0, 0) * minor2(1, 2) - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
        + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
    (0..3).all(|i| b(i, i) >= 0) && minor2(0, 1) >= 0 && minor2(0, 2) >= 0 && minor2(1, 2) >= 0 && det >= 0
}

fn gram_exact(a: &[i64]) -> [[i128; 3]; 3] {
    let mut g = [[0i128; 3]; 3];
    for (i, row) in g.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = (0..3).map(|k| a[k * 3 + i] as i128 * a[k * 3 + j] as i128).sum();
        }
    }
    g
}

/// Multiplicity with which an enumerated 3×3 matrix stands for itself and
/// its partner `prim(adj M)`: `None` outside the enumeration region
/// `σ_1(M)² <= k`, 1 when the partner is enumerated too, 2 otherwise.
fn symmetric_weight(e: &[i64], k: i128) -> Option<u64> {
    if !dominates(k, &gram_exact(e)) {
        return None;
    }
    let mut cof = [0i64; 9];
    for i in 0..3 {
        for j in 0..3 {
            let (i1, i2, j1, j2) = ((i + 1) % 3, (i + 2) % 3, (j + 1) % 3, (j + 2) % 3);
            cof[i * 3 + j] = e[i1 * 3 + j1] * e[i2 * 3 + j2] - e[i1 * 3 + j2] * e[i2 * 3 + j1];
        }
    }
    let d2 = cof.iter().fold(0i64, |g, x| g.gcd(x)) as i128;
    // Gram of cof vs Gram of adj = cofᵀ share their top eigenvalue.
    Some(if dominates(k * d2 * d2, &gram_exact(&cof)) { 1 } else { 2 })
}

fn count_shard(ctx: &ShardContext<'_>, first: &[i64]) -> Histogram {
    let grid = &ctx.job.grid;
    let n = ctx.job.n;
    let kernel = ctx.kernel.expect("counting needs a kernel");
    let mut hist = Histogram::new(grid.len());
    let mut e = vec![0i64; n * n];
    e[..n].copy_from_slice(first);
    let record = |e: &[i64], hist: &mut Histogram| {
        hist.candidates += 1;
        let Some(ev) = kernel.evaluate(e) else { return };
        let Some(k) = bin_of(grid, ev.height) else { return };
        let weight = match ctx.symmetric {
            Some(lim) => match symmetric_weight(e, lim) {
                Some(w) => w,
                None => return,
            },
            None => 1,
        };
        hist.rational[k] += weight;
        if ev.integral {
            hist.integral[k] += weight;
        }
    };
    match n {
        2 => {
            for r in ctx.rows {
                e[2..].copy_from_slice(r);
                record(&e, &mut hist);
            }
        }
        3 if ctx.pair_sq_limit.is_some() => {
            let near = ctx.neighbours(first);
            for &i1 in &near {
                e[3..6].copy_from_slice(&ctx.rows[i1]);
                let n1 = ctx.row_norms[i1];
                for &i2 in &near {
                    if ctx.pair_ok(&ctx.rows[i1], n1, i2) {
                        e[6..].copy_from_slice(&ctx.rows[i2]);
                        record(&e, &mut hist);
                    }
                }
            }
        }
        _ => {
            for tail in ShardIter::new(first.to_vec(), ctx.rows.to_vec(), n) {
                record(&tail, &mut hist);
            }
        }
    }
    hist
}

/// Count `N_{S,D}(B, λ)` and `N(B, λ)` at every grid point.
pub fn count(job: &CountJob, workers: usize) -> Result<CountResult> {
    job.validate()?;
    let start = Instant::now();
    let rows = candidate_rows(job.n, job.entry_bound as i64, job.row_norm_sq_limit());
    let firsts: Vec<&Vec<i64>> = rows.iter().filter(|r| is_sign_canonical(r)).collect();
    let kernel = HeightKernel::new(job.n, &job.lambda, &job.divisor, &job.places)
        .with_cutoff(job.max_b() * (1.0 + 1e-9));
    let ctx = ShardContext::new(job, Some(&kernel), &rows);
    let workers = workers.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidJob(format!("thread pool: {e}")))?;
    let len = job.grid.len();
    let hist = pool.install(|| {
        firsts
            .par_iter()
            .map(|first| count_shard(&ctx, first))
            .reduce(|| Histogram::new(len), Histogram::merge)
    });
    let mut rows_out = Vec::with_capacity(len);
    let (mut ci, mut cr) = (0u64, 0u64);
    for (k, &b) in job.grid.iter().enumerate() {
        ci += hist.integral[k];
        cr += hist.rational[k];
        rows_out.push(CountRow { b, integral: ci, rational: cr });
    }
    Ok(CountResult {
        rows: rows_out,
        job: job.clone(),
        wall_time_secs: start.elapsed().as_secs_f64(),
        workers,
        candidates: hist.candidates,
    })
}

/// `points` values log-equispaced between `min` and `max` inclusive.
pub fn geometric_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max > min) || points < 2 {
        return Err(Error::InvalidJob(format!("bad grid {min}..{max} with {points} points")));
    }
    let (lo, hi) = (min.ln(), max.ln());
    Ok((0..points)
        .map(|i| {
            if i == 0 {
                min
            } else if i + 1 == points {
                max
            } else {
                (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp()
            }
        })
        .collect())
}
