//! Root systems of split adjoint groups.
//!
//! Simple roots are written in a standard ambient lattice (scaled by 2 for
//! the types whose usual coordinates are half-integral, which leaves every
//! Cartan integer unchanged). Positive roots are generated by closure under
//! simple reflections and converted to simple-root coordinates by an exact
//! rational solve, so the κ coefficients of 2ρ are computed, never tabulated.

use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    A,
    B,
    C,
    D,
    G2,
    F4,
    E6,
    E7,
    E8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CartanType {
    family: Family,
    rank: usize,
}

impl CartanType {
    pub fn new(family: Family, rank: usize) -> Result<Self> {
        let ok = match family {
            Family::A => rank >= 1,
            Family::B => rank >= 2,
            Family::C => rank >= 2,
            Family::D => rank >= 4,
            Family::G2 => rank == 2,
            Family::F4 => rank == 4,
            Family::E6 => rank == 6,
            Family::E7 => rank == 7,
            Family::E8 => rank == 8,
        };
        if !ok {
            return Err(Error::CartanType(format!("{family:?} does not admit rank {rank}")));
        }
        Ok(CartanType { family, rank })
    }

    /// Type A_{n-1}, the root system of PGL_n.
    pub fn pgl(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::CartanType(format!("PGL_{n} needs n >= 2")));
        }
        CartanType::new(Family::A, n - 1)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Matrix size n for type A_{n-1}; `None` for other families.
    pub fn matrix_size(&self) -> Option<usize> {
        (self.family == Family::A).then_some(self.rank + 1)
    }

    /// Dimension of the group.
    pub fn dimension(&self) -> usize {
        let r = self.rank;
        match self.family {
            Family::A => r * (r + 2),
            Family::B | Family::C => r * (2 * r + 1),
            Family::D => r * (2 * r - 1),
            Family::G2 => 14,
            Family::F4 => 52,
            Family::E6 => 78,
            Family::E7 => 133,
            Family::E8 => 248,
        }
    }
}

impl fmt::Display for CartanType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::A => write!(f, "A{}", self.rank),
            Family::B => write!(f, "B{}", self.rank),
            Family::C => write!(f, "C{}", self.rank),
            Family::D => write!(f, "D{}", self.rank),
            Family::G2 => write!(f, "G2"),
            Family::F4 => write!(f, "F4"),
            Family::E6 => write!(f, "E6"),
            Family::E7 => write!(f, "E7"),
            Family::E8 => write!(f, "E8"),
        }
    }
}

impl FromStr for CartanType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_uppercase();
        let bad = || Error::CartanType(format!("cannot parse {s:?}"));
        let mut chars = t.chars();
        let letter = chars.next().ok_or_else(bad)?;
        let rank: usize = chars.as_str().parse().map_err(|_| bad())?;
        let family = match (letter, rank) {
            ('A', _) => Family::A,
            ('B', _) => Family::B,
            ('C', _) => Family::C,
            ('D', _) => Family::D,
            ('G', _) => Family::G2,
            ('F', _) => Family::F4,
            ('E', 6) => Family::E6,
            ('E', 7) => Family::E7,
            ('E', 8) => Family::E8,
            ('E', _) => return Err(Error::CartanType(format!("E{rank} is not a root system"))),
            _ => return Err(bad()),
        };
        CartanType::new(family, rank)
    }
}

/// Combinatorial data of a reduced crystallographic root system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootDatum {
    pub cartan_type: CartanType,
    /// Simple roots in ambient coordinates, Bourbaki order.
    pub simple_roots: Vec<Vec<i64>>,
    /// Positive roots in ambient coordinates.
    pub positive_roots: Vec<Vec<i64>>,
    /// Positive roots in the simple-root basis.
    pub positive_root_coords: Vec<Vec<i64>>,
    /// `cartan_matrix[i][j] = 2 (α_i, α_j) / (α_i, α_i)`.
    pub cartan_matrix: Vec<Vec<i64>>,
    /// Fundamental coweights in ambient coordinates: `(α_i, ω̌_j) = δ_ij`.
    pub fundamental_coweights: Vec<Vec<Rational64>>,
    /// Coefficients of 2ρ in the simple-root basis.
    pub kappa: Vec<i64>,
}

impl RootDatum {
    pub fn rank(&self) -> usize {
        self.simple_roots.len()
    }

    /// Sum of all positive roots, in simple-root coordinates.
    pub fn two_rho(&self) -> Vec<i64> {
        let mut out = vec![0; self.rank()];
        for c in &self.positive_root_coords {
            for (o, x) in out.iter_mut().zip(c) {
                *o += x;
            }
        }
        out
    }

    /// `⟨2ρ, a⟩ = Σ κ_α a_α` for a in the fundamental-coweight basis.
    pub fn two_rho_pairing(&self, a: &[u32]) -> u64 {
        self.kappa.iter().zip(a).map(|(&k, &x)| k as u64 * x as u64).sum()
    }
}

fn e(dim: usize, i: usize, scale: i64) -> Vec<i64> {
    let mut v = vec![0; dim];
    v[i] = scale;
    v
}

fn diff(dim: usize, i: usize, j: usize, scale: i64) -> Vec<i64> {
    let mut v = vec![0; dim];
    v[i] = scale;
    v[j] = -scale;
    v
}

fn e8_simple_roots() -> Vec<Vec<i64>> {
    // Doubled Bourbaki coordinates.
    let mut roots = vec![vec![1, -1, -1, -1, -1, -1, -1, 1], vec![2, 2, 0, 0, 0, 0, 0, 0]];
    for i in 0..6 {
        roots.push(diff(8, i + 1, i, 2));
    }
    roots
}

fn ambient_simple_roots(t: CartanType) -> Vec<Vec<i64>> {
    let r = t.rank;
    match t.family {
        Family::A => (0..r).map(|i| diff(r + 1, i, i + 1, 1)).collect(),
        Family::B => {
            let mut v: Vec<_> = (0..r - 1).map(|i| diff(r, i, i + 1, 1)).collect();
            v.push(e(r, r - 1, 1));
            v
        }
        Family::C => {
            let mut v: Vec<_> = (0..r - 1).map(|i| diff(r, i, i + 1, 1)).collect();
            v.push(e(r, r - 1, 2));
            v
        }
        Family::D => {
            let mut v: Vec<_> = (0..r - 1).map(|i| diff(r, i, i + 1, 1)).collect();
            let mut last = vec![0; r];
            last[r - 2] = 1;
            last[r - 1] = 1;
            v.push(last);
            v
        }
        Family::G2 => vec![vec![1, -1, 0], vec![-2, 1, 1]],
        Family::F4 => vec![
            vec![0, 2, -2, 0],
            vec![0, 0, 2, -2],
            vec![0, 0, 0, 2],
            vec![1, -1, -1, -1],
        ],
        Family::E6 => e8_simple_roots().into_iter().take(6).collect(),
        Family::E7 => e8_simple_roots().into_iter().take(7).collect(),
        Family::E8 => e8_simple_roots(),
    }
}

fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve `Σ_i c_i v_i = target` exactly for linearly independent `v_i`.
fn solve_in_basis(basis: &[Vec<i64>], target: &[i64]) -> Option<Vec<Rational64>> {
    // Normal equations G c = (v_i, target) with G the Gram matrix.
    let r = basis.len();
    let mut m: Vec<Vec<Rational64>> = (0..r)
        .map(|i| {
            let mut row: Vec<Rational64> =
                (0..r).map(|j| Rational64::from(dot(&basis[i], &basis[j]))).collect();
            row.push(Rational64::from(dot(&basis[i], target)));
            row
        })
        .collect();
    for col in 0..r {
        let piv = (col..r).find(|&i| !m[i][col].is_zero())?;
        m.swap(col, piv);
        let pv = m[col][col];
        for x in m[col].iter_mut() {
            *x /= pv;
        }
        for i in 0..r {
            if i != col && !m[i][col].is_zero() {
                let f = m[i][col];
                for j in col..=r {
                    let sub = f * m[col][j];
                    m[i][j] -= sub;
                }
            }
        }
    }
    let coeffs: Vec<Rational64> = m.iter().map(|row| row[r]).collect();
    // The normal equations always have a solution; check it reproduces target.
    let dim = target.len();
    for k in 0..dim {
        let s: Rational64 = (0..r).map(|i| coeffs[i] * basis[i][k]).sum();
        if s != Rational64::from(target[k]) {
            return None;
        }
    }
    Some(coeffs)
}

/// Build the root datum for a Cartan type.
pub fn build_root_datum(cartan_type: CartanType) -> RootDatum {
    let simple = ambient_simple_roots(cartan_type);
    let r = simple.len();
    let norms: Vec<i64> = simple.iter().map(|a| dot(a, a)).collect();
    let cartan_matrix: Vec<Vec<i64>> = (0..r)
        .map(|i| (0..r).map(|j| 2 * dot(&simple[i], &simple[j]) / norms[i]).collect())
        .collect();

    // Closure of the simple roots under simple reflections, kept positive.
    // Work in simple-root coordinates: s_i(β) = β - ⟨β, α_i^∨⟩ α_i.
    let mut coords: Vec<Vec<i64>> = (0..r).map(|i| unit(r, i)).collect();
    let mut frontier = coords.clone();
    while let Some(beta) = frontier.pop() {
        for i in 0..r {
            // ⟨β, α_i^∨⟩ = Σ_j β_j ⟨α_j, α_i^∨⟩ = Σ_j β_j cartan[i][j]
            let pairing: i64 = (0..r).map(|j| beta[j] * cartan_matrix[i][j]).sum();
            if pairing >= 0 {
                continue;
            }
            let mut next = beta.clone();
            next[i] -= pairing;
            if !coords.contains(&next) {
                coords.push(next.clone());
                frontier.push(next);
            }
        }
    }
    coords.sort_by_key(|c| (c.iter().sum::<i64>(), c.iter().map(|x| -x).collect::<Vec<_>>()));

    let dim = simple[0].len();
    let positive_roots: Vec<Vec<i64>> = coords
        .iter()
        .map(|c| (0..dim).map(|k| (0..r).map(|i| c[i] * simple[i][k]).sum()).collect())
        .collect();

    // Converting back through the exact solve keeps the two representations honest.
    let positive_root_coords: Vec<Vec<i64>> = positive_roots
        .iter()
        .map(|root| {
            solve_in_basis(&simple, root)
                .expect("positive root lies in the root lattice")
                .into_iter()
                .map(|q| {
                    assert!(q.is_integer(), "non-integral root coordinate");
                    q.to_integer()
                })
                .collect()
        })
        .collect();

    let mut kappa = vec![0; r];
    for c in &positive_root_coords {
        for (k, x) in kappa.iter_mut().zip(c) {
            *k += x;
        }
    }

    let fundamental_coweights = fundamental_coweights(&simple);

    RootDatum {
        cartan_type,
        simple_roots: simple,
        positive_roots,
        positive_root_coords,
        cartan_matrix,
        fundamental_coweights,
        kappa,
    }
}

fn unit(r: usize, i: usize) -> Vec<i64> {
    let mut v = vec![0; r];
    v[i] = 1;
    v
}

/// Dual basis to the simple roots inside their real span.
fn fundamental_coweights(simple: &[Vec<i64>]) -> Vec<Vec<Rational64>> {
    let r = simple.len();
    let dim = simple[0].len();
    // ω̌_j = Σ_k c_jk α_k with Gram · c_j = e_j.
    let gram: Vec<Vec<Rational64>> = (0..r)
        .map(|i| (0..r).map(|j| Rational64::from(dot(&simple[i], &simple[j]))).collect())
        .collect();
    let inv = invert(gram);
    (0..r)
        .map(|j| {
            (0..dim)
                .map(|k| (0..r).map(|i| inv[i][j] * simple[i][k]).sum())
                .collect()
        })
        .collect()
}

fn invert(mut m: Vec<Vec<Rational64>>) -> Vec<Vec<Rational64>> {
    let r = m.len();
    for (i, row) in m.iter_mut().enumerate() {
        for j in 0..r {
            row.push(if i == j { Rational64::one() } else { Rational64::zero() });
        }
    }
    for col in 0..r {
        let piv = (col..r).find(|&i| !m[i][col].is_zero()).expect("Gram matrix is invertible");
        m.swap(col, piv);
        let pv = m[col][col];
        for x in m[col].iter_mut() {
            *x /= pv;
        }
        for i in 0..r {
            if i != col && !m[i][col].is_zero() {
                let f = m[i][col];
                for j in 0..2 * r {
                    let sub = f * m[col][j];
                    m[i][j] -= sub;
                }
            }
        }
    }
    m.into_iter().map(|row| row[r..].to_vec()).collect()
}

/// `Σ_α coeffs_α a_α`, exactly.
pub fn pairing(coeffs: &[Rational64], a: &[Rational64]) -> Result<Rational64> {
    if coeffs.len() != a.len() {
        return Err(Error::LengthMismatch { expected: coeffs.len(), got: a.len() });
    }
    Ok(coeffs.iter().zip(a).map(|(x, y)| x * y).sum())
}

/// True when every positive root has nonnegative simple-root coordinates.
pub fn coordinates_nonnegative(rd: &RootDatum) -> bool {
    rd.positive_root_coords.iter().all(|c| c.iter().all(|x| !x.is_negative()))
}
