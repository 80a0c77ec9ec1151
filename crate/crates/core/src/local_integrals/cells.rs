//! Volumes of double cosets `K t(a) K` in PGL_n(ℚ_p) with `vol(K) = 1`.
//!
//! The volume is the number of lattices `L ⊂ ℤ_p^n` with `ℤ_p^n / L` of
//! elementary-divisor type `(p^{e_1}, …, p^{e_n})`, `e_{i+1} - e_i = a_i`:
//!
//! `vol = p^{⟨2ρ,a⟩ - P} · [n]_p! / Π_b [m_b]_p!`
//!
//! where the `m_b` are the lengths of the runs of equal `e_i` and `P` is the
//! degree of the Gaussian multinomial.

use crate::error::{Error, Result};
use crate::primes::is_prime;

/// `⟨2ρ, a⟩` for PGL_n with `a` in fundamental-coweight coordinates.
pub fn two_rho_pairing(n: usize, a: &[u32]) -> u64 {
    a.iter().enumerate().map(|(i, &x)| ((i + 1) * (n - 1 - i)) as u64 * x as u64).sum()
}

/// Lengths of the runs of equal Smith exponents.
fn blocks(n: usize, a: &[u32]) -> Vec<usize> {
    let mut out = vec![1];
    for &x in &a[..n - 1] {
        if x == 0 {
            *out.last_mut().unwrap() += 1;
        } else {
            out.push(1);
        }
    }
    out
}

fn q_factorial_int(k: usize, p: u128) -> Option<u128> {
    let mut acc: u128 = 1;
    for j in 1..=k {
        let mut qj: u128 = 0;
        for _ in 0..j {
            qj = qj.checked_mul(p)?.checked_add(1)?;
        }
        acc = acc.checked_mul(qj)?;
    }
    Some(acc)
}

/// Exact volume of `K t(a) K`.
pub fn cell_volume(n: usize, p: u64, a: &[u32]) -> Result<u128> {
    if a.len() + 1 != n {
        return Err(Error::LengthMismatch { expected: n.saturating_sub(1), got: a.len() });
    }
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let overflow = || Error::InvalidJob(format!("cell volume for n={n}, p={p}, a={a:?} overflows u128"));
    let m = blocks(n, a);
    let degree = (n * (n - 1) / 2 - m.iter().map(|k| k * (k - 1) / 2).sum::<usize>()) as u64;
    let mut multinomial = q_factorial_int(n, p as u128).ok_or_else(overflow)?;
    for &k in &m {
        multinomial /= q_factorial_int(k, p as u128).ok_or_else(overflow)?;
    }
    let exp = two_rho_pairing(n, a) - degree;
    let pow = (p as u128).checked_pow(exp as u32).ok_or_else(overflow)?;
    pow.checked_mul(multinomial).ok_or_else(overflow)
}

/// `vol(K t(a) K) / p^{⟨2ρ,a⟩}` as a float; depends only on which `a_i` are nonzero.
///
/// `support[i]` says whether `a_i > 0`.
pub fn support_ratio(p: u64, support: &[bool]) -> f64 {
    let q = 1.0 / p as f64;
    let q_fact = |k: usize| -> f64 {
        let mut acc = 1.0;
        let mut qj = 0.0;
        let mut pow = 1.0;
        for _ in 0..k {
            qj += pow;
            pow *= q;
            acc *= qj;
        }
        acc
    };
    let a: Vec<u32> = support.iter().map(|&b| b as u32).collect();
    let n = support.len() + 1;
    let mut r = q_fact(n);
    for k in blocks(n, &a) {
        r /= q_fact(k);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heights::{smith_exponents, IntMatrix};

    /// Count column-style Hermite normal forms whose Smith exponents give `a`.
    fn hnf_oracle(n: usize, p: u64, a: &[u32]) -> u128 {
        let mut e = vec![0u32];
        for &x in a {
            e.push(e.last().unwrap() + x);
        }
        let total: u32 = e.iter().sum();
        let mut count = 0;
        let mut diag = vec![0u32; n];
        fn diagonals(i: usize, left: u32, diag: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if i + 1 == diag.len() {
                diag[i] = left;
                out.push(diag.clone());
                return;
            }
            for d in 0..=left {
                diag[i] = d;
                diagonals(i + 1, left - d, diag, out);
            }
        }
        let mut all = Vec::new();
        diagonals(0, total, &mut diag, &mut all);
        for d in all {
            let h: Vec<i64> = d.iter().map(|&k| (p as i64).pow(k)).collect();
            // entries (i, j), i < j, reduced modulo the diagonal entry of row i
            let slots: Vec<(usize, usize)> =
                (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
            let sizes: Vec<i64> = slots.iter().map(|&(i, _)| h[i]).collect();
            let mut idx = vec![0i64; slots.len()];
            loop {
                let mut data = vec![0i64; n * n];
                for i in 0..n {
                    data[i * n + i] = h[i];
                }
                for (k, &(i, j)) in slots.iter().enumerate() {
                    data[i * n + j] = idx[k];
                }
                let m = IntMatrix::new(n, data).unwrap();
                if smith_exponents(&m, p).unwrap() == e {
                    count += 1;
                }
                let mut k = 0;
                loop {
                    if k == idx.len() {
                        break;
                    }
                    idx[k] += 1;
                    if idx[k] < sizes[k] {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == idx.len() {
                    break;
                }
            }
        }
        count
    }

    #[test]
    fn trivial_cell() {
        for n in 2..6 {
            assert_eq!(cell_volume(n, 7, &vec![0; n - 1]).unwrap(), 1);
        }
    }

    #[test]
    fn rank_one_cells() {
        for p in [2u64, 3, 5, 7, 11] {
            for k in 1..4u32 {
                let want = (p as u128).pow(k) + (p as u128).pow(k - 1);
                assert_eq!(cell_volume(2, p, &[k]).unwrap(), want);
            }
        }
    }

    #[test]
    fn matches_hnf_oracle() {
        for p in [2u64, 3] {
            for a in [[1u32, 0], [0, 1], [1, 1], [2, 0], [2, 1]] {
                assert_eq!(cell_volume(3, p, &a).unwrap(), hnf_oracle(3, p, &a), "p={p} a={a:?}");
            }
        }
        assert_eq!(cell_volume(3, 5, &[1, 0]).unwrap(), 31);
        assert_eq!(hnf_oracle(3, 5, &[1, 0]), 31);
        assert_eq!(cell_volume(4, 2, &[1, 0, 1]).unwrap(), hnf_oracle(4, 2, &[1, 0, 1]));
        assert_eq!(cell_volume(2, 5, &[2]).unwrap(), hnf_oracle(2, 5, &[2]));
    }

    #[test]
    fn ratio_matches_exact_volume() {
        for (n, p, a) in [(3usize, 5u64, vec![2u32, 0]), (3, 2, vec![1, 3]), (4, 3, vec![0, 2, 1])] {
            let exact = cell_volume(n, p, &a).unwrap() as f64 / (p as f64).powi(two_rho_pairing(n, &a) as i32);
            let supp: Vec<bool> = a.iter().map(|&x| x > 0).collect();
            assert!((support_ratio(p, &supp) - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn volume_bound_constant() {
        // vol <= p^{⟨2ρ,a⟩}(1 + C/p) holds with C = 3 for every p >= 3 and fails at p = 2
        // for n = 3, a = (1, 1), where the ratio is 21/8 = 1 + 3.25/2.
        let mut worst_p2: f64 = 0.0;
        for n in [2usize, 3] {
            for p in crate::primes::primes_up_to(31) {
                for a0 in 0..=4u32 {
                    for a1 in 0..=(if n == 3 { 4 - a0 } else { 0 }) {
                        let a: Vec<u32> = if n == 2 { vec![a0] } else { vec![a0, a1] };
                        let ratio = cell_volume(n, p, &a).unwrap() as f64
                            / (p as f64).powi(two_rho_pairing(n, &a) as i32);
                        let c = (ratio - 1.0) * p as f64;
                        if p == 2 {
                            worst_p2 = worst_p2.max(c);
                        } else {
                            assert!(c <= 3.0, "n={n} p={p} a={a:?} C={c}");
                        }
                        assert!(c <= 3.25 + 1e-12);
                    }
                }
            }
        }
        assert!((worst_p2 - 3.25).abs() < 1e-12);
        // ratio tends to 1 for fixed nonzero a
        let r = |p: u64| cell_volume(3, p, &[1, 1]).unwrap() as f64 / (p as f64).powi(4);
        assert!(r(101) < r(31) && r(31) < r(7) && (r(1009) - 1.0) < 3e-3);
    }
}
