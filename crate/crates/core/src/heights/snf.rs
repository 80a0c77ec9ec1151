//! Local Smith normal form: p-adic valuations of elementary divisors.
//!
//! Elimination runs over ℤ/p^N with N = v_p(det) + 1, which is enough to
//! see every elementary divisor exponent and keeps entries bounded.

use crate::error::{Error, Result};
use crate::primes::{is_prime, valuation};

use super::IntMatrix;

fn inverse_mod(u: i128, m: i128) -> i128 {
    let (mut r0, mut r1) = (m, u.rem_euclid(m));
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    debug_assert_eq!(r0, 1, "unit expected");
    t0.rem_euclid(m)
}

/// Exponents `e_1 <= … <= e_n` of p in the Smith normal form of `m`.
pub fn smith_exponents(m: &IntMatrix, p: u64) -> Result<Vec<u32>> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let det = m.det()?;
    if det == 0 {
        return Err(Error::Singular);
    }
    Ok(smith_exponents_with_det(m, p, det))
}

/// As [`smith_exponents`], for a prime `p` and a known nonzero determinant.
pub fn smith_exponents_with_det(m: &IntMatrix, p: u64, det: i128) -> Vec<u32> {
    let n = m.n;
    let v = valuation(det, p);
    if v == 0 {
        return vec![0; n];
    }
    let pi = p as i128;
    let cap = v + 1;
    let modulus = pi.checked_pow(cap).filter(|&q| q < (1i128 << 62)).expect("p-power modulus fits");
    let mut a: Vec<i128> = m.data.iter().map(|&x| (x as i128).rem_euclid(modulus)).collect();
    let val = |x: i128| -> u32 {
        if x == 0 {
            cap
        } else {
            valuation(x, p).min(cap)
        }
    };
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        // Pivot of minimal valuation in the trailing block.
        let (mut bi, mut bj, mut bv) = (k, k, u32::MAX);
        for i in k..n {
            for j in k..n {
                let vv = val(a[i * n + j]);
                if vv < bv {
                    (bi, bj, bv) = (i, j, vv);
                }
            }
        }
        if bv >= cap {
            out.extend(std::iter::repeat_n(cap, n - k));
            break;
        }
        for j in 0..n {
            a.swap(k * n + j, bi * n + j);
        }
        for i in 0..n {
            a.swap(i * n + k, i * n + bj);
        }
        let pe = pi.pow(bv);
        let unit_inv = inverse_mod(a[k * n + k] / pe, modulus);
        for i in k + 1..n {
            let x = a[i * n + k];
            if x == 0 {
                continue;
            }
            let f = ((x / pe) % modulus * unit_inv) % modulus;
            for j in k..n {
                a[i * n + j] = (a[i * n + j] - f * a[k * n + j]).rem_euclid(modulus);
            }
        }
        for j in k + 1..n {
            let x = a[k * n + j];
            if x == 0 {
                continue;
            }
            let f = ((x / pe) % modulus * unit_inv) % modulus;
            for i in k..n {
                a[i * n + j] = (a[i * n + j] - f * a[i * n + k]).rem_euclid(modulus);
            }
        }
        out.push(bv);
    }
    out.sort_unstable();
    debug_assert_eq!(out.iter().sum::<u32>(), v);
    out
}
