//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use rug::Float;

/// `p(0..=n)` by the coin-change recurrence over parts `1..=n`.
pub fn partitions_dp(n: usize) -> Vec<BigUint> {
    let mut p = vec![BigUint::zero(); n + 1];
    p[0] = BigUint::one();
    for part in 1..=n {
        for m in part..=n {
            let add = p[m - part].clone();
            p[m] += add;
        }
    }
    p
}

/// Partitions into distinct parts, 0/1 knapsack.
pub fn distinct_dp(n: usize) -> Vec<BigUint> {
    let mut q = vec![BigUint::zero(); n + 1];
    q[0] = BigUint::one();
    for part in 1..=n {
        for m in (part..=n).rev() {
            let add = q[m - part].clone();
            q[m] += add;
        }
    }
    q
}

/// `prod_{k<=n} S(z^k)^{b_k}` for integer `b_k >= 0` and integer `d_j`,
/// by repeated truncated multiplication.
pub fn integer_product(d: &[i64], b: impl Fn(usize) -> u64, n: usize) -> Vec<BigInt> {
    let mut c = vec![BigInt::zero(); n + 1];
    c[0] = BigInt::one();
    for k in 1..=n {
        for _ in 0..b(k) {
            let mut next = vec![BigInt::zero(); n + 1];
            for (i, ci) in c.iter().enumerate() {
                if ci.is_zero() {
                    continue;
                }
                let mut j = 0;
                while i + j * k <= n {
                    let dj = d.get(j).copied().unwrap_or(0);
                    if dj != 0 {
                        next[i + j * k] += ci * dj;
                    }
                    j += 1;
                }
            }
            c = next;
        }
    }
    c
}

/// Nearest integer of an MPFR value as a decimal string.
pub fn rounded(c: &Float) -> String {
    c.to_integer().expect("finite coefficient").to_string()
}

/// `|c - round(c)|`.
pub fn distance_to_integer(c: &Float) -> f64 {
    let r = Float::with_val(c.prec(), c.to_integer().expect("finite"));
    Float::with_val(c.prec(), c - &r).abs().to_f64()
}
