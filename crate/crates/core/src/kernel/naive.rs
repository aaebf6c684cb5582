//! Quadratic τ-a kernel with a branch-free inner loop.

use crate::error::{Error, Result};
use crate::tau::TauResult;

/// `(x > 0) - (x < 0)` without a data-dependent branch.
#[inline(always)]
pub fn sign3(x: i64) -> i64 {
    (x > 0) as i64 - (x < 0) as i64
}

/// n_c − n_d by enumerating every pair of observations.
///
/// Runtime depends only on `n`. Pair products are taken in 64-bit, which
/// holds for any ranks below 2³¹ (dense ranks of up to 2³¹ observations).
pub fn tau_a_naive(u: &[u32], v: &[u32]) -> Result<TauResult> {
    if u.len() != v.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    if u.len() < 2 {
        return Err(Error::invalid("tau needs at least two observations"));
    }
    Ok(TauResult::tau_a_only(u.len(), numerator(u, v)))
}

fn numerator(u: &[u32], v: &[u32]) -> i64 {
    let mut total = 0i64;
    for i in 1..u.len() {
        let a = u[i] as i64;
        let b = v[i] as i64;
        total += u[..i]
            .iter()
            .zip(&v[..i])
            .map(|(&uj, &vj)| sign3((a - uj as i64) * (b - vj as i64)))
            .sum::<i64>();
    }
    total
}
