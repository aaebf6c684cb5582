//! O(n log n) τ-b kernel over generic joint pairs.
//!
//! 1. sort the joint pairs lexicographically,
//! 2. scan for u tie groups and joint tie groups,
//! 3. re-sort by v with a bottom-up merge sort that counts discordant pairs,
//! 4. scan for v tie groups,
//! 5. numerator = n0 − n1 − n2 + n3 − 2·n_d.

use super::{bottom_up_merge_sort, check_pair_input};
use crate::error::Result;
use crate::tau::{TauCounts, TauResult};

/// One joint observation `(u_i, v_i)`. Ordering is lexicographic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JointPair {
    pub u: u32,
    pub v: u32,
}

impl JointPair {
    pub fn new(u: u32, v: u32) -> Self {
        JointPair { u, v }
    }
}

/// Reusable pair and merge buffers for one worker.
#[derive(Debug, Default)]
pub struct SortedScratch {
    pairs: Vec<JointPair>,
    buffer: Vec<JointPair>,
}

impl SortedScratch {
    pub fn with_capacity(n: usize) -> Self {
        SortedScratch {
            pairs: Vec::with_capacity(n),
            buffer: Vec::with_capacity(n),
        }
    }
}

/// Stable lexicographic sort of `pairs`; `buffer` must have the same length.
pub fn sort_joint(pairs: &mut [JointPair], buffer: &mut [JointPair]) {
    bottom_up_merge_sort(pairs, buffer, |input, out, left, mid, right| {
        merge_by(input, out, left, mid, right, |a, b| b < a);
        0
    });
}

/// Σ t(t−1)/2 over maximal runs of equal consecutive keys.
pub fn tie_sum(keys: &[u32]) -> u64 {
    run_tie_sum(keys.iter())
}

/// Σ w(w−1)/2 over maximal runs of identical (u, v) pairs.
pub fn joint_tie_sum(pairs: &[JointPair]) -> u64 {
    run_tie_sum(pairs.iter())
}

pub(crate) fn run_tie_sum<K: PartialEq>(mut keys: impl Iterator<Item = K>) -> u64 {
    let Some(mut prev) = keys.next() else {
        return 0;
    };
    let mut total = 0u64;
    let mut run = 1u64;
    for key in keys {
        if key == prev {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
            prev = key;
        }
    }
    total + run * (run - 1) / 2
}

/// Re-sorts lexicographically sorted `pairs` by v and returns the number of
/// discordant pairs. On return `pairs` is ordered by v.
pub fn count_discordant(pairs: &mut [JointPair], buffer: &mut [JointPair]) -> u64 {
    bottom_up_merge_sort(pairs, buffer, merge_count_v)
}

/// Merges `input[left..mid)` and `input[mid..right)` by v into `out`.
/// Every right element strictly below the current left element is
/// discordant with all `mid - l` left elements still pending.
fn merge_count_v(
    input: &[JointPair],
    out: &mut [JointPair],
    left: usize,
    mid: usize,
    right: usize,
) -> u64 {
    let (mut l, mut r, mut p) = (left, mid, left);
    let mut n_d = 0u64;
    while l < mid && r < right {
        if input[r].v < input[l].v {
            n_d += (mid - l) as u64;
            out[p] = input[r];
            r += 1;
        } else {
            out[p] = input[l];
            l += 1;
        }
        p += 1;
    }
    copy_tail(input, out, l, mid, r, right, p);
    n_d
}

fn merge_by<T: Copy>(
    input: &[T],
    out: &mut [T],
    left: usize,
    mid: usize,
    right: usize,
    right_first: impl Fn(&T, &T) -> bool,
) {
    let (mut l, mut r, mut p) = (left, mid, left);
    while l < mid && r < right {
        if right_first(&input[l], &input[r]) {
            out[p] = input[r];
            r += 1;
        } else {
            out[p] = input[l];
            l += 1;
        }
        p += 1;
    }
    copy_tail(input, out, l, mid, r, right, p);
}

#[inline]
fn copy_tail<T: Copy>(
    input: &[T],
    out: &mut [T],
    l: usize,
    mid: usize,
    r: usize,
    right: usize,
    p: usize,
) {
    if l < mid {
        out[p..p + (mid - l)].copy_from_slice(&input[l..mid]);
    } else if r < right {
        out[p..p + (right - r)].copy_from_slice(&input[r..right]);
    }
}

pub fn tau_b_sorted(u: &[u32], v: &[u32]) -> Result<TauResult> {
    tau_b_sorted_with(u, v, &mut SortedScratch::with_capacity(u.len()))
}

pub fn tau_b_sorted_with(u: &[u32], v: &[u32], scratch: &mut SortedScratch) -> Result<TauResult> {
    check_pair_input(u, v)?;
    let n = u.len();
    let SortedScratch { pairs, buffer } = scratch;
    pairs.clear();
    pairs.extend(u.iter().zip(v).map(|(&a, &b)| JointPair::new(a, b)));
    buffer.clear();
    buffer.resize(n, JointPair::default());

    sort_joint(pairs, buffer);
    let n1 = run_tie_sum(pairs.iter().map(|p| p.u));
    let n3 = joint_tie_sum(pairs);
    let n_d = count_discordant(pairs, buffer);
    let n2 = run_tie_sum(pairs.iter().map(|p| p.v));

    Ok(TauResult::from_counts(TauCounts::from_tie_sums(
        n, n1, n2, n3, n_d,
    )))
}
