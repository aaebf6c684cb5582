//! Dense rank transform and packed joint-pair encoding.

use std::cmp::Ordering;
use std::ops::Deref;

use crate::error::{Error, Result};

/// Largest vector length the packed 32-bit representation accepts.
pub const MAX_PACKED_LEN: usize = (1 << 15) - 1;
/// Ranks must stay below this bound to fit 15 bits.
pub const PACKED_RANK_LIMIT: u32 = 1 << 15;

const LOW_MASK: i32 = 0x7fff;

/// Dense 0-based ranks of one variable's observations.
///
/// Tied observations share a rank and the distinct ranks are exactly
/// `0..distinct`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RankVector {
    ranks: Vec<u32>,
    distinct: u32,
}

impl RankVector {
    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Number of distinct values; the largest rank is `distinct - 1`.
    pub fn distinct(&self) -> u32 {
        self.distinct
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.ranks
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.ranks
    }

    /// True when the vector can be fed to the packed vectorized kernel.
    pub fn fits_packed(&self) -> bool {
        self.ranks.len() <= MAX_PACKED_LEN && self.distinct <= PACKED_RANK_LIMIT
    }
}

impl Deref for RankVector {
    type Target = [u32];

    fn deref(&self) -> &[u32] {
        &self.ranks
    }
}

impl AsRef<[u32]> for RankVector {
    fn as_ref(&self) -> &[u32] {
        &self.ranks
    }
}

/// Replaces every observation by its dense rank.
///
/// Values that are not comparable with themselves (NaN) are rejected.
pub fn rank_transform<T: PartialOrd>(values: &[T]) -> Result<RankVector> {
    if values.is_empty() {
        return Err(Error::invalid("cannot rank an empty observation vector"));
    }
    if let Some(pos) = values.iter().position(|v| v.partial_cmp(v).is_none()) {
        return Err(Error::invalid(format!(
            "observation {pos} is not comparable (NaN?)"
        )));
    }

    let mut order: Vec<u32> = (0..values.len() as u32).collect();
    // every value compares with itself, so partial_cmp only fails across
    // exotic PartialOrd impls; treat those as equal
    order.sort_by(|&a, &b| {
        values[a as usize]
            .partial_cmp(&values[b as usize])
            .unwrap_or(Ordering::Equal)
    });

    let mut ranks = vec![0u32; values.len()];
    let mut rank = 0u32;
    let mut prev = order[0] as usize;
    for &idx in &order[1..] {
        let idx = idx as usize;
        if values[idx] > values[prev] {
            rank += 1;
        }
        ranks[idx] = rank;
        prev = idx;
    }
    ranks[order[0] as usize] = 0;

    Ok(RankVector {
        ranks,
        distinct: rank + 1,
    })
}

/// Joint rank pairs packed as `(u << 16) | v` in signed 32-bit integers.
///
/// Bits 15 and 31 are always clear, so signed comparison of two packed
/// values equals lexicographic comparison of the `(u, v)` pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PackedPairArray(Vec<i32>);

impl PackedPairArray {
    pub fn as_slice(&self) -> &[i32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<i32> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn unpack(&self, i: usize) -> (u32, u32) {
        unpack(self.0[i])
    }
}

#[inline]
pub fn pack(u: u32, v: u32) -> i32 {
    ((u << 16) | v) as i32
}

#[inline]
pub fn unpack(packed: i32) -> (u32, u32) {
    ((packed >> 16) as u32, (packed & LOW_MASK) as u32)
}

pub(crate) fn check_packable(u: &[u32], v: &[u32]) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    if u.len() > MAX_PACKED_LEN {
        return Err(Error::CapacityExceeded(format!(
            "n = {} exceeds the packed limit of {MAX_PACKED_LEN}",
            u.len()
        )));
    }
    Ok(())
}

/// Packs `u`/`v` into `out`, which is cleared first.
pub fn pack_pairs_into(u: &[u32], v: &[u32], out: &mut Vec<i32>) -> Result<()> {
    check_packable(u, v)?;
    out.clear();
    out.reserve(u.len());
    for (&a, &b) in u.iter().zip(v) {
        if a >= PACKED_RANK_LIMIT || b >= PACKED_RANK_LIMIT {
            return Err(Error::CapacityExceeded(format!(
                "rank pair ({a}, {b}) does not fit 15 bits"
            )));
        }
        out.push(pack(a, b));
    }
    Ok(())
}

pub fn pack_pairs(u: &[u32], v: &[u32]) -> Result<PackedPairArray> {
    let mut out = Vec::new();
    pack_pairs_into(u, v, &mut out)?;
    Ok(PackedPairArray(out))
}

/// Keeps only the v rank (bits 0–14) of every packed value.
pub fn mask_low_half(packed: &PackedPairArray) -> PackedPairArray {
    let mut out = packed.0.clone();
    mask_low_half_in_place(&mut out);
    PackedPairArray(out)
}

pub fn mask_low_half_in_place(packed: &mut [i32]) {
    for x in packed {
        *x &= LOW_MASK;
    }
}
