//! In-register bitonic merge network.
//!
//! Two ascending W-lane vectors are merged by reversing the second one (the
//! concatenation is then bitonic) and running log2(2W) levels of min/max
//! compare-exchange: one across the two vectors, then half-cleaners at lane
//! distance W/2, W/4, …, 1 inside each vector.

/// Widest lane count any backend uses; sizes the partial-load staging array.
pub(crate) const MAX_LANES: usize = 64;

/// A vector of `W` signed 32-bit lanes, lane 0 first.
///
/// This is the portable form of the network; SIMD backends implement the
/// same operations on native registers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LaneVector<const W: usize>(pub [i32; W]);

impl<const W: usize> LaneVector<W> {
    pub fn splat(x: i32) -> Self {
        LaneVector([x; W])
    }

    /// Builds a vector from exactly `W` values.
    pub fn from_slice(src: &[i32]) -> Self {
        let mut lanes = [0; W];
        lanes.copy_from_slice(&src[..W]);
        LaneVector(lanes)
    }

    pub fn lanes(&self) -> &[i32; W] {
        &self.0
    }

    pub fn is_sorted(&self) -> bool {
        self.0.windows(2).all(|w| w[0] <= w[1])
    }
}

/// Merges two ascending vectors: `lo ‖ hi` is the ascending sort of all
/// `2W` inputs. Constant work per call regardless of the data.
pub fn bitonic_merge_pair<const W: usize>(
    a: LaneVector<W>,
    b: LaneVector<W>,
) -> (LaneVector<W>, LaneVector<W>) {
    assert!(W.is_power_of_two(), "lane count must be a power of two");
    let mut lo = a.0;
    let mut hi = b.0;
    hi.reverse();
    for i in 0..W {
        let (x, y) = (lo[i], hi[i]);
        lo[i] = x.min(y);
        hi[i] = x.max(y);
    }
    let mut dist = W / 2;
    while dist > 0 {
        half_clean(&mut lo, dist);
        half_clean(&mut hi, dist);
        dist /= 2;
    }
    (LaneVector(lo), LaneVector(hi))
}

#[inline(always)]
fn half_clean<const W: usize>(x: &mut [i32; W], dist: usize) {
    for i in 0..W {
        if i & dist == 0 {
            let j = i | dist;
            let (p, q) = (x[i], x[j]);
            x[i] = p.min(q);
            x[j] = p.max(q);
        }
    }
}

/// Register operations the vectorized merge is generic over.
///
/// # Safety
///
/// Implementations may use CPU features that are not part of the compile
/// target. Every method is `unsafe`: callers must have verified that the
/// features the implementation relies on are present.
pub(crate) unsafe trait Lanes: Copy {
    const WIDTH: usize;

    /// Loads `WIDTH` values; `src` must hold at least that many.
    unsafe fn load(src: &[i32]) -> Self;

    /// Stores `WIDTH` values; `dst` must hold at least that many.
    unsafe fn store(self, dst: &mut [i32]);

    unsafe fn reduce_min(self) -> i32;

    unsafe fn reduce_max(self) -> i32;

    unsafe fn merge(self, other: Self) -> (Self, Self);

    /// Loads `src.len() < WIDTH` values, padding the remaining lanes with
    /// `i32::MAX`.
    #[inline(always)]
    unsafe fn load_partial(src: &[i32]) -> Self {
        let mut staged = [i32::MAX; MAX_LANES];
        staged[..src.len()].copy_from_slice(src);
        Self::load(&staged)
    }

    /// Stores the first `dst.len()` lanes.
    #[inline(always)]
    unsafe fn store_partial(self, dst: &mut [i32]) {
        let mut staged = [0; MAX_LANES];
        self.store(&mut staged);
        let k = dst.len();
        dst.copy_from_slice(&staged[..k]);
    }

    #[inline(always)]
    unsafe fn lane(self, i: usize) -> i32 {
        let mut staged = [0; MAX_LANES];
        self.store(&mut staged);
        staged[i]
    }
}

unsafe impl<const W: usize> Lanes for LaneVector<W> {
    const WIDTH: usize = W;

    #[inline(always)]
    unsafe fn load(src: &[i32]) -> Self {
        LaneVector::from_slice(src)
    }

    #[inline(always)]
    unsafe fn store(self, dst: &mut [i32]) {
        dst[..W].copy_from_slice(&self.0);
    }

    #[inline(always)]
    unsafe fn reduce_min(self) -> i32 {
        self.0.iter().copied().min().unwrap_or(i32::MAX)
    }

    #[inline(always)]
    unsafe fn reduce_max(self) -> i32 {
        self.0.iter().copied().max().unwrap_or(i32::MIN)
    }

    #[inline(always)]
    unsafe fn merge(self, other: Self) -> (Self, Self) {
        bitonic_merge_pair(self, other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_merge(a: &[i32], b: &[i32]) -> Vec<i32> {
        let mut all = [a, b].concat();
        all.sort();
        all
    }

    #[test]
    fn interleaved() {
        let (lo, hi) = bitonic_merge_pair(LaneVector([1, 3, 5, 7]), LaneVector([2, 4, 6, 8]));
        assert_eq!(lo.0, [1, 2, 3, 4]);
        assert_eq!(hi.0, [5, 6, 7, 8]);
    }

    #[test]
    fn disjoint_ranges_swap() {
        let (lo, hi) = bitonic_merge_pair(LaneVector([5, 6, 7, 8]), LaneVector([1, 2, 3, 4]));
        assert_eq!(lo.0, [1, 2, 3, 4]);
        assert_eq!(hi.0, [5, 6, 7, 8]);
    }

    #[test]
    fn all_zero() {
        let z = LaneVector::<16>::splat(0);
        assert_eq!(bitonic_merge_pair(z, z), (z, z));
    }

    fn zero_one_exhaustive<const W: usize>() {
        // sorted 0/1 vectors are determined by their count of zeros
        for za in 0..=W {
            for zb in 0..=W {
                let mut a = [1; W];
                a[..za].fill(0);
                let mut b = [1; W];
                b[..zb].fill(0);
                let (lo, hi) = bitonic_merge_pair(LaneVector(a), LaneVector(b));
                let got = [&lo.0[..], &hi.0[..]].concat();
                assert_eq!(got, scalar_merge(&a, &b), "W={W} za={za} zb={zb}");
            }
        }
    }

    #[test]
    fn zero_one_principle_all_widths() {
        zero_one_exhaustive::<1>();
        zero_one_exhaustive::<2>();
        zero_one_exhaustive::<4>();
        zero_one_exhaustive::<8>();
        zero_one_exhaustive::<16>();
        zero_one_exhaustive::<32>();
    }

    #[test]
    fn random_sorted_pairs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let mut a: [i32; 8] = std::array::from_fn(|_| rng.random_range(-20..20));
            let mut b: [i32; 8] = std::array::from_fn(|_| rng.random_range(-20..20));
            a.sort();
            b.sort();
            let (lo, hi) = bitonic_merge_pair(LaneVector(a), LaneVector(b));
            assert_eq!([&lo.0[..], &hi.0[..]].concat(), scalar_merge(&a, &b));
        }
    }
}
