//! O(n log n) τ-b kernel over packed 32-bit joint pairs.
//!
//! Same five steps as the generic sorted kernel, but each `(u, v)` pair is
//! packed into one `i32` so both sorts become integer merge sorts whose
//! merges run through an in-register bitonic network:
//!
//! 1. merge sort the packed integers (lexicographic pair order),
//! 2. scan u keys and whole packed values for tie groups,
//! 3. clear the u half, merge sort again counting discordant pairs,
//! 4. scan v keys,
//! 5. apply the numerator identity.
//!
//! The lane backend is picked at runtime; [`Backend::Portable`] runs the
//! same network on plain arrays and works everywhere.

mod merge;
mod network;
#[cfg(target_arch = "x86_64")]
mod simd;

use std::fmt;

pub use merge::{merge_leftover, LeftoverCursors, MergeOptions};
pub use network::{bitonic_merge_pair, LaneVector};

use self::merge::vse_merge_generic;
use self::network::Lanes;
use super::check_pair_input;
use super::sorted::run_tie_sum;
use crate::error::{Error, Result};
use crate::rank::{check_packable, pack, PACKED_RANK_LIMIT};
use crate::tau::{TauCounts, TauResult};

/// Lane count of the portable backend.
pub const PORTABLE_LANES: usize = 16;

type Portable = LaneVector<PORTABLE_LANES>;

/// Register implementation used by the merge network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Backend {
    /// Plain-array lanes, W = 16.
    Portable,
    /// 256-bit registers, W = 8.
    Avx2,
    /// 512-bit registers, W = 16.
    Avx512,
}

impl Backend {
    /// Widest backend the running CPU supports.
    pub fn detect() -> Backend {
        if Backend::Avx512.is_available() {
            Backend::Avx512
        } else if Backend::Avx2.is_available() {
            Backend::Avx2
        } else {
            Backend::Portable
        }
    }

    pub fn is_available(self) -> bool {
        match self {
            Backend::Portable => true,
            #[cfg(target_arch = "x86_64")]
            Backend::Avx2 => std::is_x86_feature_detected!("avx2"),
            #[cfg(target_arch = "x86_64")]
            Backend::Avx512 => std::is_x86_feature_detected!("avx512f"),
            #[cfg(not(target_arch = "x86_64"))]
            _ => false,
        }
    }

    pub fn available() -> Vec<Backend> {
        [Backend::Portable, Backend::Avx2, Backend::Avx512]
            .into_iter()
            .filter(|b| b.is_available())
            .collect()
    }

    pub fn lanes(self) -> usize {
        match self {
            Backend::Portable => PORTABLE_LANES,
            Backend::Avx2 => 8,
            Backend::Avx512 => 16,
        }
    }

    /// Lane width of the hardware registers, 1 for the portable backend.
    pub fn native_lanes(self) -> usize {
        match self {
            Backend::Portable => 1,
            other => other.lanes(),
        }
    }

    fn ensure(self) {
        assert!(
            self.is_available(),
            "{self} backend is not supported by this CPU"
        );
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Portable => "portable",
            Backend::Avx2 => "avx2",
            Backend::Avx512 => "avx512",
        })
    }
}

/// Merges two adjacent ascending runs `input[left..mid)` and
/// `input[mid..right)` into `out[left..right)`.
///
/// With `opts.count` the return value is the number of cross-run pairs
/// where the right element is strictly smaller than the left one.
///
/// # Panics
///
/// If `backend` is not available on this CPU or the ranges are out of
/// bounds.
pub fn vse_merge(
    backend: Backend,
    input: &[i32],
    out: &mut [i32],
    left: usize,
    mid: usize,
    right: usize,
    opts: MergeOptions,
) -> u64 {
    assert!(left <= mid && mid <= right && right <= input.len() && right <= out.len());
    backend.ensure();
    // SAFETY: feature availability checked above
    unsafe {
        match backend {
            Backend::Portable => vse_merge_generic::<Portable>(input, out, left, mid, right, opts),
            #[cfg(target_arch = "x86_64")]
            Backend::Avx2 => merge_avx2(input, out, left, mid, right, opts),
            #[cfg(target_arch = "x86_64")]
            Backend::Avx512 => merge_avx512(input, out, left, mid, right, opts),
            #[cfg(not(target_arch = "x86_64"))]
            _ => unreachable!(),
        }
    }
}

/// Bottom-up merge sort of `data` (using `buffer` as scratch) built on
/// [`vse_merge`]. Returns the summed inversion count when `opts.count`.
pub fn sort_packed(
    backend: Backend,
    data: &mut [i32],
    buffer: &mut [i32],
    opts: MergeOptions,
) -> u64 {
    assert_eq!(data.len(), buffer.len());
    backend.ensure();
    // SAFETY: feature availability checked above
    unsafe {
        match backend {
            Backend::Portable => sort_generic::<Portable>(data, buffer, opts),
            #[cfg(target_arch = "x86_64")]
            Backend::Avx2 => sort_avx2(data, buffer, opts),
            #[cfg(target_arch = "x86_64")]
            Backend::Avx512 => sort_avx512(data, buffer, opts),
            #[cfg(not(target_arch = "x86_64"))]
            _ => unreachable!(),
        }
    }
}

/// One pass of the backend's merge network over two ascending blocks of
/// `backend.lanes()` values; `lo ‖ hi` receives their ascending merge.
///
/// # Panics
///
/// If `backend` is not available or a slice length differs from the lane
/// count.
pub fn network_merge(backend: Backend, a: &[i32], b: &[i32], lo: &mut [i32], hi: &mut [i32]) {
    let w = backend.lanes();
    assert!(a.len() == w && b.len() == w && lo.len() == w && hi.len() == w);
    backend.ensure();
    // SAFETY: feature availability checked above
    unsafe {
        match backend {
            Backend::Portable => network_generic::<Portable>(a, b, lo, hi),
            #[cfg(target_arch = "x86_64")]
            Backend::Avx2 => network_avx2(a, b, lo, hi),
            #[cfg(target_arch = "x86_64")]
            Backend::Avx512 => network_avx512(a, b, lo, hi),
            #[cfg(not(target_arch = "x86_64"))]
            _ => unreachable!(),
        }
    }
}

#[inline(always)]
unsafe fn network_generic<L: Lanes>(a: &[i32], b: &[i32], lo: &mut [i32], hi: &mut [i32]) {
    let (x, y) = L::load(a).merge(L::load(b));
    x.store(lo);
    y.store(hi);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn network_avx2(a: &[i32], b: &[i32], lo: &mut [i32], hi: &mut [i32]) {
    network_generic::<simd::Avx2>(a, b, lo, hi)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn network_avx512(a: &[i32], b: &[i32], lo: &mut [i32], hi: &mut [i32]) {
    network_generic::<simd::Avx512>(a, b, lo, hi)
}

#[inline(always)]
unsafe fn sort_generic<L: Lanes>(data: &mut [i32], buffer: &mut [i32], opts: MergeOptions) -> u64 {
    let n = data.len();
    let mut total = 0u64;
    let mut in_data = true;
    let mut width = 1;
    while width < n {
        let (src, dst): (&[i32], &mut [i32]) = if in_data {
            (&*data, &mut *buffer)
        } else {
            (&*buffer, &mut *data)
        };
        let mut left = 0;
        while left < n {
            let mid = (left + width).min(n);
            let right = (left + 2 * width).min(n);
            total += vse_merge_generic::<L>(src, dst, left, mid, right, opts);
            left += 2 * width;
        }
        in_data = !in_data;
        width *= 2;
    }
    if !in_data {
        data.copy_from_slice(buffer);
    }
    total
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn sort_avx2(data: &mut [i32], buffer: &mut [i32], opts: MergeOptions) -> u64 {
    sort_generic::<simd::Avx2>(data, buffer, opts)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn sort_avx512(data: &mut [i32], buffer: &mut [i32], opts: MergeOptions) -> u64 {
    sort_generic::<simd::Avx512>(data, buffer, opts)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn merge_avx2(
    input: &[i32],
    out: &mut [i32],
    left: usize,
    mid: usize,
    right: usize,
    opts: MergeOptions,
) -> u64 {
    vse_merge_generic::<simd::Avx2>(input, out, left, mid, right, opts)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn merge_avx512(
    input: &[i32],
    out: &mut [i32],
    left: usize,
    mid: usize,
    right: usize,
    opts: MergeOptions,
) -> u64 {
    vse_merge_generic::<simd::Avx512>(input, out, left, mid, right, opts)
}

#[derive(Clone, Copy)]
#[repr(C, align(64))]
struct CacheLine([i32; 16]);

/// `i32` storage whose start is 64-byte aligned.
#[derive(Clone, Default)]
pub struct AlignedBuf {
    lines: Vec<CacheLine>,
    len: usize,
}

impl AlignedBuf {
    pub fn resize(&mut self, len: usize) {
        self.lines.resize(len.div_ceil(16), CacheLine([0; 16]));
        self.len = len;
    }

    pub fn as_slice(&self) -> &[i32] {
        // SAFETY: `lines` holds at least `len` contiguous, initialized i32s
        unsafe { std::slice::from_raw_parts(self.lines.as_ptr().cast::<i32>(), self.len) }
    }

    pub fn as_mut_slice(&mut self) -> &mut [i32] {
        // SAFETY: as above, and the borrow is unique
        unsafe { std::slice::from_raw_parts_mut(self.lines.as_mut_ptr().cast::<i32>(), self.len) }
    }
}

impl fmt::Debug for AlignedBuf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AlignedBuf")
            .field("len", &self.len)
            .finish()
    }
}

/// Per-worker packed array and merge buffer.
#[derive(Debug, Default)]
pub struct VectorScratch {
    packed: AlignedBuf,
    buffer: AlignedBuf,
}

impl VectorScratch {
    pub fn with_capacity(n: usize) -> Self {
        let mut s = VectorScratch::default();
        s.packed.resize(n);
        s.buffer.resize(n);
        s
    }
}

pub fn tau_b_vectorized(u: &[u32], v: &[u32]) -> Result<TauResult> {
    tau_b_vectorized_with(
        u,
        v,
        &mut VectorScratch::with_capacity(u.len()),
        Backend::detect(),
    )
}

pub fn tau_b_vectorized_with(
    u: &[u32],
    v: &[u32],
    scratch: &mut VectorScratch,
    backend: Backend,
) -> Result<TauResult> {
    check_pair_input(u, v)?;
    check_packable(u, v)?;
    let n = u.len();
    scratch.packed.resize(n);
    scratch.buffer.resize(n);
    let packed = scratch.packed.as_mut_slice();
    let buffer = scratch.buffer.as_mut_slice();

    for ((slot, &a), &b) in packed.iter_mut().zip(u).zip(v) {
        if a >= PACKED_RANK_LIMIT || b >= PACKED_RANK_LIMIT {
            return Err(Error::CapacityExceeded(format!(
                "rank pair ({a}, {b}) does not fit 15 bits"
            )));
        }
        *slot = pack(a, b);
    }

    let sort_only = MergeOptions {
        count: false,
        fast_paths: true,
    };
    sort_packed(backend, packed, buffer, sort_only);
    let n1 = run_tie_sum(packed.iter().map(|&x| x >> 16));
    let n3 = run_tie_sum(packed.iter());

    crate::rank::mask_low_half_in_place(packed);
    let n_d = sort_packed(backend, packed, buffer, MergeOptions::default());
    let n2 = run_tie_sum(packed.iter());

    Ok(TauResult::from_counts(TauCounts::from_tie_sums(
        n, n1, n2, n3, n_d,
    )))
}

#[cfg(test)]
mod tests;
