//! Pairwise τ kernels and the per-worker dispatch around them.

pub mod naive;
pub mod sorted;
pub mod vectorized;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tau::TauResult;

pub use naive::tau_a_naive;
pub use sorted::tau_b_sorted;
pub use vectorized::{tau_b_vectorized, Backend};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Naive,
    Sorted,
    Vectorized,
}

impl KernelKind {
    pub const ALL: [KernelKind; 3] = [
        KernelKind::Naive,
        KernelKind::Sorted,
        KernelKind::Vectorized,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Naive => "naive",
            KernelKind::Sorted => "sorted",
            KernelKind::Vectorized => "vectorized",
        }
    }

    /// Stable one-byte code used in binary output headers.
    pub fn code(self) -> u8 {
        match self {
            KernelKind::Naive => 0,
            KernelKind::Sorted => 1,
            KernelKind::Vectorized => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        KernelKind::ALL.into_iter().find(|k| k.code() == code)
    }

    /// Whether results carry tie sums and τ-b.
    pub fn computes_tau_b(self) -> bool {
        self != KernelKind::Naive
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(KernelKind::Naive),
            "sorted" => Ok(KernelKind::Sorted),
            "vectorized" => Ok(KernelKind::Vectorized),
            other => Err(Error::Config(format!("unknown kernel `{other}`"))),
        }
    }
}

/// Scratch owned by one worker and reused for every cell it computes.
#[derive(Debug)]
pub struct Scratch {
    kind: KernelKind,
    backend: Backend,
    sorted: sorted::SortedScratch,
    vector: vectorized::VectorScratch,
}

impl Scratch {
    pub fn new(kind: KernelKind, n: usize) -> Self {
        Self::with_backend(kind, n, Backend::detect())
    }

    pub fn with_backend(kind: KernelKind, n: usize, backend: Backend) -> Self {
        let (sorted_cap, vector_cap) = match kind {
            KernelKind::Naive => (0, 0),
            KernelKind::Sorted => (n, 0),
            KernelKind::Vectorized => (0, n),
        };
        Scratch {
            kind,
            backend,
            sorted: sorted::SortedScratch::with_capacity(sorted_cap),
            vector: vectorized::VectorScratch::with_capacity(vector_cap),
        }
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn compute(&mut self, u: &[u32], v: &[u32]) -> Result<TauResult> {
        match self.kind {
            KernelKind::Naive => naive::tau_a_naive(u, v),
            KernelKind::Sorted => sorted::tau_b_sorted_with(u, v, &mut self.sorted),
            KernelKind::Vectorized => {
                vectorized::tau_b_vectorized_with(u, v, &mut self.vector, self.backend)
            }
        }
    }
}

pub(crate) fn check_pair_input(u: &[u32], v: &[u32]) -> Result<()> {
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
    Ok(())
}

/// Bottom-up merge sort driver: merges runs of width 1, 2, 4, … alternating
/// between `data` and `buffer`, and leaves the result in `data`. Returns the
/// sum of the values `merge` reports.
pub(crate) fn bottom_up_merge_sort<T: Copy>(
    data: &mut [T],
    buffer: &mut [T],
    mut merge: impl FnMut(&[T], &mut [T], usize, usize, usize) -> u64,
) -> u64 {
    let n = data.len();
    assert_eq!(buffer.len(), n, "merge buffer must match the data length");
    let mut total = 0u64;
    let mut in_data = true;
    let mut width = 1;
    while width < n {
        let (src, dst): (&[T], &mut [T]) = if in_data {
            (&*data, &mut *buffer)
        } else {
            (&*buffer, &mut *data)
        };
        let mut left = 0;
        while left < n {
            let mid = (left + width).min(n);
            let right = (left + 2 * width).min(n);
            total += merge(src, dst, left, mid, right);
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
