//! All-pairs Kendall rank correlation.
//!
//! Three interchangeable pairwise kernels compute τ-a / τ-b counts for two
//! rank vectors:
//!
//! * [`kernel::naive`]: branch-free O(n²) enumeration (τ-a only),
//! * [`kernel::sorted`]: O(n log n) merge sort with inversion counting,
//! * [`kernel::vectorized`]: O(n log n) merge sort over packed 32-bit pairs
//!   driven by an in-register bitonic merge network.
//!
//! The [`engine`] schedules the symmetric m×m job space through the
//! bijective job/tile numbering in [`index`], in memory-bounded passes.

pub mod engine;
pub mod error;
pub mod index;
pub mod io;
pub mod kernel;
pub mod rank;
pub mod tau;

pub mod cli;

pub use engine::{compute_all_pairs, CellResult, Dataset, EngineConfig, ResultSink, RunSummary};
pub use error::{Error, Result};
pub use index::JobSpace;
pub use kernel::KernelKind;
pub use rank::{rank_transform, PackedPairArray, RankVector};
pub use tau::{TauCounts, TauResult};
