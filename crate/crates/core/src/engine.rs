//! Tiled, multi-pass, statically scheduled all-pairs driver.
//!
//! The shard's tile range is cut into passes of at most `pass_tiles` tiles.
//! Each pass computes into one flat buffer laid out tile after tile in
//! ascending id order; worker `t` owns the tiles whose id is `t` modulo the
//! worker count and writes only its tiles' slices. With overlap enabled the
//! coordinator hands pass `k` to the sink while the workers fill pass `k+1`
//! in the second buffer.

use std::ops::Range;
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, warn};

use crate::error::{Error, Result};
use crate::index::{shard_range, JobSpace};
use crate::kernel::{Backend, KernelKind, Scratch};
use crate::rank::RankVector;
use crate::tau::TauResult;

pub const DEFAULT_TILE_SIZE: u64 = 8;
pub const DEFAULT_PASS_TILES: u64 = 4096;

/// `m` ranked variables of common length `n`.
#[derive(Clone, Debug)]
pub struct Dataset {
    labels: Vec<String>,
    ranks: Vec<RankVector>,
    n: usize,
    packed_ready: bool,
}

impl Dataset {
    pub fn new(labels: Vec<String>, ranks: Vec<RankVector>) -> Result<Self> {
        if ranks.is_empty() {
            return Err(Error::invalid("dataset has no variables"));
        }
        if labels.len() != ranks.len() {
            return Err(Error::invalid(format!(
                "{} labels for {} variables",
                labels.len(),
                ranks.len()
            )));
        }
        let n = ranks[0].len();
        if let Some((k, r)) = ranks.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::invalid(format!(
                "variable {k} has length {}, expected {n}",
                r.len()
            )));
        }
        let mut sorted: Vec<&str> = labels.iter().map(String::as_str).collect();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("duplicate label {:?}", w[0])));
        }
        let packed_ready = ranks.iter().all(RankVector::fits_packed);
        Ok(Dataset {
            labels,
            ranks,
            n,
            packed_ready,
        })
    }

    /// Labels `V0, V1, …`.
    pub fn from_ranks(ranks: Vec<RankVector>) -> Result<Self> {
        let labels = (0..ranks.len()).map(|k| format!("V{k}")).collect();
        Self::new(labels, ranks)
    }

    pub fn m(&self) -> usize {
        self.ranks.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn ranks(&self) -> &[RankVector] {
        &self.ranks
    }

    /// Every pair can use the packed 32-bit representation.
    pub fn packed_ready(&self) -> bool {
        self.packed_ready
    }
}

/// One upper-triangle cell, `i ≤ j`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CellResult {
    pub i: u32,
    pub j: u32,
    pub result: TauResult,
}

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub kernel: KernelKind,
    /// `None` picks the widest backend the CPU supports.
    pub backend: Option<Backend>,
    pub workers: usize,
    pub tile_size: u64,
    pub pass_tiles: u64,
    /// `(index, count)`
    pub shard: (u64, u64),
    pub overlap: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            kernel: KernelKind::Vectorized,
            backend: None,
            workers: thread::available_parallelism().map_or(1, |n| n.get()),
            tile_size: DEFAULT_TILE_SIZE,
            pass_tiles: DEFAULT_PASS_TILES,
            shard: (0, 1),
            overlap: true,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Config("at least one worker is required".into()));
        }
        if self.tile_size == 0 {
            return Err(Error::Config("tile size must be at least 1".into()));
        }
        if self.pass_tiles == 0 {
            return Err(Error::Config("pass size must be at least one tile".into()));
        }
        let (i, p) = self.shard;
        if p == 0 || i >= p {
            return Err(Error::Config(format!("shard {i}/{p} is out of range")));
        }
        if let Some(b) = self.backend {
            if self.kernel != KernelKind::Vectorized {
                return Err(Error::Config(format!(
                    "a SIMD backend only applies to the vectorized kernel, not {}",
                    self.kernel
                )));
            }
            if !b.is_available() {
                return Err(Error::Config(format!(
                    "backend {b} is not supported by this CPU"
                )));
            }
        }
        Ok(())
    }
}

/// Consumer of computed cells, driven by the coordinator only.
pub trait ResultSink {
    /// Called once before the first pass with the kernel actually used.
    fn begin(&mut self, _ds: &Dataset, _kernel: KernelKind) -> Result<()> {
        Ok(())
    }

    /// Cells of one pass in ascending tile order.
    fn write_pass(&mut self, ds: &Dataset, cells: &[CellResult]) -> Result<()>;

    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

impl ResultSink for Vec<CellResult> {
    fn write_pass(&mut self, _ds: &Dataset, cells: &[CellResult]) -> Result<()> {
        self.extend_from_slice(cells);
        Ok(())
    }
}

/// A contiguous tile range computed into one buffer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PassPlan {
    pub pass_index: usize,
    pub tile_range: Range<u64>,
    /// Exact number of cells in the range, ragged tiles included.
    pub cells: u64,
}

/// Passes tiling `range` in order, planned lazily so that huge job spaces
/// cost nothing up front.
#[derive(Clone, Debug)]
pub struct PassPlans {
    space: JobSpace,
    range: Range<u64>,
    pass_tiles: u64,
    next_index: usize,
}

impl Iterator for PassPlans {
    type Item = PassPlan;

    fn next(&mut self) -> Option<PassPlan> {
        if self.range.is_empty() {
            return None;
        }
        let lo = self.range.start;
        let hi = lo + self.pass_tiles.min(self.range.end - lo);
        self.range.start = hi;
        let cells = (lo..hi).map(|t| tile_cell_count(&self.space, t)).sum();
        let plan = PassPlan {
            pass_index: self.next_index,
            tile_range: lo..hi,
            cells,
        };
        self.next_index += 1;
        Some(plan)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self
            .range
            .end
            .saturating_sub(self.range.start)
            .div_ceil(self.pass_tiles) as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for PassPlans {}

pub fn plan_passes(space: JobSpace, range: Range<u64>, pass_tiles: u64) -> Result<PassPlans> {
    if pass_tiles == 0 {
        return Err(Error::Config("pass size must be at least one tile".into()));
    }
    Ok(PassPlans {
        space,
        range,
        pass_tiles,
        next_index: 0,
    })
}

fn tile_cell_count(space: &JobSpace, tile: u64) -> u64 {
    let (yq, xq) = space.tile_coord(tile).expect("tile id within range");
    space.tile_cell_count(yq, xq)
}

#[derive(Clone, Debug)]
pub struct PassStats {
    pub pass_index: usize,
    pub tile_range: Range<u64>,
    pub cells: u64,
    /// Time the workers spent on this pass.
    pub compute_time: Duration,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub kernel_requested: KernelKind,
    pub kernel_used: KernelKind,
    pub tile_range: Range<u64>,
    pub total_cells: u64,
    pub passes: Vec<PassStats>,
    pub wall_time: Duration,
}

/// Computes every upper-triangle cell in the configured shard and streams
/// the cells to `sink` pass by pass.
pub fn compute_all_pairs<S: ResultSink + ?Sized>(
    ds: &Dataset,
    config: &EngineConfig,
    sink: &mut S,
) -> Result<RunSummary> {
    config.validate()?;
    if ds.n() < 2 {
        return Err(Error::invalid(format!(
            "need at least two observations per variable, got {}",
            ds.n()
        )));
    }
    let started = Instant::now();
    let kernel = resolve_kernel(ds, config.kernel);
    let backend = config.backend.unwrap_or_else(Backend::detect);

    let space = JobSpace::new(ds.m() as u64, config.tile_size)?;
    let (shard_index, shard_count) = config.shard;
    let range = shard_range(shard_index, shard_count, &space)?;
    let plans = plan_passes(space, range.clone(), config.pass_tiles)?;
    debug!(
        "{} tiles of {}×{} in shard {shard_index}/{shard_count}, {} passes, kernel {kernel}",
        range.end - range.start,
        config.tile_size,
        config.tile_size,
        plans.len()
    );

    let mut scratches: Vec<Scratch> = (0..config.workers)
        .map(|_| Scratch::with_backend(kernel, ds.n(), backend))
        .collect();
    let mut current: Vec<CellResult> = Vec::new();
    let mut pending: Vec<CellResult> = Vec::new();
    let mut passes = Vec::with_capacity(plans.len());
    let mut total_cells = 0;

    sink.begin(ds, kernel)?;
    if config.overlap {
        // pending holds the finished pass awaiting output
        let mut have_pending = false;
        for plan in plans {
            prepare(&mut current, &plan);
            let stats = thread::scope(|scope| -> Result<PassStats> {
                let handle =
                    scope.spawn(|| run_pass(ds, &space, &plan, &mut current, &mut scratches));
                let written = if have_pending {
                    sink.write_pass(ds, &pending)
                } else {
                    Ok(())
                };
                let computed = handle
                    .join()
                    .unwrap_or_else(|p| std::panic::resume_unwind(p));
                written?;
                computed
            })?;
            total_cells += stats.cells;
            passes.push(stats);
            std::mem::swap(&mut current, &mut pending);
            have_pending = true;
        }
        if have_pending {
            sink.write_pass(ds, &pending)?;
        }
    } else {
        for plan in plans {
            prepare(&mut current, &plan);
            let stats = run_pass(ds, &space, &plan, &mut current, &mut scratches)?;
            sink.write_pass(ds, &current)?;
            total_cells += stats.cells;
            passes.push(stats);
        }
    }
    sink.finish()?;

    Ok(RunSummary {
        kernel_requested: config.kernel,
        kernel_used: kernel,
        tile_range: range,
        total_cells,
        passes,
        wall_time: started.elapsed(),
    })
}

/// Kernel for the whole run; never mixes kernels between cells.
fn resolve_kernel(ds: &Dataset, requested: KernelKind) -> KernelKind {
    if requested == KernelKind::Vectorized && !ds.packed_ready() {
        warn!(
            "n = {} exceeds the packed pair capacity; using the sorted kernel for this run",
            ds.n()
        );
        return KernelKind::Sorted;
    }
    requested
}

fn prepare(buffer: &mut Vec<CellResult>, plan: &PassPlan) {
    buffer.clear();
    buffer.resize(plan.cells as usize, CellResult::default());
}

fn run_pass(
    ds: &Dataset,
    space: &JobSpace,
    plan: &PassPlan,
    buffer: &mut [CellResult],
    scratches: &mut [Scratch],
) -> Result<PassStats> {
    let started = Instant::now();
    let workers = scratches.len();
    let mut assigned: Vec<Vec<(u64, &mut [CellResult])>> =
        (0..workers).map(|_| Vec::new()).collect();
    let mut rest = buffer;
    for tile in plan.tile_range.clone() {
        let (slot, tail) = rest.split_at_mut(tile_cell_count(space, tile) as usize);
        assigned[(tile % workers as u64) as usize].push((tile, slot));
        rest = tail;
    }
    debug_assert!(rest.is_empty());

    let result = if workers == 1 {
        let tiles = assigned.pop().unwrap_or_default();
        compute_tiles(ds, space, tiles, &mut scratches[0])
    } else {
        thread::scope(|scope| {
            let handles: Vec<_> = assigned
                .into_iter()
                .zip(scratches.iter_mut())
                .filter(|(tiles, _)| !tiles.is_empty())
                .map(|(tiles, scratch)| {
                    scope.spawn(move || compute_tiles(ds, space, tiles, scratch))
                })
                .collect();
            handles
                .into_iter()
                .try_for_each(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
        })
    };
    result?;
    Ok(PassStats {
        pass_index: plan.pass_index,
        tile_range: plan.tile_range.clone(),
        cells: plan.cells,
        compute_time: started.elapsed(),
    })
}

fn compute_tiles(
    ds: &Dataset,
    space: &JobSpace,
    tiles: Vec<(u64, &mut [CellResult])>,
    scratch: &mut Scratch,
) -> Result<()> {
    let ranks = ds.ranks();
    for (tile, slot) in tiles {
        let (yq, xq) = space.tile_coord(tile)?;
        for (out, (i, j)) in slot.iter_mut().zip(space.tile_cells(yq, xq)) {
            let result = scratch.compute(&ranks[i as usize], &ranks[j as usize])?;
            *out = CellResult {
                i: i as u32,
                j: j as u32,
                result,
            };
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rank::rank_transform;

    fn dataset(rows: &[&[f64]]) -> Dataset {
        Dataset::from_ranks(rows.iter().map(|r| rank_transform(r).unwrap()).collect()).unwrap()
    }

    fn config(kernel: KernelKind, q: u64, workers: usize) -> EngineConfig {
        EngineConfig {
            kernel,
            tile_size: q,
            workers,
            ..EngineConfig::default()
        }
    }

    #[test]
    fn triangle_of_three() {
        let ds = dataset(&[&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0], &[2.0, 2.0, 1.0]]);
        let mut out = Vec::new();
        let summary = compute_all_pairs(&ds, &config(KernelKind::Sorted, 1, 1), &mut out).unwrap();
        let cells: Vec<_> = out.iter().map(|c| (c.i, c.j)).collect();
        assert_eq!(cells, vec![(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]);
        assert_eq!(summary.total_cells, 6);
        assert_eq!(summary.kernel_used, KernelKind::Sorted);

        let mut wide = Vec::new();
        compute_all_pairs(&ds, &config(KernelKind::Sorted, 1, 8), &mut wide).unwrap();
        assert_eq!(out, wide);
    }

    #[test]
    fn pass_plan_examples() {
        let space = JobSpace::new(4, 1).unwrap();
        let ranges: Vec<_> = plan_passes(space, 0..10, 4)
            .unwrap()
            .map(|p| p.tile_range)
            .collect();
        assert_eq!(ranges, vec![0..4, 4..8, 8..10]);
        let plans: Vec<_> = plan_passes(space, 0..10, 99).unwrap().collect();
        assert_eq!(plans.len(), 1);
        assert_eq!(plans[0].cells, 10);
        assert!(plan_passes(space, 0..10, 0).is_err());
    }

    #[test]
    fn pass_cells_are_exact_and_bounded() {
        for m in 1..40 {
            for q in 1..6 {
                let space = JobSpace::new(m, q).unwrap();
                for pass_tiles in [1, 2, 3, 7] {
                    let plans: Vec<_> = plan_passes(space, 0..space.total_tiles(), pass_tiles)
                        .unwrap()
                        .collect();
                    let total: u64 = plans.iter().map(|p| p.cells).sum();
                    assert_eq!(total, space.total_jobs());
                    for p in &plans {
                        assert!(p.cells <= pass_tiles * q * q);
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_configs() {
        let ds = dataset(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let mut sink = Vec::new();
        for bad in [
            EngineConfig {
                workers: 0,
                ..EngineConfig::default()
            },
            EngineConfig {
                tile_size: 0,
                ..EngineConfig::default()
            },
            EngineConfig {
                pass_tiles: 0,
                ..EngineConfig::default()
            },
            EngineConfig {
                shard: (2, 2),
                ..EngineConfig::default()
            },
            EngineConfig {
                kernel: KernelKind::Sorted,
                backend: Some(Backend::Portable),
                ..EngineConfig::default()
            },
        ] {
            assert!(matches!(
                compute_all_pairs(&ds, &bad, &mut sink),
                Err(Error::Config(_))
            ));
        }
        let short = dataset(&[&[1.0], &[2.0]]);
        assert!(matches!(
            compute_all_pairs(&short, &EngineConfig::default(), &mut sink),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn dataset_validation() {
        let r = || rank_transform(&[1.0, 2.0]).unwrap();
        assert!(Dataset::new(vec!["a".into(), "a".into()], vec![r(), r()]).is_err());
        assert!(Dataset::new(vec!["a".into()], vec![r(), r()]).is_err());
        assert!(Dataset::new(vec![], vec![]).is_err());
        let longer = rank_transform(&[1.0, 2.0, 3.0]).unwrap();
        assert!(Dataset::from_ranks(vec![r(), longer]).is_err());
    }

    #[test]
    fn oversized_vectors_fall_back_to_sorted() {
        let n = 40_000;
        let a: Vec<f64> = (0..n).map(|k| k as f64).collect();
        let b: Vec<f64> = (0..n).map(|k| ((k * 7919) % n) as f64).collect();
        let ds = dataset(&[&a, &b]);
        assert!(!ds.packed_ready());
        let mut out = Vec::new();
        let summary =
            compute_all_pairs(&ds, &config(KernelKind::Vectorized, 8, 2), &mut out).unwrap();
        assert_eq!(summary.kernel_used, KernelKind::Sorted);
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].result.tau_b, 1.0);
    }

    struct Failing;

    impl ResultSink for Failing {
        fn write_pass(&mut self, _: &Dataset, _: &[CellResult]) -> Result<()> {
            Err(Error::Io(std::io::Error::other("disk full")))
        }
    }

    #[test]
    fn sink_errors_abort() {
        let ds = dataset(&[&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]]);
        for overlap in [false, true] {
            let cfg = EngineConfig {
                overlap,
                pass_tiles: 1,
                tile_size: 1,
                ..EngineConfig::default()
            };
            assert!(matches!(
                compute_all_pairs(&ds, &cfg, &mut Failing),
                Err(Error::Io(_))
            ));
        }
    }

    #[test]
    fn output_independent_of_schedule() {
        let rows: Vec<Vec<f64>> = (0..37)
            .map(|r| {
                (0..50)
                    .map(|k| ((k * (r + 3) + r * r) % 17) as f64)
                    .collect()
            })
            .collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let ds = dataset(&refs);
        let mut reference = Vec::new();
        compute_all_pairs(&ds, &config(KernelKind::Sorted, 1, 1), &mut reference).unwrap();
        reference.sort_by_key(|c| (c.i, c.j));
        for kernel in [KernelKind::Sorted, KernelKind::Vectorized] {
            for q in [1, 3, 8] {
                let mut base: Option<Vec<CellResult>> = None;
                for workers in [1, 3] {
                    for pass_tiles in [1, 5, 4096] {
                        for overlap in [false, true] {
                            let cfg = EngineConfig {
                                pass_tiles,
                                overlap,
                                ..config(kernel, q, workers)
                            };
                            let mut out = Vec::new();
                            compute_all_pairs(&ds, &cfg, &mut out).unwrap();
                            match &base {
                                Some(b) => assert_eq!(&out, b),
                                None => base = Some(out.clone()),
                            }
                            out.sort_by_key(|c| (c.i, c.j));
                            let counts: Vec<_> = out.iter().map(|c| c.result.counts).collect();
                            let expected: Vec<_> =
                                reference.iter().map(|c| c.result.counts).collect();
                            assert_eq!(counts, expected);
                        }
                    }
                }
            }
        }
    }
}
