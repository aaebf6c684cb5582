use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::Dataset;
use crate::error::{Error, Result};
use crate::rank::rank_transform;

/// `m` rows of `n` values, each row using exactly ⌈n·(1 − tie_fraction)⌉
/// distinct values (at least one) in random order. With no ties every row
/// is a permutation of `0..n`.
pub fn synth_values(m: usize, n: usize, tie_fraction: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    if m == 0 || n == 0 {
        return Err(Error::invalid("synthetic dataset needs m, n ≥ 1"));
    }
    if !(0.0..=1.0).contains(&tie_fraction) {
        return Err(Error::invalid(format!(
            "tie fraction {tie_fraction} outside [0, 1]"
        )));
    }
    let distinct = ((n as f64 * (1.0 - tie_fraction)).ceil() as usize).clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..m)
        .map(|_| {
            let mut row: Vec<u32> = (0..n as u32)
                .map(|k| {
                    if (k as usize) < distinct {
                        k
                    } else {
                        rng.random_range(0..distinct as u32)
                    }
                })
                .collect();
            row.shuffle(&mut rng);
            row.into_iter().map(f64::from).collect()
        })
        .collect();
    Ok(rows)
}

/// Ranked [`synth_values`] with labels `V0, V1, …`.
pub fn synth_dataset(m: usize, n: usize, tie_fraction: f64, seed: u64) -> Result<Dataset> {
    let ranks = synth_values(m, n, tie_fraction, seed)?
        .iter()
        .map(|row| rank_transform(row))
        .collect::<Result<Vec<_>>>()?;
    Dataset::from_ranks(ranks)
}
