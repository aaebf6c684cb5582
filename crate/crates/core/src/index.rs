//! Bijective numbering of the upper-triangle job space and its tiles.
//!
//! Jobs `(y, x)` with `0 ≤ y ≤ x < m` are numbered left-to-right,
//! top-to-bottom:
//!
//! ```text
//! J(y, x) = F(y) + x − y,   F(y) = y(2m − y + 1)/2
//! ```
//!
//! and the inverse recovers `y` in closed form from the quadratic bound on
//! `F`, followed by an integer correction so that the result is exact even
//! where `f64` square roots lose precision. Tiles of `q × q` cells form a
//! `w × w` matrix (`w = ⌈m/q⌉`) with the same structure, numbered the same
//! way.

use std::ops::Range;

use crate::error::{Error, Result};

/// Number of upper-triangle cells preceding row `y` of an `m × m` matrix.
pub fn row_prefix(y: u64, m: u64) -> Result<u64> {
    if y > m {
        return Err(Error::invalid(format!("row {y} outside 0..={m}")));
    }
    Ok(prefix(y, m))
}

#[inline]
fn prefix(y: u64, m: u64) -> u64 {
    let y = y as u128;
    let m = m as u128;
    (y * (2 * m - y + 1) / 2) as u64
}

/// m(m+1)/2
pub fn triangle_size(m: u64) -> u64 {
    ((m as u128 * (m as u128 + 1)) / 2) as u64
}

pub fn job_id(y: u64, x: u64, m: u64) -> Result<u64> {
    if y > x || x >= m {
        return Err(Error::invalid(format!(
            "({y}, {x}) is not an upper-triangle cell of a {m}×{m} matrix"
        )));
    }
    Ok(prefix(y, m) + x - y)
}

pub fn job_coord(id: u64, m: u64) -> Result<(u64, u64)> {
    let total = triangle_size(m);
    if id >= total {
        return Err(Error::invalid(format!(
            "job {id} outside 0..{total} for m = {m}"
        )));
    }
    let y = row_of(id, m);
    Ok((y, id + y - prefix(y, m)))
}

/// Row containing job `id`: ⌈m − ½ − √(m² + m + ¼ − 2(id+1))⌉, corrected
/// until `F(y) ≤ id < F(y+1)`.
fn row_of(id: u64, m: u64) -> u64 {
    let mf = m as f64;
    let disc = mf * mf + mf + 0.25 - 2.0 * (id as f64 + 1.0);
    let estimate = (mf - 0.5 - disc.max(0.0).sqrt()).ceil();
    let mut y = if estimate <= 0.0 {
        0
    } else {
        (estimate as u64).min(m - 1)
    };
    while prefix(y, m) > id {
        y -= 1;
    }
    while y + 1 < m && prefix(y + 1, m) <= id {
        y += 1;
    }
    y
}

pub fn tile_id(yq: u64, xq: u64, w: u64) -> Result<u64> {
    job_id(yq, xq, w)
}

pub fn tile_coord(id: u64, w: u64) -> Result<(u64, u64)> {
    job_coord(id, w)
}

/// Dimensions of the job space and its tiling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JobSpace {
    m: u64,
    q: u64,
    w: u64,
}

impl JobSpace {
    pub fn new(m: u64, q: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("job space needs at least one variable"));
        }
        if q == 0 {
            return Err(Error::invalid("tile size must be at least 1"));
        }
        Ok(JobSpace {
            m,
            q,
            w: m.div_ceil(q),
        })
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn tile_size(&self) -> u64 {
        self.q
    }

    /// Width of the tile matrix, ⌈m/q⌉.
    pub fn tile_width(&self) -> u64 {
        self.w
    }

    pub fn total_jobs(&self) -> u64 {
        triangle_size(self.m)
    }

    pub fn total_tiles(&self) -> u64 {
        triangle_size(self.w)
    }

    pub fn tile_coord(&self, id: u64) -> Result<(u64, u64)> {
        tile_coord(id, self.w)
    }

    /// Variable index ranges `(rows, cols)` a tile spans, clipped at `m`.
    pub fn tile_bounds(&self, yq: u64, xq: u64) -> (Range<u64>, Range<u64>) {
        let rows = yq * self.q..((yq + 1) * self.q).min(self.m);
        let cols = xq * self.q..((xq + 1) * self.q).min(self.m);
        (rows, cols)
    }

    /// Number of upper-triangle cells inside tile `(yq, xq)`.
    pub fn tile_cell_count(&self, yq: u64, xq: u64) -> u64 {
        let (rows, cols) = self.tile_bounds(yq, xq);
        let (h, w) = (rows.end - rows.start, cols.end - cols.start);
        if yq == xq {
            h * (h + 1) / 2
        } else {
            h * w
        }
    }

    pub fn tile_cells(&self, yq: u64, xq: u64) -> TileCells {
        let (rows, cols) = self.tile_bounds(yq, xq);
        TileCells {
            i: rows.start,
            j: cols.start.max(rows.start),
            rows,
            cols,
        }
    }
}

/// Cells `(i, j)` with `i ≤ j` of one tile, row by row.
#[derive(Clone, Debug)]
pub struct TileCells {
    rows: Range<u64>,
    cols: Range<u64>,
    i: u64,
    j: u64,
}

impl Iterator for TileCells {
    type Item = (u64, u64);

    fn next(&mut self) -> Option<(u64, u64)> {
        while self.i < self.rows.end {
            if self.j < self.cols.end {
                let cell = (self.i, self.j);
                self.j += 1;
                return Some(cell);
            }
            self.i += 1;
            self.j = self.cols.start.max(self.i);
        }
        None
    }
}

/// Tile-id range for shard `index` of `count`: blocks of
/// ⌈total_tiles / count⌉ consecutive tiles, clipped to the tile range.
pub fn shard_range(index: u64, count: u64, space: &JobSpace) -> Result<Range<u64>> {
    if count == 0 || index >= count {
        return Err(Error::invalid(format!(
            "shard {index}/{count} is out of range"
        )));
    }
    let total = space.total_tiles();
    let per = total.div_ceil(count);
    let lo = (index * per).min(total);
    let hi = ((index + 1) * per).min(total);
    Ok(lo..hi)
}
