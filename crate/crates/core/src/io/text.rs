use std::io::{BufWriter, Write};

use crate::engine::{CellResult, Dataset, ResultSink};
use crate::error::Result;
use crate::tau::TauResult;

/// Writes `label_i  label_j  tau_b  tau_a  n_d  n1  n2  n3`, tab separated,
/// undefined values as `nan`.
pub fn format_cell(
    mut out: impl Write,
    label_i: &str,
    label_j: &str,
    r: &TauResult,
) -> std::io::Result<()> {
    let c = &r.counts;
    write!(out, "{label_i}\t{label_j}\t")?;
    write_float(&mut out, r.tau_b)?;
    out.write_all(b"\t")?;
    write_float(&mut out, r.tau_a)?;
    writeln!(out, "\t{}\t{}\t{}\t{}", c.n_d, c.n1, c.n2, c.n3)
}

fn write_float(out: &mut impl Write, x: f64) -> std::io::Result<()> {
    if x.is_nan() {
        out.write_all(b"nan")
    } else {
        write!(out, "{x}")
    }
}

pub struct TsvSink<W: Write> {
    out: BufWriter<W>,
    skip_diagonal: bool,
}

impl<W: Write> TsvSink<W> {
    pub fn new(out: W, skip_diagonal: bool) -> Self {
        TsvSink {
            out: BufWriter::with_capacity(1 << 16, out),
            skip_diagonal,
        }
    }

    pub fn into_inner(self) -> Result<W> {
        self.out.into_inner().map_err(|e| e.into_error().into())
    }
}

impl<W: Write> ResultSink for TsvSink<W> {
    fn write_pass(&mut self, ds: &Dataset, cells: &[CellResult]) -> Result<()> {
        for cell in cells {
            if self.skip_diagonal && cell.i == cell.j {
                continue;
            }
            let (i, j) = (cell.i as usize, cell.j as usize);
            format_cell(&mut self.out, ds.label(i), ds.label(j), &cell.result)?;
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}
