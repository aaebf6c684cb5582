//! Fixed-width little-endian result records.
//!
//! A stream is one or more segments, each a 16-byte header followed by
//! 40-byte records:
//!
//! ```text
//! header: "KTAU" | version u16 | kernel u8 | flags u8 | n u64
//! record: i u32 | j u32 | numerator i64 | n_d u64 | n1 u64 | n2 u64
//! ```
//!
//! `n3` follows from the numerator identity with `n0 = n(n−1)/2`. A record
//! whose `n_d` is all ones has an undefined τ-b (its true `n_d` is zero).
//! Records from the naive kernel carry only the numerator.

use std::io::{self, BufWriter, ErrorKind, Read, Write};

use crate::engine::{CellResult, Dataset, ResultSink};
use crate::error::{Error, Result};
use crate::kernel::KernelKind;
use crate::tau::{pair_count, TauCounts, TauResult};

pub const MAGIC: [u8; 4] = *b"KTAU";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;
pub const RECORD_LEN: usize = 40;

const UNDEFINED: u64 = u64::MAX;
const FLAG_SKIP_DIAGONAL: u8 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BinaryHeader {
    pub kernel: KernelKind,
    pub n: u64,
    pub skip_diagonal: bool,
}

impl BinaryHeader {
    fn encode(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[..4].copy_from_slice(&MAGIC);
        b[4..6].copy_from_slice(&VERSION.to_le_bytes());
        b[6] = self.kernel.code();
        b[7] = if self.skip_diagonal {
            FLAG_SKIP_DIAGONAL
        } else {
            0
        };
        b[8..].copy_from_slice(&self.n.to_le_bytes());
        b
    }

    fn decode(b: &[u8; HEADER_LEN], offset: u64) -> Result<Self> {
        let bad = |what: String| Error::invalid(format!("binary stream at byte {offset}: {what}"));
        if b[..4] != MAGIC {
            return Err(bad("missing header magic".into()));
        }
        let version = u16::from_le_bytes([b[4], b[5]]);
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let kernel = KernelKind::from_code(b[6])
            .ok_or_else(|| bad(format!("unknown kernel code {}", b[6])))?;
        Ok(BinaryHeader {
            kernel,
            n: u64::from_le_bytes(b[8..].try_into().expect("8 bytes")),
            skip_diagonal: b[7] & FLAG_SKIP_DIAGONAL != 0,
        })
    }
}

fn encode_record(cell: &CellResult, kernel: KernelKind) -> [u8; RECORD_LEN] {
    let c = &cell.result.counts;
    let (n_d, n1, n2) = if kernel.computes_tau_b() {
        let n_d = if c.is_defined_b() { c.n_d } else { UNDEFINED };
        (n_d, c.n1, c.n2)
    } else {
        (0, 0, 0)
    };
    let mut b = [0u8; RECORD_LEN];
    b[0..4].copy_from_slice(&cell.i.to_le_bytes());
    b[4..8].copy_from_slice(&cell.j.to_le_bytes());
    b[8..16].copy_from_slice(&c.numerator.to_le_bytes());
    b[16..24].copy_from_slice(&n_d.to_le_bytes());
    b[24..32].copy_from_slice(&n1.to_le_bytes());
    b[32..40].copy_from_slice(&n2.to_le_bytes());
    b
}

fn decode_record(b: &[u8; RECORD_LEN], header: &BinaryHeader) -> CellResult {
    let u32_at = |k: usize| u32::from_le_bytes(b[k..k + 4].try_into().expect("4 bytes"));
    let u64_at = |k: usize| u64::from_le_bytes(b[k..k + 8].try_into().expect("8 bytes"));
    let numerator = u64_at(8) as i64;
    let n = header.n as usize;
    let result = if header.kernel.computes_tau_b() {
        let n_d = match u64_at(16) {
            UNDEFINED => 0,
            d => d,
        };
        let (n1, n2) = (u64_at(24), u64_at(32));
        let n0 = pair_count(n);
        let n3 =
            (numerator as i128 - n0 as i128 + n1 as i128 + n2 as i128 + 2 * n_d as i128) as u64;
        TauResult::from_counts(TauCounts::from_tie_sums(n, n1, n2, n3, n_d))
    } else {
        TauResult::tau_a_only(n, numerator)
    };
    CellResult {
        i: u32_at(0),
        j: u32_at(4),
        result,
    }
}

pub struct BinarySink<W: Write> {
    out: BufWriter<W>,
    skip_diagonal: bool,
    kernel: KernelKind,
}

impl<W: Write> BinarySink<W> {
    pub fn new(out: W, skip_diagonal: bool) -> Self {
        BinarySink {
            out: BufWriter::with_capacity(1 << 16, out),
            skip_diagonal,
            kernel: KernelKind::Sorted,
        }
    }

    pub fn into_inner(self) -> Result<W> {
        self.out.into_inner().map_err(|e| e.into_error().into())
    }
}

impl<W: Write> ResultSink for BinarySink<W> {
    fn begin(&mut self, ds: &Dataset, kernel: KernelKind) -> Result<()> {
        self.kernel = kernel;
        let header = BinaryHeader {
            kernel,
            n: ds.n() as u64,
            skip_diagonal: self.skip_diagonal,
        };
        self.out.write_all(&header.encode())?;
        Ok(())
    }

    fn write_pass(&mut self, _ds: &Dataset, cells: &[CellResult]) -> Result<()> {
        for cell in cells {
            if self.skip_diagonal && cell.i == cell.j {
                continue;
            }
            self.out.write_all(&encode_record(cell, self.kernel))?;
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Iterates the cells of a binary stream, accepting concatenated segments.
pub struct BinaryReader<R: Read> {
    input: R,
    header: Option<BinaryHeader>,
    offset: u64,
}

impl<R: Read> BinaryReader<R> {
    pub fn new(input: R) -> Self {
        BinaryReader {
            input,
            header: None,
            offset: 0,
        }
    }

    /// Header of the segment read most recently.
    pub fn header(&self) -> Option<BinaryHeader> {
        self.header
    }

    fn next_cell(&mut self) -> Result<Option<CellResult>> {
        loop {
            let mut first = [0u8; 4];
            if !self.fill(&mut first)? {
                return Ok(None);
            }
            if first == MAGIC {
                let mut b = [0u8; HEADER_LEN];
                b[..4].copy_from_slice(&first);
                self.expect(&mut b[4..])?;
                self.header = Some(BinaryHeader::decode(&b, self.offset - HEADER_LEN as u64)?);
                continue;
            }
            let Some(header) = self.header else {
                return Err(Error::invalid("binary stream does not start with a header"));
            };
            let mut b = [0u8; RECORD_LEN];
            b[..4].copy_from_slice(&first);
            self.expect(&mut b[4..])?;
            return Ok(Some(decode_record(&b, &header)));
        }
    }

    /// False on a clean end of stream.
    fn fill(&mut self, buf: &mut [u8]) -> Result<bool> {
        let mut got = 0;
        while got < buf.len() {
            match self.input.read(&mut buf[got..]) {
                Ok(0) if got == 0 => return Ok(false),
                Ok(0) => return Err(truncated(self.offset)),
                Ok(k) => {
                    got += k;
                    self.offset += k as u64;
                }
                Err(e) if e.kind() == ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        Ok(true)
    }

    fn expect(&mut self, buf: &mut [u8]) -> Result<()> {
        if self.fill(buf)? {
            Ok(())
        } else {
            Err(truncated(self.offset))
        }
    }
}

fn truncated(offset: u64) -> Error {
    Error::Io(io::Error::new(
        ErrorKind::UnexpectedEof,
        format!("binary stream truncated at byte {offset}"),
    ))
}

impl<R: Read> Iterator for BinaryReader<R> {
    type Item = Result<CellResult>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_cell().transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{compute_all_pairs, EngineConfig};
    use crate::io::synth_dataset;

    fn run(ds: &Dataset, kernel: KernelKind, skip: bool) -> (Vec<CellResult>, Vec<u8>) {
        let cfg = EngineConfig {
            kernel,
            workers: 2,
            tile_size: 3,
            ..EngineConfig::default()
        };
        let mut cells = Vec::new();
        compute_all_pairs(ds, &cfg, &mut cells).unwrap();
        let mut sink = BinarySink::new(Vec::new(), skip);
        compute_all_pairs(ds, &cfg, &mut sink).unwrap();
        if skip {
            cells.retain(|c| c.i != c.j);
        }
        (cells, sink.into_inner().unwrap())
    }

    #[test]
    fn roundtrip_every_kernel() {
        let ds = synth_dataset(13, 40, 0.6, 5).unwrap();
        let mut with_constant = ds.ranks().to_vec();
        with_constant.push(crate::rank::rank_transform(&[1.0; 40]).unwrap());
        let ds = Dataset::from_ranks(with_constant).unwrap();
        for kernel in KernelKind::ALL {
            for skip in [false, true] {
                let (cells, bytes) = run(&ds, kernel, skip);
                assert_eq!(bytes.len(), HEADER_LEN + RECORD_LEN * cells.len());
                let mut reader = BinaryReader::new(bytes.as_slice());
                let back: Vec<_> = reader.by_ref().collect::<Result<_>>().unwrap();
                assert_eq!(back, cells, "{kernel}");
                let h = reader.header().unwrap();
                assert_eq!((h.kernel, h.n, h.skip_diagonal), (kernel, 40, skip));
            }
        }
    }

    #[test]
    fn concatenated_segments() {
        let ds = synth_dataset(5, 20, 0.0, 2).unwrap();
        let (cells, bytes) = run(&ds, KernelKind::Sorted, false);
        let doubled = [bytes.clone(), bytes].concat();
        let back: Vec<_> = BinaryReader::new(doubled.as_slice())
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(back, [cells.clone(), cells].concat());
    }

    #[test]
    fn undefined_sentinel() {
        let ds =
            Dataset::from_ranks(vec![crate::rank::rank_transform(&[3, 3, 3]).unwrap()]).unwrap();
        let (_, bytes) = run(&ds, KernelKind::Sorted, false);
        let record = &bytes[HEADER_LEN..];
        assert_eq!(&record[16..24], &[0xff; 8]);
    }

    #[test]
    fn malformed_streams() {
        let ds = synth_dataset(3, 10, 0.0, 2).unwrap();
        let (_, bytes) = run(&ds, KernelKind::Sorted, false);
        let cut = &bytes[..bytes.len() - 3];
        assert!(BinaryReader::new(cut).any(|r| r.is_err()));
        let headless = &bytes[HEADER_LEN..];
        assert!(BinaryReader::new(headless).next().unwrap().is_err());
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(BinaryReader::new(bad.as_slice()).next().unwrap().is_err());
        assert!(BinaryReader::new(&[][..]).next().is_none());
    }
}
