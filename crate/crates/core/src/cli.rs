//! Command-line front end: all-pairs runs, benchmarking and binary decoding.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{ArgAction, Parser, ValueEnum};

use crate::engine::{
    compute_all_pairs, CellResult, Dataset, EngineConfig, ResultSink, DEFAULT_PASS_TILES,
    DEFAULT_TILE_SIZE,
};
use crate::error::{Error, Result};
use crate::io::{
    format_cell, load_matrix, synth_dataset, BinaryReader, BinarySink, LoadOptions, TsvSink,
};
use crate::kernel::{Backend, KernelKind};
use crate::tau::TauCounts;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Tsv,
    Bin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Portable,
    Avx2,
    Avx512,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Backend {
        match b {
            BackendArg::Portable => Backend::Portable,
            BackendArg::Avx2 => Backend::Avx2,
            BackendArg::Avx512 => Backend::Avx512,
        }
    }
}

/// All-pairs Kendall τ-b correlation of the rows of a matrix.
#[derive(Debug, Parser)]
#[command(name = "ktau", version)]
pub struct Args {
    /// Delimited matrix: one variable per row, label in the first column.
    #[arg(long, value_name = "PATH", required_unless_present_any = ["synth", "decode"])]
    pub input: Option<PathBuf>,

    /// Synthetic input instead of a file.
    #[arg(long, value_name = "M,N[,TIE[,SEED]]", conflicts_with = "input", value_parser = parse_synth)]
    pub synth: Option<SynthSpec>,

    /// naive, sorted or vectorized (default); repeat with --bench to
    /// compare several.
    #[arg(long, value_name = "KERNEL", action = ArgAction::Append, value_parser = parse_kernel)]
    pub kernel: Vec<KernelKind>,

    /// SIMD backend for the vectorized kernel (default: widest supported).
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,

    /// Worker threads (default: available cores).
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,

    /// Tile edge: a worker computes q×q cells per tile.
    #[arg(long, value_name = "Q", default_value_t = DEFAULT_TILE_SIZE, value_parser = clap::value_parser!(u64).range(1..))]
    pub tile_size: u64,

    /// Tiles computed per pass; bounds the result buffer.
    #[arg(long, value_name = "N", default_value_t = DEFAULT_PASS_TILES, value_parser = clap::value_parser!(u64).range(1..))]
    pub pass_tiles: u64,

    /// Correlate columns (samples) instead of rows.
    #[arg(long)]
    pub transpose: bool,

    /// The input has no sample-label line.
    #[arg(long)]
    pub no_header: bool,

    #[arg(long, value_name = "CHAR", default_value_t = '\t')]
    pub delimiter: char,

    /// Compute only shard I of P of the tile range.
    #[arg(long, value_name = "I/P", value_parser = parse_shard)]
    pub shard: Option<(u64, u64)>,

    /// Output file (default: standard output).
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    pub format: Format,

    /// Compute and write passes one after the other.
    #[arg(long)]
    pub no_overlap: bool,

    /// Omit the self-correlation cells from the output.
    #[arg(long)]
    pub skip_diagonal: bool,

    /// Time each selected kernel on the dataset instead of writing results.
    #[arg(long, conflicts_with_all = ["output", "format", "shard", "skip_diagonal", "decode"])]
    pub bench: bool,

    /// Convert a binary result file to text, labelled from --input/--synth
    /// when given.
    #[arg(long, value_name = "BIN", conflicts_with_all = ["format", "shard", "skip_diagonal", "transpose"])]
    pub decode: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthSpec {
    pub m: usize,
    pub n: usize,
    pub tie_fraction: f64,
    pub seed: u64,
}

fn parse_kernel(s: &str) -> std::result::Result<KernelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_shard(s: &str) -> std::result::Result<(u64, u64), String> {
    let (i, p) = s.split_once('/').ok_or("expected I/P")?;
    let i: u64 = i
        .trim()
        .parse()
        .map_err(|_| format!("bad shard index {i:?}"))?;
    let p: u64 = p
        .trim()
        .parse()
        .map_err(|_| format!("bad shard count {p:?}"))?;
    if p == 0 || i >= p {
        return Err(format!("shard {i}/{p} needs 0 ≤ I < P"));
    }
    Ok((i, p))
}

fn parse_synth(s: &str) -> std::result::Result<SynthSpec, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if !(2..=4).contains(&parts.len()) {
        return Err("expected M,N[,TIE[,SEED]]".into());
    }
    let int = |k: usize| {
        parts[k]
            .parse::<usize>()
            .map_err(|_| format!("bad integer {:?}", parts[k]))
    };
    let spec = SynthSpec {
        m: int(0)?,
        n: int(1)?,
        tie_fraction: match parts.get(2) {
            Some(t) => t.parse().map_err(|_| format!("bad tie fraction {t:?}"))?,
            None => 0.0,
        },
        seed: match parts.get(3) {
            Some(t) => t.parse().map_err(|_| format!("bad seed {t:?}"))?,
            None => 0,
        },
    };
    if spec.m == 0 || spec.n == 0 || !(0.0..=1.0).contains(&spec.tie_fraction) {
        return Err("need M, N ≥ 1 and TIE in [0, 1]".into());
    }
    Ok(spec)
}

/// Parses `args` (program name first) and runs; returns the exit code.
/// Usage errors exit with 2, runtime failures with 1.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render();
            let _ = if code == 0 {
                write!(stdout, "{rendered}")
            } else {
                write!(stderr, "{}", rendered.ansi())
            };
            return code;
        }
    };
    match run(&args, stdout) {
        Ok(()) => 0,
        Err(Error::Config(msg)) => {
            let _ = writeln!(stderr, "ktau: usage error: {msg}");
            2
        }
        Err(e) => {
            let _ = writeln!(stderr, "ktau: {e}");
            1
        }
    }
}

pub fn run(args: &Args, stdout: &mut dyn Write) -> Result<()> {
    if args.kernel.len() > 1 && !args.bench {
        return Err(Error::Config(
            "only --bench accepts more than one --kernel".into(),
        ));
    }
    let ds = load(args)?;
    if let Some(path) = &args.decode {
        return decode(path, ds.as_ref(), args, stdout);
    }
    let ds = ds.expect("clap requires a data source");
    log::info!("loaded {} variables × {} observations", ds.m(), ds.n());
    if args.bench {
        return bench(&ds, args, stdout);
    }

    let config = engine_config(
        args,
        args.kernel
            .first()
            .copied()
            .unwrap_or(KernelKind::Vectorized),
    );
    let skip = args.skip_diagonal;
    let summary = match &args.output {
        Some(path) => {
            let file = File::create(path)?;
            match args.format {
                Format::Tsv => compute_all_pairs(&ds, &config, &mut TsvSink::new(file, skip))?,
                Format::Bin => compute_all_pairs(&ds, &config, &mut BinarySink::new(file, skip))?,
            }
        }
        None => match args.format {
            Format::Tsv => compute_all_pairs(&ds, &config, &mut TsvSink::new(&mut *stdout, skip))?,
            Format::Bin => {
                compute_all_pairs(&ds, &config, &mut BinarySink::new(&mut *stdout, skip))?
            }
        },
    };
    log::info!(
        "{} cells with the {} kernel in {:.3}s over {} passes",
        summary.total_cells,
        summary.kernel_used,
        summary.wall_time.as_secs_f64(),
        summary.passes.len()
    );
    Ok(())
}

fn load(args: &Args) -> Result<Option<Dataset>> {
    if let Some(s) = args.synth {
        let ds = synth_dataset(s.m, s.n, s.tie_fraction, s.seed)?;
        if args.transpose {
            return Err(Error::Config("--transpose applies to --input only".into()));
        }
        return Ok(Some(ds));
    }
    let Some(path) = &args.input else {
        return Ok(None);
    };
    let options = LoadOptions {
        transpose: args.transpose,
        has_header: !args.no_header,
        delimiter: args.delimiter,
    };
    load_matrix(path, &options).map(Some)
}

fn engine_config(args: &Args, kernel: KernelKind) -> EngineConfig {
    let defaults = EngineConfig::default();
    EngineConfig {
        kernel,
        backend: args.backend.map(Backend::from),
        workers: args.threads.map_or(defaults.workers, |t| t as usize),
        tile_size: args.tile_size,
        pass_tiles: args.pass_tiles,
        shard: args.shard.unwrap_or((0, 1)),
        overlap: !args.no_overlap,
    }
}

fn decode(path: &PathBuf, ds: Option<&Dataset>, args: &Args, stdout: &mut dyn Write) -> Result<()> {
    let mut reader = BinaryReader::new(BufReader::new(File::open(path)?));
    let mut sink: Box<dyn Write> = match &args.output {
        Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
        None => Box::new(io::BufWriter::new(&mut *stdout)),
    };
    let label = |k: u32| -> Result<String> {
        match ds {
            Some(ds) => ds.labels().get(k as usize).cloned().ok_or_else(|| {
                Error::invalid(format!(
                    "record refers to variable {k}, dataset has {}",
                    ds.m()
                ))
            }),
            None => Ok(format!("V{k}")),
        }
    };
    while let Some(cell) = reader.next().transpose()? {
        if let (Some(ds), Some(h)) = (ds, reader.header()) {
            if h.n != ds.n() as u64 {
                return Err(Error::invalid(format!(
                    "binary file has n = {}, dataset has n = {}",
                    h.n,
                    ds.n()
                )));
            }
        }
        format_cell(&mut sink, &label(cell.i)?, &label(cell.j)?, &cell.result)?;
    }
    sink.flush()?;
    Ok(())
}

/// Keeps the integer counts of every cell for cross-kernel comparison.
struct CountSink(Vec<(u32, u32, TauCounts)>);

impl ResultSink for CountSink {
    fn write_pass(&mut self, _ds: &Dataset, cells: &[CellResult]) -> Result<()> {
        self.0
            .extend(cells.iter().map(|c| (c.i, c.j, c.result.counts)));
        Ok(())
    }
}

fn bench(ds: &Dataset, args: &Args, out: &mut dyn Write) -> Result<()> {
    let kernels = if args.kernel.is_empty() {
        KernelKind::ALL.to_vec()
    } else {
        args.kernel.clone()
    };
    let mut rows = Vec::new();
    for &kernel in &kernels {
        let config = engine_config(args, kernel);
        let mut sink = CountSink(Vec::new());
        let started = Instant::now();
        let summary = compute_all_pairs(ds, &config, &mut sink)?;
        let seconds = started.elapsed().as_secs_f64();
        rows.push((
            kernel,
            summary.kernel_used,
            seconds,
            summary.total_cells,
            sink.0,
        ));
    }

    let naive_seconds = rows.iter().find(|r| r.0 == KernelKind::Naive).map(|r| r.2);
    writeln!(
        out,
        "m = {}, n = {}, threads = {}",
        ds.m(),
        ds.n(),
        engine_config(args, kernels[0]).workers
    )?;
    writeln!(
        out,
        "{:<12} {:>12} {:>14} {:>10}",
        "kernel", "seconds", "cells/s", "speedup"
    )?;
    for (kernel, used, seconds, cells, _) in &rows {
        let name = if kernel == used {
            kernel.to_string()
        } else {
            format!("{kernel}→{used}")
        };
        let speedup = naive_seconds.map_or("-".to_string(), |t| format!("{:.2}", t / seconds));
        writeln!(
            out,
            "{:<12} {:>12.6} {:>14.1} {:>10}",
            name,
            seconds,
            *cells as f64 / seconds,
            speedup
        )?;
    }

    // numerators (hence tau_a) must agree everywhere; full counts between tau-b kernels
    let (first_kernel, first) = (rows[0].1, &rows[0].4);
    for (_, used, _, _, cells) in &rows[1..] {
        let full = used.computes_tau_b() && first_kernel.computes_tau_b();
        let agree = cells.len() == first.len()
            && cells.iter().zip(first).all(|(a, b)| {
                a.0 == b.0 && a.1 == b.1 && a.2.numerator == b.2.numerator && (!full || a.2 == b.2)
            });
        if !agree {
            return Err(Error::invalid(format!(
                "{used} disagrees with {first_kernel}"
            )));
        }
    }
    writeln!(
        out,
        "tau_a identical across kernels over {} cells",
        first.len()
    )?;
    Ok(())
}
