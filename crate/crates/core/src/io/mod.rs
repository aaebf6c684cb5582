//! Matrix ingestion, result streaming and synthetic data.

mod binary;
mod matrix;
mod synth;
mod text;

pub use binary::{BinaryHeader, BinaryReader, BinarySink, HEADER_LEN, MAGIC, RECORD_LEN};
pub use matrix::{load_matrix, parse_matrix, write_matrix, LoadOptions};
pub use synth::{synth_dataset, synth_values};
pub use text::{format_cell, TsvSink};
