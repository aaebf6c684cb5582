use std::fs;
use std::io::Write;
use std::path::Path;

use crate::engine::Dataset;
use crate::error::{Error, Result};
use crate::rank::rank_transform;

#[derive(Clone, Debug)]
pub struct LoadOptions {
    /// Rank columns (samples) instead of rows (variables).
    pub transpose: bool,
    /// First non-blank line holds sample labels.
    pub has_header: bool,
    pub delimiter: char,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            transpose: false,
            has_header: true,
            delimiter: '\t',
        }
    }
}

pub fn load_matrix(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    parse_matrix(&text, options)
}

/// Parses a delimited matrix: one variable per row, first field the
/// variable label, then `n` numeric cells. Blank lines are skipped; line
/// numbers in errors are 1-based physical lines.
pub fn parse_matrix(text: &str, options: &LoadOptions) -> Result<Dataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty());

    let header = if options.has_header {
        lines
            .next()
            .map(|(no, l)| (no, split(l, options.delimiter)))
    } else {
        None
    };

    let mut labels: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    let mut seen = std::collections::HashMap::new();
    for (no, line) in lines {
        let mut fields = split(line, options.delimiter).into_iter();
        let label = fields.next().unwrap_or_default().to_string();
        let cells = fields
            .enumerate()
            .map(|(c, f)| parse_cell(f, no, c + 2))
            .collect::<Result<Vec<f64>>>()?;
        match width {
            None if cells.is_empty() => return Err(Error::parse(no, "row has no numeric cells")),
            None => width = Some(cells.len()),
            Some(w) if w != cells.len() => {
                return Err(Error::parse(
                    no,
                    format!("expected {w} numeric cells, found {}", cells.len()),
                ))
            }
            Some(_) => {}
        }
        if let Some(first) = seen.insert(label.clone(), no) {
            return Err(Error::parse(
                no,
                format!("duplicate label {label:?} (first on line {first})"),
            ));
        }
        labels.push(label);
        rows.push(cells);
    }
    let Some(n) = width else {
        return Err(Error::invalid("matrix has no data rows"));
    };

    let sample_labels: Vec<String> = match &header {
        Some((no, fields)) => {
            // the corner cell above the label column is optional
            let names: Vec<&str> = match fields.len() {
                k if k == n + 1 => fields[1..].to_vec(),
                k if k == n => fields.clone(),
                k => {
                    return Err(Error::parse(
                        *no,
                        format!("header has {k} fields for {n} samples"),
                    ))
                }
            };
            names.into_iter().map(str::to_string).collect()
        }
        None => (0..n).map(|k| format!("S{k}")).collect(),
    };

    if options.transpose {
        if let Some(dup) = duplicate(&sample_labels) {
            let line = header.as_ref().map_or(1, |(no, _)| *no);
            return Err(Error::parse(
                line,
                format!("duplicate sample label {dup:?}"),
            ));
        }
        let columns = (0..n)
            .map(|c| rows.iter().map(|r| r[c]).collect::<Vec<f64>>())
            .map(|col| rank_transform(&col))
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(sample_labels, columns)
    } else {
        let ranks = rows
            .iter()
            .map(|r| rank_transform(r))
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(labels, ranks)
    }
}

fn split(line: &str, delimiter: char) -> Vec<&str> {
    line.split(delimiter).map(str::trim).collect()
}

fn parse_cell(field: &str, line: usize, column: usize) -> Result<f64> {
    match field.parse::<f64>() {
        Ok(x) if !x.is_nan() => Ok(x),
        _ => Err(Error::parse(
            line,
            format!("column {column}: {field:?} is not a number"),
        )),
    }
}

fn duplicate(labels: &[String]) -> Option<&str> {
    let mut seen = std::collections::HashSet::new();
    labels
        .iter()
        .find(|l| !seen.insert(l.as_str()))
        .map(String::as_str)
}

/// Writes rows in the layout [`load_matrix`] reads, with a header line.
pub fn write_matrix(mut out: impl Write, labels: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let n = rows.first().map_or(0, Vec::len);
    write!(out, "id")?;
    for k in 0..n {
        write!(out, "\tS{k}")?;
    }
    writeln!(out)?;
    for (label, row) in labels.iter().zip(rows) {
        write!(out, "{label}")?;
        for x in row {
            write!(out, "\t{x}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "gene\ts1\ts2\nA\t1.5\t2\nB\t3\t1\nC\t0\t0\n";

    #[test]
    fn shapes() {
        let ds = parse_matrix(SMALL, &LoadOptions::default()).unwrap();
        assert_eq!((ds.m(), ds.n()), (3, 2));
        assert_eq!(ds.labels(), ["A", "B", "C"]);
        assert_eq!(ds.ranks()[1].as_slice(), &[1, 0]);

        let t = LoadOptions {
            transpose: true,
            ..LoadOptions::default()
        };
        let ds = parse_matrix(SMALL, &t).unwrap();
        assert_eq!((ds.m(), ds.n()), (2, 3));
        assert_eq!(ds.labels(), ["s1", "s2"]);
        assert_eq!(ds.ranks()[0].as_slice(), &[1, 2, 0]);
    }

    #[test]
    fn headerless_and_custom_delimiter() {
        let opts = LoadOptions {
            has_header: false,
            delimiter: ',',
            transpose: true,
        };
        let ds = parse_matrix("x,1,2,3\ny,3,2,1\r\n\n", &opts).unwrap();
        assert_eq!(ds.labels(), ["S0", "S1", "S2"]);
        assert_eq!(ds.n(), 2);
    }

    #[test]
    fn header_without_corner() {
        let ds = parse_matrix("s1\ts2\nA\t1\t2\n", &LoadOptions::default()).unwrap();
        assert_eq!((ds.m(), ds.n()), (1, 2));
    }

    fn parse_line(text: &str) -> usize {
        match parse_matrix(text, &LoadOptions::default()) {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn errors_cite_lines() {
        assert_eq!(
            parse_line("h\ta\tb\nA\t1\t2\nB\t1\t2\nC\t1\t2\nD\tx\t2\n"),
            5
        );
        assert_eq!(parse_line("h\ta\tb\nA\t1\t2\nB\t1\n"), 3);
        assert_eq!(parse_line("h\ta\tb\nA\t1\t2\nA\t2\t1\n"), 3);
        assert_eq!(parse_line("h\ta\tb\nA\tNaN\t2\n"), 2);
        assert_eq!(parse_line("h\ta\tb\tc\td\nA\t1\t2\n"), 1);
        assert!(matches!(
            parse_matrix("h\ta\n", &LoadOptions::default()),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            parse_matrix("", &LoadOptions::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn write_then_load() {
        let labels = vec!["p".to_string(), "q".to_string()];
        let rows = vec![vec![0.25, -1.0, 3.0], vec![2.0, 2.0, 1e-300]];
        let mut buf = Vec::new();
        write_matrix(&mut buf, &labels, &rows).unwrap();
        let ds = parse_matrix(std::str::from_utf8(&buf).unwrap(), &LoadOptions::default()).unwrap();
        assert_eq!(ds.labels(), labels.as_slice());
        assert_eq!(ds.ranks()[0].as_slice(), &[1, 0, 2]);
        assert_eq!(ds.ranks()[1].as_slice(), &[1, 1, 0]);
    }
}
