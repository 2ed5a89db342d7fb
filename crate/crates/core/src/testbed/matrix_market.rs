//! Matrix Market reader and writer for real symmetric coordinate matrices.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::problems::{ProblemError, SpdOperator};
use crate::trace::fmt_num;

#[derive(Debug, Error)]
pub enum MatrixMarketError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("read failed: {0}")]
    Read(#[from] io::Error),
    #[error("line 1: missing %%MatrixMarket banner")]
    MissingBanner,
    #[error("unsupported Matrix Market variant: {0}")]
    Unsupported(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("header announces {expected} entries, file has {found}")]
    EntryCount { expected: usize, found: usize },
    #[error(transparent)]
    Operator(#[from] ProblemError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixMarketHeader {
    pub object: String,
    pub format: String,
    pub field: String,
    pub symmetry: String,
    pub n_rows: usize,
    pub n_cols: usize,
    pub n_entries: usize,
}

fn parse_err(line: usize, message: impl Into<String>) -> MatrixMarketError {
    MatrixMarketError::Parse { line, message: message.into() }
}

/// Reads a `matrix coordinate real symmetric` file. Entries may come from
/// either triangle; duplicates are summed.
pub fn parse_matrix_market<R: BufRead>(reader: R) -> Result<(MatrixMarketHeader, SpdOperator), MatrixMarketError> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let banner = match lines.next() {
        Some((_, l)) => l?,
        None => return Err(MatrixMarketError::MissingBanner),
    };
    let tokens: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(MatrixMarketError::MissingBanner);
    }
    let (object, format, field, symmetry) = (&tokens[1], &tokens[2], &tokens[3], &tokens[4]);
    if object != "matrix" || format != "coordinate" {
        return Err(MatrixMarketError::Unsupported(format!("{object} {format}")));
    }
    if !matches!(field.as_str(), "real" | "double" | "integer") {
        return Err(MatrixMarketError::Unsupported(format!("field '{field}'")));
    }
    if symmetry != "symmetric" {
        return Err(MatrixMarketError::Unsupported(format!("symmetry '{symmetry}'")));
    }

    let mut data = lines.filter_map(|(no, l)| match l {
        Ok(text) => {
            let t = text.trim();
            (!t.is_empty() && !t.starts_with('%')).then(|| Ok((no, t.to_string())))
        }
        Err(e) => Some(Err(e)),
    });

    let (size_no, size_line) = data.next().transpose()?.ok_or_else(|| parse_err(1, "missing size line"))?;
    let dims: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| parse_err(size_no, format!("bad size token '{t}'"))))
        .collect::<Result<_, _>>()?;
    if dims.len() != 3 {
        return Err(parse_err(size_no, "size line must be 'rows cols entries'"));
    }
    let (n_rows, n_cols, n_entries) = (dims[0], dims[1], dims[2]);
    if n_rows != n_cols {
        return Err(MatrixMarketError::Unsupported(format!("non-square {n_rows}x{n_cols} matrix")));
    }

    let mut triplets = Vec::with_capacity(n_entries);
    for item in data {
        let (no, line) = item?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(parse_err(no, format!("expected 'i j value', got '{line}'")));
        }
        let index = |t: &str| -> Result<usize, MatrixMarketError> {
            match t.parse::<usize>() {
                Ok(i) if (1..=n_rows).contains(&i) => Ok(i - 1),
                _ => Err(parse_err(no, format!("index '{t}' outside 1..={n_rows}"))),
            }
        };
        let (i, j) = (index(parts[0])?, index(parts[1])?);
        let v: f64 = parts[2].parse().map_err(|_| parse_err(no, format!("bad value '{}'", parts[2])))?;
        if !v.is_finite() {
            return Err(parse_err(no, format!("non-finite value '{}'", parts[2])));
        }
        triplets.push((i, j, v));
    }
    if triplets.len() != n_entries {
        return Err(MatrixMarketError::EntryCount { expected: n_entries, found: triplets.len() });
    }

    let header = MatrixMarketHeader {
        object: object.clone(),
        format: format.clone(),
        field: field.clone(),
        symmetry: symmetry.clone(),
        n_rows,
        n_cols,
        n_entries,
    };
    let op = SpdOperator::sparse_from_triangle(n_rows, triplets)?;
    Ok((header, op))
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SpdOperator, MatrixMarketError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| MatrixMarketError::Io { path: path.to_path_buf(), source })?;
    parse_matrix_market(BufReader::new(file)).map(|(_, op)| op)
}

/// Writes the lower triangle of `a` with round-trip exact values.
pub fn write_matrix_market<W: Write>(mut w: W, a: &SpdOperator) -> io::Result<()> {
    let entries = a.lower_triplets();
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", a.dim(), a.dim(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {}", i + 1, j + 1, fmt_num(v))?;
    }
    Ok(())
}
