//! Embedding table and its text file format.
//!
//! ```text
//! N D
//! v_0_0 v_0_1 ... v_0_{D-1}
//! ...
//! ```
//!
//! Row `i` belongs to post id `i`. Values are written in Rust's shortest
//! round-trip decimal form, so a write/read cycle reproduces every bit.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimator::CONTENT_DIM;

use super::PostId;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingTable {
    /// `data` is row-major with `dim` columns.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
        }
        if data.len() % dim != 0 {
            return Err(Error::InvalidArgument(format!(
                "{} values do not form rows of width {dim}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding table"));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has {} values, expected {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, post: PostId) -> Option<&[f64]> {
        let start = post as usize * self.dim;
        self.data.get(start..start + self.dim)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Reads an embedding file whose dimension must be the estimator's content width.
pub fn read_embeddings(path: &Path) -> Result<EmbeddingTable> {
    read_embeddings_with_dim(path, Some(CONTENT_DIM))
}

/// Reads an embedding file, optionally enforcing the declared dimension.
pub fn read_embeddings_with_dim(path: &Path, expected_dim: Option<usize>) -> Result<EmbeddingTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::io(path, e))?,
        None => return Err(Error::parse(path, 1, "missing `N D` header")),
    };
    let mut fields = header.split_whitespace();
    let (n, d) = match (fields.next(), fields.next(), fields.next()) {
        (Some(n), Some(d), None) => match (n.parse::<usize>(), d.parse::<usize>()) {
            (Ok(n), Ok(d)) => (n, d),
            _ => return Err(Error::parse(path, 1, format!("bad header `{header}`"))),
        },
        _ => return Err(Error::parse(path, 1, format!("bad header `{header}`"))),
    };
    if let Some(expected) = expected_dim {
        if d != expected {
            return Err(Error::parse(
                path,
                1,
                format!("embedding dimension {d}, expected {expected}"),
            ));
        }
    }
    if d == 0 {
        return Err(Error::parse(path, 1, "embedding dimension must be positive"));
    }

    let mut data = Vec::with_capacity(n * d);
    let mut rows = 0;
    for (idx, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if rows == n {
            return Err(Error::parse(path, idx + 2, format!("more than {n} rows")));
        }
        let before = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(path, idx + 2, format!("row {rows}: bad value `{tok}`")))?;
            if !v.is_finite() {
                return Err(Error::parse(path, idx + 2, format!("row {rows}: non-finite value")));
            }
            data.push(v);
        }
        let got = data.len() - before;
        if got != d {
            return Err(Error::parse(
                path,
                idx + 2,
                format!("row {rows} has {got} values, expected {d}"),
            ));
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::parse(path, rows + 1, format!("header declares {n} rows, found {rows}")));
    }
    EmbeddingTable::new(d, data)
}

pub fn write_embeddings(path: &Path, table: &EmbeddingTable) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut line = String::new();
    let io = |e| Error::io(path, e);
    writeln!(out, "{} {}", table.len(), table.dim()).map_err(io)?;
    for row in table.rows() {
        line.clear();
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                line.push(' ');
            }
            write!(line, "{v}").expect("writing to a String");
        }
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng as _;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        let mut r = rng::seeded(1);
        let data: Vec<f64> = (0..5 * 512).map(|_| r.random_range(-3.0..3.0)).collect();
        let table = EmbeddingTable::new(512, data).unwrap();
        write_embeddings(&path, &table).unwrap();
        assert_eq!(read_embeddings(&path).unwrap(), table);
    }

    #[test]
    fn short_row_reports_row_index() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        let good = vec!["0.5"; 512].join(" ");
        let bad = vec!["0.5"; 511].join(" ");
        std::fs::write(&path, format!("2 512\n{good}\n{bad}\n")).unwrap();
        let err = read_embeddings(&path).unwrap_err().to_string();
        assert!(err.contains("row 1 has 511 values"), "{err}");
    }

    #[test]
    fn wrong_dimension_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        std::fs::write(&path, "1 3\n1 2 3\n").unwrap();
        assert!(read_embeddings(&path).is_err());
        let table = read_embeddings_with_dim(&path, None).unwrap();
        assert_eq!(table.row(0).unwrap(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn row_count_must_match_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        std::fs::write(&path, "3 2\n1 2\n3 4\n").unwrap();
        assert!(read_embeddings_with_dim(&path, None).is_err());
    }
}
