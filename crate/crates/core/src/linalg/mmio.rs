//! Matrix Market coordinate format (`real general`), 1-based indices.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::{SparseMatrix, Triplets};

pub fn write_matrix_market<T: Real, W: Write>(a: &SparseMatrix<T>, mut w: W) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz())?;
    for i in 0..a.n_rows() {
        for (j, v) in a.row(i) {
            writeln!(w, "{} {} {:e}", i + 1, j + 1, v.to_f64_lossy())?;
        }
    }
    Ok(())
}

/// Reads `coordinate real general` or `coordinate pattern general`; pattern
/// entries are stored as ones.
pub fn read_matrix_market<T: Real, R: BufRead>(r: R) -> Result<SparseMatrix<T>> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty Matrix Market stream".into()))??;
    let banner: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if banner.len() < 5 || banner[0] != "%%matrixmarket" || banner[1] != "matrix" {
        return Err(Error::Parse(format!("bad banner: {header}")));
    }
    if banner[2] != "coordinate" || banner[4] != "general" {
        return Err(Error::Parse(format!("unsupported layout: {header}")));
    }
    let pattern = match banner[3].as_str() {
        "real" | "integer" => false,
        "pattern" => true,
        other => return Err(Error::Parse(format!("unsupported field type {other}"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut t = Triplets::new();
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let mut it = line.split_whitespace();
        let mut next_usize = |what: &str| -> Result<usize> {
            it.next()
                .ok_or_else(|| Error::Parse(format!("missing {what} in '{line}'")))?
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("{what}: {e}")))
        };
        match size {
            None => {
                let (m, n, nnz) = (next_usize("rows")?, next_usize("cols")?, next_usize("nnz")?);
                size = Some((m, n, nnz));
            }
            Some((m, n, _)) => {
                let (i, j) = (next_usize("row")?, next_usize("col")?);
                if i == 0 || j == 0 || i > m || j > n {
                    return Err(Error::Parse(format!("index out of range in '{line}'")));
                }
                let v = if pattern {
                    T::one()
                } else {
                    let s = it
                        .next()
                        .ok_or_else(|| Error::Parse(format!("missing value in '{line}'")))?;
                    let v: f64 = s.parse().map_err(|e| Error::Parse(format!("value: {e}")))?;
                    T::lit(v)
                };
                t.push(i - 1, j - 1, v);
            }
        }
    }
    let (m, n, nnz) = size.ok_or_else(|| Error::Parse("missing size line".into()))?;
    if t.len() != nnz {
        return Err(Error::Parse(format!("expected {nnz} entries, found {}", t.len())));
    }
    Ok(SparseMatrix::from_triplets(m, n, &t))
}
