//! Text formats for partially observed matrices, frames and score tables.
//!
//! * dense CSV: comma separated, no header, empty cell or `NA` = unobserved;
//! * coordinate triplets: a header line `n d nnz` followed by `nnz` lines of
//!   whitespace separated `row col value` with 1-based indices. Blank lines and
//!   lines starting with `%` are ignored;
//! * plain dense CSV (frames, scores): comma separated reals, no header.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::{DataError, Mask, PartialMatrix};
use crate::linalg::{DenseMatrix, Frame};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartialFormat {
    DenseCsv,
    CoordinateTriplet,
}

impl FromStr for PartialFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dense-csv" | "csv" => Ok(Self::DenseCsv),
            "coordinate-triplet" | "triplet" => Ok(Self::CoordinateTriplet),
            other => Err(format!(
                "unknown format `{other}` (expected dense-csv or coordinate-triplet)"
            )),
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> DataError {
    DataError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_real(cell: &str, line: usize) -> Result<f64, DataError> {
    let v: f64 = cell
        .parse()
        .map_err(|_| parse_err(line, format!("`{cell}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("`{cell}` is not finite")));
    }
    Ok(v)
}

/// Parses header-free dense CSV with `NA` / empty cells marking missing values.
pub fn parse_dense_csv(text: &str) -> Result<PartialMatrix, DataError> {
    let mut values = Vec::new();
    let mut bits = Vec::new();
    let mut width = None;
    let mut n = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let cells: Vec<&str> = raw.split(',').map(str::trim).collect();
        match width {
            None => width = Some(cells.len()),
            Some(w) if w != cells.len() => {
                return Err(parse_err(
                    line,
                    format!("expected {w} fields, found {}", cells.len()),
                ))
            }
            _ => {}
        }
        for cell in cells {
            if cell.is_empty() || cell == "NA" {
                values.push(0.0);
                bits.push(false);
            } else {
                values.push(parse_real(cell, line)?);
                bits.push(true);
            }
        }
        n += 1;
    }
    let d = width.ok_or_else(|| parse_err(1, "empty input"))?;
    let y = DenseMatrix::from_row_major(n, d, values)?;
    PartialMatrix::new(&y, Mask::new(n, d, bits)?)
}

/// Parses a coordinate-triplet document (`n d nnz` header, 1-based entries).
pub fn parse_triplets(text: &str) -> Result<PartialMatrix, DataError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(parse_err(hline, "header must be `n d nnz`"));
    }
    let dims: Vec<usize> = fields
        .iter()
        .map(|f| {
            f.parse()
                .map_err(|_| parse_err(hline, format!("`{f}` is not a nonnegative integer")))
        })
        .collect::<Result<_, _>>()?;
    let (n, d, nnz) = (dims[0], dims[1], dims[2]);
    if n == 0 || d == 0 {
        return Err(parse_err(hline, "dimensions must be positive"));
    }
    let cells = n
        .checked_mul(d)
        .filter(|&c| c <= 1 << 31)
        .ok_or_else(|| parse_err(hline, "matrix too large"))?;
    if nnz > cells {
        return Err(parse_err(hline, "more entries than cells"));
    }
    let mut values = vec![0.0; cells];
    let mut bits = vec![false; cells];
    let mut seen = HashSet::with_capacity(nnz);
    let mut count = 0;
    for (line, body) in lines {
        let f: Vec<&str> = body.split_whitespace().collect();
        if f.len() != 3 {
            return Err(parse_err(line, "expected `row col value`"));
        }
        let row: usize = f[0]
            .parse()
            .map_err(|_| parse_err(line, format!("bad row index `{}`", f[0])))?;
        let col: usize = f[1]
            .parse()
            .map_err(|_| parse_err(line, format!("bad column index `{}`", f[1])))?;
        if row == 0 || row > n || col == 0 || col > d {
            return Err(parse_err(
                line,
                format!("coordinate ({row}, {col}) outside {n}x{d}"),
            ));
        }
        let v = parse_real(f[2], line)?;
        if !seen.insert((row, col)) {
            return Err(DataError::Duplicate { line, row, col });
        }
        count += 1;
        if count > nnz {
            return Err(parse_err(line, format!("more than the declared {nnz} entries")));
        }
        let pos = (row - 1) * d + (col - 1);
        values[pos] = v;
        bits[pos] = true;
    }
    if count != nnz {
        return Err(parse_err(
            hline,
            format!("header declares {nnz} entries, found {count}"),
        ));
    }
    let y = DenseMatrix::from_row_major(n, d, values)?;
    PartialMatrix::new(&y, Mask::new(n, d, bits)?)
}

pub fn parse_partial(text: &str, format: PartialFormat) -> Result<PartialMatrix, DataError> {
    match format {
        PartialFormat::DenseCsv => parse_dense_csv(text),
        PartialFormat::CoordinateTriplet => parse_triplets(text),
    }
}

/// Dense CSV with `NA` for unobserved entries. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn format_dense_csv(pm: &PartialMatrix) -> String {
    let mut out = String::new();
    for i in 0..pm.n() {
        for j in 0..pm.d() {
            if j > 0 {
                out.push(',');
            }
            if pm.is_observed(i, j) {
                let _ = write!(out, "{}", pm.values()[(i, j)]);
            } else {
                out.push_str("NA");
            }
        }
        out.push('\n');
    }
    out
}

pub fn format_triplets(pm: &PartialMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", pm.n(), pm.d(), pm.mask().count());
    for i in 0..pm.n() {
        for j in 0..pm.d() {
            if pm.is_observed(i, j) {
                let _ = writeln!(out, "{} {} {}", i + 1, j + 1, pm.values()[(i, j)]);
            }
        }
    }
    out
}

fn read(path: &Path) -> Result<String, DataError> {
    fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), DataError> {
    fs::write(path, text).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_partial(path: impl AsRef<Path>, format: PartialFormat) -> Result<PartialMatrix, DataError> {
    parse_partial(&read(path.as_ref())?, format)
}

pub fn save_partial(
    pm: &PartialMatrix,
    path: impl AsRef<Path>,
    format: PartialFormat,
) -> Result<(), DataError> {
    let text = match format {
        PartialFormat::DenseCsv => format_dense_csv(pm),
        PartialFormat::CoordinateTriplet => format_triplets(pm),
    };
    write(path.as_ref(), &text)
}

/// Parses a header-free CSV of reals with no missing cells.
pub fn parse_dense_matrix(text: &str) -> Result<DenseMatrix, DataError> {
    let mut data = Vec::new();
    let mut width = None;
    let mut n = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let cells: Vec<&str> = raw.split(',').map(str::trim).collect();
        match width {
            None => width = Some(cells.len()),
            Some(w) if w != cells.len() => {
                return Err(parse_err(
                    line,
                    format!("expected {w} fields, found {}", cells.len()),
                ))
            }
            _ => {}
        }
        for cell in cells {
            data.push(parse_real(cell, line)?);
        }
        n += 1;
    }
    let d = width.ok_or_else(|| parse_err(1, "empty input"))?;
    Ok(DenseMatrix::from_row_major(n, d, data)?)
}

pub fn format_dense_matrix(m: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        for (j, v) in m.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix, DataError> {
    parse_dense_matrix(&read(path.as_ref())?)
}

pub fn save_matrix(m: &DenseMatrix, path: impl AsRef<Path>) -> Result<(), DataError> {
    write(path.as_ref(), &format_dense_matrix(m))
}

/// Loads a `d × K` CSV and checks that its columns are orthonormal.
pub fn load_frame(path: impl AsRef<Path>) -> Result<Frame, DataError> {
    Ok(Frame::new(load_matrix(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_csv_with_na() {
        let pm = parse_dense_csv("1,NA\n3,4\n").unwrap();
        assert_eq!(pm.mask().to_dense().as_slice(), &[1.0, 0.0, 1.0, 1.0]);
        assert_eq!(pm.values().as_slice(), &[1.0, 0.0, 3.0, 4.0]);
    }

    #[test]
    fn dense_csv_empty_cell_is_missing() {
        let pm = parse_dense_csv("1,,2\r\n,5,6").unwrap();
        assert_eq!(pm.mask().count(), 4);
        assert!(!pm.is_observed(0, 1) && !pm.is_observed(1, 0));
    }

    #[test]
    fn dense_csv_errors_carry_line_numbers() {
        match parse_dense_csv("1,2\n3,x\n") {
            Err(DataError::Parse { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse_dense_csv("1,2\n3\n") {
            Err(DataError::Parse { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_dense_csv("").is_err());
        assert!(parse_dense_csv("inf,1").is_err());
    }

    #[test]
    fn triplets_basic() {
        let pm = parse_triplets("2 3 3\n1 1 1.5\n2 3 -2\n1 2 4\n").unwrap();
        assert_eq!((pm.n(), pm.d()), (2, 3));
        assert_eq!(pm.mask().count(), 3);
        assert_eq!(pm.values()[(1, 2)], -2.0);
    }

    #[test]
    fn triplet_errors() {
        assert!(matches!(
            parse_triplets("2 2 2\n1 1 1\n1 1 2\n"),
            Err(DataError::Duplicate { line: 3, row: 1, col: 1 })
        ));
        assert!(matches!(
            parse_triplets("2 2 1\n1 x 1\n"),
            Err(DataError::Parse { line: 2, .. })
        ));
        assert!(parse_triplets("2 2 1\n3 1 1\n").is_err());
        assert!(parse_triplets("2 2 2\n1 1 1\n").is_err());
        assert!(parse_triplets("2 2 1\n1 1 1\n2 2 2\n").is_err());
        assert!(parse_triplets("2 2\n").is_err());
        assert!(parse_triplets("0 2 0\n").is_err());
    }

    #[test]
    fn format_parsing() {
        assert_eq!("dense-csv".parse::<PartialFormat>(), Ok(PartialFormat::DenseCsv));
        assert_eq!(
            "triplet".parse::<PartialFormat>(),
            Ok(PartialFormat::CoordinateTriplet)
        );
        assert!("xml".parse::<PartialFormat>().is_err());
    }
}
