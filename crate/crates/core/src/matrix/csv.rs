//! CSV interchange: one row per sensor node, one column per timestamp, '.' decimals.
//! Masks use the same layout with 0/1 cells. A single header line is optional and
//! must be flagged by the caller.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::{BinaryIndexMatrix, EnvironmentMatrix};
use crate::{Error, Result};

pub(crate) fn parse_matrix<R: Read>(
    reader: R,
    has_header: bool,
    path: &Path,
) -> Result<DMatrix<f64>> {
    let mut rdr = ::csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(::csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        let row = rec
            .iter()
            .map(|cell| {
                cell.parse::<f64>().map_err(|_| {
                    Error::format(path, format!("row {}: cannot parse {cell:?}", line + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::format(
                    path,
                    format!(
                        "row {} has {} columns, expected {}",
                        line + 1,
                        row.len(),
                        first.len()
                    ),
                ));
            }
        }
        rows.push(row);
    }
    let n = rows.len();
    let t = rows.first().map_or(0, Vec::len);
    if n == 0 || t == 0 {
        return Err(Error::format(path, "no data rows"));
    }
    Ok(DMatrix::from_fn(n, t, |i, j| rows[i][j]))
}

pub(crate) fn render_matrix(m: &DMatrix<f64>, header: bool) -> String {
    let mut out = String::new();
    if header {
        let cols: Vec<String> = (0..m.ncols()).map(|j| format!("t{j}")).collect();
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn read_matrix_csv(path: impl AsRef<Path>, has_header: bool) -> Result<EnvironmentMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let m = parse_matrix(file, has_header, path)?;
    EnvironmentMatrix::new(m).map_err(|e| Error::format(path, e.to_string()))
}

pub fn read_mask_csv(path: impl AsRef<Path>, has_header: bool) -> Result<BinaryIndexMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let m = parse_matrix(file, has_header, path)?;
    BinaryIndexMatrix::from_f64(&m).map_err(|e| Error::format(path, e.to_string()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn write_matrix_csv(path: impl AsRef<Path>, m: &DMatrix<f64>, header: bool) -> Result<()> {
    write_text(path.as_ref(), &render_matrix(m, header))
}

pub fn write_mask_csv(
    path: impl AsRef<Path>,
    mask: &BinaryIndexMatrix,
    header: bool,
) -> Result<()> {
    write_text(path.as_ref(), &render_matrix(&mask.to_f64(), header))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_and_without_header() {
        let p = Path::new("inline");
        let m = parse_matrix("1,2.5,3\n4,5,-6e-1\n".as_bytes(), false, p).unwrap();
        assert_eq!(
            m,
            DMatrix::from_row_slice(2, 3, &[1.0, 2.5, 3.0, 4.0, 5.0, -0.6])
        );
        let m = parse_matrix("a,b\n1,2\n".as_bytes(), true, p).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(1, 2, &[1.0, 2.0]));
    }

    #[test]
    fn unflagged_header_is_an_error() {
        let err = parse_matrix("a,b\n1,2\n".as_bytes(), false, Path::new("x.csv")).unwrap_err();
        assert!(err.to_string().contains("x.csv"));
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(parse_matrix("1,2\n3\n".as_bytes(), false, Path::new("r")).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = DMatrix::from_row_slice(2, 2, &[0.1, 1e-17, -3.25, 1e300]);
        write_matrix_csv(&path, &m, true).unwrap();
        assert_eq!(read_matrix_csv(&path, true).unwrap().data(), &m);

        let mask = BinaryIndexMatrix::from_fn(2, 3, |i, j| (i + j) % 2 == 0);
        let mpath = dir.path().join("b.csv");
        write_mask_csv(&mpath, &mask, false).unwrap();
        assert_eq!(read_mask_csv(&mpath, false).unwrap(), mask);
    }
}
