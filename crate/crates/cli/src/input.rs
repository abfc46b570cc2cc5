// SPDX-License-Identifier: MIT OR Apache-2.0

//! Loading observations, kernel matrices and generated data.

use std::path::{Path, PathBuf};

use gkcp::{GramSummary, Sequence};
use gkcp_bench::{generate, GeneratorSpec};
use serde::Serialize;

use crate::error::DataError;

/// A dense row-major matrix read from CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

/// Reads a numeric CSV without a header (or skipping one). Errors name the
/// file line of the offending row.
pub fn read_matrix(path: &Path, skip_header: bool) -> Result<Matrix, DataError> {
    let file = std::fs::File::open(path)
        .map_err(|e| DataError(format!("cannot read {}: {e}", path.display())))?;
    read_matrix_from(file, &path.display().to_string(), skip_header)
}

pub fn read_matrix_from<R: std::io::Read>(
    reader: R,
    name: &str,
    skip_header: bool,
) -> Result<Matrix, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(skip_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut cols: Option<usize> = None;
    let mut values = Vec::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| DataError(format!("{name}: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        let width = *cols.get_or_insert(rec.len());
        if rec.len() != width {
            return Err(DataError(format!(
                "{name}: line {line}: expected {width} columns, found {}",
                rec.len()
            )));
        }
        for (j, cell) in rec.iter().enumerate() {
            let x: f64 = cell.parse().map_err(|_| {
                DataError(format!(
                    "{name}: line {line}, column {}: '{cell}' is not a number",
                    j + 1
                ))
            })?;
            if !x.is_finite() {
                return Err(DataError(format!(
                    "{name}: line {line}, column {}: non-finite value",
                    j + 1
                )));
            }
            values.push(x);
        }
        rows += 1;
    }
    match cols {
        Some(cols) if cols > 0 => Ok(Matrix { rows, cols, values }),
        _ => Err(DataError(format!("{name}: no data rows"))),
    }
}

/// Where the analysed data came from.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum InputInfo {
    Csv {
        path: PathBuf,
        skip_header: bool,
        n: usize,
        d: usize,
    },
    Gram {
        path: PathBuf,
        skip_header: bool,
        n: usize,
    },
    Generator {
        spec: GeneratorSpec,
    },
}

pub enum Data {
    Observations(Sequence<f64>),
    Kernel(Box<GramSummary<f64>>),
}

pub fn load_csv(path: &Path, skip_header: bool) -> anyhow::Result<(Data, InputInfo)> {
    let m = read_matrix(path, skip_header)?;
    let seq = Sequence::new(m.rows, m.cols, m.values)?;
    let info = InputInfo::Csv {
        path: path.to_path_buf(),
        skip_header,
        n: m.rows,
        d: m.cols,
    };
    Ok((Data::Observations(seq), info))
}

pub fn load_gram(path: &Path, skip_header: bool) -> anyhow::Result<(Data, InputInfo)> {
    let m = read_matrix(path, skip_header)?;
    if m.rows != m.cols {
        return Err(DataError(format!(
            "{}: a kernel matrix must be square, got {} rows and {} columns",
            path.display(),
            m.rows,
            m.cols
        ))
        .into());
    }
    let g = GramSummary::from_kernel(m.rows, m.values)?;
    let info = InputInfo::Gram {
        path: path.to_path_buf(),
        skip_header,
        n: m.rows,
    };
    Ok((Data::Kernel(Box::new(g)), info))
}

pub fn load_generated(spec: &GeneratorSpec) -> anyhow::Result<(Data, InputInfo)> {
    let seq = generate(spec)?;
    Ok((
        Data::Observations(seq),
        InputInfo::Generator { spec: *spec },
    ))
}

/// Writes `seq` as CSV with round-trip exact values.
pub fn write_sequence<W: std::io::Write>(
    mut w: W,
    seq: &Sequence<f64>,
    header: bool,
) -> std::io::Result<()> {
    if header {
        let names: Vec<String> = (1..=seq.d()).map(|j| format!("x{j}")).collect();
        writeln!(w, "{}", names.join(","))?;
    }
    let mut line = String::new();
    for i in 0..seq.n() {
        line.clear();
        for (j, x) in seq.row(i).iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&x.to_string());
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(s: &str, skip: bool) -> Result<Matrix, DataError> {
        read_matrix_from(s.as_bytes(), "mem", skip)
    }

    #[test]
    fn reads_rows() {
        let m = read("1, 2\n3,4.5\n", false).unwrap();
        assert_eq!((m.rows, m.cols), (2, 2));
        assert_eq!(m.values, vec![1.0, 2.0, 3.0, 4.5]);
        let m = read("a,b\n1,2\n", true).unwrap();
        assert_eq!(m.rows, 1);
    }

    #[test]
    fn ragged_row_names_its_line() {
        let e = read("1,2\n3,4\n5\n", false).unwrap_err();
        assert!(e.0.contains("line 3"), "{e}");
        let e = read("h1,h2\n1,2\n3\n", true).unwrap_err();
        assert!(e.0.contains("line 3"), "{e}");
    }

    #[test]
    fn bad_cells() {
        assert!(read("1,x\n", false).unwrap_err().0.contains("column 2"));
        assert!(read("1,NaN\n", false).unwrap_err().0.contains("non-finite"));
        assert!(read("", false).is_err());
    }

    #[test]
    fn written_values_read_back_exactly() {
        let vals = vec![
            0.1,
            -1.0 / 3.0,
            1e-300,
            123456.789,
            std::f64::consts::PI,
            2.0,
        ];
        let seq = Sequence::new(3, 2, vals.clone()).unwrap();
        let mut buf = Vec::new();
        write_sequence(&mut buf, &seq, true).unwrap();
        let m = read_matrix_from(buf.as_slice(), "mem", true).unwrap();
        assert_eq!(m.values, vals);
    }
}
