//! CSV matrix files: a `rows,cols` header line followed by one line per row,
//! entries written with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use super::RealMatrix;
use crate::error::{Error, Result};

/// Formats a value with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_csv_string(a: &RealMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{},{}", a.rows(), a.cols());
    for i in 0..a.rows() {
        let line: Vec<String> = a.row(i).iter().map(|&v| fmt17(v)).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

pub fn from_csv_str(text: &str) -> Result<RealMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing rows,cols header".into(),
    })?;
    let dims: Vec<&str> = header.split(',').map(str::trim).collect();
    let parse_dim = |s: &str| {
        s.parse::<usize>().map_err(|e| Error::Parse {
            line: hline,
            message: format!("bad dimension {s:?}: {e}"),
        })
    };
    if dims.len() != 2 {
        return Err(Error::Parse {
            line: hline,
            message: format!("header must be rows,cols, got {header:?}"),
        });
    }
    let (rows, cols) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (lineno, line) in lines {
        if seen == rows {
            return Err(Error::Parse {
                line: lineno,
                message: format!("more than {rows} data rows"),
            });
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {cols} fields, got {}", fields.len()),
            });
        }
        for f in fields {
            let v: f64 = f.parse().map_err(|e| Error::Parse {
                line: lineno,
                message: format!("bad number {f:?}: {e}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("non-finite value {f:?}"),
                });
            }
            data.push(v);
        }
        seen += 1;
    }
    if seen != rows {
        return Err(Error::Parse {
            line: hline + seen + 1,
            message: format!("expected {rows} data rows, got {seen}"),
        });
    }
    RealMatrix::new(rows, cols, data)
}

pub fn read_csv(path: &Path) -> Result<RealMatrix> {
    from_csv_str(&std::fs::read_to_string(path)?)
}

pub fn write_csv(path: &Path, a: &RealMatrix) -> Result<()> {
    std::fs::write(path, to_csv_string(a))?;
    Ok(())
}
