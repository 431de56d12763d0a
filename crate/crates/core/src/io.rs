//! File formats: headerless CSV of decimal floats for matrices (one row per
//! line) and vectors (single column). Writers emit 17 significant digits.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn matrix_to_csv(a: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in a.rows() {
        let line: Vec<String> = row.iter().map(|v| format_float(*v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn vector_to_csv(v: &Array1<f64>) -> String {
    let mut out = String::new();
    for x in v.iter() {
        out.push_str(&format_float(*x));
        out.push('\n');
    }
    out
}

pub fn matrix_from_csv(text: &str) -> Result<Array2<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 1,
                    msg: format!("bad float {tok:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected {} fields, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "empty matrix file".into(),
        });
    }
    let p = rows[0].len();
    let n = rows.len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((n, p), flat)
        .map_err(|e| Error::invalid(format!("bad matrix shape: {e}")))
}

pub fn vector_from_csv(text: &str) -> Result<Array1<f64>> {
    let m = matrix_from_csv(text)?;
    if m.ncols() != 1 {
        return Err(Error::invalid(format!(
            "expected a single-column vector file, found {} columns",
            m.ncols()
        )));
    }
    Ok(m.column(0).to_owned())
}

pub fn write_matrix(path: &Path, a: &Array2<f64>) -> Result<()> {
    fs::write(path, matrix_to_csv(a))?;
    Ok(())
}

pub fn write_vector(path: &Path, v: &Array1<f64>) -> Result<()> {
    fs::write(path, vector_to_csv(v))?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    matrix_from_csv(&fs::read_to_string(path)?)
}

pub fn read_vector(path: &Path) -> Result<Array1<f64>> {
    vector_from_csv(&fs::read_to_string(path)?)
}
