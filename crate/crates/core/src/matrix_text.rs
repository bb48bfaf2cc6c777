//! Plain-text matrix format for frames.
//!
//! ```text
//! k n field
//! a11 a12 ... a1n
//! ...
//! ak1 ak2 ... akn
//! ```
//!
//! `field` is `real` or `complex`; complex entries are written `a+bi`.
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::frame::{Frame, FrameError};
use crate::scalar::{Field, Scalar};

#[derive(Debug, Error)]
pub enum MatrixTextError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// A frame over either field, as read from a file.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyFrame {
    Real(Frame<f64>),
    Complex(Frame<Complex64>),
}

impl AnyFrame {
    pub fn field(&self) -> Field {
        match self {
            AnyFrame::Real(_) => Field::Real,
            AnyFrame::Complex(_) => Field::Complex,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            AnyFrame::Real(a) => (a.k(), a.n()),
            AnyFrame::Complex(a) => (a.k(), a.n()),
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            AnyFrame::Real(a) => write_frame(a),
            AnyFrame::Complex(a) => write_frame(a),
        }
    }
}

pub fn write_frame<T: Scalar>(frame: &Frame<T>) -> String {
    let m = frame.matrix();
    let mut out = format!("{} {} {}\n", m.nrows(), m.ncols(), T::FIELD);
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| m[(r, c)].format_token()).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn parse_frame(text: &str) -> Result<AnyFrame, MatrixTextError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or(MatrixTextError::Parse {
        line: 1,
        message: "missing header `k n field`".into(),
    })?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let bad_header = |message: String| MatrixTextError::Parse { line: hline, message };
    if parts.len() != 3 {
        return Err(bad_header(format!("header must be `k n field`, got `{header}`")));
    }
    let k: usize = parts[0].parse().map_err(|_| bad_header(format!("bad k `{}`", parts[0])))?;
    let n: usize = parts[1].parse().map_err(|_| bad_header(format!("bad n `{}`", parts[1])))?;
    let field: Field = parts[2].parse().map_err(bad_header)?;
    let rows: Vec<(usize, &str)> = lines.collect();
    match field {
        Field::Real => Ok(AnyFrame::Real(parse_body(k, n, &rows, hline)?)),
        Field::Complex => Ok(AnyFrame::Complex(parse_body(k, n, &rows, hline)?)),
    }
}

fn parse_body<T: Scalar>(
    k: usize,
    n: usize,
    rows: &[(usize, &str)],
    header_line: usize,
) -> Result<Frame<T>, MatrixTextError> {
    if rows.len() != k {
        let line = rows.get(k).map_or(header_line + rows.len() + 1, |(l, _)| *l);
        return Err(MatrixTextError::Parse {
            line,
            message: format!("expected {k} matrix rows, found {}", rows.len()),
        });
    }
    let mut data = Vec::with_capacity(k * n);
    for &(line, row) in rows {
        let tokens: Vec<&str> = row.split_whitespace().collect();
        if tokens.len() != n {
            return Err(MatrixTextError::Parse {
                line,
                message: format!("expected {n} entries, found {}", tokens.len()),
            });
        }
        for tok in tokens {
            let x = T::parse_token(tok).ok_or_else(|| MatrixTextError::Parse {
                line,
                message: format!("cannot parse `{tok}` as a {} scalar", T::FIELD),
            })?;
            data.push(x);
        }
    }
    Ok(Frame::new(DMatrix::from_row_slice(k, n, &data))?)
}

pub fn read_frame(path: &Path) -> Result<AnyFrame, MatrixTextError> {
    parse_frame(&std::fs::read_to_string(path)?)
}

pub fn write_frame_file(path: &Path, frame: &AnyFrame) -> Result<(), MatrixTextError> {
    std::fs::write(path, frame.to_text())?;
    Ok(())
}
