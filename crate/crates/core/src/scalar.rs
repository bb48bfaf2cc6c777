//! Scalar fields a frame can live over.
//!
//! Everything in the crate is generic over [`Scalar`], which is implemented
//! for `f64` (real frames) and [`Complex64`] (complex frames). The adjoint
//! `^H` is the transpose in the real case and the conjugate transpose in the
//! complex case; nalgebra's `adjoint` handles both.

use std::fmt;
use std::str::FromStr;

use nalgebra::ComplexField;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// The field of scalars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Real => f.write_str("real"),
            Field::Complex => f.write_str("complex"),
        }
    }
}

impl FromStr for Field {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "real" => Ok(Field::Real),
            "complex" => Ok(Field::Complex),
            other => Err(format!("unknown field `{other}` (expected real or complex)")),
        }
    }
}

/// A scalar type usable as frame entries.
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync + 'static {
    const FIELD: Field;

    /// Draw a standard normal scalar. Complex draws have independent real and
    /// imaginary parts of variance 1/2, so `E|z|^2 = 1` in both fields.
    fn sample_standard<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn parse_token(token: &str) -> Option<Self>;

    fn format_token(&self) -> String;
}

impl Scalar for f64 {
    const FIELD: Field = Field::Real;

    fn sample_standard<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn parse_token(token: &str) -> Option<Self> {
        token.parse().ok()
    }

    fn format_token(&self) -> String {
        format!("{self}")
    }
}

impl Scalar for Complex64 {
    const FIELD: Field = Field::Complex;

    fn sample_standard<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    fn parse_token(token: &str) -> Option<Self> {
        parse_complex(token)
    }

    fn format_token(&self) -> String {
        format!("{}{:+}i", self.re, self.im)
    }
}

/// Parse `a+bi`, `a-bi`, `bi` or a bare real `a`.
fn parse_complex(token: &str) -> Option<Complex64> {
    let Some(body) = token.strip_suffix('i') else {
        return token.parse().ok().map(|re| Complex64::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    // Split at the last sign that is not a leading sign or an exponent sign.
    let split = (1..bytes.len())
        .rev()
        .find(|&j| matches!(bytes[j], b'+' | b'-') && !matches!(bytes[j - 1], b'e' | b'E'));
    match split {
        Some(j) => {
            let re = body[..j].parse().ok()?;
            let im = parse_imaginary(&body[j..])?;
            Some(Complex64::new(re, im))
        }
        None => parse_imaginary(body).map(|im| Complex64::new(0.0, im)),
    }
}

fn parse_imaginary(s: &str) -> Option<f64> {
    match s {
        "" | "+" => Some(1.0),
        "-" => Some(-1.0),
        _ => s.parse().ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_tokens() {
        assert_eq!(parse_complex("1+2i"), Some(Complex64::new(1.0, 2.0)));
        assert_eq!(parse_complex("-1.5-0.25i"), Some(Complex64::new(-1.5, -0.25)));
        assert_eq!(parse_complex("1e-3+2E+1i"), Some(Complex64::new(1e-3, 20.0)));
        assert_eq!(parse_complex("-i"), Some(Complex64::new(0.0, -1.0)));
        assert_eq!(parse_complex("3.5"), Some(Complex64::new(3.5, 0.0)));
        assert_eq!(parse_complex("2.5i"), Some(Complex64::new(0.0, 2.5)));
        assert_eq!(parse_complex("x+yi"), None);
    }

    #[test]
    fn complex_format_round_trips() {
        for z in [
            Complex64::new(0.1, -0.2),
            Complex64::new(-3.0, 0.0),
            Complex64::new(1e-300, 7.25e12),
        ] {
            assert_eq!(parse_complex(&z.format_token()), Some(z));
        }
    }
}
