//! Exact rational probabilities and their `"p/q"` text form.

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = Ratio<i64>;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("cannot parse {text:?} as a rational")]
pub struct ParseRationalError {
    pub text: String,
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"0.25"`
/// (decimals are converted exactly).
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError {
        text: text.to_string(),
    };
    let s = text.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| err())?;
        let q: i64 = q.trim().parse().map_err(|_| err())?;
        if q == 0 {
            return Err(err());
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 15 {
            return Err(err());
        }
        let negative = int.starts_with('-');
        let int_part: i64 = match int.trim_start_matches(['-', '+']) {
            "" => 0,
            digits => digits.parse().map_err(|_| err())?,
        };
        let denom = 10i64.pow(frac.len() as u32);
        let numer = int_part
            .checked_mul(denom)
            .and_then(|x| x.checked_add(frac.parse::<i64>().ok()?))
            .ok_or_else(err)?;
        let value = Rational::new(numer, denom);
        return Ok(if negative { -value } else { value });
    }
    s.parse::<i64>()
        .map(Rational::from_integer)
        .map_err(|_| err())
}

/// `"p/q"`, or `"p"` for integers.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn sum<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Rational {
    values.into_iter().fold(Rational::zero(), |acc, x| acc + x)
}
