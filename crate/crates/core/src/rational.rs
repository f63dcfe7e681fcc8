//! Exact rational helpers shared by capacities and rates.

use num_rational::Rational64;
use num_traits::Zero;

use crate::{Error, Result};

/// Parses `"P/Q"` or a bare integer `"P"` into an exact rational.
/// Decimal notation is rejected: rates like one half must be written `1/2`.
pub fn parse_rational(s: &str) -> Result<Rational64> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let num: i64 = num
        .parse()
        .map_err(|_| Error::BadFormat(format!("bad rational `{s}`")))?;
    let den: i64 = den
        .parse()
        .map_err(|_| Error::BadFormat(format!("bad rational `{s}`")))?;
    if den == 0 {
        return Err(Error::BadFormat(format!("zero denominator in `{s}`")));
    }
    Ok(Rational64::new(num, den))
}

/// Renders a rational as `P` when integral, `P/Q` otherwise.
pub fn display_rational(r: Rational64) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// `r * n` as an exact bit count, or `None` when it is not a nonnegative
/// integer.
pub fn integral_bits(r: Rational64, n: u32) -> Option<u32> {
    let scaled = r * Rational64::from_integer(i64::from(n));
    if *scaled.denom() != 1 || scaled < Rational64::zero() {
        return None;
    }
    u32::try_from(*scaled.numer()).ok()
}
