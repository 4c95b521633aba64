//! Exact rational arithmetic helpers shared by the residue engine and the
//! spectrum constructors.
//!
//! Every finite `f64` is a dyadic rational, so float inputs can always be
//! promoted losslessly. Model constructors prefer small-denominator
//! rationals (parsed from decimal strings) because residue coefficients
//! raise spectral gaps to large powers.

use num::bigint::{BigInt, Sign};
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Promote a finite float to the exact rational it represents.
pub fn rational_from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x)
        .ok_or_else(|| Error::InvalidArgument(format!("non-finite value {x}")))
}

/// Parse a scalar that may be written as an integer, a decimal, scientific
/// notation, or an explicit fraction `p/q`. Decimals are read exactly
/// (`0.2` becomes `1/5`, not the nearest double).
pub fn parse_exact(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let p: BigInt = num
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad numerator in {s:?}")))?;
        let q: BigInt = den
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad denominator in {s:?}")))?;
        if q.is_zero() {
            return Err(Error::InvalidArgument(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(p, q));
    }
    parse_decimal(s)
}

fn parse_decimal(s: &str) -> Result<BigRational> {
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => {
            let exp: i64 = e
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad exponent in {s:?}")))?;
            (m, exp)
        }
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    let digits = format!(
        "{}{}",
        if int_part.is_empty() { "0" } else { int_part },
        frac_part
    );
    let value: BigInt = digits
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad number {s:?}")))?;
    let scale = exp - frac_part.len() as i64;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        BigRational::from_integer(value * ten.pow(scale as u32))
    } else {
        BigRational::new(value, ten.pow((-scale) as u32))
    })
}

/// Render as `p/q` (or `p` for integers), the form used in JSON caches and
/// custom spectrum files.
pub fn format_exact(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Natural log of a positive big integer, accurate to f64 roundoff even
/// when the integer itself overflows f64.
pub fn ln_bigint(n: &BigInt) -> f64 {
    debug_assert!(n.sign() == Sign::Plus);
    let bits = n.bits();
    if bits <= 53 {
        return n.to_f64().unwrap().ln();
    }
    let shift = bits - 53;
    let top = (n >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of a positive rational. Handles magnitudes far outside the
/// f64 exponent range (the residue engine routinely produces values like
/// `x^{200}` for small `x`).
pub fn ln_rational(r: &BigRational) -> Result<f64> {
    if !r.is_positive() {
        return Err(Error::Domain(format!(
            "logarithm of non-positive rational {}",
            format_exact(r)
        )));
    }
    Ok(ln_bigint(r.numer()) - ln_bigint(r.denom()))
}

/// ln(a/b) for positive rationals, switching to `ln_1p` when the ratio is
/// close to one so that nearly-cancelling volumes keep full precision.
pub fn ln_rational_ratio(a: &BigRational, b: &BigRational) -> Result<f64> {
    if !a.is_positive() || !b.is_positive() {
        return Err(Error::Domain("log ratio of non-positive rationals".into()));
    }
    let ratio = a / b;
    let u = (&ratio - BigRational::one()).to_f64().unwrap_or(f64::NAN);
    if u.is_finite() && u.abs() < 0.5 {
        Ok(u.ln_1p())
    } else {
        ln_rational(&ratio)
    }
}

/// Factorials 0..=n as exact big integers.
pub fn factorials(n: usize) -> Vec<BigInt> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = BigInt::one();
    out.push(acc.clone());
    for k in 1..=n {
        acc *= BigInt::from(k);
        out.push(acc.clone());
    }
    out
}

/// Exact binomial coefficient as u128; errors if it cannot fit.
pub fn binomial_u128(n: u64, k: u64) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        let num = (n - i) as u128;
        acc = acc
            .checked_mul(num)
            .ok_or_else(|| Error::OverflowGuard(format!("binomial({n},{k}) exceeds u128")))?;
        acc /= (i + 1) as u128;
    }
    Ok(acc)
}
