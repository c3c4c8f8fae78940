//! Numeric field abstraction shared by the exact and real-valued engines.
//!
//! Every spec lives in exactly one [`Mode`]. Rational mode uses
//! arbitrary-precision fractions and compares with exact equality; real mode
//! uses `f64` and compares against [`NUM_EPS`].

use std::fmt::{Debug, Display};
use std::hash::Hash;
use std::ops::{AddAssign, MulAssign, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Global tolerance for real-mode comparisons.
pub const NUM_EPS: f64 = 1e-10;

/// Quantization step used when grouping real values by key.
pub const GROUP_QUANTUM: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rational,
    Real,
}

impl Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Rational => f.write_str("rational"),
            Mode::Real => f.write_str("real"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse {input:?} as a {mode} scalar")]
pub struct ParseScalarError {
    pub input: String,
    pub mode: Mode,
}

/// Ordered field used by all enumeration code.
pub trait Scalar:
    Signed
    + Clone
    + Debug
    + PartialOrd
    + Send
    + Sync
    + 'static
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + for<'a> MulAssign<&'a Self>
{
    /// Key used to group outcomes by value (exact in rational mode,
    /// quantized to [`GROUP_QUANTUM`] in real mode).
    type Key: Ord + Hash + Clone + Debug + Send + Sync;

    const MODE: Mode;

    fn from_int(v: i64) -> Self;

    fn from_ratio(num: i64, den: i64) -> Self {
        let mut r = Self::from_int(num);
        r = r / Self::from_int(den);
        r
    }

    /// Exact zero test in rational mode, `|x| <= NUM_EPS` in real mode.
    fn is_negligible(&self) -> bool;

    fn to_f64(&self) -> f64;

    fn key(&self) -> Self::Key;

    fn parse(s: &str) -> Result<Self, ParseScalarError>;

    /// Canonical string: `num/den` (or integer) in rational mode, a decimal
    /// with 15 significant digits in real mode.
    fn to_canonical(&self) -> String;

    /// `Some(num/den)` only when the value is exactly representable.
    fn exact_string(&self) -> Option<String>;

    /// `self <= other` allowing for the mode's tolerance.
    fn le_tol(&self, other: &Self) -> bool {
        if *self <= *other {
            return true;
        }
        (self.clone() - other.clone()).is_negligible()
    }

    fn ge_zero_tol(&self) -> bool {
        Self::zero().le_tol(self)
    }

    fn eq_tol(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).is_negligible()
    }

    fn square(&self) -> Self {
        self.clone() * self.clone()
    }

    fn powi(&self, k: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..k {
            acc *= self;
        }
        acc
    }
}

impl Scalar for BigRational {
    type Key = BigRational;
    const MODE: Mode = Mode::Rational;

    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn is_negligible(&self) -> bool {
        self.is_zero()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn key(&self) -> Self::Key {
        self.clone()
    }

    fn parse(s: &str) -> Result<Self, ParseScalarError> {
        parse_rational(s).ok_or_else(|| ParseScalarError {
            input: s.to_owned(),
            mode: Mode::Rational,
        })
    }

    fn to_canonical(&self) -> String {
        self.to_string()
    }

    fn exact_string(&self) -> Option<String> {
        Some(self.to_string())
    }
}

impl Scalar for f64 {
    type Key = i64;
    const MODE: Mode = Mode::Real;

    fn from_int(v: i64) -> Self {
        v as f64
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn is_negligible(&self) -> bool {
        self.abs() <= NUM_EPS
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn key(&self) -> Self::Key {
        (self / GROUP_QUANTUM).round() as i64
    }

    fn parse(s: &str) -> Result<Self, ParseScalarError> {
        let t = s.trim();
        let err = || ParseScalarError {
            input: s.to_owned(),
            mode: Mode::Real,
        };
        if let Some((num, den)) = t.split_once('/') {
            let num = f64::from_str(num.trim()).map_err(|_| err())?;
            let den = f64::from_str(den.trim()).map_err(|_| err())?;
            if den == 0.0 {
                return Err(err());
            }
            return Ok(num / den);
        }
        let v = f64::from_str(t).map_err(|_| err())?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(err())
        }
    }

    fn to_canonical(&self) -> String {
        format_sig(*self)
    }

    fn exact_string(&self) -> Option<String> {
        None
    }
}

/// Decimal string with 15 significant digits.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        trim_zeros(&s)
    } else {
        let s = format!("{:.14e}", x);
        match s.split_once('e') {
            Some((m, e)) => format!("{}e{}", trim_zeros(m), e),
            None => s,
        }
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s.to_owned()
    }
}

/// Parses `"a"`, `"a/b"`, or a finite decimal literal such as `"-0.125"`
/// into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let t = s.trim();
    if let Some((num, den)) = t.split_once('/') {
        let num = parse_rational(num)?;
        let den = parse_rational(den)?;
        if den.is_zero() {
            return None;
        }
        return Some(num / den);
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    if body.is_empty() {
        return None;
    }
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let num = BigInt::from_str(&digits).ok()?;
    let den = num_traits::pow(BigInt::from(10), frac_part.len());
    let r = BigRational::new(num, den);
    Some(if neg { -r } else { r })
}

/// Exact rational from an `f64` (every finite double is a dyadic rational).
pub fn rational_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_f64(x)
}

/// `|x| x`, closed over the rationals.
pub fn theta<S: Scalar>(x: &S) -> S {
    x.abs() * x.clone()
}
