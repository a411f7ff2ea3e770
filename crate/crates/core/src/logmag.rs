//! Nonnegative reals stored by their natural logarithm.
//!
//! Every norm and inequality side in the crate is carried as a
//! [`LogMagnitude`]. Products become sums, sums go through log-sum-exp, and
//! a magnitude of exactly zero is the log value `-inf`. Growth such as
//! `2^{200}` or decay such as `e^{-3600}` stays representable.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Div, Mul};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A nonnegative magnitude represented as `ln(value)`.
///
/// `+inf` is admitted as the log of an unbounded ratio (for instance a gain
/// whose denominator vanishes). NaN is never stored.
#[derive(Clone, Copy, PartialEq)]
pub struct LogMagnitude(f64);

impl LogMagnitude {
    pub const ZERO: LogMagnitude = LogMagnitude(f64::NEG_INFINITY);
    pub const ONE: LogMagnitude = LogMagnitude(0.0);
    pub const INFINITY: LogMagnitude = LogMagnitude(f64::INFINITY);

    /// Wraps a log value. Panics on NaN.
    pub fn from_log(log_value: f64) -> Self {
        assert!(!log_value.is_nan(), "log magnitude must not be NaN");
        LogMagnitude(log_value)
    }

    pub fn try_from_log(log_value: f64) -> Option<Self> {
        (!log_value.is_nan()).then_some(LogMagnitude(log_value))
    }

    /// Takes the magnitude `|value|`.
    pub fn from_value(value: f64) -> Self {
        Self::from_log(value.abs().ln())
    }

    #[inline]
    pub fn ln(self) -> f64 {
        self.0
    }

    /// The plain value; overflows to `inf` or underflows to `0` outside f64 range.
    pub fn value(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    pub fn is_infinite(self) -> bool {
        self.0 == f64::INFINITY
    }

    pub fn is_finite_nonzero(self) -> bool {
        self.0.is_finite()
    }

    /// `self^exponent` for `exponent > 0`.
    pub fn powf(self, exponent: f64) -> Self {
        debug_assert!(exponent > 0.0);
        LogMagnitude(self.0 * exponent)
    }

    /// `self^k` for an integer exponent; `x^0 = 1` including `0^0`.
    pub fn powi(self, k: usize) -> Self {
        if k == 0 {
            return Self::ONE;
        }
        LogMagnitude(self.0 * k as f64)
    }

    pub fn recip(self) -> Self {
        LogMagnitude(-self.0)
    }

    /// Log-sum-exp addition.
    pub fn add(self, other: Self) -> Self {
        LogMagnitude(log_add_exp(self.0, other.0))
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// Signed log margin `ln(self) - ln(lhs)` of the inequality `lhs <= self`.
    ///
    /// A zero left side holds against anything (`+inf`). An unbounded left
    /// side or a zero right side with a nonzero left side is violated
    /// without bound (`-inf`).
    pub fn margin_over(self, lhs: LogMagnitude) -> f64 {
        if lhs.is_zero() {
            return f64::INFINITY;
        }
        if lhs.is_infinite() {
            return f64::NEG_INFINITY;
        }
        self.0 - lhs.0
    }
}

/// `ln(e^a + e^b)` without overflow; `-inf` is the additive identity.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a == f64::INFINITY || b == f64::INFINITY {
        return f64::INFINITY;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(sum e^{x_i})` over a slice with a single max shift.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !hi.is_finite() {
        return hi;
    }
    hi + values.iter().map(|v| (v - hi).exp()).sum::<f64>().ln()
}

impl Mul for LogMagnitude {
    type Output = LogMagnitude;

    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        LogMagnitude(self.0 + rhs.0)
    }
}

impl Div for LogMagnitude {
    type Output = LogMagnitude;

    fn div(self, rhs: Self) -> Self {
        if self.is_zero() {
            return Self::ZERO;
        }
        if rhs.is_zero() {
            return Self::INFINITY;
        }
        if self.is_infinite() && rhs.is_infinite() {
            // inf/inf only arises from two unbounded gains; treat as unbounded
            return Self::INFINITY;
        }
        LogMagnitude(self.0 - rhs.0)
    }
}

impl Sum for LogMagnitude {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        let logs: Vec<f64> = iter.map(|v| v.0).collect();
        LogMagnitude(log_sum_exp(&logs))
    }
}

impl Eq for LogMagnitude {}

impl PartialOrd for LogMagnitude {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LogMagnitude {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Default for LogMagnitude {
    fn default() -> Self {
        Self::ZERO
    }
}

impl fmt::Debug for LogMagnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LogMagnitude(ln={:?})", self.0)
    }
}

impl fmt::Display for LogMagnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.abs() < 700.0 {
            write!(f, "{:.6e}", self.value())
        } else {
            write!(f, "exp({:.6})", self.0)
        }
    }
}

impl Serialize for LogMagnitude {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        crate::decimal::serialize(&self.0, serializer)
    }
}

impl<'de> Deserialize<'de> for LogMagnitude {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = crate::decimal::deserialize(deserializer)?;
        LogMagnitude::try_from_log(v).ok_or_else(|| serde::de::Error::custom("NaN log magnitude"))
    }
}
