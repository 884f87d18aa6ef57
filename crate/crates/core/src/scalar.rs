//! Numeric time types.
//!
//! Every breakpoint and travel-time value in the crate is a [`Scalar`]. Two
//! implementations ship: [`Fixed`], an exact decimal fixed-point type used by
//! default, and [`Float`], a thin `f64` wrapper with a total order for inputs
//! that are already approximate. Both carry a first-class `+∞` that absorbs
//! addition.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Sub};

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Time scalar used for breakpoints and travel times.
pub trait Scalar:
    Copy
    + Ord
    + Hash
    + fmt::Debug
    + fmt::Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Send
    + Sync
    + Serialize
    + for<'de> Deserialize<'de>
    + 'static
{
    const ZERO: Self;
    const INFINITY: Self;
    /// Comparison tolerance used when the caller does not supply one.
    const DEFAULT_EPSILON: f64;
    /// Name reported in manifests and solution files.
    const MODE: &'static str;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;

    fn is_finite(self) -> bool {
        self != Self::INFINITY
    }

    /// `ceil(self / rhs)` for finite positive operands.
    fn ceil_ratio(self, rhs: Self) -> u64;

    /// `|self - rhs| <= eps`, with `∞` matching only `∞`.
    fn close_to(self, rhs: Self, eps: f64) -> bool {
        match (self.is_finite(), rhs.is_finite()) {
            (true, true) => (self.to_f64() - rhs.to_f64()).abs() <= eps || self == rhs,
            (false, false) => true,
            _ => false,
        }
    }
}

/// Number of fixed-point units per second.
pub const FIXED_SCALE: i64 = 1_000_000;

/// Exact decimal fixed-point time with micro-unit resolution.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Fixed(i64);

impl Fixed {
    pub const fn from_raw(units: i64) -> Self {
        Fixed(units)
    }

    pub const fn raw(self) -> i64 {
        self.0
    }

    pub fn from_decimal(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl Add for Fixed {
    type Output = Fixed;

    fn add(self, rhs: Fixed) -> Fixed {
        if self == Self::INFINITY || rhs == Self::INFINITY {
            return Self::INFINITY;
        }
        match self.0.checked_add(rhs.0) {
            Some(v) if v != i64::MAX => Fixed(v),
            _ => Self::INFINITY,
        }
    }
}

impl Sub for Fixed {
    type Output = Fixed;

    fn sub(self, rhs: Fixed) -> Fixed {
        if self == Self::INFINITY {
            return Self::INFINITY;
        }
        assert!(rhs != Self::INFINITY, "subtracting an infinite time");
        Fixed(self.0 - rhs.0)
    }
}

impl Scalar for Fixed {
    const ZERO: Self = Fixed(0);
    const INFINITY: Self = Fixed(i64::MAX);
    const DEFAULT_EPSILON: f64 = 0.0;
    const MODE: &'static str = "fixed";

    fn from_f64(x: f64) -> Self {
        if x.is_infinite() && x > 0.0 {
            return Self::INFINITY;
        }
        assert!(x.is_finite(), "non-finite time {x}");
        let scaled = (x * FIXED_SCALE as f64).round();
        assert!(scaled.abs() < 9.0e18, "time {x} out of fixed-point range");
        Fixed(scaled as i64)
    }

    fn to_f64(self) -> f64 {
        if self == Self::INFINITY {
            f64::INFINITY
        } else {
            self.0 as f64 / FIXED_SCALE as f64
        }
    }

    fn ceil_ratio(self, rhs: Self) -> u64 {
        assert!(self.0 >= 0 && rhs.0 > 0 && self.is_finite() && rhs.is_finite());
        ((self.0 + rhs.0 - 1) / rhs.0) as u64
    }

    fn close_to(self, rhs: Self, eps: f64) -> bool {
        if eps == 0.0 {
            return self == rhs;
        }
        match (self.is_finite(), rhs.is_finite()) {
            (true, true) => ((self.0 - rhs.0).abs() as f64) <= eps * FIXED_SCALE as f64,
            (false, false) => true,
            _ => false,
        }
    }
}

impl fmt::Debug for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == Self::INFINITY {
            return f.write_str("inf");
        }
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let whole = abs / FIXED_SCALE as u64;
        let frac = abs % FIXED_SCALE as u64;
        if frac == 0 {
            write!(f, "{sign}{whole}")
        } else {
            let digits = format!("{frac:06}");
            write!(f, "{sign}{whole}.{}", digits.trim_end_matches('0'))
        }
    }
}

/// `f64` time with a total order. NaN is rejected at construction.
#[derive(Clone, Copy, Default)]
pub struct Float(f64);

impl Float {
    pub fn new(x: f64) -> Self {
        assert!(!x.is_nan(), "NaN time");
        assert!(x != f64::NEG_INFINITY, "negative infinite time");
        // -0.0 and 0.0 must hash alike.
        Float(if x == 0.0 { 0.0 } else { x })
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl PartialEq for Float {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl Eq for Float {}

impl PartialOrd for Float {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Float {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Hash for Float {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state)
    }
}

impl Add for Float {
    type Output = Float;

    fn add(self, rhs: Float) -> Float {
        Float::new(self.0 + rhs.0)
    }
}

impl Sub for Float {
    type Output = Float;

    fn sub(self, rhs: Float) -> Float {
        if self.0.is_infinite() {
            return self;
        }
        assert!(rhs.0.is_finite(), "subtracting an infinite time");
        Float::new(self.0 - rhs.0)
    }
}

impl Scalar for Float {
    const ZERO: Self = Float(0.0);
    const INFINITY: Self = Float(f64::INFINITY);
    const DEFAULT_EPSILON: f64 = 1e-9;
    const MODE: &'static str = "float";

    fn from_f64(x: f64) -> Self {
        Float::new(x)
    }

    fn to_f64(self) -> f64 {
        self.0
    }

    fn ceil_ratio(self, rhs: Self) -> u64 {
        assert!(self.0 >= 0.0 && rhs.0 > 0.0 && self.0.is_finite());
        (self.0 / rhs.0).ceil() as u64
    }
}

impl fmt::Debug for Float {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Float {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

fn serialize_time<S: Serializer>(x: f64, serializer: S) -> Result<S::Ok, S::Error> {
    if x.is_infinite() {
        serializer.serialize_str("inf")
    } else {
        serializer.serialize_f64(x)
    }
}

struct TimeVisitor;

impl Visitor<'_> for TimeVisitor {
    type Value = f64;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a number or the string \"inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(E::custom("non-finite number; use \"inf\""))
        }
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
        match v {
            "inf" => Ok(f64::INFINITY),
            other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
        }
    }
}

impl Serialize for Fixed {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serialize_time(self.to_f64(), serializer)
    }
}

impl<'de> Deserialize<'de> for Fixed {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let x = deserializer.deserialize_any(TimeVisitor)?;
        if x.is_finite() && x.abs() * FIXED_SCALE as f64 >= 9.0e18 {
            return Err(de::Error::custom(format!("time {x} out of fixed-point range")));
        }
        Ok(Fixed::from_f64(x))
    }
}

impl Serialize for Float {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serialize_time(self.0, serializer)
    }
}

impl<'de> Deserialize<'de> for Float {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(TimeVisitor).map(Float::new)
    }
}
