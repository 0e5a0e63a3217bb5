//! Scalar time and duration types.
//!
//! Everything in this crate counts time in seconds, stored as `f64`.
//! `Timestamp` is a point on the (absolute) time axis; it may exceed the
//! instance period, since search labels carry absolute arrival times and only
//! reduce modulo the period when an arc is evaluated. `Delay` is a span of
//! travel time. Derived values (interpolations, crossing points) carry float
//! noise, so comparisons of derived quantities go through the `fuzzy_*`
//! helpers instead of raw operators.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// Tolerance for comparing derived time values, in seconds.
///
/// Interpolation and crossing-point arithmetic on well-conditioned inputs
/// stays below 1e-10 s of noise; genuine differences in road-network travel
/// times are milliseconds or more. 1e-7 s sits comfortably between the two.
pub const EPSILON: f64 = 1e-7;

#[inline]
pub fn fuzzy_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= EPSILON
}

#[inline]
pub fn fuzzy_lt(a: f64, b: f64) -> bool {
    a < b - EPSILON
}

#[inline]
pub fn fuzzy_leq(a: f64, b: f64) -> bool {
    a <= b + EPSILON
}

/// A point in time, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Timestamp(pub f64);

/// A span of travel time, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Delay(pub f64);

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0.0);

    /// Reduces the timestamp into `[0, period)`.
    #[inline]
    pub fn reduced(self, period: f64) -> Timestamp {
        debug_assert!(period > 0.0);
        Timestamp(self.0.rem_euclid(period))
    }

    #[inline]
    pub fn fuzzy_eq(self, other: Timestamp) -> bool {
        fuzzy_eq(self.0, other.0)
    }
}

impl Delay {
    pub const ZERO: Delay = Delay(0.0);
    pub const INFINITY: Delay = Delay(f64::INFINITY);

    #[inline]
    pub fn min(self, other: Delay) -> Delay {
        Delay(self.0.min(other.0))
    }

    #[inline]
    pub fn max(self, other: Delay) -> Delay {
        Delay(self.0.max(other.0))
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    #[inline]
    pub fn fuzzy_eq(self, other: Delay) -> bool {
        fuzzy_eq(self.0, other.0)
    }
}

impl Add<Delay> for Timestamp {
    type Output = Timestamp;
    #[inline]
    fn add(self, rhs: Delay) -> Timestamp {
        Timestamp(self.0 + rhs.0)
    }
}

impl Sub<Delay> for Timestamp {
    type Output = Timestamp;
    #[inline]
    fn sub(self, rhs: Delay) -> Timestamp {
        Timestamp(self.0 - rhs.0)
    }
}

impl Sub<Timestamp> for Timestamp {
    type Output = Delay;
    #[inline]
    fn sub(self, rhs: Timestamp) -> Delay {
        Delay(self.0 - rhs.0)
    }
}

impl Add for Delay {
    type Output = Delay;
    #[inline]
    fn add(self, rhs: Delay) -> Delay {
        Delay(self.0 + rhs.0)
    }
}

impl AddAssign for Delay {
    #[inline]
    fn add_assign(&mut self, rhs: Delay) {
        self.0 += rhs.0;
    }
}

impl Sub for Delay {
    type Output = Delay;
    #[inline]
    fn sub(self, rhs: Delay) -> Delay {
        Delay(self.0 - rhs.0)
    }
}

impl Mul<f64> for Delay {
    type Output = Delay;
    #[inline]
    fn mul(self, rhs: f64) -> Delay {
        Delay(self.0 * rhs)
    }
}

impl Div<f64> for Delay {
    type Output = Delay;
    #[inline]
    fn div(self, rhs: f64) -> Delay {
        Delay(self.0 / rhs)
    }
}

impl Div for Delay {
    type Output = f64;
    #[inline]
    fn div(self, rhs: Delay) -> f64 {
        self.0 / rhs.0
    }
}

impl Neg for Delay {
    type Output = Delay;
    #[inline]
    fn neg(self) -> Delay {
        Delay(-self.0)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}", self.0)
    }
}

impl fmt::Display for Delay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}", self.0)
    }
}
