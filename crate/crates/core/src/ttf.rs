//! Periodic piecewise-linear travel-time functions.
//!
//! A travel-time function (TTF) maps a departure time within a period of
//! length `T` to the delay experienced on an arc (or along a path). It is
//! stored as breakpoints `(t, d)` with strictly increasing `t in [0, T)`,
//! linearly interpolated between neighbours and wrapping around so that the
//! function is continuous on the circle: the segment after the last
//! breakpoint runs to `(first.t + T, first.d)`.
//!
//! The two workhorse operations are `link` (function composition along a
//! path, `h(t) = f(t) + g(t + f(t))`) and `minimum` (pointwise lower
//! envelope, for merging parallel paths). Both produce canonical results:
//! coincident positions are merged and collinear breakpoints pruned, so
//! breakpoint counts obey `|link(f,g)| <= |f| + |g| + 1` and
//! `|minimum(f,g)| <= 2(|f| + |g|) + 2`.

use crate::time::{fuzzy_eq, Delay, Timestamp, EPSILON};
use thiserror::Error;

/// Positions closer than this (seconds) are treated as the same breakpoint.
const POS_EPSILON: f64 = 1e-9;

/// One breakpoint of a travel-time function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TtfPoint {
    pub at: Timestamp,
    pub delay: Delay,
}

impl TtfPoint {
    #[inline]
    pub fn new(at: f64, delay: f64) -> TtfPoint {
        TtfPoint {
            at: Timestamp(at),
            delay: Delay(delay),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TtfError {
    #[error("travel-time function needs at least one breakpoint")]
    Empty,
    #[error("period must be positive and finite, got {period}")]
    BadPeriod { period: f64 },
    #[error("breakpoint {index} at t={at} lies outside [0, {period})")]
    TimeOutOfRange { index: usize, at: f64, period: f64 },
    #[error("breakpoint times must be strictly increasing (violated at index {index})")]
    UnorderedTimes { index: usize },
    #[error("breakpoint {index} has non-positive delay {delay}")]
    NonPositiveDelay { index: usize, delay: f64 },
}

/// A periodic piecewise-linear travel-time function.
#[derive(Debug, Clone, PartialEq)]
pub struct Ttf {
    period: f64,
    points: Vec<TtfPoint>,
}

impl Ttf {
    /// Builds a TTF from breakpoints, validating the representation
    /// invariants. Breakpoints are kept exactly as given (no pruning), so
    /// instance files round-trip unchanged.
    pub fn new(period: f64, points: Vec<TtfPoint>) -> Result<Ttf, TtfError> {
        if !(period.is_finite() && period > 0.0) {
            return Err(TtfError::BadPeriod { period });
        }
        if points.is_empty() {
            return Err(TtfError::Empty);
        }
        for (index, p) in points.iter().enumerate() {
            if !(p.at.0 >= 0.0 && p.at.0 < period && p.at.0.is_finite()) {
                return Err(TtfError::TimeOutOfRange {
                    index,
                    at: p.at.0,
                    period,
                });
            }
            if !(p.delay.0 > 0.0 && p.delay.0.is_finite()) {
                return Err(TtfError::NonPositiveDelay {
                    index,
                    delay: p.delay.0,
                });
            }
            if index > 0 && p.at.0 <= points[index - 1].at.0 {
                return Err(TtfError::UnorderedTimes { index });
            }
        }
        Ok(Ttf { period, points })
    }

    /// A TTF that is constant over the whole period.
    pub fn constant(period: f64, delay: Delay) -> Ttf {
        Ttf::new(period, vec![TtfPoint { at: Timestamp(0.0), delay }])
            .expect("constant TTF is always valid")
    }

    /// Builds a canonical TTF from sorted raw points: near-coincident
    /// positions are merged (first wins) and collinear breakpoints pruned.
    /// Used by operations that synthesise breakpoints.
    pub fn canonical(period: f64, points: Vec<TtfPoint>) -> Ttf {
        debug_assert!(points.windows(2).all(|w| w[0].at.0 <= w[1].at.0));
        let pruned = canonicalize(period, points);
        Ttf::new(period, pruned).expect("canonicalized points are valid")
    }

    #[inline]
    pub fn period(&self) -> f64 {
        self.period
    }

    #[inline]
    pub fn points(&self) -> &[TtfPoint] {
        &self.points
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn is_constant(&self) -> bool {
        self.points.len() == 1
    }

    /// Evaluates the delay for a departure at `t`. Absolute times are
    /// reduced modulo the period; the result is continuous in `t`.
    pub fn eval(&self, t: Timestamp) -> Delay {
        let pts = &self.points;
        if pts.len() == 1 {
            return pts[0].delay;
        }
        let tm = t.reduced(self.period).0;
        let first = pts[0];
        let last = pts[pts.len() - 1];
        if tm < first.at.0 {
            // Left part of the wrap segment, shifted one period down.
            Delay(interpolate(
                last.at.0 - self.period,
                last.delay.0,
                first.at.0,
                first.delay.0,
                tm,
            ))
        } else if tm >= last.at.0 {
            Delay(interpolate(
                last.at.0,
                last.delay.0,
                first.at.0 + self.period,
                first.delay.0,
                tm,
            ))
        } else {
            let idx = pts.partition_point(|p| p.at.0 <= tm);
            let a = pts[idx - 1];
            let b = pts[idx];
            Delay(interpolate(a.at.0, a.delay.0, b.at.0, b.delay.0, tm))
        }
    }

    /// Arrival function: `t + eval(t)`, in absolute time.
    #[inline]
    pub fn arrival(&self, t: Timestamp) -> Timestamp {
        t + self.eval(t)
    }

    /// Checks the FIFO property: every segment slope, including the wrap
    /// segment, is strictly greater than -1 (arrival strictly increasing).
    pub fn is_fifo(&self) -> bool {
        if self.points.len() == 1 {
            return true;
        }
        let increasing = self
            .points
            .windows(2)
            .all(|w| w[1].at.0 + w[1].delay.0 > w[0].at.0 + w[0].delay.0);
        let first = self.points[0];
        let last = self.points[self.points.len() - 1];
        increasing
            && first.at.0 + self.period + first.delay.0 > last.at.0 + last.delay.0
    }

    /// Minimum and maximum segment slope, including the wrap segment.
    /// A constant function reports `(0, 0)`.
    pub fn slope_range(&self) -> (f64, f64) {
        if self.points.len() == 1 {
            return (0.0, 0.0);
        }
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for w in self.points.windows(2) {
            let s = (w[1].delay.0 - w[0].delay.0) / (w[1].at.0 - w[0].at.0);
            min = min.min(s);
            max = max.max(s);
        }
        let first = self.points[0];
        let last = self.points[self.points.len() - 1];
        let wrap = (first.delay.0 - last.delay.0) / (first.at.0 + self.period - last.at.0);
        (min.min(wrap), max.max(wrap))
    }

    /// Smallest delay attained over the period (at some breakpoint).
    pub fn min_delay(&self) -> Delay {
        Delay(
            self.points
                .iter()
                .map(|p| p.delay.0)
                .fold(f64::INFINITY, f64::min),
        )
    }

    /// Largest delay attained over the period (at some breakpoint).
    pub fn max_delay(&self) -> Delay {
        Delay(
            self.points
                .iter()
                .map(|p| p.delay.0)
                .fold(f64::NEG_INFINITY, f64::max),
        )
    }

    /// Returns a copy with all delays shifted by a constant.
    pub fn plus_const(&self, c: Delay) -> Ttf {
        let points = self
            .points
            .iter()
            .map(|p| TtfPoint {
                at: p.at,
                delay: p.delay + c,
            })
            .collect();
        Ttf::new(self.period, points).expect("shifting delays keeps points valid")
    }

    /// Function composition along a two-arc path: traverse `self` first,
    /// then `after`. The result satisfies
    /// `h(t) = self(t) + after(t + self(t))` and is FIFO whenever both
    /// inputs are (self must be FIFO for the composition to be well formed).
    pub fn link(&self, after: &Ttf) -> Ttf {
        debug_assert_eq!(self.period, after.period);
        debug_assert!(self.is_fifo(), "link requires a FIFO first leg");
        let t = self.period;

        if self.is_constant() {
            let c = self.points[0].delay;
            if after.is_constant() {
                return Ttf::constant(t, c + after.points[0].delay);
            }
            // h(x) = c + after(x + c): shift kinks left by c, values up by c.
            let mut pts: Vec<TtfPoint> = after
                .points
                .iter()
                .map(|p| TtfPoint {
                    at: (p.at - c).reduced(t),
                    delay: p.delay + c,
                })
                .collect();
            pts.sort_by(|a, b| a.at.0.partial_cmp(&b.at.0).unwrap());
            return Ttf::canonical(t, pts);
        }
        if after.is_constant() {
            return self.plus_const(after.points[0].delay);
        }

        let fe = self.expanded();
        let arr: Vec<f64> = fe.iter().map(|p| p.at.0 + p.delay.0).collect();
        let a0 = arr[0];
        debug_assert!(arr.windows(2).all(|w| w[1] > w[0]));

        // Candidate kinks of h: kinks of f, plus preimages of g's kinks
        // under f's arrival function (exactly one per kink and period).
        let mut xs: Vec<f64> = fe[..fe.len() - 1].iter().map(|p| p.at.0).collect();
        for gp in after.points.iter() {
            let k = ((a0 - gp.at.0) / t).ceil();
            let mut ya = gp.at.0 + k * t;
            if ya < a0 {
                ya += t;
            } else if ya >= a0 + t {
                ya -= t;
            }
            let idx = arr.partition_point(|&a| a <= ya).max(1);
            let (lo, hi) = (idx - 1, idx.min(arr.len() - 1));
            let x = if hi == lo {
                fe[lo].at.0
            } else {
                interpolate(arr[lo], fe[lo].at.0, arr[hi], fe[hi].at.0, ya)
            };
            if x < t {
                xs.push(x.max(0.0));
            }
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup_by(|b, a| (*b - *a).abs() <= POS_EPSILON);

        let pts: Vec<TtfPoint> = xs
            .iter()
            .map(|&x| {
                let fx = self.eval(Timestamp(x));
                let delay = fx + after.eval(Timestamp(x) + fx);
                TtfPoint {
                    at: Timestamp(x),
                    delay,
                }
            })
            .collect();
        let out = Ttf::canonical(t, pts);
        debug_assert!(out.len() <= self.len() + after.len() + 1);
        out
    }

    /// Pointwise lower envelope of two functions with the same period.
    pub fn minimum(&self, other: &Ttf) -> Ttf {
        let out = self.envelope(other, true);
        debug_assert!(out.len() <= 2 * (self.len() + other.len()) + 2);
        out
    }

    /// Pointwise upper envelope of two functions with the same period.
    pub fn maximum(&self, other: &Ttf) -> Ttf {
        let out = self.envelope(other, false);
        debug_assert!(out.len() <= 2 * (self.len() + other.len()) + 2);
        out
    }

    fn envelope(&self, other: &Ttf, lower: bool) -> Ttf {
        debug_assert_eq!(self.period, other.period);
        let t = self.period;
        if self.is_constant() && other.is_constant() {
            let (a, b) = (self.points[0].delay, other.points[0].delay);
            return Ttf::constant(t, if lower { a.min(b) } else { a.max(b) });
        }

        let mut xs: Vec<f64> = self
            .points
            .iter()
            .chain(other.points.iter())
            .map(|p| p.at.0)
            .collect();
        if xs.iter().all(|&x| x > 0.0) {
            xs.push(0.0);
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup_by(|b, a| (*b - *a).abs() <= POS_EPSILON);

        let pick = |fv: f64, gv: f64| if lower { fv.min(gv) } else { fv.max(gv) };
        let mut pts: Vec<TtfPoint> = Vec::with_capacity(xs.len() * 2);
        for (i, &x) in xs.iter().enumerate() {
            let fv = self.eval(Timestamp(x)).0;
            let gv = other.eval(Timestamp(x)).0;
            pts.push(TtfPoint::new(x, pick(fv, gv)));

            // Detect a crossing strictly inside the interval to the right.
            let xr = if i + 1 < xs.len() { xs[i + 1] } else { t };
            let fr = self.eval(Timestamp(xr)).0;
            let gr = other.eval(Timestamp(xr)).0;
            let (dl, dr) = (fv - gv, fr - gr);
            if (dl < -EPSILON && dr > EPSILON) || (dl > EPSILON && dr < -EPSILON) {
                let cross = x + (xr - x) * dl / (dl - dr);
                if cross > x + POS_EPSILON && cross < xr - POS_EPSILON {
                    let fc = self.eval(Timestamp(cross)).0;
                    let gc = other.eval(Timestamp(cross)).0;
                    pts.push(TtfPoint::new(cross, pick(fc, gc)));
                }
            }
        }
        Ttf::canonical(t, pts)
    }

    /// Breakpoints covering `[0, T]` inclusive: prepends the wrap value at 0
    /// when the first stored breakpoint is later, and appends the value at
    /// `T` (equal to the value at 0). The returned points describe exactly
    /// this function restricted to one period.
    fn expanded(&self) -> Vec<TtfPoint> {
        let mut out = Vec::with_capacity(self.points.len() + 2);
        let v0 = self.eval(Timestamp(0.0));
        if self.points[0].at.0 > 0.0 {
            out.push(TtfPoint {
                at: Timestamp(0.0),
                delay: v0,
            });
        }
        out.extend_from_slice(&self.points);
        out.push(TtfPoint {
            at: Timestamp(self.period),
            delay: v0,
        });
        out
    }
}

#[inline]
fn interpolate(x0: f64, y0: f64, x1: f64, y1: f64, x: f64) -> f64 {
    debug_assert!(x1 > x0);
    y0 + (y1 - y0) * ((x - x0) / (x1 - x0))
}

/// Merges near-coincident positions (first wins, cyclically) and prunes
/// breakpoints whose removal leaves the function unchanged (collinear with
/// their cyclic neighbours). Collapses to a single point when every segment
/// is flat.
fn canonicalize(period: f64, mut points: Vec<TtfPoint>) -> Vec<TtfPoint> {
    points.dedup_by(|b, a| (b.at.0 - a.at.0).abs() <= POS_EPSILON);
    // The first and last point may coincide across the wrap.
    while points.len() > 1 {
        let first = points[0];
        let last = points[points.len() - 1];
        if (first.at.0 + period - last.at.0).abs() <= POS_EPSILON {
            points.pop();
        } else {
            break;
        }
    }
    if points.len() <= 1 {
        return points;
    }
    if points
        .iter()
        .all(|p| fuzzy_eq(p.delay.0, points[0].delay.0))
    {
        return vec![points[0]];
    }

    let slope_eq = |s1: f64, s2: f64| {
        (s1 - s2).abs() <= 1e-9 * (1.0 + s1.abs().max(s2.abs()))
    };
    loop {
        let n = points.len();
        if n <= 2 {
            break;
        }
        let mut removed = false;
        let mut keep = vec![true; n];
        for i in 0..n {
            let prev = if i == 0 { n - 1 } else { i - 1 };
            let next = if i == n - 1 { 0 } else { i + 1 };
            let (mut xp, yp) = (points[prev].at.0, points[prev].delay.0);
            let (x, y) = (points[i].at.0, points[i].delay.0);
            let (mut xn, yn) = (points[next].at.0, points[next].delay.0);
            if i == 0 {
                xp -= period;
            }
            if i == n - 1 {
                xn += period;
            }
            let s1 = (y - yp) / (x - xp);
            let s2 = (yn - y) / (xn - x);
            if slope_eq(s1, s2) {
                keep[i] = false;
                removed = true;
                // Restart after each removal pass so neighbour indices stay
                // consistent; point counts are small.
                break;
            }
        }
        if !removed {
            break;
        }
        let mut it = keep.iter();
        points.retain(|_| *it.next().unwrap());
    }
    points
}
