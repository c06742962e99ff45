//! Closed real intervals with outward rounding.
//!
//! Every arithmetic operation computes the float result with round-to-nearest
//! and then recovers the exact rounding error with an error-free transform
//! (Knuth's two-sum, Dekker's two-product). An endpoint is only nudged by one
//! ulp when the operation was actually inexact, so point inputs whose result
//! is representable stay points while containment of the true real result is
//! preserved.

use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

/// A closed interval `[lo, hi]` with finite endpoints and `lo <= hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    // 2^27 + 1
    let c = 134_217_729.0 * a;
    let hi = c - (c - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    if !p.is_finite() || a.abs() > 1e290 || b.abs() > 1e290 {
        // split would overflow; report an unknown-sign error
        return (p, f64::NAN);
    }
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let err = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, err)
}

#[inline]
fn round_down(value: f64, err: f64) -> f64 {
    if err < 0.0 || err.is_nan() {
        value.next_down()
    } else {
        value
    }
}

#[inline]
fn round_up(value: f64, err: f64) -> f64 {
    if err > 0.0 || err.is_nan() {
        value.next_up()
    } else {
        value
    }
}

pub(crate) fn add_down(a: f64, b: f64) -> f64 {
    let (s, e) = two_sum(a, b);
    round_down(s, e)
}

pub(crate) fn add_up(a: f64, b: f64) -> f64 {
    let (s, e) = two_sum(a, b);
    round_up(s, e)
}

pub(crate) fn mul_down(a: f64, b: f64) -> f64 {
    let (p, e) = two_prod(a, b);
    round_down(p, e)
}

pub(crate) fn mul_up(a: f64, b: f64) -> f64 {
    let (p, e) = two_prod(a, b);
    round_up(p, e)
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };
    pub const UNIT: Interval = Interval { lo: 0.0, hi: 1.0 };

    /// Builds `[lo, hi]`.
    ///
    /// Panics if either endpoint is NaN or infinite or if `lo > hi`; use
    /// [`Interval::checked`] for untrusted input.
    pub fn new(lo: f64, hi: f64) -> Interval {
        match Interval::checked(lo, hi) {
            Some(i) => i,
            None => panic!("malformed interval [{lo}, {hi}]"),
        }
    }

    pub fn checked(lo: f64, hi: f64) -> Option<Interval> {
        if lo.is_finite() && hi.is_finite() && lo <= hi {
            // normalise -0.0 so structural equality is not sign-sensitive
            Some(Interval {
                lo: lo + 0.0,
                hi: hi + 0.0,
            })
        } else {
            None
        }
    }

    pub fn point(x: f64) -> Interval {
        Interval::new(x, x)
    }

    #[inline]
    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn width(self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(self) -> f64 {
        self.lo + (self.hi - self.lo) / 2.0
    }

    pub fn is_point(self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// `other ⊆ self`.
    pub fn encloses(self, other: Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// `other ⊆ self` with both endpoints allowed to miss by `tol`.
    pub fn encloses_within(self, other: Interval, tol: f64) -> bool {
        self.lo - tol <= other.lo && other.hi <= self.hi + tol
    }

    pub fn hull(self, other: Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Intersection, or `None` when the intervals are disjoint.
    pub fn intersect(self, other: Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo <= hi {
            Some(Interval { lo, hi })
        } else {
            None
        }
    }

    pub fn scale(self, k: f64) -> Interval {
        self * Interval::point(k)
    }

    /// Clamps both endpoints into `[lo, hi]`.
    pub fn clamp(self, lo: f64, hi: f64) -> Interval {
        Interval {
            lo: self.lo.max(lo).min(hi),
            hi: self.hi.min(hi).max(lo),
        }
    }

    /// `[0, hi]`, the widening applied when a branch may or may not apply.
    pub fn widen_to_zero(self) -> Interval {
        Interval {
            lo: 0.0_f64.min(self.lo),
            hi: self.hi.max(0.0),
        }
    }

    pub fn sum<I: IntoIterator<Item = Interval>>(items: I) -> Interval {
        items.into_iter().fold(Interval::ZERO, |acc, x| acc + x)
    }
}

impl Add for Interval {
    type Output = Interval;

    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: add_down(self.lo, rhs.lo),
            hi: add_up(self.hi, rhs.hi),
        }
    }
}

impl Sub for Interval {
    type Output = Interval;

    fn sub(self, rhs: Interval) -> Interval {
        self + (-rhs)
    }
}

impl Neg for Interval {
    type Output = Interval;

    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi + 0.0,
            hi: -self.lo + 0.0,
        }
    }
}

impl Mul for Interval {
    type Output = Interval;

    fn mul(self, rhs: Interval) -> Interval {
        if self.is_point() && rhs.is_point() {
            let (p, e) = two_prod(self.lo, rhs.lo);
            return Interval {
                lo: round_down(p, e) + 0.0,
                hi: round_up(p, e) + 0.0,
            };
        }
        let pairs = [
            (self.lo, rhs.lo),
            (self.lo, rhs.hi),
            (self.hi, rhs.lo),
            (self.hi, rhs.hi),
        ];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (a, b) in pairs {
            lo = lo.min(mul_down(a, b));
            hi = hi.max(mul_up(a, b));
        }
        Interval {
            lo: lo + 0.0,
            hi: hi + 0.0,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}
