//! Double-double arithmetic: unevaluated sums of two `f64` giving ~31 significant
//! decimal digits.
//!
//! The survival amplitude of a quench decays like `exp(-N f(t))`; at `N = 400` and
//! `f ~ 0.12` the amplitude sits far below the cancellation noise floor of plain
//! `f64` spectral sums (~1e-13). All inputs of the direct propagation (operator
//! entries, binomial amplitudes) have exact closed forms, so carrying the whole
//! evaluation in double-double precision recovers the amplitude down to ~1e-29.
//!
//! The algorithms are the classical error-free transformations (Dekker splitting,
//! Knuth two-sum) used by the QD library.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// A double-double number `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b|
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Veltkamp splitting constant, 2^27 + 1.
const SPLIT: f64 = 134217729.0;

#[inline]
fn split(a: f64) -> (f64, f64) {
    let t = SPLIT * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ahi, alo) = split(a);
    let (bhi, blo) = split(b);
    let err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo;
    (p, err)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    pub const PI: Dd = Dd {
        hi: std::f64::consts::PI,
        lo: 1.2246467991473532e-16,
    };
    pub const FRAC_PI_2: Dd = Dd {
        hi: std::f64::consts::FRAC_PI_2,
        lo: 6.123233995736766e-17,
    };

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Dd {
        let (s, e) = quick_two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn from_int(x: i64) -> Dd {
        // exact for |x| < 2^53
        Dd {
            hi: x as f64,
            lo: 0.0,
        }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    /// Exact multiplication by a power of two.
    #[inline]
    pub fn scale_pow2(self, p: f64) -> Dd {
        Dd {
            hi: self.hi * p,
            lo: self.lo * p,
        }
    }

    pub fn sqrt(self) -> Dd {
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::ZERO;
        }
        debug_assert!(self.hi > 0.0, "dd sqrt of negative value");
        // Karp's method: one Newton correction on the f64 estimate.
        let x = 1.0 / self.hi.sqrt();
        let y = self.hi * x;
        let y_dd = Dd::from_f64(y);
        let resid = self - y_dd * y_dd;
        y_dd + Dd::from_f64(resid.hi * (x * 0.5))
    }

    /// Simultaneous sine and cosine with full double-double accuracy.
    ///
    /// Arguments are reduced modulo pi/2; `|x|` must stay well below 2^53 so the
    /// reduction multiple is exactly representable (phases here are O(1e4)).
    pub fn sin_cos(self) -> (Dd, Dd) {
        debug_assert!(self.hi.abs() < 1e12, "argument too large for reduction");
        let k = (self.hi * std::f64::consts::FRAC_2_PI).round();
        let r = self - Dd::FRAC_PI_2 * Dd::from_f64(k);
        let quadrant = (k as i64).rem_euclid(4);
        let (s, c) = taylor_sin_cos(r);
        match quadrant {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }
}

/// sin and cos by Taylor series, valid for |r| <= pi/4 (plus reduction slop).
fn taylor_sin_cos(r: Dd) -> (Dd, Dd) {
    let r2 = r * r;
    // sin: r - r^3/3! + ...
    let mut term = r;
    let mut sin = r;
    let mut n: i64 = 1;
    loop {
        term = -term * r2 / Dd::from_int((2 * n) * (2 * n + 1));
        sin = sin + term;
        n += 1;
        if term.hi.abs() < 1e-36 {
            break;
        }
    }
    // cos: 1 - r^2/2! + ...
    let mut term = Dd::ONE;
    let mut cos = Dd::ONE;
    let mut n: i64 = 1;
    loop {
        term = -term * r2 / Dd::from_int((2 * n - 1) * (2 * n));
        cos = cos + term;
        n += 1;
        if term.hi.abs() < 1e-36 {
            break;
        }
    }
    (sin, cos)
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, rhs: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, rhs.hi);
        let (t1, t2) = two_sum(self.lo, rhs.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, rhs: Dd) -> Dd {
        self + (-rhs)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, rhs: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, rhs.hi);
        let p2 = p2 + self.hi * rhs.lo + self.lo * rhs.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, rhs: Dd) -> Dd {
        let q1 = self.hi / rhs.hi;
        let mut r = self - rhs * Dd::from_f64(q1);
        let q2 = r.hi / rhs.hi;
        r = r - rhs * Dd::from_f64(q2);
        let q3 = r.hi / rhs.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd::new(s, e + q3)
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Dd) -> Option<Ordering> {
        // valid on normalized values: hi dominates, lo breaks ties
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}
