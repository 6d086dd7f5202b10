//! Working-precision abstraction.
//!
//! Two precisions share one trait: plain `f64` and [`DoubleDouble`], an
//! unevaluated sum `hi + lo` of two doubles with roughly 106 bits of
//! mantissa. Divided differences of order `n - 1` cancel catastrophically,
//! so the oracles in this crate run on `DoubleDouble` and round once at the
//! end.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, Sub, SubAssign};

use num_traits::{Num, One, Zero};

/// Arithmetic needed by the generic kernels.
pub trait Real:
    Copy
    + PartialOrd
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    /// Unit roundoff of the representation.
    const EPSILON: f64;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn abs(self) -> Self;
    fn exp(self) -> Self;
    fn sin_cos(self) -> (Self, Self);

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn from_usize(k: usize) -> Self {
        Self::from_f64(k as f64)
    }
    fn powi(self, e: u32) -> Self {
        let mut base = self;
        let mut acc = Self::one();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base *= base;
            e >>= 1;
        }
        acc
    }
}

impl Real for f64 {
    const EPSILON: f64 = f64::EPSILON / 2.0;

    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sin_cos(self) -> (Self, Self) {
        f64::sin_cos(self)
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Double-double number `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Copy, Clone, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

impl fmt::Debug for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DD({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.hi + self.lo)
    }
}

impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };
    pub const ONE: DoubleDouble = DoubleDouble { hi: 1.0, lo: 0.0 };
    pub const PI: DoubleDouble = DoubleDouble {
        hi: std::f64::consts::PI,
        lo: 1.2246467991473532e-16,
    };
    pub const TWO_PI: DoubleDouble = DoubleDouble {
        hi: std::f64::consts::TAU,
        lo: 2.4492935982947064e-16,
    };
    pub const FRAC_PI_2: DoubleDouble = DoubleDouble {
        hi: std::f64::consts::FRAC_PI_2,
        lo: 6.123233995736766e-17,
    };
    pub const LN_2: DoubleDouble = DoubleDouble {
        hi: std::f64::consts::LN_2,
        lo: 2.3190468138462996e-17,
    };

    #[inline]
    pub const fn new(hi: f64) -> Self {
        DoubleDouble { hi, lo: 0.0 }
    }

    #[inline]
    fn renorm(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        DoubleDouble { hi, lo }
    }

    /// Exact product of two doubles.
    #[inline]
    pub fn mul_f64_exact(a: f64, b: f64) -> Self {
        let (hi, lo) = two_prod(a, b);
        DoubleDouble { hi, lo }
    }

    /// Exact sum of two doubles.
    #[inline]
    pub fn add_f64_exact(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, b);
        DoubleDouble { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = self.lo.mul_add(b, e);
        Self::renorm(p, e)
    }

    pub fn sqr(self) -> Self {
        self * self
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    /// Nearest integer, returned as a double.
    fn round_to_f64(self) -> f64 {
        let r = self.hi.round();
        if r == self.hi {
            // hi already integral: lo decides ties and carries
            let lo = self.lo.round();
            let (s, e) = two_sum(r, lo);
            s + e
        } else if (r - self.hi).abs() == 0.5 {
            // exact half in hi; lo breaks the tie
            if self.lo < 0.0 && r > self.hi {
                r - 1.0
            } else if self.lo > 0.0 && r < self.hi {
                r + 1.0
            } else {
                r
            }
        } else {
            r
        }
    }

    fn exp_dd(self) -> Self {
        if self.hi > 709.0 {
            return DoubleDouble::new(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return DoubleDouble::ZERO;
        }
        if self.hi == 0.0 && self.lo == 0.0 {
            return DoubleDouble::ONE;
        }
        // x = k ln2 + r, then r scaled by 2^-10 for the Taylor series
        let k = (self.hi / Self::LN_2.hi).round();
        let r = self - Self::LN_2.mul_f64(k);
        let r = r.mul_f64(1.0 / 1024.0);
        let mut term = r;
        let mut sum = r;
        let mut j = 2.0;
        loop {
            term = term * r / DoubleDouble::new(j);
            sum += term;
            if term.hi.abs() < 1e-36 || j > 40.0 {
                break;
            }
            j += 1.0;
        }
        // (1 + s)^(2^10) via s <- 2s + s^2 to keep the leading 1 implicit
        for _ in 0..10 {
            sum = sum.mul_f64(2.0) + sum.sqr();
        }
        let e = sum + DoubleDouble::ONE;
        let scale = 2f64.powi(k as i32);
        DoubleDouble {
            hi: e.hi * scale,
            lo: e.lo * scale,
        }
    }

    fn sin_cos_taylor(r: Self) -> (Self, Self) {
        let r2 = r.sqr();
        let mut s = r;
        let mut term = r;
        let mut j = 1.0;
        loop {
            term = -(term * r2) / DoubleDouble::new((j + 1.0) * (j + 2.0));
            s += term;
            j += 2.0;
            if term.hi.abs() < 1e-36 || j > 60.0 {
                break;
            }
        }
        let mut c = DoubleDouble::ONE;
        let mut term = DoubleDouble::ONE;
        let mut j = 0.0;
        loop {
            term = -(term * r2) / DoubleDouble::new((j + 1.0) * (j + 2.0));
            c += term;
            j += 2.0;
            if term.hi.abs() < 1e-36 || j > 60.0 {
                break;
            }
        }
        (s, c)
    }

    fn sin_cos_dd(self) -> (Self, Self) {
        if self.hi == 0.0 {
            return (DoubleDouble::ZERO, DoubleDouble::ONE);
        }
        let k = (self / Self::TWO_PI).round_to_f64();
        let r = self - Self::TWO_PI.mul_f64(k);
        let q = (r / Self::FRAC_PI_2).round_to_f64();
        let r = r - Self::FRAC_PI_2.mul_f64(q);
        let (s, c) = Self::sin_cos_taylor(r);
        match (q as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        DoubleDouble::new(x)
    }
}

impl From<DoubleDouble> for f64 {
    fn from(x: DoubleDouble) -> f64 {
        x.hi + x.lo
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    #[inline]
    fn add(self, b: Self) -> Self {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let e = e + t;
        let (s, e) = quick_two_sum(s, e);
        let e = e + f;
        Self::renorm(s, e)
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    #[inline]
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    #[inline]
    fn mul(self, b: Self) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = self.hi.mul_add(b.lo, e);
        let e = self.lo.mul_add(b.hi, e);
        Self::renorm(p, e)
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    #[inline]
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (q1, q2) = quick_two_sum(q1, q2);
        DoubleDouble { hi: q1, lo: q2 } + DoubleDouble::new(q3)
    }
}

impl Rem for DoubleDouble {
    type Output = Self;
    fn rem(self, b: Self) -> Self {
        let q = (self / b).hi.trunc();
        self - b.mul_f64(q)
    }
}

impl AddAssign for DoubleDouble {
    fn add_assign(&mut self, b: Self) {
        *self = *self + b;
    }
}
impl SubAssign for DoubleDouble {
    fn sub_assign(&mut self, b: Self) {
        *self = *self - b;
    }
}
impl MulAssign for DoubleDouble {
    fn mul_assign(&mut self, b: Self) {
        *self = *self * b;
    }
}
impl DivAssign for DoubleDouble {
    fn div_assign(&mut self, b: Self) {
        *self = *self / b;
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl Zero for DoubleDouble {
    fn zero() -> Self {
        DoubleDouble::ZERO
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0 && self.lo == 0.0
    }
}

impl One for DoubleDouble {
    fn one() -> Self {
        DoubleDouble::ONE
    }
}

impl Num for DoubleDouble {
    type FromStrRadixErr = std::num::ParseFloatError;
    fn from_str_radix(s: &str, _radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        s.parse::<f64>().map(DoubleDouble::new)
    }
}

impl Real for DoubleDouble {
    const EPSILON: f64 = 4.93038065763132e-32; // 2^-104

    fn from_f64(x: f64) -> Self {
        DoubleDouble::new(x)
    }
    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
    fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }
    fn exp(self) -> Self {
        self.exp_dd()
    }
    fn sin_cos(self) -> (Self, Self) {
        self.sin_cos_dd()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dd(x: f64) -> DoubleDouble {
        DoubleDouble::new(x)
    }

    #[test]
    fn sum_is_exact_for_doubles() {
        let a = dd(1.0) + dd(1e-30);
        assert_eq!(a.hi, 1.0);
        assert_eq!(a.lo, 1e-30);
        let b = a - dd(1.0);
        assert_eq!(b.to_f64(), 1e-30);
    }

    #[test]
    fn product_keeps_low_bits() {
        let x = 1.0 + f64::EPSILON;
        let p = dd(x) * dd(x);
        // (1+e)^2 = 1 + 2e + e^2, the e^2 part lives in lo
        let rest = p - dd(1.0) - dd(2.0 * f64::EPSILON);
        assert_eq!(rest.to_f64(), f64::EPSILON * f64::EPSILON);
    }

    #[test]
    fn division_round_trip() {
        let third = dd(1.0) / dd(3.0);
        let back = third * dd(3.0) - dd(1.0);
        assert!(back.to_f64().abs() < 1e-31);
    }

    #[test]
    fn exp_matches_known_values() {
        let e = dd(1.0).exp();
        // e = 2.718281828459045 + 1.4456468917292502e-16
        assert_eq!(e.hi, std::f64::consts::E);
        assert!((e.lo - 1.4456468917292502e-16).abs() < 1e-30);
        let back = dd(-3.5).exp() * dd(3.5).exp() - dd(1.0);
        assert!(back.to_f64().abs() < 1e-30);
    }

    #[test]
    fn sin_cos_identities() {
        for &x in &[0.3, 1.0, 2.5, -7.25, 41.0, 123.456] {
            let (s, c) = dd(x).sin_cos();
            let one = s * s + c * c - dd(1.0);
            assert!(one.to_f64().abs() < 1e-30, "x={x}");
            assert!((s.to_f64() - x.sin()).abs() < 1e-15);
            assert!((c.to_f64() - x.cos()).abs() < 1e-15);
        }
        // sin(pi) in dd is the residual of pi's dd representation
        let (s, _) = DoubleDouble::PI.sin_cos();
        assert!(s.to_f64().abs() < 1e-31);
    }

    #[test]
    fn double_angle_agrees() {
        let x = dd(0.7) / dd(3.0);
        let (s, c) = x.sin_cos();
        let (s2, _) = (x * dd(2.0)).sin_cos();
        let diff = s2 - dd(2.0) * s * c;
        assert!(diff.to_f64().abs() < 1e-31);
    }
}
