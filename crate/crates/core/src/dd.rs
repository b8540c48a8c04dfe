//! Double-double arithmetic (about 32 significant digits).
//!
//! A value is the unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
//! Built on the error-free transforms two-sum and FMA two-product.

use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

/// Unit roundoff of the format, 2^-104.
pub const EPS: f64 = 4.930380657631324e-32;

pub const PI: DD = DD { hi: std::f64::consts::PI, lo: 1.2246467991473532e-16 };

#[inline(always)]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline(always)]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline(always)]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DD {
    pub const ZERO: DD = DD { hi: 0.0, lo: 0.0 };
    pub const ONE: DD = DD { hi: 1.0, lo: 0.0 };

    #[inline(always)]
    pub const fn from_f64(x: f64) -> DD {
        DD { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn sqrt(self) -> DD {
        if self.hi <= 0.0 {
            return DD::ZERO;
        }
        let x = self.hi.sqrt();
        let (p, e) = two_prod(x, x);
        let r = ((self.hi - p) - e + self.lo) / (2.0 * x);
        let (h, l) = quick_two_sum(x, r);
        DD { hi: h, lo: l }
    }

    pub fn abs(self) -> DD {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    /// Product with a plain double, cheaper than promoting it.
    #[inline(always)]
    pub fn mul_f64(self, b: f64) -> DD {
        let (p, e) = two_prod(self.hi, b);
        let (h, l) = quick_two_sum(p, e + self.lo * b);
        DD { hi: h, lo: l }
    }

    pub fn recip(self) -> DD {
        DD::ONE / self
    }
}

impl From<f64> for DD {
    fn from(x: f64) -> DD {
        DD::from_f64(x)
    }
}

impl Neg for DD {
    type Output = DD;
    #[inline(always)]
    fn neg(self) -> DD {
        DD { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for DD {
    type Output = DD;
    #[inline(always)]
    fn add(self, b: DD) -> DD {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (h, l) = quick_two_sum(s1, s2 + t2);
        DD { hi: h, lo: l }
    }
}

impl Sub for DD {
    type Output = DD;
    #[inline(always)]
    fn sub(self, b: DD) -> DD {
        self + (-b)
    }
}

impl AddAssign for DD {
    #[inline(always)]
    fn add_assign(&mut self, b: DD) {
        *self = *self + b;
    }
}

impl SubAssign for DD {
    #[inline(always)]
    fn sub_assign(&mut self, b: DD) {
        *self = *self - b;
    }
}

impl Mul for DD {
    type Output = DD;
    #[inline(always)]
    fn mul(self, b: DD) -> DD {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (h, l) = quick_two_sum(p, e);
        DD { hi: h, lo: l }
    }
}

impl Div for DD {
    type Output = DD;
    fn div(self, b: DD) -> DD {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (h, l) = quick_two_sum(q1, q2);
        DD { hi: h, lo: l } + DD::from_f64(q3)
    }
}

impl Sum for DD {
    fn sum<I: Iterator<Item = DD>>(iter: I) -> DD {
        iter.fold(DD::ZERO, |a, b| a + b)
    }
}

/// Dot product accumulated in double-double.
#[inline]
pub fn dot(a: &[DD], b: &[DD]) -> DD {
    let mut s = DD::ZERO;
    for (x, y) in a.iter().zip(b) {
        s += *x * *y;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: DD, b: DD) -> f64 {
        ((a - b).to_f64() / b.to_f64()).abs()
    }

    #[test]
    fn thirds_and_tenths() {
        let third = DD::ONE / DD::from(3.0);
        assert!(rel(third * DD::from(3.0), DD::ONE) < 4.0 * EPS);
        let tenth = DD::ONE / DD::from(10.0);
        assert!(tenth.lo != 0.0);
        let s: DD = (0..10).map(|_| tenth).sum();
        assert!(rel(s, DD::ONE) < 20.0 * EPS);
    }

    #[test]
    fn sqrt_two() {
        let r = DD::from(2.0).sqrt();
        assert!(rel(r * r, DD::from(2.0)) < 4.0 * EPS);
        // 1.41421356237309504880168872420969807856967...
        assert_eq!(r.hi, std::f64::consts::SQRT_2);
        assert!((r.lo - (-9.667293313452913e-17)).abs() < 1e-31);
    }

    #[test]
    fn pi_is_correctly_split() {
        // pi - hi computed by the classical 3-part split
        assert_eq!(PI.hi, std::f64::consts::PI);
        assert!((PI.lo - 1.2246467991473532e-16).abs() < 1e-32);
    }

    proptest! {
        #[test]
        fn add_sub_roundtrip(a in -1e6f64..1e6, b in -1e6f64..1e6, c in 1e-20f64..1e-10) {
            let x = DD::from(a) + DD::from(c);
            let y = x + DD::from(b) - DD::from(b);
            prop_assert!((y - x).to_f64().abs() <= 8.0 * EPS * (a.abs() + b.abs() + 1.0));
        }

        #[test]
        fn div_mul_roundtrip(a in 1e-3f64..1e3, b in 1e-3f64..1e3) {
            let q = DD::from(a) / DD::from(b);
            prop_assert!(rel(q * DD::from(b), DD::from(a)) < 8.0 * EPS);
        }

        #[test]
        fn product_is_exact_for_doubles(a in -1e3f64..1e3, b in -1e3f64..1e3) {
            let p = DD::from(a) * DD::from(b);
            prop_assert_eq!(p.lo, a.mul_add(b, -(a * b)));
        }
    }
}
