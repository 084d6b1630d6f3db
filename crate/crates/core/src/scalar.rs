//! Scalar abstraction shared by the double and double-double code paths.
//!
//! `Dd` wraps `twofloat::TwoFloat` for its error-free addition and
//! multiplication. Division and the logarithm are done here: the crate's
//! quotient by a two-word divisor computes its correction term without a fused
//! multiply-add and only reaches double precision, and its `exp`/`ln` inherit that.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use twofloat::TwoFloat;

/// Field operations plus the few elementary functions the radial bases need.
pub trait Real:
    Copy
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Send
    + Sync
{
    fn of(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn ln(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn abs(self) -> Self;
    fn zero() -> Self {
        Self::of(0.0)
    }
    fn one() -> Self {
        Self::of(1.0)
    }
}

impl Real for f64 {
    fn of(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
}

/// Double-double number (about 32 significant digits).
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct Dd(pub TwoFloat);

impl Dd {
    pub fn hi(self) -> f64 {
        self.0.hi()
    }
    pub fn lo(self) -> f64 {
        self.0.lo()
    }
    fn recip(self) -> Dd {
        Dd(TwoFloat::from(1.0)) / self
    }
    /// `e^x` by argument reduction `x = k ln 2 + 2¹⁰ t` and a Taylor series in `t`.
    pub fn exp(self) -> Dd {
        let ln2 = Dd(TwoFloat::new_add(
            std::f64::consts::LN_2,
            2.3190468138462996e-17,
        ));
        let k = (self.hi() / std::f64::consts::LN_2).round();
        let r = self - ln2 * Dd::of(k);
        let t = r * Dd::of(1.0 / 1024.0);
        let mut term = Dd::of(1.0);
        let mut sum = Dd::of(0.0);
        for n in 1..=14 {
            term = Dd(term.0 * t.0 / n as f64);
            sum += term;
        }
        // (1 + s)^(2^10) via repeated s ↦ 2s + s²
        for _ in 0..10 {
            sum = sum * Dd::of(2.0) + sum * sum;
        }
        let e = sum + Dd::of(1.0);
        Dd(e.0 * 2f64.powi(k as i32))
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        Dd(self.0 + o.0)
    }
}
impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        Dd(self.0 - o.0)
    }
}
impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        Dd(self.0 * o.0)
    }
}
impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        // long division with two correction quotients
        let q1 = self.hi() / o.hi();
        let r = self - o * Dd::of(q1);
        let q2 = r.hi() / o.hi();
        let r = r - o * Dd::of(q2);
        let q3 = r.hi() / o.hi();
        Dd(TwoFloat::new_add(q1, q2) + q3)
    }
}
impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd(-self.0)
    }
}
impl AddAssign for Dd {
    fn add_assign(&mut self, o: Dd) {
        *self = *self + o;
    }
}
impl SubAssign for Dd {
    fn sub_assign(&mut self, o: Dd) {
        *self = *self - o;
    }
}
impl MulAssign for Dd {
    fn mul_assign(&mut self, o: Dd) {
        *self = *self * o;
    }
}

impl Real for Dd {
    fn of(x: f64) -> Self {
        Dd(TwoFloat::from(x))
    }
    fn to_f64(self) -> f64 {
        self.hi() + self.lo()
    }
    fn ln(self) -> Self {
        // Newton on e^y = x from the double-precision logarithm
        let mut y = Dd::of(self.hi().ln());
        for _ in 0..2 {
            y = y + self * (-y).exp() - Dd::of(1.0);
        }
        y
    }
    fn powi(self, n: i32) -> Self {
        let base = if n < 0 { self.recip() } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Dd::of(1.0);
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc *= b;
            }
            b *= b;
            e >>= 1;
        }
        acc
    }
    fn abs(self) -> Self {
        if self.hi() < 0.0 {
            -self
        } else {
            self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err(x: Dd, hi: f64, lo: f64) -> f64 {
        ((x - Dd::of(hi)) - Dd::of(lo)).hi().abs()
    }

    #[test]
    fn dd_log_is_accurate() {
        // ln of the exactly representable doubles, split into hi + lo by a 40-digit reference
        let cases = [
            (0.1, -2.3025850929940455, -1.7150243628057985e-16),
            (0.01, -4.605170185988091, -4.332104933119537e-16),
            (0.001, -6.907755278982137, -2.1613487097372872e-16),
            (0.0001, -9.210340371976182, -8.601326140234914e-16),
            (0.5, -std::f64::consts::LN_2, -2.3190468138462996e-17),
            (0.9, -0.10536051565782628, 4.81014917638444e-18),
        ];
        for (x, hi, lo) in cases {
            let e = err(Real::ln(Dd::of(x)), hi, lo);
            assert!(e < 1e-30 * hi.abs(), "ln({x}) off by {e:e}");
        }
    }

    #[test]
    fn dd_division_and_powers() {
        let x = Dd::of(0.1);
        let y = Real::powi(x, -7) * Real::powi(x, 7);
        assert!((y - Dd::of(1.0)).hi().abs() < 1e-30);
        let third = Dd::of(1.0) / Dd::of(3.0);
        assert!((third * Dd::of(3.0) - Dd::of(1.0)).hi().abs() < 1e-31);
        let z = Dd(TwoFloat::new_add(1.0, 1e-20)) / Dd(TwoFloat::new_add(7.0, 3e-19));
        assert!(
            (z * Dd(TwoFloat::new_add(7.0, 3e-19)) - Dd(TwoFloat::new_add(1.0, 1e-20)))
                .hi()
                .abs()
                < 1e-31
        );
    }

    #[test]
    fn dd_exp() {
        // e^1 = 2.718281828459045 + 1.4456468917292502e-16
        let e = Dd::of(1.0).exp();
        assert!(err(e, std::f64::consts::E, 1.4456468917292502e-16) < 1e-30);
    }
}
