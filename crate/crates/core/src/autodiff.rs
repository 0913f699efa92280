//! Forward-mode automatic differentiation with dual numbers.
//!
//! A [`Dual`] carries a value and the derivative of that value with respect
//! to a single active perturbation variable. Every projection in this crate
//! is written against the [`Scalar`] trait, so the same code runs over plain
//! `f64` (the ordinary plot) and over [`Dual`] (the plot plus its
//! sensitivity to the seeded perturbation).
//!
//! Comparisons, `max`, `min` and `abs` look only at the value channel. The
//! derivative follows whichever branch the value channel selects, so control
//! flow in a dual execution is identical to the plain execution on the same
//! values. At non-differentiable points (`abs` at zero, ties in `max`/`min`)
//! the derivative of the first operand's branch is used, which for `abs`
//! means a zero derivative.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use thiserror::Error;

/// An elementary function evaluated outside of its real domain.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("{op} is not defined (or not differentiable) at {value}")]
pub struct DomainError {
    pub op: &'static str,
    pub value: f64,
}

/// Numeric type the projections are generic over.
pub trait Scalar:
    Copy
    + Debug
    + Display
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + Sum
{
    /// Lift a constant (derivative zero).
    fn from_f64(v: f64) -> Self;
    fn value(self) -> f64;
    /// Derivative channel; always zero for plain reals.
    fn deriv(self) -> f64;
    /// Build from a value and a derivative; plain reals drop the derivative.
    fn from_parts(value: f64, deriv: f64) -> Self;

    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, p: f64) -> Self;
    fn abs(self) -> Self;

    #[inline]
    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    #[inline]
    fn one() -> Self {
        Self::from_f64(1.0)
    }

    #[inline]
    fn cmp_value(&self, other: &Self) -> Ordering {
        self.value().total_cmp(&other.value())
    }

    /// Larger of the two by value; ties keep `self`.
    #[inline]
    fn max(self, other: Self) -> Self {
        if other.value() > self.value() {
            other
        } else {
            self
        }
    }

    /// Smaller of the two by value; ties keep `self`.
    #[inline]
    fn min(self, other: Self) -> Self {
        if other.value() < self.value() {
            other
        } else {
            self
        }
    }

    #[inline]
    fn is_finite(self) -> bool {
        self.value().is_finite() && self.deriv().is_finite()
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn deriv(self) -> f64 {
        0.0
    }
    #[inline]
    fn from_parts(value: f64, _deriv: f64) -> Self {
        value
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
}

/// A dual number `value + deriv·ε` with `ε² = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct Dual {
    pub value: f64,
    pub deriv: f64,
}

impl Dual {
    #[inline]
    pub const fn new(value: f64, deriv: f64) -> Self {
        Self { value, deriv }
    }

    /// A constant: derivative zero.
    #[inline]
    pub const fn constant(value: f64) -> Self {
        Self { value, deriv: 0.0 }
    }

    /// The active variable: derivative one.
    #[inline]
    pub const fn seeded(value: f64) -> Self {
        Self { value, deriv: 1.0 }
    }

    #[inline]
    fn chain(self, value: f64, slope: f64) -> Self {
        Self {
            value,
            deriv: self.deriv * slope,
        }
    }

    pub fn try_div(self, rhs: Self) -> Result<Self, DomainError> {
        if rhs.value == 0.0 {
            return Err(DomainError {
                op: "div",
                value: rhs.value,
            });
        }
        Ok(self / rhs)
    }

    /// Square root; zero is rejected because the derivative is unbounded there.
    pub fn try_sqrt(self) -> Result<Self, DomainError> {
        if self.value <= 0.0 || !self.value.is_finite() {
            return Err(DomainError {
                op: "sqrt",
                value: self.value,
            });
        }
        Ok(Scalar::sqrt(self))
    }

    pub fn try_ln(self) -> Result<Self, DomainError> {
        if self.value <= 0.0 || !self.value.is_finite() {
            return Err(DomainError {
                op: "ln",
                value: self.value,
            });
        }
        Ok(Scalar::ln(self))
    }

    pub fn try_exp(self) -> Result<Self, DomainError> {
        let r = Scalar::exp(self);
        if !r.is_finite() {
            return Err(DomainError {
                op: "exp",
                value: self.value,
            });
        }
        Ok(r)
    }

    /// `self^p` for a constant exponent. Non-positive bases are only accepted
    /// for non-negative integer exponents.
    pub fn try_powf(self, p: f64) -> Result<Self, DomainError> {
        let integral = p.fract() == 0.0 && p >= 0.0;
        let ok = if integral {
            self.value != 0.0 || p == 0.0 || p >= 1.0
        } else {
            self.value > 0.0
        };
        if !ok {
            return Err(DomainError {
                op: "pow",
                value: self.value,
            });
        }
        Ok(Scalar::powf(self, p))
    }

    /// `self^exponent` with both operands active; requires a positive base.
    pub fn try_pow(self, exponent: Self) -> Result<Self, DomainError> {
        if self.value <= 0.0 {
            return Err(DomainError {
                op: "pow",
                value: self.value,
            });
        }
        let value = self.value.powf(exponent.value);
        let deriv =
            value * (exponent.deriv * self.value.ln() + exponent.value * self.deriv / self.value);
        Ok(Self { value, deriv })
    }
}

impl Display for Dual {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.value, self.deriv)
    }
}

impl From<f64> for Dual {
    fn from(v: f64) -> Self {
        Self::constant(v)
    }
}

impl Scalar for Dual {
    #[inline]
    fn from_f64(v: f64) -> Self {
        Self::constant(v)
    }
    #[inline]
    fn value(self) -> f64 {
        self.value
    }
    #[inline]
    fn deriv(self) -> f64 {
        self.deriv
    }
    #[inline]
    fn from_parts(value: f64, deriv: f64) -> Self {
        Self::new(value, deriv)
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        if self.deriv == 0.0 {
            return Self::constant(s);
        }
        self.chain(s, 0.5 / s)
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e)
    }
    #[inline]
    fn ln(self) -> Self {
        self.chain(self.value.ln(), 1.0 / self.value)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::constant(1.0),
            1 => self,
            2 => self * self,
            _ => self.chain(self.value.powi(n), n as f64 * self.value.powi(n - 1)),
        }
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        if p == 0.0 {
            return Self::constant(1.0);
        }
        self.chain(self.value.powf(p), p * self.value.powf(p - 1.0))
    }
    #[inline]
    fn abs(self) -> Self {
        if self.value > 0.0 {
            self
        } else if self.value < 0.0 {
            -self
        } else {
            Self::constant(0.0)
        }
    }
}

impl Add for Dual {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.value + rhs.value, self.deriv + rhs.deriv)
    }
}

impl Sub for Dual {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.value - rhs.value, self.deriv - rhs.deriv)
    }
}

impl Mul for Dual {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.value * rhs.value,
            self.value * rhs.deriv + rhs.value * self.deriv,
        )
    }
}

impl Div for Dual {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let value = self.value / rhs.value;
        Self::new(value, (self.deriv - value * rhs.deriv) / rhs.value)
    }
}

impl Neg for Dual {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.value, -self.deriv)
    }
}

impl Add<f64> for Dual {
    type Output = Self;
    #[inline]
    fn add(self, rhs: f64) -> Self {
        Self::new(self.value + rhs, self.deriv)
    }
}

impl Sub<f64> for Dual {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: f64) -> Self {
        Self::new(self.value - rhs, self.deriv)
    }
}

impl Mul<f64> for Dual {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.value * rhs, self.deriv * rhs)
    }
}

impl Div<f64> for Dual {
    type Output = Self;
    #[inline]
    fn div(self, rhs: f64) -> Self {
        Self::new(self.value / rhs, self.deriv / rhs)
    }
}

macro_rules! assign_ops {
    ($($tr:ident $method:ident $op:tt),*) => {
        $(impl $tr for Dual {
            #[inline]
            fn $method(&mut self, rhs: Self) {
                *self = *self $op rhs;
            }
        })*
    };
}

assign_ops!(AddAssign add_assign +, SubAssign sub_assign -, MulAssign mul_assign *, DivAssign div_assign /);

impl Sum for Dual {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::constant(0.0), |a, b| a + b)
    }
}

/// Lift a slice of plain values to constant duals.
pub fn lift(values: &[f64]) -> Vec<Dual> {
    values.iter().copied().map(Dual::constant).collect()
}

/// Value channels of a slice of scalars.
pub fn values<S: Scalar>(xs: &[S]) -> Vec<f64> {
    xs.iter().map(|x| x.value()).collect()
}

/// Derivative channels of a slice of scalars.
pub fn derivs<S: Scalar>(xs: &[S]) -> Vec<f64> {
    xs.iter().map(|x| x.deriv()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(v: f64, e: f64) -> Dual {
        Dual::new(v, e)
    }

    #[test]
    fn add_examples() {
        assert_eq!(d(2.0, 1.0) + d(3.0, 0.0), d(5.0, 1.0));
        assert_eq!(d(7.5, 0.0) + d(0.0, 0.0), d(7.5, 0.0));
        assert_eq!(d(1.5, 2.0) + d(2.5, -1.0), d(4.0, 1.0));
    }

    #[test]
    fn mul_examples() {
        assert_eq!(d(2.0, 1.0) * d(2.0, 1.0), d(4.0, 4.0));
        assert_eq!(d(3.0, 0.0) * d(4.0, 1.0), d(12.0, 3.0));
        assert_eq!(d(3.0, 2.0) * d(5.0, -1.0), d(15.0, 7.0));
    }

    #[test]
    fn elementary_examples() {
        assert_eq!(d(4.0, 1.0).try_sqrt().unwrap(), d(2.0, 0.25));
        assert_eq!(d(0.0, 3.0).try_exp().unwrap(), d(1.0, 3.0));
        assert_eq!(Scalar::max(d(2.0, 5.0), d(3.0, -1.0)), d(3.0, -1.0));
        assert_eq!(Scalar::min(d(2.0, 5.0), d(3.0, -1.0)), d(2.0, 5.0));
        assert_eq!(-d(2.0, 5.0), d(-2.0, -5.0));
        assert_eq!(d(2.0, 5.0).cmp_value(&d(3.0, -100.0)), Ordering::Less);
    }

    #[test]
    fn domain_errors() {
        assert_eq!(d(0.0, 1.0).try_sqrt().unwrap_err().op, "sqrt");
        assert!(d(-1.0, 1.0).try_sqrt().is_err());
        assert!(d(0.0, 1.0).try_ln().is_err());
        assert!(d(1.0, 1.0).try_div(d(0.0, 2.0)).is_err());
        assert!(d(-2.0, 1.0).try_powf(0.5).is_err());
        assert!(d(-2.0, 1.0).try_powf(3.0).is_ok());
        assert!(d(-2.0, 1.0).try_pow(d(2.0, 0.0)).is_err());
    }

    #[test]
    fn abs_at_zero_has_zero_derivative() {
        assert_eq!(Scalar::abs(d(0.0, 3.0)), d(0.0, 0.0));
        assert_eq!(Scalar::abs(d(-2.0, 3.0)), d(2.0, -3.0));
    }

    #[test]
    fn seeds() {
        assert_eq!(Dual::constant(3.0).deriv, 0.0);
        assert_eq!(Dual::seeded(3.0).deriv, 1.0);
        assert_eq!(Dual::from(3.0).deriv, 0.0);
    }

    #[test]
    fn pow_with_active_exponent() {
        // d/dt (t^t) at t = 2 is 2^2 (ln 2 + 1)
        let t = Dual::seeded(2.0);
        let r = t.try_pow(t).unwrap();
        assert!((r.value - 4.0).abs() < 1e-15);
        assert!((r.deriv - 4.0 * (2f64.ln() + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn f64_scalar_has_no_derivative() {
        let x: f64 = Scalar::from_f64(3.0);
        assert_eq!(x.deriv(), 0.0);
        assert_eq!(Scalar::sqrt(4.0f64), 2.0);
    }
}
