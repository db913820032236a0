//! Double-double scalar.
//!
//! A thin wrapper over [`TwoFloat`] that replaces its division and
//! reciprocal: `twofloat` 0.8 computes the correction term of the reciprocal
//! without a fused multiply-add, so `1 / 3` comes back with a zero low word
//! and every quotient is only double accurate. Everything else delegates.

use std::cmp::Ordering;
use std::fmt;
use std::num::FpCategory;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, RemAssign, Sub, SubAssign};

use num_traits::{Float, FloatConst, Num, NumCast, One, ToPrimitive, Zero};
use twofloat::TwoFloat;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble(pub TwoFloat);

impl DoubleDouble {
    pub fn new(hi: f64, lo: f64) -> Self {
        DoubleDouble(TwoFloat::new_add(hi, lo))
    }

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        DoubleDouble(tf(x))
    }

    #[inline]
    pub fn hi(self) -> f64 {
        self.0.hi()
    }

    #[inline]
    pub fn lo(self) -> f64 {
        self.0.lo()
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        DoubleDouble(tf(x))
    }
}

impl From<TwoFloat> for DoubleDouble {
    fn from(x: TwoFloat) -> Self {
        DoubleDouble(x)
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

#[inline]
fn tf(x: f64) -> TwoFloat {
    <TwoFloat as From<f64>>::from(x)
}

fn quotient(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    if !q1.is_finite() || q1 == 0.0 {
        return tf(q1);
    }
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    TwoFloat::new_add(q1, q2) + q3
}

macro_rules! binop {
    ($trait:ident, $method:ident, $assign_trait:ident, $assign:ident, $body:expr) => {
        impl $trait for DoubleDouble {
            type Output = DoubleDouble;
            #[inline]
            fn $method(self, rhs: Self) -> Self {
                DoubleDouble($body(self.0, rhs.0))
            }
        }
        impl $assign_trait for DoubleDouble {
            #[inline]
            fn $assign(&mut self, rhs: Self) {
                *self = $trait::$method(*self, rhs);
            }
        }
    };
}

binop!(Add, add, AddAssign, add_assign, |a, b| a + b);
binop!(Sub, sub, SubAssign, sub_assign, |a, b| a - b);
binop!(Mul, mul, MulAssign, mul_assign, |a, b| a * b);
binop!(Div, div, DivAssign, div_assign, quotient);
binop!(Rem, rem, RemAssign, rem_assign, |a: TwoFloat, b: TwoFloat| a - quotient(a, b).trunc() * b);

impl Neg for DoubleDouble {
    type Output = DoubleDouble;
    fn neg(self) -> Self {
        DoubleDouble(-self.0)
    }
}

impl Zero for DoubleDouble {
    fn zero() -> Self {
        DoubleDouble(tf(0.0))
    }
    fn is_zero(&self) -> bool {
        self.0.hi() == 0.0
    }
}

impl One for DoubleDouble {
    fn one() -> Self {
        DoubleDouble(tf(1.0))
    }
}

impl Num for DoubleDouble {
    type FromStrRadixErr = String;

    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        if radix != 10 {
            return Err(format!("unsupported radix {radix}"));
        }
        s.parse::<f64>().map(DoubleDouble::from_f64).map_err(|e| e.to_string())
    }
}

impl ToPrimitive for DoubleDouble {
    fn to_i64(&self) -> Option<i64> {
        self.0.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        Some(self.hi() + self.lo())
    }
}

impl NumCast for DoubleDouble {
    fn from<N: ToPrimitive>(n: N) -> Option<Self> {
        n.to_f64().map(DoubleDouble::from_f64)
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl fmt::LowerExp for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::LowerExp::fmt(&self.0, f)
    }
}

macro_rules! consts {
    ($($name:ident),*) => {
        impl FloatConst for DoubleDouble {
            $(fn $name() -> Self { DoubleDouble(<TwoFloat as FloatConst>::$name()) })*
        }
    };
}

consts!(
    E, FRAC_1_PI, FRAC_1_SQRT_2, FRAC_2_PI, FRAC_2_SQRT_PI, FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, FRAC_PI_8,
    LN_10, LN_2, LOG10_E, LOG2_E, PI, SQRT_2, TAU, LOG10_2, LOG2_10
);

macro_rules! unary {
    ($($name:ident),*) => {
        $(#[inline] fn $name(self) -> Self { DoubleDouble(Float::$name(self.0)) })*
    };
}

macro_rules! nullary {
    ($($name:ident),*) => {
        $(#[inline] fn $name() -> Self { DoubleDouble(<TwoFloat as Float>::$name()) })*
    };
}

macro_rules! predicate {
    ($($name:ident),*) => {
        $(#[inline] fn $name(self) -> bool { Float::$name(self.0) })*
    };
}

impl Float for DoubleDouble {
    nullary!(nan, infinity, neg_infinity, neg_zero, min_value, min_positive_value, max_value);
    predicate!(is_nan, is_infinite, is_finite, is_normal, is_sign_positive, is_sign_negative);
    unary!(
        floor, ceil, round, trunc, fract, abs, signum, sqrt, exp, exp2, ln, log2, log10, cbrt, sin, cos, tan, asin, acos,
        atan, exp_m1, ln_1p, sinh, cosh, tanh, asinh, acosh, atanh
    );

    fn epsilon() -> Self {
        DoubleDouble::from_f64(2f64.powi(-104))
    }

    fn classify(self) -> FpCategory {
        Float::classify(self.0)
    }

    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }

    fn recip(self) -> Self {
        Self::one() / self
    }

    fn powi(self, n: i32) -> Self {
        let mut base = if n < 0 { self.recip() } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base *= base;
            e >>= 1;
        }
        acc
    }

    fn powf(self, n: Self) -> Self {
        DoubleDouble(Float::powf(self.0, n.0))
    }

    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }

    fn max(self, other: Self) -> Self {
        if self.is_nan() || other > self { other } else { self }
    }

    fn min(self, other: Self) -> Self {
        if self.is_nan() || other < self { other } else { self }
    }

    fn abs_sub(self, other: Self) -> Self {
        if self <= other { Self::zero() } else { self - other }
    }

    fn hypot(self, other: Self) -> Self {
        (self * self + other * other).sqrt()
    }

    fn atan2(self, other: Self) -> Self {
        DoubleDouble(Float::atan2(self.0, other.0))
    }

    fn sin_cos(self) -> (Self, Self) {
        (self.sin(), self.cos())
    }

    fn integer_decode(self) -> (u64, i16, i8) {
        Float::integer_decode(self.0)
    }
}
