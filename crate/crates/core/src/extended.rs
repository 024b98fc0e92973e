//! Double-double scalar: an unevaluated sum `hi + lo` of two `f64` with
//! `|lo| <= ulp(hi) / 2`, good for about 31 significant digits.
//!
//! Arithmetic uses the classic error-free transformations (two-sum and an
//! FMA two-product). `exp` and `ln` are accurate to full precision; the
//! trigonometric functions only to `f64` precision, as nothing here needs
//! them. A result that leaves the finite range falls back to the plain
//! `f64` result, so infinities behave exactly as in `f64`.

use std::cmp::Ordering;
use std::fmt;
use std::num::FpCategory;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use num_traits::{Float, FloatConst, FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

#[derive(Debug, Clone, Copy, Default)]
pub struct Extended {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Extended {
    /// Normalised `hi + lo`.
    pub fn new(hi: f64, lo: f64) -> Self {
        let (h, l) = two_sum(hi, lo);
        Self::checked(h, l, hi + lo)
    }

    pub const fn plain(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    fn checked(hi: f64, lo: f64, fallback: f64) -> Self {
        if hi.is_finite() && lo.is_finite() {
            Self { hi, lo }
        } else {
            Self::plain(fallback)
        }
    }

    fn add_dd(self, b: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (h, l) = quick_two_sum(s1, s2 + t2);
        Self::checked(h, l, self.hi + b.hi)
    }

    fn mul_dd(self, b: Self) -> Self {
        let (p1, p2) = two_prod(self.hi, b.hi);
        let p2 = p2 + (self.hi * b.lo + self.lo * b.hi);
        let (h, l) = quick_two_sum(p1, p2);
        Self::checked(h, l, self.hi * b.hi)
    }

    fn mul_f64(self, b: f64) -> Self {
        let (p1, p2) = two_prod(self.hi, b);
        let (h, l) = quick_two_sum(p1, p2 + self.lo * b);
        Self::checked(h, l, self.hi * b)
    }

    fn div_dd(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        if !q1.is_finite() || q1 == 0.0 || !b.hi.is_finite() {
            return Self::plain(q1);
        }
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (h, l) = quick_two_sum(q1, q2);
        Self::checked(h, l, q1) + Self::plain(q3)
    }
}

impl From<f64> for Extended {
    fn from(x: f64) -> Self {
        Self::plain(x)
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == 0.0 {
            write!(f, "{}", self.hi)
        } else {
            write!(f, "{}{:+e}", self.hi, self.lo)
        }
    }
}

/// Written as the nearest `f64`; the strategy text format keeps both words.
impl Serialize for Extended {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> Result<Ser::Ok, Ser::Error> {
        s.serialize_f64(self.hi + self.lo)
    }
}

impl PartialEq for Extended {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Extended {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal if self.hi.is_finite() => self.lo.partial_cmp(&other.lo),
            o => Some(o),
        }
    }
}

impl Add for Extended {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.add_dd(rhs)
    }
}

impl Sub for Extended {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.add_dd(-rhs)
    }
}

impl Mul for Extended {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.mul_dd(rhs)
    }
}

impl Div for Extended {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self.div_dd(rhs)
    }
}

impl Rem for Extended {
    type Output = Self;
    fn rem(self, rhs: Self) -> Self {
        self - (self / rhs).trunc() * rhs
    }
}

impl Neg for Extended {
    type Output = Self;
    fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }
}

impl Zero for Extended {
    fn zero() -> Self {
        Self::plain(0.0)
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0
    }
}

impl One for Extended {
    fn one() -> Self {
        Self::plain(1.0)
    }
}

impl Num for Extended {
    type FromStrRadixErr = <f64 as Num>::FromStrRadixErr;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        f64::from_str_radix(s, radix).map(Self::plain)
    }
}

impl ToPrimitive for Extended {
    fn to_i64(&self) -> Option<i64> {
        let t = self.trunc();
        let v = t.hi.to_i128()? + t.lo.to_i128()?;
        i64::try_from(v).ok()
    }
    fn to_u64(&self) -> Option<u64> {
        let t = self.trunc();
        let v = t.hi.to_i128()? + t.lo.to_i128()?;
        u64::try_from(v).ok()
    }
    fn to_f64(&self) -> Option<f64> {
        Some(self.hi + self.lo)
    }
}

impl FromPrimitive for Extended {
    fn from_i64(n: i64) -> Option<Self> {
        let hi = n as f64;
        Some(Self::new(hi, (n as i128 - hi as i128) as f64))
    }
    fn from_u64(n: u64) -> Option<Self> {
        let hi = n as f64;
        Some(Self::new(hi, (n as i128 - hi as i128) as f64))
    }
    fn from_f64(n: f64) -> Option<Self> {
        Some(Self::plain(n))
    }
}

impl NumCast for Extended {
    fn from<T: ToPrimitive>(n: T) -> Option<Self> {
        let f = n.to_f64()?;
        if f.fract() == 0.0 && f.abs() < 1.8e19 {
            if let Some(i) = n.to_i64() {
                return Self::from_i64(i);
            }
            if let Some(u) = n.to_u64() {
                return Self::from_u64(u);
            }
        }
        Some(Self::plain(f))
    }
}

const LN_2: Extended = Extended { hi: 6.931471805599452862e-01, lo: 2.319046813846299558e-17 };
const LN_10: Extended = Extended { hi: 2.302585092994045901e+00, lo: -2.170756223382249351e-16 };
const E: Extended = Extended { hi: 2.718281828459045091e+00, lo: 1.445646891729250158e-16 };
const PI: Extended = Extended { hi: 3.141592653589793116e+00, lo: 1.224646799147353207e-16 };
const SQRT_2: Extended = Extended { hi: 1.414213562373095145e+00, lo: -9.667293313452913451e-17 };

#[allow(non_snake_case)]
impl FloatConst for Extended {
    fn E() -> Self {
        E
    }
    fn FRAC_1_PI() -> Self {
        Self::one() / PI
    }
    fn FRAC_1_SQRT_2() -> Self {
        SQRT_2.mul_f64(0.5)
    }
    fn FRAC_2_PI() -> Self {
        Self::plain(2.0) / PI
    }
    fn FRAC_2_SQRT_PI() -> Self {
        Self::plain(2.0) / PI.sqrt()
    }
    fn FRAC_PI_2() -> Self {
        PI.mul_f64(0.5)
    }
    fn FRAC_PI_3() -> Self {
        PI / Self::plain(3.0)
    }
    fn FRAC_PI_4() -> Self {
        PI.mul_f64(0.25)
    }
    fn FRAC_PI_6() -> Self {
        PI / Self::plain(6.0)
    }
    fn FRAC_PI_8() -> Self {
        PI.mul_f64(0.125)
    }
    fn LN_10() -> Self {
        LN_10
    }
    fn LN_2() -> Self {
        LN_2
    }
    fn LOG10_E() -> Self {
        Self::one() / LN_10
    }
    fn LOG2_E() -> Self {
        Self::one() / LN_2
    }
    fn PI() -> Self {
        PI
    }
    fn SQRT_2() -> Self {
        SQRT_2
    }
}

/// `expm1(r)` for `|r| <= 0.36`: Taylor series at `r / 512`, then nine
/// doublings via `expm1(2y) = expm1(y) (expm1(y) + 2)`, which keeps the
/// relative accuracy for small arguments.
fn expm1_small(r: Extended) -> Extended {
    let y = r.mul_f64(1.0 / 512.0);
    let mut term = y;
    let mut s = y;
    for n in 2..=10 {
        term = term * y / Extended::plain(n as f64);
        s = s + term;
    }
    let two = Extended::plain(2.0);
    for _ in 0..9 {
        s = s * (s + two);
    }
    s
}

fn dd_exp(x: Extended) -> Extended {
    if x.hi.is_nan() {
        return Extended::plain(f64::NAN);
    }
    if x.hi > 709.78 {
        return Extended::plain(f64::INFINITY);
    }
    if x.hi < -745.2 {
        return Extended::zero();
    }
    let k = (x.hi / LN_2.hi).round();
    let r = x - LN_2.mul_f64(k);
    let e = expm1_small(r) + Extended::one();
    // 2^k in two halves so neither factor overflows near the range ends
    let k = k as i32;
    e.mul_f64(2f64.powi(k / 2)).mul_f64(2f64.powi(k - k / 2))
}

fn dd_expm1(x: Extended) -> Extended {
    if x.hi.abs() <= 0.36 {
        expm1_small(x)
    } else {
        dd_exp(x) - Extended::one()
    }
}

fn dd_ln(x: Extended) -> Extended {
    if x.hi.is_nan() || x.hi < 0.0 {
        return Extended::plain(f64::NAN);
    }
    if x.hi == 0.0 {
        return Extended::plain(f64::NEG_INFINITY);
    }
    if x.hi.is_infinite() {
        return x;
    }
    // Split off the binary exponent so exp(-y) below stays far from the
    // subnormal range, then Newton on exp(y) = m from the f64 estimate.
    let e = x.hi.log2().floor() as i32;
    let m = x.mul_f64(2f64.powi(-e / 2)).mul_f64(2f64.powi(-(e - e / 2)));
    let mut y = Extended::plain(m.hi.ln());
    for _ in 0..2 {
        y = y + m * dd_exp(-y) - Extended::one();
    }
    LN_2.mul_f64(e as f64) + y
}

fn dd_ln_1p(x: Extended) -> Extended {
    if x.hi.abs() > 0.3 {
        return dd_ln(x + Extended::one());
    }
    let mut y = Extended::plain(x.hi.ln_1p());
    for _ in 0..2 {
        let e = dd_expm1(y);
        y = y - (e - x) / (e + Extended::one());
    }
    y
}

macro_rules! via_f64 {
    ($($name:ident),*) => {
        $(
            fn $name(self) -> Self {
                Self::plain(self.hi.$name())
            }
        )*
    };
}

impl Float for Extended {
    fn nan() -> Self {
        Self::plain(f64::NAN)
    }
    fn infinity() -> Self {
        Self::plain(f64::INFINITY)
    }
    fn neg_infinity() -> Self {
        Self::plain(f64::NEG_INFINITY)
    }
    fn neg_zero() -> Self {
        Self::plain(-0.0)
    }
    fn min_value() -> Self {
        Self::plain(f64::MIN)
    }
    fn min_positive_value() -> Self {
        Self::plain(f64::MIN_POSITIVE)
    }
    fn epsilon() -> Self {
        // 2^-104
        Self::plain(4.930380657631324e-32)
    }
    fn max_value() -> Self {
        Self::plain(f64::MAX)
    }
    fn is_nan(self) -> bool {
        self.hi.is_nan()
    }
    fn is_infinite(self) -> bool {
        self.hi.is_infinite()
    }
    fn is_finite(self) -> bool {
        self.hi.is_finite()
    }
    fn is_normal(self) -> bool {
        self.hi.is_normal()
    }
    fn classify(self) -> FpCategory {
        self.hi.classify()
    }
    fn is_sign_positive(self) -> bool {
        self.hi.is_sign_positive()
    }
    fn is_sign_negative(self) -> bool {
        self.hi.is_sign_negative()
    }
    fn floor(self) -> Self {
        let h = self.hi.floor();
        if h == self.hi {
            Self::new(h, self.lo.floor())
        } else {
            Self::plain(h)
        }
    }
    fn ceil(self) -> Self {
        let h = self.hi.ceil();
        if h == self.hi {
            Self::new(h, self.lo.ceil())
        } else {
            Self::plain(h)
        }
    }
    fn round(self) -> Self {
        let r = (self + Self::plain(0.5)).floor();
        if self.hi < 0.0 && (r - self) == Self::plain(0.5) {
            // halves round away from zero, as in f64
            r - Self::one()
        } else {
            r
        }
    }
    fn trunc(self) -> Self {
        if self.hi >= 0.0 {
            self.floor()
        } else {
            self.ceil()
        }
    }
    fn fract(self) -> Self {
        self - self.trunc()
    }
    fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }
    fn signum(self) -> Self {
        Self::plain(self.hi.signum())
    }
    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }
    fn recip(self) -> Self {
        Self::one() / self
    }
    fn powi(self, n: i32) -> Self {
        if !self.is_finite() || self.is_zero() {
            return Self::plain(self.hi.powi(n));
        }
        let mut base = self;
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        if n < 0 {
            acc.recip()
        } else {
            acc
        }
    }
    fn powf(self, n: Self) -> Self {
        if !(self.hi > 0.0) || !self.is_finite() || !n.is_finite() {
            return Self::plain(self.hi.powf(n.hi));
        }
        (n * self.ln()).exp()
    }
    fn sqrt(self) -> Self {
        if !(self.hi > 0.0) || !self.is_finite() {
            return Self::plain(self.hi.sqrt());
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let (sq_h, sq_l) = two_prod(ax, ax);
        let diff = (self - Self::new(sq_h, sq_l)).hi;
        Self::plain(ax) + Self::plain(diff * x * 0.5)
    }
    fn cbrt(self) -> Self {
        if self.hi == 0.0 || !self.is_finite() {
            return Self::plain(self.hi.cbrt());
        }
        // one Newton step from the f64 root
        let y = Self::plain(self.hi.cbrt());
        y - (y * y * y - self) / (Self::plain(3.0) * y * y)
    }
    fn exp(self) -> Self {
        dd_exp(self)
    }
    fn exp2(self) -> Self {
        (self * LN_2).exp()
    }
    fn exp_m1(self) -> Self {
        dd_expm1(self)
    }
    fn ln(self) -> Self {
        dd_ln(self)
    }
    fn ln_1p(self) -> Self {
        dd_ln_1p(self)
    }
    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }
    fn log2(self) -> Self {
        self.ln() / LN_2
    }
    fn log10(self) -> Self {
        self.ln() / LN_10
    }
    fn max(self, other: Self) -> Self {
        if self.is_nan() || other > self {
            other
        } else {
            self
        }
    }
    fn min(self, other: Self) -> Self {
        if self.is_nan() || other < self {
            other
        } else {
            self
        }
    }
    fn abs_sub(self, other: Self) -> Self {
        if self > other {
            self - other
        } else {
            Self::zero()
        }
    }
    fn hypot(self, other: Self) -> Self {
        (self * self + other * other).sqrt()
    }
    via_f64!(sin, cos, tan, asin, acos, atan, sinh, cosh, tanh, asinh, acosh, atanh);
    fn atan2(self, other: Self) -> Self {
        Self::plain(self.hi.atan2(other.hi))
    }
    fn sin_cos(self) -> (Self, Self) {
        (self.sin(), self.cos())
    }
    fn integer_decode(self) -> (u64, i16, i8) {
        self.hi.integer_decode()
    }
}
