//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::Serialize;

use crate::extended::Extended;

/// Real number type the search machinery is generic over: `f32`, `f64`, or
/// the double-double [`Extended`] used for the extended precision mode.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Serialize + Send + Sync + 'static
{
    /// Short name used when echoing the precision mode.
    const NAME: &'static str;

    /// Converts an `f64` literal. All scalar types accept every finite `f64`.
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    fn of(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("integer representable")
    }

    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Token written to text files; `parse_token` must read it back exactly.
    fn to_token(&self) -> String;

    fn parse_token(s: &str) -> Option<Self>;
}

impl Scalar for f64 {
    const NAME: &'static str = "f64";

    fn to_token(&self) -> String {
        format!("{self}")
    }

    fn parse_token(s: &str) -> Option<Self> {
        s.parse().ok()
    }
}

impl Scalar for f32 {
    const NAME: &'static str = "f32";

    fn to_token(&self) -> String {
        format!("{self}")
    }

    fn parse_token(s: &str) -> Option<Self> {
        s.parse().ok()
    }
}

/// Double-double tokens are written as `hi` or `hi~lo`.
impl Scalar for Extended {
    const NAME: &'static str = "extended";

    fn to_token(&self) -> String {
        if self.lo() == 0.0 {
            format!("{}", self.hi())
        } else {
            format!("{}~{:e}", self.hi(), self.lo())
        }
    }

    fn parse_token(s: &str) -> Option<Self> {
        match s.split_once('~') {
            Some((hi, lo)) => {
                let hi: f64 = hi.parse().ok()?;
                let lo: f64 = lo.parse().ok()?;
                Some(Extended::new(hi, lo))
            }
            None => s.parse::<f64>().ok().map(Extended::from),
        }
    }
}

/// `x * ln(x)` with the continuous extension `0 * ln 0 = 0`.
pub(crate) fn xlogx<S: Scalar>(x: S) -> S {
    if x == S::zero() {
        S::zero()
    } else {
        x * x.ln()
    }
}

/// Total order over scalars for sorting; NaN is rejected upstream.
pub(crate) fn cmp<S: Scalar>(a: &S, b: &S) -> std::cmp::Ordering {
    a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal)
}

/// Newtype giving scalars an `Ord` so they can key ordered collections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Key<S>(pub S);

impl<S: Scalar> Eq for Key<S> {}

impl<S: Scalar> PartialOrd for Key<S> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: Scalar> Ord for Key<S> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        cmp(&self.0, &other.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_round_trip() {
        for x in [0.1f64, 1.0 / 3.0, 1e300, 5e-324, f64::INFINITY] {
            assert_eq!(f64::parse_token(&x.to_token()), Some(x));
        }
        let third = Extended::from(1.0) / Extended::from(3.0);
        assert_ne!(third.lo(), 0.0);
        assert_eq!(Extended::parse_token(&third.to_token()), Some(third));
    }

    #[test]
    fn xlogx_at_zero() {
        assert_eq!(xlogx(0.0f64), 0.0);
        assert!((xlogx(2.0f64) - 2.0 * 2.0f64.ln()).abs() < 1e-15);
    }
}
