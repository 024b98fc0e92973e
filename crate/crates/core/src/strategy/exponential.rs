use serde::Serialize;

use super::{Round, RoundPlan, Strategy, TurnSequence};
use crate::error::{Error, Result};
use crate::formulas::{optimal_alpha, InstanceParams};
use crate::scalar::Scalar;

/// Interval `(left, right]` of one round that the exponential strategy is
/// designed to cover; every point of every ray lies in `f + 1` of them,
/// held by distinct robots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NominalInterval<S> {
    pub robot: usize,
    pub round: usize,
    pub ray: usize,
    pub left: S,
    pub right: S,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentialStrategy<S> {
    pub alpha: S,
    pub plans: Vec<RoundPlan<S>>,
    pub nominal: Vec<NominalInterval<S>>,
}

impl<S: Scalar> ExponentialStrategy<S> {
    /// Plans as generic strategies; for `m = 2` they are line strategies
    /// (rounds alternate between the two rays).
    pub fn strategies(&self) -> Vec<Strategy<S>> {
        self.plans
            .iter()
            .map(|p| match p.to_turn_sequence() {
                Ok(t) if p.max_ray() <= 2 => Strategy::Line(t),
                _ => Strategy::Rays(p.clone()),
            })
            .collect()
    }

    pub fn line_strategies(&self) -> Option<Vec<TurnSequence<S>>> {
        self.plans.iter().map(|p| p.to_turn_sequence().ok()).collect()
    }
}

/// Cyclic exponential strategy with base `alpha = (q/(q-k))^(1/k)`.
///
/// Robot `r` (1-based in the exponent) performs round `l = i + m j` on ray
/// `i` with turning point `alpha^(k l + m r)`. Rounds start at `l = 1 - 2m`
/// so the nominal intervals reach below 1 on every ray, and continue until
/// the nominal interval starts at or beyond `horizon`.
pub fn make_exponential_strategy<S: Scalar>(p: &InstanceParams, horizon: S) -> Result<ExponentialStrategy<S>> {
    make_exponential_strategy_with_alpha(p, optimal_alpha::<S>(p)?, horizon)
}

/// Same construction with an arbitrary base `alpha > 1`.
pub fn make_exponential_strategy_with_alpha<S: Scalar>(
    p: &InstanceParams,
    alpha: S,
    horizon: S,
) -> Result<ExponentialStrategy<S>> {
    p.require_nontrivial()?;
    if !(alpha > S::one()) || !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha must exceed 1, got {alpha:?}")));
    }
    if !(horizon >= S::one()) || !horizon.is_finite() {
        return Err(Error::Domain(format!("horizon must be finite and at least 1, got {horizon:?}")));
    }
    let (m, k, q) = (p.m as i64, p.k as i64, p.q() as i64);
    let ln_alpha = alpha.ln();
    let ln_h = horizon.ln();
    let mut plans = Vec::with_capacity(p.k);
    let mut nominal = Vec::new();
    for robot in 0..p.k {
        let r = robot as i64 + 1;
        let mut rounds = Vec::new();
        let mut l = 1 - 2 * m;
        loop {
            let e = k * l + m * r;
            if !(S::lit((e - q) as f64) * ln_alpha < ln_h) {
                break;
            }
            let ray = ((l - 1).rem_euclid(m) + 1) as usize;
            let right = alpha.powi(e as i32);
            nominal.push(NominalInterval {
                robot,
                round: rounds.len(),
                ray,
                left: alpha.powi((e - q) as i32),
                right,
            });
            rounds.push(Round { ray, turn: right });
            l += 1;
        }
        plans.push(RoundPlan { rounds });
    }
    Ok(ExponentialStrategy { alpha, plans, nominal })
}
