//! Fractional one-ray relaxation: robots carry real weights and a point
//! counts as covered once robots of total weight `eta` have covered it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulas::InstanceParams;
use crate::scalar::{xlogx, Scalar};
use crate::strategy::RoundPlan;

pub const DEFAULT_DENOMINATOR_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionalInstance {
    pub weights: Vec<f64>,
    pub eta: f64,
    /// Allowed overshoot of each `k_i / q` above `w_i / eta`.
    pub delta: f64,
}

impl FractionalInstance {
    pub fn new(weights: Vec<f64>, eta: f64, delta: f64) -> Result<Self> {
        let inst = Self { weights, eta, delta };
        inst.validate()?;
        Ok(inst)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("fractional instance: {e}")))?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.is_empty() || self.weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::Domain("weights must be positive and finite".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("weights sum to {total}, not 1")));
        }
        if !(self.eta > 1.0) || !self.eta.is_finite() {
            return Err(Error::Domain(format!("eta must exceed 1, got {}", self.eta)));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::Domain(format!("delta must be nonnegative, got {}", self.delta)));
        }
        Ok(())
    }
}

/// `C(eta) = 2 eta^eta / (eta-1)^(eta-1) + 1`, the tight ratio of the
/// fractional relaxation. At `eta = 1` the setting degenerates, so only
/// `eta > 1` is accepted.
pub fn fractional_ratio<S: Scalar>(eta: S) -> Result<S> {
    if !(eta > S::one()) || !eta.is_finite() {
        return Err(Error::Domain(format!("eta must exceed 1, got {eta:?}")));
    }
    Ok(S::lit(2.0) * (xlogx(eta) - xlogx(eta - S::one())).exp() + S::one())
}

/// Integer instance approximating a fractional one: `k_i` robots stand in
/// for weight `w_i`, and `q`-fold coverage stands in for weight `eta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rationalization {
    pub q: u64,
    pub k_i: Vec<u64>,
    pub k: u64,
    /// `eta - q/k`: the integer instance asks for weight `eta - epsilon`.
    pub epsilon: f64,
}

impl Rationalization {
    /// The equivalent integer problem: `q` rays, `k` robots, no faults.
    pub fn instance(&self) -> Result<InstanceParams> {
        InstanceParams::new(self.q as usize, self.k as usize, 0)
    }
}

/// Smallest `q <= cap` admitting integers `k_i` with
/// `w_i / eta <= k_i / q <= w_i / eta + delta` for every weight.
pub fn rationalize_weights(inst: &FractionalInstance, cap: u64) -> Result<Rationalization> {
    inst.validate()?;
    let targets: Vec<f64> = inst.weights.iter().map(|w| w / inst.eta).collect();
    // Relative slack so that e.g. 0.5 * 2 computed as 1.0000000000000002
    // still rounds up to 1.
    let ceil = |v: f64| (v * (1.0 - 1e-12)).ceil().max(1.0);
    let excess = |q: u64, t: f64| {
        let qf = q as f64;
        let k = ceil(qf * t);
        (k, k / qf - t - inst.delta - 1e-12 * t)
    };
    for q in 1..=cap {
        if targets.iter().all(|&t| excess(q, t).1 <= 0.0) {
            let k_i: Vec<u64> = targets.iter().map(|&t| excess(q, t).0 as u64).collect();
            let k: u64 = k_i.iter().sum();
            return Ok(Rationalization {
                q,
                k,
                k_i,
                epsilon: inst.eta - q as f64 / k as f64,
            });
        }
    }
    // Report the weight whose bracket is missed by the widest margin at the cap.
    let index = (0..targets.len())
        .max_by(|&a, &b| excess(cap, targets[a]).1.total_cmp(&excess(cap, targets[b]).1))
        .unwrap_or(0);
    Err(Error::CapExceeded { cap, index })
}

/// Replaces weighted robot `i` by `k_i` identical copies of its plan.
pub fn lift_strategy<S: Scalar>(plans: &[RoundPlan<S>], r: &Rationalization) -> Result<Vec<RoundPlan<S>>> {
    if plans.len() != r.k_i.len() {
        return Err(Error::Config(format!(
            "{} weighted plans for {} rationalized weights",
            plans.len(),
            r.k_i.len()
        )));
    }
    Ok(plans
        .iter()
        .zip(&r.k_i)
        .flat_map(|(p, &copies)| std::iter::repeat(p.clone()).take(copies as usize))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulas::ratio_lower_bound;

    #[test]
    fn closed_form_values() {
        assert!((fractional_ratio(2.0f64).unwrap() - 9.0).abs() < 1e-12);
        let want = 2.0 * 1.5f64.powf(1.5) / 0.5f64.sqrt() + 1.0;
        assert!((fractional_ratio(1.5f64).unwrap() - want).abs() < 1e-12);
        assert!((want - 6.196).abs() < 1e-3);
        assert!(fractional_ratio(1.0f64).is_err());
        assert!(fractional_ratio(0.5f64).is_err());
    }

    #[test]
    fn matches_integer_bound() {
        for q in 2..=20usize {
            for k in 1..q {
                let p = InstanceParams::new(q, k, 0).unwrap();
                let a = fractional_ratio(q as f64 / k as f64).unwrap();
                let b = ratio_lower_bound::<f64>(&p).unwrap();
                assert!((a - b).abs() <= 1e-10 * b, "{q} {k}");
            }
        }
    }

    #[test]
    fn increasing_in_eta() {
        let mut prev = fractional_ratio(1.0001f64).unwrap();
        for i in 1..2000 {
            let v = fractional_ratio(1.0001 + i as f64 * 0.01).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn rationalization_examples() {
        let r = rationalize_weights(&FractionalInstance::new(vec![1.0], 2.0, 0.0).unwrap(), 100).unwrap();
        assert_eq!((r.q, r.k_i.clone(), r.k), (2, vec![1], 1));
        assert_eq!(r.epsilon, 0.0);
        let r = rationalize_weights(&FractionalInstance::new(vec![0.5, 0.5], 2.0, 0.01).unwrap(), 100).unwrap();
        assert_eq!((r.q, r.k_i.clone()), (4, vec![1, 1]));
        let inst = FractionalInstance::new(vec![1.0 / 3.0, 2.0 / 3.0], 1.5, 0.001).unwrap();
        let r = rationalize_weights(&inst, DEFAULT_DENOMINATOR_CAP).unwrap();
        // brute-force oracle for the smallest denominator
        let oracle = (1..).find(|&q: &u64| {
            [2.0 / 9.0, 4.0 / 9.0].iter().all(|t| {
                (1..=q).any(|k| {
                    let v = k as f64 / q as f64;
                    v >= t - 1e-15 && v <= t + 0.001 + 1e-15
                })
            })
        });
        assert_eq!(Some(r.q), oracle);
        for (k, t) in r.k_i.iter().zip([2.0 / 9.0, 4.0 / 9.0]) {
            let v = *k as f64 / r.q as f64;
            assert!(v >= t - 1e-15 && v <= t + 0.001 + 1e-15);
        }
        assert!(r.epsilon >= 0.0);
    }

    #[test]
    fn cap_exceeded_reports_tightest() {
        let inst = FractionalInstance::new(vec![0.3, 0.7], 2f64.sqrt(), 0.0).unwrap();
        match rationalize_weights(&inst, 50) {
            Err(Error::CapExceeded { cap: 50, index }) => assert!(index < 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn instance_validation() {
        assert!(FractionalInstance::new(vec![0.5, 0.4], 2.0, 0.1).is_err());
        assert!(FractionalInstance::new(vec![1.0], 1.0, 0.1).is_err());
        assert!(FractionalInstance::new(vec![1.0], 2.0, -0.1).is_err());
        let inst = FractionalInstance::from_json(r#"{"weights":[0.5,0.5],"eta":2.0,"delta":0.01}"#).unwrap();
        assert_eq!(inst.weights.len(), 2);
        assert!(FractionalInstance::from_json("{}").is_err());
    }

    #[test]
    fn lift_copies_plans() {
        let r = Rationalization { q: 5, k_i: vec![2, 1], k: 3, epsilon: 0.0 };
        let plans = vec![RoundPlan::<f64>::straight_out(1), RoundPlan::straight_out(2)];
        let lifted = lift_strategy(&plans, &r).unwrap();
        assert_eq!(lifted.len(), 3);
        assert_eq!(lifted[1], plans[0]);
        assert_eq!(lifted[2], plans[1]);
        assert!(lift_strategy(&plans[..1], &r).is_err());
    }
}
