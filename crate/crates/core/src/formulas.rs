//! Closed-form quantities: tight competitive ratios, the optimal exponent
//! base, the polynomial maximiser behind the growth argument, the growth
//! factor and horizon estimates.
//!
//! Everything that involves `n^n`-style products is evaluated in the log
//! domain; `q^q` alone overflows `f64` for `q` around 170.

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{xlogx, Scalar};
use crate::strategy::Setting;

/// Problem size: `m` rays, `k` robots of which `f` may crash.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InstanceParams {
    pub m: usize,
    pub k: usize,
    pub f: usize,
}

/// Which side of `f < k < q` an instance falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Infeasible,
    Nontrivial,
    Trivial,
}

impl InstanceParams {
    pub fn new(m: usize, k: usize, f: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Domain(format!("need at least 2 rays, got m = {m}")));
        }
        if k < 1 {
            return Err(Error::Domain("need at least one robot".into()));
        }
        Ok(Self { m, k, f })
    }

    /// Required multiplicity in the one-ray relaxation: `m (f + 1)`.
    pub fn q(&self) -> usize {
        self.m * (self.f + 1)
    }

    /// Fold deficit `q - k` (negative in the trivial regime).
    pub fn s(&self) -> i64 {
        self.q() as i64 - self.k as i64
    }

    /// Required multiplicity of the symmetric line cover, `2(f+1) - k`.
    /// Meaningful for `m = 2` only, where it coincides with [`Self::s`].
    pub fn line_fold(&self) -> i64 {
        2 * (self.f as i64 + 1) - self.k as i64
    }

    pub fn rho<S: Scalar>(&self) -> S {
        S::of(self.q()) / S::of(self.k)
    }

    pub fn regime(&self) -> Regime {
        if self.k <= self.f {
            Regime::Infeasible
        } else if self.k >= self.q() {
            Regime::Trivial
        } else {
            Regime::Nontrivial
        }
    }

    pub fn require_nontrivial(&self) -> Result<()> {
        match self.regime() {
            Regime::Infeasible => Err(Error::Infeasible),
            Regime::Trivial => Err(Error::Trivial { ratio: 1.0 }),
            Regime::Nontrivial => Ok(()),
        }
    }
}

/// Target competitive ratio `lambda` and its half-excess `mu = (lambda-1)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverParams<S> {
    pub lambda: S,
}

impl<S: Scalar> CoverParams<S> {
    pub fn new(lambda: S) -> Result<Self> {
        if !(lambda > S::one()) || !lambda.is_finite() {
            return Err(Error::Domain(format!(
                "competitive ratio must be finite and > 1, got {lambda:?}"
            )));
        }
        Ok(Self { lambda })
    }

    pub fn from_mu(mu: S) -> Result<Self> {
        Self::new(S::lit(2.0) * mu + S::one())
    }

    pub fn mu(&self) -> S {
        (self.lambda - S::one()) / S::lit(2.0)
    }
}

/// Parameters of one growth step: the potential multiplies by at least
/// `delta` whenever the realised slack `mu_star` stays below the critical root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthParams<S> {
    pub s: usize,
    pub k: usize,
    pub mu_star: S,
    pub delta: S,
}

impl<S: Scalar> GrowthParams<S> {
    pub fn new(s: usize, k: usize, mu_star: S) -> Result<Self> {
        let delta = growth_factor_delta(s, k, mu_star)?;
        Ok(Self { s, k, mu_star, delta })
    }
}

fn check_sk(s: usize, k: usize) -> Result<()> {
    if s < 1 || k < 1 {
        return Err(Error::Domain(format!("need s >= 1 and k >= 1, got s = {s}, k = {k}")));
    }
    Ok(())
}

/// `ln( (k+s)^(k+s) / (s^s k^k) ) / k`, the log of the critical slack.
pub fn log_critical_mu<S: Scalar>(s: usize, k: usize) -> Result<S> {
    check_sk(s, k)?;
    let (s_, k_) = (S::of(s), S::of(k));
    Ok((xlogx(s_ + k_) - xlogx(s_) - xlogx(k_)) / k_)
}

/// Critical slack `((k+s)^(k+s) / (s^s k^k))^(1/k)`: growth factor exactly 1.
pub fn critical_mu<S: Scalar>(s: usize, k: usize) -> Result<S> {
    log_critical_mu::<S>(s, k).map(Float::exp)
}

/// Tight competitive ratio `2 (q^q / ((q-k)^(q-k) k^k))^(1/k) + 1`.
pub fn ratio_lower_bound<S: Scalar>(p: &InstanceParams) -> Result<S> {
    p.require_nontrivial()?;
    let mu = critical_mu::<S>(p.q() - p.k, p.k)?;
    Ok(S::lit(2.0) * mu + S::one())
}

/// Base `(q / (q-k))^(1/k)` minimising the exponential strategy's ratio.
pub fn optimal_alpha<S: Scalar>(p: &InstanceParams) -> Result<S> {
    p.require_nontrivial()?;
    let (q, k) = (S::of(p.q()), S::of(p.k));
    Ok(((q.ln() - (q - k).ln()) / k).exp())
}

/// Maximiser `s mu* / (k+s)` of `x^s (mu* - x)^k` on `(0, mu*)`.
pub fn poly_max_point<S: Scalar>(s: usize, k: usize, mu_star: S) -> Result<S> {
    check_sk(s, k)?;
    if !(mu_star > S::zero()) {
        return Err(Error::Domain(format!("mu* must be positive, got {mu_star:?}")));
    }
    Ok(S::of(s) * mu_star / S::of(k + s))
}

/// `ln` of `mu*^s / (x^s (mu* - x)^k)`, the one-step potential ratio.
pub fn log_step_ratio<S: Scalar>(s: usize, k: usize, mu_star: S, x: S) -> S {
    let (s_, k_) = (S::of(s), S::of(k));
    s_ * mu_star.ln() - s_ * x.ln() - k_ * (mu_star - x).ln()
}

pub fn log_growth_factor<S: Scalar>(s: usize, k: usize, mu: S) -> Result<S> {
    if !(mu > S::zero()) {
        return Err(Error::Domain(format!("mu must be positive, got {mu:?}")));
    }
    Ok(S::of(k) * (log_critical_mu::<S>(s, k)? - mu.ln()))
}

/// Growth factor `delta = (k+s)^(k+s) / (s^s k^k mu^k)`.
pub fn growth_factor_delta<S: Scalar>(s: usize, k: usize, mu: S) -> Result<S> {
    log_growth_factor(s, k, mu).map(Float::exp)
}

/// A horizon `N = C^steps`, kept in log form because it routinely exceeds
/// the `f64` range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Horizon<S> {
    pub steps: u64,
    pub ln_n: S,
}

impl<S: Scalar> Horizon<S> {
    /// `N` itself; `+inf` when it overflows the scalar type.
    pub fn value(&self) -> S {
        self.ln_n.exp()
    }
}

/// Log of the initial potential assumed by [`horizon_estimate`]. The first
/// prefix is rescaled so every load and covering-situation entry is at
/// least 1, which makes `f0 = 1` the conservative choice.
const LOG_INITIAL_POTENTIAL: f64 = 0.0;

/// Horizon beyond which a covering at ratio `lambda` must contradict the
/// bounded potential.
///
/// One-ray mode uses the Case 1 cap `C^(qk) mu^((q-k)k)`, line mode the cap
/// `mu^(ks)` with `s = 2(f+1) - k`. In both, the step count is the number of
/// `delta`-growth steps needed to exceed the cap starting from `f0 = 1`, and
/// each step advances the frontier by at most a factor `C`.
pub fn horizon_estimate<S: Scalar>(
    p: &InstanceParams,
    lambda: S,
    gap: S,
    setting: Setting,
) -> Result<Horizon<S>> {
    let bound = ratio_lower_bound::<S>(p)?;
    if !(lambda < bound) {
        return Err(Error::NoFiniteHorizon {
            lambda: lambda.to_f64_lossy(),
            bound: bound.to_f64_lossy(),
        });
    }
    let mu = CoverParams::new(lambda)?.mu();
    if !(gap > mu) {
        return Err(Error::Domain(format!(
            "gap constant C = {gap:?} must exceed mu = {mu:?}"
        )));
    }
    let k = S::of(p.k);
    let (exponent, log_cap) = match setting {
        Setting::Orc => {
            let q = S::of(p.q());
            (p.q() - p.k, q * k * gap.ln() + (q - k) * k * mu.ln())
        }
        Setting::Line => {
            if p.m != 2 {
                return Err(Error::Config("line mode requires m = 2".into()));
            }
            let s = p.line_fold() as usize;
            (s, k * S::of(s) * mu.ln())
        }
    };
    let log_delta = log_growth_factor(exponent, p.k, mu)?;
    if !(log_delta > S::zero()) {
        return Err(Error::NoFiniteHorizon {
            lambda: lambda.to_f64_lossy(),
            bound: bound.to_f64_lossy(),
        });
    }
    let raw = ((log_cap - S::lit(LOG_INITIAL_POTENTIAL)) / log_delta).ceil();
    let steps = raw.to_u64().unwrap_or(u64::MAX).max(1);
    Ok(Horizon {
        steps,
        ln_n: S::of(steps as usize) * gap.ln(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(m: usize, k: usize, f: usize) -> InstanceParams {
        InstanceParams::new(m, k, f).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1.0)
    }

    // Golden-section minimiser, independent of the closed form.
    fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if f(a) < f(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        (lo + hi) / 2.0
    }

    #[test]
    fn known_ratios() {
        assert!(rel(ratio_lower_bound::<f64>(&p(2, 1, 0)).unwrap(), 9.0) < 1e-12);
        let b31 = 8.0 / 3.0 * 4f64.cbrt() + 1.0;
        assert!(rel(ratio_lower_bound::<f64>(&p(2, 3, 1)).unwrap(), b31) < 1e-12);
        assert!((b31 - 5.2331).abs() < 1e-4);
        assert!(rel(ratio_lower_bound::<f64>(&p(2, 2, 1)).unwrap(), 9.0) < 1e-12);
        assert!(rel(ratio_lower_bound::<f64>(&p(3, 1, 0)).unwrap(), 14.5) < 1e-12);
    }

    #[test]
    fn regimes_signal() {
        assert_eq!(ratio_lower_bound::<f64>(&p(2, 2, 0)), Err(Error::Trivial { ratio: 1.0 }));
        assert_eq!(ratio_lower_bound::<f64>(&p(2, 1, 1)), Err(Error::Infeasible));
        assert_eq!(optimal_alpha::<f64>(&p(3, 3, 0)), Err(Error::Trivial { ratio: 1.0 }));
        assert!(InstanceParams::new(1, 1, 0).is_err());
    }

    #[test]
    fn alpha_values_and_golden_oracle() {
        assert!(rel(optimal_alpha::<f64>(&p(2, 1, 0)).unwrap(), 2.0) < 1e-12);
        assert!(rel(optimal_alpha::<f64>(&p(3, 1, 0)).unwrap(), 1.5) < 1e-12);
        let a = optimal_alpha::<f64>(&p(2, 3, 1)).unwrap();
        assert!(rel(a, 4f64.cbrt()) < 1e-12);
        for (m, k, f) in [(2, 3, 1), (3, 2, 0), (4, 5, 2), (2, 1, 0)] {
            let pp = p(m, k, f);
            let (q, k) = (pp.q() as i32, pp.k as i32);
            let g = |x: f64| x.powi(q) / (x.powi(k) - 1.0);
            let oracle = golden_min(g, 1.0 + 1e-9, 4.0);
            let closed = optimal_alpha::<f64>(&pp).unwrap();
            assert!((oracle - closed).abs() < 1e-6, "{oracle} vs {closed}");
            // value at the optimum is the critical slack
            let mu0 = (ratio_lower_bound::<f64>(&pp).unwrap() - 1.0) / 2.0;
            assert!(rel(g(closed), mu0) < 1e-10);
        }
    }

    #[test]
    fn poly_max_examples() {
        assert_eq!(poly_max_point(1, 1, 2.0f64).unwrap(), 1.0);
        assert_eq!(poly_max_point(2, 2, 4.0f64).unwrap(), 2.0);
        assert_eq!(poly_max_point(1, 3, 1.0f64).unwrap(), 0.25);
        assert!(poly_max_point(1, 1, 0.0f64).is_err());
        assert!(poly_max_point(1, 1, -1.0f64).is_err());
        // grid oracle for (1, 3, 1)
        let n = 1_000_000;
        let best = (1..n)
            .map(|i| i as f64 / n as f64)
            .max_by(|a, b| {
                let fa = a * (1.0 - a).powi(3);
                let fb = b * (1.0 - b).powi(3);
                fa.partial_cmp(&fb).unwrap()
            })
            .unwrap();
        assert!((best - 0.25).abs() <= 1.0 / n as f64);
    }

    #[test]
    fn delta_examples() {
        assert!(rel(growth_factor_delta(1, 1, 4.0f64).unwrap(), 1.0) < 1e-14);
        assert!(rel(growth_factor_delta(1, 1, 2.0f64).unwrap(), 2.0) < 1e-14);
        assert!(growth_factor_delta(1, 1, 3.9f64).unwrap() > 1.0);
        assert!(growth_factor_delta(1, 1, 4.1f64).unwrap() < 1.0);
        assert!(growth_factor_delta(0, 1, 4.0f64).is_err());
        let g = GrowthParams::new(2, 3, 1.5f64).unwrap();
        assert_eq!(g.delta, growth_factor_delta(2, 3, 1.5).unwrap());
    }

    #[test]
    fn delta_is_one_at_critical_root() {
        for s in 1..8 {
            for k in 1..8 {
                let mu = critical_mu::<f64>(s, k).unwrap();
                let d = growth_factor_delta(s, k, mu).unwrap();
                assert!(rel(d, 1.0) < 1e-10, "s={s} k={k} delta={d}");
            }
        }
    }

    #[test]
    fn monotone_in_f_and_k() {
        for m in 2..=5 {
            for k in 1..=10 {
                for f in 0..=3 {
                    let a = p(m, k, f);
                    if a.regime() != Regime::Nontrivial {
                        continue;
                    }
                    let l = ratio_lower_bound::<f64>(&a).unwrap();
                    let more_f = p(m, k, f + 1);
                    if more_f.regime() == Regime::Nontrivial {
                        assert!(ratio_lower_bound::<f64>(&more_f).unwrap() > l);
                    }
                    let more_k = p(m, k + 1, f);
                    if more_k.regime() == Regime::Nontrivial {
                        assert!(ratio_lower_bound::<f64>(&more_k).unwrap() < l);
                    }
                }
            }
        }
    }

    #[test]
    fn depends_on_q_and_k_only() {
        for k in 2..4 {
            let a = ratio_lower_bound::<f64>(&p(2, k, 1)).unwrap();
            let b = ratio_lower_bound::<f64>(&p(4, k, 0)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn scale_invariance_of_critical_mu() {
        for q in 2..12 {
            for k in 1..q {
                let base = critical_mu::<f64>(q - k, k).unwrap();
                for c in [2, 3] {
                    let scaled = critical_mu::<f64>(c * (q - k), c * k).unwrap();
                    assert!(rel(base, scaled) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn log_domain_survives_large_q() {
        // q = 400 overflows q^q in f64; the log route does not.
        let pp = p(200, 100, 1);
        let l = ratio_lower_bound::<f64>(&pp).unwrap();
        assert!(l.is_finite() && l > 1.0);
        let ext = ratio_lower_bound::<crate::extended::Extended>(&pp).unwrap();
        assert!(rel(ext.hi(), l) < 1e-12);
    }

    #[test]
    fn horizons() {
        let h = horizon_estimate(&p(2, 1, 0), 8.0f64, 16.0, Setting::Orc).unwrap();
        assert!(h.value().is_finite());
        assert_eq!(h.ln_n, h.steps as f64 * 16f64.ln());
        // delta = 4 / 3.5, cap = 16^2 * 3.5
        let expected = ((2.0 * 16f64.ln() + 3.5f64.ln()) / (4.0f64 / 3.5).ln()).ceil();
        assert_eq!(h.steps, expected as u64);
        assert!(matches!(
            horizon_estimate(&p(2, 1, 0), 9.0f64, 16.0, Setting::Orc),
            Err(Error::NoFiniteHorizon { .. })
        ));
        assert!(matches!(
            horizon_estimate(&p(2, 1, 0), 9.5f64, 16.0, Setting::Orc),
            Err(Error::NoFiniteHorizon { .. })
        ));
        assert!(horizon_estimate(&p(2, 1, 0), 8.0f64, 3.0, Setting::Orc).is_err());
        let line = horizon_estimate(&p(2, 3, 1), 5.0f64, 16.0, Setting::Line).unwrap();
        assert!(line.steps >= 1);
        assert!(horizon_estimate(&p(3, 1, 0), 5.0f64, 16.0, Setting::Line).is_err());
    }

    proptest! {
        #[test]
        fn poly_max_matches_grid(s in 1usize..6, k in 1usize..6, mu in 0.1f64..10.0) {
            let x = poly_max_point(s, k, mu).unwrap();
            let n = 20_000;
            let step = mu / n as f64;
            let poly = |x: f64| x.powi(s as i32) * (mu - x).powi(k as i32);
            let grid = (1..n).map(|i| i as f64 * step)
                .max_by(|a, b| poly(*a).partial_cmp(&poly(*b)).unwrap()).unwrap();
            prop_assert!((grid - x).abs() <= step);
        }

        #[test]
        fn step_ratio_at_least_its_minimum(s in 1usize..6, k in 1usize..6, mu in 0.1f64..10.0, t in 0.001f64..0.999) {
            let x = t * mu;
            let xs = poly_max_point(s, k, mu).unwrap();
            let at = log_step_ratio(s, k, mu, x);
            let min = log_step_ratio(s, k, mu, xs);
            prop_assert!(at >= min - 1e-12);
            // and the minimum equals delta evaluated at mu* itself
            let d = log_growth_factor(s, k, mu).unwrap();
            prop_assert!((min - d).abs() < 1e-9 * d.abs().max(1.0));
        }
    }
}
