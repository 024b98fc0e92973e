//! Cross-module properties: simulator structure, cover and gap auditing on
//! randomly built strategies, fractional lifting, and scalar genericity.

use faultsearch::cover::{exact_q_assignment, verify_multicover, verify_multicover_range};
use faultsearch::formulas::ratio_lower_bound;
use faultsearch::fractional::{lift_strategy, rationalize_weights, FractionalInstance};
use faultsearch::potential::{detect_gap, refute, GapReport, RefuteOptions, Verdict};
use faultsearch::simulator::{critical_targets, detection_time, worst_ratio, Target};
use faultsearch::strategy::{make_exponential_strategy, team_cover_intervals, CoverInterval};
use faultsearch::{CoverParams, Extended, InstanceParams, Round, RoundPlan, Scalar, Setting, Strategy, TurnSequence};
use proptest::prelude::*;
use proptest::strategy::Strategy as _;

fn growing(start: f64, factors: &[f64]) -> Vec<f64> {
    let mut x = start;
    factors
        .iter()
        .map(|g| {
            x *= g;
            x
        })
        .collect()
}

fn line_team() -> impl proptest::strategy::Strategy<Value = Vec<Strategy<f64>>> {
    prop::collection::vec((0.3f64..2.0, prop::collection::vec(1.2f64..3.5, 4..12)), 1..4)
        .prop_map(|v| v.into_iter().map(|(s, g)| Strategy::Line(TurnSequence::new(growing(s, &g)))).collect())
}

fn ray_team(m: usize, k: usize) -> impl proptest::strategy::Strategy<Value = Vec<Strategy<f64>>> {
    prop::collection::vec(
        (0.2f64..1.0, prop::collection::vec((1..=m, 1.1f64..2.5), 6..20)),
        k..=k,
    )
    .prop_map(|v| {
        v.into_iter()
            .map(|(s, rounds)| {
                let turns = growing(s, &rounds.iter().map(|r| r.1).collect::<Vec<_>>());
                Strategy::Rays(RoundPlan {
                    rounds: rounds.iter().zip(turns).map(|(r, turn)| Round { ray: r.0, turn }).collect(),
                })
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn detection_is_permutation_invariant(team in line_team(), x in 1.0f64..50.0, ray in 1usize..=2, f in 0usize..2) {
        let t = Target::new(ray, x).unwrap();
        let mut rev = team.clone();
        rev.reverse();
        let a = detection_time(&team, &t, f).map(|d| d.tau);
        let b = detection_time(&rev, &t, f).map(|d| d.tau);
        prop_assert_eq!(a.ok(), b.ok());
    }

    /// Between consecutive breakpoints `tau(x) - x` is constant.
    #[test]
    fn tau_minus_x_is_piecewise_constant(team in line_team(), u in prop::collection::vec(0.01f64..0.99, 2..6)) {
        let n = 200.0;
        for ray in 1..=2 {
            let mut cuts: Vec<f64> = critical_targets(&team, 2, n)
                .into_iter()
                .filter(|t| t.ray == ray)
                .map(|t| t.x)
                .collect();
            cuts.push(n);
            for w in cuts.windows(2) {
                let offsets: Vec<Option<f64>> = u
                    .iter()
                    .map(|s| {
                        let x = w[0] + s * (w[1] - w[0]);
                        detection_time(&team, &Target::new(ray, x).unwrap(), 0).ok().map(|d| d.tau - x)
                    })
                    .collect();
                for o in &offsets[1..] {
                    match (o, offsets[0]) {
                        (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0)),
                        (a, b) => prop_assert_eq!(a.is_some(), b.is_some()),
                    }
                }
            }
        }
    }

    /// A robot that jumps past `C t'` leaves `(mu t', C t']` to the others,
    /// who must cover it `fold - 1` times.
    #[test]
    fn case2_range_is_covered_by_the_others(team in ray_team(2, 3), c_factor in 1.05f64..3.0) {
        let p = InstanceParams::new(2, 3, 1).unwrap();
        let lambda = 40.0;
        let c = CoverParams::new(lambda).unwrap();
        let n = 30.0;
        let intervals = team_cover_intervals(&team, &c, Setting::Orc).unwrap();
        let fold = p.q();
        prop_assume!(verify_multicover(&intervals, fold, n).is_ok());
        let assigned = exact_q_assignment(&intervals, fold, n).unwrap();
        let gap = c.mu() * c_factor;
        if let GapReport::Case2 { robot, lo, hi, others_multiplicity, required, .. } = detect_gap(&assigned, gap, c.mu(), n, fold) {
            if let Some(found) = others_multiplicity {
                prop_assert!(found >= required, "others cover {} < {} on ({}, {}]", found, required, lo, hi);
                let others: Vec<CoverInterval<f64>> = assigned
                    .iter()
                    .filter(|a| a.robot != robot)
                    .map(|a| CoverInterval { robot: a.robot, round: a.round, left: a.left, right: a.right, load: a.load })
                    .collect();
                prop_assert!(verify_multicover_range(&others, required, lo, hi).is_ok());
            }
        }
    }

    /// Perturbed doubling strategies: when they cover, the line potential
    /// stays under its cap (the audit inside `refute` enforces it).
    #[test]
    fn line_potential_capped_on_perturbed_doubling(g in prop::collection::vec(1.7f64..2.3, 10..30), lambda in 9.0f64..12.0) {
        let p = InstanceParams::new(2, 1, 0).unwrap();
        let team = vec![Strategy::Line(TurnSequence::new(growing(0.5, &g)))];
        match refute(&team, lambda, &p, 1e3, Setting::Line, &RefuteOptions::default()) {
            Ok(Verdict::Certificate(cert)) => {
                let cap = ((lambda - 1.0) / 2.0).ln();
                if let Some(max) = cert.max_log_potential {
                    prop_assert!(max <= cap + 1e-9);
                }
            }
            Ok(Verdict::CoverageFailure { witness, .. }) => prop_assert!(witness.point >= 1.0),
            Err(e) => prop_assert!(false, "{}", e),
        }
    }
}

#[test]
fn worst_ratio_rises_toward_the_bound() {
    for (m, k, f) in [(2, 1, 0), (2, 3, 1), (3, 2, 0)] {
        let p = InstanceParams::new(m, k, f).unwrap();
        let bound = ratio_lower_bound::<f64>(&p).unwrap();
        let team = make_exponential_strategy::<f64>(&p, 1e5).unwrap().strategies();
        let mut last = 0.0;
        for n in [10.0, 1e2, 1e3, 1e4, 1e5] {
            let w = worst_ratio(&team, m, f, n).unwrap().ratio;
            assert!(w >= last && w <= bound + 1e-6, "({m},{k},{f}) N={n}: {w}");
            last = w;
        }
        assert!(bound - last < 0.05);
    }
}

#[test]
fn lifted_strategies_cover_q_fold() {
    // Two half-weight robots at eta = 2 on one ray: each half-weight robot's
    // doubling covers once, and weight 2 means two full covers in total.
    let inst = FractionalInstance::new(vec![0.5, 0.5], 2.0, 0.01).unwrap();
    let r = rationalize_weights(&inst, 1000).unwrap();
    let doubling = |s: f64| RoundPlan { rounds: (0..30).map(|i| Round { ray: 1, turn: s * 2f64.powi(i) }).collect() };
    let lifted: Vec<Strategy<f64>> = lift_strategy(&[doubling(0.25), doubling(0.5)], &r)
        .unwrap()
        .into_iter()
        .map(Strategy::Rays)
        .collect();
    assert_eq!(lifted.len() as u64, r.k);
    let c = CoverParams::new(9.0).unwrap();
    let intervals = team_cover_intervals(&lifted, &c, Setting::Orc).unwrap();
    // each doubling plan alone covers twice at ratio 9 on one ray
    assert!(verify_multicover(&intervals, 2 * lifted.len(), 1e6).is_ok());
    assert!(verify_multicover(&intervals, r.q as usize, 1e6).is_ok());
}

fn bound_in<S: Scalar>(p: &InstanceParams) -> f64 {
    ratio_lower_bound::<S>(p).unwrap().to_f64_lossy()
}

fn worst_in<S: Scalar>(p: &InstanceParams, n: f64) -> f64 {
    let team = make_exponential_strategy::<S>(p, S::lit(n)).unwrap().strategies();
    worst_ratio(&team, p.m, p.f, S::lit(n)).unwrap().ratio.to_f64_lossy()
}

#[test]
fn every_scalar_type_agrees() {
    for (m, k, f) in [(2, 1, 0), (2, 3, 1), (4, 5, 1)] {
        let p = InstanceParams::new(m, k, f).unwrap();
        let (a, b, c) = (bound_in::<f32>(&p), bound_in::<f64>(&p), bound_in::<Extended>(&p));
        assert!((a - b).abs() < 1e-5 * b && (b - c).abs() < 1e-14 * b);
        let (a, b, c) = (worst_in::<f32>(&p, 1e3), worst_in::<f64>(&p, 1e3), worst_in::<Extended>(&p, 1e3));
        assert!((a - b).abs() < 1e-4 * b && (b - c).abs() < 1e-10 * b, "{a} {b} {c}");
    }
}
