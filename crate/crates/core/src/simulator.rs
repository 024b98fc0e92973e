//! Trajectory simulation: first-visit times, detection times under crash
//! faults, and the exact worst-case ratio over a bounded range.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::strategy::{RoundPlan, Strategy, TurnSequence};

/// Target on `ray` (1-based; on the line ray 1 is the positive side) at
/// distance `x`. With `just_above` the target sits at `x + eps` for an
/// infinitesimal `eps`: a pass turning exactly at `x` misses it, while
/// visit times and ratios are the limits as `eps -> 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Target<S> {
    pub ray: usize,
    pub x: S,
    pub just_above: bool,
}

impl<S: Scalar> Target<S> {
    pub fn new(ray: usize, x: S) -> Result<Self> {
        if ray == 0 || !(x > S::zero()) || !x.is_finite() {
            return Err(Error::Domain(format!("bad target: ray {ray}, distance {x:?}")));
        }
        Ok(Self { ray, x, just_above: false })
    }

    pub fn just_above(ray: usize, x: S) -> Result<Self> {
        Ok(Self { just_above: true, ..Self::new(ray, x)? })
    }

    fn reached_by(&self, extent: S) -> bool {
        if self.just_above {
            extent > self.x
        } else {
            extent >= self.x
        }
    }
}

/// One outward sweep along a ray: the robot passes distance `y` at time
/// `offset + y` for every `y` up to `extent`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Pass<S> {
    ray: usize,
    offset: S,
    extent: S,
}

fn passes<S: Scalar>(strategy: &Strategy<S>) -> Vec<Pass<S>> {
    match strategy {
        Strategy::Line(t) => line_passes(t),
        Strategy::Rays(p) => round_passes(p),
    }
}

fn line_passes<S: Scalar>(t: &TurnSequence<S>) -> Vec<Pass<S>> {
    let mut out = Vec::with_capacity(t.turns.len() + 1);
    // Time at which the previous turn was made, and its distance.
    let mut clock = S::zero();
    let mut prev = S::zero();
    for (i, &turn) in t.turns.iter().enumerate() {
        out.push(Pass {
            ray: t.side_of(i).ray(),
            offset: clock + prev,
            extent: turn,
        });
        if turn.is_infinite() {
            return out;
        }
        clock = clock + prev + turn;
        prev = turn;
    }
    if !t.turns.is_empty() {
        out.push(Pass {
            ray: t.side_of(t.turns.len()).ray(),
            offset: clock + prev,
            extent: S::infinity(),
        });
    }
    out
}

fn round_passes<S: Scalar>(p: &RoundPlan<S>) -> Vec<Pass<S>> {
    let mut out = Vec::with_capacity(p.rounds.len());
    let mut clock = S::zero();
    for r in &p.rounds {
        out.push(Pass {
            ray: r.ray,
            offset: clock,
            extent: r.turn,
        });
        if r.turn.is_infinite() {
            break;
        }
        clock = clock + S::lit(2.0) * r.turn;
    }
    out
}

/// First time the robot reaches the target, if ever.
pub fn first_visit_time<S: Scalar>(strategy: &Strategy<S>, target: &Target<S>) -> Option<S> {
    passes(strategy)
        .into_iter()
        .find(|p| p.ray == target.ray && target.reached_by(p.extent))
        .map(|p| p.offset + target.x)
}

/// Time by which a line robot has visited both `x` and `-x`.
pub fn pm_cover_time<S: Scalar>(t: &TurnSequence<S>, x: S) -> Option<S> {
    let s = Strategy::Line(t.clone());
    let plus = first_visit_time(&s, &Target { ray: 1, x, just_above: false })?;
    let minus = first_visit_time(&s, &Target { ray: 2, x, just_above: false })?;
    Some(if plus > minus { plus } else { minus })
}

/// Time at which round `round` of a plan passes `x`, if its turn reaches it.
pub fn round_visit_time<S: Scalar>(plan: &RoundPlan<S>, round: usize, x: S) -> Option<S> {
    let before = plan.rounds.get(..round)?;
    if before.iter().any(|r| r.turn.is_infinite()) {
        return None;
    }
    let r = plan.rounds.get(round)?;
    if r.turn < x {
        return None;
    }
    let sum = before.iter().fold(S::zero(), |acc, r| acc + r.turn);
    Some(S::lit(2.0) * sum + x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionReport<S> {
    pub target: Target<S>,
    /// Time of the `(f+1)`-th distinct robot visit.
    pub tau: S,
    pub ratio: S,
    /// Robots in order of first visit, ties broken by robot id.
    pub order: Vec<(usize, S)>,
}

/// Earliest time at which `f + 1` distinct robots have visited the target.
pub fn detection_time<S: Scalar>(
    strategies: &[Strategy<S>],
    target: &Target<S>,
    f: usize,
) -> Result<DetectionReport<S>> {
    let team: Vec<Vec<Pass<S>>> = strategies.iter().map(passes).collect();
    detect(&team, target, f)
}

fn detect<S: Scalar>(team: &[Vec<Pass<S>>], target: &Target<S>, f: usize) -> Result<DetectionReport<S>> {
    let mut order: Vec<(usize, S)> = team
        .iter()
        .enumerate()
        .filter_map(|(robot, ps)| {
            ps.iter()
                .find(|p| p.ray == target.ray && target.reached_by(p.extent))
                .map(|p| (robot, p.offset + target.x))
        })
        .collect();
    order.sort_by(|a, b| crate::scalar::cmp(&a.1, &b.1).then(a.0.cmp(&b.0)));
    match order.get(f) {
        Some(&(_, tau)) => Ok(DetectionReport {
            target: *target,
            tau,
            ratio: tau / target.x,
            order,
        }),
        None => Err(Error::Undetected {
            ray: target.ray,
            x: target.x.to_f64_lossy(),
            found: order.len(),
            required: f + 1,
        }),
    }
}

/// One evaluated target of a sweep. `tau` and `ratio` are infinite when
/// fewer than `f + 1` robots ever arrive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow<S> {
    pub target: Target<S>,
    pub tau: S,
    pub ratio: S,
    pub order: Vec<usize>,
}

fn row<S: Scalar>(team: &[Vec<Pass<S>>], target: Target<S>, f: usize) -> SweepRow<S> {
    match detect(team, &target, f) {
        Ok(r) => SweepRow {
            target,
            tau: r.tau,
            ratio: r.ratio,
            order: r.order.iter().take(f + 1).map(|o| o.0).collect(),
        },
        Err(_) => SweepRow {
            target,
            tau: S::infinity(),
            ratio: S::infinity(),
            order: Vec::new(),
        },
    }
}

/// Targets at which the ratio can peak within `[1, n]` on rays `1..=m`:
/// distance 1 itself and just beyond every turning point in `[1, n)`.
///
/// Between consecutive turning points the set of passes reaching a target
/// is fixed and each arrival time is `offset + x`, so the ratio decreases
/// in `x`; its supremum over the range sits at these points.
pub fn critical_targets<S: Scalar>(strategies: &[Strategy<S>], m: usize, n: S) -> Vec<Target<S>> {
    let mut out = Vec::new();
    for ray in 1..=m {
        let mut turns: Vec<S> = strategies
            .iter()
            .flat_map(|s| s.turns())
            .filter(|&(r, b)| r == ray && b >= S::one() && b < n)
            .map(|(_, b)| b)
            .collect();
        turns.sort_by(crate::scalar::cmp);
        turns.dedup();
        out.push(Target { ray, x: S::one(), just_above: false });
        out.extend(turns.into_iter().map(|x| Target { ray, x, just_above: true }));
    }
    out
}

/// Evaluates every critical target of `[1, n]`, in ray-then-distance order.
pub fn sweep<S: Scalar>(strategies: &[Strategy<S>], m: usize, f: usize, n: S) -> Vec<SweepRow<S>> {
    let team: Vec<Vec<Pass<S>>> = strategies.iter().map(passes).collect();
    critical_targets(strategies, m, n)
        .into_par_iter()
        .map(|t| row(&team, t, f))
        .collect()
}

/// Evaluates a geometric grid `x_j = (1 + step)^j` over `[1, n]` on each ray.
pub fn dense_sweep<S: Scalar>(strategies: &[Strategy<S>], m: usize, f: usize, n: S, step: S) -> Result<Vec<SweepRow<S>>> {
    if !(step > S::zero()) {
        return Err(Error::Domain(format!("grid step must be positive, got {step:?}")));
    }
    let ln_g = step.ln_1p();
    let count = ((n.ln() / ln_g).floor().to_usize().unwrap_or(0)).saturating_add(1);
    let team: Vec<Vec<Pass<S>>> = strategies.iter().map(passes).collect();
    let targets: Vec<Target<S>> = (1..=m)
        .flat_map(|ray| {
            (0..count).map(move |j| Target {
                ray,
                x: (S::of(j) * ln_g).exp(),
                just_above: false,
            })
        })
        .filter(|t| t.x <= n)
        .collect();
    Ok(targets.into_par_iter().map(|t| row(&team, t, f)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstCase<S> {
    pub ratio: S,
    pub witness: Target<S>,
    /// Fewer than `f + 1` robots reach the witness.
    pub undetected: bool,
}

/// Largest row ratio; ties go to the earliest row so the answer does not
/// depend on thread scheduling.
pub fn worst_of<S: Scalar>(rows: &[SweepRow<S>]) -> Option<WorstCase<S>> {
    let mut best: Option<&SweepRow<S>> = None;
    for r in rows {
        if best.map_or(true, |b| r.ratio > b.ratio) {
            best = Some(r);
        }
    }
    best.map(|r| WorstCase {
        ratio: r.ratio,
        witness: r.target,
        undetected: r.ratio.is_infinite(),
    })
}

/// Exact supremum of `tau(x) / x` over targets at distance `1 <= x <= n`.
/// Targets closer than 1 are not considered.
pub fn worst_ratio<S: Scalar>(strategies: &[Strategy<S>], m: usize, f: usize, n: S) -> Result<WorstCase<S>> {
    if !(n >= S::one()) {
        return Err(Error::Domain(format!("range end must be at least 1, got {n:?}")));
    }
    Ok(worst_of(&sweep(strategies, m, f, n)).expect("distance 1 is always a candidate"))
}

pub const SWEEP_HEADER: &str = "# faultsearch sweep v1";

/// Writes rows as CSV after a version comment. `x` carries a trailing `+`
/// for just-above targets.
pub fn write_sweep_csv<S: Scalar, W: Write>(rows: &[SweepRow<S>], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["ray", "x", "tau", "ratio", "robot_order"])?;
    for r in rows {
        let x = if r.target.just_above {
            format!("{}+", r.target.x.to_token())
        } else {
            r.target.x.to_token()
        };
        let order: Vec<String> = r.order.iter().map(|o| o.to_string()).collect();
        csv.write_record([
            r.target.ray.to_string(),
            x,
            r.tau.to_token(),
            r.ratio.to_token(),
            order.join(" "),
        ])?;
    }
    csv.flush()
}
