//! Strategy representations for the line and for `m` rays, their
//! standardisation, and extraction of the intervals each turn `lambda`-covers.

mod exponential;
mod format;

pub use exponential::{make_exponential_strategy, make_exponential_strategy_with_alpha, ExponentialStrategy, NominalInterval};
pub use format::{parse_strategies, write_strategies};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::formulas::CoverParams;
use crate::scalar::Scalar;

/// Covering relaxation a strategy is evaluated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    /// Symmetric line cover: `x` counts once both `x` and `-x` are visited.
    Line,
    /// One ray with returns: repeat visits count only after passing the origin.
    Orc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Positive,
    Negative,
}

impl Side {
    pub fn flip(self) -> Self {
        match self {
            Side::Positive => Side::Negative,
            Side::Negative => Side::Positive,
        }
    }

    /// Ray label used when the line is viewed as two rays.
    pub fn ray(self) -> usize {
        match self {
            Side::Positive => 1,
            Side::Negative => 2,
        }
    }
}

/// Line strategy: go to `turns[0]` on `first`, then alternate sides.
/// After the final turn the robot keeps walking towards the opposite side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TurnSequence<S> {
    pub first: Side,
    pub turns: Vec<S>,
}

impl<S: Scalar> TurnSequence<S> {
    pub fn new(turns: Vec<S>) -> Self {
        Self {
            first: Side::Positive,
            turns,
        }
    }

    pub fn side_of(&self, i: usize) -> Side {
        if i % 2 == 0 {
            self.first
        } else {
            self.first.flip()
        }
    }

    /// Same trajectory as excursions on two rays (positive side = ray 1).
    pub fn to_round_plan(&self) -> RoundPlan<S> {
        RoundPlan {
            rounds: self
                .turns
                .iter()
                .enumerate()
                .map(|(i, &turn)| Round {
                    ray: self.side_of(i).ray(),
                    turn,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Round<S> {
    pub ray: usize,
    pub turn: S,
}

/// Ray strategy: a list of excursions origin -> `turn` on `ray` -> origin.
/// A final round may have an infinite turn (the robot never comes back).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundPlan<S> {
    pub rounds: Vec<Round<S>>,
}

impl<S: Scalar> RoundPlan<S> {
    /// A single excursion that never returns.
    pub fn straight_out(ray: usize) -> Self {
        Self {
            rounds: vec![Round {
                ray,
                turn: S::infinity(),
            }],
        }
    }

    /// Line view of a plan that strictly alternates between rays 1 and 2.
    pub fn to_turn_sequence(&self) -> Result<TurnSequence<S>> {
        let first = match self.rounds.first().map(|r| r.ray) {
            None | Some(1) => Side::Positive,
            Some(2) => Side::Negative,
            Some(r) => return Err(Error::Config(format!("ray {r} has no line counterpart"))),
        };
        let seq = TurnSequence {
            first,
            turns: self.rounds.iter().map(|r| r.turn).collect(),
        };
        for (i, r) in self.rounds.iter().enumerate() {
            if r.ray != seq.side_of(i).ray() {
                return Err(Error::Config(format!(
                    "round {i} does not alternate between rays 1 and 2"
                )));
            }
        }
        Ok(seq)
    }

    pub fn max_ray(&self) -> usize {
        self.rounds.iter().map(|r| r.ray).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Strategy<S> {
    Line(TurnSequence<S>),
    Rays(RoundPlan<S>),
}

impl<S: Scalar> Strategy<S> {
    pub fn to_round_plan(&self) -> RoundPlan<S> {
        match self {
            Strategy::Line(t) => t.to_round_plan(),
            Strategy::Rays(p) => p.clone(),
        }
    }

    /// Ray label and turn distance of every turn, in order.
    pub fn turns(&self) -> Vec<(usize, S)> {
        match self {
            Strategy::Line(t) => t
                .turns
                .iter()
                .enumerate()
                .map(|(i, &x)| (t.side_of(i).ray(), x))
                .collect(),
            Strategy::Rays(p) => p.rounds.iter().map(|r| (r.ray, r.turn)).collect(),
        }
    }

    pub fn as_line(&self) -> Option<&TurnSequence<S>> {
        match self {
            Strategy::Line(t) => Some(t),
            Strategy::Rays(_) => None,
        }
    }
}

/// Closed interval `[left, right]` that one turn (or round) `lambda`-covers.
///
/// `load` is the robot's turn sum up to and including this turn, which the
/// potential engine needs once turns are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverInterval<S> {
    pub robot: usize,
    pub round: usize,
    pub left: S,
    pub right: S,
    pub load: S,
}

/// Standardises a line strategy for the symmetric cover.
///
/// Mirrors a negative first move, merges turns made inside territory the
/// robot already visited, replaces each turn by the minimum of its suffix so
/// turns are nondecreasing, then drops repeated and non-fruitful turns in a
/// single greedy pass. The result covers a superset of the input and is a
/// fixed point of this function.
pub fn normalize_line_strategy<S: Scalar>(t: &TurnSequence<S>, c: &CoverParams<S>) -> TurnSequence<S> {
    let mut turns: Vec<S> = t.turns.iter().copied().filter(|x| *x > S::zero()).collect();

    // A turn no farther out than the robot's previous extent on that side
    // sits in visited territory: collapse that leg, merging the neighbouring
    // turns on the other side (the final continuation is an infinite turn).
    let mut i = 2;
    while i < turns.len() {
        if turns[i] <= turns[i - 2] {
            if i + 1 < turns.len() {
                let merged = if turns[i - 1] > turns[i + 1] { turns[i - 1] } else { turns[i + 1] };
                turns.splice(i - 1..=i + 1, [merged]);
            } else {
                turns.truncate(i - 1);
            }
            i = 2.max(i.saturating_sub(2));
        } else {
            i += 1;
        }
    }

    for j in (0..turns.len().saturating_sub(1)).rev() {
        if turns[j + 1] < turns[j] {
            turns[j] = turns[j + 1];
        }
    }

    let mu = c.mu();
    let mut kept: Vec<S> = Vec::with_capacity(turns.len());
    let mut sum = S::zero();
    for x in turns {
        let prev = kept.last().copied().unwrap_or(S::zero());
        if x <= prev {
            continue;
        }
        let lo = line_left(sum + x, prev, mu);
        if lo <= x {
            kept.push(x);
            sum = sum + x;
        }
    }
    TurnSequence::new(kept)
}

/// Drops rounds that `lambda`-cover nothing; later rounds only gain from it.
pub fn normalize_round_plan<S: Scalar>(plan: &RoundPlan<S>, c: &CoverParams<S>) -> RoundPlan<S> {
    let mu = c.mu();
    let mut sum = S::zero();
    let mut rounds = Vec::with_capacity(plan.rounds.len());
    for r in &plan.rounds {
        if !(r.turn > S::zero()) {
            continue;
        }
        if sum / mu <= r.turn {
            rounds.push(*r);
            sum = sum + r.turn;
        }
    }
    RoundPlan { rounds }
}

fn line_left<S: Scalar>(sum_through: S, prev: S, mu: S) -> S {
    let by_time = sum_through / mu;
    if by_time > prev {
        by_time
    } else {
        prev
    }
}

/// Fruitful intervals of one robot's strategy in the given setting.
///
/// Line: `t''_i = max((t_1+...+t_i)/mu, t_{i-1})`, which presumes a
/// normalised (nondecreasing) sequence. One-ray: `t''_i = (t_1+...+t_{i-1})/mu`,
/// with line strategies read as alternating rounds on two rays.
pub fn cover_intervals<S: Scalar>(
    robot: usize,
    strategy: &Strategy<S>,
    c: &CoverParams<S>,
    setting: Setting,
) -> Result<Vec<CoverInterval<S>>> {
    let mu = c.mu();
    let mut out = Vec::new();
    match setting {
        Setting::Line => {
            let seq = strategy.as_line().ok_or_else(|| {
                Error::Config(format!("robot {robot}: line setting needs a turn sequence"))
            })?;
            let mut sum = S::zero();
            let mut prev = S::zero();
            for (round, &t) in seq.turns.iter().enumerate() {
                sum = sum + t;
                let left = line_left(sum, prev, mu);
                if left <= t {
                    out.push(CoverInterval {
                        robot,
                        round,
                        left,
                        right: t,
                        load: sum,
                    });
                }
                prev = t;
            }
        }
        Setting::Orc => {
            let mut sum = S::zero();
            for (round, (_, t)) in strategy.turns().into_iter().enumerate() {
                let left = sum / mu;
                sum = sum + t;
                if left <= t {
                    out.push(CoverInterval {
                        robot,
                        round,
                        left,
                        right: t,
                        load: sum,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// [`cover_intervals`] for a whole team; robot ids are list positions.
pub fn team_cover_intervals<S: Scalar>(
    strategies: &[Strategy<S>],
    c: &CoverParams<S>,
    setting: Setting,
) -> Result<Vec<CoverInterval<S>>> {
    let mut all = Vec::new();
    for (robot, s) in strategies.iter().enumerate() {
        all.extend(cover_intervals(robot, s, c, setting)?);
    }
    Ok(all)
}
