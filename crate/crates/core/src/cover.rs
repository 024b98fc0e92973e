//! Multiplicity checks for families of cover intervals and the exact
//! `q`-fold assignment the potential argument runs on.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{cmp, Key, Scalar};
use crate::strategy::CoverInterval;

/// Leftmost point where coverage falls short. With `open` the shortfall
/// holds on an open segment starting at `point`, otherwise at `point` itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness<S> {
    pub point: S,
    pub open: bool,
    pub multiplicity_found: usize,
    pub multiplicity_required: usize,
}

impl<S: Scalar> From<Witness<S>> for Error {
    fn from(w: Witness<S>) -> Self {
        Error::Deficient {
            point: w.point.to_f64_lossy(),
            found: w.multiplicity_found,
            required: w.multiplicity_required,
        }
    }
}

/// Checks that every point of `[1, n]` lies in at least `q` intervals.
pub fn verify_multicover<S: Scalar>(intervals: &[CoverInterval<S>], q: usize, n: S) -> Result<(), Witness<S>> {
    verify_multicover_range(intervals, q, S::one(), n)
}

/// Checks `q`-fold coverage of `[lo, hi]` by closed intervals; `hi` may be
/// infinite. Comparisons are exact.
pub fn verify_multicover_range<S: Scalar>(
    intervals: &[CoverInterval<S>],
    q: usize,
    lo: S,
    hi: S,
) -> Result<(), Witness<S>> {
    let live: Vec<&CoverInterval<S>> = intervals
        .iter()
        .filter(|c| c.left <= c.right && c.right >= lo && c.left <= hi)
        .collect();
    let mut below = live.iter().filter(|c| c.left < lo).count();
    // coordinate -> (starts, ends)
    let mut events: BTreeMap<Key<S>, (usize, usize)> = BTreeMap::new();
    events.entry(Key(lo)).or_default();
    for c in &live {
        if c.left >= lo {
            events.entry(Key(c.left)).or_default().0 += 1;
        }
        if c.right <= hi {
            events.entry(Key(c.right)).or_default().1 += 1;
        }
    }
    let short = |point: S, open: bool, found: usize| Witness {
        point,
        open,
        multiplicity_found: found,
        multiplicity_required: q,
    };
    for (Key(p), (starts, ends)) in events {
        let at = below + starts;
        if at < q {
            return Err(short(p, false, at));
        }
        below = at - ends;
        if p < hi && below < q {
            return Err(short(p, true, below));
        }
    }
    Ok(())
}

/// An interval after assignment: the robot is charged with `(left, right]`,
/// where `t_dprime <= left` is where its cover interval started.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssignedInterval<S> {
    pub robot: usize,
    pub round: usize,
    pub t_dprime: S,
    pub left: S,
    pub right: S,
    /// The robot's turn sum through this round.
    pub load: S,
}

/// Picks and shrinks cover intervals so every point of `(1, n]` lies in
/// exactly `q` of the resulting half-open intervals.
///
/// Sweeps upward from 1: whenever fewer than `q` intervals are active, the
/// available one that ends first is activated and starts at the current
/// point. Activating the earliest end first keeps each robot's assigned
/// intervals in round order.
pub fn exact_q_assignment<S: Scalar>(
    intervals: &[CoverInterval<S>],
    q: usize,
    n: S,
) -> Result<Vec<AssignedInterval<S>>> {
    verify_multicover(intervals, q, n).map_err(Error::from)?;
    if q == 0 {
        return Ok(Vec::new());
    }
    let one = S::one();
    let start = |c: &CoverInterval<S>| if c.left > one { c.left } else { one };
    let mut pending: Vec<&CoverInterval<S>> = intervals.iter().filter(|c| c.left <= c.right).collect();
    pending.sort_by(|a, b| cmp(&start(a), &start(b)));
    let mut pending = pending.into_iter().peekable();

    let mut available: BTreeSet<(Key<S>, usize, usize, usize)> = BTreeSet::new();
    let mut chosen: Vec<&CoverInterval<S>> = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    let mut out = Vec::new();
    let mut p = one;
    loop {
        active.retain(|&i| chosen[i].right > p);
        while let Some(c) = pending.next_if(|c| start(c) <= p) {
            available.insert((Key(c.right), c.robot, c.round, chosen.len()));
            chosen.push(c);
        }
        while active.len() < q {
            let Some((Key(right), _, _, idx)) = available.pop_first() else {
                return Err(Error::InvalidAssignment(format!(
                    "only {} intervals available above {:?}",
                    active.len(),
                    p
                )));
            };
            if right <= p {
                continue;
            }
            let c = chosen[idx];
            out.push(AssignedInterval {
                robot: c.robot,
                round: c.round,
                t_dprime: c.left,
                left: p,
                right,
                load: c.load,
            });
            active.push(idx);
        }
        let next = active
            .iter()
            .map(|&i| chosen[i].right)
            .fold(S::infinity(), |a, b| if b < a { b } else { a });
        if next >= n {
            break;
        }
        p = next;
    }
    out.sort_by(|a, b| (a.robot, a.round).cmp(&(b.robot, b.round)));
    Ok(out)
}

/// Assigned intervals in the order the potential argument consumes them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrefixStream<S> {
    /// Sorted by `(left, robot, round)`.
    pub order: Vec<AssignedInterval<S>>,
    /// Length of the shortest prefix holding an interval of every robot.
    pub initial: usize,
}

pub fn prefix_stream<S: Scalar>(assigned: &[AssignedInterval<S>], robots: &[usize]) -> Result<PrefixStream<S>> {
    let mut order = assigned.to_vec();
    order.sort_by(|a, b| cmp(&a.left, &b.left).then((a.robot, a.round).cmp(&(b.robot, b.round))));
    let mut missing: BTreeSet<usize> = robots.iter().copied().collect();
    let mut initial = 0;
    for (i, a) in order.iter().enumerate() {
        if missing.is_empty() {
            break;
        }
        missing.remove(&a.robot);
        initial = i + 1;
    }
    if let Some(&robot) = missing.first() {
        return Err(Error::MissingRobot { robot });
    }
    Ok(PrefixStream { order, initial })
}

pub const ASSIGNMENT_HEADER: &str = "# faultsearch assignment v1";

pub fn write_assignment_csv<S: Scalar, W: Write>(assigned: &[AssignedInterval<S>], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{ASSIGNMENT_HEADER}")?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["robot", "round", "t_prime", "t"])?;
    for a in assigned {
        csv.write_record([
            a.robot.to_string(),
            a.round.to_string(),
            a.left.to_token(),
            a.right.to_token(),
        ])?;
    }
    csv.flush()
}
