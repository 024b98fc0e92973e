//! Potential-function audit of a covering.
//!
//! The exact assignment is consumed interval by interval in order of left
//! endpoint. After the shortest prefix containing every robot, each further
//! interval multiplies the potential by at least `delta(mu)`, while the
//! potential itself stays bounded. A covering whose potential would have to
//! outgrow the bound cannot exist; the audit replays that argument on a
//! concrete strategy and checks every inequality along the way.
//!
//! The potential is homogeneous of degree zero in the distances, so no
//! rescaling of the first prefix is needed.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::cover::{exact_q_assignment, prefix_stream, verify_multicover, AssignedInterval, PrefixStream, Witness};
use crate::error::{Error, Result};
use crate::formulas::{log_growth_factor, log_step_ratio, optimal_alpha, poly_max_point, CoverParams, InstanceParams};
use crate::scalar::{cmp, Scalar};
use crate::strategy::{
    normalize_line_strategy, normalize_round_plan, team_cover_intervals, Setting, Strategy,
};

/// Exponents of the potential.
///
/// Line: `log f = e * sum ln L_r - k * sum_A ln y`.
/// One ray: `log f = sum_r (e ln L_r + k ln b_r) - k * sum_A ln y`, with
/// `b_r` the left end of robot `r`'s next assigned interval.
/// `A` holds the `fold` largest right endpoints seen so far.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialParams<S> {
    pub setting: Setting,
    pub mu: S,
    pub fold: usize,
    pub e: usize,
    pub k: usize,
}

impl<S: Scalar> PotentialParams<S> {
    pub fn new(setting: Setting, mu: S, fold: usize, k: usize) -> Result<Self> {
        let e = match setting {
            Setting::Line => fold,
            Setting::Orc => fold.checked_sub(k).unwrap_or(0),
        };
        if e == 0 || k == 0 {
            return Err(Error::Domain(format!(
                "potential needs positive exponents, got fold {fold} with {k} robot(s)"
            )));
        }
        Ok(Self { setting, mu, fold, e, k })
    }

    pub fn log_delta(&self) -> Result<S> {
        log_growth_factor(self.e, self.k, self.mu)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrefixState<S> {
    /// Turn sum of each robot through its last interval in the prefix.
    pub loads: BTreeMap<usize, S>,
    /// One-ray mode: left end of each robot's next interval.
    pub next_left: BTreeMap<usize, S>,
    /// The `fold` largest right endpoints, ascending, padded with 1.
    pub tops: Vec<S>,
    pub log_potential: S,
}

impl<S: Scalar> PrefixState<S> {
    /// Smallest entry of `A`: where the next interval has to start.
    pub fn frontier(&self) -> S {
        self.tops[0]
    }

    fn push_top(&mut self, y: S) {
        self.tops[0] = y;
        self.tops.sort_by(cmp);
    }
}

/// Potential recomputed from the state, with the sum of absolute terms as a
/// scale for tolerances.
pub fn potential_value<S: Scalar>(state: &PrefixState<S>, params: &PotentialParams<S>) -> Result<(S, S)> {
    let (e, k) = (S::of(params.e), S::of(params.k));
    let mut value = S::zero();
    let mut scale = S::zero();
    for (&robot, &load) in &state.loads {
        if !(load > S::zero()) {
            return Err(Error::UndefinedPotential { robot });
        }
        let term = e * load.ln();
        value = value + term;
        scale = scale + term.abs();
        if params.setting == Setting::Orc {
            let b = *state.next_left.get(&robot).ok_or(Error::EndOfAssignment { robot })?;
            let term = k * b.ln();
            value = value + term;
            scale = scale + term.abs();
        }
    }
    for &y in &state.tops {
        let term = k * y.ln();
        value = value - term;
        scale = scale + term.abs();
    }
    Ok((value, scale))
}

/// One consumed interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthStep<S> {
    pub step: usize,
    pub robot: usize,
    pub round: usize,
    pub frontier: S,
    /// Slack realised by the step: new load over the left end it is
    /// measured against. Never exceeds `mu`.
    pub mu_star: S,
    /// Old load over the same left end.
    pub x: S,
    pub log_step_ratio: S,
    /// `ln(mu*^e / (x^e (mu* - x)^k))`; equals the realised ratio unless
    /// the robot skipped rounds in between.
    pub log_model_ratio: S,
    pub log_potential: S,
}

/// Consumes `next`, which must start at the frontier. `following_left` is
/// the left end of the same robot's interval after `next` (one-ray mode).
pub fn advance<S: Scalar>(
    state: &PrefixState<S>,
    next: &AssignedInterval<S>,
    following_left: Option<S>,
    params: &PotentialParams<S>,
) -> Result<(PrefixState<S>, GrowthStep<S>)> {
    let a = state.frontier();
    if next.left != a {
        return Err(Error::InvalidAssignment(format!(
            "robot {} round {} starts at {:?}, frontier is {:?}",
            next.robot, next.round, next.left, a
        )));
    }
    let load = *state
        .loads
        .get(&next.robot)
        .ok_or(Error::UndefinedPotential { robot: next.robot })?;
    let new_load = next.load;
    if !(new_load > load) {
        return Err(Error::InvalidAssignment(format!(
            "robot {} load does not increase at round {}",
            next.robot, next.round
        )));
    }
    let (e, k) = (S::of(params.e), S::of(params.k));
    let mut out = state.clone();
    out.loads.insert(next.robot, new_load);
    out.push_top(next.right);

    let (mu_star, x, delta_log) = match params.setting {
        Setting::Line => {
            let d = e * (new_load.ln() - load.ln()) + k * (a.ln() - next.right.ln());
            (new_load / a, load / a, d)
        }
        Setting::Orc => {
            let b = following_left.ok_or(Error::EndOfAssignment { robot: next.robot })?;
            out.next_left.insert(next.robot, b);
            let d = e * (new_load.ln() - load.ln()) + k * (b.ln() - next.right.ln());
            (new_load / b, load / b, d)
        }
    };
    let tol = S::lit(1e-12);
    if mu_star > params.mu * (S::one() + tol) {
        return Err(Error::InvalidAssignment(format!(
            "robot {} round {}: realised slack {:?} exceeds mu = {:?}",
            next.robot, next.round, mu_star, params.mu
        )));
    }
    out.log_potential = state.log_potential + delta_log;
    let step = GrowthStep {
        step: 0,
        robot: next.robot,
        round: next.round,
        frontier: a,
        mu_star,
        x,
        log_step_ratio: delta_log,
        log_model_ratio: log_step_ratio(params.e, params.k, mu_star, x),
        log_potential: out.log_potential,
    };
    Ok((out, step))
}

/// Walks a prefix stream one interval at a time.
#[derive(Debug, Clone)]
pub struct PotentialEngine<S> {
    pub params: PotentialParams<S>,
    order: Vec<AssignedInterval<S>>,
    following: Vec<Option<S>>,
    pos: usize,
    steps: usize,
    state: PrefixState<S>,
}

impl<S: Scalar> PotentialEngine<S> {
    /// Builds the state of the first prefix. Fails with
    /// [`Error::EndOfAssignment`] in one-ray mode if some robot has no
    /// interval beyond it.
    pub fn new(stream: &PrefixStream<S>, params: PotentialParams<S>) -> Result<Self> {
        let order = stream.order.clone();
        let mut following = vec![None; order.len()];
        let mut last_seen: BTreeMap<usize, usize> = BTreeMap::new();
        for (i, a) in order.iter().enumerate() {
            if let Some(prev) = last_seen.insert(a.robot, i) {
                following[prev] = Some(a.left);
            }
        }
        let mut state = PrefixState {
            loads: BTreeMap::new(),
            next_left: BTreeMap::new(),
            tops: vec![S::one(); params.fold],
            log_potential: S::zero(),
        };
        for (i, a) in order.iter().take(stream.initial).enumerate() {
            if a.left != state.frontier() {
                return Err(Error::InvalidAssignment(format!(
                    "initial prefix: robot {} starts at {:?}, frontier is {:?}",
                    a.robot,
                    a.left,
                    state.frontier()
                )));
            }
            state.loads.insert(a.robot, a.load);
            state.push_top(a.right);
            if params.setting == Setting::Orc {
                match following[i] {
                    Some(b) => state.next_left.insert(a.robot, b),
                    None => state.next_left.remove(&a.robot),
                };
            }
        }
        state.log_potential = potential_value(&state, &params)?.0;
        Ok(Self {
            params,
            order,
            following,
            pos: stream.initial,
            steps: 0,
            state,
        })
    }

    pub fn state(&self) -> &PrefixState<S> {
        &self.state
    }

    /// Consumes the next interval; `None` once the stream is exhausted.
    pub fn step(&mut self) -> Result<Option<GrowthStep<S>>> {
        let Some(next) = self.order.get(self.pos) else {
            return Ok(None);
        };
        let (state, mut step) = advance(&self.state, next, self.following[self.pos], &self.params)?;
        self.steps += 1;
        step.step = self.steps;
        self.state = state;
        self.pos += 1;
        Ok(Some(step))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthTrace<S> {
    pub initial_log_potential: S,
    pub log_delta: S,
    pub steps: Vec<GrowthStep<S>>,
    /// One-ray mode: the robot whose assignment ran out first.
    pub stopped_at_robot: Option<usize>,
}

impl<S: Scalar> GrowthTrace<S> {
    pub fn final_log_potential(&self) -> S {
        self.steps.last().map_or(self.initial_log_potential, |s| s.log_potential)
    }

    pub fn min_log_step_ratio(&self) -> Option<S> {
        self.steps.iter().map(|s| s.log_step_ratio).reduce(|a, b| a.min(b))
    }

    pub fn max_log_potential(&self) -> S {
        self.steps
            .iter()
            .map(|s| s.log_potential)
            .fold(self.initial_log_potential, |a, b| a.max(b))
    }
}

fn tolerance<S: Scalar>(scale: S) -> S {
    S::lit(1e-9) * scale.abs().max(S::one())
}

/// Runs the engine to the end and checks at every step that
///
/// * the realised ratio is at least the model ratio, which is at least
///   `delta(mu*)`, which is at least `delta(mu)`;
/// * the incremental potential matches a from-scratch recomputation;
/// * the frontier never moves down;
/// * in line mode, the potential stays below `k s ln mu`.
pub fn audit_growth<S: Scalar>(mut engine: PotentialEngine<S>) -> Result<GrowthTrace<S>> {
    let p = engine.params;
    let log_delta = p.log_delta()?;
    let cap = S::of(p.k) * S::of(p.e) * p.mu.ln();
    let mut trace = GrowthTrace {
        initial_log_potential: engine.state().log_potential,
        log_delta,
        steps: Vec::new(),
        stopped_at_robot: None,
    };
    let fail = |step: usize, reason: String| Error::AuditViolation { step, reason };
    if p.setting == Setting::Line && engine.state().log_potential > cap + tolerance(cap) {
        return Err(fail(0, "initial potential above the line cap".into()));
    }
    let mut frontier = engine.state().frontier();
    loop {
        let step = match engine.step() {
            Ok(Some(s)) => s,
            Ok(None) => break,
            Err(Error::EndOfAssignment { robot }) => {
                trace.stopped_at_robot = Some(robot);
                break;
            }
            Err(e) => return Err(e),
        };
        let n = step.step;
        let tol = tolerance(step.log_model_ratio);
        if step.log_step_ratio < step.log_model_ratio - tol {
            return Err(fail(n, format!(
                "realised log ratio {:?} below model {:?}",
                step.log_step_ratio, step.log_model_ratio
            )));
        }
        let x_max = poly_max_point(p.e, p.k, step.mu_star)?;
        let step_min = log_step_ratio(p.e, p.k, step.mu_star, x_max);
        if step.log_model_ratio < step_min - tol {
            return Err(fail(n, format!("model ratio {:?} below its minimum {:?}", step.log_model_ratio, step_min)));
        }
        if step_min < log_delta - tolerance(step_min) {
            return Err(fail(n, format!("step bound {step_min:?} below log delta {log_delta:?}")));
        }
        let (scratch, scale) = potential_value(engine.state(), &p)?;
        if (scratch - step.log_potential).abs() > tolerance(scale) {
            return Err(fail(n, format!(
                "incremental potential {:?} disagrees with recomputed {:?}",
                step.log_potential, scratch
            )));
        }
        if step.frontier < frontier {
            return Err(fail(n, "frontier moved down".into()));
        }
        frontier = step.frontier;
        if p.setting == Setting::Line && step.log_potential > cap + tolerance(cap) {
            return Err(fail(n, format!("potential {:?} above the line cap {cap:?}", step.log_potential)));
        }
        trace.steps.push(step);
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum GapReport<S> {
    /// Consecutive left ends of every robot stay within a factor `C`.
    Case1,
    /// Robot `robot` jumps from `t_prime` to beyond `C t_prime`; on
    /// `(lo, hi] = (mu t', min(C t', N)]` it cannot help, so the other robots
    /// must cover that range `fold - 1` times.
    Case2 {
        robot: usize,
        t_prime: S,
        next_t_prime: S,
        lo: S,
        hi: S,
        others_multiplicity: Option<usize>,
        required: usize,
    },
}

/// Smallest number of half-open intervals containing a point of `(lo, hi]`.
/// `None` for an empty range.
fn min_multiplicity<S: Scalar>(intervals: &[&AssignedInterval<S>], lo: S, hi: S) -> Option<usize> {
    if !(lo < hi) {
        return None;
    }
    let mut count = intervals.iter().filter(|a| a.left <= lo && a.right > lo).count() as i64;
    let mut events: BTreeMap<crate::scalar::Key<S>, i64> = BTreeMap::new();
    for a in intervals {
        if a.left > lo && a.left < hi {
            *events.entry(crate::scalar::Key(a.left)).or_default() += 1;
        }
        if a.right > lo && a.right < hi {
            *events.entry(crate::scalar::Key(a.right)).or_default() -= 1;
        }
    }
    let mut min = count;
    for (_, d) in events {
        count += d;
        min = min.min(count);
    }
    Some(min.max(0) as usize)
}

pub fn detect_gap<S: Scalar>(assigned: &[AssignedInterval<S>], gap: S, mu: S, n: S, fold: usize) -> GapReport<S> {
    let mut by_robot: BTreeMap<usize, Vec<&AssignedInterval<S>>> = BTreeMap::new();
    for a in assigned {
        by_robot.entry(a.robot).or_default().push(a);
    }
    let mut first: Option<(S, usize, S)> = None;
    for (&robot, list) in &mut by_robot {
        list.sort_by_key(|a| a.round);
        for w in list.windows(2) {
            let (t, u) = (w[0].left, w[1].left);
            if u > gap * t {
                let better = match first {
                    None => true,
                    Some((ft, fr, _)) => t < ft || (t == ft && robot < fr),
                };
                if better {
                    first = Some((t, robot, u));
                }
                break;
            }
        }
    }
    let Some((t_prime, robot, next_t_prime)) = first else {
        return GapReport::Case1;
    };
    let lo = mu * t_prime;
    let hi = (gap * t_prime).min(n);
    let others: Vec<&AssignedInterval<S>> = assigned.iter().filter(|a| a.robot != robot).collect();
    GapReport::Case2 {
        robot,
        t_prime,
        next_t_prime,
        lo,
        hi,
        others_multiplicity: min_multiplicity(&others, lo, hi),
        required: fold.saturating_sub(1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Headroom<S> {
    pub log_cap: S,
    /// Further `delta`-steps after which the potential must exceed the cap.
    pub steps_to_contradiction: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate<S> {
    pub setting: Setting,
    pub lambda: S,
    pub n: S,
    pub fold: usize,
    /// Robots that hold at least one assigned interval.
    pub k_eff: usize,
    pub log_delta: Option<S>,
    pub steps: usize,
    pub min_log_step_ratio: Option<S>,
    pub initial_log_potential: Option<S>,
    pub max_log_potential: Option<S>,
    pub stopped_at_robot: Option<usize>,
    pub gap: Option<GapReport<S>>,
    pub headroom: Option<Headroom<S>>,
    #[serde(skip)]
    pub trace: Vec<GrowthStep<S>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict<S> {
    /// The strategies do not `lambda`-cover the range the required number
    /// of times; the witness is the leftmost deficient point.
    CoverageFailure {
        setting: Setting,
        lambda: S,
        n: S,
        fold: usize,
        witness: Witness<S>,
    },
    /// Coverage holds up to `n` and the growth argument checks out.
    Certificate(Certificate<S>),
}

impl<S> Verdict<S> {
    pub fn witness(&self) -> Option<&Witness<S>> {
        match self {
            Verdict::CoverageFailure { witness, .. } => Some(witness),
            Verdict::Certificate(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefuteOptions<S> {
    /// Gap constant `C`; defaults to `alpha^(2mk)`.
    pub gap: Option<S>,
}

impl<S> Default for RefuteOptions<S> {
    fn default() -> Self {
        Self { gap: None }
    }
}

/// Checks whether `strategies` can be a `lambda`-covering of `[1, n]`.
///
/// Strategies are first normalised, which only enlarges what they cover.
/// Line mode requires `m = 2` and line strategies; one-ray mode accepts
/// either kind.
pub fn refute<S: Scalar>(
    strategies: &[Strategy<S>],
    lambda: S,
    p: &InstanceParams,
    n: S,
    setting: Setting,
    opts: &RefuteOptions<S>,
) -> Result<Verdict<S>> {
    if strategies.len() != p.k {
        return Err(Error::Config(format!("expected {} strategies, got {}", p.k, strategies.len())));
    }
    let c = CoverParams::new(lambda)?;
    let mu = c.mu();
    let fold = match setting {
        Setting::Line => {
            if p.m != 2 {
                return Err(Error::Config("line mode requires m = 2".into()));
            }
            p.line_fold()
        }
        Setting::Orc => p.q() as i64,
    };
    let normalized: Vec<Strategy<S>> = strategies
        .iter()
        .map(|s| match (setting, s) {
            (Setting::Line, Strategy::Line(t)) => Ok(Strategy::Line(normalize_line_strategy(t, &c))),
            (Setting::Line, Strategy::Rays(_)) => {
                Err(Error::Config("line mode requires line strategies".into()))
            }
            (Setting::Orc, s) => Ok(Strategy::Rays(normalize_round_plan(&s.to_round_plan(), &c))),
        })
        .collect::<Result<_>>()?;
    let intervals = team_cover_intervals(&normalized, &c, setting)?;
    let fold_u = fold.max(0) as usize;
    if let Err(witness) = verify_multicover(&intervals, fold_u, n) {
        return Ok(Verdict::CoverageFailure {
            setting,
            lambda,
            n,
            fold: fold_u,
            witness,
        });
    }
    let mut cert = Certificate {
        setting,
        lambda,
        n,
        fold: fold_u,
        k_eff: 0,
        log_delta: None,
        steps: 0,
        min_log_step_ratio: None,
        initial_log_potential: None,
        max_log_potential: None,
        stopped_at_robot: None,
        gap: None,
        headroom: None,
        trace: Vec::new(),
    };
    if p.q() <= p.k || fold <= 0 {
        return Ok(Verdict::Certificate(cert));
    }

    let assigned = exact_q_assignment(&intervals, fold_u, n)?;
    let mut robots: Vec<usize> = assigned.iter().map(|a| a.robot).collect();
    robots.sort_unstable();
    robots.dedup();
    cert.k_eff = robots.len();
    let params = PotentialParams::new(setting, mu, fold_u, robots.len())?;
    let log_delta = params.log_delta()?;
    cert.log_delta = Some(log_delta);

    let gap = match opts.gap {
        Some(g) => g,
        None => optimal_alpha::<S>(p)?.powi((2 * p.m * p.k) as i32),
    };
    if setting == Setting::Orc {
        cert.gap = Some(detect_gap(&assigned, gap, mu, n, fold_u));
    }

    let stream = prefix_stream(&assigned, &robots)?;
    let current = match PotentialEngine::new(&stream, params) {
        Ok(engine) => {
            let trace = audit_growth(engine)?;
            cert.steps = trace.steps.len();
            cert.min_log_step_ratio = trace.min_log_step_ratio();
            cert.initial_log_potential = Some(trace.initial_log_potential);
            cert.max_log_potential = Some(trace.max_log_potential());
            cert.stopped_at_robot = trace.stopped_at_robot;
            let current = trace.final_log_potential();
            cert.trace = trace.steps;
            Some(current)
        }
        Err(Error::EndOfAssignment { robot }) => {
            cert.stopped_at_robot = Some(robot);
            None
        }
        Err(e) => return Err(e),
    };

    if log_delta > S::zero() {
        let (k, e) = (S::of(params.k), S::of(params.e));
        let log_cap = match setting {
            Setting::Line => k * e * mu.ln(),
            Setting::Orc => S::of(fold_u) * k * gap.ln() + e * k * mu.ln(),
        };
        let from = current.unwrap_or(S::zero());
        let raw = ((log_cap - from) / log_delta).ceil().max(S::zero());
        cert.headroom = Some(Headroom {
            log_cap,
            steps_to_contradiction: raw.to_u64().unwrap_or(u64::MAX),
        });
    }
    Ok(Verdict::Certificate(cert))
}

pub const TRACE_HEADER: &str = "# faultsearch trace v1";

pub fn write_trace_csv<S: Scalar, W: Write>(steps: &[GrowthStep<S>], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["step", "robot", "mu_star", "x", "step_ratio", "log_potential"])?;
    for s in steps {
        csv.write_record([
            s.step.to_string(),
            s.robot.to_string(),
            s.mu_star.to_token(),
            s.x.to_token(),
            s.log_step_ratio.exp().to_token(),
            s.log_potential.to_token(),
        ])?;
    }
    csv.flush()
}
