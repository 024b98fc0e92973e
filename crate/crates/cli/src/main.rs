//! `faultsearch`: bounds, strategy generation, ratio sweeps, cover
//! verification and lower-bound refutation from the command line.
//!
//! Exit status: 0 on success or certificate, 2 when a witness is found
//! (undetected target, deficient cover, coverage failure), 1 on usage or
//! domain errors.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use faultsearch::cover::{exact_q_assignment, verify_multicover, write_assignment_csv};
use faultsearch::formulas::{growth_factor_delta, horizon_estimate, optimal_alpha, ratio_lower_bound};
use faultsearch::fractional::{
    fractional_ratio, lift_strategy, rationalize_weights, FractionalInstance, DEFAULT_DENOMINATOR_CAP,
};
use faultsearch::potential::{refute, write_trace_csv, RefuteOptions, Verdict};
use faultsearch::simulator::{dense_sweep, sweep, worst_of, write_sweep_csv};
use faultsearch::strategy::{
    make_exponential_strategy_with_alpha, parse_strategies, team_cover_intervals, write_strategies,
};
use faultsearch::{CoverParams, Extended, InstanceParams, Regime, Scalar, Setting, Strategy};

const TIE_BREAK: &str = "simultaneous visits ordered by robot id";

#[derive(Parser)]
#[command(name = "faultsearch", version, about = "Fault-tolerant multi-robot search on the line and on m rays")]
struct Cli {
    /// Arithmetic used for every computation.
    #[arg(long, value_enum, env = "FAULTSEARCH_PRECISION", default_value = "f64", global = true)]
    precision: Precision,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Precision {
    #[value(name = "f64")]
    F64,
    Extended,
}

#[derive(Clone, Copy, ValueEnum)]
enum SettingArg {
    Line,
    Orc,
}

impl From<SettingArg> for Setting {
    fn from(s: SettingArg) -> Self {
        match s {
            SettingArg::Line => Setting::Line,
            SettingArg::Orc => Setting::Orc,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Tight ratio, optimal base and growth factor for one instance or a grid.
    Bound(BoundArgs),
    /// Write the exponential strategy as a strategy file.
    Generate(GenerateArgs),
    /// Exact worst-case ratio of a strategy, with a per-target CSV.
    Simulate(SimulateArgs),
    /// Check that strategies lambda-cover [1, N] the required number of times.
    Verify(VerifyArgs),
    /// Coverage check plus the potential-growth audit; prints a verdict.
    Refute(RefuteArgs),
    /// Rationalise a weighted fractional instance into an integer one.
    Fractional(FractionalArgs),
}

#[derive(Args)]
struct BoundArgs {
    /// Rays: a value, a list `2,3` or an inclusive range `2..4`.
    #[arg(short = 'm')]
    m: Option<String>,
    #[arg(short = 'k')]
    k: Option<String>,
    #[arg(short = 'f', default_value = "0")]
    f: String,
    /// Report the fractional ratio C(eta) instead.
    #[arg(long, conflicts_with_all = ["m", "k"])]
    eta: Option<String>,
    /// Ratio at which to evaluate the growth factor delta.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(short = 'm')]
    m: usize,
    /// Robots; taken from the strategy file when one is given.
    #[arg(short = 'k')]
    k: Option<usize>,
    #[arg(short = 'f', default_value_t = 0)]
    f: usize,
}

#[derive(Args)]
struct SourceArgs {
    /// Strategy file; without it the exponential strategy is generated.
    #[arg(long)]
    strategies: Option<PathBuf>,
    /// Base of the generated exponential strategy (default: optimal).
    #[arg(long)]
    alpha: Option<String>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    /// Generate until every ray is covered out to this distance.
    #[arg(short = 'N', long, default_value = "1e4")]
    horizon: String,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[command(flatten)]
    source: SourceArgs,
    #[arg(short = 'N', long, default_value = "1e4")]
    horizon: String,
    /// Evaluate a geometric grid with this relative step instead of the
    /// breakpoints.
    #[arg(long)]
    dense: Option<String>,
    /// Per-target CSV output.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Also write the summary JSON here.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long)]
    lambda: String,
    #[arg(short = 'N', long, default_value = "1e4")]
    horizon: String,
    #[arg(long, value_enum, default_value = "orc")]
    setting: SettingArg,
    /// Required multiplicity (default: q for orc, 2(f+1)-k for line).
    #[arg(long)]
    fold: Option<usize>,
    /// Write the exact assignment as CSV when the cover holds.
    #[arg(long)]
    assignment: Option<PathBuf>,
}

#[derive(Args)]
struct RefuteArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, required_unless_present = "lambda_factor")]
    lambda: Option<String>,
    /// Ratio as a multiple of the tight bound.
    #[arg(long, conflicts_with = "lambda")]
    lambda_factor: Option<String>,
    #[arg(short = 'N', long, required_unless_present = "auto_horizon")]
    horizon: Option<String>,
    /// Use the horizon at which the growth argument forces a failure.
    #[arg(long, conflicts_with = "horizon")]
    auto_horizon: bool,
    #[arg(long, value_enum, default_value = "orc")]
    setting: SettingArg,
    /// Gap constant C (default alpha^(2mk)).
    #[arg(long)]
    gap: Option<String>,
    /// Growth trace CSV output.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Also write the verdict JSON here.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FractionalArgs {
    /// JSON document `{"weights": [...], "eta": .., "delta": ..}`.
    instance: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DENOMINATOR_CAP)]
    cap: u64,
    /// Strategy file with one plan per weight, to be lifted.
    #[arg(long, requires = "output")]
    lift: Option<PathBuf>,
    /// Destination of the lifted strategies.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let out = match cli.precision {
        Precision::F64 => run::<f64>(cli.command),
        Precision::Extended => run::<Extended>(cli.command),
    };
    match out {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run<S: Scalar>(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Bound(a) => bound::<S>(a),
        Command::Generate(a) => generate::<S>(a),
        Command::Simulate(a) => simulate::<S>(a),
        Command::Verify(a) => verify::<S>(a),
        Command::Refute(a) => refute_cmd::<S>(a),
        Command::Fractional(a) => fractional::<S>(a),
    }
}

fn num<S: Scalar>(s: &str, what: &str) -> Result<S> {
    S::parse_token(s.trim()).ok_or_else(|| anyhow!("{what}: cannot read {s:?} as a number"))
}

fn list(s: &str, what: &str) -> Result<Vec<usize>> {
    let bad = || anyhow!("{what}: expected a number, list or range, got {s:?}");
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if let Some((a, b)) = part.split_once("..") {
            let (a, b): (usize, usize) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    Ok(out)
}

fn json_of<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serialisable")
}

fn emit(value: &Value, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    if let Some(p) = path {
        fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
    }
    io::stdout().write_all(text.as_bytes())?;
    Ok(())
}

fn create(path: &Path) -> Result<io::BufWriter<fs::File>> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(io::BufWriter::new(f))
}

fn bound<S: Scalar>(a: BoundArgs) -> Result<u8> {
    let lambda = a.lambda.as_deref().map(|l| num::<S>(l, "lambda")).transpose()?;
    if let Some(eta) = &a.eta {
        let eta = num::<S>(eta, "eta")?;
        let ratio = fractional_ratio(eta)?;
        if a.json {
            emit(&json!({ "eta": json_of(&eta), "ratio": json_of(&ratio) }), None)?;
        } else {
            println!("eta\tC(eta)\n{}\t{}", eta.to_token(), ratio.to_token());
        }
        return Ok(0);
    }
    let (Some(m), Some(k)) = (&a.m, &a.k) else {
        bail!("bound needs -m and -k, or --eta");
    };
    let (ms, ks, fs) = (list(m, "-m")?, list(k, "-k")?, list(&a.f, "-f")?);
    let single = ms.len() * ks.len() * fs.len() == 1;
    let mut rows = Vec::new();
    for &m in &ms {
        for &f in &fs {
            for &k in &ks {
                let p = InstanceParams::new(m, k, f)?;
                if single && p.regime() != Regime::Nontrivial {
                    // the error text names the regime
                    p.require_nontrivial()?;
                }
                rows.push(bound_row::<S>(&p, lambda, !a.json)?);
            }
        }
    }
    if a.json {
        emit(&Value::Array(rows), None)?;
        return Ok(0);
    }
    println!("m\tk\tf\tq\ts\trho\tregime\tlambda0\talpha\tdelta");
    for r in &rows {
        let cell = |key: &str| match &r[key] {
            Value::Null => "-".to_string(),
            Value::String(s) => s.clone(),
            v => v.to_string(),
        };
        let cols = ["m", "k", "f", "q", "s", "rho", "regime", "lambda0", "alpha", "delta"];
        println!("{}", cols.map(cell).join("\t"));
    }
    Ok(0)
}

/// One table row; with `tokens` the reals are exact scalar tokens rather
/// than JSON numbers, so extended precision survives in the text table.
fn bound_row<S: Scalar>(p: &InstanceParams, lambda: Option<S>, tokens: bool) -> Result<Value> {
    let real = |x: S| if tokens { Value::String(x.to_token()) } else { json_of(&x) };
    let regime = match p.regime() {
        Regime::Nontrivial => "nontrivial",
        Regime::Trivial => "trivial",
        Regime::Infeasible => "infeasible",
    };
    let mut row = json!({
        "m": p.m, "k": p.k, "f": p.f, "q": p.q(), "s": p.s(),
        "rho": real(p.rho::<S>()), "regime": regime,
        "lambda0": Value::Null, "alpha": Value::Null, "delta": Value::Null,
    });
    match p.regime() {
        Regime::Nontrivial => {
            row["lambda0"] = real(ratio_lower_bound::<S>(p)?);
            row["alpha"] = real(optimal_alpha::<S>(p)?);
            if let Some(l) = lambda {
                let mu = CoverParams::new(l)?.mu();
                row["delta"] = real(growth_factor_delta(p.q() - p.k, p.k, mu)?);
            }
        }
        Regime::Trivial => row["lambda0"] = real(S::one()),
        Regime::Infeasible => {}
    }
    Ok(row)
}

fn instance(inst: &InstanceArgs, k: usize) -> Result<InstanceParams> {
    if let Some(given) = inst.k {
        if given != k {
            bail!("-k {given} does not match the {k} strategies supplied");
        }
    }
    Ok(InstanceParams::new(inst.m, k, inst.f)?)
}

/// Strategies from a file, or the exponential strategy generated to `horizon`.
fn load_team<S: Scalar>(inst: &InstanceArgs, src: &SourceArgs, horizon: S) -> Result<(InstanceParams, Vec<Strategy<S>>)> {
    if let Some(path) = &src.strategies {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let team = parse_strategies::<S>(&text)?;
        if team.is_empty() {
            bail!("{} holds no strategies", path.display());
        }
        let p = instance(inst, team.len())?;
        return Ok((p, team));
    }
    let k = inst.k.ok_or_else(|| anyhow!("-k is required when no strategy file is given"))?;
    let p = InstanceParams::new(inst.m, k, inst.f)?;
    let alpha = match &src.alpha {
        Some(a) => num::<S>(a, "alpha")?,
        None => optimal_alpha::<S>(&p)?,
    };
    Ok((p, make_exponential_strategy_with_alpha(&p, alpha, horizon)?.strategies()))
}

fn generate<S: Scalar>(a: GenerateArgs) -> Result<u8> {
    let horizon = num::<S>(&a.horizon, "horizon")?;
    let src = SourceArgs { strategies: None, alpha: a.alpha };
    let (p, team) = load_team::<S>(&a.inst, &src, horizon)?;
    let text = write_strategies(&team);
    let (head, body) = text.split_once('\n').unwrap_or((&text, ""));
    let text = format!("{head}\n# m={} k={} f={} horizon={}\n{body}", p.m, p.k, p.f, horizon.to_token());
    match &a.output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(0)
}

fn simulate<S: Scalar>(a: SimulateArgs) -> Result<u8> {
    let n = num::<S>(&a.horizon, "horizon")?;
    if !(n >= S::one()) || !n.is_finite() {
        bail!("horizon must be finite and at least 1");
    }
    let (p, team) = load_team::<S>(&a.inst, &a.source, n)?;
    let rows = match &a.dense {
        Some(step) => dense_sweep(&team, p.m, p.f, n, num::<S>(step, "dense")?)?,
        None => sweep(&team, p.m, p.f, n),
    };
    if let Some(path) = &a.csv {
        let mut w = create(path)?;
        write_sweep_csv(&rows, &mut w)?;
        w.flush()?;
    }
    let worst = worst_of(&rows).ok_or_else(|| anyhow!("no targets in range"))?;
    let bound = ratio_lower_bound::<S>(&p).ok();
    let summary = json!({
        "precision": S::NAME,
        "tie_break": TIE_BREAK,
        "instance": json_of(&p),
        "horizon": json_of(&n),
        "grid": if a.dense.is_some() { "dense" } else { "breakpoints" },
        "targets": rows.len(),
        "sup_ratio": json_of(&worst.ratio),
        "witness": json_of(&worst.witness),
        "undetected": worst.undetected,
        "lambda0": bound.map(|b| json_of(&b)),
        "gap_to_lambda0": bound.filter(|_| !worst.undetected).map(|b| json_of(&(b - worst.ratio))),
    });
    emit(&summary, a.summary.as_deref())?;
    Ok(if worst.undetected { 2 } else { 0 })
}

fn verify<S: Scalar>(a: VerifyArgs) -> Result<u8> {
    let n = num::<S>(&a.horizon, "horizon")?;
    let lambda = num::<S>(&a.lambda, "lambda")?;
    let (p, team) = load_team::<S>(&a.inst, &a.source, n)?;
    let setting = Setting::from(a.setting);
    let fold = match (a.fold, setting) {
        (Some(q), _) => q,
        (None, Setting::Orc) => p.q(),
        (None, Setting::Line) => usize::try_from(p.line_fold()).map_err(|_| anyhow!("line fold 2(f+1)-k is not positive"))?,
    };
    let c = CoverParams::new(lambda)?;
    let intervals = team_cover_intervals(&team, &c, setting)?;
    let mut out = json!({
        "precision": S::NAME,
        "setting": json_of(&setting),
        "lambda": json_of(&lambda),
        "horizon": json_of(&n),
        "fold": fold,
        "intervals": intervals.len(),
    });
    match verify_multicover(&intervals, fold, n) {
        Ok(()) => {
            out["result"] = json!("covered");
            if let Some(path) = &a.assignment {
                let assigned = exact_q_assignment(&intervals, fold, n)?;
                let mut w = create(path)?;
                write_assignment_csv(&assigned, &mut w)?;
                w.flush()?;
            }
            emit(&out, None)?;
            Ok(0)
        }
        Err(w) => {
            out["result"] = json!("deficient");
            out["witness"] = json_of(&w);
            emit(&out, None)?;
            Ok(2)
        }
    }
}

fn refute_cmd<S: Scalar>(a: RefuteArgs) -> Result<u8> {
    let setting = Setting::from(a.setting);
    // The instance is needed before the team when lambda or N derive from it.
    let k_hint = match &a.source.strategies {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_strategies::<S>(&text)?.len()
        }
        None => a.inst.k.ok_or_else(|| anyhow!("-k is required when no strategy file is given"))?,
    };
    let p = instance(&a.inst, k_hint)?;
    let lambda = match (&a.lambda, &a.lambda_factor) {
        (Some(l), _) => num::<S>(l, "lambda")?,
        (None, Some(x)) => num::<S>(x, "lambda-factor")? * ratio_lower_bound::<S>(&p)?,
        (None, None) => bail!("--lambda or --lambda-factor is required"),
    };
    // alpha, and with it the default gap, exists only for f < k < q
    let gap = match &a.gap {
        Some(g) => Some(num::<S>(g, "gap")?),
        None => optimal_alpha::<S>(&p).ok().map(|al| al.powi((2 * p.m * p.k) as i32)),
    };
    let (n, horizon) = if a.auto_horizon {
        let gap = gap.ok_or_else(|| anyhow!("--auto-horizon needs f < k < q"))?;
        let h = horizon_estimate::<S>(&p, lambda, gap, setting)?;
        (h.value(), Some(h))
    } else {
        let h = a.horizon.as_deref().ok_or_else(|| anyhow!("--horizon or --auto-horizon is required"))?;
        (num::<S>(h, "horizon")?, None)
    };
    if !(n >= S::one()) {
        bail!("horizon must be at least 1");
    }
    // An overflowing horizon still generates a finite strategy; coverage
    // past the last generated round fails on its own.
    let gen_to = if n.is_finite() { n } else { S::lit(1e300) };
    let (_, team) = load_team::<S>(&a.inst, &a.source, gen_to)?;
    let verdict = refute(&team, lambda, &p, n, setting, &RefuteOptions { gap })?;
    if let (Some(path), Verdict::Certificate(c)) = (&a.trace, &verdict) {
        let mut w = create(path)?;
        write_trace_csv(&c.trace, &mut w)?;
        w.flush()?;
    }
    let mut out = json_of(&verdict);
    out["precision"] = json!(S::NAME);
    out["instance"] = json_of(&p);
    out["gap_constant"] = gap.map_or(Value::Null, |g| json_of(&g));
    if let Some(h) = horizon {
        out["auto_horizon"] = json_of(&h);
    }
    emit(&out, a.output.as_deref())?;
    Ok(match verdict {
        Verdict::Certificate(_) => 0,
        Verdict::CoverageFailure { .. } => 2,
    })
}

fn fractional<S: Scalar>(a: FractionalArgs) -> Result<u8> {
    let text = fs::read_to_string(&a.instance).with_context(|| format!("reading {}", a.instance.display()))?;
    let inst = FractionalInstance::from_json(&text)?;
    let r = rationalize_weights(&inst, a.cap)?;
    let lifted = r.instance()?;
    let mut out = json!({
        "precision": S::NAME,
        "eta": inst.eta,
        "fractional_ratio": json_of(&fractional_ratio(S::lit(inst.eta))?),
        "rationalization": json_of(&r),
        "lifted_instance": json_of(&lifted),
        "lifted_ratio": ratio_lower_bound::<S>(&lifted).ok().map(|b| json_of(&b)),
    });
    if let (Some(src), Some(dst)) = (&a.lift, &a.output) {
        let text = fs::read_to_string(src).with_context(|| format!("reading {}", src.display()))?;
        let plans: Vec<_> = parse_strategies::<S>(&text)?.iter().map(Strategy::to_round_plan).collect();
        let lifted: Vec<Strategy<S>> = lift_strategy(&plans, &r)?.into_iter().map(Strategy::Rays).collect();
        fs::write(dst, write_strategies(&lifted)).with_context(|| format!("writing {}", dst.display()))?;
        out["lifted_strategies"] = json!(lifted.len());
    }
    emit(&out, None)?;
    Ok(0)
}
