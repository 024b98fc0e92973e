//! Plain-text strategy files.
//!
//! One robot per line. A line strategy is a list of signed turning points
//! whose signs alternate (`+1 -2 +4`); a ray strategy is a list of
//! `ray:turn` rounds (`1:1 2:2 3:4`). A lone `-` is a robot that never
//! moves. `#` starts a comment; blank lines are skipped.

use super::{Round, RoundPlan, Side, Strategy, TurnSequence};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const HEADER: &str = "# faultsearch strategy v1";

pub fn write_strategies<S: Scalar>(strategies: &[Strategy<S>]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for s in strategies {
        let tokens: Vec<String> = match s {
            Strategy::Line(t) => t
                .turns
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    let sign = if t.side_of(i) == Side::Positive { '+' } else { '-' };
                    format!("{sign}{}", x.to_token())
                })
                .collect(),
            Strategy::Rays(p) => p
                .rounds
                .iter()
                .map(|r| format!("{}:{}", r.ray, r.turn.to_token()))
                .collect(),
        };
        if tokens.is_empty() {
            out.push('-');
        } else {
            out.push_str(&tokens.join(" "));
        }
        out.push('\n');
    }
    out
}

pub fn parse_strategies<S: Scalar>(text: &str) -> Result<Vec<Strategy<S>>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if body == "-" {
            out.push(Strategy::Line(TurnSequence::new(Vec::new())));
            continue;
        }
        let err = |message: String| Error::Parse { line, message };
        let tokens: Vec<&str> = body.split_whitespace().collect();
        if tokens[0].contains(':') {
            let mut rounds = Vec::with_capacity(tokens.len());
            for tok in tokens {
                let (ray, turn) = tok
                    .split_once(':')
                    .ok_or_else(|| err(format!("expected ray:turn, got {tok:?}")))?;
                let ray: usize = ray.parse().map_err(|_| err(format!("bad ray in {tok:?}")))?;
                if ray == 0 {
                    return Err(err("rays are numbered from 1".into()));
                }
                let turn = positive(turn).ok_or_else(|| err(format!("bad turn in {tok:?}")))?;
                rounds.push(Round { ray, turn });
            }
            out.push(Strategy::Rays(RoundPlan { rounds }));
        } else {
            let mut first = None;
            let mut turns = Vec::with_capacity(tokens.len());
            for (i, tok) in tokens.iter().enumerate() {
                let (side, rest) = match tok.as_bytes()[0] {
                    b'+' => (Side::Positive, &tok[1..]),
                    b'-' => (Side::Negative, &tok[1..]),
                    _ => return Err(err(format!("turn {tok:?} needs an explicit sign"))),
                };
                let first_side = *first.get_or_insert(side);
                let expected = if i % 2 == 0 { first_side } else { first_side.flip() };
                if side != expected {
                    return Err(err(format!("signs must alternate at {tok:?}")));
                }
                turns.push(positive(rest).ok_or_else(|| err(format!("bad turn {tok:?}")))?);
            }
            out.push(Strategy::Line(TurnSequence {
                first: first.unwrap_or(Side::Positive),
                turns,
            }));
        }
    }
    Ok(out)
}

fn positive<S: Scalar>(tok: &str) -> Option<S> {
    let x = S::parse_token(tok)?;
    (x > S::zero() && !x.is_nan()).then_some(x)
}
