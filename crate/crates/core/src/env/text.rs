//! Plain-text environment format.
//!
//! ```text
//! layered-env
//! variant 1
//! levels 10
//! width 5
//! bad 46 0
//! 0 0 : 1 1 0.25 0
//! 1 0 : 7 1 0.5 0
//! ...
//! ```
//!
//! One line per state/action with `next prob r1 r2` groups separated by `;`.
//! Two-agent files start with `two-agent-env`, declare `variant`, `states`
//! and one `actions <s> <n1> <n2>` line per state, and key their transition
//! lines by `s a1 a2`. Blank lines and lines starting with `#` are ignored.
//! Reals are written in shortest round-trip form, so a save/load cycle is
//! exact.

use std::fmt::Write as _;

use super::layered::{LayeredVariant, MarkovEnv};
use super::two_agent::{TwoAgentEnv, TwoAgentVariant};
use super::{Outcome, OutcomeDist};
use crate::error::{Error, Result};

const LAYERED_MAGIC: &str = "layered-env";
const TWO_AGENT_MAGIC: &str = "two-agent-env";

fn write_outcomes(out: &mut String, dist: &OutcomeDist) {
    let groups: Vec<String> = dist
        .outcomes()
        .iter()
        .map(|o| format!("{} {} {} {}", o.next, o.prob, o.r1, o.r2))
        .collect();
    out.push_str(&groups.join(" ; "));
    out.push('\n');
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
        }
    }

    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        for (i, line) in self.inner.by_ref() {
            let line = line.trim();
            if !line.is_empty() && !line.starts_with('#') {
                return Some((i + 1, line));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next_line().ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("unexpected end of input, expected {what}"),
        })
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (n, line) = self.expect(key)?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(parse_err(n, format!("expected `{key}` line")));
        }
        Ok((n, parts.collect()))
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn num<T: std::str::FromStr>(line: usize, tok: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("cannot parse `{tok}`")))
}

fn parse_outcomes(line: usize, text: &str) -> Result<OutcomeDist> {
    let mut outcomes = Vec::new();
    for group in text.split(';') {
        let toks: Vec<&str> = group.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(parse_err(line, "each outcome needs `next prob r1 r2`"));
        }
        outcomes.push(Outcome {
            next: num(line, toks[0])?,
            prob: num(line, toks[1])?,
            r1: num(line, toks[2])?,
            r2: num(line, toks[3])?,
        });
    }
    OutcomeDist::new(outcomes).map_err(|e| parse_err(line, e.to_string()))
}

fn split_key(line: usize, text: &str, arity: usize) -> Result<(Vec<usize>, &str)> {
    let (key, rest) = text
        .split_once(':')
        .ok_or_else(|| parse_err(line, "missing `:` separator"))?;
    let idx: Vec<usize> = key
        .split_whitespace()
        .map(|t| num(line, t))
        .collect::<Result<_>>()?;
    if idx.len() != arity {
        return Err(parse_err(
            line,
            format!("expected {arity} indices before `:`"),
        ));
    }
    Ok((idx, rest))
}

impl MarkovEnv {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{LAYERED_MAGIC}");
        let _ = writeln!(out, "variant {}", self.variant.number());
        let _ = writeln!(out, "levels {}", self.levels);
        let _ = writeln!(out, "width {}", self.width);
        let _ = writeln!(out, "bad {} {}", self.bad.0, self.bad.1);
        for (s, acts) in self.actions.iter().enumerate() {
            for (a, dist) in acts.iter().enumerate() {
                let _ = write!(out, "{s} {a} : ");
                write_outcomes(&mut out, dist);
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let (n, magic) = lines.expect(LAYERED_MAGIC)?;
        if magic != LAYERED_MAGIC {
            return Err(parse_err(n, format!("expected `{LAYERED_MAGIC}` header")));
        }
        let (n, v) = lines.keyed("variant")?;
        let variant = v
            .first()
            .and_then(|t| t.parse().ok())
            .and_then(LayeredVariant::from_number)
            .ok_or_else(|| parse_err(n, "variant must be 1, 2 or 3"))?;
        let (n, v) = lines.keyed("levels")?;
        let levels: usize = num(n, v.first().copied().unwrap_or(""))?;
        let (n, v) = lines.keyed("width")?;
        let width: usize = num(n, v.first().copied().unwrap_or(""))?;
        let (n, v) = lines.keyed("bad")?;
        if v.len() != 2 {
            return Err(parse_err(n, "`bad` needs a state and an action"));
        }
        let bad = (num(n, v[0])?, num(n, v[1])?);

        let n_states = 1 + levels * width;
        let mut actions: Vec<Vec<OutcomeDist>> = vec![Vec::new(); n_states];
        while let Some((n, line)) = lines.next_line() {
            let (idx, rest) = split_key(n, line, 2)?;
            let (s, a) = (idx[0], idx[1]);
            if s >= n_states || a != actions[s].len() {
                return Err(parse_err(n, format!("out-of-order entry ({s}, {a})")));
            }
            actions[s].push(parse_outcomes(n, rest)?);
        }
        let env = MarkovEnv {
            variant,
            levels,
            width,
            actions,
            bad,
        };
        env.validate()?;
        Ok(env)
    }
}

impl TwoAgentEnv {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{TWO_AGENT_MAGIC}");
        let _ = writeln!(out, "variant {}", self.variant.name());
        let _ = writeln!(out, "states {}", self.n_states());
        for s in 0..self.n_states() {
            let _ = writeln!(out, "actions {s} {} {}", self.actions1[s], self.actions2[s]);
        }
        for (s, a1, a2, dist) in self.joint_actions() {
            let _ = write!(out, "{s} {a1} {a2} : ");
            write_outcomes(&mut out, dist);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let (n, magic) = lines.expect(TWO_AGENT_MAGIC)?;
        if magic != TWO_AGENT_MAGIC {
            return Err(parse_err(n, format!("expected `{TWO_AGENT_MAGIC}` header")));
        }
        let (n, v) = lines.keyed("variant")?;
        let variant = v
            .first()
            .and_then(|t| TwoAgentVariant::parse(t))
            .ok_or_else(|| parse_err(n, "variant must be `deterministic` or `stochastic`"))?;
        let (n, v) = lines.keyed("states")?;
        let n_states: usize = num(n, v.first().copied().unwrap_or(""))?;
        let mut actions1 = Vec::with_capacity(n_states);
        let mut actions2 = Vec::with_capacity(n_states);
        for s in 0..n_states {
            let (n, v) = lines.keyed("actions")?;
            if v.len() != 3 || num::<usize>(n, v[0])? != s {
                return Err(parse_err(n, format!("expected `actions {s} <n1> <n2>`")));
            }
            actions1.push(num(n, v[1])?);
            actions2.push(num(n, v[2])?);
        }
        let mut joint = Vec::new();
        let mut expected = (0..n_states).flat_map(|s| {
            let (n1, n2) = (actions1[s], actions2[s]);
            (0..n1).flat_map(move |a1| (0..n2).map(move |a2| (s, a1, a2)))
        });
        while let Some((n, line)) = lines.next_line() {
            let (idx, rest) = split_key(n, line, 3)?;
            let got = (idx[0], idx[1], idx[2]);
            if expected.next() != Some(got) {
                return Err(parse_err(n, format!("out-of-order entry {got:?}")));
            }
            joint.push(parse_outcomes(n, rest)?);
        }
        TwoAgentEnv::from_parts(variant, actions1, actions2, joint)
    }
}
