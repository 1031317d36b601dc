//! Tabular action values, ε-greedy selection and the two update rules.

use std::fmt::Write as _;

use rand::Rng;

use crate::env::{ActionId, StateId};
use crate::error::{Error, Result};

/// Action-value table with a per-state action count.
///
/// Also used for frozen snapshots (`Q'`) and reconstructed value estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    offsets: Vec<usize>,
    counts: Vec<usize>,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(actions_per_state: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(actions_per_state.len());
        let mut total = 0;
        for &n in actions_per_state {
            offsets.push(total);
            total += n;
        }
        Self {
            offsets,
            counts: actions_per_state.to_vec(),
            values: vec![0.0; total],
        }
    }

    pub fn n_states(&self) -> usize {
        self.counts.len()
    }

    pub fn n_actions(&self, s: StateId) -> usize {
        self.counts[s]
    }

    pub fn actions_per_state(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_shape(&self, other: &QTable) -> bool {
        self.counts == other.counts
    }

    #[inline]
    fn idx(&self, s: StateId, a: ActionId) -> usize {
        assert!(a < self.counts[s], "action {a} out of range in state {s}");
        self.offsets[s] + a
    }

    #[inline]
    pub fn get(&self, s: StateId, a: ActionId) -> f64 {
        self.values[self.idx(s, a)]
    }

    pub fn set(&mut self, s: StateId, a: ActionId, v: f64) {
        let i = self.idx(s, a);
        self.values[i] = v;
    }

    #[inline]
    pub fn row(&self, s: StateId) -> &[f64] {
        &self.values[self.offsets[s]..self.offsets[s] + self.counts[s]]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates `(state, action, value)` in state-major order.
    pub fn entries(&self) -> impl Iterator<Item = (StateId, ActionId, f64)> + '_ {
        (0..self.n_states())
            .flat_map(move |s| self.row(s).iter().enumerate().map(move |(a, &v)| (s, a, v)))
    }

    /// Argmax over the actions of `s`, lowest index on ties.
    #[inline]
    pub fn greedy_action(&self, s: StateId) -> ActionId {
        let row = self.row(s);
        let mut best = 0;
        for (a, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = a;
            }
        }
        best
    }

    /// ε-greedy choice. Always consumes one uniform draw for the exploration
    /// test, plus one more when exploring.
    #[inline]
    pub fn select_action<R: Rng + ?Sized>(
        &self,
        s: StateId,
        epsilon: f64,
        rng: &mut R,
    ) -> Result<ActionId> {
        let n = self.counts.get(s).copied().unwrap_or(0);
        if n == 0 {
            return Err(Error::ContractViolation(format!(
                "state {s} has no actions"
            )));
        }
        let u: f64 = rng.gen();
        if u < epsilon {
            Ok(rng.gen_range(0..n))
        } else {
            Ok(self.greedy_action(s))
        }
    }

    /// `Q(s,a) += α [r + γ Q(s',a') − Q(s,a)]`
    #[inline]
    #[allow(clippy::too_many_arguments)]
    pub fn sarsa_update(
        &mut self,
        s: StateId,
        a: ActionId,
        r: f64,
        s_next: StateId,
        a_next: ActionId,
        alpha: f64,
        gamma: f64,
    ) {
        let next = self.get(s_next, a_next);
        let i = self.idx(s, a);
        let q = self.values[i];
        self.values[i] = q + alpha * (r + gamma * next - q);
    }

    /// SARSA with the frozen snapshot as an extra internal reward:
    /// `Q(s,a) += α [r + (1 − γ) γ_m Q'(s,a) + γ Q(s',a') − Q(s,a)]`
    #[inline]
    #[allow(clippy::too_many_arguments)]
    pub fn fostered_update(
        &mut self,
        qprime: &QTable,
        s: StateId,
        a: ActionId,
        r: f64,
        s_next: StateId,
        a_next: ActionId,
        alpha: f64,
        gamma: f64,
        gamma_m: f64,
    ) {
        let internal = (1.0 - gamma) * gamma_m * qprime.get(s, a);
        let next = self.get(s_next, a_next);
        let i = self.idx(s, a);
        let q = self.values[i];
        self.values[i] = q + alpha * (r + internal + gamma * next - q);
    }

    /// Independent copy of the current values.
    pub fn snapshot(&self) -> QTable {
        self.clone()
    }

    pub fn max_abs_diff(&self, other: &QTable) -> f64 {
        assert!(self.same_shape(other), "tables differ in shape");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("state,action,value\n");
        for (s, a, v) in self.entries() {
            let _ = writeln!(out, "{s},{a},{v}");
        }
        out
    }

    /// Parses the CSV written by [`QTable::to_csv`]. Rows must be in
    /// state-major order with contiguous action indices.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut counts: Vec<usize> = Vec::new();
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: &str| Error::Parse {
                line: i + 1,
                message: m.to_string(),
            };
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(err("expected `state,action,value`"));
            }
            let s: usize = cols[0].trim().parse().map_err(|_| err("bad state"))?;
            let a: usize = cols[1].trim().parse().map_err(|_| err("bad action"))?;
            let v: f64 = cols[2].trim().parse().map_err(|_| err("bad value"))?;
            if s >= counts.len() {
                counts.resize(s + 1, 0);
            }
            if s + 1 != counts.len() || a != counts[s] {
                return Err(err("rows out of order"));
            }
            counts[s] += 1;
            values.push(v);
        }
        let mut q = QTable::zeros(&counts);
        q.values = values;
        Ok(q)
    }
}

/// Learning hyperparameters shared by every agent in an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SarsaParams {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    /// Balance factor on the fostered-value term.
    pub gamma_m: f64,
    /// Weight of reconstructed values in the empathic exploit phase.
    pub lambda_w: f64,
}

impl Default for SarsaParams {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.9,
            epsilon: 0.1,
            gamma_m: 1.0,
            lambda_w: 1.0,
        }
    }
}

impl SarsaParams {
    /// Checks ranges; `prefix` names the config section for error messages.
    pub fn validate(&self, prefix: &str) -> Result<()> {
        let key = |k: &str| format!("{prefix}{k}");
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config(
                key("alpha"),
                format!("{} is outside (0, 1]", self.alpha),
            ));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::config(
                key("gamma"),
                format!("{} is outside [0, 1)", self.gamma),
            ));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::config(
                key("epsilon"),
                format!("{} is outside [0, 1]", self.epsilon),
            ));
        }
        if !(self.gamma_m >= 0.0 && self.gamma_m.is_finite()) {
            return Err(Error::config(
                key("gamma_m"),
                format!("{} must be >= 0", self.gamma_m),
            ));
        }
        if !(self.lambda_w >= 0.0 && self.lambda_w.is_finite()) {
            return Err(Error::config(
                key("lambda_w"),
                format!("{} must be >= 0", self.lambda_w),
            ));
        }
        Ok(())
    }
}

/// Which reward drives learning after the social rewards are switched off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentMode {
    /// Keeps receiving somatic plus social reward.
    Etalon,
    /// Somatic reward only.
    Classic,
    /// Somatic reward plus the memorized-value term.
    Fostered,
}

impl AgentMode {
    pub const ALL: [AgentMode; 3] = [AgentMode::Etalon, AgentMode::Classic, AgentMode::Fostered];

    pub fn name(self) -> &'static str {
        match self {
            AgentMode::Etalon => "etalon",
            AgentMode::Classic => "classic",
            AgentMode::Fostered => "fostered",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

/// Something that picks actions and may learn from SARSA-style experience.
pub trait Learner {
    fn act<R: Rng + ?Sized>(&mut self, s: StateId, rng: &mut R) -> ActionId;

    fn learn(&mut self, s: StateId, a: ActionId, r: f64, s_next: StateId, a_next: ActionId);
}

/// ε-greedy SARSA learner with fixed hyperparameters.
#[derive(Debug, Clone)]
pub struct SarsaAgent {
    pub q: QTable,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl SarsaAgent {
    pub fn new(actions_per_state: &[usize], params: &SarsaParams) -> Self {
        Self {
            q: QTable::zeros(actions_per_state),
            alpha: params.alpha,
            gamma: params.gamma,
            epsilon: params.epsilon,
        }
    }
}

impl Learner for SarsaAgent {
    #[inline]
    fn act<R: Rng + ?Sized>(&mut self, s: StateId, rng: &mut R) -> ActionId {
        self.q
            .select_action(s, self.epsilon, rng)
            .expect("agent table covers the environment")
    }

    #[inline]
    fn learn(&mut self, s: StateId, a: ActionId, r: f64, s_next: StateId, a_next: ActionId) {
        self.q
            .sarsa_update(s, a, r, s_next, a_next, self.alpha, self.gamma);
    }
}

/// Non-learning agent that samples actions from a fixed per-state distribution.
#[derive(Debug, Clone)]
pub struct ScriptedAgent {
    probs: Vec<Vec<f64>>,
}

impl ScriptedAgent {
    pub fn new(probs: Vec<Vec<f64>>) -> Result<Self> {
        for (s, row) in probs.iter().enumerate() {
            let total: f64 = row.iter().sum();
            if row.is_empty() || row.iter().any(|p| *p < 0.0) || (total - 1.0).abs() > 1e-9 {
                return Err(Error::ContractViolation(format!(
                    "scripted policy row {s} is not a distribution"
                )));
            }
        }
        Ok(Self { probs })
    }

    /// Always plays `action` (clamped to each state's last action).
    pub fn constant(actions_per_state: &[usize], action: ActionId) -> Self {
        let probs = actions_per_state
            .iter()
            .map(|&n| {
                let mut row = vec![0.0; n];
                row[action.min(n - 1)] = 1.0;
                row
            })
            .collect();
        Self { probs }
    }

    pub fn probs(&self, s: StateId) -> &[f64] {
        &self.probs[s]
    }
}

impl Learner for ScriptedAgent {
    fn act<R: Rng + ?Sized>(&mut self, s: StateId, rng: &mut R) -> ActionId {
        let row = &self.probs[s];
        if let Some(a) = row.iter().position(|&p| p == 1.0) {
            return a;
        }
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (a, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return a;
            }
        }
        row.len() - 1
    }

    fn learn(&mut self, _: StateId, _: ActionId, _: f64, _: StateId, _: ActionId) {}
}
