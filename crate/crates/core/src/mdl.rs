//! Two-part description lengths of a trajectory under one-agent and
//! two-agent environment hypotheses, and the crossover detector built on them.
//!
//! Data bits use batch maximum-likelihood frequencies over the whole prefix.
//! Model bits charge `bits_per_param` per table entry. The two-agent model
//! additionally codes the second agent's actions by replaying its SARSA
//! learner and flagging every step where the observed action departs from
//! the replayed greedy choice.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::agent::QTable;
use crate::env::{ActionId, StateId, TwoAgentEnv};
use crate::error::{Error, Result};

/// One cycle of the first agent's history.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepRecord {
    pub s: StateId,
    pub a1: ActionId,
    /// Second agent's simultaneous action, absent for single-agent logs.
    pub a2: Option<ActionId>,
    pub s_next: StateId,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrajectoryLog {
    steps: Vec<StepRecord>,
}

impl TrajectoryLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            steps: Vec::with_capacity(n),
        }
    }

    /// Appends a step, checking continuity with the previous one and that
    /// second-agent actions are either always or never present.
    pub fn push(&mut self, step: StepRecord) -> Result<()> {
        if let Some(last) = self.steps.last() {
            if last.s_next != step.s {
                return Err(Error::ContractViolation(format!(
                    "step {} starts in state {} but the previous step ended in {}",
                    self.steps.len(),
                    step.s,
                    last.s_next
                )));
            }
            if last.a2.is_some() != step.a2.is_some() {
                return Err(Error::ContractViolation(
                    "second-agent actions must be present on every step or none".into(),
                ));
            }
        }
        self.steps.push(step);
        Ok(())
    }

    pub fn from_steps(steps: impl IntoIterator<Item = StepRecord>) -> Result<Self> {
        let mut log = Self::new();
        for st in steps {
            log.push(st)?;
        }
        Ok(log)
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn has_second_agent(&self) -> bool {
        self.steps.first().is_some_and(|s| s.a2.is_some())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,s,a1,a2,s_next\n");
        for (t, st) in self.steps.iter().enumerate() {
            let a2 = st.a2.map(|a| a.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{t},{},{},{a2},{}", st.s, st.a1, st.s_next);
        }
        out
    }
}

/// Which variables the next state is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    /// `(s, a1)`: the one-agent view.
    StateAction,
    /// `(s, a1, a2)`: the joint view.
    StateJointAction,
}

/// Total code length `k·Ĥ` in bits of the next states of `steps`.
fn conditional_code_bits(steps: &[StepRecord], cond: Conditioning) -> Result<f64> {
    type Ctx = (StateId, ActionId, Option<ActionId>);
    let mut counts: BTreeMap<Ctx, BTreeMap<StateId, u64>> = BTreeMap::new();
    for st in steps {
        let a2 = match cond {
            Conditioning::StateAction => None,
            Conditioning::StateJointAction => Some(st.a2.ok_or_else(|| {
                Error::UndefinedInput("joint conditioning needs second-agent actions".into())
            })?),
        };
        *counts
            .entry((st.s, st.a1, a2))
            .or_default()
            .entry(st.s_next)
            .or_default() += 1;
    }
    let mut bits = 0.0;
    for nexts in counts.values() {
        let total: u64 = nexts.values().sum();
        let total = total as f64;
        for &c in nexts.values() {
            let c = c as f64;
            bits -= c * (c / total).log2();
        }
    }
    Ok(bits)
}

/// Plug-in conditional entropy of the next state, in bits per step.
pub fn empirical_conditional_entropy(steps: &[StepRecord], cond: Conditioning) -> Result<f64> {
    if steps.is_empty() {
        return Err(Error::UndefinedInput(
            "empirical entropy of an empty log".into(),
        ));
    }
    Ok(conditional_code_bits(steps, cond)? / steps.len() as f64)
}

/// Constants of the two-part code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodingParams {
    pub bits_per_param: u32,
    /// Fixed cost of describing the SARSA program itself.
    pub sarsa_program_bits: u32,
    /// The second agent's exploration rate, used for the flag code.
    pub epsilon: f64,
}

impl Default for CodingParams {
    fn default() -> Self {
        Self {
            bits_per_param: 32,
            sarsa_program_bits: 240,
            epsilon: 0.1,
        }
    }
}

impl CodingParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::config(
                format!("{prefix}epsilon"),
                format!("{} is outside (0, 1)", self.epsilon),
            ));
        }
        Ok(())
    }
}

/// Number of real parameters in each hypothesized table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnvShape {
    /// Entries of `P(s'|s,a)`; the one-agent reward table has the same size.
    pub marginal_entries: usize,
    /// Entries of `P(s'|s,a1,a2)`; both joint reward tables have the same size.
    pub joint_entries: usize,
    /// Entries of the second agent's initial Q-table.
    pub initial_q_entries: usize,
}

impl EnvShape {
    /// Dense tables over every `(s, a, s')` combination.
    pub fn full(n_states: usize, actions1: usize, actions2: usize) -> Self {
        Self {
            marginal_entries: n_states * actions1 * n_states,
            joint_entries: n_states * actions1 * actions2 * n_states,
            initial_q_entries: n_states * actions2,
        }
    }

    /// Sparse tables holding only the transitions with nonzero probability.
    pub fn support(env: &TwoAgentEnv) -> Self {
        Self {
            marginal_entries: env.marginal_support_size(),
            joint_entries: env.joint_support_size(),
            initial_q_entries: env.actions2().iter().sum(),
        }
    }

    pub fn one_agent_model_bits(&self, coding: &CodingParams) -> f64 {
        f64::from(coding.bits_per_param) * (2 * self.marginal_entries) as f64
    }

    pub fn two_agent_model_bits(&self, coding: &CodingParams) -> f64 {
        let params = 3 * self.joint_entries + self.initial_q_entries;
        f64::from(coding.bits_per_param) * params as f64 + f64::from(coding.sarsa_program_bits)
    }
}

/// Description length of a history under the one-agent Markov hypothesis.
pub fn dl_one_agent(steps: &[StepRecord], coding: &CodingParams, shape: &EnvShape) -> Result<f64> {
    if steps.is_empty() {
        return Err(Error::UndefinedInput(
            "description length of an empty log".into(),
        ));
    }
    Ok(conditional_code_bits(steps, Conditioning::StateAction)?
        + shape.one_agent_model_bits(coding))
}

/// Candidate SARSA model of the second agent.
#[derive(Debug, Clone)]
pub struct SecondAgentModel<'a> {
    /// Supplies the hypothesized `R2(s'|s,a1,a2)` table.
    pub rewards: &'a TwoAgentEnv,
    pub initial_q: QTable,
    pub alpha: f64,
    pub gamma: f64,
}

impl<'a> SecondAgentModel<'a> {
    pub fn new(rewards: &'a TwoAgentEnv, alpha: f64, gamma: f64) -> Self {
        Self {
            rewards,
            initial_q: QTable::zeros(rewards.actions2()),
            alpha,
            gamma,
        }
    }

    fn reward(&self, st: &StepRecord, a2: ActionId) -> Result<f64> {
        self.rewards
            .dist(st.s, st.a1, a2)
            .ok()
            .and_then(|d| d.outcome_to(st.s_next))
            .map(|o| o.r2)
            .ok_or_else(|| {
                Error::InconsistentModel(format!(
                    "transition {} -({}, {a2})-> {} is impossible under the model",
                    st.s, st.a1, st.s_next
                ))
            })
    }
}

/// Breakdown of the two-agent description length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoAgentCode {
    pub entropy_bits: f64,
    pub model_bits: f64,
    pub action_bits: f64,
    /// Steps where the observed action departed from the replayed greedy choice.
    pub mismatches: usize,
}

impl TwoAgentCode {
    pub fn total(&self) -> f64 {
        self.entropy_bits + self.model_bits + self.action_bits
    }
}

/// Replays the model's SARSA learner along the log. Returns the cumulative
/// action-code bits after each step and the cumulative mismatch count.
fn replay_action_bits(
    steps: &[StepRecord],
    coding: &CodingParams,
    model: &SecondAgentModel<'_>,
) -> Result<Vec<(f64, usize)>> {
    let env = model.rewards;
    if model.initial_q.actions_per_state() != env.actions2() {
        return Err(Error::InconsistentModel(
            "initial Q-table shape differs from the second agent's action space".into(),
        ));
    }
    let match_bits = -(1.0 - coding.epsilon).log2();
    let flag_bits = -coding.epsilon.log2();
    let mut q = model.initial_q.clone();
    let mut out = Vec::with_capacity(steps.len());
    let mut bits = 0.0;
    let mut mismatches = 0;
    for (t, st) in steps.iter().enumerate() {
        let a2 = st.a2.ok_or_else(|| {
            Error::InconsistentModel(format!("step {t} has no second-agent action"))
        })?;
        let n2 = env.n_actions2(st.s);
        if a2 >= n2 {
            return Err(Error::InconsistentModel(format!(
                "step {t}: action {a2} does not exist in state {}",
                st.s
            )));
        }
        if a2 == q.greedy_action(st.s) {
            bits += match_bits;
        } else {
            if coding.epsilon <= 0.0 {
                return Err(Error::InconsistentModel(format!(
                    "step {t}: action {a2} departs from the greedy replay but the model never explores"
                )));
            }
            bits += flag_bits + ((n2 - 1) as f64).log2();
            mismatches += 1;
        }
        if t > 0 {
            let prev = &steps[t - 1];
            let pa2 = prev.a2.expect("checked on the previous iteration");
            let r = model.reward(prev, pa2)?;
            q.sarsa_update(prev.s, pa2, r, st.s, a2, model.alpha, model.gamma);
        }
        out.push((bits, mismatches));
    }
    // the last transition must still be feasible under the model
    if let Some(last) = steps.last() {
        model.reward(last, last.a2.expect("checked above"))?;
    }
    Ok(out)
}

/// Description length of a history under the two-agent hypothesis.
pub fn dl_two_agent(
    steps: &[StepRecord],
    coding: &CodingParams,
    shape: &EnvShape,
    model: &SecondAgentModel<'_>,
) -> Result<TwoAgentCode> {
    if steps.is_empty() {
        return Err(Error::UndefinedInput(
            "description length of an empty log".into(),
        ));
    }
    let replay = replay_action_bits(steps, coding, model)?;
    let (action_bits, mismatches) = *replay.last().expect("non-empty");
    Ok(TwoAgentCode {
        entropy_bits: conditional_code_bits(steps, Conditioning::StateJointAction)?,
        model_bits: shape.two_agent_model_bits(coding),
        action_bits,
        mismatches,
    })
}

/// Description lengths at a list of history lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct DlCurve {
    pub cycles: Vec<usize>,
    pub dl_one: Vec<f64>,
    pub dl_two: Vec<f64>,
}

impl DlCurve {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("cycle,dl_one_bits,dl_two_bits\n");
        for i in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{},{}",
                self.cycles[i], self.dl_one[i], self.dl_two[i]
            );
        }
        out
    }
}

/// Evaluates both description lengths on each prefix `log[..k]` for `k` in
/// `cycles` (ascending, each in `1..=log.len()`).
pub fn dl_curve(
    log: &TrajectoryLog,
    coding: &CodingParams,
    shape: &EnvShape,
    model: &SecondAgentModel<'_>,
    cycles: &[usize],
) -> Result<DlCurve> {
    if cycles.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::ContractViolation(
            "evaluation cycles must be strictly ascending".into(),
        ));
    }
    if let Some(&k) = cycles.iter().find(|&&k| k == 0 || k > log.len()) {
        return Err(Error::ContractViolation(format!(
            "cannot evaluate cycle {k} of a {}-step log",
            log.len()
        )));
    }
    let horizon = cycles.last().copied().unwrap_or(0);
    let steps = &log.steps()[..horizon];
    let replay = replay_action_bits(steps, coding, model)?;
    let one_model = shape.one_agent_model_bits(coding);
    let two_model = shape.two_agent_model_bits(coding);
    let mut curve = DlCurve {
        cycles: cycles.to_vec(),
        dl_one: Vec::with_capacity(cycles.len()),
        dl_two: Vec::with_capacity(cycles.len()),
    };
    for &k in cycles {
        let prefix = &steps[..k];
        curve
            .dl_one
            .push(conditional_code_bits(prefix, Conditioning::StateAction)? + one_model);
        curve.dl_two.push(
            conditional_code_bits(prefix, Conditioning::StateJointAction)?
                + two_model
                + replay[k - 1].0,
        );
    }
    Ok(curve)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Detection {
    pub present: bool,
    /// First evaluated cycle from which the two-agent code stays shorter.
    pub crossover: Option<usize>,
}

/// Declares a second agent present when the two-agent code is shorter at the
/// final evaluated cycle.
pub fn detect_second_agent(curve: &DlCurve) -> Result<Detection> {
    if curve.is_empty() {
        return Err(Error::UndefinedInput(
            "empty description-length curve".into(),
        ));
    }
    let last_not_below = (0..curve.len())
        .rev()
        .find(|&i| curve.dl_two[i] >= curve.dl_one[i]);
    let crossover = match last_not_below {
        None => Some(curve.cycles[0]),
        Some(i) if i + 1 < curve.len() => Some(curve.cycles[i + 1]),
        Some(_) => None,
    };
    Ok(Detection {
        present: crossover.is_some(),
        crossover,
    })
}

/// Evaluation cycles `1, step, 2·step, …, horizon`.
pub fn evaluation_cycles(horizon: usize, step: usize) -> Vec<usize> {
    let step = step.max(1);
    let mut cycles = vec![1];
    let mut k = step;
    while k < horizon {
        if k > 1 {
            cycles.push(k);
        }
        k += step;
    }
    if horizon > 1 {
        cycles.push(horizon);
    }
    cycles
}
