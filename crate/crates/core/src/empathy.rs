//! Commit-and-count exploration and value reconstruction from visit
//! frequencies.
//!
//! The first agent cannot see the second agent's rewards or actions. It
//! commits to one action per state for a block of steps and counts how often
//! each state is entered under each commitment. A commitment that the second agent likes makes the second
//! agent steer back to that state more often, so the relative visit
//! frequency serves as a value estimate `Q'(s, a)`.

use std::fmt::Write as _;

use rand::Rng;

use crate::agent::{Learner, QTable, SarsaAgent, SarsaParams};
use crate::env::{StateId, TwoAgentEnv};
use crate::error::{Error, Result};
use crate::sim::{run_joint, SimRngs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExplorationSchedule {
    /// Steps per commitment block.
    pub block_len: usize,
    /// Full passes over every state's action list.
    pub rounds: usize,
    pub commitment: Commitment,
}

/// How each block picks the committed action of every state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Commitment {
    /// Block `b` commits `b mod n(s)` everywhere.
    RoundRobin,
    /// Each state draws its own commitment per block, so the effect of one
    /// state's commitment is averaged over the others.
    Randomized,
}

impl Default for ExplorationSchedule {
    fn default() -> Self {
        Self {
            block_len: 2_000,
            rounds: 10,
            commitment: Commitment::Randomized,
        }
    }
}

impl ExplorationSchedule {
    pub fn round_robin(block_len: usize, rounds: usize) -> Self {
        Self {
            block_len,
            rounds,
            commitment: Commitment::RoundRobin,
        }
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        if self.block_len < 1 {
            return Err(Error::config(format!("{prefix}block_len"), "must be >= 1"));
        }
        if self.rounds < 1 {
            return Err(Error::config(format!("{prefix}rounds"), "must be >= 1"));
        }
        Ok(())
    }

    pub fn blocks(&self, max_actions: usize) -> usize {
        self.rounds * max_actions
    }

    pub fn total_steps(&self, max_actions: usize) -> usize {
        self.block_len * self.blocks(max_actions)
    }
}

impl Commitment {
    pub fn name(self) -> &'static str {
        match self {
            Commitment::RoundRobin => "round-robin",
            Commitment::Randomized => "randomized",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "round-robin" => Some(Commitment::RoundRobin),
            "randomized" => Some(Commitment::Randomized),
            _ => None,
        }
    }
}

/// Per-(state, committed action) arrival and exposure counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitCounter {
    visits: Vec<Vec<u64>>,
    exposure: Vec<Vec<u64>>,
}

impl VisitCounter {
    pub fn new(actions_per_state: &[usize]) -> Self {
        let zeros: Vec<Vec<u64>> = actions_per_state.iter().map(|&n| vec![0; n]).collect();
        Self {
            visits: zeros.clone(),
            exposure: zeros,
        }
    }

    /// Builds a counter from raw tables, checking `visits <= exposure`.
    pub fn from_counts(visits: Vec<Vec<u64>>, exposure: Vec<Vec<u64>>) -> Result<Self> {
        let shapes_match = visits.len() == exposure.len()
            && visits
                .iter()
                .zip(&exposure)
                .all(|(v, e)| v.len() == e.len());
        if !shapes_match {
            return Err(Error::ContractViolation(
                "visit and exposure tables differ in shape".into(),
            ));
        }
        let c = Self { visits, exposure };
        if !c.is_consistent() {
            return Err(Error::ContractViolation("visits exceed exposure".into()));
        }
        Ok(c)
    }

    pub fn n_states(&self) -> usize {
        self.visits.len()
    }

    pub fn visits(&self, s: StateId, a: usize) -> u64 {
        self.visits[s][a]
    }

    pub fn exposure(&self, s: StateId, a: usize) -> u64 {
        self.exposure[s][a]
    }

    pub fn is_consistent(&self) -> bool {
        self.visits
            .iter()
            .zip(&self.exposure)
            .all(|(v, e)| v.iter().zip(e).all(|(v, e)| v <= e))
    }

    fn actions_per_state(&self) -> Vec<usize> {
        self.visits.iter().map(Vec::len).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    None,
    /// Divide by the largest absolute entry.
    MaxAbs,
}

impl Normalization {
    pub fn name(self) -> &'static str {
        match self {
            Normalization::None => "none",
            Normalization::MaxAbs => "max-abs",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Normalization::None),
            "max-abs" => Some(Normalization::MaxAbs),
            _ => None,
        }
    }
}

/// Reconstructed values of the hidden agent.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpathicEstimate {
    pub qprime: QTable,
    pub normalization: Normalization,
}

/// Runs the commitment schedule while the second agent acts and learns.
pub fn run_exploration<L: Learner>(
    env: &TwoAgentEnv,
    second: &mut L,
    schedule: &ExplorationSchedule,
    start: StateId,
    rngs: &mut SimRngs,
) -> VisitCounter {
    let actions = env.actions1();
    let max_actions = actions.iter().copied().max().unwrap_or(0);
    let mut counter = VisitCounter::new(actions);
    let mut s = start;
    let mut a2 = second.act(s, &mut rngs.second);
    for block in 0..schedule.blocks(max_actions) {
        let committed: Vec<usize> = match schedule.commitment {
            Commitment::RoundRobin => actions.iter().map(|&n| block % n).collect(),
            Commitment::Randomized => actions
                .iter()
                .map(|&n| rngs.first.gen_range(0..n))
                .collect(),
        };
        for (state, &a) in committed.iter().enumerate() {
            counter.exposure[state][a] += schedule.block_len as u64;
        }
        for _ in 0..schedule.block_len {
            let tr = env.step_unchecked(s, committed[s], a2, &mut rngs.dynamics);
            let next2 = second.act(tr.next, &mut rngs.second);
            second.learn(s, a2, tr.r2, tr.next, next2);
            counter.visits[tr.next][committed[tr.next]] += 1;
            s = tr.next;
            a2 = next2;
        }
    }
    counter
}

/// Relative visit frequencies as value estimates; zero where nothing was
/// committed.
pub fn estimate_values(counter: &VisitCounter, normalization: Normalization) -> EmpathicEstimate {
    let mut q = QTable::zeros(&counter.actions_per_state());
    for s in 0..counter.n_states() {
        for a in 0..counter.visits[s].len() {
            let e = counter.exposure[s][a];
            if e > 0 {
                q.set(s, a, counter.visits[s][a] as f64 / e as f64);
            }
        }
    }
    if normalization == Normalization::MaxAbs {
        let max = q.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if max > 0.0 {
            for s in 0..q.n_states() {
                for a in 0..q.n_actions(s) {
                    q.set(s, a, q.get(s, a) / max);
                }
            }
        }
    }
    EmpathicEstimate {
        qprime: q,
        normalization,
    }
}

/// Reward the first agent learns from in an arm of the empathy comparison.
#[derive(Debug, Clone, Copy)]
pub enum FirstAgentReward<'a> {
    /// Its own reward `r1` only.
    Egoistic,
    /// `r1 + r2`, as if it could perceive the second agent's reward.
    Direct,
    /// `r1 + λ·Q'(s, a1)` from reconstructed values.
    Reconstructed {
        estimate: &'a EmpathicEstimate,
        weight: f64,
    },
}

/// True per-step rewards paid to both agents.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RewardLog {
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
}

impl RewardLog {
    pub fn mean_r1(&self) -> f64 {
        mean(&self.r1)
    }

    pub fn mean_r2(&self) -> f64 {
        mean(&self.r2)
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Runs a fresh first-agent SARSA learner next to `second` for `steps`
/// cycles, logging the rewards the environment actually paid.
pub fn run_arm<L: Learner>(
    env: &TwoAgentEnv,
    reward: FirstAgentReward<'_>,
    second: &mut L,
    params: &SarsaParams,
    steps: usize,
    start: StateId,
    rngs: &mut SimRngs,
) -> RewardLog {
    let mut first = SarsaAgent::new(env.actions1(), params);
    let mut log = RewardLog {
        r1: Vec::with_capacity(steps),
        r2: Vec::with_capacity(steps),
    };
    run_joint(
        env,
        &mut first,
        second,
        start,
        steps,
        rngs,
        |s, a1, tr| match reward {
            FirstAgentReward::Egoistic => tr.r1,
            FirstAgentReward::Direct => tr.r1 + tr.r2,
            FirstAgentReward::Reconstructed { estimate, weight } => {
                tr.r1 + weight * estimate.qprime.get(s, a1)
            }
        },
        |step| {
            log.r1.push(step.transition.r1);
            log.r2.push(step.transition.r2);
        },
    );
    log
}

/// Exploit phase: the first agent learns from `r1 + λ·Q'` where `λ` is
/// `params.lambda_w`.
pub fn run_exploit<L: Learner>(
    env: &TwoAgentEnv,
    estimate: &EmpathicEstimate,
    second: &mut L,
    params: &SarsaParams,
    steps: usize,
    start: StateId,
    rngs: &mut SimRngs,
) -> RewardLog {
    run_arm(
        env,
        FirstAgentReward::Reconstructed {
            estimate,
            weight: params.lambda_w,
        },
        second,
        params,
        steps,
        start,
        rngs,
    )
}

/// CSV with columns `state,action,visits,exposure,qprime`.
pub fn estimate_csv(counter: &VisitCounter, estimate: &EmpathicEstimate) -> String {
    let mut out = String::from("state,action,visits,exposure,qprime\n");
    for s in 0..counter.n_states() {
        for a in 0..counter.visits[s].len() {
            let _ = writeln!(
                out,
                "{s},{a},{},{},{}",
                counter.visits[s][a],
                counter.exposure[s][a],
                estimate.qprime.get(s, a)
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_visits_give_zero_estimate() {
        let c = VisitCounter::new(&[2, 3]);
        for norm in [Normalization::None, Normalization::MaxAbs] {
            let e = estimate_values(&c, norm);
            assert!(e.qprime.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn frequency_arithmetic() {
        let c = VisitCounter::from_counts(vec![vec![10, 5]], vec![vec![100, 100]]).unwrap();
        let raw = estimate_values(&c, Normalization::None);
        assert_eq!(raw.qprime.row(0), &[0.1, 0.05]);
        let norm = estimate_values(&c, Normalization::MaxAbs);
        assert_eq!(norm.qprime.row(0), &[1.0, 0.5]);
    }

    #[test]
    fn scaling_counts_preserves_estimate() {
        let a = VisitCounter::from_counts(
            vec![vec![3, 7], vec![0, 2]],
            vec![vec![40, 40], vec![9, 11]],
        )
        .unwrap();
        let b = VisitCounter::from_counts(
            vec![vec![30, 70], vec![0, 20]],
            vec![vec![400, 400], vec![90, 110]],
        )
        .unwrap();
        assert_eq!(
            estimate_values(&a, Normalization::None),
            estimate_values(&b, Normalization::None)
        );
    }

    #[test]
    fn inconsistent_counts_rejected() {
        assert!(VisitCounter::from_counts(vec![vec![5]], vec![vec![4]]).is_err());
        assert!(VisitCounter::from_counts(vec![vec![1, 2]], vec![vec![4]]).is_err());
    }

    #[test]
    fn unexposed_actions_estimate_zero() {
        let c = VisitCounter::from_counts(vec![vec![4, 0]], vec![vec![8, 0]]).unwrap();
        assert_eq!(
            estimate_values(&c, Normalization::None).qprime.row(0),
            &[0.5, 0.0]
        );
    }

    #[test]
    fn schedule_validation() {
        let bad = ExplorationSchedule::round_robin(0, 1);
        assert!(bad.validate("empathy.schedule.").is_err());
        assert_eq!(ExplorationSchedule::round_robin(5, 3).total_steps(2), 30);
    }
}
