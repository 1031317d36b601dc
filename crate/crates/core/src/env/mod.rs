//! Tabular test environments.
//!
//! [`MarkovEnv`] is the layered single-agent loop used for value fostering;
//! [`TwoAgentEnv`] is a random joint-action MDP used for agent detection and
//! empathic value reconstruction. Both are immutable after construction and
//! take the rng as an explicit argument when stepping.

mod layered;
mod text;
mod two_agent;

use rand::Rng;

use crate::error::{Error, Result};

pub use layered::{generate_layered_env, randomize_somatic_rewards, LayeredVariant, MarkovEnv};
pub use two_agent::{generate_two_agent_env, TwoAgentEnv, TwoAgentShape, TwoAgentVariant};

pub type StateId = usize;
pub type ActionId = usize;

/// Tolerance on the total probability mass of an [`OutcomeDist`].
pub const PROB_TOLERANCE: f64 = 1e-9;

/// One possible result of an action, with the rewards paid when it occurs.
///
/// For the layered environment `r1` is the somatic reward and `r2` the
/// social reward; for the two-agent environment they are the rewards of the
/// first and second agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub next: StateId,
    pub prob: f64,
    pub r1: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDist {
    outcomes: Vec<Outcome>,
}

impl OutcomeDist {
    pub fn new(outcomes: Vec<Outcome>) -> Result<Self> {
        let dist = Self { outcomes };
        dist.validate()?;
        Ok(dist)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.outcomes.is_empty() {
            return Err(Error::Construction("empty outcome distribution".into()));
        }
        let mut total = 0.0;
        for (i, o) in self.outcomes.iter().enumerate() {
            if !(0.0..=1.0).contains(&o.prob) {
                return Err(Error::Construction(format!(
                    "outcome probability {} outside [0, 1]",
                    o.prob
                )));
            }
            if self.outcomes[..i].iter().any(|p| p.next == o.next) {
                return Err(Error::Construction(format!(
                    "next state {} listed twice in one distribution",
                    o.next
                )));
            }
            total += o.prob;
        }
        if (total - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::Construction(format!(
                "outcome probabilities sum to {total}, not 1"
            )));
        }
        Ok(())
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn total_prob(&self) -> f64 {
        self.outcomes.iter().map(|o| o.prob).sum()
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Outcome leading to `next`, if the distribution has one.
    pub fn outcome_to(&self, next: StateId) -> Option<&Outcome> {
        self.outcomes.iter().find(|o| o.next == next)
    }

    pub(crate) fn outcomes_mut(&mut self) -> &mut [Outcome] {
        &mut self.outcomes
    }

    /// Samples an outcome. Single-outcome distributions consume no randomness.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &Outcome {
        if self.outcomes.len() == 1 {
            return &self.outcomes[0];
        }
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for o in &self.outcomes {
            acc += o.prob;
            if u < acc {
                return o;
            }
        }
        self.outcomes.last().expect("validated non-empty")
    }
}

/// Result of one environment transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub next: StateId,
    pub r1: f64,
    pub r2: f64,
}

impl From<&Outcome> for Transition {
    fn from(o: &Outcome) -> Self {
        Transition {
            next: o.next,
            r1: o.r1,
            r2: o.r2,
        }
    }
}

/// Draws uniformly from the open interval (0, 1).
pub(crate) fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(rand::distributions::Open01)
}
