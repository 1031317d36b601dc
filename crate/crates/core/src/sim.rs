//! Simulation loops shared by the experiments.

use crate::agent::Learner;
use crate::env::{ActionId, StateId, Transition, TwoAgentEnv};
use crate::seed::{derive_seed, rng_from_seed, Purpose, SimRng};

/// Independent random streams for one simulation: environment dynamics and
/// each agent's exploration.
#[derive(Debug, Clone)]
pub struct SimRngs {
    pub dynamics: SimRng,
    pub first: SimRng,
    pub second: SimRng,
}

impl SimRngs {
    pub fn from_seeds(dynamics: u64, first: u64, second: u64) -> Self {
        Self {
            dynamics: rng_from_seed(dynamics),
            first: rng_from_seed(first),
            second: rng_from_seed(second),
        }
    }

    pub fn for_replicate(master: u64, replicate: u64) -> Self {
        Self::from_seeds(
            derive_seed(master, replicate, Purpose::Dynamics),
            derive_seed(master, replicate, Purpose::FirstAgent),
            derive_seed(master, replicate, Purpose::SecondAgent),
        )
    }
}

/// What the joint loop reports for every cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointStep {
    pub s: StateId,
    pub a1: ActionId,
    pub a2: ActionId,
    pub transition: Transition,
}

/// Runs two SARSA-style learners in the joint environment for `steps` cycles
/// starting from `start`.
///
/// Both agents pick their next action before learning from the transition
/// that led there, so the second agent's greedy choices can be replayed from
/// the logged history alone. `first_reward` maps each step to the reward the
/// first agent learns from; the second agent always learns from `r2`.
#[allow(clippy::too_many_arguments)]
pub fn run_joint<A, B, F, O>(
    env: &TwoAgentEnv,
    first: &mut A,
    second: &mut B,
    start: StateId,
    steps: usize,
    rngs: &mut SimRngs,
    mut first_reward: F,
    mut observe: O,
) -> StateId
where
    A: Learner,
    B: Learner,
    F: FnMut(StateId, ActionId, &Transition) -> f64,
    O: FnMut(&JointStep),
{
    if steps == 0 {
        return start;
    }
    let mut s = start;
    let mut a1 = first.act(s, &mut rngs.first);
    let mut a2 = second.act(s, &mut rngs.second);
    for _ in 0..steps {
        let tr = env.step_unchecked(s, a1, a2, &mut rngs.dynamics);
        let next1 = first.act(tr.next, &mut rngs.first);
        let next2 = second.act(tr.next, &mut rngs.second);
        let r = first_reward(s, a1, &tr);
        first.learn(s, a1, r, tr.next, next1);
        second.learn(s, a2, tr.r2, tr.next, next2);
        observe(&JointStep {
            s,
            a1,
            a2,
            transition: tr,
        });
        s = tr.next;
        a1 = next1;
        a2 = next2;
    }
    s
}
