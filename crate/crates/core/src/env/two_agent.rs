use std::collections::BTreeSet;

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use super::{open_unit, ActionId, Outcome, OutcomeDist, StateId, Transition};
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TwoAgentVariant {
    Deterministic,
    Stochastic,
}

impl TwoAgentVariant {
    pub fn name(self) -> &'static str {
        match self {
            TwoAgentVariant::Deterministic => "deterministic",
            TwoAgentVariant::Stochastic => "stochastic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "deterministic" => Some(TwoAgentVariant::Deterministic),
            "stochastic" => Some(TwoAgentVariant::Stochastic),
            _ => None,
        }
    }

    pub const ALL: [TwoAgentVariant; 2] =
        [TwoAgentVariant::Deterministic, TwoAgentVariant::Stochastic];
}

/// Size of a generated two-agent environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoAgentShape {
    pub n_states: usize,
    pub actions1: usize,
    pub actions2: usize,
}

impl Default for TwoAgentShape {
    fn default() -> Self {
        Self {
            n_states: 15,
            actions1: 2,
            actions2: 2,
        }
    }
}

/// Joint-action MDP: transitions `P(s' | s, a1, a2)` with a reward for each agent.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoAgentEnv {
    pub(super) variant: TwoAgentVariant,
    pub(super) actions1: Vec<usize>,
    pub(super) actions2: Vec<usize>,
    /// Index of the first joint action of each state in `joint`.
    pub(super) offsets: Vec<usize>,
    pub(super) joint: Vec<OutcomeDist>,
}

impl TwoAgentEnv {
    /// Builds an environment from per-state action counts and one outcome
    /// distribution per joint action, ordered by state, then `a1`, then `a2`.
    pub fn from_parts(
        variant: TwoAgentVariant,
        actions1: Vec<usize>,
        actions2: Vec<usize>,
        joint: Vec<OutcomeDist>,
    ) -> Result<Self> {
        if actions1.len() != actions2.len() {
            return Err(Error::Construction(
                "action count lists differ in length".into(),
            ));
        }
        let mut offsets = Vec::with_capacity(actions1.len());
        let mut total = 0;
        for (n1, n2) in actions1.iter().zip(&actions2) {
            offsets.push(total);
            total += n1 * n2;
        }
        if total != joint.len() {
            return Err(Error::Construction(format!(
                "expected {total} joint actions, got {}",
                joint.len()
            )));
        }
        let env = Self {
            variant,
            actions1,
            actions2,
            offsets,
            joint,
        };
        env.validate()?;
        Ok(env)
    }

    pub fn variant(&self) -> TwoAgentVariant {
        self.variant
    }

    pub fn n_states(&self) -> usize {
        self.actions1.len()
    }

    pub fn n_actions1(&self, s: StateId) -> usize {
        self.actions1.get(s).copied().unwrap_or(0)
    }

    pub fn n_actions2(&self, s: StateId) -> usize {
        self.actions2.get(s).copied().unwrap_or(0)
    }

    pub fn actions1(&self) -> &[usize] {
        &self.actions1
    }

    pub fn actions2(&self) -> &[usize] {
        &self.actions2
    }

    fn index(&self, s: StateId, a1: ActionId, a2: ActionId) -> Result<usize> {
        if s >= self.n_states() || a1 >= self.actions1[s] || a2 >= self.actions2[s] {
            return Err(Error::ContractViolation(format!(
                "joint action ({a1}, {a2}) is not available in state {s}"
            )));
        }
        Ok(self.offsets[s] + a1 * self.actions2[s] + a2)
    }

    pub fn dist(&self, s: StateId, a1: ActionId, a2: ActionId) -> Result<&OutcomeDist> {
        Ok(&self.joint[self.index(s, a1, a2)?])
    }

    pub fn step_joint<R: Rng + ?Sized>(
        &self,
        s: StateId,
        a1: ActionId,
        a2: ActionId,
        rng: &mut R,
    ) -> Result<Transition> {
        Ok(self.dist(s, a1, a2)?.sample(rng).into())
    }

    pub(crate) fn step_unchecked<R: Rng + ?Sized>(
        &self,
        s: StateId,
        a1: ActionId,
        a2: ActionId,
        rng: &mut R,
    ) -> Transition {
        let i = self.offsets[s] + a1 * self.actions2[s] + a2;
        self.joint[i].sample(rng).into()
    }

    /// Iterates `(s, a1, a2, distribution)` in canonical order.
    pub fn joint_actions(
        &self,
    ) -> impl Iterator<Item = (StateId, ActionId, ActionId, &OutcomeDist)> {
        (0..self.n_states()).flat_map(move |s| {
            (0..self.actions1[s]).flat_map(move |a1| {
                (0..self.actions2[s]).map(move |a2| {
                    (
                        s,
                        a1,
                        a2,
                        &self.joint[self.offsets[s] + a1 * self.actions2[s] + a2],
                    )
                })
            })
        })
    }

    /// Number of `(s, a1, a2, s')` entries with nonzero probability.
    pub fn joint_support_size(&self) -> usize {
        self.joint.iter().map(OutcomeDist::len).sum()
    }

    /// Number of `(s, a1, s')` entries reachable under some second-agent
    /// action, i.e. the support of the marginal single-agent transition table.
    pub fn marginal_support_size(&self) -> usize {
        (0..self.n_states())
            .map(|s| {
                (0..self.actions1[s])
                    .map(|a1| {
                        (0..self.actions2[s])
                            .flat_map(|a2| {
                                self.joint[self.offsets[s] + a1 * self.actions2[s] + a2]
                                    .outcomes()
                                    .iter()
                                    .map(|o| o.next)
                            })
                            .collect::<BTreeSet<_>>()
                            .len()
                    })
                    .sum::<usize>()
            })
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_states();
        if n < 2 {
            return Err(Error::Construction(format!(
                "need at least 2 states, got {n}"
            )));
        }
        if self.actions1.iter().chain(&self.actions2).any(|&k| k == 0) {
            return Err(Error::Construction(
                "every state needs at least one action per agent".into(),
            ));
        }
        for (s, a1, a2, d) in self.joint_actions() {
            d.validate()?;
            if d.outcomes().iter().any(|o| o.next >= n) {
                return Err(Error::Construction(format!(
                    "({s}, {a1}, {a2}) leads outside the state space"
                )));
            }
            let want = match self.variant {
                TwoAgentVariant::Deterministic => 1,
                TwoAgentVariant::Stochastic => 2,
            };
            if d.len() != want {
                return Err(Error::Construction(format!(
                    "({s}, {a1}, {a2}) has {} outcomes, the {} variant needs {want}",
                    d.len(),
                    self.variant.name()
                )));
            }
        }
        Ok(())
    }
}

/// Generates a random two-agent environment of the given shape.
pub fn generate_two_agent_env(
    shape: TwoAgentShape,
    variant: TwoAgentVariant,
    seed: u64,
) -> Result<TwoAgentEnv> {
    if shape.n_states < 2 {
        return Err(Error::Construction(format!(
            "n_states must be >= 2, got {}",
            shape.n_states
        )));
    }
    if shape.actions1 == 0 || shape.actions2 == 0 {
        return Err(Error::Construction(
            "each agent needs at least one action".into(),
        ));
    }
    let mut rng = rng_from_seed(seed);
    let n = shape.n_states;
    let mut joint = Vec::with_capacity(n * shape.actions1 * shape.actions2);
    for _ in 0..n * shape.actions1 * shape.actions2 {
        let outcomes = match variant {
            TwoAgentVariant::Deterministic => {
                let next = rng.gen_range(0..n);
                vec![Outcome {
                    next,
                    prob: 1.0,
                    r1: open_unit(&mut rng),
                    r2: open_unit(&mut rng),
                }]
            }
            TwoAgentVariant::Stochastic => {
                let picked = sample_indices(&mut rng, n, 2);
                let p = open_unit(&mut rng);
                let mut outs = Vec::with_capacity(2);
                for (k, prob) in [(picked.index(0), p), (picked.index(1), 1.0 - p)] {
                    outs.push(Outcome {
                        next: k,
                        prob,
                        r1: open_unit(&mut rng),
                        r2: open_unit(&mut rng),
                    });
                }
                outs
            }
        };
        joint.push(OutcomeDist { outcomes });
    }
    TwoAgentEnv::from_parts(
        variant,
        vec![shape.actions1; n],
        vec![shape.actions2; n],
        joint,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn variants_have_expected_outcome_counts() {
        let det =
            generate_two_agent_env(TwoAgentShape::default(), TwoAgentVariant::Deterministic, 1)
                .unwrap();
        for (_, _, _, d) in det.joint_actions() {
            assert_eq!(d.len(), 1);
            assert_eq!(d.outcomes()[0].prob, 1.0);
        }
        let sto = generate_two_agent_env(TwoAgentShape::default(), TwoAgentVariant::Stochastic, 1)
            .unwrap();
        for (_, _, _, d) in sto.joint_actions() {
            assert_eq!(d.len(), 2);
            assert!((d.total_prob() - 1.0).abs() <= 1e-9);
        }
        assert_eq!(det.joint_support_size(), 60);
    }

    #[test]
    fn generation_is_seeded() {
        let a = generate_two_agent_env(TwoAgentShape::default(), TwoAgentVariant::Stochastic, 5)
            .unwrap();
        let b = generate_two_agent_env(TwoAgentShape::default(), TwoAgentVariant::Stochastic, 5)
            .unwrap();
        let c = generate_two_agent_env(TwoAgentShape::default(), TwoAgentVariant::Stochastic, 6)
            .unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_single_state() {
        let shape = TwoAgentShape {
            n_states: 1,
            ..TwoAgentShape::default()
        };
        assert!(matches!(
            generate_two_agent_env(shape, TwoAgentVariant::Deterministic, 0),
            Err(Error::Construction(_))
        ));
    }

    #[test]
    fn step_reads_reward_tables() {
        let env = generate_two_agent_env(TwoAgentShape::default(), TwoAgentVariant::Stochastic, 3)
            .unwrap();
        let mut rng = rng_from_seed(4);
        for _ in 0..200 {
            let s = rng.gen_range(0..15);
            let (a1, a2) = (rng.gen_range(0..2), rng.gen_range(0..2));
            let t = env.step_joint(s, a1, a2, &mut rng).unwrap();
            let o = env.dist(s, a1, a2).unwrap().outcome_to(t.next).unwrap();
            assert_eq!((t.r1, t.r2), (o.r1, o.r2));
        }
        assert!(matches!(
            env.step_joint(0, 2, 0, &mut rng),
            Err(Error::ContractViolation(_))
        ));
        assert!(env.step_joint(15, 0, 0, &mut rng).is_err());
    }

    #[test]
    fn deterministic_step_ignores_rng() {
        let env =
            generate_two_agent_env(TwoAgentShape::default(), TwoAgentVariant::Deterministic, 3)
                .unwrap();
        let mut r1 = rng_from_seed(1);
        let mut r2 = rng_from_seed(2);
        for s in 0..15 {
            assert_eq!(
                env.step_joint(s, 1, 0, &mut r1).unwrap(),
                env.step_joint(s, 1, 0, &mut r2).unwrap()
            );
        }
    }

    #[test]
    fn even_split_frequencies() {
        let joint = vec![
            OutcomeDist::new(vec![
                Outcome {
                    next: 0,
                    prob: 0.5,
                    r1: 0.1,
                    r2: 0.2,
                },
                Outcome {
                    next: 1,
                    prob: 0.5,
                    r1: 0.3,
                    r2: 0.4,
                },
            ])
            .unwrap(),
            OutcomeDist::new(vec![
                Outcome {
                    next: 0,
                    prob: 0.5,
                    r1: 0.1,
                    r2: 0.2,
                },
                Outcome {
                    next: 1,
                    prob: 0.5,
                    r1: 0.3,
                    r2: 0.4,
                },
            ])
            .unwrap(),
        ];
        let env =
            TwoAgentEnv::from_parts(TwoAgentVariant::Stochastic, vec![1, 1], vec![1, 1], joint)
                .unwrap();
        let mut rng = rng_from_seed(99);
        let n = 10_000;
        let zeros = (0..n)
            .filter(|_| env.step_joint(0, 0, 0, &mut rng).unwrap().next == 0)
            .count();
        let f = zeros as f64 / n as f64;
        assert!((f - 0.5).abs() <= 0.02, "frequency {f}");
    }
}
