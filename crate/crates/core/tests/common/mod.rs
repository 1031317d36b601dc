//! Reference computations shared by the oracle and acceptance suites.
#![allow(dead_code, clippy::needless_range_loop, clippy::type_complexity)]

use rand::Rng;
use valuelearn::agent::{QTable, SarsaAgent, SarsaParams, ScriptedAgent};
use valuelearn::empathy::{run_exploration, ExplorationSchedule};
use valuelearn::env::{Outcome, OutcomeDist, TwoAgentEnv, TwoAgentVariant};
use valuelearn::experiments::detect::simulate_joint_log;
use valuelearn::mdl::{StepRecord, TrajectoryLog};
use valuelearn::seed::rng_from_seed;
use valuelearn::sim::SimRngs;

pub const NEXT: [[usize; 2]; 5] = [[1, 2], [2, 3], [3, 4], [4, 0], [0, 1]];
pub const REWARD: [[f64; 2]; 5] = [[0.2, 0.0], [0.0, 1.0], [0.5, 0.1], [0.3, 0.9], [0.0, 0.4]];

pub fn value_iteration(gamma: f64) -> [[f64; 2]; 5] {
    let mut q = [[0.0_f64; 2]; 5];
    for _ in 0..2_000 {
        let mut next = q;
        for s in 0..5 {
            for a in 0..2 {
                let s2 = NEXT[s][a];
                next[s][a] = REWARD[s][a] + gamma * q[s2][0].max(q[s2][1]);
            }
        }
        q = next;
    }
    q
}

/// Max-norm distance between SARSA's table after 200 000 steps and the
/// value-iteration fixed point.
pub fn sarsa_distance_to_optimum() -> f64 {
    let (alpha, gamma) = (0.1, 0.9);
    let qstar = value_iteration(gamma);
    let mut q = QTable::zeros(&[2; 5]);
    let mut rng = rng_from_seed(11);
    let eps = |t: usize| 0.1 / (1.0 + t as f64 / 2_000.0);
    let (mut s, mut a) = (0, 0);
    for t in 0..200_000 {
        // exploring starts keep every pair visited as exploration decays
        if t % 20 == 0 {
            s = rng.gen_range(0..5);
            a = rng.gen_range(0..2);
        }
        let s2 = NEXT[s][a];
        let a2 = q.select_action(s2, eps(t), &mut rng).unwrap();
        q.sarsa_update(s, a, REWARD[s][a], s2, a2, alpha, gamma);
        s = s2;
        a = a2;
    }
    let mut worst: f64 = 0.0;
    for s in 0..5 {
        for a in 0..2 {
            worst = worst.max((q.get(s, a) - qstar[s][a]).abs());
        }
    }
    worst
}

pub fn step(s: usize, a1: usize, a2: Option<usize>, next: usize) -> StepRecord {
    StepRecord {
        s,
        a1,
        a2,
        s_next: next,
    }
}

/// Per-step plug-in estimate: each step pays -log2 of the fraction of steps
/// sharing its context that also share its outcome.
pub fn entropy_oracle(steps: &[StepRecord], joint: bool) -> f64 {
    let ctx = |x: &StepRecord| (x.s, x.a1, if joint { x.a2 } else { None });
    let mut total = 0.0;
    for x in steps {
        let same_ctx = steps.iter().filter(|y| ctx(y) == ctx(x)).count() as f64;
        let same_both = steps
            .iter()
            .filter(|y| ctx(y) == ctx(x) && y.s_next == x.s_next)
            .count() as f64;
        total -= (same_both / same_ctx).log2();
    }
    total / steps.len() as f64
}

pub struct DlOracle<'a> {
    pub env: &'a TwoAgentEnv,
    pub bits_per_param: f64,
    pub program_bits: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl DlOracle<'_> {
    fn joint_support(&self) -> usize {
        let mut n = 0;
        for s in 0..self.env.n_states() {
            for a1 in 0..self.env.n_actions1(s) {
                for a2 in 0..self.env.n_actions2(s) {
                    n += self
                        .env
                        .dist(s, a1, a2)
                        .unwrap()
                        .outcomes()
                        .iter()
                        .filter(|o| o.prob > 0.0)
                        .count();
                }
            }
        }
        n
    }

    /// Accumulates the two-agent description length step by step.
    pub fn dl_two(&self, steps: &[StepRecord]) -> f64 {
        let q0_entries: usize = (0..self.env.n_states())
            .map(|s| self.env.n_actions2(s))
            .sum();
        let model = self.bits_per_param * (3 * self.joint_support() + q0_entries) as f64
            + self.program_bits;
        let entropy = entropy_oracle(steps, true) * steps.len() as f64;

        let mut q: Vec<Vec<f64>> = (0..self.env.n_states())
            .map(|s| vec![0.0; self.env.n_actions2(s)])
            .collect();
        let mut flags = 0.0;
        for (t, x) in steps.iter().enumerate() {
            let row = &q[x.s];
            let mut greedy = 0;
            for (a, &v) in row.iter().enumerate() {
                if v > row[greedy] {
                    greedy = a;
                }
            }
            let a2 = x.a2.unwrap();
            flags += if a2 == greedy {
                -(1.0 - self.epsilon).log2()
            } else {
                -self.epsilon.log2() + ((row.len() - 1) as f64).log2()
            };
            if t > 0 {
                let p = &steps[t - 1];
                let pa2 = p.a2.unwrap();
                let r = self
                    .env
                    .dist(p.s, p.a1, pa2)
                    .unwrap()
                    .outcomes()
                    .iter()
                    .find(|o| o.next == p.s_next)
                    .unwrap()
                    .r2;
                let target = r + self.gamma * q[x.s][a2];
                q[p.s][pa2] += self.alpha * (target - q[p.s][pa2]);
            }
        }
        model + entropy + flags
    }
}

pub fn seeded_log(
    env: &TwoAgentEnv,
    params: &SarsaParams,
    steps: usize,
    seed: u64,
) -> TrajectoryLog {
    let mut second = SarsaAgent::new(env.actions2(), params);
    let mut rngs = SimRngs::for_replicate(seed, 0);
    simulate_joint_log(env, &mut second, params, steps, &mut rngs)
}

pub fn outcome(next: usize, prob: f64) -> Outcome {
    Outcome {
        next,
        prob,
        r1: 0.5,
        r2: 0.5,
    }
}

/// Four states, two actions each; transitions depend on both agents.
pub fn chain_env() -> TwoAgentEnv {
    let table: [[[&[(usize, f64)]; 2]; 2]; 4] = [
        [
            [&[(1, 0.7), (2, 0.3)], &[(3, 0.9), (1, 0.1)]],
            [&[(0, 0.5), (2, 0.5)], &[(1, 0.2), (3, 0.8)]],
        ],
        [
            [&[(2, 0.85), (0, 0.15)], &[(0, 0.4), (3, 0.6)]],
            [&[(1, 0.1), (0, 0.9)], &[(3, 0.7), (2, 0.3)]],
        ],
        [
            [&[(3, 0.5), (0, 0.5)], &[(2, 0.6), (1, 0.4)]],
            [&[(0, 0.95), (3, 0.05)], &[(1, 0.3), (2, 0.7)]],
        ],
        [
            [&[(0, 0.65), (1, 0.35)], &[(2, 0.5), (3, 0.5)]],
            [&[(1, 0.8), (2, 0.2)], &[(0, 0.6), (3, 0.4)]],
        ],
    ];
    let mut joint = Vec::new();
    for s in table {
        for a1 in s {
            for a2 in a1 {
                joint.push(
                    OutcomeDist::new(a2.iter().map(|&(n, p)| outcome(n, p)).collect()).unwrap(),
                );
            }
        }
    }
    TwoAgentEnv::from_parts(TwoAgentVariant::Stochastic, vec![2; 4], vec![2; 4], joint).unwrap()
}

pub fn stationary(p: &[Vec<f64>]) -> Vec<f64> {
    let n = p.len();
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..10_000 {
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                next[j] += pi[i] * p[i][j];
            }
        }
        pi = next;
    }
    pi
}

pub fn induced_chain(env: &TwoAgentEnv, a1: usize, second: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = env.n_states();
    let mut p = vec![vec![0.0; n]; n];
    for s in 0..n {
        for (a2, &w) in second[s].iter().enumerate() {
            for o in env.dist(s, a1, a2).unwrap().outcomes() {
                p[s][o.next] += w * o.prob;
            }
        }
    }
    p
}

/// Largest gap between committed-action visit frequencies and the stationary
/// distribution of the induced chain, with a frozen second agent.
pub fn frozen_visit_error() -> f64 {
    let env = chain_env();
    let policy = vec![
        vec![0.3, 0.7],
        vec![0.5, 0.5],
        vec![0.9, 0.1],
        vec![0.25, 0.75],
    ];
    let mut second = ScriptedAgent::new(policy.clone()).unwrap();
    let schedule = ExplorationSchedule::round_robin(100_000, 1);
    let mut rngs = SimRngs::from_seeds(1, 2, 3);
    let counter = run_exploration(&env, &mut second, &schedule, 0, &mut rngs);
    let mut worst: f64 = 0.0;
    for a1 in 0..2 {
        let pi = stationary(&induced_chain(&env, a1, &policy));
        for (s, &p) in pi.iter().enumerate() {
            let freq = counter.visits(s, a1) as f64 / counter.exposure(s, a1) as f64;
            worst = worst.max((freq - p).abs());
        }
    }
    worst
}
