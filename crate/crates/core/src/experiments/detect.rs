//! Second-agent detection by description-length crossover.

use rand::Rng;
use rayon::prelude::*;

use crate::agent::{Learner, SarsaAgent, SarsaParams, ScriptedAgent};
use crate::env::{generate_two_agent_env, TwoAgentEnv, TwoAgentShape, TwoAgentVariant};
use crate::error::{Error, Result};
use crate::mdl::{
    detect_second_agent, dl_curve, evaluation_cycles, CodingParams, Detection, DlCurve, EnvShape,
    SecondAgentModel, StepRecord, TrajectoryLog,
};
use crate::seed::{derive_seed, stream, Purpose};
use crate::sim::{run_joint, SimRngs};

/// How the model-cost term counts table entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableCounting {
    /// Only transitions with nonzero probability.
    Support,
    /// Every `(s, a, s')` combination.
    Full,
}

impl TableCounting {
    pub fn name(self) -> &'static str {
        match self {
            TableCounting::Support => "support",
            TableCounting::Full => "full",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "support" => Some(TableCounting::Support),
            "full" => Some(TableCounting::Full),
            _ => None,
        }
    }

    pub fn shape(self, env: &TwoAgentEnv, dims: &TwoAgentShape) -> EnvShape {
        match self {
            TableCounting::Support => EnvShape::support(env),
            TableCounting::Full => EnvShape::full(dims.n_states, dims.actions1, dims.actions2),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectConfig {
    pub variants: Vec<TwoAgentVariant>,
    pub shape: TwoAgentShape,
    pub horizon: usize,
    /// Spacing of evaluation cycles; cycle 1 and the horizon are always included.
    pub eval_every: usize,
    pub coding: CodingParams,
    pub tables: TableCounting,
    pub params: SarsaParams,
    /// Second agent's initial values are drawn uniformly from `[0, initial_q_max)`;
    /// zero keeps the all-zero start.
    pub initial_q_max: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            variants: TwoAgentVariant::ALL.to_vec(),
            shape: TwoAgentShape::default(),
            horizon: 5_000,
            eval_every: 50,
            coding: CodingParams::default(),
            tables: TableCounting::Support,
            params: SarsaParams::default(),
            initial_q_max: 0.0,
            replicates: 50,
            seed: 0,
        }
    }
}

impl DetectConfig {
    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            return Err(Error::config(
                "detect.variants",
                "at least one variant is required",
            ));
        }
        if self.shape.n_states < 2 {
            return Err(Error::config("detect.env.states", "must be >= 2"));
        }
        if self.shape.actions1 < 1 {
            return Err(Error::config("detect.env.actions1", "must be >= 1"));
        }
        if self.shape.actions2 < 2 {
            return Err(Error::config(
                "detect.env.actions2",
                "the second agent needs >= 2 actions",
            ));
        }
        if self.horizon < 1 {
            return Err(Error::config("detect.horizon", "must be >= 1"));
        }
        if self.eval_every < 1 {
            return Err(Error::config("detect.eval_every", "must be >= 1"));
        }
        if self.replicates < 1 {
            return Err(Error::config("detect.replicates", "must be >= 1"));
        }
        if self.initial_q_max < 0.0 || !self.initial_q_max.is_finite() {
            return Err(Error::config(
                "detect.second.initial_q_max",
                "must be finite and >= 0",
            ));
        }
        if self.params.epsilon >= 1.0 {
            return Err(Error::config(
                "detect.sarsa.epsilon",
                "must be < 1 so greedy matches have a finite code length",
            ));
        }
        self.coding.validate("detect.coding.")?;
        self.params.validate("detect.sarsa.")
    }

    pub fn cycles(&self) -> Vec<usize> {
        evaluation_cycles(self.horizon, self.eval_every)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectReplicate {
    pub variant: TwoAgentVariant,
    pub replicate: u64,
    pub curve: DlCurve,
    pub detection: Detection,
    /// Same environment with the second agent frozen on a fixed action.
    pub control_curve: DlCurve,
    pub control_detection: Detection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectResult {
    pub replicates: Vec<DetectReplicate>,
}

impl DetectResult {
    pub fn for_variant(&self, v: TwoAgentVariant) -> impl Iterator<Item = &DetectReplicate> {
        self.replicates.iter().filter(move |r| r.variant == v)
    }

    /// Fraction of replicates of `v` where the second agent was detected.
    pub fn detection_rate(&self, v: TwoAgentVariant) -> f64 {
        rate(self.for_variant(v).map(|r| r.detection.present))
    }

    pub fn control_false_positive_rate(&self, v: TwoAgentVariant) -> f64 {
        rate(self.for_variant(v).map(|r| r.control_detection.present))
    }
}

fn rate(flags: impl Iterator<Item = bool>) -> f64 {
    let (hits, n) = flags.fold((0usize, 0usize), |(h, n), f| (h + f as usize, n + 1));
    if n == 0 {
        0.0
    } else {
        hits as f64 / n as f64
    }
}

/// Runs the first agent (SARSA on `r1`) beside `second` and logs the joint history.
pub fn simulate_joint_log<L: Learner>(
    env: &TwoAgentEnv,
    second: &mut L,
    params: &SarsaParams,
    steps: usize,
    rngs: &mut SimRngs,
) -> TrajectoryLog {
    let mut first = SarsaAgent::new(env.actions1(), params);
    let mut log = TrajectoryLog::with_capacity(steps);
    run_joint(
        env,
        &mut first,
        second,
        0,
        steps,
        rngs,
        |_, _, tr| tr.r1,
        |st| {
            log.push(StepRecord {
                s: st.s,
                a1: st.a1,
                a2: Some(st.a2),
                s_next: st.transition.next,
            })
            .expect("the simulation produces a continuous history");
        },
    );
    log
}

/// Seed of the environment used by `replicate` of `variant`.
pub fn env_seed(config: &DetectConfig, variant: TwoAgentVariant, replicate: u64) -> u64 {
    let v = match variant {
        TwoAgentVariant::Deterministic => 0,
        TwoAgentVariant::Stochastic => 1,
    };
    derive_seed(config.seed ^ (v << 32), replicate, Purpose::EnvGeneration)
}

pub fn run_detect_replicate(
    config: &DetectConfig,
    variant: TwoAgentVariant,
    replicate: u64,
) -> Result<DetectReplicate> {
    let env = generate_two_agent_env(config.shape, variant, env_seed(config, variant, replicate))?;
    let p = &config.params;
    let cycles = config.cycles();
    let shape = config.tables.shape(&env, &config.shape);
    let mut model = SecondAgentModel::new(&env, p.alpha, p.gamma);
    if config.initial_q_max > 0.0 {
        let mut init_rng = stream(config.seed, replicate, Purpose::Exploration);
        for s in 0..env.n_states() {
            for a in 0..env.n_actions2(s) {
                model
                    .initial_q
                    .set(s, a, init_rng.gen_range(0.0..config.initial_q_max));
            }
        }
    }
    let coding = CodingParams {
        epsilon: p.epsilon,
        ..config.coding
    };

    let mut second = SarsaAgent::new(env.actions2(), p);
    second.q = model.initial_q.clone();
    let mut rngs = SimRngs::for_replicate(config.seed, replicate);
    let log = simulate_joint_log(&env, &mut second, p, config.horizon, &mut rngs);
    let curve = dl_curve(&log, &coding, &shape, &model, &cycles)?;

    let mut dummy = ScriptedAgent::constant(env.actions2(), 0);
    let mut rngs = SimRngs::for_replicate(config.seed, replicate);
    let control_log = simulate_joint_log(&env, &mut dummy, p, config.horizon, &mut rngs);
    let control_curve = dl_curve(&control_log, &coding, &shape, &model, &cycles)?;

    Ok(DetectReplicate {
        variant,
        replicate,
        detection: detect_second_agent(&curve)?,
        curve,
        control_detection: detect_second_agent(&control_curve)?,
        control_curve,
    })
}

pub fn run_detection_experiment(config: &DetectConfig) -> Result<DetectResult> {
    config.validate()?;
    let jobs: Vec<(TwoAgentVariant, u64)> = config
        .variants
        .iter()
        .flat_map(|&v| (0..config.replicates as u64).map(move |r| (v, r)))
        .collect();
    let replicates = jobs
        .into_par_iter()
        .map(|(v, r)| run_detect_replicate(config, v, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(DetectResult { replicates })
}
