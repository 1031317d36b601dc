//! Comparison of egoistic, directly empathic and reconstructed-value first agents.

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::agent::{SarsaAgent, SarsaParams};
use crate::empathy::{
    estimate_values, run_arm, run_exploit, run_exploration, ExplorationSchedule, FirstAgentReward,
    Normalization, RewardLog,
};
use crate::env::{generate_two_agent_env, TwoAgentEnv, TwoAgentShape, TwoAgentVariant};
use crate::error::{Error, Result};
use crate::experiments::aggregate::{aggregate_replicates, Summary};
use crate::seed::{derive_seed, Purpose};
use crate::sim::SimRngs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arm {
    Egoistic,
    Direct,
    Reconstructed,
}

impl Arm {
    pub const ALL: [Arm; 3] = [Arm::Egoistic, Arm::Direct, Arm::Reconstructed];

    pub fn name(self) -> &'static str {
        match self {
            Arm::Egoistic => "egoistic",
            Arm::Direct => "direct",
            Arm::Reconstructed => "reconstructed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpathyConfig {
    pub variants: Vec<TwoAgentVariant>,
    pub shape: TwoAgentShape,
    pub schedule: ExplorationSchedule,
    pub normalization: Normalization,
    pub exploit_steps: usize,
    pub params: SarsaParams,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for EmpathyConfig {
    fn default() -> Self {
        Self {
            variants: TwoAgentVariant::ALL.to_vec(),
            shape: TwoAgentShape {
                actions2: 4,
                ..TwoAgentShape::default()
            },
            schedule: ExplorationSchedule::default(),
            normalization: Normalization::None,
            exploit_steps: 50_000,
            params: SarsaParams {
                lambda_w: 10.0,
                ..SarsaParams::default()
            },
            replicates: 100,
            seed: 0,
        }
    }
}

impl EmpathyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            return Err(Error::config(
                "empathy.variants",
                "at least one variant is required",
            ));
        }
        if self.shape.n_states < 2 {
            return Err(Error::config("empathy.env.states", "must be >= 2"));
        }
        if self.shape.actions1 < 1 || self.shape.actions2 < 1 {
            return Err(Error::config(
                "empathy.env.actions1",
                "both agents need actions",
            ));
        }
        if self.exploit_steps < 1 {
            return Err(Error::config("empathy.exploit_steps", "must be >= 1"));
        }
        if self.replicates < 1 {
            return Err(Error::config("empathy.replicates", "must be >= 1"));
        }
        self.schedule.validate("empathy.schedule.")?;
        self.params.validate("empathy.sarsa.")
    }

    fn exploration_steps(&self) -> usize {
        self.schedule.total_steps(self.shape.actions1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmOutcome {
    pub variant: TwoAgentVariant,
    pub replicate: u64,
    pub arm: Arm,
    pub mean_r1: f64,
    pub mean_r2: f64,
    /// SHA-256 of the serialized environment the arm ran in.
    pub env_checksum: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmSummary {
    pub variant: TwoAgentVariant,
    pub arm: Arm,
    pub r1: Summary,
    pub r2: Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpathyResult {
    pub outcomes: Vec<ArmOutcome>,
    pub summaries: Vec<ArmSummary>,
}

impl EmpathyResult {
    pub fn summary(&self, variant: TwoAgentVariant, arm: Arm) -> Option<&ArmSummary> {
        self.summaries
            .iter()
            .find(|s| s.variant == variant && s.arm == arm)
    }
}

pub fn env_checksum(env: &TwoAgentEnv) -> String {
    let digest = Sha256::digest(env.to_text().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Seed of the environment shared by all arms of `replicate` of `variant`.
pub fn env_seed(config: &EmpathyConfig, variant: TwoAgentVariant, replicate: u64) -> u64 {
    let v = match variant {
        TwoAgentVariant::Deterministic => 0,
        TwoAgentVariant::Stochastic => 1,
    };
    derive_seed(config.seed ^ (v << 32), replicate, Purpose::EnvGeneration)
}

fn tail_means(log: &RewardLog, window: usize) -> (f64, f64) {
    let from = log.r1.len().saturating_sub(window);
    let tail = RewardLog {
        r1: log.r1[from..].to_vec(),
        r2: log.r2[from..].to_vec(),
    };
    (tail.mean_r1(), tail.mean_r2())
}

/// Runs one arm on one environment. Every arm spends the same total number
/// of steps and is scored on the final `exploit_steps`; the reconstructed arm
/// spends the leading steps on commit-and-count exploration.
pub fn run_arm_replicate(
    config: &EmpathyConfig,
    env: &TwoAgentEnv,
    arm: Arm,
    replicate: u64,
) -> (f64, f64) {
    let p = &config.params;
    let warmup = config.exploration_steps();
    let mut rngs = SimRngs::for_replicate(config.seed, replicate);
    let mut second = SarsaAgent::new(env.actions2(), p);
    match arm {
        Arm::Egoistic | Arm::Direct => {
            let reward = if arm == Arm::Egoistic {
                FirstAgentReward::Egoistic
            } else {
                FirstAgentReward::Direct
            };
            let log = run_arm(
                env,
                reward,
                &mut second,
                p,
                warmup + config.exploit_steps,
                0,
                &mut rngs,
            );
            tail_means(&log, config.exploit_steps)
        }
        Arm::Reconstructed => {
            let counter = run_exploration(env, &mut second, &config.schedule, 0, &mut rngs);
            let estimate = estimate_values(&counter, config.normalization);
            let log = run_exploit(
                env,
                &estimate,
                &mut second,
                p,
                config.exploit_steps,
                0,
                &mut rngs,
            );
            (log.mean_r1(), log.mean_r2())
        }
    }
}

pub fn run_empathy_experiment(config: &EmpathyConfig) -> Result<EmpathyResult> {
    config.validate()?;
    let jobs: Vec<(TwoAgentVariant, u64)> = config
        .variants
        .iter()
        .flat_map(|&v| (0..config.replicates as u64).map(move |r| (v, r)))
        .collect();
    let per_job = jobs
        .into_par_iter()
        .map(|(variant, replicate)| -> Result<Vec<ArmOutcome>> {
            let env = generate_two_agent_env(
                config.shape,
                variant,
                env_seed(config, variant, replicate),
            )?;
            let checksum = env_checksum(&env);
            Ok(Arm::ALL
                .iter()
                .map(|&arm| {
                    let (mean_r1, mean_r2) = run_arm_replicate(config, &env, arm, replicate);
                    ArmOutcome {
                        variant,
                        replicate,
                        arm,
                        mean_r1,
                        mean_r2,
                        env_checksum: checksum.clone(),
                    }
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let outcomes: Vec<ArmOutcome> = per_job.into_iter().flatten().collect();

    let mut summaries = Vec::new();
    for &variant in &config.variants {
        for arm in Arm::ALL {
            let sel: Vec<&ArmOutcome> = outcomes
                .iter()
                .filter(|o| o.variant == variant && o.arm == arm)
                .collect();
            let r1: Vec<(u64, f64)> = sel.iter().map(|o| (o.replicate, o.mean_r1)).collect();
            let r2: Vec<(u64, f64)> = sel.iter().map(|o| (o.replicate, o.mean_r2)).collect();
            summaries.push(ArmSummary {
                variant,
                arm,
                r1: aggregate_replicates(&r1)?,
                r2: aggregate_replicates(&r2)?,
            });
        }
    }
    Ok(EmpathyResult {
        outcomes,
        summaries,
    })
}
