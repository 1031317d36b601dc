//! Plain-text `key = value` configuration with dotted section keys.
//!
//! Blank lines and lines starting with `#` are ignored. Every key has a
//! default; unknown keys are rejected. Later assignments win, so a file can
//! be followed by command-line overrides.

use std::path::Path;

use crate::agent::AgentMode;
use crate::empathy::{Commitment, Normalization};
use crate::env::{LayeredVariant, TwoAgentVariant};
use crate::error::{Error, Result};
use crate::experiments::{DetectConfig, EmpathyConfig, FosterConfig, TableCounting};

/// Resolved settings for every experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// Layered variants the fostering experiment runs, one result each.
    pub foster_variants: Vec<LayeredVariant>,
    pub foster: FosterConfig,
    pub detect: DetectConfig,
    pub empathy: EmpathyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            foster_variants: LayeredVariant::ALL.to_vec(),
            foster: FosterConfig::default(),
            detect: DetectConfig::default(),
            empathy: EmpathyConfig::default(),
        }
    }
}

pub const KEYS: &[&str] = &[
    "seed",
    "foster.env.variant",
    "foster.env.m",
    "foster.env.n",
    "foster.t1",
    "foster.t2",
    "foster.t_eval",
    "foster.modes",
    "foster.replicates",
    "foster.sarsa.alpha",
    "foster.sarsa.gamma",
    "foster.sarsa.epsilon",
    "foster.sarsa.gamma_m",
    "detect.env.variant",
    "detect.env.states",
    "detect.env.actions1",
    "detect.env.actions2",
    "detect.horizon",
    "detect.eval_every",
    "detect.coding.bits_per_param",
    "detect.coding.program_bits",
    "detect.coding.tables",
    "detect.second.initial_q_max",
    "detect.replicates",
    "detect.sarsa.alpha",
    "detect.sarsa.gamma",
    "detect.sarsa.epsilon",
    "empathy.env.variant",
    "empathy.env.states",
    "empathy.env.actions1",
    "empathy.env.actions2",
    "empathy.schedule.block_len",
    "empathy.schedule.rounds",
    "empathy.schedule.commitment",
    "empathy.normalization",
    "empathy.lambda_w",
    "empathy.exploit_steps",
    "empathy.replicates",
    "empathy.sarsa.alpha",
    "empathy.sarsa.gamma",
    "empathy.sarsa.epsilon",
];

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse {value:?}")))
}

fn list<T>(key: &str, value: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    let items = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(s).ok_or_else(|| Error::config(key, format!("unknown value {s:?}"))))
        .collect::<Result<Vec<T>>>()?;
    if items.is_empty() {
        return Err(Error::config(key, "at least one value is required"));
    }
    Ok(items)
}

fn join<T>(items: &[T], name: impl Fn(&T) -> String) -> String {
    items.iter().map(name).collect::<Vec<_>>().join(",")
}

fn layered(s: &str) -> Option<LayeredVariant> {
    s.parse::<u8>().ok().and_then(LayeredVariant::from_number)
}

impl RunConfig {
    /// Assigns one key. Values are checked for syntax here and for range in
    /// [`RunConfig::validate`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let (f, d, e) = (&mut self.foster, &mut self.detect, &mut self.empathy);
        match key {
            "seed" => self.seed = num(key, v)?,
            "foster.env.variant" => self.foster_variants = list(key, v, layered)?,
            "foster.env.m" => f.levels = num(key, v)?,
            "foster.env.n" => f.width = num(key, v)?,
            "foster.t1" => f.stage1_steps = num(key, v)?,
            "foster.t2" => f.stage2_steps = num(key, v)?,
            "foster.t_eval" => f.eval_steps = num(key, v)?,
            "foster.modes" => f.modes = list(key, v, AgentMode::parse)?,
            "foster.replicates" => f.replicates = num(key, v)?,
            "foster.sarsa.alpha" => f.params.alpha = num(key, v)?,
            "foster.sarsa.gamma" => f.params.gamma = num(key, v)?,
            "foster.sarsa.epsilon" => f.params.epsilon = num(key, v)?,
            "foster.sarsa.gamma_m" => f.params.gamma_m = num(key, v)?,
            "detect.env.variant" => d.variants = list(key, v, TwoAgentVariant::parse)?,
            "detect.env.states" => d.shape.n_states = num(key, v)?,
            "detect.env.actions1" => d.shape.actions1 = num(key, v)?,
            "detect.env.actions2" => d.shape.actions2 = num(key, v)?,
            "detect.horizon" => d.horizon = num(key, v)?,
            "detect.eval_every" => d.eval_every = num(key, v)?,
            "detect.coding.bits_per_param" => d.coding.bits_per_param = num(key, v)?,
            "detect.coding.program_bits" => d.coding.sarsa_program_bits = num(key, v)?,
            "detect.coding.tables" => {
                d.tables = TableCounting::parse(v)
                    .ok_or_else(|| Error::config(key, "expected support or full"))?
            }
            "detect.second.initial_q_max" => d.initial_q_max = num(key, v)?,
            "detect.replicates" => d.replicates = num(key, v)?,
            "detect.sarsa.alpha" => d.params.alpha = num(key, v)?,
            "detect.sarsa.gamma" => d.params.gamma = num(key, v)?,
            "detect.sarsa.epsilon" => d.params.epsilon = num(key, v)?,
            "empathy.env.variant" => e.variants = list(key, v, TwoAgentVariant::parse)?,
            "empathy.env.states" => e.shape.n_states = num(key, v)?,
            "empathy.env.actions1" => e.shape.actions1 = num(key, v)?,
            "empathy.env.actions2" => e.shape.actions2 = num(key, v)?,
            "empathy.schedule.block_len" => e.schedule.block_len = num(key, v)?,
            "empathy.schedule.rounds" => e.schedule.rounds = num(key, v)?,
            "empathy.schedule.commitment" => {
                e.schedule.commitment = Commitment::parse(v)
                    .ok_or_else(|| Error::config(key, "expected round-robin or randomized"))?
            }
            "empathy.normalization" => {
                e.normalization = Normalization::parse(v)
                    .ok_or_else(|| Error::config(key, "expected none or max-abs"))?
            }
            "empathy.lambda_w" => e.params.lambda_w = num(key, v)?,
            "empathy.exploit_steps" => e.exploit_steps = num(key, v)?,
            "empathy.replicates" => e.replicates = num(key, v)?,
            "empathy.sarsa.alpha" => e.params.alpha = num(key, v)?,
            "empathy.sarsa.gamma" => e.params.gamma = num(key, v)?,
            "empathy.sarsa.epsilon" => e.params.epsilon = num(key, v)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        self.sync_seed();
        Ok(())
    }

    fn sync_seed(&mut self) {
        self.foster.seed = self.seed;
        self.detect.seed = self.seed;
        self.empathy.seed = self.seed;
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.sync_seed();
    }

    /// Overrides the replicate count of every experiment.
    pub fn set_replicates(&mut self, n: usize) {
        self.foster.replicates = n;
        self.detect.replicates = n;
        self.empathy.replicates = n;
    }

    /// Applies the lines of a configuration text in order.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split_once('#').map_or(raw, |(before, _)| before).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    /// Applies a `key=value` override as given on the command line.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| {
            Error::config(assignment.trim(), "override must have the form key=value")
        })?;
        self.set(key.trim(), value)
    }

    /// Reads a configuration file, or the `config.*` entries of a run
    /// manifest, so that a run can be repeated from its manifest.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if text.starts_with("status = ") {
            return Self::from_manifest_text(&text);
        }
        let mut c = Self::default();
        c.apply_text(&text)?;
        Ok(c)
    }

    pub fn from_manifest_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (i, line) in text.lines().enumerate() {
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: "expected key = value".into(),
            })?;
            if let Some(key) = k.trim().strip_prefix("config.") {
                c.set(key, v)?;
            }
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for v in &self.foster_variants {
            FosterConfig {
                variant: *v,
                ..self.foster.clone()
            }
            .validate()?;
        }
        self.detect.validate()?;
        self.empathy.validate()
    }

    /// The fostering configuration for one variant.
    pub fn foster_for(&self, variant: LayeredVariant) -> FosterConfig {
        FosterConfig {
            variant,
            ..self.foster.clone()
        }
    }

    /// Every key with its resolved value, in [`KEYS`] order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let (f, d, e) = (&self.foster, &self.detect, &self.empathy);
        KEYS.iter()
            .map(|&key| {
                let value = match key {
                    "seed" => self.seed.to_string(),
                    "foster.env.variant" => join(&self.foster_variants, |v| v.number().to_string()),
                    "foster.env.m" => f.levels.to_string(),
                    "foster.env.n" => f.width.to_string(),
                    "foster.t1" => f.stage1_steps.to_string(),
                    "foster.t2" => f.stage2_steps.to_string(),
                    "foster.t_eval" => f.eval_steps.to_string(),
                    "foster.modes" => join(&f.modes, |m| m.name().to_string()),
                    "foster.replicates" => f.replicates.to_string(),
                    "foster.sarsa.alpha" => f.params.alpha.to_string(),
                    "foster.sarsa.gamma" => f.params.gamma.to_string(),
                    "foster.sarsa.epsilon" => f.params.epsilon.to_string(),
                    "foster.sarsa.gamma_m" => f.params.gamma_m.to_string(),
                    "detect.env.variant" => join(&d.variants, |v| v.name().to_string()),
                    "detect.env.states" => d.shape.n_states.to_string(),
                    "detect.env.actions1" => d.shape.actions1.to_string(),
                    "detect.env.actions2" => d.shape.actions2.to_string(),
                    "detect.horizon" => d.horizon.to_string(),
                    "detect.eval_every" => d.eval_every.to_string(),
                    "detect.coding.bits_per_param" => d.coding.bits_per_param.to_string(),
                    "detect.coding.program_bits" => d.coding.sarsa_program_bits.to_string(),
                    "detect.coding.tables" => d.tables.name().to_string(),
                    "detect.second.initial_q_max" => d.initial_q_max.to_string(),
                    "detect.replicates" => d.replicates.to_string(),
                    "detect.sarsa.alpha" => d.params.alpha.to_string(),
                    "detect.sarsa.gamma" => d.params.gamma.to_string(),
                    "detect.sarsa.epsilon" => d.params.epsilon.to_string(),
                    "empathy.env.variant" => join(&e.variants, |v| v.name().to_string()),
                    "empathy.env.states" => e.shape.n_states.to_string(),
                    "empathy.env.actions1" => e.shape.actions1.to_string(),
                    "empathy.env.actions2" => e.shape.actions2.to_string(),
                    "empathy.schedule.block_len" => e.schedule.block_len.to_string(),
                    "empathy.schedule.rounds" => e.schedule.rounds.to_string(),
                    "empathy.schedule.commitment" => e.schedule.commitment.name().to_string(),
                    "empathy.normalization" => e.normalization.name().to_string(),
                    "empathy.lambda_w" => e.params.lambda_w.to_string(),
                    "empathy.exploit_steps" => e.exploit_steps.to_string(),
                    "empathy.replicates" => e.replicates.to_string(),
                    "empathy.sarsa.alpha" => e.params.alpha.to_string(),
                    "empathy.sarsa.gamma" => e.params.gamma.to_string(),
                    "empathy.sarsa.epsilon" => e.params.epsilon.to_string(),
                    other => unreachable!("key {other} has no getter"),
                };
                (key, value)
            })
            .collect()
    }

    /// Renders the resolved configuration in the input format.
    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
