//! Runs experiment commands and writes their artifacts.

use std::path::Path;

use crate::config::RunConfig;
use crate::env::{
    generate_layered_env, generate_two_agent_env, MarkovEnv, TwoAgentEnv, TwoAgentVariant,
};
use crate::error::{Error, Result};
use crate::experiments::{
    detect, run_detection_experiment, run_empathy_experiment, run_foster_experiment, FosterResult,
};
use crate::output::{self, OutputDir};
use crate::seed::{derive_seed, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Foster,
    Detect,
    Empathy,
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Foster => "foster",
            Command::Detect => "detect",
            Command::Empathy => "empathy",
            Command::All => "all",
        }
    }
}

/// Runs `command`, writing CSVs, summaries, plots and the manifest into
/// `out`. Returns a short human-readable report.
pub fn run(command: Command, config: &RunConfig, out: &mut OutputDir) -> Result<String> {
    config.validate()?;
    out.write_manifest(command.name(), config, false)?;
    let mut report = String::new();
    if matches!(command, Command::Foster | Command::All) {
        report += &run_foster(config, out)?;
    }
    if matches!(command, Command::Detect | Command::All) {
        report += &run_detect(config, out)?;
    }
    if matches!(command, Command::Empathy | Command::All) {
        report += &run_empathy(config, out)?;
    }
    out.write_manifest(command.name(), config, true)?;
    Ok(report)
}

fn run_foster(config: &RunConfig, out: &mut OutputDir) -> Result<String> {
    let results = config
        .foster_variants
        .iter()
        .map(|&v| run_foster_experiment(&config.foster_for(v)))
        .collect::<Result<Vec<FosterResult>>>()?;
    out.write("foster.csv", &output::foster_csv(&results))?;
    out.write("foster_summary.csv", &output::foster_summary_csv(&results))?;
    let table = output::foster_summary_table(&results);
    out.write("foster_summary.txt", &table)?;
    Ok(table)
}

fn run_detect(config: &RunConfig, out: &mut OutputDir) -> Result<String> {
    let result = run_detection_experiment(&config.detect)?;
    out.write("detect.csv", &output::detect_csv(&result))?;
    for (name, text) in output::detect_curve_files(&result) {
        out.write(&name, &text)?;
    }
    let summary = output::detect_summary_csv(&result);
    out.write("detect_summary.csv", &summary)?;
    for v in TwoAgentVariant::ALL {
        if let Some(svg) = output::detect_svg(&result, v) {
            out.write(&format!("detect_{}.svg", v.name()), &svg)?;
        }
    }
    Ok(summary)
}

fn run_empathy(config: &RunConfig, out: &mut OutputDir) -> Result<String> {
    let result = run_empathy_experiment(&config.empathy)?;
    out.write("empathy.csv", &output::empathy_csv(&result))?;
    let summary = output::empathy_summary_csv(&result);
    out.write("empathy_summary.csv", &summary)?;
    out.write("empathy.svg", &output::empathy_svg(&result))?;
    Ok(summary)
}

/// Parses and validates an environment file of either family, returning a
/// one-line description.
pub fn validate_env_file(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim_start().starts_with("two-agent-env") {
        let e = TwoAgentEnv::from_text(&text)?;
        e.validate()?;
        Ok(format!(
            "two-agent {}, {} states",
            e.variant().name(),
            e.n_states()
        ))
    } else {
        let e = MarkovEnv::from_text(&text)?;
        e.validate()?;
        Ok(format!(
            "layered variant {}, {} states",
            e.variant().number(),
            e.n_states()
        ))
    }
}

/// Generates the replicate-0 environment of every configured variant,
/// validates it and writes its text form under `envs/`.
pub fn export_envs(config: &RunConfig, out: &mut OutputDir) -> Result<Vec<String>> {
    config.validate()?;
    let mut names = Vec::new();
    for &v in &config.foster_variants {
        let f = config.foster_for(v);
        let env = generate_layered_env(
            v,
            f.levels,
            f.width,
            derive_seed(f.seed, 0, Purpose::EnvGeneration),
        )?;
        env.validate()?;
        let name = format!("envs/layered_v{}.txt", v.number());
        out.write(&name, &env.to_text())?;
        names.push(name);
    }
    for &v in &config.detect.variants {
        let d = &config.detect;
        let env = generate_two_agent_env(d.shape, v, detect::env_seed(d, v, 0))?;
        env.validate()?;
        let name = format!("envs/two_agent_{}.txt", v.name());
        out.write(&name, &env.to_text())?;
        names.push(name);
    }
    out.write_manifest("validate-env", config, true)?;
    Ok(names)
}
