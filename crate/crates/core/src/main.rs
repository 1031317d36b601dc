use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use valuelearn::config::RunConfig;
use valuelearn::output::OutputDir;
use valuelearn::runner::{self, Command};
use valuelearn::Result;

#[derive(Parser)]
#[command(
    name = "valuelearn",
    version,
    about = "Value fostering, agent detection and empathy experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fostered values on the layered loop environments.
    Foster(Common),
    /// Second-agent detection by description length.
    Detect(Common),
    /// Egoistic, direct and reconstructed-value first agents.
    Empathy(Common),
    /// All three experiments.
    All(Common),
    /// Validate environment files, or export generated environments when none are given.
    ValidateEnv {
        files: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Replicate count for every experiment.
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        for s in &self.set {
            c.apply_override(s)?;
        }
        if let Some(seed) = self.seed {
            c.set_seed(seed);
        }
        if let Some(n) = self.replicates {
            c.set_replicates(n);
        }
        c.validate()?;
        Ok(c)
    }
}

fn execute(cli: Cli) -> Result<()> {
    let (command, common) = match &cli.command {
        Cmd::Foster(c) => (Command::Foster, c),
        Cmd::Detect(c) => (Command::Detect, c),
        Cmd::Empathy(c) => (Command::Empathy, c),
        Cmd::All(c) => (Command::All, c),
        Cmd::ValidateEnv { files, common } => {
            if files.is_empty() {
                let config = common.resolve()?;
                let mut out = OutputDir::prepare(&common.out)?;
                for name in runner::export_envs(&config, &mut out)? {
                    println!("ok {}", out.root().join(name).display());
                }
            } else {
                for f in files {
                    println!("ok {}: {}", f.display(), runner::validate_env_file(f)?);
                }
            }
            return Ok(());
        }
    };
    let config = common.resolve()?;
    let mut out = OutputDir::prepare(&common.out)?;
    let report = runner::run(command, &config, &mut out)?;
    print!("{report}");
    println!("wrote {}", out.root().display());
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
