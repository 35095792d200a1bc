use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use ecdelay::cli::audit::audit;
use ecdelay::cli::config::{RawConfig, RunSpec};
use ecdelay::cli::presets::{self, PRESETS};
use ecdelay::cli::fmt_f64;
use ecdelay::engine::{run, strata};

#[derive(Parser)]
#[command(name = "ecdelay", version, about = "Delay simulator for erasure-coded file delivery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of arrivals per chain.
    #[arg(long, global = true)]
    iters: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the configured policies; CSV of conditional mean delays.
    Run,
    /// Run a named experiment: filesize, codingrate, chunkscaling.
    Preset { name: String },
    /// Ordering and bound checks, one line per check.
    Audit {
        /// Route the WF slot with Balanced Random (the checks should fail).
        #[arg(long)]
        mislabel_br_as_wf: bool,
    },
}

fn load(cli: &Cli, base: RawConfig) -> Result<RawConfig> {
    let mut raw = base;
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        raw = raw.overlay(RawConfig::from_toml(&text)?);
    }
    let flags = RawConfig { seed: cli.seed, iters: cli.iters, out: cli.out.clone(), ..Default::default() };
    if flags.iters.is_some() && raw.warmup.is_some() {
        raw.warmup = None;
    }
    Ok(raw.overlay(flags))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn audit_defaults() -> Result<RawConfig> {
    RawConfig::from_toml(
        r#"
        m = 50
        pi = "binomial(0.1)"
        alpha = "k+2"
        rho = 0.7
        c = 10.0
        mu = 1.0
        "#,
    )
}

fn execute(cli: &Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.command {
        Command::Run => {
            let raw = load(cli, RawConfig::default())?;
            let spec = RunSpec::from_raw(raw)?;
            let cfg = spec.experiment()?;
            let out = run(&cfg)?;
            if let Some(w) = &out.summary.warning {
                eprintln!("warning: {w}");
            }
            let mut text = String::from("policy,k,count,mean_delay,ci\n");
            for r in &out.runs {
                let mut counts = std::collections::BTreeMap::new();
                for rec in &r.records {
                    *counts.entry(rec.k).or_insert(0u64) += 1;
                }
                for (k, est) in strata(&r.records) {
                    text.push_str(&format!(
                        "{},{},{},{},{}\n",
                        r.policy.label(),
                        k,
                        counts[&k],
                        fmt_f64(est.mean),
                        fmt_f64(est.ci_half_width)
                    ));
                }
            }
            emit(spec.out.as_deref(), &text)?;
            Ok(true)
        }
        Command::Preset { name } => {
            if !PRESETS.contains(&name.as_str()) {
                anyhow::bail!("unknown preset {name:?}; available: {}", PRESETS.join(", "));
            }
            let raw = load(cli, presets::defaults(name)?)?;
            let out = raw.out.clone();
            let text = presets::run_preset(name, raw)?;
            emit(out.as_deref(), &text)?;
            Ok(true)
        }
        Command::Audit { mislabel_br_as_wf } => {
            let raw = load(cli, audit_defaults()?)?;
            let spec = RunSpec::from_raw(raw)?;
            let report = audit(&spec, *mislabel_br_as_wf)?;
            emit(spec.out.as_deref(), &report.to_string())?;
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
