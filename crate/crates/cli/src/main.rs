//! `validity`: screen binary confidence probes before interpreting them.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use validity_core::classify::Grid;
use validity_core::par::Execution;
use validity_core::report::{
    cmd_plot, cmd_psych, cmd_screen, cmd_sweep, cmd_synthetic, CommandOutput, Figure, Format, RunConfig, EXIT_FAILURE,
};
use validity_core::synthetic::{Policy, PolicySpec};

#[derive(Parser)]
#[command(name = "validity", version, about = "Response-validity screening for binary confidence probes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute validity profiles and tiers. Exits 2 when any model is Tier 1.
    Screen(Common),
    /// Validate the thresholds against synthetic response policies.
    Synthetic {
        #[command(flatten)]
        common: Common,
        /// Monte Carlo iterations per policy.
        #[arg(long)]
        iterations: Option<usize>,
        /// Also write one generated dataset per policy and matching norms.
        #[arg(long)]
        emit_battery: bool,
        /// Comma-separated subset of policies to run.
        #[arg(long, value_delimiter = ',')]
        policies: Vec<Policy>,
    },
    /// Full psychometric battery.
    Psych {
        #[command(flatten)]
        common: Common,
        /// Bootstrap resamples.
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Render an SVG figure from a JSON report.
    Plot {
        /// JSON report written by screen, psych or synthetic.
        #[arg(long)]
        report: PathBuf,
        /// tiered, sensitivity, contingency or synthetic.
        #[arg(long)]
        figure: Figure,
        /// Output directory, or the SVG file itself when the path ends in `.svg`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run Tier 1 over a grid of L and F cut-offs.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `lo:hi:step` or a single value.
        #[arg(long)]
        l_grid: Option<String>,
        #[arg(long)]
        f_grid: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory of probe CSVs.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Item norms JSON.
    #[arg(long)]
    norms: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write only this format (json, md, csv).
    #[arg(long)]
    format: Option<Format>,
    #[arg(long)]
    l_min: Option<f64>,
    #[arg(long)]
    f_min: Option<f64>,
    #[arg(long)]
    fp_min: Option<f64>,
    /// Run every analysis on the calling thread.
    #[arg(long)]
    sequential: bool,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(d) = &self.data {
            c.data_dir = Some(d.clone());
        }
        if let Some(n) = &self.norms {
            c.norms_path = Some(n.clone());
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(o) = &self.out {
            c.output.path = Some(o.clone());
        }
        if self.format.is_some() {
            c.output.format = self.format;
        }
        if let Some(v) = self.l_min {
            c.thresholds.l_min = v;
        }
        if let Some(v) = self.f_min {
            c.thresholds.f_min = v;
        }
        if let Some(v) = self.fp_min {
            c.thresholds.fp_min = v;
        }
        if self.sequential {
            c.execution = Execution::Sequential;
        }
        c.validate()?;
        Ok(c)
    }
}

fn out_dir(config: &RunConfig) -> PathBuf {
    config.output.path.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn emit(output: &CommandOutput, dir: &Path) -> Result<()> {
    for path in output.write_to(dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    let output = match cli.command {
        Command::Screen(common) => {
            let config = common.config()?;
            let out = cmd_screen(&config)?;
            emit(&out, &out_dir(&config))?;
            out
        }
        Command::Synthetic { common, iterations, emit_battery, policies } => {
            let mut config = common.config()?;
            if let Some(n) = iterations {
                config.synthetic_iterations = n;
            }
            config.emit_battery |= emit_battery;
            if !policies.is_empty() {
                config.policies = policies.into_iter().map(PolicySpec::new).collect();
            }
            let out = cmd_synthetic(&config)?;
            emit(&out, &out_dir(&config))?;
            out
        }
        Command::Psych { common, iterations } => {
            let mut config = common.config()?;
            if let Some(n) = iterations {
                config.bootstrap_iterations = n;
            }
            let out = cmd_psych(&config)?;
            emit(&out, &out_dir(&config))?;
            out
        }
        Command::Plot { report, figure, out } => {
            let output = cmd_plot(&report, figure)?;
            match out {
                Some(path) if path.extension().is_some_and(|e| e == "svg") => {
                    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                        std::fs::create_dir_all(parent).with_context(|| parent.display().to_string())?;
                    }
                    std::fs::write(&path, &output.artifacts[0].bytes).with_context(|| path.display().to_string())?;
                    println!("wrote {}", path.display());
                }
                other => emit(&output, &other.unwrap_or_else(|| PathBuf::from(".")))?,
            }
            output
        }
        Command::Sweep { common, l_grid, f_grid } => {
            let config = common.config()?;
            let l = match l_grid {
                Some(s) => Grid::parse(&s)?,
                None => Grid::single(config.thresholds.l_min),
            };
            let f = match f_grid {
                Some(s) => Grid::parse(&s)?,
                None => Grid::single(config.thresholds.f_min),
            };
            let out = cmd_sweep(&config, &l, &f)?;
            emit(&out, &out_dir(&config))?;
            out
        }
    };
    println!("{}", output.summary);
    Ok(output.exit_code)
}

fn main() -> ExitCode {
    // Usage errors exit 1 rather than clap's 2, which is reserved for Tier 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_FAILURE as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAILURE as u8)
        }
    }
}
