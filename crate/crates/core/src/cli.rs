//! Command-line front end. `run_command` is the whole program minus process exit.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::estimate::{empirical_vr, naive_estimate, one_step_crossfit, one_step_fixed};
use crate::io::{emit, load_bench_dataset, render_sweep, write_report, Mode, ReportRow, RunConfig};
use crate::metric::MetricKind;
use crate::ranking::{run_ranking_experiment, sweep, Permutation, RankMethod, SweepAxis};
use crate::simulate::gen_sim_dataset;
use crate::stream::Stream;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONTRACT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "eifeval", version, about = "Efficient-influence estimators for LLM evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one dataset per model and compare naive and one-step estimates.
    Simulate(Common),
    /// Ranking experiment over a grid of one simulation parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        axis: Option<SweepAxis>,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Ranking experiment at a single configuration.
    Rank(Common),
    /// Estimate accuracy on a benchmark JSONL file with fixed tau predictions.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Benchmark file (JSONL).
        input: Option<PathBuf>,
        /// Ground-truth accuracy as a fraction, for the improvement column.
        #[arg(long)]
        gt: Option<f64>,
        #[arg(long, default_value = "model")]
        model: String,
    },
    /// Check a benchmark file and/or configuration without running anything.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
        input: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "m-samples")]
    m_samples: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self, mode: Mode) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(m) = c.mode {
            if m != mode {
                return Err(Error::InvalidConfig(format!(
                    "config is for mode {m:?}, but {mode:?} was requested"
                )));
            }
        }
        if let Some(v) = self.seed {
            c.sim.seed = v;
        }
        if let Some(v) = self.n {
            c.sim.n = v;
        }
        if let Some(v) = self.m_samples {
            c.sim.m = v;
        }
        if let Some(v) = self.folds {
            c.sim.folds = v;
        }
        if let Some(v) = self.trials {
            c.sim.trials = v;
        }
        if let Some(v) = self.level {
            c.level = v;
        }
        if let Some(v) = &self.out {
            c.output = Some(v.clone());
        }
        c.validate()?;
        Ok(c)
    }
}

/// Parses `argv` (including the program name) and runs the command.
///
/// Returns the process exit code: 0 on success, 1 on a data or contract
/// error, 2 on a usage error.
pub fn run_command<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::InvalidConfig(_) => EXIT_USAGE,
                _ => EXIT_CONTRACT,
            }
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Simulate(common) => simulate(&common.resolve(Mode::Simulate)?, out),
        Command::Rank(common) => rank(&common.resolve(Mode::Rank)?, out),
        Command::Sweep { common, axis, grid } => {
            let mut c = common.resolve(Mode::Sweep)?;
            if let Some(a) = axis {
                c.axis = Some(a);
            }
            if let Some(g) = grid {
                c.grid = g;
            }
            run_sweep(&c, out)
        }
        Command::Estimate {
            common,
            input,
            gt,
            model,
        } => {
            let mut c = common.resolve(Mode::Estimate)?;
            if input.is_some() {
                c.input = input;
            }
            c.validate()?;
            if let Some(g) = gt {
                if !(0.0..=1.0).contains(&g) {
                    return Err(Error::InvalidConfig(format!(
                        "--gt is a fraction in [0, 1], got {g}"
                    )));
                }
            }
            estimate(&c, gt, &model, out)
        }
        Command::Validate { config, input } => validate(config.as_deref(), input.as_deref(), out),
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn simulate(c: &RunConfig, out: &mut dyn Write) -> Result<()> {
    c.sim.validate()?;
    let stream = Stream::trial(c.sim.seed, 0);
    let mut table = csv::Writer::from_writer(Vec::new());
    table
        .write_record([
            "model",
            "sigma_sq",
            "naive",
            "onestep",
            "se_naive",
            "se_onestep",
            "var_naive_theory",
            "var_onestep_theory",
            "vr_theory",
            "vr_empirical",
        ])
        .map_err(csv_err)?;
    for model in 0..c.sim.models() {
        let data = gen_sim_dataset(&c.sim, model, stream)?;
        let phis: Vec<f64> = data.iter().map(|r| (r.y - r.g).powi(2)).collect();
        let naive = naive_estimate(&phis, c.level)?;
        let (one_step, parts) = one_step_crossfit(
            &data,
            MetricKind::SquaredError,
            c.sim.folds,
            c.level,
            stream.child(model as u64),
        )?;
        let theory = c.sim.oracle_params(model)?.variances();
        let vr = empirical_vr(&parts.phi, &parts.psi).unwrap_or(f64::NAN);
        writeln!(out, "model {} (sigma^2 = {})", model + 1, c.sim.sigma_sq_per_model[model])
            .map_err(io_err)?;
        writeln!(out, "{naive}").map_err(io_err)?;
        writeln!(out, "{one_step}").map_err(io_err)?;
        writeln!(
            out,
            "  variance reduction  empirical {vr:.4}  theoretical {:.4}\n",
            theory.vr
        )
        .map_err(io_err)?;
        table
            .write_record([
                (model + 1).to_string(),
                c.sim.sigma_sq_per_model[model].to_string(),
                naive.theta_hat.to_string(),
                one_step.theta_hat.to_string(),
                naive.std_error.to_string(),
                one_step.std_error.to_string(),
                theory.var_naive.to_string(),
                theory.var_onestep.to_string(),
                theory.vr.to_string(),
                vr.to_string(),
            ])
            .map_err(csv_err)?;
    }
    if let Some(path) = &c.output {
        let bytes = table.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidInput(format!("csv encoding: {e}"))
}

fn rank(c: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let truth = Permutation::identity(c.sim.models());
    let result = run_ranking_experiment(&c.sim, &truth)?;
    writeln!(out, "trials={} truth={truth}", c.sim.trials).map_err(io_err)?;
    for method in RankMethod::ALL {
        let s = result.get(method);
        writeln!(
            out,
            "{method:<9} exact_match {:.4}  kendall_mean {:.4}",
            s.exact_match, s.kendall_mean
        )
        .map_err(io_err)?;
    }
    if let Some(path) = &c.output {
        let json = serde_json::to_string_pretty(&result)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn run_sweep(c: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let axis = c
        .axis
        .ok_or_else(|| Error::InvalidConfig("sweep needs --axis or \"axis\" in the config".into()))?;
    if c.grid.is_empty() {
        return Err(Error::InvalidConfig("sweep needs --grid or \"grid\" in the config".into()));
    }
    let results = sweep(&c.sim, axis, &c.grid)?;
    emit(&render_sweep(axis, &results), c.output.as_deref(), out)
}

fn estimate(c: &RunConfig, gt: Option<f64>, model: &str, out: &mut dyn Write) -> Result<()> {
    let input = c
        .input
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig("estimate needs an input file".into()))?;
    let records = load_bench_dataset(input)?;
    let phis: Vec<f64> = records.iter().map(|r| r.phi_value()).collect();
    let naive = naive_estimate(&phis, c.level)?;
    let (one_step, parts) = one_step_fixed(&records, c.level)?;
    writeln!(out, "{naive}").map_err(io_err)?;
    writeln!(out, "{one_step}").map_err(io_err)?;
    if parts.clamped_predictions > 0 {
        writeln!(
            out,
            "  note: {} tau predictions were clamped to [0, 1]",
            parts.clamped_predictions
        )
        .map_err(io_err)?;
    }
    let row = ReportRow {
        model: model.to_string(),
        gt,
        naive,
        one_step,
    };
    if let Some(improv) = row.improvement_pct() {
        writeln!(out, "  improvement {improv:+.2} pp").map_err(io_err)?;
    }
    if let Some(path) = &c.output {
        write_report(std::slice::from_ref(&row), path)?;
    }
    Ok(())
}

fn validate(config: Option<&Path>, input: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    if config.is_none() && input.is_none() {
        return Err(Error::InvalidConfig("nothing to validate: pass a file or --config".into()));
    }
    if let Some(path) = config {
        let c = RunConfig::load(path)?;
        c.validate()?;
        c.sim.validate()?;
        writeln!(out, "{}: ok", path.display()).map_err(io_err)?;
    }
    if let Some(path) = input {
        let records = load_bench_dataset(path)?;
        writeln!(
            out,
            "{}: ok, {} records, M = {}",
            path.display(),
            records.len(),
            records[0].m()
        )
        .map_err(io_err)?;
    }
    Ok(())
}
