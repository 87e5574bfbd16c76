//! Command-line entry point: `train`, `eval`, `sweep`, `bench`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rancb::config::ConfigFile;
use rancb::envs::{Env, EnvBox};
use rancb::harness::{
    self, bar_chart_svg, latency_bench, line_chart_svg, load_checkpoint, percentile,
    run_seed, save_checkpoint, sweep, BarGroup, Checkpoint, RunLog, Series, SweepAxis,
};
use rancb::{Error, Result};

#[derive(Parser)]
#[command(name = "rancb", version, about = "Risk-aware constrained contextual bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Run a single seed (overrides the config seed list).
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated seed list (overrides the config seed list).
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Dotted-path config override, e.g. `agent.lambda=5.0` (repeatable).
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cap on concurrently running cells.
    #[arg(long)]
    jobs: Option<usize>,
    /// Overwrite existing artifacts in the output directory.
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train per-seed agents and write logs, summaries, and checkpoints.
    Train(CommonArgs),
    /// Run inference from a checkpoint, optionally at a different risk level.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// Checkpoint produced by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Risk level for inference (member of the constraint quantile set).
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Sweep one axis over a value list and aggregate across seeds.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Axis: sigma_env | alpha | lambda | epsilon | dim.
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated axis values (overrides `sweep.values`).
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
    /// Measure single-inference latency.
    Bench {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of timed trials.
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(common) => cmd_train(&common),
        Command::Eval { common, checkpoint, alpha } => cmd_eval(&common, &checkpoint, alpha),
        Command::Sweep { common, axis, values } => cmd_sweep(&common, axis.as_deref(), values),
        Command::Bench { common, trials } => cmd_bench(&common, trials),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}

fn parse_overrides(raw: &[String]) -> Result<Vec<(String, String)>> {
    raw.iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::config(format!("override {s:?} must look like key.path=value")))
        })
        .collect()
}

fn load_config(common: &CommonArgs) -> Result<ConfigFile> {
    let overrides = parse_overrides(&common.overrides)?;
    ConfigFile::load(&common.config, &overrides)
}

fn configure_jobs(common: &CommonArgs) -> Result<()> {
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(Error::config("--jobs must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::config(format!("--jobs: {e}")))?;
    }
    Ok(())
}

/// Create (or, with `--force`, reuse) the output directory. A non-empty
/// existing directory is refused without `--force`.
fn prepare_out_dir(config: &ConfigFile, common: &CommonArgs) -> Result<PathBuf> {
    let dir = common.out.clone().unwrap_or_else(|| config.output_dir());
    if dir.exists() {
        let non_empty = std::fs::read_dir(&dir)?.next().is_some();
        if non_empty && !common.force {
            return Err(Error::config(format!(
                "output directory {} is not empty; pass --force to overwrite",
                dir.display()
            )));
        }
    } else {
        std::fs::create_dir_all(&dir)?;
    }
    Ok(dir)
}

fn effective_seeds(config_seeds: Vec<u64>, common: &CommonArgs) -> Vec<u64> {
    if let Some(seed) = common.seed {
        vec![seed]
    } else if let Some(seeds) = &common.seeds {
        seeds.clone()
    } else {
        config_seeds
    }
}

/// Reproducibility sidecar: effective config plus the seed-splitting rule.
fn write_metadata(dir: &Path, config: &ConfigFile, extra: serde_json::Value) -> Result<()> {
    let meta = serde_json::json!({
        "effective_config": serde_json::from_str::<serde_json::Value>(&config.to_pretty_json())?,
        "rng_splitting": {
            "rule": "ChaCha8 keyed by the run seed; stream 1 = environment, stream 2 = agent (init, exploration, replay)",
            "stream_env": harness::STREAM_ENV,
            "stream_agent": harness::STREAM_AGENT,
        },
        "extra": extra,
    });
    std::fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

fn gamma_chart(logs: &[RunLog]) -> String {
    let series = curve_series(logs, &|r| r.gamma, "accumulated violation");
    line_chart_svg("Accumulated constraint violation", "step", "Gamma_t", &series)
}

fn reward_chart(logs: &[RunLog]) -> String {
    let series = curve_series(logs, &|r| r.reward, "reward");
    line_chart_svg("Per-step reward", "step", "reward", &series)
}

/// Median curve with a 15th/85th percentile band across seeds.
fn curve_series(
    logs: &[RunLog],
    metric: &dyn Fn(&harness::StepRecord) -> f64,
    label: &str,
) -> Vec<Series> {
    if logs.is_empty() {
        return Vec::new();
    }
    let steps = logs.iter().map(|l| l.records.len()).min().unwrap_or(0);
    let stride = (steps / 400).max(1);
    let mut points = Vec::new();
    let mut band = Vec::new();
    for t in (0..steps).step_by(stride) {
        let vals: Vec<f64> = logs.iter().map(|l| metric(&l.records[t])).collect();
        points.push((t as f64, percentile(&vals, 50.0)));
        band.push((t as f64, percentile(&vals, 15.0), percentile(&vals, 85.0)));
    }
    vec![Series { label: label.to_string(), points, band: Some(band) }]
}

fn cmd_train(common: &CommonArgs) -> Result<()> {
    let config = load_config(common)?;
    configure_jobs(common)?;
    let mut spec = config.build_spec()?;
    spec.seeds = effective_seeds(spec.seeds, common);
    spec.validate()?;
    let dir = prepare_out_dir(&config, common)?;

    let mut logs = Vec::new();
    for &seed in &spec.seeds {
        let run = run_seed(&spec, seed)?;
        run.log.write_csv(&dir.join(format!("seed_{seed}.csv")))?;
        let steps = run.log.records.len();
        let ckpt = Checkpoint::new(seed, steps, run.context.clone(), run.agent, run.env);
        save_checkpoint(&dir.join(format!("checkpoint_seed_{seed}.json")), &ckpt)?;
        logs.push(run.log);
    }

    let summaries: Vec<&harness::Summary> = logs.iter().map(|l| &l.summary).collect();
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summaries)?)?;
    write_metadata(&dir, &config, serde_json::json!({ "command": "train", "seeds": spec.seeds }))?;
    if config.emit_charts() {
        std::fs::write(dir.join("gamma.svg"), gamma_chart(&logs))?;
        std::fs::write(dir.join("reward.svg"), reward_chart(&logs))?;
    }
    println!("train: {} seed(s) -> {}", logs.len(), dir.display());
    Ok(())
}

fn cmd_eval(common: &CommonArgs, checkpoint: &Path, alpha: Option<f64>) -> Result<()> {
    let config = load_config(common)?;
    configure_jobs(common)?;
    let spec = config.build_spec()?;
    let dir = prepare_out_dir(&config, common)?;

    let ckpt = load_checkpoint(checkpoint)?;
    let mut agent = ckpt.agent;
    let mut env = ckpt.env;
    if agent.context_dim() != spec.env.context_dim() || agent.action_dim() != spec.env.action_dim()
    {
        return Err(Error::config(format!(
            "checkpoint dims (context {}, action {}) do not match config env (context {}, action {})",
            agent.context_dim(),
            agent.action_dim(),
            spec.env.context_dim(),
            spec.env.action_dim()
        )));
    }
    if let Some(a) = alpha {
        agent.set_risk_alpha(a)?;
    }

    let defs = env.constraints();
    let epsilon = match &env {
        EnvBox::Ran(r) => Some(r.config().epsilon),
        _ => None,
    };
    let mut context = ckpt.context.clone();
    let mut records = Vec::new();
    let mut energies = Vec::new();
    let mut gamma = 0.0;
    let mut t = ckpt.step;
    harness::run_inference(
        &mut agent, &mut env, &mut context, spec.t_infer, &mut records, &mut energies, &mut gamma,
        &mut t,
    )?;
    let log = RunLog::summarize(ckpt.seed, records, &defs, epsilon, Some(energies));
    log.write_csv(&dir.join(format!("eval_seed_{}.csv", ckpt.seed)))?;
    let summary = serde_json::json!({
        "alpha": alpha,
        "checkpoint": checkpoint.display().to_string(),
        "summary": log.summary,
    });
    let text = serde_json::to_string_pretty(&summary)?;
    std::fs::write(dir.join("eval_summary.json"), &text)?;
    write_metadata(&dir, &config, serde_json::json!({ "command": "eval", "alpha": alpha }))?;
    println!("{text}");
    Ok(())
}

fn cmd_sweep(common: &CommonArgs, axis: Option<&str>, values: Option<Vec<f64>>) -> Result<()> {
    let config = load_config(common)?;
    configure_jobs(common)?;
    let mut spec = config.build_spec()?;
    spec.seeds = effective_seeds(spec.seeds, common);
    spec.validate()?;

    let axis: SweepAxis = match (axis, config.sweep.axis) {
        (Some(s), _) => s.parse()?,
        (None, Some(a)) => a,
        (None, None) => return Err(Error::config("sweep needs --axis or a `sweep.axis` config entry")),
    };
    let values = match (values, &config.sweep.values) {
        (Some(v), _) => v,
        (None, Some(v)) => v.clone(),
        (None, None) => return Err(Error::config("sweep needs --values or a `sweep.values` config entry")),
    };
    harness::validate_axis(&spec, axis, &values)?;
    let dir = prepare_out_dir(&config, common)?;

    let table = sweep(&spec, axis, &values)?;
    std::fs::write(dir.join("sweep.csv"), table.to_csv())?;
    std::fs::write(dir.join("sweep.json"), serde_json::to_string_pretty(&table)?)?;
    write_metadata(
        &dir,
        &config,
        serde_json::json!({ "command": "sweep", "axis": axis, "values": values, "seeds": spec.seeds }),
    )?;

    if config.emit_charts() {
        let bars: Vec<BarGroup> = table
            .cells
            .iter()
            .map(|c| BarGroup {
                label: format!("{}", c.value),
                value: c.mean_infer_violation.0,
                ci: c.mean_infer_violation.1,
            })
            .collect();
        std::fs::write(
            dir.join("violation_bars.svg"),
            bar_chart_svg(
                &format!("Inference violation vs {axis}"),
                "mean violation",
                &bars,
            ),
        )?;
        let reward_bars: Vec<BarGroup> = table
            .cells
            .iter()
            .map(|c| BarGroup {
                label: format!("{}", c.value),
                value: c.mean_infer_reward.0,
                ci: c.mean_infer_reward.1,
            })
            .collect();
        std::fs::write(
            dir.join("reward_bars.svg"),
            bar_chart_svg(&format!("Inference reward vs {axis}"), "mean reward", &reward_bars),
        )?;
        for cell in &table.cells {
            if !cell.logs.is_empty() {
                std::fs::write(
                    dir.join(format!("gamma_{}_{}.svg", axis, cell.value)),
                    gamma_chart(&cell.logs),
                )?;
            }
        }
    }
    println!("sweep: {} value(s) x {} seed(s) -> {}", values.len(), spec.seeds.len(), dir.display());
    Ok(())
}

fn cmd_bench(common: &CommonArgs, trials: usize) -> Result<()> {
    let config = load_config(common)?;
    let spec = config.build_spec()?;
    let seed = common.seed.unwrap_or_else(|| *spec.seeds.first().unwrap_or(&0));
    let mut env = spec.env.clone();
    let context = env.reset(seed);
    let mut agent = rancb::agents::Agent::new(spec.kind, &env, spec.agent.clone(), seed)?;
    let stats = latency_bench(&mut agent, &context, trials)?;
    let text = serde_json::to_string_pretty(&stats)?;
    if let Some(out) = &common.out {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join("bench.json"), &text)?;
    }
    println!("{text}");
    Ok(())
}
