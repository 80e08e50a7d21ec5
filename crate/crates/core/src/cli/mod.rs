//! Command-line surface: `train`, `eval`, `sweep`, `toy`, `gradcheck` and
//! `split`, all driven by one TOML configuration file plus `--set key=value`
//! overrides. Exit codes: 0 success, 1 runtime failure, 2 usage or validation.

mod config;
pub mod report;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

pub use config::{apply_override, config_to_toml, resolve_config};

use crate::diffcore::write_checkpoint;
use crate::paretolab::{front_dominance_check, random_start, run_toy, ToyProblem, ToyRun};
use crate::pipeline::Source;
use crate::trainer::{self, PreparedData, RunConfig};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "paretocl", version, about = "Pareto-optimal supervised contrastive fine-tuning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Dotted `key=value` override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train every configured seed and report mean and standard deviation.
    Train {
        #[command(flatten)]
        common: Common,
        /// Also write test-set embeddings of each seed's best checkpoint.
        #[arg(long)]
        embeddings: bool,
    },
    /// Score a checkpoint on the test split of the seed it was trained with.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Run the τ × λ × r₁ grid and select by mean validation accuracy.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Run LS or EPO on the analytic two-objective toy problem.
    Toy {
        #[command(flatten)]
        common: Common,
    },
    /// Finite-difference check of every training objective.
    Gradcheck {
        #[command(flatten)]
        common: Common,
    },
    /// Write the split manifests of every configured seed without training.
    Split {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Train { common, .. }
            | Command::Eval { common, .. }
            | Command::Sweep { common }
            | Command::Toy { common }
            | Command::Gradcheck { common }
            | Command::Split { common } => common,
        }
    }

    fn needs_config(&self) -> bool {
        !matches!(self, Command::Toy { .. } | Command::Gradcheck { .. })
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Resolve the configuration and echo it into the output directory.
fn prepare(command: &Command) -> Result<RunConfig> {
    let common = command.common();
    if command.needs_config() && common.config.is_none() {
        return Err(Error::Usage("--config is required for this subcommand".into()));
    }
    let cfg = resolve_config(common.config.as_deref(), &common.overrides)?;
    create_dir(&common.out)?;
    let path = common.out.join("config.toml");
    std::fs::write(&path, config_to_toml(&cfg)).map_err(|e| Error::io(&path, e))?;
    Ok(cfg)
}

fn config_json(cfg: &RunConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn write_manifests(data: &PreparedData, cfg: &RunConfig, out: &Path) -> Result<()> {
    for &seed in &cfg.seeds {
        data.split(cfg, seed)?.write_manifest(&out.join("splits").join(format!("seed-{seed}")))?;
    }
    Ok(())
}

fn train(cfg: &RunConfig, out: &Path, embeddings: bool) -> Result<String> {
    let data = PreparedData::load(cfg)?;
    let report = trainer::run_experiment(cfg, &data)?;
    let ckpt_dir = out.join("checkpoints");
    create_dir(&ckpt_dir)?;
    let mut rows = Vec::new();
    for run in &report.runs {
        run.split.write_manifest(&out.join("splits").join(format!("seed-{}", run.seed)))?;
        write_checkpoint(
            &ckpt_dir.join(format!("seed-{}.ckpt", run.seed)),
            &run.best_params,
            &run.checkpoint_meta(&report.config_digest, &cfg.features),
        )?;
        if embeddings {
            let encoder = crate::encoder::Encoder::new(run.architecture)?;
            for (id, label, e) in trainer::embed(&encoder, &run.best_params, &data, &run.split.test)? {
                rows.push((run.seed, id, label, e));
            }
        }
    }
    report::emit_run(&report, &config_json(cfg), out)?;
    if embeddings {
        report::emit_embeddings(&rows, out)?;
    }
    let a = &report.aggregate;
    let mut line = match (a.mean_test_accuracy, a.std_test_accuracy) {
        (Some(m), Some(s)) => format!(
            "{}: test accuracy {m:.4} ± {s:.4} over {} seed(s)",
            cfg.mode.as_str(),
            a.completed
        ),
        _ => format!("{}: no seed completed", cfg.mode.as_str()),
    };
    if a.failed > 0 {
        line.push_str(&format!(" ({} failed)", a.failed));
    }
    if a.completed == 0 {
        return Err(Error::Data(format!(
            "all {} seeds failed; first error: {}",
            a.failed,
            report.seeds.iter().find_map(|s| s.error.clone()).unwrap_or_default()
        )));
    }
    Ok(line)
}

fn eval(cfg: &RunConfig, out: &Path, checkpoint: &Path) -> Result<String> {
    let model = trainer::Model::load(checkpoint)?;
    let seed = model.seed().ok_or_else(|| Error::Format("checkpoint metadata lacks a seed".into()))?;
    if model.features != cfg.features {
        return Err(Error::validation("features", "checkpoint was trained with different feature settings"));
    }
    let data = PreparedData::load(cfg)?;
    if model.encoder.architecture().classes != data.train.num_classes() {
        return Err(Error::Data("checkpoint class count does not match the data".into()));
    }
    let split = data.split(cfg, seed)?;
    let acc = trainer::evaluate(&model.encoder, &model.params, &data, &split.test)?;
    report::emit_summary(
        json!({
            "kind": "eval",
            "checkpoint": checkpoint.display().to_string(),
            "seed": seed,
            "test_accuracy": acc,
            "test_size": split.test.ids.len(),
            "test_source": match split.test.source { Source::Train => "train", Source::Validation => "validation" },
            "dataset_digest": data.digest(),
        }),
        out,
    )?;
    Ok(format!("seed {seed}: test accuracy {acc:.4}"))
}

fn sweep(cfg: &RunConfig, out: &Path) -> Result<String> {
    let data = PreparedData::load(cfg)?;
    let report = trainer::sweep(cfg, &data)?;
    report::emit_sweep(&report, &config_json(cfg), &cfg.digest(), &data.digest(), out)?;
    match report.best.map(|i| &report.cells[i]) {
        Some(c) => Ok(format!(
            "best of {} cells: tau={} lambda={} r1={} (validation {:.4})",
            report.cells.len(),
            c.tau,
            c.lambda,
            c.r1.map_or("-".to_string(), |v| v.to_string()),
            c.mean_validation_accuracy.unwrap_or(f64::NAN)
        )),
        None => Err(Error::Data("every sweep cell failed".into())),
    }
}

fn toy(cfg: &RunConfig, out: &Path) -> Result<String> {
    let t = &cfg.toy;
    let r = crate::moo::PreferenceVector::new(cfg.r.clone())?;
    let problem = ToyProblem::new(t.dim)?;
    let run = ToyRun { solver: t.solver, r: r.clone(), steps: t.steps, step_size: t.step_size, eps_balance: cfg.eps_balance };
    let theta0 = random_start(t.dim, t.max_radius, t.init_seed);
    let trace = run_toy(&problem, &run, &theta0)?;
    let ok = front_dominance_check(&trace.final_point, &problem.sample_front(t.front_samples), t.slack);
    for s in &trace.steps {
        println!(
            "step={} f1={:.6} f2={:.6} mu={} ray_gap={:.6} mode={}",
            s.step,
            s.f1,
            s.f2,
            s.mu.map_or("-".to_string(), |m| format!("{m:.3e}")),
            s.ray_gap,
            s.mode
        );
    }
    report::emit_toy(&trace, &r, ok, &config_json(cfg), &cfg.digest(), out)?;
    Ok(format!(
        "final f=({:.6}, {:.6}) ray_gap={:.3e} front_dominance={}",
        trace.final_point[0],
        trace.final_point[1],
        crate::paretolab::ray_gap(&trace.final_point, &r),
        if ok { "pass" } else { "fail" }
    ))
}

/// Tolerance the gradient suite must meet.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

fn gradcheck(cfg: &RunConfig, out: &Path) -> Result<String> {
    let report = trainer::gradient_suite(&cfg.gradcheck)?;
    for (name, err) in &report.max_relative_error {
        println!("{name:<10} max relative error {err:.3e}");
    }
    report::emit_summary(
        json!({
            "kind": "gradcheck",
            "batches": report.batches,
            "probes_per_batch": report.probes_per_batch,
            "max_relative_error": report.max_relative_error.iter().map(|(k, v)| (k.clone(), json!(v))).collect::<serde_json::Map<_, _>>(),
            "tolerance": GRADCHECK_TOLERANCE,
            "pass": report.worst() < GRADCHECK_TOLERANCE,
        }),
        out,
    )?;
    if report.worst() >= GRADCHECK_TOLERANCE {
        return Err(Error::numeric(
            "gradient check",
            format!("worst relative error {:.3e} exceeds {GRADCHECK_TOLERANCE:e}", report.worst()),
        ));
    }
    Ok(format!("all objectives below {GRADCHECK_TOLERANCE:e}"))
}

fn split(cfg: &RunConfig, out: &Path) -> Result<String> {
    let data = PreparedData::load(cfg)?;
    write_manifests(&data, cfg, out)?;
    report::emit_summary(
        json!({
            "kind": "split",
            "seeds": cfg.seeds,
            "dataset_digest": data.digest(),
            "config_digest": cfg.digest(),
        }),
        out,
    )?;
    Ok(format!("wrote manifests for {} seed(s)", cfg.seeds.len()))
}

/// Execute a parsed command, returning the line printed on success.
pub fn run(cli: &Cli) -> Result<String> {
    let cfg = prepare(&cli.command)?;
    let out = &cli.command.common().out;
    match &cli.command {
        Command::Train { embeddings, .. } => train(&cfg, out, *embeddings),
        Command::Eval { checkpoint, .. } => eval(&cfg, out, checkpoint),
        Command::Sweep { .. } => sweep(&cfg, out),
        Command::Toy { .. } => toy(&cfg, out),
        Command::Gradcheck { .. } => gradcheck(&cfg, out),
        Command::Split { .. } => split(&cfg, out),
    }
}
