use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use czsl_core::data::{make_synthetic_dataset, write_dataset, write_task_spec, TaskSpec};
use czsl_core::harness::{
    emit_report, emit_sweep, evaluate_learner, prepare_data, run_experiment, sweep_replay,
    ExperimentConfig, Precision, RunRecord, SeedRun, SyntheticConfig,
};
use czsl_core::learner::{LearnerManifest, LearnerState};
use czsl_core::nn::read_descriptor;
use czsl_core::Scalar;

/// Continual zero-shot learning with per-task conditional VAEs.
#[derive(Parser)]
#[command(name = "czsl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train over all tasks and write reports.
    Run(RunArgs),
    /// Write a synthetic dataset container.
    SynthData(SynthArgs),
    /// Re-evaluate a saved learner.
    Eval(EvalArgs),
    /// Run the experiment once per replay count.
    SweepReplay(SweepArgs),
    /// Print the descriptor of a checkpoint file, module or learner directory.
    InspectCheckpoint { path: PathBuf },
}

#[derive(Args)]
struct Overrides {
    /// Seed to run; repeat for several seeds.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    /// Replay samples per previously seen class.
    #[arg(long)]
    replay: Option<usize>,
    /// Set the label and embedding loss weights to zero.
    #[arg(long)]
    no_aux_losses: bool,
    #[arg(long)]
    tasks: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    classes: usize,
    #[arg(long)]
    tasks: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 8)]
    attr_dim: usize,
    #[arg(long, default_value_t = 32)]
    feature_dim: usize,
    #[arg(long, default_value_t = 60)]
    samples_per_class: usize,
    #[arg(long, default_value_t = 0.3)]
    noise: f64,
}

#[derive(Args)]
struct EvalArgs {
    /// Learner checkpoint directory written by `run`.
    #[arg(long)]
    learner: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Experiment config; defaults to the `config.toml` of the run directory.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated replay counts; defaults to the config's sweep.
    #[arg(long, value_delimiter = ',')]
    values: Vec<usize>,
    #[command(flatten)]
    overrides: Overrides,
}

/// Error that maps to exit status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn load_config(path: &Path) -> anyhow::Result<ExperimentConfig> {
    if !path.is_file() {
        return Err(UsageError(format!("config file {} not found", path.display())).into());
    }
    Ok(ExperimentConfig::load(path)?)
}

fn apply(cfg: &mut ExperimentConfig, o: &Overrides, out: &Path) -> anyhow::Result<()> {
    if !o.seeds.is_empty() {
        cfg.seeds = o.seeds.clone();
    }
    if let Some(n) = o.replay {
        cfg.train.n_replay_per_class = n;
    }
    if o.no_aux_losses {
        cfg.train.use_aux_losses = false;
    }
    if let Some(t) = o.tasks {
        cfg.num_tasks = Some(t);
    }
    if let Some(e) = o.epochs {
        cfg.train.epochs = e;
    }
    cfg.output_dir = Some(out.to_path_buf());
    cfg.validate()?;
    Ok(())
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let mut cfg = load_config(&args.config)?;
    apply(&mut cfg, &args.overrides, &args.out)?;
    let record = run_experiment(&cfg)?;
    for path in emit_report(&record, &args.out)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn synth_data(args: SynthArgs) -> anyhow::Result<()> {
    let synthetic = SyntheticConfig {
        num_classes: args.classes,
        attr_dim: args.attr_dim,
        feature_dim: args.feature_dim,
        samples_per_class: args.samples_per_class,
        cluster_noise: args.noise,
        seed: args.seed,
    };
    let ds = make_synthetic_dataset(&synthetic.spec())?;
    let spec = TaskSpec::contiguous(args.classes, args.tasks)?;
    write_dataset(&ds, &args.out)?;
    write_task_spec(&spec, &args.out)?;
    println!(
        "{}: {} classes, {} train / {} test samples, {} tasks",
        args.out.display(),
        ds.num_classes(),
        ds.num_train(),
        ds.num_test(),
        spec.num_tasks()
    );
    Ok(())
}

fn find_run_config(learner: &Path) -> anyhow::Result<PathBuf> {
    learner
        .ancestors()
        .take(4)
        .map(|dir| dir.join("config.toml"))
        .find(|p| p.is_file())
        .ok_or_else(|| {
            UsageError(format!(
                "no config.toml above {}; pass --config",
                learner.display()
            ))
            .into()
        })
}

fn eval_as<T: Scalar>(cfg: &ExperimentConfig, learner: &Path) -> anyhow::Result<SeedRun> {
    let start = Instant::now();
    let (dataset, _) = prepare_data(cfg)?;
    let state = LearnerState::<T>::load(learner, Arc::clone(&dataset))?;
    let report = evaluate_learner(&state)?;
    Ok(SeedRun {
        seed: state.config().seed,
        report,
        wall_seconds: start.elapsed().as_secs_f64(),
        module_params: state.modules().iter().map(|m| m.num_params()).collect(),
        classifier_params: 0,
        training: Vec::new(),
    })
}

fn eval(args: EvalArgs) -> anyhow::Result<()> {
    let config_path = match args.config {
        Some(p) => p,
        None => find_run_config(&args.learner)?,
    };
    let mut cfg = load_config(&config_path)?;
    let manifest = LearnerManifest::read(&args.learner)?;
    cfg.seeds = vec![manifest.seed];
    cfg.train = manifest.config.clone();
    cfg.output_dir = Some(args.out.clone());
    let run = match manifest.dtype.as_str() {
        "f32" => eval_as::<f32>(&cfg, &args.learner)?,
        "f64" => eval_as::<f64>(&cfg, &args.learner)?,
        other => bail!("unsupported checkpoint dtype {other}"),
    };
    cfg.precision = if manifest.dtype == "f64" {
        Precision::F64
    } else {
        Precision::F32
    };
    let record = RunRecord {
        config: cfg,
        runs: vec![run],
    };
    for path in emit_report(&record, &args.out)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> anyhow::Result<()> {
    let mut cfg = load_config(&args.config)?;
    apply(&mut cfg, &args.overrides, &args.out)?;
    let values = if args.values.is_empty() {
        cfg.replay_sweep.clone()
    } else {
        args.values
    };
    let rows = sweep_replay(&cfg, &values)?;
    println!("{}", emit_sweep(&rows, &args.out)?.display());
    Ok(())
}

fn inspect(path: &Path) -> anyhow::Result<()> {
    let text = if path.join("manifest.json").is_file() {
        serde_json::to_string_pretty(&LearnerManifest::read(path)?)?
    } else if path.join("module.json").is_file() {
        let file = path.join("module.json");
        std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?
    } else if path.is_file() {
        serde_json::to_string_pretty(&read_descriptor(path)?)?
    } else {
        return Err(UsageError(format!("{} is not a checkpoint", path.display())).into());
    };
    println!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::SynthData(a) => synth_data(a),
        Command::Eval(a) => eval(a),
        Command::SweepReplay(a) => sweep(a),
        Command::InspectCheckpoint { path } => inspect(&path),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
