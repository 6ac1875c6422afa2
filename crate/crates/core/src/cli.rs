//! The `hcg` command line: data generation, training, evaluation, sweeps and
//! gradient checks.
//!
//! Exit codes: 0 on success, 1 on runtime errors, 2 on usage errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data::{
    load_dataset_dir, save_dataset_dir, split_dataset, synth_generate, NormStats, Split, SynthConfig,
};
use crate::error::{Error, Result};
use crate::eval::{compute_metrics, confusion, sweep_report};
use crate::model::{load_checkpoint_with, save_checkpoint_with, Arch, Metadata, Model, ModelConfig};
use crate::numerics::Parameterized;
use crate::training::{
    evaluate, prepare_dataset, run_sweep, train, SweepGrid, TrainConfig, DEFAULT_FRACTIONS,
};
use crate::verify::{gradient_suite, DEFAULT_TOLERANCE};

#[derive(Debug, Parser)]
#[command(name = "hcg", version, about = "Hierarchical CNN + GRU damage-state classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset directory (recordings + manifest.csv).
    Generate(GenerateArgs),
    /// Train one model and write a checkpoint and a history CSV.
    Train(TrainArgs),
    /// Score a checkpoint on one split; prints metrics, writes a confusion CSV.
    Eval(EvalArgs),
    /// Run every architecture at every layer setting of a grid file.
    Sweep(SweepArgs),
    /// Run the finite-difference gradient suite.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Generator config file (`key = value` lines).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in generator preset: default or harder.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config's seed.
    #[arg(long, env = "HCG_SEED")]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    arch: Arch,
    /// Dataset directory with manifest.csv.
    #[arg(long)]
    data: PathBuf,
    /// Checkpoint path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    /// Model initialization and shuffle seed.
    #[arg(long, env = "HCG_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.001)]
    lr: f64,
    #[arg(long, default_value_t = 64)]
    batch: usize,
    /// Window length in steps.
    #[arg(long, default_value_t = 128)]
    window: usize,
    /// Step between window starts.
    #[arg(long, default_value_t = 64)]
    stride: usize,
    /// Seed of the 60/20/20 split; defaults to --seed.
    #[arg(long)]
    split_seed: Option<u64>,
    /// History CSV path; defaults to the checkpoint path with `.history.csv`.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    ckpt: PathBuf,
    /// Dataset directory with manifest.csv.
    #[arg(long)]
    data: PathBuf,
    /// train, val or test.
    #[arg(long, default_value = "test")]
    split: Split,
    /// Confusion CSV path; defaults to the checkpoint path with `.confusion.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Grid file.
    #[arg(long)]
    grid: PathBuf,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    /// Summary CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to one per core.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    /// First seed; seeds `S .. S + seeds` are checked.
    #[arg(long, env = "HCG_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    seeds: usize,
}

/// Runs the command line with process stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

/// Runs the command line, writing reports to `out` and diagnostics to `err`.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a, out),
        Command::Train(a) => train_cmd(a, out),
        Command::Eval(a) => eval_cmd(a, out),
        Command::Sweep(a) => sweep_cmd(a, out),
        Command::Gradcheck(a) => gradcheck(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn say(out: &mut dyn Write, text: impl AsRef<str>) -> Result<()> {
    writeln!(out, "{}", text.as_ref()).map_err(io_err(Path::new("<stdout>")))
}

fn generate(a: GenerateArgs, out: &mut dyn Write) -> Result<i32> {
    let mut cfg = match (&a.config, &a.preset) {
        (Some(path), _) => SynthConfig::from_file(path)?,
        (None, Some(name)) => SynthConfig::preset(name)?,
        (None, None) => SynthConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let ds = synth_generate(&cfg)?;
    save_dataset_dir(&ds, &a.out)?;
    let cfg_path = a.out.join("synth.cfg");
    fs::write(&cfg_path, cfg.to_config_string()).map_err(io_err(&cfg_path))?;
    say(
        out,
        format!(
            "wrote {} windows ({} classes, {}x{}) to {}",
            ds.len(),
            ds.num_classes,
            cfg.window,
            cfg.sensors,
            a.out.display()
        ),
    )?;
    Ok(0)
}

fn floats(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",")
}

fn meta_get<'a>(meta: &'a Metadata, key: &str) -> Result<&'a str> {
    meta.get(key)
        .map(String::as_str)
        .ok_or_else(|| Error::Checkpoint(format!("missing meta.{key}")))
}

fn meta_parse<T: std::str::FromStr>(meta: &Metadata, key: &str) -> Result<T> {
    meta_get(meta, key)?
        .parse()
        .map_err(|_| Error::Checkpoint(format!("bad meta.{key}")))
}

fn meta_floats(meta: &Metadata, key: &str) -> Result<Vec<f64>> {
    meta_get(meta, key)?
        .split(',')
        .map(|v| v.parse().map_err(|_| Error::Checkpoint(format!("bad meta.{key}"))))
        .collect()
}

fn train_cmd(a: TrainArgs, out: &mut dyn Write) -> Result<i32> {
    let raw = load_dataset_dir(&a.data, a.window, a.stride, None)?;
    let split_seed = a.split_seed.unwrap_or(a.seed);
    let (ds, stats) = prepare_dataset(&raw, split_seed)?;
    let (window, sensors) = ds
        .window_shape()
        .ok_or_else(|| Error::Validation("dataset is empty".into()))?;
    let mut model_cfg = ModelConfig::new(a.arch, sensors, window, ds.num_classes);
    model_cfg.seed = a.seed;
    let mut model = Model::new(model_cfg)?;
    let train_cfg = TrainConfig {
        learning_rate: a.lr,
        batch_size: a.batch,
        epochs: a.epochs,
        seed: a.seed,
        ..TrainConfig::default()
    };
    say(
        out,
        format!(
            "{}: {} parameters, {} windows ({} train)",
            a.arch.label(),
            model.param_count(),
            ds.len(),
            ds.subset(Split::Train).len()
        ),
    )?;
    let history = train(&mut model, &ds, &train_cfg)?;
    if let Some(last) = history.epochs.last() {
        say(
            out,
            format!(
                "epoch {}: train loss {:.4} acc {:.4}, val loss {:.4} acc {:.4}",
                last.epoch, last.train_loss, last.train_acc, last.val_loss, last.val_acc
            ),
        )?;
    }
    let test = evaluate(&model, &ds, Split::Test)?;
    say(out, format!("test accuracy {:.4}", test.accuracy))?;

    let meta: Metadata = [
        ("window", a.window.to_string()),
        ("stride", a.stride.to_string()),
        ("split_seed", split_seed.to_string()),
        ("norm_mean", floats(&stats.mean)),
        ("norm_std", floats(&stats.std)),
        ("epochs", a.epochs.to_string()),
        ("lr", a.lr.to_string()),
        ("batch", a.batch.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    save_checkpoint_with(&model, &meta, &a.out)?;
    let history_path = a.history.unwrap_or_else(|| a.out.with_extension("history.csv"));
    history.write_csv(&history_path)?;
    say(
        out,
        format!("wrote {} and {}", a.out.display(), history_path.display()),
    )?;
    Ok(0)
}

fn eval_cmd(a: EvalArgs, out: &mut dyn Write) -> Result<i32> {
    let (model, meta) = load_checkpoint_with(&a.ckpt)?;
    let window: usize = meta_parse(&meta, "window")?;
    let stride: usize = meta_parse(&meta, "stride")?;
    let split_seed: u64 = meta_parse(&meta, "split_seed")?;
    let stats = NormStats {
        mean: meta_floats(&meta, "norm_mean")?,
        std: meta_floats(&meta, "norm_std")?,
    };
    let mut ds = load_dataset_dir(&a.data, window, stride, Some(model.num_classes()))?;
    split_dataset(&mut ds, DEFAULT_FRACTIONS, split_seed)?;
    let ds = ds.normalized(&stats)?;
    let result = evaluate(&model, &ds, a.split)?;
    let cm = confusion(&result.predictions, &result.labels, model.num_classes())?;
    let report = compute_metrics(&cm)?;
    say(out, format!("{} split, {} windows", a.split, cm.total()))?;
    say(out, report.to_string())?;
    say(out, cm.to_string())?;
    let path = a.out.unwrap_or_else(|| a.ckpt.with_extension("confusion.csv"));
    fs::write(&path, cm.to_csv()).map_err(io_err(&path))?;
    Ok(0)
}

fn sweep_cmd(a: SweepArgs, out: &mut dyn Write) -> Result<i32> {
    let grid = SweepGrid::from_file(&a.grid)?;
    let cells = match a.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| run_sweep(&grid, a.repeats))?,
        None => run_sweep(&grid, a.repeats)?,
    };
    let table = sweep_report(&cells);
    say(out, table.render_text().trim_end())?;
    if let Some(path) = a.out {
        fs::write(&path, table.to_csv()).map_err(io_err(&path))?;
    }
    Ok(0)
}

fn gradcheck(a: GradcheckArgs, out: &mut dyn Write) -> Result<i32> {
    let outcomes = gradient_suite(a.seed, a.seeds)?;
    let mut all = true;
    for o in &outcomes {
        let ok = o.passed(DEFAULT_TOLERANCE);
        all &= ok;
        say(
            out,
            format!(
                "{:<22} seeds {:>3}  max rel err {:.3e}  redrawn {:>2}  {}",
                o.name,
                o.seeds,
                o.max_rel_error,
                o.redrawn,
                if ok { "ok" } else { "FAIL" }
            ),
        )?;
    }
    Ok(if all { 0 } else { 1 })
}
