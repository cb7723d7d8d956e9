//! `gswgan`: batch experiment harness.
//!
//! Subcommands: `train` one run from a JSON config, `sweep` a family of
//! runs over one axis, `eval-w1` between two point sets, `plot` a
//! finished sweep directory, and `mnist-prep` to check MNIST IDX files
//! before long runs. Exit code 0 on success, 1 for configuration and
//! usage errors, 2 for runtime or numeric failures.
//!
//! Relative dataset paths resolve against `GSWGAN_DATA_DIR` when that
//! variable is set.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gswgan::data::{gaussian_noise, mnist_load, points_from_csv, Rng, SampleBatch, EVAL};
use gswgan::error::{Error, Result};
use gswgan::net::{forward_value, load_checkpoint};
use gswgan::ot::{emd_exact_uniform, sliced_w1};
use gswgan::plot::plot_curves;
use gswgan::sweep::{default_threads, run_sweep_with_threads, SweepResult, SweepSpec};
use gswgan::train::{write_checkpoint_files, DatasetSpec, TrainConfig, Trainer};

const DATA_DIR_ENV: &str = "GSWGAN_DATA_DIR";

#[derive(Parser)]
#[command(
    name = "gswgan",
    version,
    about = "WGAN training with GroupSort critics, exact W1 evaluation, sweeps, and SVG plots"
)]
struct Cli {
    /// Override the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for sweep dispatch (default: cores - 1, minimum 1).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train one run from a JSON config and write its log and
    /// checkpoints.
    Train {
        /// Path to a TrainConfig JSON file.
        config: PathBuf,
    },
    /// Train every (axis value, seed) cell of a sweep and aggregate.
    Sweep {
        /// Path to a SweepSpec JSON file.
        spec: PathBuf,
        /// Confirm a long-running MNIST sweep.
        #[arg(long)]
        long: bool,
    },
    /// Wasserstein-1 distance between two point sets.
    #[command(name = "eval-w1")]
    EvalW1 {
        /// Points CSV or a generator checkpoint JSON.
        #[arg(long)]
        a: PathBuf,
        /// Points CSV.
        #[arg(long)]
        b: PathBuf,
        /// Exact distance by network simplex (the default).
        #[arg(long, conflicts_with = "sliced")]
        exact: bool,
        /// Sliced distance over 32 random directions instead.
        #[arg(long)]
        sliced: bool,
        /// Samples drawn when --a is a checkpoint (default 1000).
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Render the curve SVG for a finished sweep directory.
    Plot {
        /// Directory a sweep wrote its aggregate.csv into.
        sweep_dir: PathBuf,
    },
    /// Validate an MNIST IDX image/label pair and report its contents.
    #[command(name = "mnist-prep")]
    MnistPrep {
        /// IDX image file (magic 0x803).
        #[arg(long)]
        images: PathBuf,
        /// IDX label file (magic 0x801).
        #[arg(long)]
        labels: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// Configuration mistakes exit 1; runtime, numeric, and I/O failures
/// exit 2. Config file reads are wrapped so a missing config is a
/// config error, while a missing data file at run time is not.
fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Format { .. } | Error::Json { .. } => 1,
        Error::Shape { .. } | Error::Numeric { .. } | Error::Io { .. } => 2,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Train { ref config } => cmd_train(config, cli.seed, cli.out.as_deref()),
        Cmd::Sweep { ref spec, long } => {
            cmd_sweep(spec, long, cli.seed, cli.threads, cli.out.as_deref())
        }
        Cmd::EvalW1 {
            ref a,
            ref b,
            exact: _,
            sliced,
            samples,
        } => cmd_eval_w1(a, b, sliced, samples, cli.seed),
        Cmd::Plot { ref sweep_dir } => cmd_plot(sweep_dir, cli.out.as_deref()),
        Cmd::MnistPrep {
            ref images,
            ref labels,
        } => cmd_mnist_prep(images, labels),
    }
}

fn read_config_text(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))
}

fn resolve_data_path(path: &mut PathBuf) {
    if path.is_relative() {
        if let Ok(root) = std::env::var(DATA_DIR_ENV) {
            if !root.is_empty() {
                *path = Path::new(&root).join(&*path);
            }
        }
    }
}

fn resolve_dataset_paths(dataset: &mut DatasetSpec) {
    if let DatasetSpec::MnistPca { images, labels, .. } = dataset {
        resolve_data_path(images);
        resolve_data_path(labels);
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn cmd_train(config_path: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    let mut config = TrainConfig::from_json(&read_config_text(config_path)?)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    resolve_dataset_paths(&mut config.dataset);
    let out_dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(format!("out_{}", config.experiment_id)));
    fs::create_dir_all(&out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let resolved = serde_json::to_string_pretty(&config).map_err(|e| Error::Json {
        path: "config.json".into(),
        source: e,
    })?;
    write_text(&out_dir.join("config.json"), &resolved)?;

    let mut trainer = Trainer::from_config(config.clone())?;
    let run_outcome = trainer.run();
    let final_w1 = if run_outcome.is_ok() {
        match trainer.log().records().last() {
            Some(r) if r.iter == trainer.iter() => Some(r.exact_w1),
            _ => Some(trainer.evaluate_now()?.exact_w1),
        }
    } else {
        None
    };
    let output = trainer.finish();
    write_text(&out_dir.join("log.csv"), &output.log.to_csv())?;
    for rec in &output.checkpoints {
        write_checkpoint_files(rec, config.seed, &out_dir)?;
    }
    run_outcome?;
    match final_w1 {
        Some(w1) => println!(
            "{}: {} iterations, final exact W1 {w1:?}",
            config.experiment_id, config.total_iterations
        ),
        None => println!("{}: finished without evaluation", config.experiment_id),
    }
    println!("wrote {}", out_dir.display());
    Ok(())
}

fn cmd_sweep(
    spec_path: &Path,
    long: bool,
    seed: Option<u64>,
    threads: Option<usize>,
    out: Option<&Path>,
) -> Result<()> {
    let mut spec = SweepSpec::from_json(&read_config_text(spec_path)?)?;
    if let Some(s) = seed {
        spec.base.seed = s;
    }
    if let Some(dir) = out {
        spec.out_dir = dir.to_path_buf();
    }
    resolve_dataset_paths(&mut spec.base.dataset);
    if matches!(spec.base.dataset, DatasetSpec::MnistPca { .. }) && !long {
        return Err(Error::Config(
            "MNIST sweeps are long-running; pass --long to confirm".into(),
        ));
    }
    let threads = threads.unwrap_or_else(default_threads);
    let result = run_sweep_with_threads(&spec, threads)?;
    for s in &result.summaries {
        match (s.mean, s.stderr) {
            (Some(m), Some(se)) => println!(
                "{} {}: mean exact W1 {m:.4} +- {se:.4} ({} ok, {} failed)",
                spec.axis.tag(),
                s.axis_value,
                s.runs_ok,
                s.runs_failed
            ),
            _ => println!(
                "{} {}: every run failed",
                spec.axis.tag(),
                s.axis_value
            ),
        }
    }
    if result.degraded {
        eprintln!("warning: sweep degraded, an axis value lost at least half of its runs");
    }
    println!("wrote {}", spec.out_dir.display());
    Ok(())
}

/// Loads `--a`: a JSON object is a generator checkpoint to sample from,
/// anything else is a points CSV.
fn load_point_source(path: &Path, samples: usize, seed: u64) -> Result<SampleBatch> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    if text.trim_start().starts_with('{') {
        let (params, _step, _seed) = load_checkpoint(path)?;
        let mut rng = Rng::new(seed).stream(EVAL);
        let noise = gaussian_noise(samples, params.spec().input_dim, &mut rng)?;
        let out = forward_value(&params, noise.values())?;
        SampleBatch::new(out, gswgan::data::BatchTag::Generated)
    } else {
        points_from_csv(&text)
    }
}

fn cmd_eval_w1(
    a: &Path,
    b: &Path,
    sliced: bool,
    samples: Option<usize>,
    seed: Option<u64>,
) -> Result<()> {
    let seed = seed.unwrap_or(0);
    let a_batch = load_point_source(a, samples.unwrap_or(1000), seed)?;
    let b_text = fs::read_to_string(b).map_err(|e| Error::io(b.display().to_string(), e))?;
    let b_batch = points_from_csv(&b_text)?;
    let value = if sliced {
        let mut rng = Rng::new(seed).stream(EVAL);
        sliced_w1(&a_batch, &b_batch, 32, &mut rng)?
    } else {
        emd_exact_uniform(&a_batch, &b_batch)?.value
    };
    println!("{value:?}");
    Ok(())
}

fn cmd_plot(sweep_dir: &Path, out: Option<&Path>) -> Result<()> {
    let result = SweepResult::load(sweep_dir)?;
    let dir = out.unwrap_or(sweep_dir);
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let out_path = dir.join(format!("{}.svg", result.axis.tag()));
    plot_curves(&result, &out_path)?;
    println!("wrote {}", out_path.display());
    Ok(())
}

fn cmd_mnist_prep(images: &Path, labels: &Path) -> Result<()> {
    let mut images = images.to_path_buf();
    let mut labels = labels.to_path_buf();
    resolve_data_path(&mut images);
    resolve_data_path(&mut labels);
    let (batch, label_bytes) = mnist_load(&images, &labels)?;
    let mut hist = [0usize; 10];
    let mut other = 0usize;
    for &l in &label_bytes {
        match hist.get_mut(l as usize) {
            Some(slot) => *slot += 1,
            None => other += 1,
        }
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in batch.values().data() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    println!(
        "images: {} samples, {} pixels each, values in [{lo:.3}, {hi:.3}]",
        batch.m(),
        batch.dim()
    );
    println!("labels per class 0-9: {hist:?}");
    if other > 0 {
        println!("labels outside 0-9: {other}");
    }
    println!("ready for MNIST configs");
    Ok(())
}
