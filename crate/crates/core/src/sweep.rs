//! Sweep harness: many independent training runs along one varied axis.
//!
//! A sweep trains `repeats` seeds per axis value, records one final
//! exact W1 per run, and aggregates per-value means and standard
//! errors. Runs are dispatched to a small worker pool; all file output
//! goes through the coordinating thread, so partial files never
//! interleave. Completed runs are detected by their `result.json` and
//! skipped on rerun, which makes a sweep resumable and a finished
//! directory idempotent.
//!
//! Output layout under the sweep directory:
//!
//! ```text
//! sweep.json                  the sweep description as run
//! runs/<cell>/config.json     full standalone config for that run
//! runs/<cell>/log.csv         evaluation history
//! runs/<cell>/result.json     status and final exact W1
//! aggregate.csv               one row per (axis value, seed)
//! summary.csv                 one row per axis value
//! status.json                 run counts and the degraded flag
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::train::{TrainConfig, Trainer};

/// Which configuration field the sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    /// Real-sample budget.
    #[serde(rename = "n_train")]
    NTrain,
    /// Generator width.
    #[serde(rename = "w_g")]
    GenWidth,
    /// Generator depth.
    #[serde(rename = "d_g")]
    GenDepth,
    /// Discriminator width.
    #[serde(rename = "w_f")]
    DiscWidth,
    /// Discriminator depth.
    #[serde(rename = "d_f")]
    DiscDepth,
}

impl SweepAxis {
    /// Stable name used in file names and CSV rows.
    pub fn tag(&self) -> &'static str {
        match self {
            SweepAxis::NTrain => "n_train",
            SweepAxis::GenWidth => "w_g",
            SweepAxis::GenDepth => "d_g",
            SweepAxis::DiscWidth => "w_f",
            SweepAxis::DiscDepth => "d_f",
        }
    }

    /// Human-readable axis label for plots.
    pub fn label(&self) -> &'static str {
        match self {
            SweepAxis::NTrain => "training samples",
            SweepAxis::GenWidth => "generator width",
            SweepAxis::GenDepth => "generator depth",
            SweepAxis::DiscWidth => "discriminator width",
            SweepAxis::DiscDepth => "discriminator depth",
        }
    }

    /// Parses a [`SweepAxis::tag`] string.
    pub fn from_tag(tag: &str) -> Result<SweepAxis> {
        match tag {
            "n_train" => Ok(SweepAxis::NTrain),
            "w_g" => Ok(SweepAxis::GenWidth),
            "d_g" => Ok(SweepAxis::GenDepth),
            "w_f" => Ok(SweepAxis::DiscWidth),
            "d_f" => Ok(SweepAxis::DiscDepth),
            other => Err(Error::Config(format!("unknown sweep axis {other:?}"))),
        }
    }

    /// Derives the standalone config for one run of the sweep.
    pub fn apply(&self, base: &TrainConfig, value: usize, seed: u64) -> TrainConfig {
        let mut c = base.clone();
        match self {
            SweepAxis::NTrain => c.n_train = value,
            SweepAxis::GenWidth => c.generator.width = value,
            SweepAxis::GenDepth => c.generator.depth = value,
            SweepAxis::DiscWidth => c.discriminator.width = value,
            SweepAxis::DiscDepth => c.discriminator.depth = value,
        }
        c.seed = seed;
        c.experiment_id = format!("{}_{}_s{}", self.tag(), value, seed);
        c
    }
}

/// Description of a full sweep.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Template config; the axis field and the seed are overridden per
    /// run, everything else is shared.
    pub base: TrainConfig,
    pub axis: SweepAxis,
    /// Axis values, strictly increasing.
    pub values: Vec<usize>,
    /// Seeds per axis value: `base.seed .. base.seed + repeats - 1`.
    #[serde(default = "default_repeats")]
    pub repeats: u32,
    pub out_dir: PathBuf,
}

fn default_repeats() -> u32 {
    6
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.values.is_empty() {
            return Err(Error::Config("sweep needs at least one axis value".into()));
        }
        if !self.values.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config(format!(
                "axis values must be strictly increasing, got {:?}",
                self.values
            )));
        }
        if self.repeats < 1 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        Ok(())
    }

    /// Parses and validates a JSON sweep description.
    pub fn from_json(text: &str) -> Result<SweepSpec> {
        let spec: SweepSpec =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("sweep spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Outcome of one training run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::Failed => "failed",
        }
    }
}

/// One (axis value, seed) record.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CellResult {
    pub axis_value: usize,
    pub seed: u64,
    pub status: RunStatus,
    /// Present exactly when `status` is ok.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_exact_w1: Option<f64>,
    /// Present exactly when `status` is failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Per-axis-value aggregate over the successful runs.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisSummary {
    pub axis_value: usize,
    pub runs_ok: usize,
    pub runs_failed: usize,
    /// Arithmetic mean of final exact W1; `None` when every run failed.
    pub mean: Option<f64>,
    /// Standard error of the mean; 0 for a single run.
    pub stderr: Option<f64>,
}

/// Everything a finished sweep produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    /// One record per (axis value, seed), value-major order.
    pub cells: Vec<CellResult>,
    pub summaries: Vec<AxisSummary>,
    /// Set when any axis value lost at least half of its runs.
    pub degraded: bool,
}

impl SweepResult {
    /// Aggregates cells into per-value summaries and the degraded flag.
    pub fn from_cells(axis: SweepAxis, cells: Vec<CellResult>) -> SweepResult {
        let mut order: Vec<usize> = Vec::new();
        for c in &cells {
            if !order.contains(&c.axis_value) {
                order.push(c.axis_value);
            }
        }
        let mut summaries = Vec::new();
        let mut degraded = false;
        for v in order {
            let finals: Vec<f64> = cells
                .iter()
                .filter(|c| c.axis_value == v)
                .filter_map(|c| c.final_exact_w1)
                .collect();
            let total = cells.iter().filter(|c| c.axis_value == v).count();
            let failed = total - finals.len();
            if failed > 0 && 2 * failed >= total {
                degraded = true;
            }
            let mean = if finals.is_empty() {
                None
            } else {
                Some(finals.iter().sum::<f64>() / finals.len() as f64)
            };
            let stderr = mean.map(|m| {
                if finals.len() < 2 {
                    0.0
                } else {
                    let var = finals.iter().map(|x| (x - m).powi(2)).sum::<f64>()
                        / (finals.len() - 1) as f64;
                    (var / finals.len() as f64).sqrt()
                }
            });
            summaries.push(AxisSummary {
                axis_value: v,
                runs_ok: finals.len(),
                runs_failed: failed,
                mean,
                stderr,
            });
        }
        SweepResult {
            axis,
            cells,
            summaries,
            degraded,
        }
    }

    /// One row per run: `axis,value,seed,status,final_exact_w1`.
    pub fn aggregate_csv(&self) -> String {
        let mut out = String::from("axis,value,seed,status,final_exact_w1\n");
        for c in &self.cells {
            let w1 = c.final_exact_w1.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{w1}\n",
                self.axis.tag(),
                c.axis_value,
                c.seed,
                c.status.as_str()
            ));
        }
        out
    }

    /// One row per axis value with mean and standard error.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("axis,value,runs_ok,runs_failed,mean_exact_w1,stderr_exact_w1\n");
        for s in &self.summaries {
            let mean = s.mean.map(|v| v.to_string()).unwrap_or_default();
            let se = s.stderr.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{mean},{se}\n",
                self.axis.tag(),
                s.axis_value,
                s.runs_ok,
                s.runs_failed
            ));
        }
        out
    }

    /// Rebuilds a result (cells plus recomputed summaries) from
    /// [`SweepResult::aggregate_csv`] text. Per-run error messages are
    /// not part of the aggregate and come back empty.
    pub fn parse_aggregate_csv(text: &str) -> Result<SweepResult> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        if header != "axis,value,seed,status,final_exact_w1" {
            return Err(Error::format(
                "<aggregate csv>",
                format!("unexpected header {header:?}"),
            ));
        }
        let mut axis = None;
        let mut cells = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::format(
                    "<aggregate csv>",
                    format!("line {}: expected 5 fields, got {}", lineno + 2, fields.len()),
                ));
            }
            let row_axis = SweepAxis::from_tag(fields[0])?;
            match axis {
                None => axis = Some(row_axis),
                Some(a) if a == row_axis => {}
                Some(a) => {
                    return Err(Error::format(
                        "<aggregate csv>",
                        format!("mixed axes {} and {}", a.tag(), row_axis.tag()),
                    ))
                }
            }
            let bad = |what: &str| {
                Error::format(
                    "<aggregate csv>",
                    format!("line {}: cannot parse {what}", lineno + 2),
                )
            };
            let axis_value: usize = fields[1].parse().map_err(|_| bad("axis value"))?;
            let seed: u64 = fields[2].parse().map_err(|_| bad("seed"))?;
            let (status, final_exact_w1) = match fields[3] {
                "ok" => (RunStatus::Ok, Some(fields[4].parse().map_err(|_| bad("w1"))?)),
                "failed" => (RunStatus::Failed, None),
                other => return Err(bad(&format!("status {other:?}"))),
            };
            cells.push(CellResult {
                axis_value,
                seed,
                status,
                final_exact_w1,
                error: None,
            });
        }
        let axis = axis.ok_or_else(|| Error::format("<aggregate csv>", "no data rows"))?;
        Ok(SweepResult::from_cells(axis, cells))
    }

    /// Loads the result recorded in a sweep output directory.
    pub fn load(dir: &Path) -> Result<SweepResult> {
        let path = dir.join("aggregate.csv");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
        SweepResult::parse_aggregate_csv(&text)
    }
}

#[derive(Serialize)]
struct StatusFile<'a> {
    degraded: bool,
    runs: usize,
    axis: &'a str,
}

struct Task {
    slot: usize,
    config: TrainConfig,
    dir: PathBuf,
    axis_value: usize,
    seed: u64,
}

/// Worker pool width: every core but one, at least one.
pub fn default_threads() -> usize {
    thread::available_parallelism()
        .map(|n| n.get().saturating_sub(1))
        .unwrap_or(1)
        .max(1)
}

/// Runs the sweep with the default worker pool.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    run_sweep_with_threads(spec, default_threads())
}

/// Runs every (axis value, seed) cell that has no recorded result yet,
/// then writes the aggregate files. Failed runs are recorded and do not
/// stop the sweep.
pub fn run_sweep_with_threads(spec: &SweepSpec, threads: usize) -> Result<SweepResult> {
    spec.validate()?;
    let runs_dir = spec.out_dir.join("runs");
    fs::create_dir_all(&runs_dir).map_err(|e| Error::io(runs_dir.display().to_string(), e))?;
    write_json(&spec.out_dir.join("sweep.json"), spec)?;

    let mut slots: Vec<Option<CellResult>> = Vec::new();
    let mut tasks: Vec<Task> = Vec::new();
    for &value in &spec.values {
        for r in 0..spec.repeats {
            let seed = spec.base.seed + r as u64;
            let config = spec.axis.apply(&spec.base, value, seed);
            let dir = runs_dir.join(&config.experiment_id);
            if let Some(cell) = read_existing_result(&dir, value, seed) {
                slots.push(Some(cell));
                continue;
            }
            fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
            write_json(&dir.join("config.json"), &config)?;
            tasks.push(Task {
                slot: slots.len(),
                config,
                dir,
                axis_value: value,
                seed,
            });
            slots.push(None);
        }
    }

    run_tasks(&tasks, threads, &mut slots)?;

    let cells: Vec<CellResult> = slots
        .into_iter()
        .map(|s| s.expect("every slot filled"))
        .collect();
    let result = SweepResult::from_cells(spec.axis, cells);
    write_text(&spec.out_dir.join("aggregate.csv"), &result.aggregate_csv())?;
    write_text(&spec.out_dir.join("summary.csv"), &result.summary_csv())?;
    write_json(
        &spec.out_dir.join("status.json"),
        &StatusFile {
            degraded: result.degraded,
            runs: result.cells.len(),
            axis: spec.axis.tag(),
        },
    )?;
    Ok(result)
}

/// Dispatches tasks to a pool; results flow back over a channel and all
/// writes happen on this thread.
fn run_tasks(tasks: &[Task], threads: usize, slots: &mut [Option<CellResult>]) -> Result<()> {
    if tasks.is_empty() {
        return Ok(());
    }
    let workers = threads.max(1).min(tasks.len());
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, String, std::result::Result<f64, Error>)>();
    thread::scope(|scope| -> Result<()> {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= tasks.len() {
                    break;
                }
                let (log_csv, outcome) = execute_run(&tasks[i].config);
                if tx.send((i, log_csv, outcome)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, log_csv, outcome) in rx {
            let task = &tasks[i];
            if !log_csv.is_empty() {
                write_text(&task.dir.join("log.csv"), &log_csv)?;
            }
            let cell = match outcome {
                Ok(w1) => CellResult {
                    axis_value: task.axis_value,
                    seed: task.seed,
                    status: RunStatus::Ok,
                    final_exact_w1: Some(w1),
                    error: None,
                },
                Err(e) => CellResult {
                    axis_value: task.axis_value,
                    seed: task.seed,
                    status: RunStatus::Failed,
                    final_exact_w1: None,
                    error: Some(e.to_string()),
                },
            };
            write_json(&task.dir.join("result.json"), &cell)?;
            slots[task.slot] = Some(cell);
        }
        Ok(())
    })
}

/// Trains one cell to completion. Returns whatever log was accumulated
/// (so a failed run still leaves its history) and the final exact W1.
fn execute_run(config: &TrainConfig) -> (String, std::result::Result<f64, Error>) {
    let mut trainer = match Trainer::from_config(config.clone()) {
        Ok(t) => t,
        Err(e) => return (String::new(), Err(e)),
    };
    if let Err(e) = trainer.run() {
        return (trainer.log().to_csv(), Err(e));
    }
    let final_w1 = match trainer.log().records().last() {
        Some(rec) if rec.iter == trainer.iter() => Ok(rec.exact_w1),
        _ => trainer.evaluate_now().map(|m| m.exact_w1),
    };
    (trainer.log().to_csv(), final_w1)
}

fn read_existing_result(dir: &Path, value: usize, seed: u64) -> Option<CellResult> {
    let text = fs::read_to_string(dir.join("result.json")).ok()?;
    let cell: CellResult = serde_json::from_str(&text).ok()?;
    (cell.axis_value == value && cell.seed == seed).then_some(cell)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Json {
            path: path.display().to_string(),
            source: e,
        })?;
    write_text(path, &text)
}
