//! Adversarial training loop.
//!
//! One outer iteration performs `critic_steps` discriminator updates,
//! each on a fresh real minibatch and fresh noise, then a single
//! generator update on fresh noise. The discriminator ascends
//! J_D = mean f(x) - mean f(g(z)) and is re-projected onto its
//! constraint set after every update; the generator descends
//! J_G = -mean f(g(z)).
//!
//! Runs are deterministic given the config seed. The seed fans out into
//! independent streams: dataset synthesis, parameter initialization,
//! minibatch indices, training noise, and evaluation draws. Evaluation
//! streams are keyed by iteration number, so computing metrics out of
//! schedule never perturbs a scheduled run.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::autodiff::Tape;
use crate::data::{
    self, gaussian_noise, mnist_load, pca_fit, pca_transform, swiss_roll, BatchTag, Rng,
    SampleBatch,
};
use crate::error::{Error, Result};
use crate::net::{forward, forward_value, init_params, save_checkpoint, MlpParams, MlpSpec};
use crate::optim::{OptimizerConfig, OptimizerState};
use crate::ot::{emd_exact_uniform, sliced_w1, tail_prob_diagnostic};

/// Where the real samples come from.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    /// Spiral (z cos 4 pi z, z sin 4 pi z) with z uniform on [0.25, 1].
    SwissRoll,
    /// MNIST IDX files projected to a PCA subspace fit on the training
    /// rows of this run.
    MnistPca {
        images: PathBuf,
        labels: PathBuf,
        #[serde(default = "default_pca_components")]
        components: usize,
    },
}

fn default_pca_components() -> usize {
    50
}

impl DatasetSpec {
    /// Dimension of the samples this source produces.
    pub fn data_dim(&self) -> usize {
        match self {
            DatasetSpec::SwissRoll => 2,
            DatasetSpec::MnistPca { components, .. } => *components,
        }
    }

    /// Builds the training pool (exactly `n_train` rows) and a held-out
    /// evaluation batch that shares no rows or draws with the pool.
    pub fn build(&self, seed: u64, n_train: usize, eval_samples: usize) -> Result<(SampleBatch, SampleBatch)> {
        match self {
            DatasetSpec::SwissRoll => {
                let mut rng = Rng::new(seed).stream(data::DATA);
                let pool = swiss_roll(n_train, &mut rng)?;
                let mut held_out = Rng::new(seed).stream(data::HELD_OUT);
                let eval = swiss_roll(eval_samples, &mut held_out)?;
                Ok((pool, eval))
            }
            DatasetSpec::MnistPca {
                images,
                labels,
                components,
            } => {
                let (raw, _labels) = mnist_load(images, labels)?;
                let needed = n_train + eval_samples;
                if raw.m() < needed {
                    return Err(Error::Config(format!(
                        "dataset has {} rows but n_train + eval samples = {needed}",
                        raw.m()
                    )));
                }
                let train_raw = raw.slice_rows(0, n_train)?;
                let eval_raw = raw.slice_rows(raw.m() - eval_samples, raw.m())?;
                let model = pca_fit(&train_raw, *components)?;
                let pool = pca_transform(&model, &train_raw)?;
                let eval = pca_transform(&model, &eval_raw)?;
                Ok((pool, eval))
            }
        }
    }
}

/// Evaluation cadence and sizes.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    /// Evaluate every this many outer iterations.
    #[serde(default = "default_eval_every")]
    pub every: u64,
    /// Sample count per side for the exact and sliced distances.
    #[serde(default = "default_eval_samples")]
    pub samples: usize,
    /// Independent generator draws averaged per evaluation.
    #[serde(default = "default_eval_repeats")]
    pub repeats: u32,
    /// Random directions for the sliced distance.
    #[serde(default = "default_sliced_projections")]
    pub sliced_projections: usize,
    /// Norm threshold for the escaped-mass diagnostic.
    #[serde(default = "default_tail_threshold")]
    pub tail_threshold: f64,
}

fn default_eval_every() -> u64 {
    500
}

fn default_eval_samples() -> usize {
    2000
}

fn default_eval_repeats() -> u32 {
    1
}

fn default_sliced_projections() -> usize {
    32
}

fn default_tail_threshold() -> f64 {
    2.0
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            every: default_eval_every(),
            samples: default_eval_samples(),
            repeats: default_eval_repeats(),
            sliced_projections: default_sliced_projections(),
            tail_threshold: default_tail_threshold(),
        }
    }
}

/// Full experiment description; everything a run needs besides the data
/// files themselves.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_experiment_id")]
    pub experiment_id: String,
    #[serde(default = "default_dataset")]
    pub dataset: DatasetSpec,
    pub generator: MlpSpec,
    pub discriminator: MlpSpec,
    #[serde(default = "default_gen_optimizer")]
    pub gen_optimizer: OptimizerConfig,
    #[serde(default = "default_disc_optimizer")]
    pub disc_optimizer: OptimizerConfig,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_total_iterations")]
    pub total_iterations: u64,
    #[serde(default = "default_critic_steps")]
    pub critic_steps: u32,
    pub n_train: usize,
    #[serde(default = "default_noise_dim")]
    pub noise_dim: usize,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub seed: u64,
}

fn default_experiment_id() -> String {
    "run".into()
}

fn default_dataset() -> DatasetSpec {
    DatasetSpec::SwissRoll
}

fn default_gen_optimizer() -> OptimizerConfig {
    OptimizerConfig::adam(1e-4, 0.9, 0.99)
}

fn default_disc_optimizer() -> OptimizerConfig {
    OptimizerConfig::adam(1e-4, 0.9, 0.99)
}

fn default_batch_size() -> usize {
    100
}

fn default_total_iterations() -> u64 {
    10_000
}

fn default_critic_steps() -> u32 {
    5
}

fn default_noise_dim() -> usize {
    2
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.discriminator.validate()?;
        self.gen_optimizer.validate()?;
        self.disc_optimizer.validate()?;
        if self.experiment_id.is_empty() || self.experiment_id.contains([',', '\n', '\r', '/']) {
            return Err(Error::Config(format!(
                "experiment_id {:?} is empty or contains separator characters",
                self.experiment_id
            )));
        }
        if self.critic_steps < 1 {
            return Err(Error::Config("critic_steps must be at least 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.batch_size > self.n_train {
            return Err(Error::Config(format!(
                "batch_size {} exceeds n_train {}",
                self.batch_size, self.n_train
            )));
        }
        if self.noise_dim != self.generator.input_dim {
            return Err(Error::Config(format!(
                "noise_dim {} does not match generator input dim {}",
                self.noise_dim, self.generator.input_dim
            )));
        }
        let data_dim = self.dataset.data_dim();
        if self.generator.output_dim != data_dim {
            return Err(Error::Config(format!(
                "generator output dim {} does not match data dim {data_dim}",
                self.generator.output_dim
            )));
        }
        if self.discriminator.input_dim != data_dim {
            return Err(Error::Config(format!(
                "discriminator input dim {} does not match data dim {data_dim}",
                self.discriminator.input_dim
            )));
        }
        if self.discriminator.output_dim != 1 {
            return Err(Error::Config(format!(
                "discriminator output dim must be 1, got {}",
                self.discriminator.output_dim
            )));
        }
        if self.eval.every < 1 {
            return Err(Error::Config("eval.every must be at least 1".into()));
        }
        if self.eval.samples < 1 || self.eval.repeats < 1 || self.eval.sliced_projections < 1 {
            return Err(Error::Config(
                "eval.samples, eval.repeats, and eval.sliced_projections must be at least 1".into(),
            ));
        }
        if !self.eval.tail_threshold.is_finite() || self.eval.tail_threshold <= 0.0 {
            return Err(Error::Config(
                "eval.tail_threshold must be positive and finite".into(),
            ));
        }
        Ok(())
    }

    /// Parses and validates a JSON config, naming the offending key on
    /// schema violations.
    pub fn from_json(text: &str) -> Result<TrainConfig> {
        let config: TrainConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("train config: {e}")))?;
        config.validate()?;
        Ok(config)
    }
}

/// One evaluation row.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    pub iter: u64,
    pub critic_loss: f64,
    pub gen_loss: f64,
    pub sliced_w1: f64,
    pub exact_w1: f64,
    pub tail_frac: f64,
    pub elapsed_s: f64,
}

/// Evaluation history with strictly increasing iteration stamps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    records: Vec<TrainRecord>,
}

impl TrainLog {
    pub const CSV_HEADER: &'static str =
        "iter,critic_loss,gen_loss,sliced_w1,exact_w1,tail_frac,elapsed_s";

    pub fn new() -> TrainLog {
        TrainLog::default()
    }

    pub fn push(&mut self, record: TrainRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.iter <= last.iter {
                return Err(Error::Config(format!(
                    "log iterations must increase: {} after {}",
                    record.iter, last.iter
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[TrainRecord] {
        &self.records
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.iter, r.critic_loss, r.gen_loss, r.sliced_w1, r.exact_w1, r.tail_frac, r.elapsed_s
            ));
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<TrainLog> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        if header != Self::CSV_HEADER {
            return Err(Error::Format {
                path: "<train log>".into(),
                detail: format!("unexpected header {header:?}"),
            });
        }
        let mut log = TrainLog::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(Error::Format {
                    path: "<train log>".into(),
                    detail: format!("line {}: expected 7 fields, got {}", lineno + 2, fields.len()),
                });
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse().map_err(|_| Error::Format {
                    path: "<train log>".into(),
                    detail: format!("line {}: cannot parse {s:?}", lineno + 2),
                })
            };
            log.push(TrainRecord {
                iter: fields[0].parse().map_err(|_| Error::Format {
                    path: "<train log>".into(),
                    detail: format!("line {}: cannot parse iteration {:?}", lineno + 2, fields[0]),
                })?,
                critic_loss: parse(fields[1])?,
                gen_loss: parse(fields[2])?,
                sliced_w1: parse(fields[3])?,
                exact_w1: parse(fields[4])?,
                tail_frac: parse(fields[5])?,
                elapsed_s: parse(fields[6])?,
            })?;
        }
        Ok(log)
    }
}

/// Snapshot of both networks at an evaluation tick.
#[derive(Debug, Clone)]
pub struct CheckpointRecord {
    pub step: u64,
    pub generator: MlpParams,
    pub discriminator: MlpParams,
}

/// Writes a checkpoint pair into `dir` and returns the two paths.
pub fn write_checkpoint_files(
    rec: &CheckpointRecord,
    seed: u64,
    dir: &Path,
) -> Result<(PathBuf, PathBuf)> {
    let gen_path = dir.join(format!("checkpoint_gen_{:07}.json", rec.step));
    let disc_path = dir.join(format!("checkpoint_disc_{:07}.json", rec.step));
    save_checkpoint(&rec.generator, rec.step, seed, &gen_path)?;
    save_checkpoint(&rec.discriminator, rec.step, seed, &disc_path)?;
    Ok((gen_path, disc_path))
}

/// Metrics from one evaluation (averaged over the configured repeats).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalMetrics {
    pub sliced_w1: f64,
    pub exact_w1: f64,
    pub tail_frac: f64,
}

/// Critic objective and its gradients on fixed batches, in parameter
/// iteration order. The returned value is J_D = mean f(real) - mean
/// f(fake); gradients are of the descended negation.
pub fn critic_loss_and_grads(
    disc: &MlpParams,
    gen: &MlpParams,
    real: &SampleBatch,
    noise: &SampleBatch,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let fake = forward_value(gen, noise.values())?;
    let mut tape = Tape::new();
    let f_real = forward(disc, real.values(), &mut tape)?;
    let f_fake = forward(disc, &fake, &mut tape)?;
    let mean_real = tape.reduce_mean(&f_real)?;
    let mean_fake = tape.reduce_mean(&f_fake)?;
    let loss = tape.sub(&mean_fake, &mean_real)?;
    let j_d = -loss.item()?;
    if !j_d.is_finite() {
        return Err(Error::numeric("critic_step", "non-finite critic loss"));
    }
    tape.backward(&loss)?;
    let grads = collect_grads(&tape, disc)?;
    Ok((j_d, grads))
}

/// One critic update: ascend J_D on the given batches, then re-project
/// the discriminator onto its constraint set. Returns J_D before the
/// update.
pub fn critic_step(
    disc: &mut MlpParams,
    disc_opt: &mut OptimizerState,
    gen: &MlpParams,
    real: &SampleBatch,
    noise: &SampleBatch,
) -> Result<f64> {
    let (j_d, grads) = critic_loss_and_grads(disc, gen, real, noise)?;
    disc_opt.step(disc, &grads)?;
    disc.project()?;
    Ok(j_d)
}

/// Generator objective J_G = -mean f(g(z)) and its gradients on a fixed
/// noise batch, in parameter iteration order.
pub fn generator_loss_and_grads(
    gen: &MlpParams,
    disc: &MlpParams,
    noise: &SampleBatch,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let mut tape = Tape::new();
    let fake = forward(gen, noise.values(), &mut tape)?;
    let f_fake = forward(disc, &fake, &mut tape)?;
    let mean_fake = tape.reduce_mean(&f_fake)?;
    let loss = tape.neg(&mean_fake)?;
    let j_g = loss.item()?;
    if !j_g.is_finite() {
        return Err(Error::numeric("generator_step", "non-finite generator loss"));
    }
    tape.backward(&loss)?;
    let grads = collect_grads(&tape, gen)?;
    Ok((j_g, grads))
}

/// One generator update: descend J_G on the given noise. Returns J_G
/// before the update.
pub fn generator_step(
    gen: &mut MlpParams,
    gen_opt: &mut OptimizerState,
    disc: &MlpParams,
    noise: &SampleBatch,
) -> Result<f64> {
    let (j_g, grads) = generator_loss_and_grads(gen, disc, noise)?;
    gen_opt.step(gen, &grads)?;
    gen.project()?;
    Ok(j_g)
}

fn collect_grads(tape: &Tape, params: &MlpParams) -> Result<Vec<Vec<f64>>> {
    params
        .param_iter()
        .map(|t| {
            tape.grad(t)
                .map(|g| g.to_vec())
                .ok_or_else(|| Error::numeric("collect_grads", "parameter missing from tape"))
        })
        .collect()
}

/// Stateful training run; use [`train`] unless stepping manually.
pub struct Trainer {
    config: TrainConfig,
    gen: MlpParams,
    disc: MlpParams,
    gen_opt: OptimizerState,
    disc_opt: OptimizerState,
    pool: SampleBatch,
    eval_real: SampleBatch,
    batch_rng: Rng,
    noise_rng: Rng,
    eval_root: Rng,
    iter: u64,
    start: Instant,
    log: TrainLog,
    checkpoints: Vec<CheckpointRecord>,
    last_critic_loss: f64,
    last_gen_loss: f64,
}

impl Trainer {
    /// Builds networks and streams for a validated config. `pool` must
    /// hold exactly `n_train` rows; `eval_real` is the held-out batch
    /// evaluations compare against.
    pub fn new(config: TrainConfig, pool: SampleBatch, eval_real: SampleBatch) -> Result<Trainer> {
        config.validate()?;
        if pool.m() != config.n_train {
            return Err(Error::Config(format!(
                "training pool has {} rows, n_train is {}",
                pool.m(),
                config.n_train
            )));
        }
        let data_dim = config.dataset.data_dim();
        if pool.dim() != data_dim || eval_real.dim() != data_dim {
            return Err(Error::shape(
                "train",
                format!(
                    "data dim mismatch: pool {}, eval {}, expected {data_dim}",
                    pool.dim(),
                    eval_real.dim()
                ),
            ));
        }
        let root = Rng::new(config.seed);
        let mut init_rng = root.stream(data::INIT);
        let gen = init_params(&config.generator, &mut init_rng)?;
        let disc = init_params(&config.discriminator, &mut init_rng)?;
        let gen_opt = OptimizerState::new(config.gen_optimizer.clone(), &gen)?;
        let disc_opt = OptimizerState::new(config.disc_optimizer.clone(), &disc)?;
        Ok(Trainer {
            batch_rng: root.stream(data::BATCH),
            noise_rng: root.stream(data::NOISE),
            eval_root: root.stream(data::EVAL),
            config,
            gen,
            disc,
            gen_opt,
            disc_opt,
            pool,
            eval_real,
            iter: 0,
            start: Instant::now(),
            log: TrainLog::new(),
            checkpoints: Vec::new(),
            last_critic_loss: 0.0,
            last_gen_loss: 0.0,
        })
    }

    /// Convenience constructor that synthesizes the dataset from the
    /// config.
    pub fn from_config(config: TrainConfig) -> Result<Trainer> {
        config.validate()?;
        let (pool, eval_real) =
            config
                .dataset
                .build(config.seed, config.n_train, config.eval.samples)?;
        Trainer::new(config, pool, eval_real)
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn iter(&self) -> u64 {
        self.iter
    }

    pub fn generator(&self) -> &MlpParams {
        &self.gen
    }

    pub fn discriminator(&self) -> &MlpParams {
        &self.disc
    }

    pub fn log(&self) -> &TrainLog {
        &self.log
    }

    pub fn checkpoints(&self) -> &[CheckpointRecord] {
        &self.checkpoints
    }

    pub fn last_losses(&self) -> (f64, f64) {
        (self.last_critic_loss, self.last_gen_loss)
    }

    pub fn eval_real(&self) -> &SampleBatch {
        &self.eval_real
    }

    fn with_iter_context(&self, e: Error) -> Error {
        match e {
            Error::Numeric { op, detail } => Error::Numeric {
                op,
                detail: format!("iteration {}: {detail}", self.iter),
            },
            other => other,
        }
    }

    /// One outer iteration: `critic_steps` critic updates, one generator
    /// update, and evaluation plus checkpoint when the schedule says so.
    pub fn step(&mut self) -> Result<()> {
        if self.iter >= self.config.total_iterations {
            return Err(Error::Config(format!(
                "run already finished its {} iterations",
                self.config.total_iterations
            )));
        }
        self.iter += 1;
        for _ in 0..self.config.critic_steps {
            let idx: Vec<usize> = (0..self.config.batch_size)
                .map(|_| self.batch_rng.index(self.config.n_train))
                .collect();
            let real = self.pool.gather(&idx)?;
            let noise = gaussian_noise(
                self.config.batch_size,
                self.config.noise_dim,
                &mut self.noise_rng,
            )?;
            self.last_critic_loss =
                critic_step(&mut self.disc, &mut self.disc_opt, &self.gen, &real, &noise)
                    .map_err(|e| self.with_iter_context(e))?;
        }
        let noise = gaussian_noise(
            self.config.batch_size,
            self.config.noise_dim,
            &mut self.noise_rng,
        )?;
        self.last_gen_loss = generator_step(&mut self.gen, &mut self.gen_opt, &self.disc, &noise)
            .map_err(|e| self.with_iter_context(e))?;

        if self.iter % self.config.eval.every == 0 {
            self.evaluate_and_record()?;
        }
        Ok(())
    }

    /// Runs every remaining iteration, then records the final
    /// checkpoint if the schedule did not already land on it.
    pub fn run(&mut self) -> Result<()> {
        while self.iter < self.config.total_iterations {
            self.step()?;
        }
        let final_step = self.iter;
        if self.checkpoints.last().map(|c| c.step) != Some(final_step) {
            self.checkpoints.push(CheckpointRecord {
                step: final_step,
                generator: self.gen.clone(),
                discriminator: self.disc.clone(),
            });
        }
        Ok(())
    }

    /// Computes metrics for the current networks without touching the
    /// log or the scheduled evaluation streams.
    pub fn evaluate_now(&self) -> Result<EvalMetrics> {
        self.evaluate_at(self.iter)
    }

    fn evaluate_at(&self, tick: u64) -> Result<EvalMetrics> {
        let mut rng = self.eval_root.stream(tick);
        let cfg = &self.config.eval;
        let mut sliced = 0.0;
        let mut exact = 0.0;
        let mut tail = 0.0;
        for _ in 0..cfg.repeats {
            let noise = gaussian_noise(cfg.samples, self.config.noise_dim, &mut rng)?;
            let out = forward_value(&self.gen, noise.values())?;
            let fake = SampleBatch::new(out, BatchTag::Generated)?;
            sliced += sliced_w1(&fake, &self.eval_real, cfg.sliced_projections, &mut rng)?;
            exact += emd_exact_uniform(&fake, &self.eval_real)?.value;
            tail += tail_prob_diagnostic(&fake, cfg.tail_threshold)?;
        }
        let k = cfg.repeats as f64;
        Ok(EvalMetrics {
            sliced_w1: sliced / k,
            exact_w1: exact / k,
            tail_frac: tail / k,
        })
    }

    fn evaluate_and_record(&mut self) -> Result<()> {
        #[cfg(debug_assertions)]
        self.debug_check_constraint();
        let metrics = self
            .evaluate_at(self.iter)
            .map_err(|e| self.with_iter_context(e))?;
        self.log.push(TrainRecord {
            iter: self.iter,
            critic_loss: self.last_critic_loss,
            gen_loss: self.last_gen_loss,
            sliced_w1: metrics.sliced_w1,
            exact_w1: metrics.exact_w1,
            tail_frac: metrics.tail_frac,
            elapsed_s: self.start.elapsed().as_secs_f64(),
        })?;
        self.checkpoints.push(CheckpointRecord {
            step: self.iter,
            generator: self.gen.clone(),
            discriminator: self.disc.clone(),
        });
        Ok(())
    }

    /// Re-projecting a satisfied discriminator must be a near no-op.
    #[cfg(debug_assertions)]
    fn debug_check_constraint(&self) {
        let mut probe = self.disc.clone();
        probe.project().expect("projection of a valid network");
        for (a, b) in self.disc.param_iter().zip(probe.param_iter()) {
            let drift = a
                .data()
                .iter()
                .zip(b.data().iter())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0f64, f64::max);
            debug_assert!(
                drift <= 1e-6,
                "discriminator drifted {drift:.3e} from its constraint set"
            );
        }
    }

    /// Consumes the trainer into its final artifacts.
    pub fn finish(self) -> TrainOutput {
        TrainOutput {
            generator: self.gen,
            discriminator: self.disc,
            log: self.log,
            checkpoints: self.checkpoints,
        }
    }
}

/// Everything a finished run produces.
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub generator: MlpParams,
    pub discriminator: MlpParams,
    pub log: TrainLog,
    pub checkpoints: Vec<CheckpointRecord>,
}

/// Trains to completion on a prebuilt dataset.
pub fn train(config: TrainConfig, pool: SampleBatch, eval_real: SampleBatch) -> Result<TrainOutput> {
    let mut t = Trainer::new(config, pool, eval_real)?;
    t.run()?;
    Ok(t.finish())
}

/// Trains to completion, synthesizing the dataset from the config.
pub fn train_from_config(config: TrainConfig) -> Result<TrainOutput> {
    let mut t = Trainer::from_config(config)?;
    t.run()?;
    Ok(t.finish())
}
