//! Demo state and operations, independent of the browser bindings so
//! they can be exercised by native tests.

use gswgan::autodiff::Tensor;
use gswgan::data::{BatchTag, Rng, SampleBatch};
use gswgan::error::{Error, Result};
use gswgan::net::{
    forward_value, Constraint, HiddenActivation, MlpSpec, OutputActivation,
};
use gswgan::optim::OptimizerConfig;
use gswgan::ot::{emd_exact_uniform, sliced_w1};
use gswgan::train::{DatasetSpec, EvalConfig, TrainConfig, Trainer};

/// Stream tag for the demo's own monitor and display draws, disjoint
/// from every stream the trainer uses.
const MONITOR_STREAM: u64 = 100;

/// Small-but-real training setup sized for interactive stepping: Swiss
/// roll, width-16 depth-2 networks, Bjorck GroupSort critic.
pub fn demo_config(seed: u64) -> TrainConfig {
    TrainConfig {
        experiment_id: "browser_demo".into(),
        dataset: DatasetSpec::SwissRoll,
        generator: MlpSpec {
            input_dim: 2,
            output_dim: 2,
            width: 16,
            depth: 2,
            hidden_activation: HiddenActivation::Relu,
            output_activation: OutputActivation::None,
            constraint: Constraint::None,
        },
        discriminator: MlpSpec {
            input_dim: 2,
            output_dim: 1,
            width: 16,
            depth: 2,
            hidden_activation: HiddenActivation::Groupsort2,
            output_activation: OutputActivation::None,
            constraint: Constraint::bjorck_default(),
        },
        gen_optimizer: OptimizerConfig::adam(1e-4, 0.9, 0.99),
        disc_optimizer: OptimizerConfig::adam(1e-4, 0.9, 0.99),
        batch_size: 64,
        total_iterations: 1_000_000_000,
        critic_steps: 5,
        n_train: 512,
        noise_dim: 2,
        eval: EvalConfig {
            // The page drives its own cheap monitor; the trainer's
            // scheduled (exact-W1) evaluation stays out of the loop.
            every: 1_000_000_000,
            samples: 256,
            repeats: 1,
            sliced_projections: 24,
            tail_threshold: 2.0,
        },
        seed,
    }
}

/// A live training run plus its on-page monitor history.
pub struct DemoState {
    trainer: Trainer,
    monitor_rng: Rng,
    history: Vec<(u64, f64)>,
}

impl DemoState {
    pub fn new(seed: u64) -> Result<DemoState> {
        let config = demo_config(seed);
        let trainer = Trainer::from_config(config)?;
        Ok(DemoState {
            monitor_rng: Rng::new(seed).stream(MONITOR_STREAM),
            trainer,
            history: Vec::new(),
        })
    }

    pub fn iteration(&self) -> u64 {
        self.trainer.iter()
    }

    /// Runs `outer_iterations` full iterations, then appends one sliced
    /// monitor point to the history.
    pub fn step(&mut self, outer_iterations: u32) -> Result<()> {
        for _ in 0..outer_iterations.max(1) {
            self.trainer.step()?;
        }
        let fake = self.sample_fake(self.trainer.config().eval.samples)?;
        let value = sliced_w1(
            &fake,
            self.trainer.eval_real(),
            self.trainer.config().eval.sliced_projections,
            &mut self.monitor_rng,
        )?;
        self.history.push((self.trainer.iter(), value));
        Ok(())
    }

    /// Draws fresh noise and pushes it through the current generator.
    pub fn sample_fake(&mut self, n: usize) -> Result<SampleBatch> {
        let noise = gswgan::data::gaussian_noise(
            n,
            self.trainer.config().noise_dim,
            &mut self.monitor_rng,
        )?;
        let out = forward_value(self.trainer.generator(), noise.values())?;
        SampleBatch::new(out, BatchTag::Generated)
    }

    /// Held-out real samples, flattened as x0, y0, x1, y1, ...
    pub fn real_points_flat(&self) -> Vec<f64> {
        self.trainer.eval_real().values().data().to_vec()
    }

    /// Fresh generator samples, flattened as x0, y0, x1, y1, ...
    pub fn fake_points_flat(&mut self, n: usize) -> Result<Vec<f64>> {
        Ok(self.sample_fake(n)?.values().data().to_vec())
    }

    /// Monitor history, flattened as iter0, value0, iter1, value1, ...
    pub fn history_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.history.len() * 2);
        for &(it, v) in &self.history {
            out.push(it as f64);
            out.push(v);
        }
        out
    }

    /// (critic, generator) objective values from the latest updates.
    pub fn last_losses(&self) -> (f64, f64) {
        self.trainer.last_losses()
    }

    /// Critic values on an `nx` x `ny` grid over the given rectangle,
    /// row-major with x fastest: entry `iy * nx + ix` holds
    /// f(x0 + ix dx, y0 + iy dy).
    pub fn critic_heatmap(
        &self,
        nx: usize,
        ny: usize,
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
    ) -> Result<Vec<f64>> {
        if nx < 2 || ny < 2 {
            return Err(Error::Config("heatmap needs at least a 2x2 grid".into()));
        }
        let grid = Tensor::from_fn(nx * ny, 2, |k, col| {
            let ix = k % nx;
            let iy = k / nx;
            if col == 0 {
                x0 + (x1 - x0) * ix as f64 / (nx - 1) as f64
            } else {
                y0 + (y1 - y0) * iy as f64 / (ny - 1) as f64
            }
        });
        let out = forward_value(self.trainer.discriminator(), &grid)?;
        Ok(out.data().to_vec())
    }

    /// Exact W1 between `n` fresh generator samples and `n` held-out
    /// real points, as JSON: the value and one record per plan entry
    /// with endpoint coordinates and transported mass.
    pub fn transport_json(&mut self, n: usize) -> Result<String> {
        let eval = self.trainer.eval_real();
        let n = n.clamp(2, eval.m());
        let real = eval.slice_rows(0, n)?;
        let fake = self.sample_fake(n)?;
        let solution = emd_exact_uniform(&fake, &real)?;
        let edges: Vec<serde_json::Value> = solution
            .plan
            .iter()
            .map(|&(i, j, mass)| {
                let a = fake.sample(i);
                let b = real.sample(j);
                serde_json::json!([a[0], a[1], b[0], b[1], mass])
            })
            .collect();
        Ok(serde_json::json!({ "w1": solution.value, "edges": edges }).to_string())
    }
}
