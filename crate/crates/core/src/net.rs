//! Feed-forward generators and critics with enforceable Lipschitz
//! constraints.
//!
//! An [`MlpSpec`] describes a plain MLP: `depth` weight matrices chained
//! `input_dim -> width -> ... -> width -> output_dim`, a hidden activation
//! after every affine layer except the last, and an optional tanh on the
//! output. Weights are stored fan_in x fan_out and act on row vectors, so
//! a batch flows through as `x -> x W + b`.
//!
//! Three constraint regimes keep a critic 1-Lipschitz (together with the
//! norm-preserving GroupSort activation):
//!
//! * `bjorck`: every weight matrix is driven toward the nearest orthogonal
//!   matrix by the Bjorck iteration, so all singular values approach 1 from
//!   below.
//! * `inf_norm`: the first layer gets unit l2 columns (bounding the l2-to-
//!   max operator norm by 1), later layers unit l1 columns (bounding the
//!   max-to-max operator norm by 1). In the row-vector convention used
//!   here, each column holds one output unit's incoming weights.
//! * `clip(c)`: every weight and bias entry clamped to [-c, c].
//!
//! Constraints are enforced by projection after optimizer steps, never by
//! reparameterizing the forward pass, so no gradients flow through the
//! projections. Biases are left unconstrained by `bjorck` and `inf_norm`;
//! `clip` clamps them too.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Tensor};
use crate::data::Rng;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HiddenActivation {
    Relu,
    Groupsort2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    #[default]
    None,
    Tanh,
}

fn default_bjorck_steps() -> usize {
    5
}

fn default_bjorck_order() -> usize {
    2
}

fn default_clip_bound() -> f64 {
    0.01
}

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Constraint {
    #[default]
    None,
    Bjorck {
        #[serde(default = "default_bjorck_steps")]
        steps: usize,
        #[serde(default = "default_bjorck_order")]
        order: usize,
    },
    InfNorm,
    Clip {
        #[serde(default = "default_clip_bound")]
        c: f64,
    },
}

impl Constraint {
    /// The default orthonormalization used in training: 5 steps, order 2.
    pub fn bjorck_default() -> Self {
        Constraint::Bjorck { steps: 5, order: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub width: usize,
    /// Number of weight matrices; at least 2.
    pub depth: usize,
    pub hidden_activation: HiddenActivation,
    #[serde(default)]
    pub output_activation: OutputActivation,
    #[serde(default)]
    pub constraint: Constraint,
}

impl MlpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.width == 0 {
            return Err(Error::Config(format!(
                "mlp dims must be positive, got input {}, output {}, width {}",
                self.input_dim, self.output_dim, self.width
            )));
        }
        if self.depth < 2 {
            return Err(Error::Config(format!(
                "mlp depth must be at least 2, got {}",
                self.depth
            )));
        }
        if self.hidden_activation == HiddenActivation::Groupsort2 && self.width % 2 != 0 {
            return Err(Error::Config(format!(
                "groupsort2 needs an even width, got {}",
                self.width
            )));
        }
        match self.constraint {
            Constraint::Bjorck { steps, order } => {
                if steps == 0 {
                    return Err(Error::Config("bjorck steps must be at least 1".into()));
                }
                if !(1..=2).contains(&order) {
                    return Err(Error::Config(format!(
                        "bjorck order must be 1 or 2, got {order}"
                    )));
                }
            }
            Constraint::Clip { c } => {
                if !(c > 0.0) {
                    return Err(Error::Config(format!("clip bound must be positive, got {c}")));
                }
            }
            Constraint::None | Constraint::InfNorm => {}
        }
        Ok(())
    }

    /// (fan_in, fan_out) of every weight matrix, input to output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.depth);
        let mut fan_in = self.input_dim;
        for i in 0..self.depth {
            let fan_out = if i + 1 == self.depth {
                self.output_dim
            } else {
                self.width
            };
            dims.push((fan_in, fan_out));
            fan_in = fan_out;
        }
        dims
    }
}

/// Live weights and biases for one [`MlpSpec`].
#[derive(Clone, Debug)]
pub struct MlpParams {
    spec: MlpSpec,
    weights: Vec<Tensor>,
    biases: Vec<Tensor>,
}

impl MlpParams {
    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn weights(&self) -> &[Tensor] {
        &self.weights
    }

    pub fn biases(&self) -> &[Tensor] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Tensor] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Tensor] {
        &mut self.biases
    }

    /// Parameters in the fixed order w0, b0, w1, b1, ...; optimizer moment
    /// buffers index into this sequence.
    pub fn param_iter(&self) -> impl Iterator<Item = &Tensor> {
        self.weights
            .iter()
            .zip(self.biases.iter())
            .flat_map(|(w, b)| [w, b])
    }

    pub fn param_iter_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w, b])
    }

    pub fn num_params(&self) -> usize {
        self.param_iter().map(|t| t.len()).sum()
    }

    /// Applies this spec's constraint projection in place.
    pub fn project(&mut self) -> Result<()> {
        match self.spec.constraint {
            Constraint::None => Ok(()),
            Constraint::Bjorck { steps, order } => {
                for w in self.weights.iter_mut() {
                    *w = bjorck_orthonormalize(w, steps, order)?;
                }
                Ok(())
            }
            Constraint::InfNorm => {
                project_inf_norm(self);
                Ok(())
            }
            Constraint::Clip { c } => clip_weights(self, c),
        }
    }
}

/// Fresh parameters: weights uniform on +-sqrt(6/(fan_in+fan_out)), zero
/// biases, constraint projection applied once so invariants hold from step
/// zero. Draw order is layer by layer, row-major within a layer.
pub fn init_params(spec: &MlpSpec, rng: &mut Rng) -> Result<MlpParams> {
    spec.validate()?;
    let mut weights = Vec::with_capacity(spec.depth);
    let mut biases = Vec::with_capacity(spec.depth);
    for (fan_in, fan_out) in spec.layer_dims() {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let mut data = Vec::with_capacity(fan_in * fan_out);
        for _ in 0..fan_in * fan_out {
            data.push(rng.range(-bound, bound));
        }
        weights.push(Tensor::new(fan_in, fan_out, data)?);
        biases.push(Tensor::zeros(1, fan_out));
    }
    let mut params = MlpParams {
        spec: spec.clone(),
        weights,
        biases,
    };
    params.project()?;
    Ok(params)
}

/// Batch forward pass recorded on `tape`.
pub fn forward(params: &MlpParams, x: &Tensor, tape: &mut Tape) -> Result<Tensor> {
    let spec = &params.spec;
    if x.cols() != spec.input_dim {
        return Err(Error::shape(
            "forward",
            format!("input dim {} vs spec {}", x.cols(), spec.input_dim),
        ));
    }
    let mut h = x.clone();
    for i in 0..spec.depth {
        h = tape.affine(&h, &params.weights[i], &params.biases[i])?;
        if i + 1 < spec.depth {
            h = match spec.hidden_activation {
                HiddenActivation::Relu => tape.relu(&h)?,
                HiddenActivation::Groupsort2 => tape.groupsort2(&h)?,
            };
        }
    }
    match spec.output_activation {
        OutputActivation::None => Ok(h),
        OutputActivation::Tanh => tape.tanh_act(&h),
    }
}

/// Forward pass on a throwaway tape, for evaluation. The result is
/// detached and safe to feed into any other tape.
pub fn forward_value(params: &MlpParams, x: &Tensor) -> Result<Tensor> {
    Ok(forward(params, x, &mut Tape::new())?.detach())
}

fn max_col_abs_sum(w: &Tensor) -> f64 {
    let mut best = 0.0f64;
    for j in 0..w.cols() {
        let mut s = 0.0;
        for i in 0..w.rows() {
            s += w.get(i, j).abs();
        }
        best = best.max(s);
    }
    best
}

fn max_row_abs_sum(w: &Tensor) -> f64 {
    let mut best = 0.0f64;
    for i in 0..w.rows() {
        best = best.max(w.row(i).iter().map(|v| v.abs()).sum());
    }
    best
}

/// I + Q/2 (+ 3 Q^2 / 8 for order 2).
fn bjorck_poly(q: &Tensor, order: usize) -> Result<Tensor> {
    let n = q.rows();
    let mut p = Tensor::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id + 0.5 * q.get(i, j)
    });
    if order == 2 {
        let q2 = q.matmul(q)?;
        let pd = p.data_mut();
        for (i, v) in q2.data().iter().enumerate() {
            pd[i] += 0.375 * v;
        }
    }
    Ok(p)
}

/// Drives `w` toward the nearest orthogonal matrix.
///
/// The input is first scaled by 1/sqrt(max-col-sum * max-row-sum), an upper
/// bound on the spectral norm, so all singular values enter [0, 1], where
/// the iteration converges monotonically upward and never overshoots 1.
/// Each step applies A <- A (I + Q/2 + 3 Q^2/8) with Q = I - A^T A (order 1
/// drops the quadratic term); Q is formed on the smaller Gram side.
pub fn bjorck_orthonormalize(w: &Tensor, steps: usize, order: usize) -> Result<Tensor> {
    if steps == 0 || !(1..=2).contains(&order) {
        return Err(Error::Config(format!(
            "bjorck needs steps >= 1 and order in {{1,2}}, got steps {steps}, order {order}"
        )));
    }
    if !w.data().iter().all(|v| v.is_finite()) {
        return Err(Error::numeric("bjorck", "non-finite weight entry"));
    }
    let bound_sq = max_col_abs_sum(w) * max_row_abs_sum(w);
    if bound_sq == 0.0 {
        return Ok(w.clone());
    }
    let alpha = 1.0 / bound_sq.sqrt();
    let mut a = Tensor::from_fn(w.rows(), w.cols(), |i, j| alpha * w.get(i, j));

    let left_side = w.rows() <= w.cols();
    for _ in 0..steps {
        let q = if left_side {
            let g = a.matmul(&a.transpose())?;
            Tensor::from_fn(g.rows(), g.cols(), |i, j| {
                let id = if i == j { 1.0 } else { 0.0 };
                id - g.get(i, j)
            })
        } else {
            let g = a.transpose().matmul(&a)?;
            Tensor::from_fn(g.rows(), g.cols(), |i, j| {
                let id = if i == j { 1.0 } else { 0.0 };
                id - g.get(i, j)
            })
        };
        let p = bjorck_poly(&q, order)?;
        a = if left_side { p.matmul(&a)? } else { a.matmul(&p)? };
    }
    Ok(a)
}

/// Mixed-norm projection: first layer to unit l2 columns, later layers to
/// unit l1 columns (columns hold each output unit's incoming weights).
/// Already-feasible columns are untouched, so the projection is exact and
/// idempotent. Biases are left alone.
pub fn project_inf_norm(params: &mut MlpParams) {
    for (layer, w) in params.weights.iter_mut().enumerate() {
        let (rows, cols) = (w.rows(), w.cols());
        let data = w.data_mut();
        for j in 0..cols {
            let mut norm = 0.0;
            for i in 0..rows {
                let v = data[i * cols + j];
                norm += if layer == 0 { v * v } else { v.abs() };
            }
            if layer == 0 {
                norm = norm.sqrt();
            }
            if norm > 1.0 {
                for i in 0..rows {
                    data[i * cols + j] /= norm;
                }
            }
        }
    }
}

/// Clamps every weight and bias entry to [-c, c].
pub fn clip_weights(params: &mut MlpParams, c: f64) -> Result<()> {
    if !(c > 0.0) {
        return Err(Error::Config(format!("clip bound must be positive, got {c}")));
    }
    for t in params.param_iter_mut() {
        for v in t.data_mut() {
            *v = v.clamp(-c, c);
        }
    }
    Ok(())
}

/// Largest singular value of `w`, estimated by power iteration on the Gram
/// matrix; the estimate approaches the true value from below.
pub fn spectral_norm_estimate(w: &Tensor, iters: usize, rng: &mut Rng) -> Result<f64> {
    if iters == 0 {
        return Err(Error::Config("spectral norm estimate needs iters >= 1".into()));
    }
    let (rows, cols) = (w.rows(), w.cols());
    let mut v: Vec<f64> = (0..cols).map(|_| rng.normal()).collect();
    let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = norm(&v);
    if nv == 0.0 {
        return Ok(0.0);
    }
    for x in v.iter_mut() {
        *x /= nv;
    }
    let mut u = vec![0.0; rows];
    for _ in 0..iters {
        for (i, ui) in u.iter_mut().enumerate() {
            let row = w.row(i);
            *ui = row.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        }
        for (j, vj) in v.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..rows {
                acc += w.get(i, j) * u[i];
            }
            *vj = acc;
        }
        let nv = norm(&v);
        if nv == 0.0 {
            return Ok(0.0);
        }
        for x in v.iter_mut() {
            *x /= nv;
        }
    }
    for (i, ui) in u.iter_mut().enumerate() {
        let row = w.row(i);
        *ui = row.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
    }
    Ok(norm(&u))
}

const CAP_SEED: u64 = 0xCA9_0BB;

/// Scales weights down to spectral norm at most `m_bound` and biases to l2
/// norm at most `m_bound`. Off by default in training; opt-in via config.
/// The spectral estimates use a fixed-seed internal stream so the cap is
/// deterministic.
pub fn cap_generator_norm(params: &mut MlpParams, m_bound: f64) -> Result<()> {
    if !(m_bound > 0.0) {
        return Err(Error::Config(format!(
            "generator norm bound must be positive, got {m_bound}"
        )));
    }
    let mut rng = Rng::new(CAP_SEED);
    for w in params.weights.iter_mut() {
        let sn = spectral_norm_estimate(w, 100, &mut rng)?;
        if sn > m_bound {
            let s = m_bound / sn;
            for v in w.data_mut() {
                *v *= s;
            }
        }
    }
    for b in params.biases.iter_mut() {
        let norm = b.data().iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > m_bound {
            let s = m_bound / norm;
            for v in b.data_mut() {
                *v *= s;
            }
        }
    }
    Ok(())
}

/// On-disk model snapshot. Weight matrices are stored row-major; floats
/// round-trip value-exactly through the JSON decimal encoding.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    spec: MlpSpec,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    step: u64,
    seed: u64,
}

pub fn save_checkpoint(
    params: &MlpParams,
    step: u64,
    seed: u64,
    path: impl AsRef<Path>,
) -> Result<()> {
    let file = CheckpointFile {
        spec: params.spec.clone(),
        weights: params.weights.iter().map(|w| w.data().to_vec()).collect(),
        biases: params.biases.iter().map(|b| b.data().to_vec()).collect(),
        step,
        seed,
    };
    let path_str = path.as_ref().display().to_string();
    let json = serde_json::to_string_pretty(&file).map_err(|e| Error::Json {
        path: path_str.clone(),
        source: e,
    })?;
    std::fs::write(path.as_ref(), json + "\n").map_err(|e| Error::io(path_str, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(MlpParams, u64, u64)> {
    let path_str = path.as_ref().display().to_string();
    let bytes = std::fs::read(path.as_ref()).map_err(|e| Error::io(path_str.clone(), e))?;
    let file: CheckpointFile = serde_json::from_slice(&bytes).map_err(|e| Error::Json {
        path: path_str.clone(),
        source: e,
    })?;
    file.spec.validate()?;
    let dims = file.spec.layer_dims();
    if file.weights.len() != dims.len() || file.biases.len() != dims.len() {
        return Err(Error::format(
            &path_str,
            format!(
                "expected {} layers, found {} weight and {} bias arrays",
                dims.len(),
                file.weights.len(),
                file.biases.len()
            ),
        ));
    }
    let mut weights = Vec::with_capacity(dims.len());
    let mut biases = Vec::with_capacity(dims.len());
    for (i, ((fan_in, fan_out), (wdata, bdata))) in dims
        .iter()
        .zip(file.weights.into_iter().zip(file.biases.into_iter()))
        .enumerate()
    {
        if wdata.len() != fan_in * fan_out {
            return Err(Error::format(
                &path_str,
                format!(
                    "layer {i} weight length {} does not match {fan_in}x{fan_out}",
                    wdata.len()
                ),
            ));
        }
        if bdata.len() != *fan_out {
            return Err(Error::format(
                &path_str,
                format!("layer {i} bias length {} does not match {fan_out}", bdata.len()),
            ));
        }
        if wdata.iter().chain(bdata.iter()).any(|v| !v.is_finite()) {
            return Err(Error::format(&path_str, format!("non-finite entry in layer {i}")));
        }
        weights.push(Tensor::new(*fan_in, *fan_out, wdata)?);
        biases.push(Tensor::new(1, *fan_out, bdata)?);
    }
    Ok((
        MlpParams {
            spec: file.spec,
            weights,
            biases,
        },
        file.step,
        file.seed,
    ))
}
