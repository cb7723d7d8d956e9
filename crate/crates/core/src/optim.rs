//! First-order optimizers: SGD, uncentered RMSProp, Adam.
//!
//! One [`OptimizerState`] owns the moment buffers for one network; buffers
//! mirror the parameter sequence w0, b0, w1, b1, ... exactly. Steps are
//! pure functions of (state, gradients): the same inputs produce bit-
//! identical parameters on every machine.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::MlpParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Rmsprop,
    Adam,
}

fn default_eps() -> f64 {
    1e-8
}

/// Flat optimizer description as it appears in training configs. Fields
/// that do not apply to the chosen kind must be omitted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub lr: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

impl OptimizerConfig {
    pub fn sgd(lr: f64) -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Sgd,
            lr,
            beta1: None,
            beta2: None,
            rho: None,
            eps: default_eps(),
        }
    }

    pub fn rmsprop(lr: f64, rho: f64) -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Rmsprop,
            lr,
            beta1: None,
            beta2: None,
            rho: Some(rho),
            eps: default_eps(),
        }
    }

    pub fn adam(lr: f64, beta1: f64, beta2: f64) -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Adam,
            lr,
            beta1: Some(beta1),
            beta2: Some(beta2),
            rho: None,
            eps: default_eps(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config(format!("eps must be positive, got {}", self.eps)));
        }
        let in_unit = |v: f64| (0.0..1.0).contains(&v);
        match self.kind {
            OptimizerKind::Sgd => {
                if self.beta1.is_some() || self.beta2.is_some() || self.rho.is_some() {
                    return Err(Error::Config(
                        "sgd takes no beta1/beta2/rho parameters".into(),
                    ));
                }
            }
            OptimizerKind::Rmsprop => {
                if self.beta1.is_some() || self.beta2.is_some() {
                    return Err(Error::Config("rmsprop takes rho, not beta1/beta2".into()));
                }
                let rho = self.rho.unwrap_or(0.9);
                if !in_unit(rho) {
                    return Err(Error::Config(format!("rho must be in [0, 1), got {rho}")));
                }
            }
            OptimizerKind::Adam => {
                if self.rho.is_some() {
                    return Err(Error::Config("adam takes beta1/beta2, not rho".into()));
                }
                for (name, v) in [
                    ("beta1", self.beta1.unwrap_or(0.9)),
                    ("beta2", self.beta2.unwrap_or(0.99)),
                ] {
                    if !in_unit(v) {
                        return Err(Error::Config(format!("{name} must be in [0, 1), got {v}")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Per-network optimizer with moment buffers shaped like the parameters.
#[derive(Clone, Debug)]
pub struct OptimizerState {
    config: OptimizerConfig,
    t: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(config: OptimizerConfig, params: &MlpParams) -> Result<Self> {
        config.validate()?;
        let shapes: Vec<usize> = params.param_iter().map(|p| p.len()).collect();
        let zero = |_: &usize| vec![];
        let (first, second) = match config.kind {
            OptimizerKind::Sgd => (
                shapes.iter().map(zero).collect(),
                shapes.iter().map(zero).collect(),
            ),
            OptimizerKind::Rmsprop => (
                shapes.iter().map(zero).collect(),
                shapes.iter().map(|&n| vec![0.0; n]).collect(),
            ),
            OptimizerKind::Adam => (
                shapes.iter().map(|&n| vec![0.0; n]).collect(),
                shapes.iter().map(|&n| vec![0.0; n]).collect(),
            ),
        };
        Ok(OptimizerState {
            config,
            t: 0,
            first,
            second,
        })
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    /// Number of completed steps.
    pub fn t(&self) -> u64 {
        self.t
    }

    /// Applies one update. `grads` must align with the parameter sequence
    /// w0, b0, w1, b1, ... both in count and in per-tensor length.
    pub fn step(&mut self, params: &mut MlpParams, grads: &[Vec<f64>]) -> Result<()> {
        let count = self.second.len().max(self.first.len());
        if grads.len() != count {
            return Err(Error::Config(format!(
                "got {} gradient arrays for {} parameters",
                grads.len(),
                count
            )));
        }
        for (i, (p, g)) in params.param_iter_mut().zip(grads.iter()).enumerate() {
            if g.len() != p.len() {
                return Err(Error::shape(
                    "optimizer_step",
                    format!("gradient {i} has length {}, parameter has {}", g.len(), p.len()),
                ));
            }
            if !g.iter().all(|v| v.is_finite()) {
                return Err(Error::numeric(
                    "optimizer_step",
                    format!("non-finite gradient in parameter {i}"),
                ));
            }
        }

        self.t += 1;
        let lr = self.config.lr;
        let eps = self.config.eps;
        match self.config.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.param_iter_mut().zip(grads.iter()) {
                    for (pv, gv) in p.data_mut().iter_mut().zip(g.iter()) {
                        *pv -= lr * gv;
                    }
                }
            }
            OptimizerKind::Rmsprop => {
                let rho = self.config.rho.unwrap_or(0.9);
                for ((p, g), s) in params
                    .param_iter_mut()
                    .zip(grads.iter())
                    .zip(self.second.iter_mut())
                {
                    for ((pv, gv), sv) in p.data_mut().iter_mut().zip(g.iter()).zip(s.iter_mut()) {
                        *sv = rho * *sv + (1.0 - rho) * gv * gv;
                        *pv -= lr * gv / (sv.sqrt() + eps);
                    }
                }
            }
            OptimizerKind::Adam => {
                let b1 = self.config.beta1.unwrap_or(0.9);
                let b2 = self.config.beta2.unwrap_or(0.99);
                let bc1 = 1.0 - b1.powi(self.t as i32);
                let bc2 = 1.0 - b2.powi(self.t as i32);
                for (((p, g), m), v) in params
                    .param_iter_mut()
                    .zip(grads.iter())
                    .zip(self.first.iter_mut())
                    .zip(self.second.iter_mut())
                {
                    for (((pv, gv), mv), vv) in p
                        .data_mut()
                        .iter_mut()
                        .zip(g.iter())
                        .zip(m.iter_mut())
                        .zip(v.iter_mut())
                    {
                        *mv = b1 * *mv + (1.0 - b1) * gv;
                        *vv = b2 * *vv + (1.0 - b2) * gv * gv;
                        let mhat = *mv / bc1;
                        let vhat = *vv / bc2;
                        *pv -= lr * mhat / (vhat.sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}
