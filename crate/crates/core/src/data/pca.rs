//! Principal component analysis by power iteration with deflation.
//!
//! The fit centers the data, forms the d x d sample covariance (divisor
//! m - 1), and extracts the top-k eigenpairs one at a time: power-iterate,
//! re-orthogonalize against already-found components every step, read the
//! eigenvalue off the Rayleigh quotient, deflate. Directions whose residual
//! variance is numerically zero are completed from the standard basis so
//! the component rows always form an orthonormal set, even at k = d on
//! degenerate data.

use super::{Rng, SampleBatch};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

const POWER_ITERS: usize = 500;
const FIT_SEED: u64 = 0x50CA_F17;

#[derive(Clone, Debug)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// k x d, orthonormal rows, sorted by descending explained variance.
    components: Tensor,
    explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.components.cols()
    }

    pub fn k(&self) -> usize {
        self.components.rows()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &Tensor {
        &self.components
    }

    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }
}

/// Removes from `v` its projections onto the first `n` rows of `basis`.
fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>], n: usize) {
    for b in basis.iter().take(n) {
        let dot: f64 = v.iter().zip(b.iter()).map(|(a, c)| a * c).sum();
        for (vi, bi) in v.iter_mut().zip(b.iter()) {
            *vi -= dot * bi;
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Unit vector orthogonal to the first `n` rows of `basis`, built by
/// orthogonalizing standard basis vectors. Only callable while n < d.
fn complete_basis(basis: &[Vec<f64>], n: usize, d: usize) -> Vec<f64> {
    for axis in 0..d {
        let mut v = vec![0.0; d];
        v[axis] = 1.0;
        orthogonalize(&mut v, basis, n);
        let nv = norm(&v);
        if nv > 1e-6 {
            for x in v.iter_mut() {
                *x /= nv;
            }
            return v;
        }
    }
    unreachable!("orthonormal set of size < d always has a completion");
}

pub fn pca_fit(data: &SampleBatch, k: usize) -> Result<PcaModel> {
    let (m, d) = (data.m(), data.dim());
    if k == 0 || k > d {
        return Err(Error::Config(format!(
            "pca_fit k must be in 1..={d}, got {k}"
        )));
    }
    if m <= k {
        return Err(Error::Config(format!(
            "pca_fit needs more samples than components, got m={m}, k={k}"
        )));
    }

    let x = data.values();
    let mut mean = vec![0.0; d];
    for i in 0..m {
        for (j, mj) in mean.iter_mut().enumerate() {
            *mj += x.get(i, j);
        }
    }
    for mj in mean.iter_mut() {
        *mj /= m as f64;
    }

    // Covariance accumulated row by row; O(m d^2).
    let mut cov = vec![0.0; d * d];
    let mut centered = vec![0.0; d];
    for i in 0..m {
        for j in 0..d {
            centered[j] = x.get(i, j) - mean[j];
        }
        for a in 0..d {
            let ca = centered[a];
            let row = &mut cov[a * d..(a + 1) * d];
            for b in 0..d {
                row[b] += ca * centered[b];
            }
        }
    }
    let denom = (m - 1) as f64;
    for c in cov.iter_mut() {
        *c /= denom;
    }

    let scale = (0..d).map(|j| cov[j * d + j]).sum::<f64>().max(1e-300) / d as f64;
    let mut rng = Rng::new(FIT_SEED);
    let mut comps: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut eigs = Vec::with_capacity(k);

    for c in 0..k {
        let mut v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        orthogonalize(&mut v, &comps, c);
        let nv = norm(&v);
        if nv < 1e-8 {
            v = complete_basis(&comps, c, d);
        } else {
            for x in v.iter_mut() {
                *x /= nv;
            }
        }

        for _ in 0..POWER_ITERS {
            let mut w = vec![0.0; d];
            for a in 0..d {
                let row = &cov[a * d..(a + 1) * d];
                let mut acc = 0.0;
                for b in 0..d {
                    acc += row[b] * v[b];
                }
                w[a] = acc;
            }
            orthogonalize(&mut w, &comps, c);
            let nw = norm(&w);
            if nw <= 1e-12 * scale {
                // Residual variance in this direction is numerically zero;
                // keep the current orthonormal v with eigenvalue ~0.
                break;
            }
            for x in w.iter_mut() {
                *x /= nw;
            }
            let align: f64 = w.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            v = w;
            if 1.0 - align.abs() < 1e-14 {
                break;
            }
        }

        let mut lambda = 0.0;
        for a in 0..d {
            let row = &cov[a * d..(a + 1) * d];
            let mut acc = 0.0;
            for b in 0..d {
                acc += row[b] * v[b];
            }
            lambda += v[a] * acc;
        }
        let lambda = lambda.max(0.0);
        for a in 0..d {
            for b in 0..d {
                cov[a * d + b] -= lambda * v[a] * v[b];
            }
        }
        comps.push(v);
        eigs.push(lambda);
    }

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eigs[b].total_cmp(&eigs[a]).then(a.cmp(&b)));
    let components = Tensor::from_fn(k, d, |i, j| comps[order[i]][j]);
    let explained_variance = order.iter().map(|&i| eigs[i]).collect();

    Ok(PcaModel {
        mean,
        components,
        explained_variance,
    })
}

/// Projects a batch onto the fitted components: (x - mean) C^T, m x k.
pub fn pca_transform(model: &PcaModel, batch: &SampleBatch) -> Result<SampleBatch> {
    if batch.dim() != model.dim() {
        return Err(Error::shape(
            "pca_transform",
            format!("batch dim {} vs model dim {}", batch.dim(), model.dim()),
        ));
    }
    let (m, d, k) = (batch.m(), model.dim(), model.k());
    let x = batch.values();
    let c = &model.components;
    let out = Tensor::from_fn(m, k, |i, comp| {
        let mut acc = 0.0;
        for j in 0..d {
            acc += (x.get(i, j) - model.mean[j]) * c.get(comp, j);
        }
        acc
    });
    SampleBatch::new(out, batch.tag())
}
