//! Sample sources and preprocessing: PRNG streams, Swiss roll, Gaussian
//! noise, MNIST ingestion, PCA.

mod mnist;
mod pca;
mod rng;

pub use mnist::mnist_load;
pub use pca::{pca_fit, pca_transform, PcaModel};
pub use rng::{Rng, BATCH, DATA, EVAL, HELD_OUT, INIT, NOISE};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};

/// Provenance of a batch of samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BatchTag {
    Real,
    Generated,
    Noise,
}

/// An m x d matrix of samples plus a provenance tag.
#[derive(Clone, Debug)]
pub struct SampleBatch {
    values: Tensor,
    tag: BatchTag,
}

impl SampleBatch {
    pub fn new(values: Tensor, tag: BatchTag) -> Result<Self> {
        if values.rows() == 0 {
            return Err(Error::shape("sample_batch", "empty batch"));
        }
        if !values.data().iter().all(|v| v.is_finite()) {
            return Err(Error::numeric("sample_batch", "non-finite sample entry"));
        }
        Ok(SampleBatch { values, tag })
    }

    /// Number of samples.
    pub fn m(&self) -> usize {
        self.values.rows()
    }

    /// Sample dimension.
    pub fn dim(&self) -> usize {
        self.values.cols()
    }

    pub fn tag(&self) -> BatchTag {
        self.tag
    }

    pub fn values(&self) -> &Tensor {
        &self.values
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    /// Batch holding rows `lo..hi` of this batch, same tag.
    pub fn slice_rows(&self, lo: usize, hi: usize) -> Result<SampleBatch> {
        if lo >= hi || hi > self.m() {
            return Err(Error::shape(
                "slice_rows",
                format!("rows {lo}..{hi} of {}", self.m()),
            ));
        }
        let d = self.dim();
        let vals = Tensor::from_fn(hi - lo, d, |i, j| self.values.get(lo + i, j));
        SampleBatch::new(vals, self.tag)
    }

    /// Batch of the given rows (indices may repeat), same tag.
    pub fn gather(&self, idx: &[usize]) -> Result<SampleBatch> {
        if idx.is_empty() {
            return Err(Error::shape("gather", "empty index list"));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.m()) {
            return Err(Error::shape(
                "gather",
                format!("index {bad} out of {} rows", self.m()),
            ));
        }
        let d = self.dim();
        let vals = Tensor::from_fn(idx.len(), d, |i, j| self.values.get(idx[i], j));
        SampleBatch::new(vals, self.tag)
    }
}

/// Swiss-roll target: (z cos 4 pi z, z sin 4 pi z) with z ~ Uniform[0.25, 1],
/// one uniform draw per sample. Every sample's l2 norm equals its z.
pub fn swiss_roll(m: usize, rng: &mut Rng) -> Result<SampleBatch> {
    if m == 0 {
        return Err(Error::Config("swiss_roll needs m >= 1".into()));
    }
    let mut data = Vec::with_capacity(m * 2);
    for _ in 0..m {
        let z = rng.range(0.25, 1.0);
        let angle = 4.0 * std::f64::consts::PI * z;
        data.push(z * angle.cos());
        data.push(z * angle.sin());
    }
    SampleBatch::new(Tensor::new(m, 2, data)?, BatchTag::Real)
}

/// i.i.d. standard normal entries, row-major draw order.
pub fn gaussian_noise(m: usize, r: usize, rng: &mut Rng) -> Result<SampleBatch> {
    if m == 0 || r == 0 {
        return Err(Error::Config("gaussian_noise needs m, r >= 1".into()));
    }
    let mut data = Vec::with_capacity(m * r);
    for _ in 0..m * r {
        data.push(rng.normal());
    }
    SampleBatch::new(Tensor::new(m, r, data)?, BatchTag::Noise)
}

/// Serializes a batch as bare numeric CSV, one sample per row, no
/// header. Values round-trip exactly through [`points_from_csv`].
pub fn points_to_csv(batch: &SampleBatch) -> String {
    let mut out = String::new();
    for i in 0..batch.m() {
        let row: Vec<String> = batch.sample(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parses bare numeric CSV (no header, every row the same arity) into a
/// batch tagged as real samples.
pub fn points_from_csv(text: &str) -> Result<SampleBatch> {
    let mut dim: Option<usize> = None;
    let mut data = Vec::new();
    let mut rows = 0;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut count = 0;
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::format(
                    "<points csv>",
                    format!("line {}: cannot parse {field:?}", lineno + 1),
                )
            })?;
            data.push(v);
            count += 1;
        }
        match dim {
            None => dim = Some(count),
            Some(d) if d == count => {}
            Some(d) => {
                return Err(Error::format(
                    "<points csv>",
                    format!("line {}: {count} fields, expected {d}", lineno + 1),
                ))
            }
        }
        rows += 1;
    }
    let dim = dim.ok_or_else(|| Error::format("<points csv>", "no data rows"))?;
    SampleBatch::new(Tensor::new(rows, dim, data)?, BatchTag::Real)
}
