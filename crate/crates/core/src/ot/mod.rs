//! Empirical optimal transport in Euclidean cost.
//!
//! The centerpiece is [`emd_exact`], an exact Wasserstein-1 solver for
//! discrete measures built on a transportation network simplex. Around it
//! sit the quadratic-cost-free helpers: pairwise distance matrices, the
//! closed-form one-dimensional solution, the sliced approximation used
//! for cheap in-training monitoring, and a tail-mass diagnostic for
//! generator outputs.

mod simplex;

use std::time::Instant;

use crate::autodiff::Tensor;
use crate::data::{Rng, SampleBatch};
use crate::error::{Error, Result};

/// Dense m x n matrix of pairwise Euclidean distances.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    m: usize,
    n: usize,
    entries: Vec<f64>,
}

impl CostMatrix {
    /// Wraps raw entries; rejects shape mismatches and invalid costs.
    pub fn from_entries(m: usize, n: usize, entries: Vec<f64>) -> Result<CostMatrix> {
        if m == 0 || n == 0 {
            return Err(Error::shape("cost_matrix", "both sides must be non-empty"));
        }
        if entries.len() != m * n {
            return Err(Error::shape(
                "cost_matrix",
                format!("expected {} entries for {m}x{n}, got {}", m * n, entries.len()),
            ));
        }
        if entries.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::numeric(
                "cost_matrix",
                "costs must be finite and non-negative",
            ));
        }
        Ok(CostMatrix { m, n, entries })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// Euclidean distance matrix between two batches of equal dimension.
pub fn cost_matrix(a: &SampleBatch, b: &SampleBatch) -> Result<CostMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::shape(
            "cost_matrix",
            format!("dimension mismatch: {} vs {}", a.dim(), b.dim()),
        ));
    }
    let (m, n, d) = (a.m(), b.m(), a.dim());
    let av = a.values().data();
    let bv = b.values().data();
    let mut entries = vec![0.0; m * n];
    for i in 0..m {
        let xi = &av[i * d..(i + 1) * d];
        for j in 0..n {
            let yj = &bv[j * d..(j + 1) * d];
            let mut s = 0.0;
            for k in 0..d {
                let diff = xi[k] - yj[k];
                s += diff * diff;
            }
            entries[i * n + j] = s.sqrt();
        }
    }
    CostMatrix::from_entries(m, n, entries)
}

/// Exact W1 value and a sparse optimal plan as (i, j, mass) triples.
/// `pivots` counts simplex basis changes, useful when profiling solves.
#[derive(Debug, Clone)]
pub struct EmdSolution {
    pub value: f64,
    pub plan: Vec<(usize, usize, f64)>,
    pub pivots: u64,
}

fn validate_weights(op: &'static str, w: &[f64], expected_len: usize) -> Result<f64> {
    if w.len() != expected_len {
        return Err(Error::shape(
            op,
            format!("weight count {} does not match side size {expected_len}", w.len()),
        ));
    }
    let mut sum = 0.0;
    for &x in w {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::numeric(op, "weights must be finite and non-negative"));
        }
        sum += x;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::numeric(
            op,
            format!("weights must sum to 1 within 1e-9, got {sum}"),
        ));
    }
    if sum <= 0.0 {
        return Err(Error::numeric(op, "weights are degenerate (zero total mass)"));
    }
    Ok(sum)
}

/// Exact empirical W1 between weighted point sets via network simplex.
///
/// Weights on each side must be finite, non-negative, and sum to 1 within
/// 1e-9; they are renormalized to machine precision before the solve so
/// the transportation instance balances. The pivot budget is
/// 50 (m + n)^2; exceeding it is reported as a numeric error rather than
/// returning a non-optimal value.
pub fn emd_exact(cost: &CostMatrix, a: &[f64], b: &[f64]) -> Result<EmdSolution> {
    let sum_a = validate_weights("emd_exact", a, cost.m)?;
    let sum_b = validate_weights("emd_exact", b, cost.n)?;
    let a_norm: Vec<f64> = a.iter().map(|x| x / sum_a).collect();
    let b_norm: Vec<f64> = b.iter().map(|x| x / sum_b).collect();
    let cap = 50 * (cost.m + cost.n).pow(2) as u64;
    let plan = simplex::solve_transportation(cost.m, cost.n, &cost.entries, &a_norm, &b_norm, cap)?;
    Ok(EmdSolution {
        value: plan.value,
        plan: plan.flows,
        pivots: plan.pivots,
    })
}

/// Exact W1 between two equally weighted batches.
pub fn emd_exact_uniform(a: &SampleBatch, b: &SampleBatch) -> Result<EmdSolution> {
    let cost = cost_matrix(a, b)?;
    let wa = vec![1.0 / a.m() as f64; a.m()];
    let wb = vec![1.0 / b.m() as f64; b.m()];
    emd_exact(&cost, &wa, &wb)
}

/// Closed-form W1 on the line for equal-size uniform samples: sort both
/// sides and average the absolute gaps between order statistics.
pub fn w1_1d_sorted(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::shape("w1_1d_sorted", "both samples must be non-empty"));
    }
    if a.len() != b.len() {
        return Err(Error::shape(
            "w1_1d_sorted",
            format!("sample sizes must match, got {} vs {}", a.len(), b.len()),
        ));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let total: f64 = xs
        .iter()
        .zip(ys.iter())
        .map(|(x, y)| (x - y).abs())
        .sum();
    Ok(total / xs.len() as f64)
}

/// Sliced W1: average the one-dimensional distance over random unit
/// directions. Directions are standard normal vectors normalized to unit
/// length, drawn from the given stream.
pub fn sliced_w1(a: &SampleBatch, b: &SampleBatch, projections: usize, rng: &mut Rng) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::shape(
            "sliced_w1",
            format!("dimension mismatch: {} vs {}", a.dim(), b.dim()),
        ));
    }
    if a.m() != b.m() {
        return Err(Error::shape(
            "sliced_w1",
            format!("sample sizes must match, got {} vs {}", a.m(), b.m()),
        ));
    }
    if projections == 0 {
        return Err(Error::Config("sliced_w1 needs at least one projection".into()));
    }
    let d = a.dim();
    let mut acc = 0.0;
    let mut pa = vec![0.0; a.m()];
    let mut pb = vec![0.0; b.m()];
    for _ in 0..projections {
        let mut dir = vec![0.0; d];
        loop {
            for v in dir.iter_mut() {
                *v = rng.normal();
            }
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-12 {
                for v in dir.iter_mut() {
                    *v /= norm;
                }
                break;
            }
        }
        project(a, &dir, &mut pa);
        project(b, &dir, &mut pb);
        acc += w1_1d_sorted(&pa, &pb)?;
    }
    Ok(acc / projections as f64)
}

fn project(batch: &SampleBatch, dir: &[f64], out: &mut [f64]) {
    let d = batch.dim();
    let data = batch.values().data();
    for (i, slot) in out.iter_mut().enumerate() {
        let row = &data[i * d..(i + 1) * d];
        *slot = row.iter().zip(dir.iter()).map(|(x, w)| x * w).sum();
    }
}

/// Fraction of samples whose Euclidean norm is at least the threshold.
/// Tracks how much generator mass escapes the ball the critic bound is
/// calibrated for.
pub fn tail_prob_diagnostic(batch: &SampleBatch, threshold: f64) -> Result<f64> {
    if !threshold.is_finite() || threshold <= 0.0 {
        return Err(Error::Config(format!(
            "tail threshold must be positive and finite, got {threshold}"
        )));
    }
    let d = batch.dim();
    let data = batch.values().data();
    let count = (0..batch.m())
        .filter(|&i| {
            let row = &data[i * d..(i + 1) * d];
            row.iter().map(|x| x * x).sum::<f64>().sqrt() >= threshold
        })
        .count();
    Ok(count as f64 / batch.m() as f64)
}

/// One evaluation record, serializable as a CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct W1Report {
    pub experiment_id: String,
    pub seed: u64,
    pub repeat: u32,
    pub m: usize,
    pub n: usize,
    pub w1: f64,
    pub elapsed_s: f64,
}

impl W1Report {
    pub const CSV_HEADER: &'static str = "experiment_id,seed,repeat,m,n,w1,elapsed_s";

    /// Formats the record as one CSV row. The id must stay clear of the
    /// CSV structure characters.
    pub fn to_csv_row(&self) -> Result<String> {
        if self.experiment_id.is_empty()
            || self.experiment_id.contains(',')
            || self.experiment_id.contains('\n')
            || self.experiment_id.contains('\r')
        {
            return Err(Error::Config(format!(
                "experiment id {:?} is empty or contains CSV separators",
                self.experiment_id
            )));
        }
        Ok(format!(
            "{},{},{},{},{},{},{}",
            self.experiment_id, self.seed, self.repeat, self.m, self.n, self.w1, self.elapsed_s
        ))
    }

    pub fn parse_csv_row(line: &str) -> Result<W1Report> {
        let fields: Vec<&str> = line.trim_end_matches(['\r', '\n']).split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Format {
                path: "<csv row>".into(),
                detail: format!("expected 7 fields, got {}", fields.len()),
            });
        }
        let bad = |field: &str, what: &str| Error::Format {
            path: "<csv row>".into(),
            detail: format!("cannot parse {what} from {field:?}"),
        };
        Ok(W1Report {
            experiment_id: fields[0].to_string(),
            seed: fields[1].parse().map_err(|_| bad(fields[1], "seed"))?,
            repeat: fields[2].parse().map_err(|_| bad(fields[2], "repeat"))?,
            m: fields[3].parse().map_err(|_| bad(fields[3], "m"))?,
            n: fields[4].parse().map_err(|_| bad(fields[4], "n"))?,
            w1: fields[5].parse().map_err(|_| bad(fields[5], "w1"))?,
            elapsed_s: fields[6].parse().map_err(|_| bad(fields[6], "elapsed_s"))?,
        })
    }
}

/// Times an exact solve between two uniform batches and wraps the result
/// in a report row.
pub fn timed_report(
    experiment_id: &str,
    seed: u64,
    repeat: u32,
    a: &SampleBatch,
    b: &SampleBatch,
) -> Result<W1Report> {
    let start = Instant::now();
    let sol = emd_exact_uniform(a, b)?;
    Ok(W1Report {
        experiment_id: experiment_id.to_string(),
        seed,
        repeat,
        m: a.m(),
        n: b.m(),
        w1: sol.value,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}

/// Builds a batch directly from row-major values, for callers that hold
/// plain vectors.
pub fn batch_from_rows(rows: usize, dim: usize, values: Vec<f64>) -> Result<SampleBatch> {
    SampleBatch::new(
        Tensor::new(rows, dim, values)?,
        crate::data::BatchTag::Real,
    )
}
