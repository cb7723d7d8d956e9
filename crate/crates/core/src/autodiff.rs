//! Dense 2-d tensors and reverse-mode automatic differentiation.
//!
//! [`Tensor`] is a row-major `f64` matrix. Ops recorded through a [`Tape`]
//! build a define-by-run graph; [`Tape::backward`] runs one reverse sweep
//! and exposes per-tensor gradients. Tapes are rebuilt per forward pass and
//! are strictly single-threaded; tensors that carry no tape node are plain
//! immutable values and may be shared freely across threads.
//!
//! Everything is plain loops over `f64`. Debug and test builds additionally
//! check every op output for NaN/Inf.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};

pub type NodeId = usize;

/// Identifies the tape a tensor was recorded on, so that a stale handle
/// from a previous forward pass cannot silently alias a node on a new tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct TapeNodeRef {
    tape: u64,
    id: NodeId,
}

/// Dense row-major matrix of 64-bit floats with an optional tape-node
/// reference. Cloning is cheap (shared storage).
#[derive(Clone, Debug)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Arc<Vec<f64>>,
    node: Option<TapeNodeRef>,
}

impl Tensor {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "tensor_new",
                format!("{} values for a {rows}x{cols} tensor", data.len()),
            ));
        }
        Ok(Tensor {
            rows,
            cols,
            data: Arc::new(data),
            node: None,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            data: Arc::new(vec![0.0; rows * cols]),
            node: None,
        }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor {
            rows: 1,
            cols: 1,
            data: Arc::new(vec![v]),
            node: None,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Tensor {
            rows,
            cols,
            data: Arc::new(data),
            node: None,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable view of the storage. Copies on write if shared, and drops
    /// any tape association since the recorded value would go stale.
    pub fn data_mut(&mut self) -> &mut [f64] {
        self.node = None;
        Arc::make_mut(&mut self.data).as_mut_slice()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_scalar(&self) -> bool {
        self.rows == 1 && self.cols == 1
    }

    /// Same values without any tape linkage, so the result of one tape
    /// can feed another as a constant. Shares storage with self.
    pub fn detach(&self) -> Tensor {
        Tensor {
            rows: self.rows,
            cols: self.cols,
            data: Arc::clone(&self.data),
            node: None,
        }
    }

    /// Scalar value of a 1x1 tensor.
    pub fn item(&self) -> Result<f64> {
        if !self.is_scalar() {
            return Err(Error::shape(
                "item",
                format!("expected 1x1, got {}x{}", self.rows, self.cols),
            ));
        }
        Ok(self.data[0])
    }

    pub fn transpose(&self) -> Tensor {
        Tensor::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Plain (unrecorded) matrix product.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        if self.cols != other.rows {
            return Err(Error::shape(
                "matmul",
                format!(
                    "{}x{} by {}x{}",
                    self.rows, self.cols, other.rows, other.cols
                ),
            ));
        }
        let mut out = vec![0.0; self.rows * other.cols];
        mm_accum(
            &self.data, &other.data, &mut out, self.rows, self.cols, other.cols,
        );
        Tensor::new(self.rows, other.cols, out)
    }

    /// True when both tensors have identical shape and bit-identical
    /// entries.
    pub fn bit_eq(&self, other: &Tensor) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self
                .data
                .iter()
                .zip(other.data.iter())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    fn ptr_key(&self) -> usize {
        Arc::as_ptr(&self.data) as usize
    }
}

/// out += a (m x k) times b (k x n).
pub(crate) fn mm_accum(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * n..(i + 1) * n];
        for (kk, &av) in arow.iter().enumerate() {
            let brow = &b[kk * n..(kk + 1) * n];
            for j in 0..n {
                orow[j] += av * brow[j];
            }
        }
    }
}

/// out += a (m x n) times b-transpose, where b is stored k x n.
fn mm_abt_accum(a: &[f64], b: &[f64], out: &mut [f64], m: usize, n: usize, k: usize) {
    debug_assert_eq!(a.len(), m * n);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * k);
    for i in 0..m {
        let arow = &a[i * n..(i + 1) * n];
        let orow = &mut out[i * k..(i + 1) * k];
        for kk in 0..k {
            let brow = &b[kk * n..(kk + 1) * n];
            let mut acc = 0.0;
            for j in 0..n {
                acc += arow[j] * brow[j];
            }
            orow[kk] += acc;
        }
    }
}

/// out += a-transpose times g, where a is stored m x k and g is m x n.
fn mm_atb_accum(a: &[f64], g: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(g.len(), m * n);
    debug_assert_eq!(out.len(), k * n);
    for r in 0..m {
        let arow = &a[r * k..(r + 1) * k];
        let grow = &g[r * n..(r + 1) * n];
        for (i, &av) in arow.iter().enumerate() {
            let orow = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] += av * grow[j];
            }
        }
    }
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.rows != b.rows || a.cols != b.cols {
        return Err(Error::shape(
            op,
            format!("{}x{} vs {}x{}", a.rows, a.cols, b.rows, b.cols),
        ));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Leaf,
    Matmul { a: NodeId, b: NodeId },
    Affine { x: NodeId, w: NodeId, b: NodeId },
    Relu { x: NodeId },
    TanhAct { x: NodeId },
    GroupSort2 { x: NodeId },
    ReduceMean { x: NodeId },
    ReduceSum { x: NodeId },
    Add { a: NodeId, b: NodeId },
    Sub { a: NodeId, b: NodeId },
    Neg { x: NodeId },
    Scale { x: NodeId, c: f64 },
}

struct Node {
    op: Op,
    rows: usize,
    cols: usize,
    value: Arc<Vec<f64>>,
}

static TAPE_IDS: AtomicU64 = AtomicU64::new(1);

/// Append-only op record for one forward pass. Node ids are topologically
/// ordered by construction; `backward` sweeps them once in reverse.
pub struct Tape {
    id: u64,
    nodes: Vec<Node>,
    grads: Vec<Vec<f64>>,
    interned: HashMap<usize, NodeId>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            id: TAPE_IDS.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
            grads: Vec::new(),
            interned: HashMap::new(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Registers `t` as a leaf so it will have a gradient accumulator even
    /// if no op ever consumes it.
    pub fn watch(&mut self, t: &Tensor) -> Result<()> {
        self.intern(t).map(|_| ())
    }

    fn intern(&mut self, t: &Tensor) -> Result<NodeId> {
        if let Some(r) = t.node {
            if r.tape != self.id {
                return Err(Error::shape(
                    "tape",
                    "tensor was recorded on a different tape",
                ));
            }
            return Ok(r.id);
        }
        let key = t.ptr_key();
        if let Some(&id) = self.interned.get(&key) {
            return Ok(id);
        }
        let id = self.push(Op::Leaf, t.rows, t.cols, Arc::clone(&t.data));
        self.interned.insert(key, id);
        Ok(id)
    }

    fn push(&mut self, op: Op, rows: usize, cols: usize, value: Arc<Vec<f64>>) -> NodeId {
        debug_assert!(
            value.iter().all(|v| v.is_finite()),
            "non-finite value out of {op:?}"
        );
        let id = self.nodes.len();
        self.nodes.push(Node {
            op,
            rows,
            cols,
            value,
        });
        id
    }

    fn emit(&mut self, op: Op, rows: usize, cols: usize, value: Vec<f64>) -> Tensor {
        let value = Arc::new(value);
        let id = self.push(op, rows, cols, Arc::clone(&value));
        Tensor {
            rows,
            cols,
            data: value,
            node: Some(TapeNodeRef { tape: self.id, id }),
        }
    }

    pub fn matmul(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        if a.cols != b.rows {
            return Err(Error::shape(
                "matmul",
                format!("{}x{} by {}x{}", a.rows, a.cols, b.rows, b.cols),
            ));
        }
        let (na, nb) = (self.intern(a)?, self.intern(b)?);
        let mut out = vec![0.0; a.rows * b.cols];
        mm_accum(&a.data, &b.data, &mut out, a.rows, a.cols, b.cols);
        Ok(self.emit(Op::Matmul { a: na, b: nb }, a.rows, b.cols, out))
    }

    /// x (m x q) times w (q x r) plus bias b (1 x r) broadcast over rows.
    pub fn affine(&mut self, x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
        if x.cols != w.rows || b.rows != 1 || b.cols != w.cols {
            return Err(Error::shape(
                "affine",
                format!(
                    "x {}x{}, w {}x{}, b {}x{}",
                    x.rows, x.cols, w.rows, w.cols, b.rows, b.cols
                ),
            ));
        }
        let (nx, nw, nb) = (self.intern(x)?, self.intern(w)?, self.intern(b)?);
        let (m, q, r) = (x.rows, x.cols, w.cols);
        let mut out = vec![0.0; m * r];
        for row in out.chunks_exact_mut(r) {
            row.copy_from_slice(&b.data);
        }
        mm_accum(&x.data, &w.data, &mut out, m, q, r);
        Ok(self.emit(
            Op::Affine {
                x: nx,
                w: nw,
                b: nb,
            },
            m,
            r,
            out,
        ))
    }

    pub fn relu(&mut self, x: &Tensor) -> Result<Tensor> {
        let nx = self.intern(x)?;
        let out = x.data.iter().map(|&v| v.max(0.0)).collect();
        Ok(self.emit(Op::Relu { x: nx }, x.rows, x.cols, out))
    }

    pub fn tanh_act(&mut self, x: &Tensor) -> Result<Tensor> {
        let nx = self.intern(x)?;
        let out = x.data.iter().map(|&v| v.tanh()).collect();
        Ok(self.emit(Op::TanhAct { x: nx }, x.rows, x.cols, out))
    }

    /// Sorts each consecutive coordinate pair (2j, 2j+1) of every row into
    /// (max, min). Width must be even.
    pub fn groupsort2(&mut self, x: &Tensor) -> Result<Tensor> {
        if x.cols % 2 != 0 {
            return Err(Error::Config(format!(
                "groupsort2 needs an even width, got {}",
                x.cols
            )));
        }
        let nx = self.intern(x)?;
        let mut out = x.data.as_ref().clone();
        for pair in out.chunks_exact_mut(2) {
            if pair[0] < pair[1] {
                pair.swap(0, 1);
            }
        }
        Ok(self.emit(Op::GroupSort2 { x: nx }, x.rows, x.cols, out))
    }

    /// Mean of a column vector; the backward pass distributes 1/m.
    pub fn reduce_mean(&mut self, x: &Tensor) -> Result<Tensor> {
        if x.cols != 1 {
            return Err(Error::shape(
                "reduce_mean",
                format!("expected a column vector, got {}x{}", x.rows, x.cols),
            ));
        }
        if x.rows == 0 {
            return Err(Error::shape("reduce_mean", "empty batch"));
        }
        let nx = self.intern(x)?;
        let mean = x.data.iter().sum::<f64>() / x.rows as f64;
        Ok(self.emit(Op::ReduceMean { x: nx }, 1, 1, vec![mean]))
    }

    /// Sum of all entries.
    pub fn reduce_sum(&mut self, x: &Tensor) -> Result<Tensor> {
        let nx = self.intern(x)?;
        let sum = x.data.iter().sum::<f64>();
        Ok(self.emit(Op::ReduceSum { x: nx }, 1, 1, vec![sum]))
    }

    pub fn add(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        same_shape("add", a, b)?;
        let (na, nb) = (self.intern(a)?, self.intern(b)?);
        let out = a.data.iter().zip(b.data.iter()).map(|(x, y)| x + y).collect();
        Ok(self.emit(Op::Add { a: na, b: nb }, a.rows, a.cols, out))
    }

    pub fn sub(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        same_shape("sub", a, b)?;
        let (na, nb) = (self.intern(a)?, self.intern(b)?);
        let out = a.data.iter().zip(b.data.iter()).map(|(x, y)| x - y).collect();
        Ok(self.emit(Op::Sub { a: na, b: nb }, a.rows, a.cols, out))
    }

    pub fn neg(&mut self, x: &Tensor) -> Result<Tensor> {
        let nx = self.intern(x)?;
        let out = x.data.iter().map(|v| -v).collect();
        Ok(self.emit(Op::Neg { x: nx }, x.rows, x.cols, out))
    }

    pub fn scale(&mut self, x: &Tensor, c: f64) -> Result<Tensor> {
        let nx = self.intern(x)?;
        let out = x.data.iter().map(|v| v * c).collect();
        Ok(self.emit(Op::Scale { x: nx, c }, x.rows, x.cols, out))
    }

    /// Reverse sweep from `loss` (a scalar recorded on this tape), filling
    /// gradient accumulators for every node up to and including the loss.
    /// Calling it again recomputes the same gradients from scratch.
    pub fn backward(&mut self, loss: &Tensor) -> Result<()> {
        let lref = match loss.node {
            Some(r) if r.tape == self.id => r.id,
            _ => {
                return Err(Error::shape(
                    "backward",
                    "loss is not a node on the active tape",
                ))
            }
        };
        if !loss.is_scalar() {
            return Err(Error::shape(
                "backward",
                format!("loss must be 1x1, got {}x{}", loss.rows, loss.cols),
            ));
        }
        let mut grads: Vec<Vec<f64>> = self
            .nodes
            .iter()
            .map(|n| vec![0.0; n.rows * n.cols])
            .collect();
        grads[lref][0] = 1.0;

        for id in (0..=lref).rev() {
            let node = &self.nodes[id];
            let g = std::mem::take(&mut grads[id]);
            match node.op {
                Op::Leaf => {}
                Op::Matmul { a, b } => {
                    let (va, vb) = (&self.nodes[a].value, &self.nodes[b].value);
                    let (m, k, n) = (self.nodes[a].rows, self.nodes[a].cols, node.cols);
                    mm_abt_accum(&g, vb, &mut grads[a], m, n, k);
                    mm_atb_accum(va, &g, &mut grads[b], m, k, n);
                }
                Op::Affine { x, w, b } => {
                    let (vx, vw) = (&self.nodes[x].value, &self.nodes[w].value);
                    let (m, q, r) = (self.nodes[x].rows, self.nodes[x].cols, node.cols);
                    mm_abt_accum(&g, vw, &mut grads[x], m, r, q);
                    mm_atb_accum(vx, &g, &mut grads[w], m, q, r);
                    let gb = &mut grads[b];
                    for row in g.chunks_exact(r) {
                        for (j, &v) in row.iter().enumerate() {
                            gb[j] += v;
                        }
                    }
                }
                Op::Relu { x } => {
                    let vx = &self.nodes[x].value;
                    let gx = &mut grads[x];
                    for (i, &v) in vx.iter().enumerate() {
                        if v > 0.0 {
                            gx[i] += g[i];
                        }
                    }
                }
                Op::TanhAct { x } => {
                    let y = &node.value;
                    let gx = &mut grads[x];
                    for (i, &t) in y.iter().enumerate() {
                        gx[i] += g[i] * (1.0 - t * t);
                    }
                }
                Op::GroupSort2 { x } => {
                    let vx = &self.nodes[x].value;
                    let gx = &mut grads[x];
                    for p in 0..vx.len() / 2 {
                        let (i, j) = (2 * p, 2 * p + 1);
                        // Ties route the max slot to the first coordinate,
                        // mirroring the forward pass.
                        if vx[i] >= vx[j] {
                            gx[i] += g[i];
                            gx[j] += g[j];
                        } else {
                            gx[i] += g[j];
                            gx[j] += g[i];
                        }
                    }
                }
                Op::ReduceMean { x } => {
                    let m = self.nodes[x].rows as f64;
                    let gx = &mut grads[x];
                    let share = g[0] / m;
                    for v in gx.iter_mut() {
                        *v += share;
                    }
                }
                Op::ReduceSum { x } => {
                    let gx = &mut grads[x];
                    for v in gx.iter_mut() {
                        *v += g[0];
                    }
                }
                Op::Add { a, b } => {
                    for (i, &v) in g.iter().enumerate() {
                        grads[a][i] += v;
                    }
                    for (i, &v) in g.iter().enumerate() {
                        grads[b][i] += v;
                    }
                }
                Op::Sub { a, b } => {
                    for (i, &v) in g.iter().enumerate() {
                        grads[a][i] += v;
                    }
                    for (i, &v) in g.iter().enumerate() {
                        grads[b][i] -= v;
                    }
                }
                Op::Neg { x } => {
                    for (i, &v) in g.iter().enumerate() {
                        grads[x][i] -= v;
                    }
                }
                Op::Scale { x, c } => {
                    for (i, &v) in g.iter().enumerate() {
                        grads[x][i] += c * v;
                    }
                }
            }
            grads[id] = g;
        }
        self.grads = grads;
        Ok(())
    }

    /// Gradient of the last `backward` loss with respect to `t`, or None
    /// if `t` never reached this tape or backward has not run.
    pub fn grad(&self, t: &Tensor) -> Option<&[f64]> {
        if self.grads.is_empty() {
            return None;
        }
        let id = match t.node {
            Some(r) if r.tape == self.id => r.id,
            Some(_) => return None,
            None => *self.interned.get(&t.ptr_key())?,
        };
        self.grads.get(id).map(|g| g.as_slice())
    }
}
