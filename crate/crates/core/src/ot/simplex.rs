//! Network simplex for the dense transportation problem.
//!
//! Solves min sum c_ij x_ij subject to row sums a, column sums b, x >= 0,
//! where a and b are probability vectors. The graph is bipartite and
//! uncapacitated: real arc `e` runs from source `e / n` to sink `e % n`.
//! An artificial root node closes the initial spanning tree: every source
//! ships its supply to the root at cost 0 and the root ships every sink its
//! demand at a cost larger than any real arc, so real arcs price in
//! immediately.
//!
//! The basis is a spanning tree kept as parent / predecessor-arc / child
//! lists. Entering arcs are found by cyclic block search over the real
//! arcs (block size about sqrt(arc count)), taking the most negative
//! reduced cost within the first block that has any. A pivot walks both
//! tree paths to the join node to bound the flow change, cuts the leaving
//! arc, re-roots the detached subtree at the entering arc's endpoint, and
//! shifts that subtree's potentials by the entering reduced cost.
//!
//! Reduced costs use the convention r(u -> v) = c - pi_u + pi_v, zero on
//! tree arcs. Eligibility thresholds scale with the local magnitudes so
//! the solve terminates cleanly in floating point.

use crate::error::{Error, Result};

const ROOT_SENTINEL: usize = usize::MAX;

/// Optimal transportation plan: value plus sparse flows (i, j, mass).
#[derive(Debug)]
pub struct TransportPlan {
    pub value: f64,
    pub flows: Vec<(usize, usize, f64)>,
    pub pivots: u64,
}

struct Simplex<'a> {
    m: usize,
    n: usize,
    cost: &'a [f64],
    node_num: usize,
    root: usize,

    flow: Vec<f64>,     // real arcs, m*n
    art_flow: Vec<f64>, // artificial arc per non-root node
    in_tree: Vec<bool>, // real arcs
    pi: Vec<f64>,

    parent: Vec<usize>,
    // Predecessor arc of each non-root node: Real(e) or the node's
    // artificial arc.
    pred_real: Vec<usize>, // usize::MAX when the predecessor is artificial
    // True when the predecessor arc is directed node -> parent.
    forward: Vec<bool>,
    children: Vec<Vec<usize>>,

    mark: Vec<u64>,
    stamp: u64,
    block_size: usize,
    next_arc: usize,
}

impl<'a> Simplex<'a> {
    fn new(m: usize, n: usize, cost: &'a [f64], a: &[f64], b: &[f64]) -> Simplex<'a> {
        let node_num = m + n;
        let root = node_num;
        let max_cost = cost.iter().fold(0.0f64, |acc, &c| acc.max(c));
        let art_cost = (max_cost + 1.0) * (node_num + 1) as f64;

        let mut parent = vec![ROOT_SENTINEL; node_num + 1];
        let mut forward = vec![false; node_num + 1];
        let mut pi = vec![0.0; node_num + 1];
        let mut art_flow = vec![0.0; node_num];
        let mut children = vec![Vec::new(); node_num + 1];

        // Star basis: sources point up to the root (cost 0, so pi = 0),
        // sinks hang off the root (cost art_cost, so pi = -art_cost keeps
        // tree arcs at zero reduced cost).
        for u in 0..node_num {
            parent[u] = root;
            children[root].push(u);
            if u < m {
                forward[u] = true;
                art_flow[u] = a[u];
                pi[u] = 0.0;
            } else {
                forward[u] = false;
                art_flow[u] = b[u - m];
                pi[u] = -art_cost;
            }
        }
        pi[root] = 0.0;

        let arc_num = m * n;
        let block_size = ((arc_num as f64).sqrt() as usize).max(10).min(arc_num.max(1));

        Simplex {
            m,
            n,
            cost,
            node_num,
            root,
            flow: vec![0.0; arc_num],
            art_flow,
            in_tree: vec![false; arc_num],
            pi,
            parent,
            pred_real: vec![usize::MAX; node_num + 1],
            forward,
            children,
            mark: vec![0; node_num + 1],
            stamp: 0,
            block_size,
            next_arc: 0,
        }
    }

    fn arc_ends(&self, e: usize) -> (usize, usize) {
        (e / self.n, self.m + e % self.n)
    }

    fn reduced_cost(&self, e: usize) -> f64 {
        let (u, v) = self.arc_ends(e);
        self.cost[e] - self.pi[u] + self.pi[v]
    }

    fn find_entering(&mut self) -> Option<usize> {
        let arc_num = self.flow.len();
        let mut scanned = 0;
        while scanned < arc_num {
            let mut best: Option<(usize, f64)> = None;
            for _ in 0..self.block_size.min(arc_num - scanned) {
                let e = self.next_arc;
                self.next_arc = (self.next_arc + 1) % arc_num;
                scanned += 1;
                if self.in_tree[e] {
                    continue;
                }
                let (u, v) = self.arc_ends(e);
                let r = self.cost[e] - self.pi[u] + self.pi[v];
                let eps =
                    1e-13 * self.pi[u].abs().max(self.pi[v].abs()).max(self.cost[e]).max(1.0);
                if r < -eps && best.map_or(true, |(_, br)| r < br) {
                    best = Some((e, r));
                }
            }
            if let Some((e, _)) = best {
                return Some(e);
            }
        }
        None
    }

    fn find_join(&mut self, u: usize, v: usize) -> usize {
        self.stamp += 1;
        let mut a = u;
        loop {
            self.mark[a] = self.stamp;
            if a == self.root {
                break;
            }
            a = self.parent[a];
        }
        let mut b = v;
        while self.mark[b] != self.stamp {
            b = self.parent[b];
        }
        b
    }

    fn pred_flow(&self, w: usize) -> f64 {
        let e = self.pred_real[w];
        if e == usize::MAX {
            self.art_flow[w]
        } else {
            self.flow[e]
        }
    }

    fn add_pred_flow(&mut self, w: usize, d: f64) {
        let e = self.pred_real[w];
        if e == usize::MAX {
            self.art_flow[w] += d;
        } else {
            self.flow[e] += d;
        }
    }

    /// One pivot on entering arc `e`. Returns false if the cycle had no
    /// bounding arc (cannot happen on a transportation instance).
    fn pivot(&mut self, e: usize) -> Result<()> {
        let (u_in, v_in) = self.arc_ends(e);
        let r_in = self.reduced_cost(e);
        let join = self.find_join(u_in, v_in);

        // Bound the push along the cycle. On the u_in..join leg the cycle
        // runs parent-to-child, so child-to-parent arcs oppose it; on the
        // v_in..join leg the cycle runs child-to-parent.
        let mut delta = f64::INFINITY;
        let mut w_out = ROOT_SENTINEL;
        let mut out_on_u_side = true;
        let mut w = u_in;
        while w != join {
            if self.forward[w] {
                let f = self.pred_flow(w);
                if f < delta {
                    delta = f;
                    w_out = w;
                    out_on_u_side = true;
                }
            }
            w = self.parent[w];
        }
        let mut w = v_in;
        while w != join {
            if !self.forward[w] {
                let f = self.pred_flow(w);
                if f <= delta {
                    delta = f;
                    w_out = w;
                    out_on_u_side = false;
                }
            }
            w = self.parent[w];
        }
        if w_out == ROOT_SENTINEL {
            return Err(Error::numeric(
                "emd_exact",
                "unbounded pivot cycle; transportation instance is malformed",
            ));
        }

        // Push delta units around the cycle.
        if delta > 0.0 {
            self.flow[e] += delta;
            let mut w = u_in;
            while w != join {
                let d = if self.forward[w] { -delta } else { delta };
                self.add_pred_flow(w, d);
                w = self.parent[w];
            }
            let mut w = v_in;
            while w != join {
                let d = if self.forward[w] { delta } else { -delta };
                self.add_pred_flow(w, d);
                w = self.parent[w];
            }
        }

        // Swap basis arcs: cut the leaving arc, re-root the detached
        // subtree at the entering arc's endpoint inside it, reattach.
        let (graft, attach) = if out_on_u_side {
            (u_in, v_in)
        } else {
            (v_in, u_in)
        };
        let old_parent = self.parent[w_out];
        detach_child(&mut self.children, old_parent, w_out);
        if self.pred_real[w_out] != usize::MAX {
            self.in_tree[self.pred_real[w_out]] = false;
        }

        // Reverse the path graft -> ... -> w_out so the detached subtree
        // is rooted at the graft node. old[i] is the arc that joined
        // path[i] to its old parent path[i + 1]; after reversal it joins
        // new child path[i + 1] to new parent path[i] with its tree
        // direction flipped.
        let mut path = Vec::new();
        let mut w = graft;
        while w != w_out {
            path.push(w);
            w = self.parent[w];
        }
        path.push(w_out);
        let old: Vec<(usize, bool)> = path
            .iter()
            .map(|&x| (self.pred_real[x], self.forward[x]))
            .collect();
        for i in 0..path.len() - 1 {
            let new_parent = path[i];
            let new_child = path[i + 1];
            detach_child(&mut self.children, new_child, new_parent);
            self.children[new_parent].push(new_child);
            self.parent[new_child] = new_parent;
            let (arc, fwd) = old[i];
            self.pred_real[new_child] = arc;
            self.forward[new_child] = !fwd;
        }

        // Attach the graft node under the other endpoint via the entering
        // arc.
        self.parent[graft] = attach;
        self.pred_real[graft] = e;
        self.forward[graft] = graft == u_in;
        self.children[attach].push(graft);
        self.in_tree[e] = true;

        // Potentials in the detached subtree shift by the entering arc's
        // reduced cost (sign depends on which endpoint moved).
        let sigma = if out_on_u_side { r_in } else { -r_in };
        let mut stack = vec![graft];
        while let Some(x) = stack.pop() {
            self.pi[x] += sigma;
            stack.extend(self.children[x].iter().copied());
        }
        Ok(())
    }

    fn solve(mut self, max_pivots: u64) -> Result<TransportPlan> {
        let mut pivots = 0u64;
        while let Some(e) = self.find_entering() {
            if pivots >= max_pivots {
                return Err(Error::numeric(
                    "emd_exact",
                    format!(
                        "no convergence within {max_pivots} pivots on a {}x{} instance",
                        self.m, self.n
                    ),
                ));
            }
            self.pivot(e)?;
            pivots += 1;
        }

        for u in 0..self.node_num {
            if self.art_flow[u] > 1e-7 && self.pred_real[u] == usize::MAX {
                return Err(Error::numeric(
                    "emd_exact",
                    format!(
                        "artificial arc at node {u} still carries {:.3e} after optimization",
                        self.art_flow[u]
                    ),
                ));
            }
        }

        let mut flows = Vec::new();
        let mut value = 0.0;
        for (e, &f) in self.flow.iter().enumerate() {
            if f > 0.0 {
                let (u, v) = self.arc_ends(e);
                flows.push((u, v - self.m, f));
                value += f * self.cost[e];
            }
        }
        Ok(TransportPlan {
            value,
            flows,
            pivots,
        })
    }
}

fn detach_child(children: &mut [Vec<usize>], parent: usize, child: usize) {
    if let Some(pos) = children[parent].iter().position(|&c| c == child) {
        children[parent].swap_remove(pos);
    }
}

/// Exact solve. `cost` is row-major m x n; `a` and `b` are the marginal
/// weights. The pivot cap guards against cycling; it is generous for any
/// honest instance.
pub fn solve_transportation(
    m: usize,
    n: usize,
    cost: &[f64],
    a: &[f64],
    b: &[f64],
    max_pivots: u64,
) -> Result<TransportPlan> {
    debug_assert_eq!(cost.len(), m * n);
    debug_assert_eq!(a.len(), m);
    debug_assert_eq!(b.len(), n);
    Simplex::new(m, n, cost, a, b).solve(max_pivots)
}
