//! Cross-checks of the exact transport solver against independent
//! oracles: factorial-time assignment search for uniform instances,
//! basis enumeration over spanning trees for weighted instances, and the
//! closed-form sorted solution in one dimension.

use gswgan::data::{BatchTag, Rng, SampleBatch};
use gswgan::autodiff::Tensor;
use gswgan::ot::{cost_matrix, emd_exact, emd_exact_uniform, w1_1d_sorted, CostMatrix};
use proptest::prelude::*;

fn batch(rows: usize, dim: usize, values: Vec<f64>) -> SampleBatch {
    SampleBatch::new(Tensor::new(rows, dim, values).unwrap(), BatchTag::Real).unwrap()
}

fn random_batch(rows: usize, dim: usize, rng: &mut Rng) -> SampleBatch {
    let values = (0..rows * dim).map(|_| rng.range(-3.0, 3.0)).collect();
    batch(rows, dim, values)
}

/// Minimum mean assignment cost over all n! matchings, by Heap's
/// permutation enumeration. For uniform weights on equal-size sets the
/// optimal transport plan is a permutation matrix, so this is the exact
/// optimum.
fn brute_force_uniform(cost: &CostMatrix) -> f64 {
    let n = cost.n();
    assert_eq!(cost.m(), n);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut counters = vec![0usize; n];
    let eval = |p: &[usize]| -> f64 {
        p.iter()
            .enumerate()
            .map(|(i, &j)| cost.get(i, j))
            .sum::<f64>()
            / n as f64
    };
    let mut best = eval(&perm);
    let mut i = 0;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            let v = eval(&perm);
            if v < best {
                best = v;
            }
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    best
}

/// Exact optimum by enumerating every basic feasible solution of the
/// transportation polytope: each vertex is supported on a spanning tree
/// of the bipartite graph, and tree flows are forced by leaf
/// elimination.
fn vertex_enumeration(cost: &CostMatrix, a: &[f64], b: &[f64]) -> f64 {
    let (m, n) = (cost.m(), cost.n());
    let arcs = m * n;
    let tree_size = m + n - 1;
    let mut best = f64::INFINITY;
    // Iterate bitmask subsets with exactly tree_size arcs.
    for mask in 0u32..(1u32 << arcs) {
        if mask.count_ones() as usize != tree_size {
            continue;
        }
        if let Some(value) = tree_flow_value(cost, a, b, mask) {
            if value < best {
                best = value;
            }
        }
    }
    assert!(best.is_finite(), "no feasible vertex found");
    best
}

fn tree_flow_value(cost: &CostMatrix, a: &[f64], b: &[f64], mask: u32) -> Option<f64> {
    let (m, n) = (cost.m(), cost.n());
    let nodes = m + n;
    let mut degree = vec![0usize; nodes];
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    for e in 0..m * n {
        if mask >> e & 1 == 1 {
            let (u, v) = (e / n, m + e % n);
            degree[u] += 1;
            degree[v] += 1;
            incident[u].push(e);
            incident[v].push(e);
        }
    }
    // A spanning tree touches every node.
    if degree.iter().any(|&d| d == 0) {
        return None;
    }
    // Leaf elimination: each leaf's single arc must carry its full
    // remaining balance. Acyclic subsets eliminate completely; a cycle
    // leaves nodes of degree two or more and the subset is rejected.
    let mut balance: Vec<f64> = a.iter().copied().chain(b.iter().copied()).collect();
    let mut removed = vec![false; m * n];
    let mut flow = vec![0.0; m * n];
    let mut stack: Vec<usize> = (0..nodes).filter(|&u| degree[u] == 1).collect();
    let mut eliminated = 0;
    while let Some(u) = stack.pop() {
        if degree[u] != 1 {
            continue;
        }
        let &e = incident[u]
            .iter()
            .find(|&&e| !removed[e])
            .expect("degree-one node has a live arc");
        let (src, dst) = (e / n, m + e % n);
        let f = balance[u];
        flow[e] = f;
        let other = if u == src { dst } else { src };
        balance[u] = 0.0;
        balance[other] -= f;
        removed[e] = true;
        degree[u] -= 1;
        degree[other] -= 1;
        eliminated += 1;
        if degree[other] == 1 {
            stack.push(other);
        }
    }
    if eliminated != (m + n - 1) {
        return None;
    }
    if flow.iter().any(|&f| f < -1e-12) {
        return None;
    }
    let value = flow
        .iter()
        .enumerate()
        .map(|(e, &f)| f * cost.entries()[e])
        .sum();
    Some(value)
}

#[test]
fn matches_permutation_brute_force_on_200_instances() {
    let mut rng = Rng::new(0xB0A7).stream(1);
    for trial in 0..200 {
        let n = 2 + rng.index(6); // 2..=7
        let dim = 1 + rng.index(3);
        let a = random_batch(n, dim, &mut rng);
        let b = random_batch(n, dim, &mut rng);
        let cost = cost_matrix(&a, &b).unwrap();
        let oracle = brute_force_uniform(&cost);
        let got = emd_exact_uniform(&a, &b).unwrap().value;
        assert!(
            (got - oracle).abs() <= 1e-9,
            "trial {trial}: simplex {got} vs brute force {oracle} (n = {n}, dim = {dim})"
        );
    }
}

#[test]
fn matches_vertex_enumeration_on_weighted_instances() {
    let mut rng = Rng::new(0xB0A7).stream(2);
    for trial in 0..100 {
        let m = 2 + rng.index(3); // 2..=4
        let n = 2 + rng.index(2); // 2..=3
        let dim = 1 + rng.index(2);
        let a = random_batch(m, dim, &mut rng);
        let b = random_batch(n, dim, &mut rng);
        let mut wa: Vec<f64> = (0..m).map(|_| rng.range(0.1, 1.0)).collect();
        let mut wb: Vec<f64> = (0..n).map(|_| rng.range(0.1, 1.0)).collect();
        let sa: f64 = wa.iter().sum();
        let sb: f64 = wb.iter().sum();
        wa.iter_mut().for_each(|w| *w /= sa);
        wb.iter_mut().for_each(|w| *w /= sb);
        let cost = cost_matrix(&a, &b).unwrap();
        let oracle = vertex_enumeration(&cost, &wa, &wb);
        let got = emd_exact(&cost, &wa, &wb).unwrap().value;
        assert!(
            (got - oracle).abs() <= 1e-9,
            "trial {trial}: simplex {got} vs vertex oracle {oracle} ({m}x{n}, dim {dim})"
        );
    }
}

#[test]
fn matches_sorted_solution_in_one_dimension() {
    let mut rng = Rng::new(0xB0A7).stream(3);
    for trial in 0..100 {
        let n = 2 + rng.index(199); // 2..=200
        let xs: Vec<f64> = (0..n).map(|_| rng.range(-5.0, 5.0)).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.range(-5.0, 5.0)).collect();
        let closed_form = w1_1d_sorted(&xs, &ys).unwrap();
        let a = batch(n, 1, xs);
        let b = batch(n, 1, ys);
        let got = emd_exact_uniform(&a, &b).unwrap().value;
        assert!(
            (got - closed_form).abs() <= 1e-9,
            "trial {trial}: simplex {got} vs sorted {closed_form} (n = {n})"
        );
    }
}

#[test]
fn large_instance_solves_within_pivot_budget() {
    let mut rng = Rng::new(0xB0A7).stream(4);
    let a = random_batch(200, 2, &mut rng);
    let b = random_batch(200, 2, &mut rng);
    let sol = emd_exact_uniform(&a, &b).unwrap();
    assert!(sol.value > 0.0);
    assert!(sol.pivots < 50 * 400 * 400);
    let mut row = vec![0.0; 200];
    let mut col = vec![0.0; 200];
    for &(i, j, f) in &sol.plan {
        row[i] += f;
        col[j] += f;
    }
    for i in 0..200 {
        assert!((row[i] - 0.005).abs() < 1e-9);
        assert!((col[i] - 0.005).abs() < 1e-9);
    }
}

#[test]
fn repeated_solves_are_bit_identical() {
    let mut rng = Rng::new(0xB0A7).stream(5);
    let a = random_batch(40, 3, &mut rng);
    let b = random_batch(40, 3, &mut rng);
    let x = emd_exact_uniform(&a, &b).unwrap();
    let y = emd_exact_uniform(&a, &b).unwrap();
    assert!(x.value.to_bits() == y.value.to_bits());
    assert_eq!(x.plan.len(), y.plan.len());
}

fn small_points(rows: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, rows * 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symmetry(av in small_points(4), bv in small_points(4)) {
        let a = batch(4, 2, av);
        let b = batch(4, 2, bv);
        let ab = emd_exact_uniform(&a, &b).unwrap().value;
        let ba = emd_exact_uniform(&b, &a).unwrap().value;
        prop_assert!((ab - ba).abs() <= 1e-9, "{ab} vs {ba}");
    }

    #[test]
    fn triangle_inequality(av in small_points(4), bv in small_points(4), cv in small_points(4)) {
        let a = batch(4, 2, av);
        let b = batch(4, 2, bv);
        let c = batch(4, 2, cv);
        let ab = emd_exact_uniform(&a, &b).unwrap().value;
        let bc = emd_exact_uniform(&b, &c).unwrap().value;
        let ac = emd_exact_uniform(&a, &c).unwrap().value;
        prop_assert!(ac <= ab + bc + 1e-9, "{ac} > {ab} + {bc}");
    }

    #[test]
    fn scale_equivariance(av in small_points(3), bv in small_points(3), s in 0.1..4.0f64) {
        let a = batch(3, 2, av.clone());
        let b = batch(3, 2, bv.clone());
        let base = emd_exact_uniform(&a, &b).unwrap().value;
        let sa = batch(3, 2, av.iter().map(|x| x * s).collect());
        let sb = batch(3, 2, bv.iter().map(|x| x * s).collect());
        let scaled = emd_exact_uniform(&sa, &sb).unwrap().value;
        prop_assert!((scaled - s * base).abs() <= 1e-9 * (1.0 + s), "{scaled} vs {}", s * base);
    }

    #[test]
    fn translation_invariance(av in small_points(3), bv in small_points(3), t in -3.0..3.0f64) {
        let a = batch(3, 2, av.clone());
        let b = batch(3, 2, bv.clone());
        let base = emd_exact_uniform(&a, &b).unwrap().value;
        let ta = batch(3, 2, av.iter().map(|x| x + t).collect());
        let tb = batch(3, 2, bv.iter().map(|x| x + t).collect());
        let shifted = emd_exact_uniform(&ta, &tb).unwrap().value;
        prop_assert!((shifted - base).abs() <= 1e-9, "{shifted} vs {base}");
    }

    #[test]
    fn identity_of_indiscernibles(av in small_points(5)) {
        let a = batch(5, 2, av.clone());
        let b = batch(5, 2, av);
        let v = emd_exact_uniform(&a, &b).unwrap().value;
        prop_assert!(v.abs() <= 1e-12, "{v}");
    }
}
