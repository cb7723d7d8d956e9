//! Gradients of full network forward passes against central finite
//! differences, with an independent plain-loop forward as the value
//! oracle. Inputs are resampled away from activation kinks so the
//! difference quotient is valid.

use gswgan::autodiff::{Tape, Tensor};
use gswgan::data::Rng;
use gswgan::net::{
    forward, init_params, Constraint, HiddenActivation, MlpParams, MlpSpec, OutputActivation,
};

/// Plain f64 forward of the same architecture: returns the batch output
/// and the smallest distance from any activation input to its kink
/// (infinite for smooth or absent activations).
fn oracle_forward(params: &MlpParams, x: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
    let spec = params.spec();
    let mut h: Vec<Vec<f64>> = x.to_vec();
    let mut margin = f64::INFINITY;
    for layer in 0..spec.depth {
        let w = &params.weights()[layer];
        let b = &params.biases()[layer];
        let (fan_in, fan_out) = (w.rows(), w.cols());
        let mut next = Vec::with_capacity(h.len());
        for row in &h {
            assert_eq!(row.len(), fan_in);
            let mut out = vec![0.0; fan_out];
            for (j, o) in out.iter_mut().enumerate() {
                let mut acc = b.data()[j];
                for (k, v) in row.iter().enumerate() {
                    acc += v * w.data()[k * fan_out + j];
                }
                *o = acc;
            }
            next.push(out);
        }
        if layer + 1 < spec.depth {
            for row in next.iter_mut() {
                match spec.hidden_activation {
                    HiddenActivation::Relu => {
                        for v in row.iter_mut() {
                            margin = margin.min(v.abs());
                            *v = v.max(0.0);
                        }
                    }
                    HiddenActivation::Groupsort2 => {
                        for pair in row.chunks_exact_mut(2) {
                            margin = margin.min((pair[0] - pair[1]).abs());
                            if pair[0] < pair[1] {
                                pair.swap(0, 1);
                            }
                        }
                    }
                }
            }
        }
        h = next;
    }
    if matches!(spec.output_activation, OutputActivation::Tanh) {
        for row in h.iter_mut() {
            for v in row.iter_mut() {
                *v = v.tanh();
            }
        }
    }
    (h, margin)
}

/// Column-weighted batch mean of the oracle output: the scalar loss whose
/// gradient is checked.
fn oracle_loss(params: &MlpParams, x: &[Vec<f64>], col_w: &[f64]) -> (f64, f64) {
    let (out, margin) = oracle_forward(params, x);
    let mut acc = 0.0;
    for row in &out {
        for (v, c) in row.iter().zip(col_w) {
            acc += v * c;
        }
    }
    (acc / out.len() as f64, margin)
}

fn tape_loss_and_grads(
    params: &MlpParams,
    x: &Tensor,
    col_w: &Tensor,
) -> (f64, Vec<Vec<f64>>) {
    let mut tape = Tape::new();
    let out = forward(params, x, &mut tape).unwrap();
    let zero_bias = Tensor::zeros(1, 1);
    let weighted = tape.affine(&out, col_w, &zero_bias).unwrap();
    let loss = tape.reduce_mean(&weighted).unwrap();
    let value = loss.item().unwrap();
    tape.backward(&loss).unwrap();
    let grads = params
        .param_iter()
        .map(|t| tape.grad(t).unwrap().to_vec())
        .collect();
    (value, grads)
}

fn perturbed(params: &MlpParams, param_idx: usize, entry: usize, delta: f64) -> MlpParams {
    let mut p = params.clone();
    let layer = param_idx / 2;
    let target = if param_idx % 2 == 0 {
        &mut p.weights_mut()[layer]
    } else {
        &mut p.biases_mut()[layer]
    };
    let mut data = target.data().to_vec();
    data[entry] += delta;
    *target = Tensor::new(target.rows(), target.cols(), data).unwrap();
    p
}

fn random_arch(rng: &mut Rng) -> MlpSpec {
    let hidden = if rng.index(2) == 0 {
        HiddenActivation::Relu
    } else {
        HiddenActivation::Groupsort2
    };
    let width = match hidden {
        HiddenActivation::Relu => 2 + rng.index(15),
        HiddenActivation::Groupsort2 => 2 * (1 + rng.index(8)),
    };
    MlpSpec {
        input_dim: 2 + rng.index(3),
        output_dim: 1 + rng.index(3),
        width,
        depth: 2 + rng.index(4),
        hidden_activation: hidden,
        output_activation: if rng.index(2) == 0 {
            OutputActivation::None
        } else {
            OutputActivation::Tanh
        },
        constraint: Constraint::None,
    }
}

/// Draws a batch far enough from every kink that a +-h entry perturbation
/// cannot change any activation branch.
fn sample_clear_batch(
    params: &MlpParams,
    rng: &mut Rng,
    batch: usize,
) -> (Vec<Vec<f64>>, Tensor) {
    let d = params.spec().input_dim;
    for _ in 0..500 {
        let rows: Vec<Vec<f64>> = (0..batch)
            .map(|_| (0..d).map(|_| 1.5 * rng.normal()).collect())
            .collect();
        let (_, margin) = oracle_forward(params, &rows);
        if margin > 1e-2 {
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            let t = Tensor::new(batch, d, flat).unwrap();
            return (rows, t);
        }
    }
    panic!("no kink-free batch found for this architecture");
}

fn check_one_arch(seed: u64) -> (usize, f64) {
    let mut rng = Rng::new(seed).stream(7);
    let spec = random_arch(&mut rng);
    let params = init_params(&spec, &mut rng).unwrap();
    let (rows, x) = sample_clear_batch(&params, &mut rng, 5);
    let col_w: Vec<f64> = (0..spec.output_dim)
        .map(|_| rng.range(-1.0, 1.0))
        .collect();
    let col_t = Tensor::new(spec.output_dim, 1, col_w.clone()).unwrap();

    let (tape_value, grads) = tape_loss_and_grads(&params, &x, &col_t);
    let (oracle_value, _) = oracle_loss(&params, &rows, &col_w);
    assert!(
        (tape_value - oracle_value).abs() <= 1e-12 * tape_value.abs().max(1.0),
        "forward value mismatch: tape {tape_value} vs oracle {oracle_value}"
    );

    let h = 1e-5;
    let mut checked = 0;
    let mut worst = 0.0f64;
    for (p_idx, grad) in grads.iter().enumerate() {
        for (e_idx, &ad) in grad.iter().enumerate() {
            let plus = perturbed(&params, p_idx, e_idx, h);
            let minus = perturbed(&params, p_idx, e_idx, -h);
            let (lp, _) = oracle_loss(&plus, &rows, &col_w);
            let (lm, _) = oracle_loss(&minus, &rows, &col_w);
            let fd = (lp - lm) / (2.0 * h);
            if ad.abs() < 1e-7 && fd.abs() < 1e-7 {
                assert!((ad - fd).abs() < 1e-7);
            } else {
                let rel = (ad - fd).abs() / ad.abs().max(fd.abs());
                assert!(
                    rel <= 1e-5,
                    "seed {seed}: param {p_idx} entry {e_idx}: autodiff {ad} vs finite diff {fd} (rel {rel:.3e})"
                );
                worst = worst.max(rel);
            }
            checked += 1;
        }
    }
    (checked, worst)
}

#[test]
fn gradients_match_finite_differences_across_architectures() {
    let mut total = 0;
    for seed in 0..12u64 {
        let (checked, _) = check_one_arch(seed);
        assert!(checked > 0);
        total += checked;
    }
    assert!(total > 1000, "only {total} gradient entries exercised");
}

#[test]
fn oracle_and_tape_forward_agree_on_fixed_net() {
    let mut rng = Rng::new(99).stream(7);
    let spec = MlpSpec {
        input_dim: 3,
        output_dim: 2,
        width: 8,
        depth: 3,
        hidden_activation: HiddenActivation::Groupsort2,
        output_activation: OutputActivation::Tanh,
        constraint: Constraint::None,
    };
    let params = init_params(&spec, &mut rng).unwrap();
    let rows: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..3).map(|_| rng.normal()).collect())
        .collect();
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let x = Tensor::new(4, 3, flat).unwrap();
    let mut tape = Tape::new();
    let out = forward(&params, &x, &mut tape).unwrap();
    let (oracle, _) = oracle_forward(&params, &rows);
    for i in 0..4 {
        for j in 0..2 {
            let got = out.data()[i * 2 + j];
            let want = oracle[i][j];
            assert!(
                (got - want).abs() <= 1e-12,
                "entry ({i},{j}): {got} vs {want}"
            );
        }
    }
}

#[test]
fn kink_margin_screens_nondifferentiable_points() {
    // At an exact ReLU kink the two-sided quotient averages the slopes,
    // so the margin filter must report zero distance there.
    let spec = MlpSpec {
        input_dim: 1,
        output_dim: 1,
        width: 2,
        depth: 2,
        hidden_activation: HiddenActivation::Relu,
        output_activation: OutputActivation::None,
        constraint: Constraint::None,
    };
    let mut rng = Rng::new(3).stream(7);
    let mut params = init_params(&spec, &mut rng).unwrap();
    params.biases_mut()[0] = Tensor::zeros(1, 2);
    let (_, margin) = oracle_forward(&params, &[vec![0.0]]);
    assert_eq!(margin, 0.0);
    let (_, margin_off) = oracle_forward(&params, &[vec![1.0]]);
    assert!(margin_off > 0.0);
}
