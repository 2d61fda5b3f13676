//! Kernel checks against naive loop oracles and central finite differences.

mod common;

use common::oracles::{max_abs_diff, naive_conv, naive_dense, naive_pool, random_tensor};
use proptest::prelude::*;
use rand::Rng;
use ts2img::rng::{stream, Purpose};
use ts2img::tensor::*;

#[test]
fn conv2d_matches_naive_loops() {
    let mut rng = stream(101, Purpose::Test, 0);
    for case in 0..20 {
        let (n, h, w) = (rng.gen_range(1..3), rng.gen_range(3..10), rng.gen_range(3..10));
        let (cin, cout) = (rng.gen_range(1..4), rng.gen_range(1..17));
        let (k, padding) = if case % 2 == 0 { (3, Padding::Same) } else { (rng.gen_range(1..4), Padding::Valid) };
        let x = random_tensor::<f64>(&[n, h, w, cin], &mut rng);
        let wt = random_tensor::<f64>(&[k, k, cin, cout], &mut rng);
        let b = random_tensor::<f64>(&[cout], &mut rng);
        let pad = if padding == Padding::Same { k / 2 } else { 0 };
        let expected = naive_conv(&x, &wt, &b, pad);
        let got = conv2d_forward(&x.cast::<f32>(), &wt.cast(), &b.cast(), 1, padding).unwrap();
        assert!(max_abs_diff(got.data(), &expected) < 1e-5, "case {case}");
    }
    // reference instance: 8×8×3 input, sixteen 3×3 kernels
    let x = random_tensor::<f64>(&[1, 8, 8, 3], &mut rng);
    let wt = random_tensor::<f64>(&[3, 3, 3, 16], &mut rng);
    let b = random_tensor::<f64>(&[16], &mut rng);
    let got = conv2d_forward(&x.cast::<f32>(), &wt.cast(), &b.cast(), 1, Padding::Same).unwrap();
    assert_eq!(got.shape(), &[1, 8, 8, 16]);
    assert!(max_abs_diff(got.data(), &naive_conv(&x, &wt, &b, 1)) < 1e-5);
}

#[test]
fn maxpool_matches_window_scan() {
    let mut rng = stream(102, Purpose::Test, 0);
    for case in 0..20 {
        let shape = if case == 0 {
            [1, 6, 6, 4]
        } else {
            [rng.gen_range(1..3), rng.gen_range(2..11), rng.gen_range(2..11), rng.gen_range(1..5)]
        };
        let x = random_tensor::<f64>(&shape, &mut rng);
        let (y, _) = maxpool2x2_forward(&x.cast::<f32>()).unwrap();
        assert_eq!(y.shape(), &[shape[0], shape[1] / 2, shape[2] / 2, shape[3]]);
        assert!(max_abs_diff(y.data(), &naive_pool(&x)) < 1e-5, "case {case}");
    }
}

#[test]
fn dense_matches_triple_loop() {
    let mut rng = stream(103, Purpose::Test, 0);
    for case in 0..20 {
        let (n, d, u) = if case == 0 { (4, 10, 7) } else { (rng.gen_range(1..6), rng.gen_range(1..30), rng.gen_range(1..20)) };
        let x = random_tensor::<f64>(&[n, d], &mut rng);
        let w = random_tensor::<f64>(&[d, u], &mut rng);
        let b = random_tensor::<f64>(&[u], &mut rng);
        let got = dense_forward(&x.cast::<f32>(), &w.cast(), &b.cast()).unwrap();
        assert!(max_abs_diff(got.data(), &naive_dense(&x, &w, &b)) < 1e-5, "case {case}");
    }
}

#[test]
fn relu_matches_elementwise_oracle() {
    let mut rng = stream(104, Purpose::Test, 0);
    for _ in 0..20 {
        let x = random_tensor::<f32>(&[rng.gen_range(1..50)], &mut rng);
        let y = relu(&x);
        for (&a, &b) in x.data().iter().zip(y.data()) {
            assert_eq!(b, if a > 0.0 { a } else { 0.0 });
        }
    }
}

// ------------------------------------------------------ finite differences

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Central differences of `f` at `x`, one coordinate at a time.
fn numeric_grad(x: &[f64], eps: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + eps;
            let up = f(&probe);
            probe[i] = orig - eps;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * eps)
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn assert_grads(analytic: &[f64], numeric: &[f64], what: &str) {
    let worst = analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| rel_err(a, n))
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "{what}: max relative error {worst:e}");
}

#[test]
fn conv2d_backward_matches_finite_differences() {
    let mut rng = stream(201, Purpose::Test, 0);
    for case in 0..6 {
        let padding = if case % 2 == 0 { Padding::Same } else { Padding::Valid };
        let stride = 1 + case / 4;
        let x = random_tensor::<f64>(&[2, 6, 5, 2], &mut rng);
        let w = random_tensor::<f64>(&[3, 3, 2, 3], &mut rng);
        let b = random_tensor::<f64>(&[3], &mut rng);
        let y = conv2d_forward(&x, &w, &b, stride, padding).unwrap();
        let r = random_tensor::<f64>(y.shape(), &mut rng);
        let g = conv2d_backward(&x, &w, &b, &r, stride, padding).unwrap();

        let loss = |x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>| {
            dot(conv2d_forward(x, w, b, stride, padding).unwrap().data(), r.data())
        };
        let nx = numeric_grad(x.data(), 1e-4, |v| loss(&Tensor::new(x.shape(), v.to_vec()).unwrap(), &w, &b));
        let nw = numeric_grad(w.data(), 1e-4, |v| loss(&x, &Tensor::new(w.shape(), v.to_vec()).unwrap(), &b));
        let nb = numeric_grad(b.data(), 1e-4, |v| loss(&x, &w, &Tensor::new(b.shape(), v.to_vec()).unwrap()));
        assert_grads(g.input.data(), &nx, "conv input");
        assert_grads(g.weights.data(), &nw, "conv weights");
        assert_grads(g.bias.data(), &nb, "conv bias");
    }
}

#[test]
fn dense_backward_matches_finite_differences() {
    let mut rng = stream(202, Purpose::Test, 0);
    for case in 0..6 {
        // single rows take a separate code path
        let n = if case % 2 == 0 { 3 } else { 1 };
        let x = random_tensor::<f64>(&[n, 7], &mut rng);
        let w = random_tensor::<f64>(&[7, 4], &mut rng);
        let b = random_tensor::<f64>(&[4], &mut rng);
        let r = random_tensor::<f64>(&[n, 4], &mut rng);
        let (mut dw, mut db) = (vec![0.0; 28], vec![0.0; 4]);
        let dx = dense_backward(&x, &w, &r, &mut dw, &mut db, true).unwrap().unwrap();
        let loss = |x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>| dot(dense_forward(x, w, b).unwrap().data(), r.data());
        let nx = numeric_grad(x.data(), 1e-4, |v| loss(&Tensor::new([n, 7], v.to_vec()).unwrap(), &w, &b));
        let nw = numeric_grad(w.data(), 1e-4, |v| loss(&x, &Tensor::new([7, 4], v.to_vec()).unwrap(), &b));
        let nb = numeric_grad(b.data(), 1e-4, |v| loss(&x, &w, &Tensor::new([4], v.to_vec()).unwrap()));
        assert_grads(dx.data(), &nx, "dense input");
        assert_grads(&dw, &nw, "dense weights");
        assert_grads(&db, &nb, "dense bias");
    }
}

#[test]
fn pool_and_relu_backward_match_finite_differences() {
    let mut rng = stream(203, Purpose::Test, 0);
    for _ in 0..5 {
        let x = random_tensor::<f64>(&[2, 5, 4, 3], &mut rng);
        let (y, idx) = maxpool2x2_forward(&x).unwrap();
        let r = random_tensor::<f64>(y.shape(), &mut rng);
        let g = maxpool2x2_backward(&idx, &r).unwrap();
        let n = numeric_grad(x.data(), 1e-4, |v| {
            dot(maxpool2x2_forward(&Tensor::new(x.shape(), v.to_vec()).unwrap()).unwrap().0.data(), r.data())
        });
        assert_grads(g.data(), &n, "maxpool");

        let y = relu(&x);
        let r = random_tensor::<f64>(x.shape(), &mut rng);
        let g = relu_backward(&y, &r).unwrap();
        let n = numeric_grad(x.data(), 1e-4, |v| dot(relu(&Tensor::new(x.shape(), v.to_vec()).unwrap()).data(), r.data()));
        assert_grads(g.data(), &n, "relu");
    }
}

#[test]
fn dropout_backward_matches_finite_differences() {
    let mut rng = stream(204, Purpose::Test, 0);
    let x = random_tensor::<f64>(&[4, 9], &mut rng);
    let r = random_tensor::<f64>(&[4, 9], &mut rng);
    let (_, mask) = dropout_apply(&x, 0.3, &mut stream(7, Purpose::Dropout, 0), true).unwrap();
    let g = dropout_backward(&mask, &r).unwrap();
    let n = numeric_grad(x.data(), 1e-5, |v| {
        let t = Tensor::new([4, 9], v.to_vec()).unwrap();
        dot(dropout_apply(&t, 0.3, &mut stream(7, Purpose::Dropout, 0), true).unwrap().0.data(), r.data())
    });
    assert_grads(g.data(), &n, "dropout");
}

#[test]
fn softmax_ce_gradient_matches_finite_differences() {
    let mut rng = stream(205, Purpose::Test, 0);
    for _ in 0..10 {
        let k = rng.gen_range(2..8);
        let n = rng.gen_range(1..5);
        let logits = Tensor::<f64>::from_fn([n, k], |_| rng.gen_range(-3.0..3.0));
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let (_, g) = softmax_cross_entropy(&logits, &labels).unwrap();
        let num = numeric_grad(logits.data(), 1e-5, |v| {
            softmax_cross_entropy(&Tensor::new([n, k], v.to_vec()).unwrap(), &labels).unwrap().0
        });
        let worst = g.data().iter().zip(&num).map(|(&a, &b)| rel_err(a, b)).fold(0.0, f64::max);
        assert!(worst < 1e-4, "softmax ce gradient error {worst:e}");
    }
}

// ------------------------------------------------------------------ backward

#[test]
fn linear_model_backward_equals_closed_form() {
    // L = Σ (x·W - t)² / N  ⇒  ∂L/∂W = 2·xᵀ·(pred − t)/N
    let mut rng = stream(301, Purpose::Test, 0);
    let (n, d, u) = (5, 4, 3);
    let x = random_tensor::<f64>(&[n, d], &mut rng);
    let target = random_tensor::<f64>(&[n, u], &mut rng);
    let mut seq = Sequential::<f64>::build(&[LayerSpec::Dense { units: u }], &[d], &mut rng).unwrap();
    let (pred, caches) = seq.forward(x.clone(), &mut Mode::Infer).unwrap();
    let resid: Vec<f64> = pred.data().iter().zip(target.data()).map(|(p, t)| p - t).collect();
    let grad = Tensor::new([n, u], resid.iter().map(|r| 2.0 * r / n as f64).collect()).unwrap();
    seq.backward(caches, grad, false).unwrap();
    let dw = seq.params()[0].grad().unwrap().to_vec();
    for i in 0..d {
        for j in 0..u {
            let expected: f64 = (0..n).map(|s| 2.0 * x.data()[s * d + i] * resid[s * u + j]).sum::<f64>() / n as f64;
            assert!((dw[i * u + j] - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn zero_loss_gradient_gives_zero_parameter_gradients() {
    let mut rng = stream(302, Purpose::Test, 0);
    let specs = [
        LayerSpec::Conv2d { filters: 2, kernel: 3, stride: 1, padding: Padding::Same },
        LayerSpec::Relu,
        LayerSpec::Maxpool,
        LayerSpec::Flatten,
        LayerSpec::Dense { units: 3 },
    ];
    let mut seq = Sequential::<f64>::build(&specs, &[6, 6, 1], &mut rng).unwrap();
    let x = random_tensor::<f64>(&[2, 6, 6, 1], &mut rng);
    let (_, caches) = seq.forward(x, &mut Mode::Infer).unwrap();
    seq.backward(caches, Tensor::zeros([2, 3]), false).unwrap();
    for p in seq.params() {
        assert!(p.grad().unwrap().iter().all(|&g| g == 0.0));
    }
}

// ---------------------------------------------------------------------- adam

/// Independent transcription of the Adam recurrences.
fn scripted_adam(theta0: f64, grads: &[f64], lr: f64, b1: f64, b2: f64, eps: f64) -> Vec<f64> {
    let (mut m, mut v, mut theta) = (0.0, 0.0, theta0);
    let mut out = Vec::new();
    for (t, &g) in grads.iter().enumerate() {
        let t = (t + 1) as f64;
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        let mhat = m / (1.0 - b1.powf(t));
        let vhat = v / (1.0 - b2.powf(t));
        theta -= lr * mhat / (vhat.sqrt() + eps);
        out.push(theta);
    }
    out
}

#[test]
fn adam_trajectory_matches_scripted_recurrence() {
    let grads = [1.0; 5];
    let expected = scripted_adam(0.25, &grads, 0.001, 0.9, 0.999, 1e-7);
    let mut state = AdamState::<f64>::new(AdamConfig::default(), 1).unwrap();
    let mut p = [0.25];
    for (step, want) in expected.iter().enumerate() {
        adam_step(&mut p, &[1.0], &mut state).unwrap();
        assert!((p[0] - want).abs() < 1e-9, "step {step}: {} vs {want}", p[0]);
    }
    assert_eq!(state.step_count, 5);

    // a varying gradient sequence through the tensor-level API
    let seq = [0.3, -1.2, 2.5, 0.0, -0.7, 0.05];
    let expected = scripted_adam(-1.0, &seq, 0.01, 0.8, 0.99, 1e-6);
    let cfg = AdamConfig { learning_rate: 0.01, beta1: 0.8, beta2: 0.99, epsilon: 1e-6 };
    let mut state = AdamState::<f64>::new(cfg, 1).unwrap();
    let mut t = Tensor::new([1], vec![-1.0]).unwrap();
    for (g, want) in seq.iter().zip(&expected) {
        t.grad_mut()[0] = *g;
        state.step(&mut [&mut t]).unwrap();
        assert!((t.data()[0] - want).abs() < 1e-9);
    }
}

// ------------------------------------------------------------- reproducibility

fn train_steps(seed: u64) -> Vec<u32> {
    let mut init = stream(seed, Purpose::Init, 0);
    let head = Sequential::<f32>::build(
        &[
            LayerSpec::Conv2d { filters: 3, kernel: 3, stride: 1, padding: Padding::Same },
            LayerSpec::Relu,
            LayerSpec::Maxpool,
        ],
        &[8, 10, 1],
        &mut init,
    )
    .unwrap();
    let cls = Sequential::build(
        &[LayerSpec::Flatten, LayerSpec::Dense { units: 8 }, LayerSpec::Relu, LayerSpec::Dropout { rate: 0.5 }, LayerSpec::Dense { units: 2 }],
        &[4, 5, 3],
        &mut init,
    )
    .unwrap();
    let mut net = Network::new(vec![head], 1, HeadSharing::Separate, cls).unwrap();
    let mut adam = AdamState::new(AdamConfig::default(), net.parameter_count()).unwrap();
    let mut data_rng = stream(seed, Purpose::Test, 1);
    for step in 0..5 {
        let x = random_tensor::<f32>(&[3, 8, 10, 1], &mut data_rng);
        let mut drop = stream(seed, Purpose::Dropout, step);
        let logits = net.forward(vec![x], &mut Mode::Train(&mut drop)).unwrap();
        let (_, g) = softmax_cross_entropy(&logits, &[0, 1, 1]).unwrap();
        net.zero_grad();
        net.backward(g).unwrap();
        adam.step(&mut net.params_mut()).unwrap();
    }
    net.params().iter().flat_map(|p| p.data().iter().map(|v| v.to_bits())).collect()
}

#[test]
fn seeded_training_steps_are_bit_reproducible() {
    assert_eq!(train_steps(9), train_steps(9));
    assert_ne!(train_steps(9), train_steps(10));
}

// ------------------------------------------------------------- shape algebra

fn arb_chain() -> impl Strategy<Value = Vec<LayerSpec>> {
    let conv = (1usize..5, prop_oneof![Just(1usize), Just(3), Just(5)], 1usize..3, any::<bool>()).prop_map(
        |(filters, kernel, stride, same)| LayerSpec::Conv2d {
            filters,
            kernel,
            stride,
            padding: if same { Padding::Same } else { Padding::Valid },
        },
    );
    let block = prop_oneof![conv, Just(LayerSpec::Relu), Just(LayerSpec::Maxpool), (0.0f64..0.9).prop_map(|rate| LayerSpec::Dropout { rate })];
    (prop::collection::vec(block, 0..5), prop::collection::vec(1usize..6, 0..3)).prop_map(|(mut convs, dense)| {
        convs.push(LayerSpec::Flatten);
        convs.extend(dense.into_iter().map(|units| LayerSpec::Dense { units }));
        convs
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn predicted_shapes_equal_realized(chain in arb_chain(), h in 4usize..20, w in 4usize..20, c in 1usize..4, seed in 0u64..1000) {
        let input = [h, w, c];
        let predicted = chain.iter().try_fold(input.to_vec(), |s, l| l.output_shape(&s));
        let mut rng = stream(seed, Purpose::Test, 0);
        match predicted {
            Err(_) => prop_assert!(Sequential::<f32>::build(&chain, &input, &mut rng).is_err()),
            Ok(out) => {
                let net = Sequential::<f32>::build(&chain, &input, &mut rng).unwrap();
                let x = random_tensor::<f32>(&[2, h, w, c], &mut rng);
                let (y, _) = net.forward(x, &mut Mode::Train(&mut rng)).unwrap();
                prop_assert_eq!(&y.shape()[1..], out.as_slice());
            }
        }
    }
}
