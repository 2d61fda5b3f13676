#![allow(dead_code)]

pub mod oracles;
pub mod reference;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};
use ts2img::model::{build_network, ModelConfig};
use ts2img::raster::{render_plot, PlotImage, PlotSpec, Rgb8Image, TimeSeries};
use ts2img::rng::{stream, Purpose};
use ts2img::tensor::{softmax_cross_entropy, Mode, Network, Tensor};

pub const GOLDEN_SINE_SHA256: &str = "e175e99faff5519af82844b01a3f5336281e7fd25c3936fdf4bdd83d1e11cccd";

/// Reference input for the rasterizer golden: four periods of a sine over
/// 100 samples, rounded to 1e-6 so the literal values are platform-exact.
pub fn golden_sine() -> TimeSeries {
    let values = (0..100)
        .map(|i| {
            let v = (i as f64 * 2.0 * std::f64::consts::PI / 25.0).sin();
            (v * 1e6).round() / 1e6
        })
        .collect();
    TimeSeries::new("sine", values)
}

pub fn render_golden_sine() -> PlotImage {
    render_plot(&[golden_sine()], &PlotSpec::default()).expect("render")
}

/// A line plot of a random walk with random length, offset and scale; one
/// in four has two overlaid series.
pub fn random_plot(index: u64) -> Rgb8Image {
    let mut rng = stream(4242, Purpose::Test, index);
    let mut series = Vec::new();
    for k in 0..if index % 4 == 3 { 2 } else { 1 } {
        let n = rng.gen_range(2..400);
        let (offset, scale) = (rng.gen_range(-1e3..1e3), 10f64.powf(rng.gen_range(-3.0..3.0)));
        let mut v = 0.0;
        let values = (0..n)
            .map(|_| {
                let step: f64 = StandardNormal.sample(&mut rng);
                v += step;
                offset + scale * v
            })
            .collect();
        series.push(TimeSeries::new(format!("s{k}"), values));
    }
    Rgb8Image::from(&render_plot(&series, &PlotSpec::default()).expect("render"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Outcome of comparing every analytic parameter gradient with finite
/// differences.
#[derive(Debug)]
pub struct GradCheck {
    pub checked: usize,
    pub nonzero: usize,
    /// Parameters whose finite-difference estimates disagree between two
    /// step sizes: a ReLU or max-pool switch lies inside the stencil, so the
    /// loss is not smooth there and they are left out of `max_rel_error`.
    pub kinks: usize,
    pub max_rel_error: f64,
    pub worst: String,
}

/// Denominator floor of the relative error. Finite-difference round-off in
/// f64 is around 1e-10 here, so gradients below this size are compared
/// with an absolute tolerance of `1e-6 * GRAD_REL_FLOOR`.
pub const GRAD_REL_FLOOR: f64 = 1e-3;
pub const GRAD_STEPS: [f64; 2] = [1e-5, 2e-6];

pub fn rel_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(GRAD_REL_FLOOR)
}

fn sample_loss(net: &mut Network<f64>, x: &Tensor<f64>, label: usize, seed: u64) -> (f64, Tensor<f64>) {
    // re-seeding keeps the dropout mask identical between evaluations
    let mut rng = stream(seed, Purpose::Test, 2);
    let logits = net.forward(vec![x.clone()], &mut Mode::Train(&mut rng)).unwrap();
    softmax_cross_entropy(&logits, &[label]).unwrap()
}

/// Gradient check of the reduced network (two filters per block) on one
/// `32×48×channels` input in f64, dropout active with a fixed mask.
pub fn full_network_gradient_check(seed: u64, channels: usize) -> GradCheck {
    let cfg = ModelConfig {
        filters: vec![2; 5],
        fc_units: vec![8, 6],
        n_classes: 3,
        seed,
        ..ModelConfig::default()
    };
    let mut net = build_network::<f64>(&cfg, [32, 48, channels]).unwrap();
    let mut rng = stream(seed, Purpose::Test, 1);
    // zero biases leave many pre-activations exactly on the ReLU kink
    for p in net.params_mut() {
        if p.shape().len() == 1 {
            for b in p.data_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *b = 0.1 + 0.05 * z;
            }
        }
    }
    let x = Tensor::from_fn([1, 32, 48, channels], |_| StandardNormal.sample(&mut rng));
    let label = (seed % 3) as usize;

    net.zero_grad();
    let (_, g) = sample_loss(&mut net, &x, label, seed);
    net.backward(g).unwrap();
    let analytic: Vec<Vec<f64>> = net.params().iter().map(|p| p.grad().unwrap().to_vec()).collect();

    let mut out = GradCheck {
        checked: 0,
        nonzero: 0,
        kinks: 0,
        max_rel_error: 0.0,
        worst: String::new(),
    };
    for (pi, grads) in analytic.iter().enumerate() {
        for (j, &a) in grads.iter().enumerate() {
            let orig = net.params()[pi].data()[j];
            let mut at = |offset: f64| {
                net.params_mut()[pi].data_mut()[j] = orig + offset;
                sample_loss(&mut net, &x, label, seed).0
            };
            // five-point central stencil, error O(h^4)
            let [coarse, fine] = GRAD_STEPS.map(|h| (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h));
            net.params_mut()[pi].data_mut()[j] = orig;
            out.checked += 1;
            if a != 0.0 {
                out.nonzero += 1;
            }
            if rel_error(coarse, fine) > 1e-6 {
                out.kinks += 1;
                continue;
            }
            let rel = rel_error(a, coarse);
            if rel > out.max_rel_error {
                out.max_rel_error = rel;
                out.worst = format!("tensor {pi} index {j}: analytic {a:e}, numeric {coarse:e}");
            }
        }
    }
    out
}
