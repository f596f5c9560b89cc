#![allow(dead_code)]

use scn_core::rng::Xoshiro256pp;
use scn_core::tinynet::{Activation, Architecture, NetworkWeights};
use scn_core::trainer::init_weights;
use scn_core::Image;

pub fn random_image(h: usize, w: usize, seed: u64) -> Image {
    let mut rng = Xoshiro256pp::from_seed(seed);
    Image::from_fn(h, w, |_, _| rng.next_f64() as f32).unwrap()
}

const SIDE: usize = 5;
pub const FD_STEP: f64 = 1e-3;

/// Pre-activation planes of 1-based layer `index`.
fn pre_activations(net: &NetworkWeights<f64>, x: &[f64], index: usize) -> Vec<Vec<f64>> {
    let mut linear = net.clone();
    linear.layers[index - 1].shape.activation = Activation::Linear;
    linear.activations_at(x, SIDE, SIDE, index).unwrap()
}

/// Sign pattern of every hidden ReLU unit.
fn relu_pattern(net: &NetworkWeights<f64>, x: &[f64]) -> Vec<bool> {
    let mut out = Vec::new();
    for (i, l) in net.layers.iter().enumerate() {
        if l.shape.activation == Activation::Relu {
            for plane in pre_activations(net, x, i + 1) {
                out.extend(plane.iter().map(|&v| v > 0.0));
            }
        }
    }
    out
}

/// Sets hidden biases so each channel is fully active, fully inactive, or
/// split at the widest gap of its pre-activations, keeping every unit at
/// least a small margin away from the ReLU kink.
fn place_biases(net: &mut NetworkWeights<f64>, x: &[f64]) {
    for li in 0..net.layers.len() {
        if net.layers[li].shape.activation != Activation::Relu {
            continue;
        }
        net.layers[li].bias.iter_mut().for_each(|b| *b = 0.0);
        let planes = pre_activations(net, x, li + 1);
        for (o, plane) in planes.iter().enumerate() {
            let mut v = plane.clone();
            v.sort_by(f64::total_cmp);
            net.layers[li].bias[o] = match o % 3 {
                0 => 0.2 - v[0],
                1 => -0.2 - v[v.len() - 1],
                _ => {
                    let (lo, hi) = (v.len() / 4, 3 * v.len() / 4);
                    let k = (lo..hi)
                        .max_by(|&a, &b| (v[a + 1] - v[a]).total_cmp(&(v[b + 1] - v[b])))
                        .unwrap();
                    -0.5 * (v[k] + v[k + 1])
                }
            };
        }
    }
}

pub struct GradCheck {
    pub worst_relative_error: f64,
    pub params: usize,
    pub min_kink_margin: f64,
}

/// Backprop vs. central differences (step 1e-3) for every weight and bias of
/// the default architecture on a 5x5 input.
pub fn gradient_check(residual: bool, seed: u64) -> GradCheck {
    let mut arch = Architecture::default_denoiser();
    arch.residual = residual;
    let mut net = init_weights(seed, &arch).unwrap().cast::<f64>();
    let mut rng = Xoshiro256pp::from_seed(seed ^ 0xabc);
    let x: Vec<f64> = (0..SIDE * SIDE).map(|_| rng.next_f64()).collect();
    let y: Vec<f64> = (0..SIDE * SIDE).map(|_| rng.next_f64()).collect();
    place_biases(&mut net, &x);

    let mut min_kink_margin = f64::INFINITY;
    for (i, l) in net.layers.iter().enumerate() {
        if l.shape.activation == Activation::Relu {
            for plane in pre_activations(&net, &x, i + 1) {
                for v in plane {
                    min_kink_margin = min_kink_margin.min(v.abs());
                }
            }
        }
    }
    let base_pattern = relu_pattern(&net, &x);
    let loss = |p: &NetworkWeights<f64>| {
        let out = p.forward_plane(&x, SIDE, SIDE);
        out.iter()
            .zip(&y)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            / out.len() as f64
    };
    let (_, grads) = net.loss_and_gradients(&x, &y, SIDE, SIDE);

    let mut worst = 0.0f64;
    let mut params = 0;
    for li in 0..net.layers.len() {
        for is_bias in [false, true] {
            let n = if is_bias {
                net.layers[li].bias.len()
            } else {
                net.layers[li].weights.len()
            };
            for j in 0..n {
                let probe = |delta: f64| {
                    let mut p = net.clone();
                    let v = if is_bias {
                        &mut p.layers[li].bias[j]
                    } else {
                        &mut p.layers[li].weights[j]
                    };
                    *v += delta;
                    assert_eq!(
                        relu_pattern(&p, &x),
                        base_pattern,
                        "finite-difference probe crossed a ReLU kink"
                    );
                    loss(&p)
                };
                let numeric = (probe(FD_STEP) - probe(-FD_STEP)) / (2.0 * FD_STEP);
                let analytic = if is_bias {
                    grads.bias[li][j]
                } else {
                    grads.weights[li][j]
                };
                let scale = analytic.abs().max(numeric.abs()).max(1e-8);
                worst = worst.max((analytic - numeric).abs() / scale);
                params += 1;
            }
        }
    }
    GradCheck {
        worst_relative_error: worst,
        params,
        min_kink_margin,
    }
}

pub fn scn_bin() -> std::process::Command {
    std::process::Command::new(env!("CARGO_BIN_EXE_scn"))
}

/// Runs `scn` in `dir`; returns (exit code, stdout, stderr).
pub fn scn_in(dir: &std::path::Path, args: &[&str]) -> (i32, String, String) {
    let out = scn_bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn scn");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

/// Like `scn_in` but panics unless the command succeeds.
pub fn scn_ok(dir: &std::path::Path, args: &[&str]) -> String {
    let (code, stdout, stderr) = scn_in(dir, args);
    assert_eq!(code, 0, "scn {args:?} failed: {stderr}");
    stdout
}

pub fn file_hash(path: &std::path::Path) -> String {
    scn_core::cli::manifest::sha256_file(path).unwrap()
}
