#![allow(dead_code)]

use mhlr::kernels::{gram_matrix, KernelSpec};
use mhlr::manifold::{graph_laplacian, EdgeWeighting};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-scale..scale))
}

/// Gram matrices alternating between rbf and linear kernels on random
/// features, plus Laplacians (even views) and random PSD matrices (odd views).
pub fn mixed_matrices(
    rng: &mut ChaCha8Rng,
    n: usize,
    v: usize,
) -> (Vec<Array2<f64>>, Vec<Array2<f64>>) {
    let mut grams = Vec::new();
    let mut regs = Vec::new();
    for k in 0..v {
        let x = uniform_matrix(rng, n, 2 + k, 1.0);
        let spec = if k % 2 == 0 {
            KernelSpec::rbf(rng.random_range(0.5..2.0))
        } else {
            KernelSpec::Linear
        };
        grams.push(gram_matrix(x.view(), &spec).unwrap().into_inner());
        if k % 2 == 0 {
            regs.push(
                graph_laplacian(x.view(), 4, EdgeWeighting::Heat)
                    .unwrap()
                    .values,
            );
        } else {
            let a = uniform_matrix(rng, n, n, 1.0);
            regs.push(a.dot(&a.t()) / n as f64);
        }
    }
    (grams, regs)
}

/// Labeled indices (about a third of the points, at least two) and 0/1
/// targets containing both classes.
pub fn random_labels(rng: &mut ChaCha8Rng, n: usize) -> (Vec<usize>, Vec<f64>) {
    let labeled: Vec<usize> = (0..n).filter(|&i| i < 2 || rng.random_bool(0.35)).collect();
    let targets = labeled
        .iter()
        .enumerate()
        .map(|(r, _)| {
            if r == 0 {
                1.0
            } else if r == 1 {
                0.0
            } else if rng.random_bool(0.5) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    (labeled, targets)
}

pub fn random_simplex(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len)
        .map(|_| -rng.random_range(1e-3..1.0f64).ln())
        .collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

/// The objective written out term by term, with `θ` and `β` taken as plain
/// vectors (no simplex constraint) and `KHK` formed explicitly.
#[allow(clippy::too_many_arguments)]
pub fn objective_oracle(
    grams: &[Array2<f64>],
    regs: &[Array2<f64>],
    labeled: &[usize],
    targets: &[f64],
    gammas: [f64; 4],
    alpha: &Array1<f64>,
    theta: &[f64],
    beta: &[f64],
) -> f64 {
    let n = alpha.len();
    let mut k = Array2::<f64>::zeros((n, n));
    for (g, &w) in grams.iter().zip(theta) {
        k = k + g * w;
    }
    let mut h = Array2::<f64>::zeros((n, n));
    for (r, &w) in regs.iter().zip(beta) {
        h = h + r * w;
    }
    let khk = k.dot(&h).dot(&k);
    let mut loss = 0.0;
    for (&i, &y) in labeled.iter().zip(targets) {
        let z: f64 = (0..n).map(|j| k[[i, j]] * alpha[j]).sum();
        let log_sig = -(-z).exp().ln_1p();
        let log_one_minus = -z.exp().ln_1p();
        loss -= y * log_sig + (1.0 - y) * log_one_minus;
    }
    loss /= labeled.len() as f64;
    let [gk, gi, gt, gb] = gammas;
    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    loss + gk * alpha.dot(&k.dot(alpha))
        + gi * alpha.dot(&khk.dot(alpha))
        + gt * sq(theta)
        + gb * sq(beta)
}
