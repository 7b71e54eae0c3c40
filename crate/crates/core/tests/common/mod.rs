//! Naive reference implementations used as test oracles. Written directly
//! from the defining sums with no shared code from the crate.

#![allow(dead_code)]

use mimreg::{Dataset64, LossKind};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn kernel(z: f64, sigma: f64) -> f64 {
    (-(z * z) / (2.0 * sigma * sigma)).exp()
}

pub fn density(f: &[f64], i: usize, sigma: f64) -> f64 {
    let mut s = 0.0;
    for j in 0..f.len() {
        s += kernel(f[i] - f[j], sigma);
    }
    s / f.len() as f64
}

pub fn cond_density(f: &[f64], y: &[i64], i: usize, sigma: f64) -> f64 {
    let mut s = 0.0;
    let mut n_c = 0;
    for j in 0..f.len() {
        if y[j] == y[i] {
            s += kernel(f[i] - f[j], sigma);
            n_c += 1;
        }
    }
    s / n_c as f64
}

pub fn entropy(f: &[f64], sigma: f64) -> f64 {
    let mut h = 0.0;
    for i in 0..f.len() {
        let p = density(f, i, sigma);
        h -= p * p.ln();
    }
    h
}

pub fn cond_entropy(f: &[f64], y: &[i64], sigma: f64) -> f64 {
    let n = f.len() as f64;
    let mut classes: Vec<i64> = y.to_vec();
    classes.sort();
    classes.dedup();
    let mut h = 0.0;
    for c in classes {
        let n_c = y.iter().filter(|&&v| v == c).count() as f64;
        let mut inner = 0.0;
        for i in 0..f.len() {
            if y[i] == c {
                let q = cond_density(f, y, i, sigma);
                inner += q * q.ln();
            }
        }
        h -= n_c / n * inner;
    }
    h
}

pub fn mi(f: &[f64], y: &[i64], sigma: f64) -> f64 {
    entropy(f, sigma) - cond_entropy(f, y, sigma)
}

pub fn loss(kind: LossKind, f: f64, y: i64) -> f64 {
    let m = y as f64 * f;
    match kind {
        LossKind::Hinge => {
            if 1.0 - m > 0.0 {
                1.0 - m
            } else {
                0.0
            }
        }
        LossKind::Squared => (1.0 - m).powi(2),
        LossKind::Logistic => (1.0 + (-m).exp()).ln(),
        LossKind::Exponential => (-m).exp(),
    }
}

pub fn responses(x: &Array2<f64>, w: &[f64]) -> Vec<f64> {
    x.rows()
        .into_iter()
        .map(|r| r.iter().zip(w).map(|(a, b)| a * b).sum())
        .collect()
}

/// `1/n Σ L + α/2 ‖w‖² − β I`, optionally without the loss term.
#[allow(clippy::too_many_arguments)]
pub fn objective(
    x: &Array2<f64>,
    y: &[i64],
    w: &[f64],
    kind: LossKind,
    include_loss: bool,
    alpha: f64,
    beta: f64,
    sigma: f64,
) -> f64 {
    let f = responses(x, w);
    let n = f.len() as f64;
    let mut total = 0.0;
    if include_loss {
        let mut s = 0.0;
        for i in 0..f.len() {
            s += loss(kind, f[i], y[i]);
        }
        total += s / n;
    }
    let norm2: f64 = w.iter().map(|v| v * v).sum();
    total += alpha / 2.0 * norm2;
    if beta > 0.0 {
        total -= beta * mi(&f, y, sigma);
    }
    total
}

/// Central differences of `g` at `w` with step `h`.
pub fn central_diff(g: impl Fn(&[f64]) -> f64, w: &[f64], h: f64) -> Vec<f64> {
    (0..w.len())
        .map(|j| {
            let mut wp = w.to_vec();
            wp[j] += h;
            let mut wm = w.to_vec();
            wm[j] -= h;
            (g(&wp) - g(&wm)) / (2.0 * h)
        })
        .collect()
}

/// Norm-wise relative error `‖a − b‖∞ / ‖b‖∞`, floored at `1e-10` in the denominator.
pub fn rel_err(analytic: &[f64], reference: &[f64]) -> f64 {
    let diff = analytic
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let scale = reference
        .iter()
        .map(|b| b.abs())
        .fold(0.0, f64::max)
        .max(1e-10);
    diff / scale
}

/// Uniform features in `[-1, 1]`, both labels present, uniform weights in `[-1, 1]`.
pub fn random_instance(seed: u64, n: usize, d: usize) -> (Dataset64, Array1<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0));
    let mut y: Vec<i64> = (0..n)
        .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
        .collect();
    y[0] = 1;
    y[1] = -1;
    let w: Array1<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    (Dataset64::new(x, y).unwrap(), w)
}

/// Brute-force Mann-Whitney statistic with ties counted one half.
pub fn mann_whitney(responses: &[f64], labels: &[i64]) -> f64 {
    let mut twice = 0u64;
    let mut pairs = 0u64;
    for i in 0..responses.len() {
        if labels[i] != 1 {
            continue;
        }
        for j in 0..responses.len() {
            if labels[j] == 1 {
                continue;
            }
            pairs += 1;
            if responses[i] > responses[j] {
                twice += 2;
            } else if responses[i] == responses[j] {
                twice += 1;
            }
        }
    }
    twice as f64 / (2 * pairs) as f64
}
