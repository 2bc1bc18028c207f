//! Small dense neural-network layers with explicit forward caches and
//! hand-written backward passes. Everything is f64 so analytic gradients
//! can be validated against central finite differences tightly.

pub mod adam;
pub mod biaffine;
pub mod conv;
pub mod embedding;
pub mod linear;
pub mod lstm;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// One named parameter tensor and its gradient accumulator. Vectors are
/// stored as single-row matrices so all parameters share one shape family.
#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub value: Array2<f64>,
    pub grad: Array2<f64>,
}

impl Param {
    pub fn new(name: impl Into<String>, value: Array2<f64>) -> Param {
        let grad = Array2::zeros(value.raw_dim());
        Param {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

/// Uniform Glorot initialization for a (rows, cols) weight matrix.
pub fn glorot(name: &str, rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Param {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let value = Array2::from_shape_fn((rows, cols), |_| rng.random_range(-bound..bound));
    Param::new(name, value)
}

/// Small-range uniform initialization, used for embedding tables and the
/// root vector.
pub fn uniform(name: &str, rows: usize, cols: usize, bound: f64, rng: &mut ChaCha8Rng) -> Param {
    let value = Array2::from_shape_fn((rows, cols), |_| rng.random_range(-bound..bound));
    Param::new(name, value)
}

pub fn zeros(name: &str, rows: usize, cols: usize) -> Param {
    Param::new(name, Array2::zeros((rows, cols)))
}

/// Numerically stable softmax.
pub fn softmax(scores: &Array1<f64>) -> Array1<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Array1<f64> = scores.mapv(|s| (s - max).exp());
    let sum: f64 = exps.sum();
    exps / sum
}

/// log softmax entry for one index, stable.
pub fn log_softmax_at(scores: &Array1<f64>, index: usize) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = scores.mapv(|s| (s - max).exp()).sum().ln() + max;
    scores[index] - log_sum
}

pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp() - 1.0
    }
}

/// Derivative of ELU expressed from the pre-activation.
pub fn elu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        x.exp()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Inverted dropout mask: entries are 0 with probability p, otherwise
/// 1/(1-p), so expectations match eval mode.
pub fn dropout_mask(len: usize, p: f64, rng: &mut ChaCha8Rng) -> Array1<f64> {
    let keep = 1.0 - p;
    Array1::from_shape_fn(len, |_| {
        if rng.random::<f64>() < p {
            0.0
        } else {
            1.0 / keep
        }
    })
}

/// Outer product a ⊗ b.
pub fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((a.len(), b.len()));
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[(i, j)] = ai * bj;
        }
    }
    out
}
