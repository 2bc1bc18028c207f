//! Affine map y = Wx + b. The input vector is the whole forward cache.

use ndarray::Array1;
use rand_chacha::ChaCha8Rng;

use super::{glorot, outer, zeros, Param};

#[derive(Debug, Clone)]
pub struct Linear {
    pub w: Param,
    pub b: Param,
}

impl Linear {
    pub fn new(name: &str, out_dim: usize, in_dim: usize, rng: &mut ChaCha8Rng) -> Linear {
        Linear {
            w: glorot(&format!("{name}.w"), out_dim, in_dim, rng),
            b: zeros(&format!("{name}.b"), 1, out_dim),
        }
    }

    pub fn out_dim(&self) -> usize {
        self.w.value.nrows()
    }

    pub fn forward(&self, x: &Array1<f64>) -> Array1<f64> {
        self.w.value.dot(x) + &self.b.value.row(0)
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(&mut self, x: &Array1<f64>, grad_out: &Array1<f64>) -> Array1<f64> {
        self.w.grad += &outer(grad_out, x);
        self.b.grad.row_mut(0).scaled_add(1.0, grad_out);
        self.w.value.t().dot(grad_out)
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.w, &self.b]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w, &mut self.b]
    }
}
