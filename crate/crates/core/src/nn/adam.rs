//! Adam with per-parameter moment state keyed by parameter name, plus
//! global gradient norm clipping.

use std::collections::BTreeMap;

use ndarray::Array2;

use super::Param;

#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    state: BTreeMap<String, (Array2<f64>, Array2<f64>)>,
    t: u64,
}

impl Adam {
    pub fn new(lr: f64, beta1: f64, beta2: f64) -> Adam {
        Adam {
            lr,
            beta1,
            beta2,
            eps: 1e-8,
            state: BTreeMap::new(),
            t: 0,
        }
    }

    /// Applies one update from the gradients currently held by `params`.
    /// Gradients are left untouched; callers zero them before the next
    /// accumulation pass.
    pub fn step(&mut self, params: &mut [&mut Param]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for p in params.iter_mut() {
            let (m, v) = self
                .state
                .entry(p.name.clone())
                .or_insert_with(|| (Array2::zeros(p.value.dim()), Array2::zeros(p.value.dim())));
            azip_update(m, v, p, self.beta1, self.beta2);
            let lr = self.lr;
            let eps = self.eps;
            ndarray::Zip::from(&mut p.value)
                .and(&*m)
                .and(&*v)
                .for_each(|w, &mi, &vi| {
                    let mhat = mi / bc1;
                    let vhat = vi / bc2;
                    *w -= lr * mhat / (vhat.sqrt() + eps);
                });
        }
    }
}

fn azip_update(m: &mut Array2<f64>, v: &mut Array2<f64>, p: &Param, b1: f64, b2: f64) {
    ndarray::Zip::from(m).and(v).and(&p.grad).for_each(|mi, vi, &g| {
        *mi = b1 * *mi + (1.0 - b1) * g;
        *vi = b2 * *vi + (1.0 - b2) * g * g;
    });
}

/// Scales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(params: &mut [&mut Param], max_norm: f64) -> f64 {
    let sq: f64 = params.iter().map(|p| p.grad.mapv(|g| g * g).sum()).sum();
    let norm = sq.sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for p in params.iter_mut() {
            p.grad.mapv_inplace(|g| g * scale);
        }
    }
    norm
}
