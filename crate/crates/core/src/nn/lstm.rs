//! LSTM cell with explicit step caches, a sequence runner, and a stacked
//! bidirectional encoder. Recurrent dropout uses one mask per sequence and
//! direction, applied to the hidden state entering the recurrence.

use ndarray::{concatenate, Array1, Axis};
use rand_chacha::ChaCha8Rng;

use super::{dropout_mask, glorot, outer, sigmoid, zeros, Param};

#[derive(Debug, Clone)]
pub struct LstmCell {
    pub w_ih: Param,
    pub w_hh: Param,
    pub b: Param,
    pub hidden: usize,
}

#[derive(Debug, Clone)]
pub struct LstmStepCache {
    x: Array1<f64>,
    h_used: Array1<f64>,
    c_prev: Array1<f64>,
    i: Array1<f64>,
    f: Array1<f64>,
    g: Array1<f64>,
    o: Array1<f64>,
    tanh_c: Array1<f64>,
    mask: Option<Array1<f64>>,
}

impl LstmCell {
    /// Gate layout in the stacked weights and bias: input, forget, cell,
    /// output. The forget bias starts at 1.0 so early cell state survives
    /// long enough to carry gradient.
    pub fn new(name: &str, in_dim: usize, hidden: usize, rng: &mut ChaCha8Rng) -> LstmCell {
        let mut b = zeros(&format!("{name}.b"), 1, 4 * hidden);
        b.value
            .slice_mut(ndarray::s![0, hidden..2 * hidden])
            .fill(1.0);
        LstmCell {
            w_ih: glorot(&format!("{name}.w_ih"), 4 * hidden, in_dim, rng),
            w_hh: glorot(&format!("{name}.w_hh"), 4 * hidden, hidden, rng),
            b,
            hidden,
        }
    }

    pub fn forward_step(
        &self,
        x: &Array1<f64>,
        h_prev: &Array1<f64>,
        c_prev: &Array1<f64>,
        mask: Option<&Array1<f64>>,
    ) -> (Array1<f64>, Array1<f64>, LstmStepCache) {
        let h_used = match mask {
            Some(m) => h_prev * m,
            None => h_prev.clone(),
        };
        let z = self.w_ih.value.dot(x) + self.w_hh.value.dot(&h_used) + &self.b.value.row(0);
        let h = self.hidden;
        let i = z.slice(ndarray::s![0..h]).mapv(sigmoid);
        let f = z.slice(ndarray::s![h..2 * h]).mapv(sigmoid);
        let g = z.slice(ndarray::s![2 * h..3 * h]).mapv(f64::tanh);
        let o = z.slice(ndarray::s![3 * h..4 * h]).mapv(sigmoid);
        let c = &f * c_prev + &i * &g;
        let tanh_c = c.mapv(f64::tanh);
        let h_out = &o * &tanh_c;
        (
            h_out,
            c,
            LstmStepCache {
                x: x.clone(),
                h_used,
                c_prev: c_prev.clone(),
                i,
                f,
                g,
                o,
                tanh_c,
                mask: mask.cloned(),
            },
        )
    }

    /// Returns (dx, dh_prev, dc_prev) and accumulates weight gradients.
    pub fn backward_step(
        &mut self,
        cache: &LstmStepCache,
        dh: &Array1<f64>,
        dc_in: &Array1<f64>,
    ) -> (Array1<f64>, Array1<f64>, Array1<f64>) {
        let do_ = dh * &cache.tanh_c;
        let dc = dc_in + &(dh * &cache.o * cache.tanh_c.mapv(|t| 1.0 - t * t));
        let di = &dc * &cache.g;
        let df = &dc * &cache.c_prev;
        let dg = &dc * &cache.i;
        let dc_prev = &dc * &cache.f;
        let dz_i = di * &cache.i * cache.i.mapv(|v| 1.0 - v);
        let dz_f = df * &cache.f * cache.f.mapv(|v| 1.0 - v);
        let dz_g = dg * cache.g.mapv(|v| 1.0 - v * v);
        let dz_o = do_ * &cache.o * cache.o.mapv(|v| 1.0 - v);
        let dz = concatenate(
            Axis(0),
            &[dz_i.view(), dz_f.view(), dz_g.view(), dz_o.view()],
        )
        .expect("gate slices share length");
        self.w_ih.grad += &outer(&dz, &cache.x);
        self.w_hh.grad += &outer(&dz, &cache.h_used);
        self.b.grad.row_mut(0).scaled_add(1.0, &dz);
        let dx = self.w_ih.value.t().dot(&dz);
        let dh_used = self.w_hh.value.t().dot(&dz);
        let dh_prev = match &cache.mask {
            Some(m) => dh_used * m,
            None => dh_used,
        };
        (dx, dh_prev, dc_prev)
    }

    /// Runs the whole sequence from zero state. `reverse` walks right to
    /// left but returns outputs in input order.
    pub fn run(
        &self,
        xs: &[Array1<f64>],
        reverse: bool,
        mask: Option<&Array1<f64>>,
    ) -> (Vec<Array1<f64>>, Vec<LstmStepCache>) {
        let mut h = Array1::zeros(self.hidden);
        let mut c = Array1::zeros(self.hidden);
        let mut hs = vec![Array1::zeros(0); xs.len()];
        let mut caches = Vec::with_capacity(xs.len());
        let order: Vec<usize> = if reverse {
            (0..xs.len()).rev().collect()
        } else {
            (0..xs.len()).collect()
        };
        for &t in &order {
            let (h_new, c_new, cache) = self.forward_step(&xs[t], &h, &c, mask);
            h = h_new;
            c = c_new;
            hs[t] = h.clone();
            caches.push(cache);
        }
        (hs, caches)
    }

    /// Mirror of [`LstmCell::run`]: `dhs` holds per-position output
    /// gradients in input order; returns input gradients in input order.
    pub fn run_backward(
        &mut self,
        caches: &[LstmStepCache],
        dhs: &[Array1<f64>],
        reverse: bool,
    ) -> Vec<Array1<f64>> {
        let n = dhs.len();
        let mut dxs = vec![Array1::zeros(0); n];
        let mut dh_carry = Array1::zeros(self.hidden);
        let mut dc_carry = Array1::zeros(self.hidden);
        let order: Vec<usize> = if reverse {
            (0..n).collect()
        } else {
            (0..n).rev().collect()
        };
        // caches are stored in processing order; map position -> cache slot.
        for (slot, &t) in order.iter().enumerate() {
            let cache = &caches[n - 1 - slot];
            let dh = &dhs[t] + &dh_carry;
            let (dx, dh_prev, dc_prev) = self.backward_step(cache, &dh, &dc_carry);
            dxs[t] = dx;
            dh_carry = dh_prev;
            dc_carry = dc_prev;
        }
        dxs
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.w_ih, &self.w_hh, &self.b]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w_ih, &mut self.w_hh, &mut self.b]
    }
}

#[derive(Debug, Clone)]
pub struct BiLstmEncoder {
    pub layers: Vec<(LstmCell, LstmCell)>,
    pub hidden: usize,
}

pub struct LayerCache {
    fwd: Vec<LstmStepCache>,
    bwd: Vec<LstmStepCache>,
}

pub struct EncoderCache {
    layers: Vec<LayerCache>,
}

impl BiLstmEncoder {
    pub fn new(
        name: &str,
        in_dim: usize,
        hidden: usize,
        depth: usize,
        rng: &mut ChaCha8Rng,
    ) -> BiLstmEncoder {
        let mut layers = Vec::new();
        for l in 0..depth {
            let d = if l == 0 { in_dim } else { 2 * hidden };
            layers.push((
                LstmCell::new(&format!("{name}.l{l}.fwd"), d, hidden, rng),
                LstmCell::new(&format!("{name}.l{l}.bwd"), d, hidden, rng),
            ));
        }
        BiLstmEncoder { layers, hidden }
    }

    pub fn out_dim(&self) -> usize {
        2 * self.hidden
    }

    /// `dropout` samples one recurrent mask per layer and direction.
    pub fn forward(
        &self,
        inputs: &[Array1<f64>],
        dropout: Option<(f64, &mut ChaCha8Rng)>,
    ) -> (Vec<Array1<f64>>, EncoderCache) {
        let mut xs: Vec<Array1<f64>> = inputs.to_vec();
        let mut caches = Vec::new();
        let mut dropout = dropout;
        for (fwd, bwd) in &self.layers {
            let (fmask, bmask) = match dropout.as_mut() {
                Some((p, rng)) if *p > 0.0 => (
                    Some(dropout_mask(self.hidden, *p, rng)),
                    Some(dropout_mask(self.hidden, *p, rng)),
                ),
                _ => (None, None),
            };
            let (fh, fcache) = fwd.run(&xs, false, fmask.as_ref());
            let (bh, bcache) = bwd.run(&xs, true, bmask.as_ref());
            let outputs: Vec<Array1<f64>> = fh
                .iter()
                .zip(&bh)
                .map(|(f, b)| {
                    concatenate(Axis(0), &[f.view(), b.view()]).expect("same length")
                })
                .collect();
            caches.push(LayerCache {
                fwd: fcache,
                bwd: bcache,
            });
            xs = outputs;
        }
        (xs, EncoderCache { layers: caches })
    }

    pub fn backward(
        &mut self,
        cache: &EncoderCache,
        doutputs: &[Array1<f64>],
    ) -> Vec<Array1<f64>> {
        let h = self.hidden;
        let mut dout: Vec<Array1<f64>> = doutputs.to_vec();
        for (l, (fwd, bwd)) in self.layers.iter_mut().enumerate().rev() {
            let lc = &cache.layers[l];
            let dfwd: Vec<Array1<f64>> =
                dout.iter().map(|d| d.slice(ndarray::s![0..h]).to_owned()).collect();
            let dbwd: Vec<Array1<f64>> = dout
                .iter()
                .map(|d| d.slice(ndarray::s![h..2 * h]).to_owned())
                .collect();
            let dx_f = fwd.run_backward(&lc.fwd, &dfwd, false);
            let dx_b = bwd.run_backward(&lc.bwd, &dbwd, true);
            dout = dx_f
                .iter()
                .zip(&dx_b)
                .map(|(a, b)| a + b)
                .collect();
        }
        dout
    }

    pub fn params(&self) -> Vec<&Param> {
        self.layers
            .iter()
            .flat_map(|(f, b)| {
                f.params().into_iter().chain(b.params())
            })
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers
            .iter_mut()
            .flat_map(|(f, b)| {
                f.params_mut().into_iter().chain(b.params_mut())
            })
            .collect()
    }
}
