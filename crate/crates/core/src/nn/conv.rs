//! Character-level encoder: embed characters, slide a fixed window over the
//! (padded) sequence, apply a tanh convolution and max-pool each filter.

use ndarray::Array1;
use rand_chacha::ChaCha8Rng;

use super::embedding::Embedding;
use super::{glorot, zeros, Param};

/// Reserved character id used to pad token boundaries.
pub const PAD_CHAR: usize = 0;

#[derive(Debug, Clone)]
pub struct CharCnn {
    pub emb: Embedding,
    pub w: Param,
    pub b: Param,
    pub window: usize,
}

#[derive(Debug, Clone)]
pub struct CharCnnCache {
    padded: Vec<usize>,
    windows: Vec<Array1<f64>>,
    activations: Vec<Array1<f64>>,
    argmax: Vec<usize>,
}

impl CharCnn {
    pub fn new(
        name: &str,
        char_vocab: usize,
        char_dim: usize,
        filters: usize,
        window: usize,
        rng: &mut ChaCha8Rng,
    ) -> CharCnn {
        assert!(window % 2 == 1, "window must be odd");
        CharCnn {
            emb: Embedding::new(&format!("{name}.chars"), char_vocab, char_dim, rng),
            w: glorot(&format!("{name}.w"), filters, window * char_dim, rng),
            b: zeros(&format!("{name}.b"), 1, filters),
            window,
        }
    }

    pub fn filters(&self) -> usize {
        self.w.value.nrows()
    }

    pub fn forward(&self, char_ids: &[usize]) -> (Array1<f64>, CharCnnCache) {
        let pad = self.window / 2;
        let mut padded = vec![PAD_CHAR; pad];
        padded.extend_from_slice(char_ids);
        padded.extend(std::iter::repeat(PAD_CHAR).take(pad));
        let dim = self.emb.dim();
        let positions = padded.len() - self.window + 1;
        let filters = self.filters();
        let mut windows = Vec::with_capacity(positions);
        let mut activations = Vec::with_capacity(positions);
        for t in 0..positions {
            let mut x = Array1::zeros(self.window * dim);
            for off in 0..self.window {
                let row = self.emb.table.value.row(padded[t + off]);
                x.slice_mut(ndarray::s![off * dim..(off + 1) * dim])
                    .assign(&row);
            }
            let z = self.w.value.dot(&x) + &self.b.value.row(0);
            activations.push(z.mapv(f64::tanh));
            windows.push(x);
        }
        let mut pooled = Array1::from_elem(filters, f64::NEG_INFINITY);
        let mut argmax = vec![0usize; filters];
        for (t, h) in activations.iter().enumerate() {
            for f in 0..filters {
                if h[f] > pooled[f] {
                    pooled[f] = h[f];
                    argmax[f] = t;
                }
            }
        }
        (
            pooled,
            CharCnnCache {
                padded,
                windows,
                activations,
                argmax,
            },
        )
    }

    /// Max-pooling routes each filter's gradient to its argmax window.
    pub fn backward(&mut self, cache: &CharCnnCache, grad_pooled: &Array1<f64>) {
        let dim = self.emb.dim();
        let mut dwindows: Vec<Array1<f64>> = cache
            .windows
            .iter()
            .map(|x| Array1::zeros(x.len()))
            .collect();
        for f in 0..self.filters() {
            let t = cache.argmax[f];
            let h = cache.activations[t][f];
            let dz = grad_pooled[f] * (1.0 - h * h);
            self.b.grad[(0, f)] += dz;
            self.w
                .grad
                .row_mut(f)
                .scaled_add(dz, &cache.windows[t]);
            dwindows[t].scaled_add(dz, &self.w.value.row(f));
        }
        for (t, dx) in dwindows.iter().enumerate() {
            if dx.iter().all(|&v| v == 0.0) {
                continue;
            }
            for off in 0..self.window {
                let chunk = dx.slice(ndarray::s![off * dim..(off + 1) * dim]);
                self.emb
                    .table
                    .grad
                    .row_mut(cache.padded[t + off])
                    .scaled_add(1.0, &chunk);
            }
        }
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut p = self.emb.params();
        p.push(&self.w);
        p.push(&self.b);
        p
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p = self.emb.params_mut();
        p.push(&mut self.w);
        p.push(&mut self.b);
        p
    }
}
