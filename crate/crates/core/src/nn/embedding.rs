//! Lookup table with sparse gradient accumulation.

use ndarray::{Array1, Array2};
use rand_chacha::ChaCha8Rng;

use super::{uniform, Param};

#[derive(Debug, Clone)]
pub struct Embedding {
    pub table: Param,
}

impl Embedding {
    pub fn new(name: &str, vocab: usize, dim: usize, rng: &mut ChaCha8Rng) -> Embedding {
        Embedding {
            table: uniform(&format!("{name}.table"), vocab, dim, 0.1, rng),
        }
    }

    /// Replaces initial rows with pretrained vectors where provided.
    pub fn load_pretrained(&mut self, rows: &[(usize, Vec<f64>)]) {
        for (id, vector) in rows {
            let mut row = self.table.value.row_mut(*id);
            for (slot, v) in row.iter_mut().zip(vector) {
                *slot = *v;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.table.value.ncols()
    }

    pub fn len(&self) -> usize {
        self.table.value.nrows()
    }

    pub fn forward(&self, id: usize) -> Array1<f64> {
        self.table.value.row(id).to_owned()
    }

    pub fn backward(&mut self, id: usize, grad: &Array1<f64>) {
        self.table.grad.row_mut(id).scaled_add(1.0, grad);
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.table]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.table]
    }
}

/// A frozen table of external vectors, one per token index, used for the
/// optional contextual-embedding input. Not a parameter.
#[derive(Debug, Clone)]
pub struct ExternalVectors {
    pub rows: Array2<f64>,
}
