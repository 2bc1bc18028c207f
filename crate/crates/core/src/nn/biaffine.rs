//! Biaffine scoring heads. The pointer scores every candidate vector
//! against the decoder state; the labeler scores one chosen head vector
//! against the decoder state, once per label.

use ndarray::{s, Array1};
use rand_chacha::ChaCha8Rng;

use super::linear::Linear;
use super::{elu, elu_grad, glorot, outer, zeros, Param};

/// score(k) = f1' W f2_k + u.f1 + v.f2_k + b with f1 = elu(Md d),
/// f2_k = elu(Me c_k). Candidate projections are computed once per
/// sentence and reused across decoder steps.
#[derive(Debug, Clone)]
pub struct BiaffinePointer {
    pub mlp_dec: Linear,
    pub mlp_enc: Linear,
    pub w: Param,
    pub u: Param,
    pub v: Param,
    pub b: Param,
}

pub struct CandidateCache {
    inputs: Vec<Array1<f64>>,
    pre: Vec<Array1<f64>>,
    act: Vec<Array1<f64>>,
}

impl CandidateCache {
    pub fn len(&self) -> usize {
        self.act.len()
    }

    pub fn is_empty(&self) -> bool {
        self.act.is_empty()
    }
}

pub struct PointerStepCache {
    dec_in: Array1<f64>,
    f1_pre: Array1<f64>,
    f1: Array1<f64>,
}

impl BiaffinePointer {
    pub fn new(
        name: &str,
        dec_dim: usize,
        enc_dim: usize,
        arc_dim: usize,
        rng: &mut ChaCha8Rng,
    ) -> BiaffinePointer {
        BiaffinePointer {
            mlp_dec: Linear::new(&format!("{name}.mlp_dec"), arc_dim, dec_dim, rng),
            mlp_enc: Linear::new(&format!("{name}.mlp_enc"), arc_dim, enc_dim, rng),
            w: glorot(&format!("{name}.w"), arc_dim, arc_dim, rng),
            u: zeros(&format!("{name}.u"), 1, arc_dim),
            v: zeros(&format!("{name}.v"), 1, arc_dim),
            b: zeros(&format!("{name}.b"), 1, 1),
        }
    }

    pub fn project_candidates(&self, candidates: &[Array1<f64>]) -> CandidateCache {
        let mut pre = Vec::with_capacity(candidates.len());
        let mut act = Vec::with_capacity(candidates.len());
        for c in candidates {
            let p = self.mlp_enc.forward(c);
            act.push(p.mapv(elu));
            pre.push(p);
        }
        CandidateCache {
            inputs: candidates.to_vec(),
            pre,
            act,
        }
    }

    /// Scores for every candidate, in candidate order.
    pub fn scores(
        &self,
        dec_state: &Array1<f64>,
        cands: &CandidateCache,
    ) -> (Array1<f64>, PointerStepCache) {
        let f1_pre = self.mlp_dec.forward(dec_state);
        let f1 = f1_pre.mapv(elu);
        let wtf1 = self.w.value.t().dot(&f1);
        let u = self.u.value.row(0);
        let v = self.v.value.row(0);
        let bias = self.b.value[(0, 0)] + u.dot(&f1);
        let scores = Array1::from_shape_fn(cands.act.len(), |k| {
            let f2 = &cands.act[k];
            wtf1.dot(f2) + v.dot(f2) + bias
        });
        (
            scores,
            PointerStepCache {
                dec_in: dec_state.clone(),
                f1_pre,
                f1,
            },
        )
    }

    /// Accumulates parameter gradients for one step, adds each candidate's
    /// post-activation gradient to `dcand_act`, and returns the decoder
    /// state gradient. `dcand_act` must have one slot per candidate.
    pub fn backward_step(
        &mut self,
        step: &PointerStepCache,
        cands: &CandidateCache,
        dscores: &Array1<f64>,
        dcand_act: &mut [Array1<f64>],
    ) -> Array1<f64> {
        let dim = step.f1.len();
        let mut df1 = Array1::zeros(dim);
        let wtf1 = self.w.value.t().dot(&step.f1);
        let mut dsum = 0.0;
        for (k, &ds) in dscores.iter().enumerate() {
            if ds == 0.0 {
                continue;
            }
            let f2 = &cands.act[k];
            df1.scaled_add(ds, &self.w.value.dot(f2));
            dcand_act[k].scaled_add(ds, &wtf1);
            dcand_act[k].scaled_add(ds, &self.v.value.row(0).to_owned());
            self.w.grad.scaled_add(ds, &outer(&step.f1, f2));
            self.v.grad.row_mut(0).scaled_add(ds, f2);
            dsum += ds;
        }
        df1.scaled_add(dsum, &self.u.value.row(0).to_owned());
        self.u.grad.row_mut(0).scaled_add(dsum, &step.f1);
        self.b.grad[(0, 0)] += dsum;
        let df1_pre = &df1 * &step.f1_pre.mapv(elu_grad);
        self.mlp_dec.backward(&step.dec_in, &df1_pre)
    }

    /// Routes accumulated candidate gradients back through the candidate
    /// projection; returns one gradient per raw candidate vector.
    pub fn backward_candidates(
        &mut self,
        cands: &CandidateCache,
        dcand_act: &[Array1<f64>],
    ) -> Vec<Array1<f64>> {
        dcand_act
            .iter()
            .enumerate()
            .map(|(k, dact)| {
                let dpre = dact * &cands.pre[k].mapv(elu_grad);
                self.mlp_enc.backward(&cands.inputs[k], &dpre)
            })
            .collect()
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut ps = self.mlp_dec.params();
        ps.extend(self.mlp_enc.params());
        ps.extend([&self.w, &self.u, &self.v, &self.b]);
        ps
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut ps = self.mlp_dec.params_mut();
        ps.extend(self.mlp_enc.params_mut());
        ps.extend([&mut self.w, &mut self.u, &mut self.v, &mut self.b]);
        ps
    }
}

/// One biaffine form per label, stacked: w rows [l*d, (l+1)*d) hold W_l.
#[derive(Debug, Clone)]
pub struct BiaffineLabeler {
    pub mlp_dec: Linear,
    pub mlp_enc: Linear,
    pub w: Param,
    pub u: Param,
    pub v: Param,
    pub b: Param,
    labels: usize,
    dim: usize,
}

pub struct LabelerCache {
    dec_in: Array1<f64>,
    head_in: Array1<f64>,
    f1_pre: Array1<f64>,
    f1: Array1<f64>,
    f2_pre: Array1<f64>,
    f2: Array1<f64>,
}

impl BiaffineLabeler {
    pub fn new(
        name: &str,
        dec_dim: usize,
        enc_dim: usize,
        label_dim: usize,
        labels: usize,
        rng: &mut ChaCha8Rng,
    ) -> BiaffineLabeler {
        BiaffineLabeler {
            mlp_dec: Linear::new(&format!("{name}.mlp_dec"), label_dim, dec_dim, rng),
            mlp_enc: Linear::new(&format!("{name}.mlp_enc"), label_dim, enc_dim, rng),
            w: glorot(&format!("{name}.w"), labels * label_dim, label_dim, rng),
            u: zeros(&format!("{name}.u"), labels, label_dim),
            v: zeros(&format!("{name}.v"), labels, label_dim),
            b: zeros(&format!("{name}.b"), 1, labels),
            labels,
            dim: label_dim,
        }
    }

    pub fn label_count(&self) -> usize {
        self.labels
    }

    /// One score per label for attaching to the head behind `head_vec`.
    pub fn scores(
        &self,
        dec_state: &Array1<f64>,
        head_vec: &Array1<f64>,
    ) -> (Array1<f64>, LabelerCache) {
        let f1_pre = self.mlp_dec.forward(dec_state);
        let f1 = f1_pre.mapv(elu);
        let f2_pre = self.mlp_enc.forward(head_vec);
        let f2 = f2_pre.mapv(elu);
        let wf2 = self.w.value.dot(&f2);
        let scores = Array1::from_shape_fn(self.labels, |l| {
            let block = wf2.slice(s![l * self.dim..(l + 1) * self.dim]);
            block.dot(&f1)
                + self.u.value.row(l).dot(&f1)
                + self.v.value.row(l).dot(&f2)
                + self.b.value[(0, l)]
        });
        (
            scores,
            LabelerCache {
                dec_in: dec_state.clone(),
                head_in: head_vec.clone(),
                f1_pre,
                f1,
                f2_pre,
                f2,
            },
        )
    }

    /// Returns (d dec_state, d head_vec).
    pub fn backward(
        &mut self,
        cache: &LabelerCache,
        dscores: &Array1<f64>,
    ) -> (Array1<f64>, Array1<f64>) {
        let mut df1 = Array1::zeros(self.dim);
        let mut df2 = Array1::zeros(self.dim);
        for (l, &ds) in dscores.iter().enumerate() {
            if ds == 0.0 {
                continue;
            }
            let w_l = self.w.value.slice(s![l * self.dim..(l + 1) * self.dim, ..]);
            df1.scaled_add(ds, &w_l.dot(&cache.f2));
            df2.scaled_add(ds, &w_l.t().dot(&cache.f1));
            df1.scaled_add(ds, &self.u.value.row(l).to_owned());
            df2.scaled_add(ds, &self.v.value.row(l).to_owned());
            self.w
                .grad
                .slice_mut(s![l * self.dim..(l + 1) * self.dim, ..])
                .scaled_add(ds, &outer(&cache.f1, &cache.f2));
            self.u.grad.row_mut(l).scaled_add(ds, &cache.f1);
            self.v.grad.row_mut(l).scaled_add(ds, &cache.f2);
            self.b.grad[(0, l)] += ds;
        }
        let df1_pre = &df1 * &cache.f1_pre.mapv(elu_grad);
        let df2_pre = &df2 * &cache.f2_pre.mapv(elu_grad);
        let ddec = self.mlp_dec.backward(&cache.dec_in, &df1_pre);
        let dhead = self.mlp_enc.backward(&cache.head_in, &df2_pre);
        (ddec, dhead)
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut ps = self.mlp_dec.params();
        ps.extend(self.mlp_enc.params());
        ps.extend([&self.w, &self.u, &self.v, &self.b]);
        ps
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut ps = self.mlp_dec.params_mut();
        ps.extend(self.mlp_enc.params_mut());
        ps.extend([&mut self.w, &mut self.u, &mut self.v, &mut self.b]);
        ps
    }
}
