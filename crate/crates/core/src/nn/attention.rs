use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use super::Parameter;
use crate::tensor::{matmul, matmul_at, matmul_bt};
use crate::{Error, Result, Tensor};

/// Unmasked multi-head scaled dot-product self-attention.
///
/// Per head `h`: `A_h = softmax(Q_h K_hᵀ / √(d_attn/heads))` row-wise and the
/// head output is `A_h V_h`. Head outputs are concatenated and projected back
/// to the input width with `W_o`. No biases.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiHeadAttention {
    pub wq: Parameter,
    pub wk: Parameter,
    pub wv: Parameter,
    pub wo: Parameter,
    pub heads: usize,
}

#[derive(Clone, Debug)]
pub struct AttentionCache {
    x: Tensor,
    q: Tensor,
    k: Tensor,
    v: Tensor,
    concat: Tensor,
    /// Row-stochastic attention matrix of each head.
    pub weights: Vec<Tensor>,
}

impl MultiHeadAttention {
    pub fn new<R: Rng + ?Sized>(
        name: &str,
        input_dim: usize,
        attention_dim: usize,
        heads: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if heads == 0 || !attention_dim.is_multiple_of(heads) {
            return Err(Error::InvalidConfig(format!(
                "attention dimension {attention_dim} is not divisible by {heads} heads"
            )));
        }
        Ok(Self {
            wq: Parameter::xavier(format!("{name}.wq"), input_dim, attention_dim, rng),
            wk: Parameter::xavier(format!("{name}.wk"), input_dim, attention_dim, rng),
            wv: Parameter::xavier(format!("{name}.wv"), input_dim, attention_dim, rng),
            wo: Parameter::xavier(format!("{name}.wo"), attention_dim, input_dim, rng),
            heads,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.wq.shape()[0]
    }

    pub fn attention_dim(&self) -> usize {
        self.wq.shape()[1]
    }

    fn head_dim(&self) -> usize {
        self.attention_dim() / self.heads
    }

    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, AttentionCache)> {
        if x.shape().len() != 2 || x.cols() != self.input_dim() {
            return Err(Error::ShapeMismatch {
                op: "self_attention",
                expected: vec![x.rows(), self.input_dim()],
                got: x.shape().to_vec(),
            });
        }
        let n = x.rows();
        let dh = self.head_dim();
        let scale = 1.0 / libm::sqrt(dh as f64);
        let q = matmul(x, &self.wq.value);
        let k = matmul(x, &self.wk.value);
        let v = matmul(x, &self.wv.value);
        let mut concat = Tensor::zeros(&[n, self.attention_dim()]);
        let mut weights = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let (qh, kh, vh) = (
                q.cols_range(h * dh, dh),
                k.cols_range(h * dh, dh),
                v.cols_range(h * dh, dh),
            );
            let mut a = matmul_bt(&qh, &kh);
            softmax_rows(&mut a, scale);
            concat.set_cols(h * dh, &matmul(&a, &vh));
            weights.push(a);
        }
        let out = matmul(&concat, &self.wo.value);
        Ok((
            out,
            AttentionCache {
                x: x.clone(),
                q,
                k,
                v,
                concat,
                weights,
            },
        ))
    }

    pub fn backward(&mut self, cache: &AttentionCache, dout: &Tensor) -> Tensor {
        let dh = self.head_dim();
        let scale = (1.0 / libm::sqrt(dh as f64)) as f32;
        self.wo.grad.add_assign(&matmul_at(&cache.concat, dout));
        let dconcat = matmul_bt(dout, &self.wo.value);
        let shape = cache.q.shape().to_vec();
        let (mut dq, mut dk, mut dv) = (
            Tensor::zeros(&shape),
            Tensor::zeros(&shape),
            Tensor::zeros(&shape),
        );
        for (h, a) in cache.weights.iter().enumerate() {
            let (qh, kh, vh) = (
                cache.q.cols_range(h * dh, dh),
                cache.k.cols_range(h * dh, dh),
                cache.v.cols_range(h * dh, dh),
            );
            let dout_h = dconcat.cols_range(h * dh, dh);
            let da = matmul_bt(&dout_h, &vh);
            dv.set_cols(h * dh, &matmul_at(a, &dout_h));
            let mut ds = softmax_rows_backward(a, &da);
            ds.scale(scale);
            dq.set_cols(h * dh, &matmul(&ds, &kh));
            dk.set_cols(h * dh, &matmul_at(&ds, &qh));
        }
        self.wq.grad.add_assign(&matmul_at(&cache.x, &dq));
        self.wk.grad.add_assign(&matmul_at(&cache.x, &dk));
        self.wv.grad.add_assign(&matmul_at(&cache.x, &dv));
        let mut dx = matmul_bt(&dq, &self.wq.value);
        dx.add_assign(&matmul_bt(&dk, &self.wk.value));
        dx.add_assign(&matmul_bt(&dv, &self.wv.value));
        dx
    }

    pub fn params(&self) -> [&Parameter; 4] {
        [&self.wq, &self.wk, &self.wv, &self.wo]
    }

    pub fn params_mut(&mut self) -> [&mut Parameter; 4] {
        [&mut self.wq, &mut self.wk, &mut self.wv, &mut self.wo]
    }
}

/// In-place `softmax(scale · row)` with row-max subtraction.
fn softmax_rows(s: &mut Tensor, scale: f64) {
    for i in 0..s.rows() {
        let row = s.row_mut(i);
        let max = row
            .iter()
            .map(|&v| f64::from(v) * scale)
            .fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row
            .iter()
            .map(|&v| libm::exp(f64::from(v) * scale - max))
            .collect();
        let z: f64 = exps.iter().sum();
        row.iter_mut()
            .zip(&exps)
            .for_each(|(v, e)| *v = (e / z) as f32);
    }
}

/// Gradient through a row softmax: `dS = A ⊙ (dA − rowsum(dA ⊙ A))`.
fn softmax_rows_backward(a: &Tensor, da: &Tensor) -> Tensor {
    let mut ds = Tensor::zeros(a.shape());
    for i in 0..a.rows() {
        let (ar, dar) = (a.row(i), da.row(i));
        let inner: f64 = ar
            .iter()
            .zip(dar)
            .map(|(&p, &g)| f64::from(p) * f64::from(g))
            .sum();
        ds.row_mut(i)
            .iter_mut()
            .zip(ar.iter().zip(dar))
            .for_each(|(o, (&p, &g))| *o = (f64::from(p) * (f64::from(g) - inner)) as f32);
    }
    ds
}
