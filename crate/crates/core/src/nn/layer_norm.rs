use alloc::format;
use alloc::vec::Vec;

use super::Parameter;
use crate::Tensor;

const EPS: f64 = 1e-5;

/// Per-row normalisation with learned gain and offset.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerNorm {
    pub gamma: Parameter,
    pub beta: Parameter,
}

#[derive(Clone, Debug)]
pub struct LayerNormCache {
    xhat: Tensor,
    inv_std: Vec<f64>,
}

impl LayerNorm {
    pub fn new(name: &str, dim: usize) -> Self {
        Self {
            gamma: Parameter::filled(format!("{name}.gamma"), &[dim], 1.0),
            beta: Parameter::zeros(format!("{name}.beta"), &[dim]),
        }
    }

    pub fn forward(&self, x: &Tensor) -> (Tensor, LayerNormCache) {
        let (n, d) = (x.rows(), x.cols());
        let mut xhat = x.clone();
        let mut y = x.clone();
        let mut inv_std = Vec::with_capacity(n);
        let (g, b) = (self.gamma.value.data(), self.beta.value.data());
        for i in 0..n {
            let row = x.row(i);
            let mean = row.iter().map(|&v| f64::from(v)).sum::<f64>() / d as f64;
            let var = row
                .iter()
                .map(|&v| (f64::from(v) - mean) * (f64::from(v) - mean))
                .sum::<f64>()
                / d as f64;
            let is = 1.0 / libm::sqrt(var + EPS);
            inv_std.push(is);
            let (hrow, yrow) = (xhat.row_mut(i), y.row_mut(i));
            for j in 0..d {
                let h = (f64::from(row[j]) - mean) * is;
                hrow[j] = h as f32;
            }
            for j in 0..d {
                yrow[j] = (f64::from(hrow[j]) * f64::from(g[j]) + f64::from(b[j])) as f32;
            }
        }
        (y, LayerNormCache { xhat, inv_std })
    }

    pub fn backward(&mut self, cache: &LayerNormCache, dy: &Tensor) -> Tensor {
        let (n, d) = (dy.rows(), dy.cols());
        let mut dx = Tensor::zeros(dy.shape());
        let g: Vec<f64> = self
            .gamma
            .value
            .data()
            .iter()
            .map(|&v| f64::from(v))
            .collect();
        let mut dgamma = alloc::vec![0.0f64; d];
        let mut dbeta = alloc::vec![0.0f64; d];
        for i in 0..n {
            let (dyr, hr) = (dy.row(i), cache.xhat.row(i));
            let mut sum_dh = 0.0;
            let mut sum_dh_h = 0.0;
            for j in 0..d {
                let dyj = f64::from(dyr[j]);
                let h = f64::from(hr[j]);
                dgamma[j] += dyj * h;
                dbeta[j] += dyj;
                let dh = dyj * g[j];
                sum_dh += dh;
                sum_dh_h += dh * h;
            }
            let scale = cache.inv_std[i] / d as f64;
            let dxr = dx.row_mut(i);
            for j in 0..d {
                let dh = f64::from(dyr[j]) * g[j];
                let h = f64::from(hr[j]);
                dxr[j] = (scale * (d as f64 * dh - sum_dh - h * sum_dh_h)) as f32;
            }
        }
        for (acc, v) in self.gamma.grad.data_mut().iter_mut().zip(&dgamma) {
            *acc += *v as f32;
        }
        for (acc, v) in self.beta.grad.data_mut().iter_mut().zip(&dbeta) {
            *acc += *v as f32;
        }
        dx
    }

    pub fn params(&self) -> [&Parameter; 2] {
        [&self.gamma, &self.beta]
    }

    pub fn params_mut(&mut self) -> [&mut Parameter; 2] {
        [&mut self.gamma, &mut self.beta]
    }
}
