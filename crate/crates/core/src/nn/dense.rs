use alloc::format;
use alloc::vec;
use rand::Rng;

use super::Parameter;
use crate::tensor::{matmul, matmul_at, matmul_bt};
use crate::{Error, Result, Tensor};

/// Affine map `y = xW + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weight: Parameter,
    pub bias: Parameter,
}

impl Dense {
    pub fn new<R: Rng + ?Sized>(name: &str, din: usize, dout: usize, rng: &mut R) -> Self {
        Self {
            weight: Parameter::xavier(format!("{name}.weight"), din, dout, rng),
            bias: Parameter::zeros(format!("{name}.bias"), &[dout]),
        }
    }

    pub fn from_parts(weight: Parameter, bias: Parameter) -> Result<Self> {
        if weight.shape().len() != 2 || bias.shape() != [weight.shape()[1]] {
            return Err(Error::ShapeMismatch {
                op: "dense",
                expected: vec![weight.shape().get(1).copied().unwrap_or(0)],
                got: bias.shape().to_vec(),
            });
        }
        Ok(Self { weight, bias })
    }

    pub fn input_dim(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn output_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        if x.shape().len() != 2 || x.cols() != self.input_dim() {
            return Err(Error::ShapeMismatch {
                op: "dense",
                expected: vec![x.rows(), self.input_dim()],
                got: x.shape().to_vec(),
            });
        }
        let mut y = matmul(x, &self.weight.value);
        let b = self.bias.value.data();
        for i in 0..y.rows() {
            y.row_mut(i).iter_mut().zip(b).for_each(|(v, bj)| *v += bj);
        }
        Ok(y)
    }

    /// Accumulates `dW += xᵀ·dy`, `db += Σ_rows dy` and returns `dx = dy·Wᵀ`.
    pub fn backward(&mut self, x: &Tensor, dy: &Tensor) -> Tensor {
        self.weight.grad.add_assign(&matmul_at(x, dy));
        let db = self.bias.grad.data_mut();
        for (j, b) in db.iter_mut().enumerate() {
            let s: f64 = (0..dy.rows()).map(|i| f64::from(dy.at(i, j))).sum();
            *b += s as f32;
        }
        matmul_bt(dy, &self.weight.value)
    }

    pub fn params(&self) -> [&Parameter; 2] {
        [&self.weight, &self.bias]
    }

    pub fn params_mut(&mut self) -> [&mut Parameter; 2] {
        [&mut self.weight, &mut self.bias]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn identity_weight_passes_input_through() {
        let mut rng = seeded(1);
        let mut d = Dense::new("d", 3, 3, &mut rng);
        d.weight.value = Tensor::matrix(3, 3, vec![1., 0., 0., 0., 1., 0., 0., 0., 1.]).unwrap();
        let x = Tensor::matrix(2, 3, vec![1., -2., 3., 0.5, 0., 7.]).unwrap();
        assert_eq!(d.forward(&x).unwrap(), x);
    }

    #[test]
    fn zero_input_broadcasts_bias() {
        let mut rng = seeded(2);
        let mut d = Dense::new("d", 4, 2, &mut rng);
        d.bias.value = Tensor::from_vec(&[2], vec![0.25, -1.5]).unwrap();
        let y = d.forward(&Tensor::zeros(&[3, 4])).unwrap();
        for i in 0..3 {
            assert_eq!(y.row(i), &[0.25, -1.5]);
        }
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let mut rng = seeded(3);
        let d = Dense::new("d", 4, 2, &mut rng);
        assert!(matches!(
            d.forward(&Tensor::zeros(&[3, 5])),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
