use alloc::string::String;
use rand::Rng;

use crate::Tensor;

/// A trainable tensor with its gradient and Adam moment buffers.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
    pub adam_m: Tensor,
    pub adam_v: Tensor,
    pub step: u64,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let shape = value.shape().to_vec();
        Self {
            name: name.into(),
            value,
            grad: Tensor::zeros(&shape),
            adam_m: Tensor::zeros(&shape),
            adam_v: Tensor::zeros(&shape),
            step: 0,
        }
    }

    pub fn zeros(name: impl Into<String>, shape: &[usize]) -> Self {
        Self::new(name, Tensor::zeros(shape))
    }

    pub fn filled(name: impl Into<String>, shape: &[usize], v: f32) -> Self {
        let mut t = Tensor::zeros(shape);
        t.fill(v);
        Self::new(name, t)
    }

    /// Glorot uniform in `±√(6/(fan_in+fan_out))`.
    pub fn xavier<R: Rng + ?Sized>(
        name: impl Into<String>,
        fan_in: usize,
        fan_out: usize,
        rng: &mut R,
    ) -> Self {
        let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64) as f32;
        let mut t = Tensor::zeros(&[fan_in, fan_out]);
        for v in t.data_mut() {
            *v = rng.gen_range(-limit..=limit);
        }
        Self::new(name, t)
    }

    pub fn shape(&self) -> &[usize] {
        self.value.shape()
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}
