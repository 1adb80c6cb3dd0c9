use serde::{Deserialize, Serialize};

use super::Parameter;

/// Adam with bias correction and decoupled weight decay.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Adam {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
        }
    }

    /// One update from the accumulated gradient, which is cleared afterwards.
    /// Decay is applied as `value -= lr·wd·value` before the moment update.
    pub fn step(&self, p: &mut Parameter) {
        p.step += 1;
        let t = p.step as i32;
        let bc1 = 1.0 - libm::pow(self.beta1, f64::from(t));
        let bc2 = 1.0 - libm::pow(self.beta2, f64::from(t));
        let decay = self.lr * self.weight_decay;
        let values = p.value.data_mut();
        let grads = p.grad.data_mut();
        let (m, v) = (p.adam_m.data_mut(), p.adam_v.data_mut());
        for i in 0..values.len() {
            let g = f64::from(grads[i]);
            let mut w = f64::from(values[i]);
            w -= decay * w;
            let mi = self.beta1 * f64::from(m[i]) + (1.0 - self.beta1) * g;
            let vi = self.beta2 * f64::from(v[i]) + (1.0 - self.beta2) * g * g;
            m[i] = mi as f32;
            v[i] = vi as f32;
            let m_hat = mi / bc1;
            let v_hat = vi / bc2;
            w -= self.lr * m_hat / (libm::sqrt(v_hat) + self.eps);
            values[i] = w as f32;
            grads[i] = 0.0;
        }
    }
}

/// Scales all gradients jointly so their global L2 norm is at most
/// `max_norm`. Returns the norm measured before clipping.
pub fn clip_grad_norm(params: &mut [&mut Parameter], max_norm: f64) -> f64 {
    let norm = libm::sqrt(params.iter().map(|p| p.grad.sum_sq()).sum::<f64>());
    if norm > max_norm {
        let s = max_norm / norm;
        for p in params.iter_mut() {
            p.grad
                .data_mut()
                .iter_mut()
                .for_each(|g| *g = (f64::from(*g) * s) as f32);
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Tensor;
    use alloc::vec;

    fn scalar(v: f32) -> Parameter {
        Parameter::new("s", Tensor::from_vec(&[1], vec![v]).unwrap())
    }

    #[test]
    fn zero_grad_without_decay_is_a_no_op() {
        let mut p = scalar(0.7);
        Adam::new(0.1, 0.0).step(&mut p);
        assert_eq!(p.value.data(), &[0.7]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = scalar(1.0);
        p.grad.data_mut()[0] = 1.0;
        Adam::new(0.1, 0.0).step(&mut p);
        // m̂ = 1, v̂ = 1 at t = 1
        assert!((p.value.data()[0] - 0.9).abs() < 1e-6);
        assert_eq!(p.grad.data(), &[0.0]);
        assert_eq!(p.step, 1);
    }

    #[test]
    fn identical_parameters_stay_identical() {
        let (mut a, mut b) = (scalar(0.3), scalar(0.3));
        let opt = Adam::new(0.01, 1e-5);
        for g in [0.5f32, -0.2, 1.3] {
            a.grad.data_mut()[0] = g;
            b.grad.data_mut()[0] = g;
            opt.step(&mut a);
            opt.step(&mut b);
        }
        assert_eq!(a, b);
    }

    #[test]
    fn one_step_reduces_a_quadratic() {
        // L(w) = (w - 2)^2
        let mut p = scalar(-1.0);
        let loss = |w: f32| (f64::from(w) - 2.0).powi(2);
        let before = loss(p.value.data()[0]);
        p.grad.data_mut()[0] = (2.0 * (f64::from(p.value.data()[0]) - 2.0)) as f32;
        Adam::new(0.05, 1e-5).step(&mut p);
        assert!(loss(p.value.data()[0]) < before);
    }

    #[test]
    fn clipping_scales_to_max_norm() {
        let mut p = Parameter::new("g", Tensor::zeros(&[2]));
        p.grad = Tensor::from_vec(&[2], vec![3.0, 4.0]).unwrap();
        let norm = clip_grad_norm(&mut [&mut p], 3.0);
        assert_eq!(norm, 5.0);
        assert!((libm::sqrt(p.grad.sum_sq()) - 3.0).abs() < 1e-6);
        assert!((p.grad.data()[0] - 1.8).abs() < 1e-6);
    }

    #[test]
    fn clipping_leaves_small_and_zero_grads() {
        let mut p = Parameter::new("g", Tensor::zeros(&[2]));
        p.grad = Tensor::from_vec(&[2], vec![0.6, 0.8]).unwrap();
        let norm = clip_grad_norm(&mut [&mut p], 3.0);
        assert!((norm - 1.0).abs() < 1e-7);
        assert_eq!(p.grad.data(), &[0.6, 0.8]);
        let mut z = Parameter::new("z", Tensor::zeros(&[3]));
        assert_eq!(clip_grad_norm(&mut [&mut z], 3.0), 0.0);
        assert_eq!(z.grad.data(), &[0.0; 3]);
    }
}
