use alloc::vec::Vec;
use rand::Rng;

use crate::rng::SeededRng;
use crate::Tensor;

pub fn relu(x: &Tensor) -> Tensor {
    let mut y = x.clone();
    y.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    y
}

/// `x` is the pre-activation input.
pub fn relu_backward(x: &Tensor, dy: &Tensor) -> Tensor {
    let mut dx = dy.clone();
    dx.data_mut().iter_mut().zip(x.data()).for_each(|(g, &xi)| {
        if xi <= 0.0 {
            *g = 0.0
        }
    });
    dx
}

/// Largest `f32` below one.
const SIGMOID_HI: f32 = 1.0 - f32::EPSILON / 2.0;

/// Logistic function evaluated in `f64`. Saturated outputs are pinned to the
/// nearest representable values inside the open unit interval.
pub fn sigmoid(x: &Tensor) -> Tensor {
    let mut y = x.clone();
    y.data_mut().iter_mut().for_each(|v| {
        let s = 1.0 / (1.0 + libm::exp(-f64::from(*v)));
        *v = (s as f32).clamp(f32::MIN_POSITIVE, SIGMOID_HI);
    });
    y
}

/// `y` is the sigmoid output.
pub fn sigmoid_backward(y: &Tensor, dy: &Tensor) -> Tensor {
    let mut dx = dy.clone();
    dx.data_mut()
        .iter_mut()
        .zip(y.data())
        .for_each(|(g, &yi)| *g = (f64::from(*g) * f64::from(yi) * (1.0 - f64::from(yi))) as f32);
    dx
}

/// Inverted dropout: kept activations are scaled by `1/(1-rate)` during
/// training so evaluation is the identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dropout {
    pub rate: f32,
}

/// Per-element multipliers (zero or `1/(1-rate)`) drawn for one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutMask(pub Vec<f32>);

impl Dropout {
    pub fn new(rate: f32) -> Self {
        Self { rate }
    }

    /// With `rng = None` (evaluation) the input is returned unchanged.
    pub fn forward(
        &self,
        x: &Tensor,
        rng: Option<&mut SeededRng>,
    ) -> (Tensor, Option<DropoutMask>) {
        match rng {
            Some(rng) if self.rate > 0.0 => {
                let keep = 1.0 / (1.0 - self.rate);
                let mask: Vec<f32> = (0..x.len())
                    .map(|_| {
                        if rng.gen::<f32>() < self.rate {
                            0.0
                        } else {
                            keep
                        }
                    })
                    .collect();
                let mut y = x.clone();
                y.data_mut()
                    .iter_mut()
                    .zip(&mask)
                    .for_each(|(v, m)| *v *= m);
                (y, Some(DropoutMask(mask)))
            }
            _ => (x.clone(), None),
        }
    }

    pub fn backward(&self, mask: Option<&DropoutMask>, dy: &Tensor) -> Tensor {
        let mut dx = dy.clone();
        if let Some(DropoutMask(m)) = mask {
            dx.data_mut().iter_mut().zip(m).for_each(|(g, mi)| *g *= mi);
        }
        dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use alloc::vec;

    #[test]
    fn dropout_eval_is_identity() {
        let x = Tensor::matrix(2, 2, vec![1., 2., 3., 4.]).unwrap();
        let (y, mask) = Dropout::new(0.5).forward(&x, None);
        assert_eq!(y, x);
        assert!(mask.is_none());
    }

    #[test]
    fn dropout_drop_rate_matches_over_many_samples() {
        for rate in [0.1f32, 0.5, 0.8] {
            let x = Tensor::from_vec(&[100_000], vec![1.0; 100_000]).unwrap();
            let mut rng = seeded(42);
            let (y, _) = Dropout::new(rate).forward(&x, Some(&mut rng));
            let dropped = y.data().iter().filter(|&&v| v == 0.0).count() as f32 / 1e5;
            assert!(
                (dropped - rate).abs() < 0.02,
                "rate {rate}: dropped {dropped}"
            );
            // inverted scaling keeps the expectation
            let mean: f64 = y.data().iter().map(|&v| f64::from(v)).sum::<f64>() / 1e5;
            assert!((mean - 1.0).abs() < 0.03);
        }
    }

    #[test]
    fn sigmoid_stays_inside_open_interval() {
        let x = Tensor::from_vec(&[4], vec![-1e4, -50.0, 50.0, 1e4]).unwrap();
        for &v in sigmoid(&x).data() {
            assert!(v > 0.0 && v < 1.0);
        }
    }
}
