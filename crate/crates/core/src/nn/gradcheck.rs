//! Central-difference verification of analytic gradients.

use alloc::string::String;
use alloc::vec::Vec;
use rand::seq::index;

use super::Parameter;
use crate::rng::seeded;

pub const STEP: f32 = 1e-3;
pub const MIN_SAMPLES: usize = 32;

/// A deterministic scalar loss over a set of parameter blocks.
pub trait Objective {
    fn block_count(&self) -> usize;
    fn block(&mut self, i: usize) -> &mut Parameter;
    fn loss(&mut self) -> f64;
    /// Loss, with gradients accumulated into each block's `grad`.
    fn loss_and_grad(&mut self) -> f64;
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockError {
    pub name: String,
    pub coords_checked: usize,
    /// Coordinates left out because the loss is not smooth within two steps
    /// of the current value (a ReLU kink).
    pub coords_skipped: usize,
    pub max_rel_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub blocks: Vec<BlockError>,
}

impl GradCheckReport {
    pub fn max_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.max_rel_error)
            .fold(0.0, f64::max)
    }

    /// Every block compared at least one coordinate and stayed within the
    /// tolerance.
    pub fn passed(&self) -> bool {
        self.blocks
            .iter()
            .all(|b| b.max_rel_error < self.tolerance && b.coords_checked > b.coords_skipped)
    }
}

fn rel_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// Central difference with step `h`, divided by the step actually
/// representable in f32.
fn central<O: Objective>(obj: &mut O, b: usize, c: usize, h: f32) -> f64 {
    let orig = obj.block(b).value.data()[c];
    let (plus, minus) = (orig + h, orig - h);
    obj.block(b).value.data_mut()[c] = plus;
    let lp = obj.loss();
    obj.block(b).value.data_mut()[c] = minus;
    let lm = obj.loss();
    obj.block(b).value.data_mut()[c] = orig;
    (lp - lm) / (f64::from(plus) - f64::from(minus))
}

/// Compares analytic gradients with central differences (step [`STEP`]) on
/// up to `samples.max(32)` random coordinates per block. Error is
/// `|a − n| / max(1, |a|, |n|)`.
///
/// Each coordinate is also differenced with twice the step. When the two
/// estimates disagree by more than `tolerance` the loss has a kink nearby,
/// the finite difference is meaningless there and the coordinate is
/// skipped. A wrong analytic gradient cannot hide this way: it leaves the
/// two numeric estimates in agreement.
pub fn finite_diff_check<O: Objective>(
    obj: &mut O,
    tolerance: f64,
    samples: usize,
    seed: u64,
) -> GradCheckReport {
    let samples = samples.max(MIN_SAMPLES);
    for i in 0..obj.block_count() {
        obj.block(i).zero_grad();
    }
    obj.loss_and_grad();
    let analytic: Vec<Vec<f32>> = (0..obj.block_count())
        .map(|i| obj.block(i).grad.data().to_vec())
        .collect();
    let mut rng = seeded(seed);
    let mut blocks = Vec::with_capacity(analytic.len());
    for (b, grads) in analytic.iter().enumerate() {
        let len = grads.len();
        let coords: Vec<usize> = if len <= samples {
            (0..len).collect()
        } else {
            index::sample(&mut rng, len, samples).into_vec()
        };
        let mut worst = 0.0f64;
        let mut skipped = 0;
        for &c in &coords {
            let numeric = central(obj, b, c, STEP);
            let wide = central(obj, b, c, 2.0 * STEP);
            if rel_error(numeric, wide) > tolerance {
                skipped += 1;
                continue;
            }
            worst = worst.max(rel_error(f64::from(grads[c]), numeric));
        }
        blocks.push(BlockError {
            name: obj.block(b).name.clone(),
            coords_checked: coords.len(),
            coords_skipped: skipped,
            max_rel_error: worst,
        });
    }
    for i in 0..obj.block_count() {
        obj.block(i).zero_grad();
    }
    GradCheckReport { tolerance, blocks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Tensor;
    use alloc::vec;

    /// `loss = Σ k·|w|` style objectives with an optional gradient bug.
    struct Toy {
        w: Parameter,
        grad_factor: f32,
        abs: bool,
    }

    impl Objective for Toy {
        fn block_count(&self) -> usize {
            1
        }
        fn block(&mut self, _: usize) -> &mut Parameter {
            &mut self.w
        }
        fn loss(&mut self) -> f64 {
            self.w
                .value
                .data()
                .iter()
                .map(|&v| {
                    let v = f64::from(v);
                    if self.abs {
                        3.0 * v.abs()
                    } else {
                        v * v * v
                    }
                })
                .sum()
        }
        fn loss_and_grad(&mut self) -> f64 {
            let abs = self.abs;
            let k = self.grad_factor;
            for (g, &v) in self.w.grad.data_mut().iter_mut().zip(self.w.value.data()) {
                *g += k * if abs { 3.0 * v.signum() } else { 3.0 * v * v };
            }
            self.loss()
        }
    }

    fn toy(values: Vec<f32>, grad_factor: f32, abs: bool) -> Toy {
        let n = values.len();
        Toy {
            w: Parameter::new("w", Tensor::from_vec(&[n], values).unwrap()),
            grad_factor,
            abs,
        }
    }

    #[test]
    fn smooth_correct_gradient_passes() {
        let r = finite_diff_check(&mut toy(vec![0.5, -1.2, 2.0], 1.0, false), 1e-4, 8, 0);
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.blocks[0].coords_skipped, 0);
    }

    #[test]
    fn doubled_gradient_fails() {
        let r = finite_diff_check(&mut toy(vec![0.5, -1.2, 2.0], 2.0, false), 1e-4, 8, 0);
        assert!(!r.passed());
        assert!(r.max_error() > 0.3);
    }

    #[test]
    fn kinks_are_skipped_not_hidden() {
        // 0.0005 sits within one step of the |w| kink; 1.0 does not
        let r = finite_diff_check(&mut toy(vec![0.0005, 1.0], 1.0, true), 1e-4, 8, 0);
        assert_eq!(r.blocks[0].coords_skipped, 1);
        assert!(r.passed(), "{r:?}");
        let r = finite_diff_check(&mut toy(vec![0.0005, 1.0], 2.0, true), 1e-4, 8, 0);
        assert!(!r.passed());
    }

    #[test]
    fn gradients_are_cleared_afterwards() {
        let mut t = toy(vec![1.0, 2.0], 1.0, false);
        finite_diff_check(&mut t, 1e-4, 8, 0);
        assert!(t.w.grad.data().iter().all(|&g| g == 0.0));
    }
}
