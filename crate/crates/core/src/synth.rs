//! Planted-structure datasets with analytically known targets.
//!
//! * `content_only`: the target is a fixed logistic function of each frame's
//!   own features, independent of its position.
//! * `position_only`: features are i.i.d. noise and the target is a linear
//!   ramp over the frame index, so only order information can predict it.
//!
//! Both use the `summe_style` scale with a single annotator whose scores are
//! the target, and random shot boundaries at a sample rate of 15.

use alloc::format;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetStyle, VideoRecord};
use crate::rng::{derive_seed, seeded, SeededRng};
use crate::{Error, Result, Tensor};

pub const SAMPLE_RATE: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    ContentOnly,
    PositionOnly,
}

impl SynthKind {
    pub fn name(self) -> &'static str {
        match self {
            SynthKind::ContentOnly => "content_only",
            SynthKind::PositionOnly => "position_only",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub videos: usize,
    pub frames: usize,
    pub dim: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn generate(&self) -> Result<Dataset> {
        if self.videos == 0 || self.frames == 0 || self.dim == 0 {
            return Err(Error::InvalidConfig(format!(
                "synthetic dataset needs positive sizes, got {} videos × {} frames × {} dims",
                self.videos, self.frames, self.dim
            )));
        }
        let mut weight_rng = seeded(derive_seed(self.seed, &[0]));
        let weights: Vec<f64> = (0..self.dim)
            .map(|_| if weight_rng.gen_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        // x ~ U(-1, 1) has variance 1/3, so w·x has variance D/3
        let norm = libm::sqrt(self.dim as f64 / 3.0);
        let videos = (0..self.videos)
            .map(|v| {
                let mut rng = seeded(derive_seed(self.seed, &[1, v as u64]));
                let n = self.frames;
                let features: Vec<f32> = (0..n * self.dim)
                    .map(|_| rng.gen_range(-1.0f32..1.0))
                    .collect();
                let target: Vec<f32> = match self.kind {
                    SynthKind::ContentOnly => features
                        .chunks(self.dim)
                        .map(|row| {
                            let z: f64 = row
                                .iter()
                                .zip(&weights)
                                .map(|(&x, w)| f64::from(x) * w)
                                .sum();
                            (1.0 / (1.0 + libm::exp(-2.0 * z / norm))) as f32
                        })
                        .collect(),
                    SynthKind::PositionOnly => (0..n)
                        .map(|i| ((i as f64 + 0.5) / n as f64) as f32)
                        .collect(),
                };
                VideoRecord::new(
                    format!("video_{v:03}"),
                    Tensor::matrix(n, self.dim, features)?,
                    Tensor::matrix(1, n, target)?,
                    random_shots(n, &mut rng),
                    SAMPLE_RATE,
                    DatasetStyle::SummeStyle,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(
            format!("synthetic_{}", self.kind.name()),
            DatasetStyle::SummeStyle,
            self.dim,
            videos,
        )
    }
}

/// Contiguous original-rate shots of 2 to 6 subsampled frames each.
fn random_shots(n: usize, rng: &mut SeededRng) -> Vec<(usize, usize)> {
    let total = n * SAMPLE_RATE;
    let mut out = Vec::new();
    let mut start = 0;
    while start < total {
        let len = rng.gen_range(2..=6) * SAMPLE_RATE;
        let end = (start + len).min(total) - 1;
        out.push((start, end));
        start = end + 1;
    }
    out
}

pub fn content_only(videos: usize, frames: usize, dim: usize, seed: u64) -> Result<Dataset> {
    SynthSpec {
        kind: SynthKind::ContentOnly,
        videos,
        frames,
        dim,
        seed,
    }
    .generate()
}

pub fn position_only(videos: usize, frames: usize, dim: usize, seed: u64) -> Result<Dataset> {
    SynthSpec {
        kind: SynthKind::PositionOnly,
        videos,
        frames,
        dim,
        seed,
    }
    .generate()
}
