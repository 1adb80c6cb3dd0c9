use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::VideoRecord;
use crate::rng::seeded;
use crate::{Error, Result, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Reverse the whole sequence.
    Flip,
    /// Permute `M` equal consecutive blocks, keeping order inside each block.
    FixedSegment,
    /// Permute frames inside each shot, keeping the shot order.
    IntraShot,
    /// Permute shots inside consecutive windows of `w` shots.
    #[serde(alias = "neighbor_shot", alias = "neighbouring_shot")]
    NeighbourShot,
    /// Permute all shots.
    #[serde(alias = "whole_shot")]
    AnyShot,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Flip,
        Strategy::FixedSegment,
        Strategy::IntraShot,
        Strategy::NeighbourShot,
        Strategy::AnyShot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Flip => "flip",
            Strategy::FixedSegment => "fixed_segment",
            Strategy::IntraShot => "intra_shot",
            Strategy::NeighbourShot => "neighbour_shot",
            Strategy::AnyShot => "any_shot",
        }
    }

    /// Whether the strategy needs per-frame shot ids.
    pub fn is_shot_level(self) -> bool {
        matches!(
            self,
            Strategy::IntraShot | Strategy::NeighbourShot | Strategy::AnyShot
        )
    }

    /// Whether the outcome depends on the seed.
    pub fn is_stochastic(self) -> bool {
        self != Strategy::Flip
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn default_segments() -> usize {
    4
}
fn default_window() -> usize {
    3
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShuffleSpec {
    pub strategy: Strategy,
    /// Block count `M` for `fixed_segment`.
    #[serde(default = "default_segments", alias = "M")]
    pub segments: usize,
    /// Shots per window `w` for `neighbour_shot`.
    #[serde(default = "default_window", alias = "w")]
    pub window: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ShuffleSpec {
    pub fn new(strategy: Strategy, seed: u64) -> Self {
        Self {
            strategy,
            segments: default_segments(),
            window: default_window(),
            seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        match self.strategy {
            Strategy::FixedSegment if self.segments < 2 => Err(Error::InvalidConfig(format!(
                "fixed_segment needs at least 2 segments, got {}",
                self.segments
            ))),
            Strategy::NeighbourShot if self.window < 2 => Err(Error::InvalidConfig(format!(
                "neighbour_shot needs a window of at least 2 shots, got {}",
                self.window
            ))),
            _ => Ok(()),
        }
    }
}

/// Bijection on frame positions: output position `i` takes input frame
/// `mapping[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation {
    mapping: Vec<usize>,
    /// `None` for the identity produced when no perturbation is drawn.
    pub strategy: Option<Strategy>,
    pub spec: Option<ShuffleSpec>,
    pub seed: u64,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            mapping: (0..n).collect(),
            strategy: None,
            spec: None,
            seed: 0,
        }
    }

    pub fn from_mapping(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = alloc::vec![false; n];
        for &m in &mapping {
            if m >= n || core::mem::replace(&mut seen[m], true) {
                return Err(Error::NotABijection(n));
            }
        }
        Ok(Self {
            mapping,
            strategy: None,
            spec: None,
            seed: 0,
        })
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.mapping.iter().enumerate().all(|(i, &m)| i == m)
    }

    /// Applying `self` and then `next` is applying the result.
    pub fn then(&self, next: &Permutation) -> Result<Permutation> {
        if self.len() != next.len() {
            return Err(Error::LengthMismatch {
                op: "permutation compose",
                expected: self.len(),
                got: next.len(),
            });
        }
        Permutation::from_mapping(next.mapping.iter().map(|&i| self.mapping[i]).collect())
    }

    /// Reorders any per-frame sequence.
    pub fn apply_to<T: Clone>(&self, items: &[T]) -> Vec<T> {
        self.mapping.iter().map(|&i| items[i].clone()).collect()
    }
}

/// Maximal runs of equal consecutive shot ids as `(start, len)`.
pub fn shot_runs(shot_ids: &[usize]) -> Vec<(usize, usize)> {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for (i, &s) in shot_ids.iter().enumerate() {
        match runs.last_mut() {
            Some((_, len)) if shot_ids[i - 1] == s => *len += 1,
            _ => runs.push((i, 1)),
        }
    }
    runs
}

fn concat_runs(runs: &[(usize, usize)]) -> Vec<usize> {
    runs.iter().flat_map(|&(s, l)| s..s + l).collect()
}

/// Draws a permutation of `n` frames according to `spec`. Shot-level
/// strategies need `shot_ids` of length `n`.
pub fn generate_permutation(
    spec: &ShuffleSpec,
    n: usize,
    shot_ids: Option<&[usize]>,
) -> Result<Permutation> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Empty("generate_permutation"));
    }
    let mut rng = seeded(spec.seed);
    let shots = if spec.strategy.is_shot_level() {
        let ids = shot_ids.ok_or(Error::MissingShotIds(spec.strategy.name()))?;
        if ids.len() != n {
            return Err(Error::LengthMismatch {
                op: "generate_permutation shot ids",
                expected: n,
                got: ids.len(),
            });
        }
        shot_runs(ids)
    } else {
        Vec::new()
    };
    let mapping = match spec.strategy {
        Strategy::Flip => (0..n).rev().collect(),
        Strategy::FixedSegment => {
            if spec.segments > n {
                return Err(Error::TooManySegments {
                    segments: spec.segments,
                    frames: n,
                });
            }
            let len = n / spec.segments;
            let mut blocks: Vec<(usize, usize)> = (0..spec.segments)
                .map(|b| {
                    let l = if b + 1 == spec.segments {
                        n - b * len
                    } else {
                        len
                    };
                    (b * len, l)
                })
                .collect();
            blocks.shuffle(&mut rng);
            concat_runs(&blocks)
        }
        Strategy::IntraShot => {
            let mut out = Vec::with_capacity(n);
            for &(s, l) in &shots {
                let mut frames: Vec<usize> = (s..s + l).collect();
                frames.shuffle(&mut rng);
                out.extend(frames);
            }
            out
        }
        Strategy::NeighbourShot => {
            let mut runs = shots;
            for window in runs.chunks_mut(spec.window) {
                window.shuffle(&mut rng);
            }
            concat_runs(&runs)
        }
        Strategy::AnyShot => {
            let mut runs = shots;
            runs.shuffle(&mut rng);
            concat_runs(&runs)
        }
    };
    Ok(Permutation {
        mapping,
        strategy: Some(spec.strategy),
        spec: Some(*spec),
        seed: spec.seed,
    })
}

/// Reorders features, ground truth, annotator columns and shot ids with the
/// same mapping. The input is left untouched.
pub fn apply_permutation(record: &VideoRecord, perm: &Permutation) -> Result<VideoRecord> {
    let n = record.frames();
    if perm.len() != n {
        return Err(Error::LengthMismatch {
            op: "apply_permutation",
            expected: n,
            got: perm.len(),
        });
    }
    let m = perm.mapping();
    let a = record.annotator_scores.rows();
    let mut ann = Vec::with_capacity(a * n);
    for r in 0..a {
        let row = record.annotator_scores.row(r);
        ann.extend(m.iter().map(|&i| row[i]));
    }
    Ok(VideoRecord {
        id: record.id.clone(),
        features: record.features.select_rows(m),
        annotator_scores: Tensor::matrix(a, n, ann)?,
        ground_truth: perm.apply_to(&record.ground_truth),
        shot_boundaries_original: record.shot_boundaries_original.clone(),
        shot_ids: perm.apply_to(&record.shot_ids),
        sample_rate: record.sample_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn flip_reverses() {
        let p = generate_permutation(&ShuffleSpec::new(Strategy::Flip, 0), 3, None).unwrap();
        assert_eq!(p.mapping(), &[2, 1, 0]);
        assert!(p.then(&p).unwrap().is_identity());
    }

    #[test]
    fn fixed_segment_can_rotate_blocks() {
        // among seeded draws, the block order {F3F4 | F5F6 | F1F2} shows up
        let spec = ShuffleSpec {
            segments: 3,
            ..ShuffleSpec::new(Strategy::FixedSegment, 0)
        };
        let found = (0..200u64).any(|seed| {
            generate_permutation(&spec.with_seed(seed), 6, None)
                .unwrap()
                .mapping()
                == [2, 3, 4, 5, 0, 1]
        });
        assert!(found);
    }

    #[test]
    fn fixed_segment_remainder_goes_last() {
        let spec = ShuffleSpec {
            segments: 3,
            ..ShuffleSpec::new(Strategy::FixedSegment, 4)
        };
        for seed in 0..50 {
            let p = generate_permutation(&spec.with_seed(seed), 8, None).unwrap();
            // blocks are [0,1], [2,3], [4..8)
            let m = p.mapping();
            let pos = m.iter().position(|&x| x == 4).unwrap();
            assert_eq!(&m[pos..pos + 4], &[4, 5, 6, 7]);
        }
    }

    #[test]
    fn intra_shot_example_outcome_is_reachable() {
        // {F1F2 | F3F4F5F6 | F7F8F9 | F10F11} → {F2,F1 | F5,F4,F3,F6 | F9,F7,F8 | F10,F11}
        let shots = [0, 0, 1, 1, 1, 1, 2, 2, 2, 3, 3];
        let target = [1, 0, 4, 3, 2, 5, 8, 6, 7, 9, 10];
        let spec = ShuffleSpec::new(Strategy::IntraShot, 0);
        // probability (1/2)(1/24)(1/6)(1/2) = 1/576 per draw
        let found = (0..20_000u64).any(|seed| {
            generate_permutation(&spec.with_seed(seed), 11, Some(&shots))
                .unwrap()
                .mapping()
                == target
        });
        assert!(found);
    }

    #[test]
    fn any_shot_on_single_shot_is_identity() {
        let p = generate_permutation(&ShuffleSpec::new(Strategy::AnyShot, 3), 5, Some(&[0; 5]))
            .unwrap();
        assert!(p.is_identity());
    }

    #[test]
    fn error_paths() {
        let spec = ShuffleSpec::new(Strategy::IntraShot, 0);
        assert_eq!(
            generate_permutation(&spec, 4, None),
            Err(Error::MissingShotIds("intra_shot"))
        );
        let fs = ShuffleSpec {
            segments: 5,
            ..ShuffleSpec::new(Strategy::FixedSegment, 0)
        };
        assert!(matches!(
            generate_permutation(&fs, 4, None),
            Err(Error::TooManySegments { .. })
        ));
        let one = ShuffleSpec {
            segments: 1,
            ..ShuffleSpec::new(Strategy::FixedSegment, 0)
        };
        assert!(generate_permutation(&one, 4, None).is_err());
        let narrow = ShuffleSpec {
            window: 1,
            ..ShuffleSpec::new(Strategy::NeighbourShot, 0)
        };
        assert!(generate_permutation(&narrow, 4, Some(&[0, 1, 2, 3])).is_err());
        assert!(Permutation::from_mapping(vec![0, 0, 1]).is_err());
        assert!(Permutation::from_mapping(vec![0, 3, 1]).is_err());
    }

    #[test]
    fn shot_runs_group_consecutive_ids() {
        assert_eq!(shot_runs(&[0, 0, 1, 2, 2, 2]), vec![(0, 2), (2, 1), (3, 3)]);
        assert!(shot_runs(&[]).is_empty());
    }
}
