use rand::Rng;

use super::{generate_permutation, Permutation, ShuffleSpec, Strategy};
use crate::rng::{derive_seed, seeded};
use crate::{Error, Result};

/// With probability `p` draws flip or fixed-segment (`segments` blocks)
/// with equal odds, otherwise returns the identity.
pub fn sample_augmentation(
    seed: u64,
    p: f64,
    n: usize,
    shot_ids: Option<&[usize]>,
    segments: usize,
) -> Result<Permutation> {
    sample_augmentation_from(
        seed,
        p,
        &[Strategy::Flip, Strategy::FixedSegment],
        n,
        shot_ids,
        segments,
        3,
    )
}

/// Generalisation of [`sample_augmentation`] to any strategy set. Segment
/// counts larger than the sequence are reduced to the sequence length.
pub fn sample_augmentation_from(
    seed: u64,
    p: f64,
    strategies: &[Strategy],
    n: usize,
    shot_ids: Option<&[usize]>,
    segments: usize,
    window: usize,
) -> Result<Permutation> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidConfig(alloc::format!(
            "augmentation probability {p} outside [0, 1]"
        )));
    }
    let mut rng = seeded(seed);
    if strategies.is_empty() || !rng.gen_bool(p) {
        return Ok(Permutation::identity(n));
    }
    let strategy = strategies[rng.gen_range(0..strategies.len())];
    if strategy == Strategy::FixedSegment && n < 2 {
        return Ok(Permutation::identity(n));
    }
    let spec = ShuffleSpec {
        strategy,
        segments: segments.min(n),
        window,
        seed: derive_seed(seed, &[1]),
    };
    generate_permutation(&spec, n, shot_ids)
}
