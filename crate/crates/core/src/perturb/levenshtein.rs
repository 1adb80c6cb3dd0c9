use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::Permutation;

/// Minimum number of insertions, deletions and substitutions turning `a`
/// into `b`.
pub fn levenshtein_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = alloc::vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            curr[j + 1] = sub.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        core::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Which sequence the edit distance is measured on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityLevel {
    /// Frame indices: identity against the mapping.
    Frame,
    /// Shot ids: original shot-id sequence against the permuted one.
    #[default]
    Shot,
}

/// `100 × (1 − L/N)`: 100 means the sequence is unchanged, 0 means every
/// position needs an edit. Frame level compares `0..N` with the mapping;
/// shot level compares `shot_ids` with `shot_ids ∘ mapping`.
pub fn shuffle_dissimilarity(
    perm: &Permutation,
    shot_ids: &[usize],
    level: SimilarityLevel,
) -> f64 {
    let n = perm.len();
    if n == 0 {
        return 100.0;
    }
    let distance = match level {
        SimilarityLevel::Frame => {
            let identity: Vec<usize> = (0..n).collect();
            levenshtein_distance(&identity, perm.mapping())
        }
        SimilarityLevel::Shot => {
            let permuted: Vec<usize> = perm.mapping().iter().map(|&i| shot_ids[i]).collect();
            levenshtein_distance(shot_ids, &permuted)
        }
    };
    100.0 * (1.0 - distance as f64 / n as f64)
}
