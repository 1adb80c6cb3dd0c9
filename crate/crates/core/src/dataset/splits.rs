use alloc::string::String;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::rng::{derive_seed, seeded};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Repeated k-fold cross-validation plan: `assignments[p][f]` is fold `f`
/// of permutation `p`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub permutation_count: usize,
    pub folds: usize,
    pub assignments: Vec<Vec<FoldAssignment>>,
}

/// For every permutation the video ids are shuffled with a seeded generator
/// and dealt round-robin into `folds` test sets; each training set is the
/// complement of its test set.
pub fn generate_splits(
    dataset: &Dataset,
    seed: u64,
    permutations: usize,
    folds: usize,
) -> Result<SplitPlan> {
    let ids = dataset.ids();
    if folds < 2 || ids.len() < folds {
        return Err(Error::TooFewVideos {
            videos: ids.len(),
            folds,
        });
    }
    let assignments = (0..permutations)
        .map(|p| {
            let mut order = ids.clone();
            order.shuffle(&mut seeded(derive_seed(seed, &[p as u64])));
            (0..folds)
                .map(|f| {
                    let (test, train) = order.iter().enumerate().fold(
                        (Vec::new(), Vec::new()),
                        |(mut te, mut tr), (i, id)| {
                            if i % folds == f {
                                te.push(id.clone());
                            } else {
                                tr.push(id.clone());
                            }
                            (te, tr)
                        },
                    );
                    FoldAssignment { train, test }
                })
                .collect()
        })
        .collect();
    Ok(SplitPlan {
        seed,
        permutation_count: permutations,
        folds,
        assignments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DatasetStyle, VideoRecord};
    use crate::Tensor;
    use alloc::format;
    use alloc::vec;

    fn dataset(n: usize) -> Dataset {
        let videos = (0..n)
            .map(|i| {
                VideoRecord::new(
                    format!("video_{i}"),
                    Tensor::zeros(&[2, 3]),
                    Tensor::zeros(&[1, 2]),
                    vec![(0, 29)],
                    15,
                    DatasetStyle::SummeStyle,
                )
                .unwrap()
            })
            .collect();
        Dataset::new("d", DatasetStyle::SummeStyle, 3, videos).unwrap()
    }

    #[test]
    fn fifty_videos_give_ten_per_test_fold() {
        let plan = generate_splits(&dataset(50), 3, 3, 5).unwrap();
        assert_eq!(plan.assignments.len(), 3);
        for perm in &plan.assignments {
            let mut seen: Vec<&String> = Vec::new();
            for fold in perm {
                assert_eq!(fold.test.len(), 10);
                assert_eq!(fold.train.len(), 40);
                assert!(fold.test.iter().all(|t| !fold.train.contains(t)));
                seen.extend(&fold.test);
            }
            seen.sort();
            seen.dedup();
            assert_eq!(seen.len(), 50);
        }
        assert_ne!(plan.assignments[0], plan.assignments[1]);
    }

    #[test]
    fn deterministic_per_seed() {
        let d = dataset(12);
        assert_eq!(
            generate_splits(&d, 9, 3, 5).unwrap(),
            generate_splits(&d, 9, 3, 5).unwrap()
        );
        assert_ne!(
            generate_splits(&d, 9, 1, 5).unwrap(),
            generate_splits(&d, 10, 1, 5).unwrap()
        );
    }

    #[test]
    fn too_few_videos() {
        assert_eq!(
            generate_splits(&dataset(4), 0, 3, 5),
            Err(Error::TooFewVideos {
                videos: 4,
                folds: 5
            })
        );
        assert!(generate_splits(&dataset(4), 0, 1, 1).is_err());
    }
}
