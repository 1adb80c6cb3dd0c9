//! Temporal-order perturbations of subsampled videos and edit-distance
//! measures of how far a perturbation moves a sequence.

mod augment;
mod levenshtein;
mod permutation;

pub use augment::{sample_augmentation, sample_augmentation_from};
pub use levenshtein::{levenshtein_distance, shuffle_dissimilarity, SimilarityLevel};
pub use permutation::{
    apply_permutation, generate_permutation, shot_runs, Permutation, ShuffleSpec, Strategy,
};
