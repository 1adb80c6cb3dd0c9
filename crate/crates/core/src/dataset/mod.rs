//! Video records, ground-truth construction, shot remapping and
//! cross-validation splits.

mod record;
mod shots;
mod splits;

pub use record::{compute_ground_truth, Dataset, DatasetStyle, VideoRecord};
pub use shots::{map_shots_to_subsampled, validate_boundaries};
pub use splits::{generate_splits, FoldAssignment, SplitPlan};
