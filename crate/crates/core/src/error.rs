use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        op: &'static str,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("length mismatch in {op}: expected {expected}, got {got}")]
    LengthMismatch {
        op: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{0}: empty input")]
    Empty(&'static str),
    #[error("{0}: non-finite value in input")]
    NonFinite(&'static str),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("video `{video}`, field `{field}`: {reason}")]
    InvalidVideo {
        video: String,
        field: &'static str,
        reason: String,
    },
    #[error("dataset has {videos} videos, fewer than the {folds} requested folds")]
    TooFewVideos { videos: usize, folds: usize },
    #[error("{segments} segments requested for a {frames}-frame sequence")]
    TooManySegments { segments: usize, frames: usize },
    #[error("strategy `{0}` needs per-frame shot ids")]
    MissingShotIds(&'static str),
    #[error("mapping is not a bijection on 0..{0}")]
    NotABijection(usize),
    #[error("unknown video id `{0}`")]
    UnknownVideo(String),
    #[error("reports come from different datasets: `{0}` vs `{1}`")]
    DatasetMismatch(String, String),
}
