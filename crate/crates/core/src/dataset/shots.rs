use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Checks that inclusive `(start, end)` shot boundaries are sorted,
/// non-overlapping and contiguous from frame 0.
pub fn validate_boundaries(boundaries: &[(usize, usize)]) -> core::result::Result<(), String> {
    if boundaries.is_empty() {
        return Err(String::from("no shot boundaries"));
    }
    let mut expected_start = 0;
    for (k, &(s, e)) in boundaries.iter().enumerate() {
        if s != expected_start {
            return Err(format!(
                "shot {k} starts at {s}, expected {expected_start} (boundaries must be contiguous)"
            ));
        }
        if e < s {
            return Err(format!("shot {k} ends at {e} before its start {s}"));
        }
        expected_start = e + 1;
    }
    Ok(())
}

/// Assigns subsampled frame `i` to the shot containing original frame
/// `i × sample_rate`. Frames past the last boundary belong to the last shot.
pub fn map_shots_to_subsampled(
    boundaries: &[(usize, usize)],
    n_subsampled: usize,
    sample_rate: usize,
) -> Result<Vec<usize>> {
    if boundaries.is_empty() {
        return Err(Error::Empty("map_shots_to_subsampled: shot boundaries"));
    }
    let last = boundaries.len() - 1;
    let mut shot = 0;
    Ok((0..n_subsampled)
        .map(|i| {
            let frame = i * sample_rate;
            while shot < last && frame > boundaries[shot].1 {
                shot += 1;
            }
            shot
        })
        .collect())
}
