use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::shots::{map_shots_to_subsampled, validate_boundaries};
use crate::{Error, Result, Tensor};

/// Annotation scale of a benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetStyle {
    /// Raw scores in `[1, 5]`; evaluation averages the per-annotator correlations.
    #[serde(alias = "tvsum")]
    TvsumStyle,
    /// Raw scores in `[0, 1]`; evaluation correlates with the annotator mean.
    #[serde(alias = "summe")]
    SummeStyle,
}

impl DatasetStyle {
    pub fn scale(self) -> (f32, f32) {
        match self {
            DatasetStyle::TvsumStyle => (1.0, 5.0),
            DatasetStyle::SummeStyle => (0.0, 1.0),
        }
    }

    /// Maps a raw annotation onto `[0, 1]`.
    pub fn normalise(self, s: f64) -> f64 {
        match self {
            DatasetStyle::TvsumStyle => (s - 1.0) / 4.0,
            DatasetStyle::SummeStyle => s,
        }
    }
}

/// Per-frame mean over annotators of the normalised scores.
///
/// Values are summed in sorted order so the result does not depend on the
/// order of the annotators.
pub fn compute_ground_truth(annotator_scores: &Tensor, style: DatasetStyle) -> Result<Vec<f32>> {
    let a = annotator_scores.rows();
    if annotator_scores.is_empty() || a == 0 {
        return Err(Error::Empty("compute_ground_truth: annotators"));
    }
    let n = annotator_scores.cols();
    let mut column = Vec::with_capacity(a);
    Ok((0..n)
        .map(|j| {
            column.clear();
            column.extend((0..a).map(|i| style.normalise(f64::from(annotator_scores.at(i, j)))));
            column.sort_by(f64::total_cmp);
            (column.iter().sum::<f64>() / a as f64).clamp(0.0, 1.0) as f32
        })
        .collect())
}

/// One subsampled video: features, annotations and derived targets.
///
/// Records built through [`VideoRecord::new`] satisfy: `N ≥ 1`, `A ≥ 1`,
/// ground truth in `[0, 1]`, contiguous shot boundaries, and `shot_ids`
/// starting at 0 and increasing by at most one between neighbours.
/// Records produced by applying a permutation keep everything except the
/// monotonic shot ids.
#[derive(Clone, Debug, PartialEq)]
pub struct VideoRecord {
    pub id: String,
    /// `N × D`.
    pub features: Tensor,
    /// `A × N`, raw annotation scale.
    pub annotator_scores: Tensor,
    pub ground_truth: Vec<f32>,
    pub shot_boundaries_original: Vec<(usize, usize)>,
    pub shot_ids: Vec<usize>,
    pub sample_rate: usize,
}

impl VideoRecord {
    pub fn new(
        id: impl Into<String>,
        features: Tensor,
        annotator_scores: Tensor,
        shot_boundaries_original: Vec<(usize, usize)>,
        sample_rate: usize,
        style: DatasetStyle,
    ) -> Result<Self> {
        let id = id.into();
        let err = |field: &'static str, reason: String| Error::InvalidVideo {
            video: id.clone(),
            field,
            reason,
        };
        if features.shape().len() != 2 || features.rows() == 0 || features.cols() == 0 {
            return Err(err(
                "features",
                format!(
                    "expected a non-empty N×D matrix, got shape {:?}",
                    features.shape()
                ),
            ));
        }
        if features.data().iter().any(|v| !v.is_finite()) {
            return Err(err("features", String::from("non-finite value")));
        }
        let n = features.rows();
        if annotator_scores.shape().len() != 2 || annotator_scores.rows() == 0 {
            return Err(err(
                "annotator_scores",
                String::from("expected at least one annotator"),
            ));
        }
        if annotator_scores.cols() != n {
            return Err(err(
                "annotator_scores",
                format!(
                    "{} frames annotated, features have {n}",
                    annotator_scores.cols()
                ),
            ));
        }
        let (lo, hi) = style.scale();
        if let Some(bad) = annotator_scores
            .data()
            .iter()
            .find(|v| !v.is_finite() || **v < lo || **v > hi)
        {
            return Err(err(
                "annotator_scores",
                format!("score {bad} outside the [{lo}, {hi}] scale"),
            ));
        }
        if sample_rate == 0 {
            return Err(err("sample_rate", String::from("must be positive")));
        }
        validate_boundaries(&shot_boundaries_original)
            .map_err(|reason| err("shot_boundaries_original", reason))?;
        let ground_truth = compute_ground_truth(&annotator_scores, style)?;
        let shot_ids = compact_ids(&map_shots_to_subsampled(
            &shot_boundaries_original,
            n,
            sample_rate,
        )?);
        Ok(Self {
            id,
            features,
            annotator_scores,
            ground_truth,
            shot_boundaries_original,
            shot_ids,
            sample_rate,
        })
    }

    pub fn frames(&self) -> usize {
        self.features.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn annotators(&self) -> usize {
        self.annotator_scores.rows()
    }

    pub fn shot_count(&self) -> usize {
        self.shot_ids.last().map_or(0, |s| s + 1)
    }
}

/// Renumbers a non-decreasing id sequence so consecutive distinct values
/// differ by one. Shots too short to receive a subsampled frame disappear.
fn compact_ids(ids: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(ids.len());
    let mut current = 0;
    for (i, &id) in ids.iter().enumerate() {
        if i > 0 && id != ids[i - 1] {
            current += 1;
        }
        out.push(current);
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub style: DatasetStyle,
    pub feature_dim: usize,
    pub videos: Vec<VideoRecord>,
}

impl Dataset {
    /// Checks that every video has width `feature_dim` and that ids are unique.
    pub fn new(
        name: impl Into<String>,
        style: DatasetStyle,
        feature_dim: usize,
        videos: Vec<VideoRecord>,
    ) -> Result<Self> {
        for (i, v) in videos.iter().enumerate() {
            if v.feature_dim() != feature_dim {
                return Err(Error::InvalidVideo {
                    video: v.id.clone(),
                    field: "features",
                    reason: format!(
                        "feature width {} differs from dataset width {feature_dim}",
                        v.feature_dim()
                    ),
                });
            }
            if videos[..i].iter().any(|w| w.id == v.id) {
                return Err(Error::InvalidVideo {
                    video: v.id.clone(),
                    field: "id",
                    reason: String::from("duplicate video id"),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            style,
            feature_dim,
            videos,
        })
    }

    pub fn ids(&self) -> Vec<String> {
        self.videos.iter().map(|v| v.id.to_string()).collect()
    }

    pub fn video(&self, id: &str) -> Result<&VideoRecord> {
        self.videos
            .iter()
            .find(|v| v.id == id)
            .ok_or_else(|| Error::UnknownVideo(id.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn scores(rows: &[&[f32]]) -> Tensor {
        Tensor::from_rows(rows).unwrap()
    }

    #[test]
    fn tvsum_scaling_then_mean() {
        let gt = compute_ground_truth(
            &scores(&[&[1.0, 5.0], &[3.0, 3.0]]),
            DatasetStyle::TvsumStyle,
        )
        .unwrap();
        // frame 0: mean(0, 0.5); frame 1: mean(1, 0.5)
        assert_eq!(gt, vec![0.25, 0.75]);
        let gt = compute_ground_truth(
            &scores(&[&[1.0], &[5.0], &[3.0], &[3.0]]),
            DatasetStyle::TvsumStyle,
        )
        .unwrap();
        assert_eq!(gt, vec![0.5]);
    }

    #[test]
    fn scale_endpoints() {
        let zeros =
            compute_ground_truth(&scores(&[&[0.0; 4], &[0.0; 4]]), DatasetStyle::SummeStyle)
                .unwrap();
        assert_eq!(zeros, vec![0.0; 4]);
        let ones = compute_ground_truth(&scores(&[&[5.0; 3], &[5.0; 3]]), DatasetStyle::TvsumStyle)
            .unwrap();
        assert_eq!(ones, vec![1.0; 3]);
    }

    #[test]
    fn empty_annotators_error() {
        assert!(compute_ground_truth(&Tensor::zeros(&[0, 4]), DatasetStyle::SummeStyle).is_err());
    }

    fn record(style: DatasetStyle, score: f32) -> Result<VideoRecord> {
        VideoRecord::new(
            "v1",
            Tensor::zeros(&[3, 4]),
            Tensor::from_rows(&[[score; 3]]).unwrap(),
            vec![(0, 44)],
            15,
            style,
        )
    }

    #[test]
    fn out_of_scale_scores_name_video_and_field() {
        let e = record(DatasetStyle::TvsumStyle, 6.0).unwrap_err();
        match e {
            Error::InvalidVideo { video, field, .. } => {
                assert_eq!(video, "v1");
                assert_eq!(field, "annotator_scores");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(record(DatasetStyle::SummeStyle, 1.5).is_err());
        assert!(record(DatasetStyle::TvsumStyle, 3.0).is_ok());
    }

    #[test]
    fn skipped_shots_are_compacted() {
        // shot 1 spans frames 10..=12 and gets no subsampled frame at rate 15
        let v = VideoRecord::new(
            "v",
            Tensor::zeros(&[3, 2]),
            Tensor::zeros(&[1, 3]),
            vec![(0, 9), (10, 12), (13, 40)],
            15,
            DatasetStyle::SummeStyle,
        )
        .unwrap();
        assert_eq!(v.shot_ids, vec![0, 1, 1]);
        assert_eq!(v.shot_count(), 2);
    }

    #[test]
    fn dataset_rejects_mixed_widths() {
        let a = record(DatasetStyle::SummeStyle, 0.5).unwrap();
        let mut b = a.clone();
        b.id = "v2".into();
        b.features = Tensor::zeros(&[3, 5]);
        let e = Dataset::new("d", DatasetStyle::SummeStyle, 4, vec![a, b]).unwrap_err();
        assert!(matches!(
            e,
            Error::InvalidVideo {
                field: "features",
                ..
            }
        ));
    }

    proptest! {
        #[test]
        fn ground_truth_ignores_annotator_order(
            rows in proptest::collection::vec(proptest::collection::vec(1.0f32..=5.0, 6), 1..8),
            rot in 0usize..8,
        ) {
            let a = Tensor::from_rows(&rows).unwrap();
            let mut shuffled = rows.clone();
            let k = rot % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            let b = Tensor::from_rows(&shuffled).unwrap();
            let ga = compute_ground_truth(&a, DatasetStyle::TvsumStyle).unwrap();
            let gb = compute_ground_truth(&b, DatasetStyle::TvsumStyle).unwrap();
            prop_assert_eq!(&ga, &gb);
            prop_assert!(ga.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
