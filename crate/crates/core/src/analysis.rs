//! Dataset introspection: frame-similarity and ground-truth-difference
//! matrices, and shuffle-dissimilarity tables.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, VideoRecord};
use crate::eval::Correlation;
use crate::harness::id_hash;
use crate::perturb::{
    generate_permutation, shuffle_dissimilarity, Permutation, ShuffleSpec, SimilarityLevel,
    Strategy,
};
use crate::rng::derive_seed;
use crate::tensor::dot;
use crate::{Error, Result, Tensor};

/// Pairwise cosine similarity of feature rows.
#[derive(Clone, Debug, PartialEq)]
pub struct CosineMatrix {
    /// `N × N`, symmetric, values in `[-1, 1]`.
    pub matrix: Tensor,
    /// Rows with zero norm. Their entries, diagonal included, are 0.
    pub zero_rows: Vec<usize>,
}

pub fn cosine_similarity_matrix(features: &Tensor) -> CosineMatrix {
    let n = features.rows();
    let norms: Vec<f64> = (0..n)
        .map(|i| libm::sqrt(dot(features.row(i), features.row(i))))
        .collect();
    let mut m = Tensor::zeros(&[n, n]);
    for i in 0..n {
        if norms[i] == 0.0 {
            continue;
        }
        m.row_mut(i)[i] = 1.0;
        for j in i + 1..n {
            if norms[j] == 0.0 {
                continue;
            }
            let c = (dot(features.row(i), features.row(j)) / (norms[i] * norms[j])).clamp(-1.0, 1.0)
                as f32;
            m.row_mut(i)[j] = c;
            m.row_mut(j)[i] = c;
        }
    }
    CosineMatrix {
        matrix: m,
        zero_rows: (0..n).filter(|&i| norms[i] == 0.0).collect(),
    }
}

/// `M[i][j] = |y_i − y_j|`.
pub fn gt_difference_matrix(ground_truth: &[f32]) -> Tensor {
    let n = ground_truth.len();
    let mut m = Tensor::zeros(&[n, n]);
    for i in 0..n {
        for j in 0..n {
            m.row_mut(i)[j] =
                (f64::from(ground_truth[i]) - f64::from(ground_truth[j])).abs() as f32;
        }
    }
    m
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeatmapPair {
    pub video_id: String,
    pub cosine: Tensor,
    pub gt_diff: Tensor,
    pub zero_rows: Vec<usize>,
}

impl HeatmapPair {
    /// Ground truth is the annotator mean used as the training target.
    pub fn from_record(record: &VideoRecord) -> Self {
        let cos = cosine_similarity_matrix(&record.features);
        Self {
            video_id: record.id.clone(),
            cosine: cos.matrix,
            gt_diff: gt_difference_matrix(&record.ground_truth),
            zero_rows: cos.zero_rows,
        }
    }

    /// Pearson correlation between the strict upper triangles of `cosine`
    /// and `−gt_diff`: positive when visually similar frames also have
    /// similar importance.
    pub fn structure_agreement(&self) -> Correlation {
        let n = self.cosine.rows();
        let mut a = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        let mut b = Vec::with_capacity(a.capacity());
        for i in 0..n {
            for j in i + 1..n {
                a.push(f64::from(self.cosine.at(i, j)));
                b.push(-f64::from(self.gt_diff.at(i, j)));
            }
        }
        pearson(&a, &b)
    }
}

/// Pearson correlation with two-pass centring; degenerate when fewer than
/// two values or either side is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Correlation {
    let degenerate = Correlation {
        value: 0.0,
        degenerate: true,
    };
    if a.len() != b.len() || a.len() < 2 {
        return degenerate;
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return degenerate;
    }
    Correlation {
        value: (sab / libm::sqrt(saa * sbb)).clamp(-1.0, 1.0),
        degenerate: false,
    }
}

/// Row order and labels of the shuffle-dissimilarity table.
pub const SHUFFLE_TABLE_ROWS: [(Strategy, &str); 5] = [
    (Strategy::Flip, "Flip"),
    (Strategy::IntraShot, "Intra Shot Shuffle"),
    (Strategy::FixedSegment, "Fixed Segment Shuffle"),
    (Strategy::NeighbourShot, "Neighbouring Shot Shuffle"),
    (Strategy::AnyShot, "Whole Shot Shuffle"),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShuffleTableRow {
    pub label: String,
    pub strategy: Strategy,
    pub iterations: usize,
    /// Mean over videos of the per-video mean similarity, in `[0, 100]`.
    pub similarity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShuffleTable {
    pub dataset: String,
    pub level: SimilarityLevel,
    pub rows: Vec<ShuffleTableRow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShuffleTableOptions {
    /// Shuffles per video for stochastic strategies; flip always uses one.
    pub iterations: usize,
    pub level: SimilarityLevel,
    pub segments: usize,
    pub window: usize,
    pub seed: u64,
}

impl Default for ShuffleTableOptions {
    fn default() -> Self {
        Self {
            iterations: 3,
            level: SimilarityLevel::Shot,
            segments: 4,
            window: 3,
            seed: 0,
        }
    }
}

fn table_permutation(
    strategy: Strategy,
    video: &VideoRecord,
    opts: &ShuffleTableOptions,
    seed: u64,
) -> Result<Permutation> {
    let n = video.frames();
    if strategy == Strategy::FixedSegment && n < 2 {
        return Ok(Permutation::identity(n));
    }
    let spec = ShuffleSpec {
        strategy,
        segments: opts.segments.min(n),
        window: opts.window,
        seed,
    };
    generate_permutation(&spec, n, Some(&video.shot_ids))
}

/// Similarity between original and shuffled sequences for every strategy:
/// each video is shuffled `iterations` times with independent seeds, the
/// similarities are averaged per video, then over the dataset.
pub fn shuffle_table(dataset: &Dataset, opts: &ShuffleTableOptions) -> Result<ShuffleTable> {
    if dataset.videos.is_empty() {
        return Err(Error::Empty("shuffle_table: dataset"));
    }
    if opts.iterations == 0 {
        return Err(Error::InvalidConfig(String::from(
            "iterations must be at least 1",
        )));
    }
    let rows = SHUFFLE_TABLE_ROWS
        .iter()
        .enumerate()
        .map(|(r, &(strategy, label))| {
            let iterations = if strategy.is_stochastic() {
                opts.iterations
            } else {
                1
            };
            let mut total = 0.0;
            for video in &dataset.videos {
                let mut per_video = 0.0;
                for it in 0..iterations {
                    let seed = derive_seed(opts.seed, &[r as u64, id_hash(&video.id), it as u64]);
                    let perm = table_permutation(strategy, video, opts, seed)?;
                    per_video += shuffle_dissimilarity(&perm, &video.shot_ids, opts.level);
                }
                total += per_video / iterations as f64;
            }
            Ok(ShuffleTableRow {
                label: String::from(label),
                strategy,
                iterations,
                similarity: total / dataset.videos.len() as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ShuffleTable {
        dataset: dataset.name.clone(),
        level: opts.level,
        rows,
    })
}

impl ShuffleTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("shuffle_type,shuffle_iterations,similarity\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{:.2}", r.label, r.iterations, r.similarity);
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<27}  {:>10}  {:>10}\n",
            "Shuffle type", "Iterations", "Similarity"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<27}  {:>10}  {:>10.2}",
                r.label, r.iterations, r.similarity
            );
        }
        out
    }
}
