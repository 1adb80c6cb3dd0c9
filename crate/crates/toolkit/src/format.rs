//! On-disk dataset layout.
//!
//! ```text
//! <dir>/manifest.json     {"name", "style", "feature_dim", "sample_rate", "videos": [ids]}
//! <dir>/<id>.feat         "TPFT" | version u32 | N u32 | D u32 | N·D f32, all little-endian
//! <dir>/<id>.ann.json     {"annotator_scores": [[..]], "shot_boundaries_original": [[s, e], ..]}
//! ```

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use temporal_probe_core::dataset::{Dataset, DatasetStyle, VideoRecord};
use temporal_probe_core::Tensor;

pub const MAGIC: [u8; 4] = *b"TPFT";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;
pub const MANIFEST: &str = "manifest.json";

fn default_rate() -> usize {
    15
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub style: DatasetStyle,
    #[serde(alias = "D")]
    pub feature_dim: usize,
    #[serde(default = "default_rate")]
    pub sample_rate: usize,
    pub videos: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annotations {
    pub annotator_scores: Vec<Vec<f32>>,
    pub shot_boundaries_original: Vec<(usize, usize)>,
    /// Overrides the manifest's rate for this video.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_rate: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("video `{video}`, field `{field}`: {reason}")]
    Video {
        video: String,
        field: &'static str,
        reason: String,
    },
    #[error(transparent)]
    Core(#[from] temporal_probe_core::Error),
}

type Result<T, E = FormatError> = std::result::Result<T, E>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| FormatError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| FormatError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn feature_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.feat"))
}

pub fn annotation_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.ann.json"))
}

/// Serialises an `N × D` matrix with the 16-byte header.
pub fn write_features<W: Write>(out: &mut W, features: &Tensor) -> io::Result<()> {
    let (n, d) = (features.rows(), features.cols());
    let too_big = |_| io::Error::new(io::ErrorKind::InvalidInput, "dimension exceeds u32");
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * n * d);
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&u32::try_from(n).map_err(too_big)?.to_le_bytes());
    buf.extend_from_slice(&u32::try_from(d).map_err(too_big)?.to_le_bytes());
    for v in features.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)
}

/// Parses a `.feat` payload. Errors are plain strings so callers can attach
/// the video id.
pub fn parse_features(bytes: &[u8]) -> std::result::Result<Tensor, String> {
    if bytes.len() < HEADER_LEN {
        return Err(format!(
            "{} bytes is shorter than the 16-byte header",
            bytes.len()
        ));
    }
    if bytes[..4] != MAGIC {
        return Err(format!("bad magic {:?}, expected \"TPFT\"", &bytes[..4]));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4-byte slice"));
    let version = word(4);
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let (n, d) = (word(8) as usize, word(12) as usize);
    let expected = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(4))
        .and_then(|c| c.checked_add(HEADER_LEN))
        .ok_or_else(|| format!("header {n}×{d} overflows"))?;
    if bytes.len() != expected {
        return Err(format!(
            "header declares {n}×{d} ({expected} bytes) but file has {} bytes",
            bytes.len()
        ));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
        .collect();
    Tensor::matrix(n, d, data).map_err(|e| e.to_string())
}

pub fn read_features(path: &Path) -> Result<Tensor> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io_err(path))?;
    parse_features(&bytes).map_err(|reason| FormatError::Video {
        video: path
            .file_name()
            .map(|s| s.to_string_lossy().trim_end_matches(".feat").to_string())
            .unwrap_or_default(),
        field: "features",
        reason,
    })
}

fn load_video(dir: &Path, manifest: &Manifest, id: &str) -> Result<VideoRecord> {
    let video_err = |field, reason| FormatError::Video {
        video: id.to_string(),
        field,
        reason,
    };
    let features = read_features(&feature_path(dir, id)).map_err(|e| match e {
        FormatError::Video { reason, .. } => video_err("features", reason),
        other => other,
    })?;
    if features.cols() != manifest.feature_dim {
        return Err(video_err(
            "features",
            format!(
                "feature rows have length {}, manifest declares D = {}",
                features.cols(),
                manifest.feature_dim
            ),
        ));
    }
    let ann: Annotations = read_json(&annotation_path(dir, id))?;
    let n = features.rows();
    if let Some(row) = ann.annotator_scores.iter().find(|r| r.len() != n) {
        return Err(video_err(
            "annotator_scores",
            format!("annotator row has {} scores for {n} frames", row.len()),
        ));
    }
    let scores = if ann.annotator_scores.is_empty() {
        Tensor::zeros(&[0, n])
    } else {
        Tensor::from_rows(&ann.annotator_scores)
            .map_err(|e| video_err("annotator_scores", e.to_string()))?
    };
    Ok(VideoRecord::new(
        id,
        features,
        scores,
        ann.shot_boundaries_original,
        ann.sample_rate.unwrap_or(manifest.sample_rate),
        manifest.style,
    )?)
}

/// Reads and validates a dataset directory.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let manifest: Manifest = read_json(&dir.join(MANIFEST))?;
    let videos = manifest
        .videos
        .iter()
        .map(|id| load_video(dir, &manifest, id))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset::new(
        manifest.name.clone(),
        manifest.style,
        manifest.feature_dim,
        videos,
    )?)
}

/// Writes `dataset` to `dir` (created if missing). Ground truth is not
/// stored; it is recomputed on load.
pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let rate = dataset
        .videos
        .first()
        .map_or(default_rate(), |v| v.sample_rate);
    let manifest = Manifest {
        name: dataset.name.clone(),
        style: dataset.style,
        feature_dim: dataset.feature_dim,
        sample_rate: rate,
        videos: dataset.ids(),
    };
    write_json(&dir.join(MANIFEST), &manifest)?;
    for v in &dataset.videos {
        let path = feature_path(dir, &v.id);
        let mut file = io::BufWriter::new(fs::File::create(&path).map_err(io_err(&path))?);
        write_features(&mut file, &v.features)
            .and_then(|_| file.flush())
            .map_err(io_err(&path))?;
        let ann = Annotations {
            annotator_scores: (0..v.annotators())
                .map(|a| v.annotator_scores.row(a).to_vec())
                .collect(),
            shot_boundaries_original: v.shot_boundaries_original.clone(),
            sample_rate: (v.sample_rate != rate).then_some(v.sample_rate),
        };
        write_json(&annotation_path(dir, &v.id), &ann)?;
    }
    Ok(())
}
