//! CSV and PNG export of heatmap pairs.

use std::fs;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use temporal_probe_core::analysis::HeatmapPair;
use temporal_probe_core::Tensor;

use crate::format::FormatError;

/// Side length of one matrix cell in the rendered image.
pub const CELL_PX: u32 = 4;

const LOW: [f64; 3] = [68.0, 1.0, 84.0];
const HIGH: [f64; 3] = [253.0, 231.0, 37.0];

/// Linear interpolation between the two ramp endpoints, `t` in `[0, 1]`.
pub fn ramp(t: f64) -> Rgb<u8> {
    let t = t.clamp(0.0, 1.0);
    Rgb(std::array::from_fn(|c| {
        (LOW[c] + (HIGH[c] - LOW[c]) * t).round() as u8
    }))
}

/// Renders `m` with values mapped linearly from `[lo, hi]`; `invert` swaps
/// the ramp ends.
pub fn render(m: &Tensor, lo: f64, hi: f64, invert: bool) -> RgbImage {
    let mut img = RgbImage::new(m.cols() as u32 * CELL_PX, m.rows() as u32 * CELL_PX);
    for (x, y, px) in img.enumerate_pixels_mut() {
        let v = f64::from(m.at((y / CELL_PX) as usize, (x / CELL_PX) as usize));
        let t = (v - lo) / (hi - lo);
        *px = ramp(if invert { 1.0 - t } else { t });
    }
    img
}

pub fn write_matrix_csv(path: &Path, m: &Tensor) -> Result<(), FormatError> {
    let io = |source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
    for i in 0..m.rows() {
        w.write_record(m.row(i).iter().map(|v| v.to_string()))
            .map_err(|e| io(e.into()))?;
    }
    w.flush().map_err(io)
}

pub fn read_matrix_csv(path: &Path) -> Result<Tensor, FormatError> {
    let io = |source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| io(e.into()))?;
    let mut rows: Vec<Vec<f32>> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| io(e.into()))?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| io(std::io::Error::new(std::io::ErrorKind::InvalidData, e)))?;
        rows.push(row);
    }
    Ok(Tensor::from_rows(&rows)?)
}

/// Writes `<id>.cosine.csv`, `<id>.gtdiff.csv`, `<id>.cosine.png` and
/// `<id>.gtdiff.png` into `dir` and returns the paths.
pub fn export_heatmap(pair: &HeatmapPair, dir: &Path) -> Result<Vec<PathBuf>, FormatError> {
    fs::create_dir_all(dir).map_err(|source| FormatError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let id = &pair.video_id;
    let paths: Vec<PathBuf> = ["cosine.csv", "gtdiff.csv", "cosine.png", "gtdiff.png"]
        .iter()
        .map(|s| dir.join(format!("{id}.{s}")))
        .collect();
    write_matrix_csv(&paths[0], &pair.cosine)?;
    write_matrix_csv(&paths[1], &pair.gt_diff)?;
    for (path, img) in [
        (&paths[2], render(&pair.cosine, -1.0, 1.0, false)),
        (&paths[3], render(&pair.gt_diff, 0.0, 1.0, true)),
    ] {
        img.save(path).map_err(|e| FormatError::Io {
            path: path.clone(),
            source: std::io::Error::other(e),
        })?;
    }
    Ok(paths)
}
