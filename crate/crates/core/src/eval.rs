//! Rank correlation and the two per-video evaluation protocols.
//!
//! Kendall's tau is the tie-corrected tau-b, computed with Knight's
//! `O(N log N)` merge-sort algorithm. Spearman's rho is the Pearson
//! correlation of mid-ranks, evaluated from exact integer sums of doubled
//! ranks. A constant input makes either coefficient undefined; such cases
//! return `0` with `degenerate = true` instead of `NaN`.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetStyle, VideoRecord};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub value: f64,
    pub degenerate: bool,
}

impl Correlation {
    const DEGENERATE: Correlation = Correlation {
        value: 0.0,
        degenerate: true,
    };
}

fn to_f64<T: Copy + Into<f64>>(op: &'static str, x: &[T], y: &[T]) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            op,
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Empty(op));
    }
    let xs: Vec<f64> = x.iter().map(|&v| v.into()).collect();
    let ys: Vec<f64> = y.iter().map(|&v| v.into()).collect();
    if xs.iter().chain(&ys).any(|v| v.is_nan()) {
        return Err(Error::NonFinite(op));
    }
    Ok((xs, ys))
}

/// Number of pairs tied within runs of equal values of a sorted slice.
fn tied_pairs(sorted: &[f64]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for i in 1..=sorted.len() {
        if i < sorted.len() && sorted[i] == sorted[i - 1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total
}

/// Stable merge sort counting strict inversions.
fn sort_counting_swaps(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = sort_counting_swaps(&mut v[..mid], &mut buf[..mid])
        + sort_counting_swaps(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + (mid - i)].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + (n - j)].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Tau-b: `(C − D) / √((C + D + Tx)(C + D + Ty))` where `Tx`/`Ty` count
/// pairs tied only in `x`/`y`.
pub fn kendall_tau<T: Copy + Into<f64>>(x: &[T], y: &[T]) -> Result<Correlation> {
    let (xs, ys) = to_f64("kendall_tau", x, y)?;
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(ys[a].total_cmp(&ys[b])));
    let sorted_x: Vec<f64> = order.iter().map(|&i| xs[i]).collect();
    let mut y_by_x: Vec<f64> = order.iter().map(|&i| ys[i]).collect();

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let n1 = tied_pairs(&sorted_x);
    // pairs tied in both x and y
    let mut n3 = 0u64;
    let mut run = 1u64;
    for i in 1..=n {
        if i < n && sorted_x[i] == sorted_x[i - 1] && y_by_x[i] == y_by_x[i - 1] {
            run += 1;
        } else {
            n3 += run * (run - 1) / 2;
            run = 1;
        }
    }
    let mut buf = alloc::vec![0.0; n];
    let swaps = sort_counting_swaps(&mut y_by_x, &mut buf);
    let n2 = tied_pairs(&y_by_x);

    let not_tied_y = n0 - n2;
    let not_tied_x = n0 - n1;
    if not_tied_x == 0 || not_tied_y == 0 {
        return Ok(Correlation::DEGENERATE);
    }
    let concordant_minus_discordant =
        n0 as i64 - n1 as i64 - n2 as i64 + n3 as i64 - 2 * swaps as i64;
    let tau =
        concordant_minus_discordant as f64 / libm::sqrt(not_tied_y as f64 * not_tied_x as f64);
    Ok(Correlation {
        value: tau.clamp(-1.0, 1.0),
        degenerate: false,
    })
}

/// Twice the 1-based mid-rank of every element, so ties stay integral.
fn doubled_midranks(v: &[f64]) -> Vec<i64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = alloc::vec![0i64; v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && v[order[end]] == v[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end share the rank (start + 1 + end) / 2
        let doubled = (start + 1 + end) as i64;
        for &i in &order[start..end] {
            ranks[i] = doubled;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation of mid-ranks.
pub fn spearman_rho<T: Copy + Into<f64>>(x: &[T], y: &[T]) -> Result<Correlation> {
    let (xs, ys) = to_f64("spearman_rho", x, y)?;
    Ok(pearson_of_doubled_ranks(
        &doubled_midranks(&xs),
        &doubled_midranks(&ys),
    ))
}

/// Pearson correlation from exact integer moments of doubled ranks.
pub fn pearson_of_doubled_ranks(a: &[i64], b: &[i64]) -> Correlation {
    let n = a.len() as i128;
    let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0i128, 0i128, 0i128, 0i128, 0i128);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (i128::from(x), i128::from(y));
        sa += x;
        sb += y;
        saa += x * x;
        sbb += y * y;
        sab += x * y;
    }
    let cov = n * sab - sa * sb;
    let va = n * saa - sa * sa;
    let vb = n * sbb - sb * sb;
    if va == 0 || vb == 0 {
        return Correlation::DEGENERATE;
    }
    let rho = cov as f64 / libm::sqrt(va as f64 * vb as f64);
    Correlation {
        value: rho.clamp(-1.0, 1.0),
        degenerate: false,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoEvalResult {
    pub video_id: String,
    pub kendall: f64,
    pub spearman: f64,
    /// Some correlation in this result was undefined and counted as 0.
    pub degenerate: bool,
}

/// Scores one prediction against a video's annotations.
///
/// `tvsum_style` averages the correlation with each annotator;
/// `summe_style` correlates with the mean annotation.
pub fn evaluate_video(
    pred: &[f32],
    record: &VideoRecord,
    style: DatasetStyle,
) -> Result<VideoEvalResult> {
    let ann = &record.annotator_scores;
    if ann.rows() == 0 || ann.is_empty() {
        return Err(Error::Empty("evaluate_video: annotators"));
    }
    if pred.len() != ann.cols() {
        return Err(Error::LengthMismatch {
            op: "evaluate_video",
            expected: ann.cols(),
            got: pred.len(),
        });
    }
    let (kendall, spearman) = match style {
        DatasetStyle::TvsumStyle => {
            let mut k = Vec::with_capacity(ann.rows());
            let mut s = Vec::with_capacity(ann.rows());
            for a in 0..ann.rows() {
                k.push(kendall_tau(pred, ann.row(a))?);
                s.push(spearman_rho(pred, ann.row(a))?);
            }
            (mean_correlation(&k), mean_correlation(&s))
        }
        DatasetStyle::SummeStyle => {
            let mean: Vec<f64> = (0..ann.cols())
                .map(|j| {
                    let mut col: Vec<f64> =
                        (0..ann.rows()).map(|a| f64::from(ann.at(a, j))).collect();
                    col.sort_by(f64::total_cmp);
                    col.iter().sum::<f64>() / ann.rows() as f64
                })
                .collect();
            let pred: Vec<f64> = pred.iter().map(|&v| f64::from(v)).collect();
            (kendall_tau(&pred, &mean)?, spearman_rho(&pred, &mean)?)
        }
    };
    Ok(VideoEvalResult {
        video_id: record.id.clone(),
        kendall: kendall.value,
        spearman: spearman.value,
        degenerate: kendall.degenerate || spearman.degenerate,
    })
}

/// Mean over annotators, summed in sorted order so annotator order does
/// not matter.
fn mean_correlation(cs: &[Correlation]) -> Correlation {
    let mut v: Vec<f64> = cs.iter().map(|c| c.value).collect();
    v.sort_by(f64::total_cmp);
    Correlation {
        value: v.iter().sum::<f64>() / v.len() as f64,
        degenerate: cs.iter().any(|c| c.degenerate),
    }
}

/// Fraction of videos whose Kendall correlation reaches `threshold`.
pub fn threshold_fraction(results: &[VideoEvalResult], threshold: f64) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::Empty("threshold_fraction"));
    }
    let hits = results.iter().filter(|r| r.kendall >= threshold).count();
    Ok(hits as f64 / results.len() as f64)
}
