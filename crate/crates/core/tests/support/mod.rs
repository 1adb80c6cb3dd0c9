//! Oracles and property checks shared by the integration tests and the
//! acceptance suite. Each check returns a short summary or the first
//! counterexample.

#![allow(dead_code)]

use rand::Rng;
use temporal_probe_core::dataset::{Dataset, DatasetStyle, VideoRecord};
use temporal_probe_core::eval::{kendall_tau, spearman_rho, Correlation};
use temporal_probe_core::harness::{
    evaluate_split, fold_jobs, run_fold, AugmentationConfig, ExperimentConfig, FoldOutcome,
    Paradigm,
};
use temporal_probe_core::models::{ScorerConfig, ScorerKind, ScorerModel, ScorerObjective};
use temporal_probe_core::nn::{finite_diff_check, Objective, Parameter};
use temporal_probe_core::perturb::{
    apply_permutation, generate_permutation, shot_runs, shuffle_dissimilarity, Permutation,
    ShuffleSpec, SimilarityLevel, Strategy,
};
use temporal_probe_core::rng::{derive_seed, seeded, SeededRng};
use temporal_probe_core::synth::content_only;
use temporal_probe_core::Tensor;

pub fn uniform(rows: usize, cols: usize, lo: f32, hi: f32, seed: u64) -> Tensor {
    let mut rng = seeded(seed);
    Tensor::matrix(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.gen_range(lo..hi)).collect(),
    )
    .unwrap()
}

/// Tau-b by counting all pairs.
pub fn brute_kendall(x: &[f64], y: &[f64]) -> Correlation {
    let n = x.len();
    let (mut c, mut d, mut tx, mut ty) = (0i64, 0i64, 0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            let sx = x[i].partial_cmp(&x[j]).unwrap();
            let sy = y[i].partial_cmp(&y[j]).unwrap();
            if sx.is_eq() {
                tx += 1;
            }
            if sy.is_eq() {
                ty += 1;
            }
            if sx.is_ne() && sy.is_ne() {
                if sx == sy {
                    c += 1;
                } else {
                    d += 1;
                }
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as u64;
    let (nx, ny) = (n0 - tx, n0 - ty);
    if nx == 0 || ny == 0 {
        return Correlation {
            value: 0.0,
            degenerate: true,
        };
    }
    Correlation {
        value: ((c - d) as f64 / (ny as f64 * nx as f64).sqrt()).clamp(-1.0, 1.0),
        degenerate: false,
    }
}

/// Twice the 1-based mid-rank, by counting smaller and equal elements.
pub fn brute_doubled_ranks(v: &[f64]) -> Vec<i64> {
    v.iter()
        .map(|a| {
            let less = v.iter().filter(|b| *b < a).count() as i64;
            let equal = v.iter().filter(|b| *b == a).count() as i64;
            2 * less + equal + 1
        })
        .collect()
}

/// Pearson on brute-force mid-ranks with exact integer moments.
pub fn brute_spearman(x: &[f64], y: &[f64]) -> Correlation {
    let (a, b) = (brute_doubled_ranks(x), brute_doubled_ranks(y));
    let n = a.len() as i128;
    let sa: i128 = a.iter().map(|&v| v as i128).sum();
    let sb: i128 = b.iter().map(|&v| v as i128).sum();
    let saa: i128 = a.iter().map(|&v| (v as i128).pow(2)).sum();
    let sbb: i128 = b.iter().map(|&v| (v as i128).pow(2)).sum();
    let sab: i128 = a.iter().zip(&b).map(|(&u, &v)| u as i128 * v as i128).sum();
    let (cov, va, vb) = (n * sab - sa * sb, n * saa - sa * sa, n * sbb - sb * sb);
    if va == 0 || vb == 0 {
        return Correlation {
            value: 0.0,
            degenerate: true,
        };
    }
    Correlation {
        value: (cov as f64 / (va as f64 * vb as f64).sqrt()).clamp(-1.0, 1.0),
        degenerate: false,
    }
}

/// Textbook floating-point Pearson of mid-ranks, for an independent check
/// of the integer arithmetic.
pub fn float_spearman(x: &[f64], y: &[f64]) -> f64 {
    let a: Vec<f64> = brute_doubled_ranks(x)
        .iter()
        .map(|&r| r as f64 / 2.0)
        .collect();
    let b: Vec<f64> = brute_doubled_ranks(y)
        .iter()
        .map(|&r| r as f64 / 2.0)
        .collect();
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(&b).map(|(u, v)| (u - ma) * (v - mb)).sum();
    let va: f64 = a.iter().map(|u| (u - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|v| (v - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// A vector drawn from a small integer alphabet, so ties are common.
pub fn tied_vector(rng: &mut SeededRng, n: usize) -> Vec<f64> {
    let levels = rng.gen_range(1..=8);
    (0..n)
        .map(|_| f64::from(rng.gen_range(0..levels)))
        .collect()
}

/// Compares both statistics with their oracles on `cases` random tied
/// vector pairs with `2 ≤ N ≤ 200`. Returns the number of degenerate cases.
pub fn rank_oracle_check(cases: usize, seed: u64) -> Result<usize, String> {
    let mut rng = seeded(seed);
    let mut degenerate = 0;
    for case in 0..cases {
        let n = rng.gen_range(2..=200);
        let x = tied_vector(&mut rng, n);
        let y = if rng.gen_bool(0.2) {
            // correlated pairs exercise tau and rho near ±1
            x.iter()
                .map(|v| v * 2.0 + f64::from(rng.gen_range(0..2)))
                .collect()
        } else {
            tied_vector(&mut rng, n)
        };
        let k = kendall_tau(&x, &y).map_err(|e| e.to_string())?;
        let s = spearman_rho(&x, &y).map_err(|e| e.to_string())?;
        let (bk, bs) = (brute_kendall(&x, &y), brute_spearman(&x, &y));
        if k.value.to_bits() != bk.value.to_bits() || k.degenerate != bk.degenerate {
            return Err(format!(
                "case {case}: kendall {k:?} vs oracle {bk:?} on {x:?} / {y:?}"
            ));
        }
        if s.value.to_bits() != bs.value.to_bits() || s.degenerate != bs.degenerate {
            return Err(format!(
                "case {case}: spearman {s:?} vs oracle {bs:?} on {x:?} / {y:?}"
            ));
        }
        if !s.degenerate && (s.value - float_spearman(&x, &y)).abs() > 1e-12 {
            return Err(format!(
                "case {case}: spearman {} vs float formula",
                s.value
            ));
        }
        degenerate += usize::from(k.degenerate || s.degenerate);
    }
    Ok(degenerate)
}

/// Random non-decreasing shot ids starting at 0 with steps of 0 or 1.
pub fn random_shot_ids(rng: &mut SeededRng, n: usize) -> Vec<usize> {
    let mut ids = Vec::with_capacity(n);
    let mut current = 0;
    for i in 0..n {
        if i > 0 && rng.gen_bool(0.3) {
            current += 1;
        }
        ids.push(current);
    }
    ids
}

fn is_bijection(m: &[usize]) -> bool {
    let mut seen = vec![false; m.len()];
    m.iter()
        .all(|&i| i < seen.len() && !std::mem::replace(&mut seen[i], true))
}

/// Splits a mapping into maximal ascending-by-one runs.
fn contiguous_pieces(m: &[usize]) -> Vec<(usize, usize)> {
    let mut pieces: Vec<(usize, usize)> = Vec::new();
    for (i, &v) in m.iter().enumerate() {
        match pieces.last_mut() {
            Some((s, l)) if i > 0 && m[i - 1] + 1 == v && *s + *l == v => *l += 1,
            _ => pieces.push((v, 1)),
        }
    }
    pieces
}

/// Checks that `m` is the concatenation of the given `(start, len)` blocks
/// in some order, each kept intact, and returns that order.
fn block_order(m: &[usize], blocks: &[(usize, usize)]) -> Result<Vec<usize>, String> {
    let mut order = Vec::with_capacity(blocks.len());
    let mut pos = 0;
    while pos < m.len() {
        let b = blocks
            .iter()
            .position(|&(s, _)| s == m[pos])
            .ok_or_else(|| format!("position {pos} does not start a block"))?;
        let (s, l) = blocks[b];
        if pos + l > m.len() || m[pos..pos + l].iter().copied().ne(s..s + l) {
            return Err(format!("block {b} broken at position {pos}"));
        }
        order.push(b);
        pos += l;
    }
    let mut sorted = order.clone();
    sorted.sort_unstable();
    if sorted.iter().copied().ne(0..blocks.len()) {
        return Err(format!("blocks used {order:?}"));
    }
    Ok(order)
}

fn fixed_blocks(n: usize, m: usize) -> Vec<(usize, usize)> {
    let len = n / m;
    (0..m)
        .map(|b| (b * len, if b + 1 == m { n - b * len } else { len }))
        .collect()
}

/// Strategy-specific structure of one generated permutation.
pub fn check_permutation(
    spec: &ShuffleSpec,
    perm: &Permutation,
    shot_ids: &[usize],
) -> Result<(), String> {
    let m = perm.mapping();
    let n = shot_ids.len();
    if m.len() != n || !is_bijection(m) {
        return Err(format!("not a bijection of 0..{n}: {m:?}"));
    }
    let runs = shot_runs(shot_ids);
    match spec.strategy {
        Strategy::Flip => {
            if m.iter().enumerate().any(|(i, &v)| v != n - 1 - i) {
                return Err(format!("flip is not the reversal: {m:?}"));
            }
        }
        Strategy::FixedSegment => {
            block_order(m, &fixed_blocks(n, spec.segments))?;
        }
        Strategy::IntraShot => {
            if m.iter()
                .enumerate()
                .any(|(i, &v)| shot_ids[v] != shot_ids[i])
            {
                return Err(format!("frame left its shot: {m:?}"));
            }
            let sim = shuffle_dissimilarity(perm, shot_ids, SimilarityLevel::Shot);
            if sim != 100.0 {
                return Err(format!("intra-shot shot-level similarity {sim}"));
            }
        }
        Strategy::AnyShot => {
            block_order(m, &runs)?;
        }
        Strategy::NeighbourShot => {
            let order = block_order(m, &runs)?;
            if let Some((k, &r)) = order
                .iter()
                .enumerate()
                .find(|&(k, &r)| k / spec.window != r / spec.window)
            {
                return Err(format!("shot {r} moved to slot {k}, outside its window"));
            }
        }
    }
    Ok(())
}

/// Runs `cases` random instances of one strategy, checking the permutation
/// structure and that applying it keeps features and annotations together.
pub fn permutation_suite(strategy: Strategy, cases: usize, seed: u64) -> Result<(), String> {
    let mut rng = seeded(derive_seed(seed, &[strategy as u64]));
    for case in 0..cases {
        let n = rng.gen_range(1..=120);
        let shot_ids = random_shot_ids(&mut rng, n);
        let spec = ShuffleSpec {
            strategy,
            segments: rng.gen_range(2..=8).min(n.max(2)),
            window: rng.gen_range(2..=5),
            seed: rng.gen(),
        };
        if strategy == Strategy::FixedSegment && spec.segments > n {
            if generate_permutation(&spec, n, Some(&shot_ids)).is_ok() {
                return Err(format!("case {case}: M > N accepted"));
            }
            continue;
        }
        let perm = generate_permutation(&spec, n, Some(&shot_ids)).map_err(|e| e.to_string())?;
        check_permutation(&spec, &perm, &shot_ids)
            .map_err(|e| format!("case {case} {spec:?}: {e}"))?;
        if case % 10 == 0 {
            check_application(&perm, &shot_ids, &mut rng)
                .map_err(|e| format!("case {case}: {e}"))?;
        }
    }
    Ok(())
}

/// Feature rows, annotator columns and ground truth move as one; the
/// multiset of rows is unchanged.
fn check_application(
    perm: &Permutation,
    shot_ids: &[usize],
    rng: &mut SeededRng,
) -> Result<(), String> {
    let n = shot_ids.len();
    let features = uniform(n, 3, -1.0, 1.0, rng.gen());
    let ann = Tensor::matrix(2, n, (0..2 * n).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
    let boundaries = shot_runs(shot_ids)
        .iter()
        .map(|&(s, l)| (s * 15, (s + l) * 15 - 1))
        .collect();
    let record = VideoRecord::new("v", features, ann, boundaries, 15, DatasetStyle::SummeStyle)
        .map_err(|e| e.to_string())?;
    let out = apply_permutation(&record, perm).map_err(|e| e.to_string())?;
    let key = |r: &VideoRecord, i: usize| -> Vec<u32> {
        let mut k: Vec<u32> = r.features.row(i).iter().map(|v| v.to_bits()).collect();
        k.extend((0..2).map(|a| r.annotator_scores.at(a, i).to_bits()));
        k.push(r.ground_truth[i].to_bits());
        k
    };
    let mut before: Vec<Vec<u32>> = (0..n).map(|i| key(&record, i)).collect();
    let after: Vec<Vec<u32>> = (0..n).map(|i| key(&out, i)).collect();
    for (i, &src) in perm.mapping().iter().enumerate() {
        if after[i] != before[src] {
            return Err(format!("row {i} is not input row {src}"));
        }
    }
    let mut sorted_after = after;
    before.sort();
    sorted_after.sort();
    if before != sorted_after {
        return Err(String::from("multiset of rows changed"));
    }
    Ok(())
}

pub fn equivariance_config(kind: ScorerKind, pe: bool, d: usize) -> ScorerConfig {
    ScorerConfig {
        use_positional_encoding: pe,
        attention_dim: 16,
        ffn_dim: 24,
        heads: 2,
        hidden_dims: vec![16, 8],
        ..ScorerConfig::new(kind, d)
    }
}

/// Largest `|score(P x) − P score(x)|` over `instances` random models,
/// inputs and permutations.
pub fn equivariance_gap(kind: ScorerKind, pe: bool, instances: usize, seed: u64) -> f64 {
    let mut rng = seeded(seed);
    let mut worst = 0.0f32;
    for i in 0..instances {
        let n = rng.gen_range(2..=24);
        let d = 2 * rng.gen_range(1..=8);
        let model = ScorerModel::build(
            equivariance_config(kind, pe, d),
            derive_seed(seed, &[i as u64]),
        )
        .unwrap();
        let x = uniform(n, d, -1.0, 1.0, rng.gen());
        let mut mapping: Vec<usize> = (0..n).collect();
        use rand::seq::SliceRandom;
        mapping.shuffle(&mut rng);
        let perm = Permutation::from_mapping(mapping).unwrap();
        let base = model.score(&x).unwrap();
        let moved = model.score(&x.select_rows(perm.mapping())).unwrap();
        for (a, b) in moved.iter().zip(perm.apply_to(&base)) {
            worst = worst.max((a - b).abs());
        }
    }
    f64::from(worst)
}

fn protocol_config(d: usize) -> ExperimentConfig {
    let model = ScorerConfig {
        dropout_rate: 0.1,
        ..equivariance_config(ScorerKind::Attention, false, d)
    };
    let mut c = ExperimentConfig::new("protocol", model, Paradigm::FullVideo);
    c.epochs = 3;
    c.lr = 1e-3;
    c
}

fn fold_outcomes(dataset: &Dataset, config: &ExperimentConfig) -> Result<Vec<FoldOutcome>, String> {
    fold_jobs(dataset, config)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|(p, f, a)| run_fold(dataset, config, a, *p, *f).map_err(|e| e.to_string()))
        .collect()
}

fn same_outcome(a: &FoldOutcome, b: &FoldOutcome) -> bool {
    let bits = |w: &[Tensor]| -> Vec<u32> {
        w.iter()
            .flat_map(|t| t.data().iter().map(|v| v.to_bits()))
            .collect()
    };
    a.report == b.report && bits(&a.best_weights) == bits(&b.best_weights)
}

/// Augmentation with `p = 0` reproduces the unshuffled run bit for bit on
/// every fold: weights, losses and scores.
pub fn augmentation_p0_identity(seed: u64) -> Result<usize, String> {
    let dataset = content_only(12, 16, 8, seed).map_err(|e| e.to_string())?;
    let mut plain = protocol_config(8);
    plain.seed = seed;
    let mut p0 = plain.clone();
    p0.augmentation = Some(AugmentationConfig {
        p: 0.0,
        ..AugmentationConfig::default()
    });
    let (a, b) = (
        fold_outcomes(&dataset, &plain)?,
        fold_outcomes(&dataset, &p0)?,
    );
    for (x, y) in a.iter().zip(&b) {
        if !same_outcome(x, y) {
            return Err(format!(
                "fold p{} f{} differs between unshuffled and p = 0",
                x.report.permutation, x.report.fold
            ));
        }
    }
    // a positive p must actually change something, or the identity is vacuous
    let mut p1 = plain.clone();
    p1.augmentation = Some(AugmentationConfig {
        p: 1.0,
        ..AugmentationConfig::default()
    });
    let c = fold_outcomes(&dataset, &p1)?;
    if a.iter().zip(&c).all(|(x, y)| same_outcome(x, y)) {
        return Err(String::from("p = 1 left every fold unchanged"));
    }
    Ok(a.len())
}

/// Evaluation never sees the shuffle config: with `lr = 0` every strategy
/// and augmentation yields the unshuffled scores, and a trained shuffled
/// model rescored on the original test videos reproduces its report.
pub fn evaluation_ignores_shuffle(seed: u64) -> Result<usize, String> {
    let dataset = content_only(12, 16, 8, seed).map_err(|e| e.to_string())?;
    let mut frozen = protocol_config(8);
    frozen.seed = seed;
    frozen.lr = 0.0;
    frozen.splits.permutations = 1;
    let base = fold_outcomes(&dataset, &frozen)?;
    let mut variants: Vec<ExperimentConfig> = Strategy::ALL
        .iter()
        .map(|&s| ExperimentConfig {
            shuffle: Some(ShuffleSpec::new(s, seed ^ 7)),
            ..frozen.clone()
        })
        .collect();
    variants.push(ExperimentConfig {
        augmentation: Some(AugmentationConfig {
            p: 1.0,
            ..AugmentationConfig::default()
        }),
        ..frozen.clone()
    });
    for v in &variants {
        for (x, y) in base.iter().zip(fold_outcomes(&dataset, v)?) {
            if x.report.videos != y.report.videos
                || x.report.epoch_kendall != y.report.epoch_kendall
            {
                return Err(format!(
                    "evaluation changed under {}",
                    v.perturbation_label()
                ));
            }
        }
    }
    let mut trained = frozen.clone();
    trained.lr = 1e-3;
    trained.shuffle = Some(ShuffleSpec::new(Strategy::AnyShot, seed));
    let plan = fold_jobs(&dataset, &trained).map_err(|e| e.to_string())?;
    for (p, f, a) in &plan {
        let out = run_fold(&dataset, &trained, a, *p, *f).map_err(|e| e.to_string())?;
        let mut model = ScorerModel::build(trained.model.clone(), 0).map_err(|e| e.to_string())?;
        model
            .load_values(out.best_weights.clone())
            .map_err(|e| e.to_string())?;
        let test: Vec<&VideoRecord> = a.test.iter().map(|id| dataset.video(id).unwrap()).collect();
        let again = evaluate_split(&model, &test, dataset.style).map_err(|e| e.to_string())?;
        if again != out.report.videos {
            return Err(format!("fold p{p} f{f}: rescoring differs from the report"));
        }
    }
    Ok(variants.len())
}

pub fn small_scorer(kind: ScorerKind, pe: bool, d: usize) -> ScorerConfig {
    ScorerConfig {
        use_positional_encoding: pe,
        attention_dim: 8,
        ffn_dim: 12,
        heads: 2,
        local_heads: 2,
        global_heads: 4,
        segments: 3,
        hidden_dims: vec![10, 6],
        ..ScorerConfig::new(kind, d)
    }
}

#[derive(Debug, Default)]
pub struct SweepSummary {
    pub cases: usize,
    pub checked: usize,
    pub skipped: usize,
    pub max_error: f64,
}

/// Gradient check of every scorer kind, with and without positional
/// encoding, on `(N, D)` in `{(1, 4), (5, 6), (8, 16)}`.
pub fn scorer_gradient_sweep(tolerance: f64) -> Result<SweepSummary, String> {
    let cases = [
        (ScorerKind::Mlp, false),
        (ScorerKind::Attention, false),
        (ScorerKind::Attention, true),
        (ScorerKind::SegmentedAttention, true),
        (ScorerKind::SegmentedAttention, false),
    ];
    let mut summary = SweepSummary::default();
    for (i, &(kind, pe)) in cases.iter().enumerate() {
        for (n, d) in [(1, 4), (5, 6), (8, 16)] {
            let seed = 100 + i as u64 * 10 + n as u64;
            let mut model =
                ScorerModel::build(small_scorer(kind, pe, d), seed).map_err(|e| e.to_string())?;
            let x = uniform(n, d, -1.0, 1.0, seed + 1);
            let target: Vec<f32> = uniform(1, n, 0.0, 1.0, seed + 2).into_data();
            let mut obj = ScorerObjective {
                model: &mut model,
                features: &x,
                target: &target,
                loss_scale: 1.0,
            };
            let report = finite_diff_check(&mut obj, tolerance, 32, seed);
            if !report.passed() {
                return Err(format!("{kind:?} pe={pe} n={n} d={d}: {report:?}"));
            }
            summary.cases += 1;
            summary.checked += report
                .blocks
                .iter()
                .map(|b| b.coords_checked)
                .sum::<usize>();
            summary.skipped += report
                .blocks
                .iter()
                .map(|b| b.coords_skipped)
                .sum::<usize>();
            summary.max_error = summary.max_error.max(report.max_error());
        }
    }
    Ok(summary)
}

/// Doubles the analytic gradient of the first block.
struct Corrupted<'a>(ScorerObjective<'a>);

impl Objective for Corrupted<'_> {
    fn block_count(&self) -> usize {
        self.0.block_count()
    }
    fn block(&mut self, i: usize) -> &mut Parameter {
        self.0.block(i)
    }
    fn loss(&mut self) -> f64 {
        self.0.loss()
    }
    fn loss_and_grad(&mut self) -> f64 {
        let l = self.0.loss_and_grad();
        self.0.block(0).grad.scale(2.0);
        l
    }
}

/// Error the check reports on a ×2 corruption of one block's gradient.
/// The check must fail, and the corrupted block must be the one that
/// fails.
pub fn planted_bug_error(tolerance: f64) -> Result<f64, String> {
    let mut model = ScorerModel::build(small_scorer(ScorerKind::Attention, false, 6), 3)
        .map_err(|e| e.to_string())?;
    let x = uniform(6, 6, -1.0, 1.0, 4);
    let target = vec![0.0; 6];
    // the scale lifts gradients above 1 so the relative error is visible
    let mut obj = Corrupted(ScorerObjective {
        model: &mut model,
        features: &x,
        target: &target,
        loss_scale: 1000.0,
    });
    let report = finite_diff_check(&mut obj, tolerance, 32, 5);
    if report.passed() {
        return Err(String::from("corrupted gradient passed the check"));
    }
    let planted = report.blocks[0].max_rel_error;
    // the loss scale amplifies f32 noise elsewhere, but far below the bug
    if let Some(b) = report.blocks[1..].iter().find(|b| b.max_rel_error >= 0.05) {
        return Err(format!(
            "untouched block {} reports {:.3e}",
            b.name, b.max_rel_error
        ));
    }
    Ok(planted)
}
