use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::Rng;

use super::config::{ExperimentConfig, Paradigm, ShuffleSchedule};
use crate::dataset::{DatasetStyle, VideoRecord};
use crate::eval::{evaluate_video, VideoEvalResult};
use crate::models::ScorerModel;
use crate::nn::{clip_grad_norm, mse_loss, Adam};
use crate::perturb::{
    apply_permutation, generate_permutation, sample_augmentation_from, Permutation, ShuffleSpec,
    Strategy,
};
use crate::rng::{derive_seed, mix64, seeded, SeededRng};
use crate::{Error, Result, Tensor};

const SHUFFLE_STREAM: u64 = 0x5348;
const AUGMENT_STREAM: u64 = 0x4155;

/// Stable 64-bit hash of a video id, used to key per-video seeds.
pub fn id_hash(id: &str) -> u64 {
    id.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Optimiser state shared by both paradigms: clip, then one Adam step per
/// parameter block.
#[derive(Clone, Copy, Debug)]
pub struct Trainer {
    pub optimizer: Adam,
    pub clip_norm: f64,
}

impl Trainer {
    pub fn from_config(config: &ExperimentConfig) -> Self {
        Self {
            optimizer: Adam::new(config.lr, config.weight_decay),
            clip_norm: config.clip_norm,
        }
    }

    /// Forward in training mode, MSE against `target`, backward and update.
    /// Returns the loss before the update.
    pub fn step(
        &self,
        model: &mut ScorerModel,
        features: &Tensor,
        target: &[f32],
        rng: &mut SeededRng,
    ) -> Result<f64> {
        let (scores, cache) = model.forward(features, Some(rng))?;
        let (loss, grad) = mse_loss(&scores, target)?;
        model.backward(&cache, &grad);
        let mut params = model.parameters_mut();
        clip_grad_norm(&mut params, self.clip_norm);
        for p in params {
            self.optimizer.step(p);
        }
        Ok(loss)
    }
}

/// One epoch of temporally invariant training: `⌈pool / batch⌉` steps, each
/// on `batch` (frame, target) pairs drawn with replacement from the frames
/// of all training videos. Returns the mean step loss.
pub fn invariant_epoch(
    model: &mut ScorerModel,
    trainer: &Trainer,
    train: &[&VideoRecord],
    batch: usize,
    rng: &mut SeededRng,
) -> Result<f64> {
    let pool: Vec<(usize, usize)> = train
        .iter()
        .enumerate()
        .flat_map(|(v, r)| (0..r.frames()).map(move |f| (v, f)))
        .collect();
    if pool.is_empty() || batch == 0 {
        return Err(Error::Empty("invariant training pool"));
    }
    let d = train[0].feature_dim();
    let steps = pool.len().div_ceil(batch);
    let mut total = 0.0;
    let mut features = Vec::with_capacity(batch * d);
    let mut target = Vec::with_capacity(batch);
    for _ in 0..steps {
        features.clear();
        target.clear();
        for _ in 0..batch {
            let (v, f) = pool[rng.gen_range(0..pool.len())];
            features.extend_from_slice(train[v].features.row(f));
            target.push(train[v].ground_truth[f]);
        }
        let x = Tensor::matrix(batch, d, features.clone())?;
        total += trainer.step(model, &x, &target, rng)?;
    }
    Ok(total / steps as f64)
}

/// The permutation applied to `video` at `epoch` during full-video training,
/// or `None` for unperturbed training. Seeds are derived from `fold_seed`
/// and the video id only, never from the training generator, so turning a
/// perturbation off leaves every other random draw unchanged.
pub fn training_permutation(
    config: &ExperimentConfig,
    fold_seed: u64,
    epoch: usize,
    video: &VideoRecord,
) -> Result<Option<Permutation>> {
    let n = video.frames();
    let key = id_hash(&video.id);
    if let Some(spec) = &config.shuffle {
        let epoch_key = match config.shuffle_schedule {
            ShuffleSchedule::PerEpoch => epoch as u64,
            ShuffleSchedule::FixedPerVideo => u64::MAX,
        };
        let seed = derive_seed(
            fold_seed,
            &[SHUFFLE_STREAM, mix64(spec.seed), epoch_key, key],
        );
        if spec.strategy == Strategy::FixedSegment && n < 2 {
            return Ok(None);
        }
        let spec = ShuffleSpec {
            segments: spec.segments.min(n),
            ..spec.with_seed(seed)
        };
        return generate_permutation(&spec, n, Some(&video.shot_ids)).map(Some);
    }
    if let Some(a) = &config.augmentation {
        let seed = derive_seed(fold_seed, &[AUGMENT_STREAM, epoch as u64, key]);
        let perm = sample_augmentation_from(
            seed,
            a.p,
            &a.strategies,
            n,
            Some(&video.shot_ids),
            a.segments,
            a.window,
        )?;
        return Ok(if perm.is_identity() { None } else { Some(perm) });
    }
    Ok(None)
}

/// One epoch of full-video training: every training video once, in an order
/// drawn from `rng`, each possibly perturbed per [`training_permutation`].
pub fn full_video_epoch(
    model: &mut ScorerModel,
    trainer: &Trainer,
    train: &[&VideoRecord],
    config: &ExperimentConfig,
    fold_seed: u64,
    epoch: usize,
    rng: &mut SeededRng,
) -> Result<f64> {
    if train.is_empty() {
        return Err(Error::Empty("full-video training set"));
    }
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(rng);
    let mut total = 0.0;
    for &i in &order {
        let video = train[i];
        let loss = match training_permutation(config, fold_seed, epoch, video)? {
            Some(p) => {
                let shuffled = apply_permutation(video, &p)?;
                trainer.step(model, &shuffled.features, &shuffled.ground_truth, rng)?
            }
            None => trainer.step(model, &video.features, &video.ground_truth, rng)?,
        };
        total += loss;
    }
    Ok(total / order.len() as f64)
}

/// Seeds for one training run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunSeeds {
    pub init: u64,
    pub train: u64,
}

impl RunSeeds {
    pub fn from_fold_seed(fold_seed: u64) -> Self {
        Self {
            init: derive_seed(fold_seed, &[0]),
            train: derive_seed(fold_seed, &[1]),
        }
    }
}

fn train_with(
    train: &[&VideoRecord],
    config: &ExperimentConfig,
    seed: u64,
    paradigm: Paradigm,
) -> Result<ScorerModel> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let seeds = RunSeeds::from_fold_seed(seed);
    let mut model = ScorerModel::build(config.model.clone(), seeds.init)?;
    let trainer = Trainer::from_config(config);
    let mut rng = seeded(seeds.train);
    for epoch in 0..config.epochs {
        match paradigm {
            Paradigm::InvariantFrameBatch => invariant_epoch(
                &mut model,
                &trainer,
                train,
                config.effective_batch_size(),
                &mut rng,
            )?,
            Paradigm::FullVideo => {
                full_video_epoch(&mut model, &trainer, train, config, seed, epoch, &mut rng)?
            }
        };
    }
    Ok(model)
}

/// Trains a fresh model for `config.epochs` epochs of frame-batch training.
pub fn train_invariant(
    train: &[&VideoRecord],
    config: &ExperimentConfig,
    seed: u64,
) -> Result<ScorerModel> {
    if config.paradigm != Paradigm::InvariantFrameBatch {
        return Err(Error::InvalidConfig(alloc::string::String::from(
            "train_invariant needs the invariant_frame_batch paradigm",
        )));
    }
    train_with(train, config, seed, Paradigm::InvariantFrameBatch)
}

/// Trains a fresh model for `config.epochs` epochs of whole-video training.
pub fn train_full_video(
    train: &[&VideoRecord],
    config: &ExperimentConfig,
    seed: u64,
) -> Result<ScorerModel> {
    if config.paradigm != Paradigm::FullVideo {
        return Err(Error::InvalidConfig(alloc::string::String::from(
            "train_full_video needs the full_video paradigm",
        )));
    }
    train_with(train, config, seed, Paradigm::FullVideo)
}

/// Evaluation-mode scores of every test video in its original order.
pub fn evaluate_split(
    model: &ScorerModel,
    test: &[&VideoRecord],
    style: DatasetStyle,
) -> Result<Vec<VideoEvalResult>> {
    test.iter()
        .map(|v| evaluate_video(&model.score(&v.features)?, v, style))
        .collect()
}
