use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::models::{ScorerConfig, ScorerKind};
use crate::perturb::{ShuffleSpec, Strategy};
use crate::{Error, Result};

/// How training batches are formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Paradigm {
    /// Batches of frames drawn from all training videos and time steps.
    InvariantFrameBatch,
    /// One whole video per step.
    #[default]
    FullVideo,
}

/// When stochastic training shuffles are redrawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShuffleSchedule {
    /// A fresh permutation for every (video, epoch).
    #[default]
    PerEpoch,
    /// One permutation per video for the whole run.
    FixedPerVideo,
}

fn default_p() -> f64 {
    0.5
}
fn default_aug_strategies() -> Vec<Strategy> {
    vec![Strategy::Flip, Strategy::FixedSegment]
}
fn default_segments() -> usize {
    4
}
fn default_window() -> usize {
    3
}

/// Random temporal perturbation applied to a training video with
/// probability `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentationConfig {
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_aug_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_segments", alias = "M")]
    pub segments: usize,
    #[serde(default = "default_window", alias = "w")]
    pub window: usize,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            p: default_p(),
            strategies: default_aug_strategies(),
            segments: default_segments(),
            window: default_window(),
        }
    }
}

fn default_permutations() -> usize {
    3
}
fn default_folds() -> usize {
    5
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_permutations")]
    pub permutations: usize,
    #[serde(default = "default_folds")]
    pub folds: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            permutations: default_permutations(),
            folds: default_folds(),
        }
    }
}

fn default_epochs() -> usize {
    50
}
fn default_lr() -> f64 {
    5e-5
}
fn default_weight_decay() -> f64 {
    1e-5
}
fn default_clip() -> f64 {
    3.0
}

pub const INVARIANT_BATCH_SIZE: usize = 128;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    /// Dataset directory. Resolved by the caller; the core never touches it.
    #[serde(default)]
    pub dataset: String,
    pub model: ScorerConfig,
    #[serde(default)]
    pub paradigm: Paradigm,
    #[serde(default)]
    pub shuffle: Option<ShuffleSpec>,
    #[serde(default)]
    pub shuffle_schedule: ShuffleSchedule,
    #[serde(default)]
    pub augmentation: Option<AugmentationConfig>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_weight_decay")]
    pub weight_decay: f64,
    #[serde(default = "default_clip")]
    pub clip_norm: f64,
    /// Frames per step for the invariant paradigm. Full-video training
    /// always uses one video.
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub splits: SplitConfig,
    /// Root of every seed used for model initialisation, dropout, batch
    /// sampling and training shuffles.
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(name: impl Into<String>, model: ScorerConfig, paradigm: Paradigm) -> Self {
        Self {
            name: name.into(),
            dataset: String::new(),
            model,
            paradigm,
            shuffle: None,
            shuffle_schedule: ShuffleSchedule::default(),
            augmentation: None,
            epochs: default_epochs(),
            lr: default_lr(),
            weight_decay: default_weight_decay(),
            clip_norm: default_clip(),
            batch_size: None,
            splits: SplitConfig::default(),
            seed: 0,
        }
    }

    /// Frames per step (invariant) or videos per step (full video).
    pub fn effective_batch_size(&self) -> usize {
        match self.paradigm {
            Paradigm::InvariantFrameBatch => self.batch_size.unwrap_or(INVARIANT_BATCH_SIZE),
            Paradigm::FullVideo => 1,
        }
    }

    /// Row label for comparison tables.
    pub fn perturbation_label(&self) -> String {
        match (&self.shuffle, &self.augmentation) {
            (Some(s), _) => String::from(strategy_title(s.strategy)),
            (None, Some(a)) => format!("Augmented (p={})", a.p),
            (None, None) => String::from(UNSHUFFLED),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        self.model.validate()?;
        if self.epochs == 0 {
            return bad(String::from("epochs must be at least 1"));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return bad(format!(
                "learning rate {} must be finite and non-negative",
                self.lr
            ));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad(format!(
                "weight decay {} must be finite and non-negative",
                self.weight_decay
            ));
        }
        if !(self.clip_norm.is_finite() && self.clip_norm > 0.0) {
            return bad(format!("clip norm {} must be positive", self.clip_norm));
        }
        if self.splits.folds < 2 || self.splits.permutations == 0 {
            return bad(format!(
                "splits need at least 2 folds and 1 permutation, got {} and {}",
                self.splits.folds, self.splits.permutations
            ));
        }
        match self.paradigm {
            Paradigm::InvariantFrameBatch => {
                if self.shuffle.is_some() || self.augmentation.is_some() {
                    return bad(String::from(
                        "shuffle and augmentation do not apply to invariant_frame_batch training",
                    ));
                }
                if self.batch_size == Some(0) {
                    return bad(String::from("batch_size must be positive"));
                }
                let order_free = match self.model.kind {
                    ScorerKind::Mlp => true,
                    ScorerKind::Attention => !self.model.use_positional_encoding,
                    ScorerKind::SegmentedAttention => false,
                };
                if !order_free {
                    return bad(format!(
                        "invariant_frame_batch needs mlp or attention without positional encoding, got {}",
                        self.model.label()
                    ));
                }
            }
            Paradigm::FullVideo => {
                if !matches!(self.batch_size, None | Some(1)) {
                    return bad(String::from("full_video training uses one video per step"));
                }
                if self.shuffle.is_some() && self.augmentation.is_some() {
                    return bad(String::from("shuffle and augmentation are alternatives"));
                }
            }
        }
        if let Some(s) = &self.shuffle {
            s.validate()?;
        }
        if let Some(a) = &self.augmentation {
            if !(0.0..=1.0).contains(&a.p) {
                return bad(format!("augmentation probability {} outside [0, 1]", a.p));
            }
            if a.strategies.is_empty() {
                return bad(String::from("augmentation needs at least one strategy"));
            }
            for &strategy in &a.strategies {
                ShuffleSpec {
                    strategy,
                    segments: a.segments,
                    window: a.window,
                    seed: 0,
                }
                .validate()?;
            }
        }
        Ok(())
    }
}

pub const UNSHUFFLED: &str = "Unshuffled";

/// Display name used for table rows.
pub fn strategy_title(s: Strategy) -> &'static str {
    match s {
        Strategy::Flip => "Flip",
        Strategy::FixedSegment => "Fixed Segment",
        Strategy::IntraShot => "Intra Shot",
        Strategy::NeighbourShot => "Neighbouring Shot",
        Strategy::AnyShot => "Any Shot",
    }
}
