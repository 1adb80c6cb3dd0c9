//! Frame-importance scorers mapping an `N×D` feature sequence to `N` scores
//! in `(0, 1)`.
//!
//! * `mlp` scores every frame independently.
//! * `attention` is a single self-attention block with a residual, layer
//!   norm and a two-layer regressor. Without positional encoding it is
//!   permutation-equivariant.
//! * `segmented_attention` runs local attention inside fixed consecutive
//!   segments and global attention over the whole sequence, adds the two,
//!   then applies the same residual/norm/regressor head.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::nn::{
    mse_loss, positional_encoding, relu, relu_backward, sigmoid, sigmoid_backward, AttentionCache,
    Dense, Dropout, DropoutMask, LayerNorm, LayerNormCache, MultiHeadAttention, Objective,
    Parameter,
};
use crate::rng::{seeded, SeededRng};
use crate::{Error, Result, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    Mlp,
    Attention,
    SegmentedAttention,
}

fn default_true() -> bool {
    true
}
fn default_dropout() -> f32 {
    0.5
}
fn default_1024() -> usize {
    1024
}
fn default_heads() -> usize {
    1
}
fn default_local_heads() -> usize {
    4
}
fn default_global_heads() -> usize {
    8
}
fn default_segments() -> usize {
    4
}
fn default_frequency() -> f64 {
    10_000.0
}
fn default_hidden() -> Vec<usize> {
    vec![1024, 512]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScorerConfig {
    pub kind: ScorerKind,
    #[serde(default = "default_1024")]
    pub input_dim: usize,
    #[serde(default = "default_true")]
    pub use_positional_encoding: bool,
    #[serde(default = "default_dropout")]
    pub dropout_rate: f32,
    #[serde(default = "default_1024")]
    pub attention_dim: usize,
    #[serde(default = "default_1024")]
    pub ffn_dim: usize,
    #[serde(default = "default_heads")]
    pub heads: usize,
    #[serde(default = "default_local_heads")]
    pub local_heads: usize,
    #[serde(default = "default_global_heads")]
    pub global_heads: usize,
    #[serde(default = "default_segments")]
    pub segments: usize,
    #[serde(default = "default_frequency")]
    pub pe_frequency: f64,
    #[serde(default = "default_hidden")]
    pub hidden_dims: Vec<usize>,
}

impl ScorerConfig {
    pub fn new(kind: ScorerKind, input_dim: usize) -> Self {
        Self {
            kind,
            input_dim,
            use_positional_encoding: kind != ScorerKind::Attention,
            dropout_rate: default_dropout(),
            attention_dim: default_1024(),
            ffn_dim: default_1024(),
            heads: default_heads(),
            local_heads: default_local_heads(),
            global_heads: default_global_heads(),
            segments: default_segments(),
            pe_frequency: default_frequency(),
            hidden_dims: default_hidden(),
        }
    }

    /// Short label used in comparison tables, e.g. `attention (+PC)`.
    pub fn label(&self) -> String {
        match self.kind {
            ScorerKind::Mlp => String::from("mlp"),
            ScorerKind::Attention => {
                let pc = if self.use_positional_encoding {
                    '+'
                } else {
                    '-'
                };
                format!("attention ({pc}PC)")
            }
            ScorerKind::SegmentedAttention => {
                if self.use_positional_encoding {
                    String::from("segmented_attention")
                } else {
                    String::from("segmented_attention (-PC)")
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.input_dim == 0 || self.attention_dim == 0 || self.ffn_dim == 0 {
            return bad(String::from("dimensions must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout rate {} outside [0, 1)", self.dropout_rate));
        }
        if self.segments == 0 {
            return bad(String::from("segments must be at least 1"));
        }
        if self.use_positional_encoding
            && self.kind != ScorerKind::Mlp
            && !self.input_dim.is_multiple_of(2)
        {
            return bad(format!(
                "positional encoding needs an even input dimension, got {}",
                self.input_dim
            ));
        }
        if self.pe_frequency.is_nan() || self.pe_frequency <= 0.0 {
            return bad(String::from(
                "positional encoding frequency must be positive",
            ));
        }
        let divisible = |heads: usize, what: &str| {
            if heads == 0 || !self.attention_dim.is_multiple_of(heads) {
                bad(format!(
                    "attention dimension {} is not divisible by {heads} {what}",
                    self.attention_dim
                ))
            } else {
                Ok(())
            }
        };
        match self.kind {
            ScorerKind::Mlp => {
                if self.hidden_dims.contains(&0) {
                    return bad(String::from("hidden dimensions must be positive"));
                }
                Ok(())
            }
            ScorerKind::Attention => divisible(self.heads, "heads"),
            ScorerKind::SegmentedAttention => {
                divisible(self.local_heads, "local heads")?;
                divisible(self.global_heads, "global heads")
            }
        }
    }
}

/// Shared scoring head: layer norm, `D → ffn` dense, ReLU, dropout,
/// `ffn → 1` dense, sigmoid.
#[derive(Clone, Debug, PartialEq)]
struct Regressor {
    norm: LayerNorm,
    fc1: Dense,
    fc2: Dense,
    dropout: Dropout,
}

#[derive(Clone, Debug)]
struct RegressorCache {
    norm: LayerNormCache,
    normed: Tensor,
    pre_relu: Tensor,
    mask: Option<DropoutMask>,
    hidden: Tensor,
    scores: Tensor,
}

impl Regressor {
    fn new(cfg: &ScorerConfig, rng: &mut SeededRng) -> Self {
        Self {
            norm: LayerNorm::new("head.norm", cfg.input_dim),
            fc1: Dense::new("head.fc1", cfg.input_dim, cfg.ffn_dim, rng),
            fc2: Dense::new("head.fc2", cfg.ffn_dim, 1, rng),
            dropout: Dropout::new(cfg.dropout_rate),
        }
    }

    fn forward(&self, h: &Tensor, rng: Option<&mut SeededRng>) -> Result<RegressorCache> {
        let (normed, norm) = self.norm.forward(h);
        let pre_relu = self.fc1.forward(&normed)?;
        let (hidden, mask) = self.dropout.forward(&relu(&pre_relu), rng);
        let scores = sigmoid(&self.fc2.forward(&hidden)?);
        Ok(RegressorCache {
            norm,
            normed,
            pre_relu,
            mask,
            hidden,
            scores,
        })
    }

    fn backward(&mut self, c: &RegressorCache, dscores: &Tensor) -> Tensor {
        let dlogit = sigmoid_backward(&c.scores, dscores);
        let dhidden = self.fc2.backward(&c.hidden, &dlogit);
        let drelu = self.dropout.backward(c.mask.as_ref(), &dhidden);
        let dnormed = self
            .fc1
            .backward(&c.normed, &relu_backward(&c.pre_relu, &drelu));
        self.norm.backward(&c.norm, &dnormed)
    }

    fn params(&self) -> Vec<&Parameter> {
        let mut v = Vec::with_capacity(6);
        v.extend(self.norm.params());
        v.extend(self.fc1.params());
        v.extend(self.fc2.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let mut v = Vec::with_capacity(6);
        v.extend(self.norm.params_mut());
        v.extend(self.fc1.params_mut());
        v.extend(self.fc2.params_mut());
        v
    }
}

#[derive(Clone, Debug, PartialEq)]
struct MlpNet {
    layers: Vec<Dense>,
    dropout: Dropout,
}

#[derive(Clone, Debug, PartialEq)]
struct AttentionNet {
    attention: MultiHeadAttention,
    head: Regressor,
}

#[derive(Clone, Debug, PartialEq)]
struct SegmentedNet {
    global: MultiHeadAttention,
    local: Vec<MultiHeadAttention>,
    head: Regressor,
}

#[derive(Clone, Debug, PartialEq)]
enum Network {
    Mlp(MlpNet),
    Attention(AttentionNet),
    Segmented(SegmentedNet),
}

/// Intermediate values of one forward pass, consumed by
/// [`ScorerModel::backward`].
#[derive(Clone, Debug)]
pub struct ForwardCache(CacheInner);

#[derive(Clone, Debug)]
enum CacheInner {
    Mlp {
        inputs: Vec<Tensor>,
        pre_relu: Vec<Tensor>,
        masks: Vec<Option<DropoutMask>>,
        scores: Tensor,
    },
    Attention {
        attention: AttentionCache,
        head: RegressorCache,
    },
    Segmented {
        global: AttentionCache,
        local: Vec<(usize, usize, AttentionCache)>,
        head: RegressorCache,
    },
}

impl ForwardCache {
    /// Attention matrices of the (global) attention branch, one per head.
    pub fn attention_weights(&self) -> Option<&[Tensor]> {
        match &self.0 {
            CacheInner::Mlp { .. } => None,
            CacheInner::Attention { attention, .. } => Some(&attention.weights),
            CacheInner::Segmented { global, .. } => Some(&global.weights),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScorerModel {
    config: ScorerConfig,
    net: Network,
}

/// Consecutive `[start, end)` blocks: `segments` blocks of `⌊n/segments⌋`
/// frames with the remainder in the last one. Sequences shorter than the
/// segment count get one frame per block.
pub fn segment_bounds(n: usize, segments: usize) -> Vec<(usize, usize)> {
    if n == 0 {
        return Vec::new();
    }
    let segments = segments.clamp(1, n);
    let len = n / segments;
    (0..segments)
        .map(|s| {
            let end = if s + 1 == segments { n } else { (s + 1) * len };
            (s * len, end)
        })
        .collect()
}

impl ScorerModel {
    /// Glorot-uniform weights, zero biases, unit layer-norm gains.
    pub fn build(config: ScorerConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = seeded(seed);
        let cfg = &config;
        let net = match cfg.kind {
            ScorerKind::Mlp => {
                let mut dims = vec![cfg.input_dim];
                dims.extend(&cfg.hidden_dims);
                dims.push(1);
                let layers = dims
                    .windows(2)
                    .enumerate()
                    .map(|(i, w)| Dense::new(&format!("mlp.{i}"), w[0], w[1], &mut rng))
                    .collect();
                Network::Mlp(MlpNet {
                    layers,
                    dropout: Dropout::new(cfg.dropout_rate),
                })
            }
            ScorerKind::Attention => Network::Attention(AttentionNet {
                attention: MultiHeadAttention::new(
                    "attention",
                    cfg.input_dim,
                    cfg.attention_dim,
                    cfg.heads,
                    &mut rng,
                )?,
                head: Regressor::new(cfg, &mut rng),
            }),
            ScorerKind::SegmentedAttention => {
                let global = MultiHeadAttention::new(
                    "global",
                    cfg.input_dim,
                    cfg.attention_dim,
                    cfg.global_heads,
                    &mut rng,
                )?;
                let local = (0..cfg.segments)
                    .map(|s| {
                        MultiHeadAttention::new(
                            &format!("local.{s}"),
                            cfg.input_dim,
                            cfg.attention_dim,
                            cfg.local_heads,
                            &mut rng,
                        )
                    })
                    .collect::<Result<_>>()?;
                Network::Segmented(SegmentedNet {
                    global,
                    local,
                    head: Regressor::new(cfg, &mut rng),
                })
            }
        };
        Ok(Self { config, net })
    }

    pub fn config(&self) -> &ScorerConfig {
        &self.config
    }

    pub fn parameters(&self) -> Vec<&Parameter> {
        match &self.net {
            Network::Mlp(m) => m.layers.iter().flat_map(|l| l.params()).collect(),
            Network::Attention(a) => {
                let mut v: Vec<&Parameter> = a.attention.params().into_iter().collect();
                v.extend(a.head.params());
                v
            }
            Network::Segmented(s) => {
                let mut v: Vec<&Parameter> = s.global.params().into_iter().collect();
                for l in &s.local {
                    v.extend(l.params());
                }
                v.extend(s.head.params());
                v
            }
        }
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        match &mut self.net {
            Network::Mlp(m) => m.layers.iter_mut().flat_map(|l| l.params_mut()).collect(),
            Network::Attention(a) => {
                let mut v: Vec<&mut Parameter> = a.attention.params_mut().into_iter().collect();
                v.extend(a.head.params_mut());
                v
            }
            Network::Segmented(s) => {
                let mut v: Vec<&mut Parameter> = s.global.params_mut().into_iter().collect();
                for l in &mut s.local {
                    v.extend(l.params_mut());
                }
                v.extend(s.head.params_mut());
                v
            }
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        self.parameters_mut()
            .into_iter()
            .for_each(Parameter::zero_grad);
    }

    /// Evaluation-mode scores (dropout disabled).
    pub fn score(&self, features: &Tensor) -> Result<Vec<f32>> {
        self.forward(features, None).map(|(s, _)| s)
    }

    /// Scores every frame. Passing a generator enables dropout (training
    /// mode); `None` is evaluation mode and is deterministic.
    pub fn forward(
        &self,
        features: &Tensor,
        mut rng: Option<&mut SeededRng>,
    ) -> Result<(Vec<f32>, ForwardCache)> {
        if features.shape().len() != 2 || features.cols() != self.config.input_dim {
            return Err(Error::ShapeMismatch {
                op: "score_frames",
                expected: vec![features.rows(), self.config.input_dim],
                got: features.shape().to_vec(),
            });
        }
        if features.rows() == 0 {
            return Err(Error::Empty("score_frames"));
        }
        let cache = match &self.net {
            Network::Mlp(m) => {
                let last = m.layers.len() - 1;
                let mut inputs = Vec::with_capacity(m.layers.len());
                let mut pre_relu = Vec::with_capacity(last);
                let mut masks = Vec::with_capacity(last);
                let mut x = features.clone();
                for (i, layer) in m.layers.iter().enumerate() {
                    let z = layer.forward(&x)?;
                    inputs.push(x);
                    if i == last {
                        x = sigmoid(&z);
                    } else {
                        let (h, mask) = m.dropout.forward(&relu(&z), rng.as_deref_mut());
                        pre_relu.push(z);
                        masks.push(mask);
                        x = h;
                    }
                }
                CacheInner::Mlp {
                    inputs,
                    pre_relu,
                    masks,
                    scores: x,
                }
            }
            Network::Attention(a) => {
                let x0 = self.encoded_input(features)?;
                let (att, attention) = a.attention.forward(&x0)?;
                let head = a.head.forward(&x0.add(&att), rng)?;
                CacheInner::Attention { attention, head }
            }
            Network::Segmented(s) => {
                let x0 = self.encoded_input(features)?;
                let (mut fused, global) = s.global.forward(&x0)?;
                let mut local = Vec::new();
                for (b, (start, end)) in segment_bounds(x0.rows(), self.config.segments)
                    .into_iter()
                    .enumerate()
                {
                    let (out, c) = s.local[b].forward(&x0.slice_rows(start, end))?;
                    let d = fused.cols();
                    for (i, row) in (start..end).enumerate() {
                        fused.data_mut()[row * d..(row + 1) * d]
                            .iter_mut()
                            .zip(out.row(i))
                            .for_each(|(f, o)| *f += o);
                    }
                    local.push((start, end, c));
                }
                let head = s.head.forward(&x0.add(&fused), rng)?;
                CacheInner::Segmented {
                    global,
                    local,
                    head,
                }
            }
        };
        let scores = match &cache {
            CacheInner::Mlp { scores, .. } => scores.data().to_vec(),
            CacheInner::Attention { head, .. } | CacheInner::Segmented { head, .. } => {
                head.scores.data().to_vec()
            }
        };
        Ok((scores, ForwardCache(cache)))
    }

    fn encoded_input(&self, features: &Tensor) -> Result<Tensor> {
        if self.config.use_positional_encoding {
            let pe = positional_encoding(
                features.rows(),
                self.config.input_dim,
                self.config.pe_frequency,
            )?;
            Ok(features.add(&pe))
        } else {
            Ok(features.clone())
        }
    }

    /// Accumulates parameter gradients for `dL/dscores`.
    pub fn backward(&mut self, cache: &ForwardCache, dscores: &[f32]) {
        let dy = Tensor::matrix(dscores.len(), 1, dscores.to_vec())
            .expect("column vector shape always matches");
        match (&mut self.net, &cache.0) {
            (
                Network::Mlp(m),
                CacheInner::Mlp {
                    inputs,
                    pre_relu,
                    masks,
                    scores,
                },
            ) => {
                let last = m.layers.len() - 1;
                let mut g = sigmoid_backward(scores, &dy);
                for i in (0..=last).rev() {
                    if i != last {
                        g = m.dropout.backward(masks[i].as_ref(), &g);
                        g = relu_backward(&pre_relu[i], &g);
                    }
                    g = m.layers[i].backward(&inputs[i], &g);
                }
            }
            (Network::Attention(a), CacheInner::Attention { attention, head }) => {
                let dh = a.head.backward(head, &dy);
                a.attention.backward(attention, &dh);
            }
            (
                Network::Segmented(s),
                CacheInner::Segmented {
                    global,
                    local,
                    head,
                },
            ) => {
                let dh = s.head.backward(head, &dy);
                s.global.backward(global, &dh);
                for (b, (start, end, c)) in local.iter().enumerate() {
                    s.local[b].backward(c, &dh.slice_rows(*start, *end));
                }
            }
            _ => panic!("forward cache does not belong to this model"),
        }
    }

    /// Replaces parameter values in `parameters()` order. Shapes must match.
    pub fn load_values(&mut self, values: Vec<Tensor>) -> Result<()> {
        let mut params = self.parameters_mut();
        if params.len() != values.len() {
            return Err(Error::LengthMismatch {
                op: "load_values",
                expected: params.len(),
                got: values.len(),
            });
        }
        for (p, v) in params.iter().zip(&values) {
            if p.shape() != v.shape() {
                return Err(Error::ShapeMismatch {
                    op: "load_values",
                    expected: p.shape().to_vec(),
                    got: v.shape().to_vec(),
                });
            }
        }
        for (p, v) in params.iter_mut().zip(values) {
            p.value = v;
        }
        Ok(())
    }
}

/// MSE of a scorer's evaluation-mode output against fixed targets, as an
/// [`Objective`] for gradient checking. `loss_scale` multiplies the loss.
pub struct ScorerObjective<'a> {
    pub model: &'a mut ScorerModel,
    pub features: &'a Tensor,
    pub target: &'a [f32],
    pub loss_scale: f64,
}

impl Objective for ScorerObjective<'_> {
    fn block_count(&self) -> usize {
        self.model.parameters().len()
    }

    fn block(&mut self, i: usize) -> &mut Parameter {
        self.model.parameters_mut().swap_remove(i)
    }

    fn loss(&mut self) -> f64 {
        let scores = self
            .model
            .score(self.features)
            .expect("shapes fixed at construction");
        mse_loss(&scores, self.target)
            .expect("lengths fixed at construction")
            .0
            * self.loss_scale
    }

    fn loss_and_grad(&mut self) -> f64 {
        let (scores, cache) = self
            .model
            .forward(self.features, None)
            .expect("shapes fixed at construction");
        let (loss, mut grad) =
            mse_loss(&scores, self.target).expect("lengths fixed at construction");
        grad.iter_mut()
            .for_each(|g| *g = (f64::from(*g) * self.loss_scale) as f32);
        self.model.backward(&cache, &grad);
        loss * self.loss_scale
    }
}
