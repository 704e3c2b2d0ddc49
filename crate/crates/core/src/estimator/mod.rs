//! Pairwise repost-probability estimator.
//!
//! The probability that recipient `r` reposts content `c` shared by `s` is
//!
//! ```text
//! sigmoid( sum_j x_r[j] * x_c[j] * x_s[j] )
//! ```
//!
//! where `x_r = MLP_user(E[r])`, `x_s = MLP_user(E[s])` share one user tower over a
//! learnable embedding table `E`, and `x_c = MLP_content(e_c)` projects a fixed
//! sentence embedding of the post text. Training is mean squared error against
//! 0/1 repost labels.

mod checkpoint;
mod dataset;
mod gradcheck;
pub(crate) mod mlp;
mod train;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use checkpoint::{CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use dataset::{build_training_dataset, InteractionInstance};
pub use gradcheck::{gradient_check, gradient_check_with, GradCheckOptions, GradCheckReport};
pub use mlp::Activation;
pub use train::{dataset_loss, train, Optimizer, TrainConfig, TrainOutcome};

use crate::cascade::{EdgeProbabilityMap, ProbabilityMode};
use crate::error::{Error, Result};
use crate::graph::{SocialGraph, UserId};
use crate::rng::{self, Rng};
use mlp::{Mlp, MlpGrads};

/// Dimension of the sentence embeddings the content tower consumes.
pub const CONTENT_DIM: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub user_count: usize,
    /// User tower `[embedding, hidden, projection]`.
    pub user_dims: [usize; 3],
    /// Content tower `[embedding, hidden, projection]`.
    pub content_dims: [usize; 3],
    pub dropout: f64,
    pub activation: Activation,
}

impl ModelConfig {
    pub fn new(user_count: usize) -> Self {
        Self {
            user_count,
            user_dims: [32, 64, 32],
            content_dims: [CONTENT_DIM, 128, 32],
            dropout: 0.5,
            activation: Activation::Relu,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.user_dims[2] != self.content_dims[2] {
            return Err(Error::InvalidArgument(
                "user and content projections must share a dimension".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidArgument("dropout must lie in [0, 1)".into()));
        }
        if self.user_dims.contains(&0) || self.content_dims.contains(&0) {
            return Err(Error::InvalidArgument("layer dimensions must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorModel {
    pub(crate) config: ModelConfig,
    /// Row-major `user_count x user_dims[0]`.
    pub(crate) user_embeddings: Vec<f64>,
    pub(crate) user_mlp: Mlp,
    pub(crate) content_mlp: Mlp,
}

pub(crate) const TENSOR_NAMES: [&str; 9] = [
    "user_embeddings",
    "user_mlp.hidden.weight",
    "user_mlp.hidden.bias",
    "user_mlp.output.weight",
    "user_mlp.output.bias",
    "content_mlp.hidden.weight",
    "content_mlp.hidden.bias",
    "content_mlp.output.weight",
    "content_mlp.output.bias",
];

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// The bilinear score on already-projected vectors: `sigmoid(sum x_r * x_c * x_s)`.
pub fn score_projections(recipient: &[f64], content: &[f64], creator: &[f64]) -> f64 {
    sigmoid(triple_dot(recipient, content, creator))
}

/// Which user fills the creator slot when scoring a cascade edge `(v -> w)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeAttribution {
    /// `P(w, v, c)`: a follower reacts to whoever they saw it from.
    #[default]
    Sharer,
    /// `P(w, u, c)` with `u` the post's creator on every edge, the pairing the
    /// estimator is trained on.
    Creator,
}

impl EdgeAttribution {
    fn source(self, creator: UserId, sharer: UserId) -> UserId {
        match self {
            EdgeAttribution::Sharer => sharer,
            EdgeAttribution::Creator => creator,
        }
    }
}

fn triple_dot(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    a.iter().zip(b).zip(c).map(|((x, y), z)| x * y * z).sum()
}

impl EstimatorModel {
    /// Fresh model: user embeddings ~ Normal(0, 0.1), layers uniform in ±1/sqrt(fan_in).
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::seeded(seed);
        let normal = Normal::new(0.0, 0.1).expect("valid normal");
        let user_embeddings = (0..config.user_count * config.user_dims[0])
            .map(|_| normal.sample(&mut rng))
            .collect();
        let user_mlp = Mlp::init(config.user_dims, config.activation, &mut rng);
        let content_mlp = Mlp::init(config.content_dims, config.activation, &mut rng);
        Ok(Self {
            config,
            user_embeddings,
            user_mlp,
            content_mlp,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn user_count(&self) -> usize {
        self.config.user_count
    }

    pub fn content_dim(&self) -> usize {
        self.config.content_dims[0]
    }

    pub(crate) fn embedding_row(&self, user: UserId) -> &[f64] {
        let d = self.config.user_dims[0];
        &self.user_embeddings[user as usize * d..(user as usize + 1) * d]
    }

    fn check_inputs(&self, users: &[UserId], content: &[f64]) -> Result<()> {
        for &u in users {
            if u as usize >= self.config.user_count {
                return Err(Error::UnknownUser(u));
            }
        }
        if content.len() != self.content_dim() {
            return Err(Error::InvalidArgument(format!(
                "content embedding has dimension {}, expected {}",
                content.len(),
                self.content_dim()
            )));
        }
        if content.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("content embedding"));
        }
        Ok(())
    }

    pub fn user_projection(&self, user: UserId) -> Vec<f64> {
        self.user_mlp.forward(self.embedding_row(user))
    }

    pub fn content_projection(&self, content: &[f64]) -> Vec<f64> {
        self.content_mlp.forward(content)
    }

    /// Repost probability. Dropout is applied only when `training` is set.
    pub fn forward(
        &self,
        recipient: UserId,
        creator: UserId,
        content: &[f64],
        training: bool,
        rng: &mut Rng,
    ) -> Result<f64> {
        self.check_inputs(&[recipient, creator], content)?;
        if !training {
            return Ok(self.predict_unchecked(recipient, creator, content));
        }
        let rate = Some(self.config.dropout);
        let x_r = self.user_mlp.trace(self.embedding_row(recipient), rate, Some(rng)).output;
        let x_s = self.user_mlp.trace(self.embedding_row(creator), rate, Some(rng)).output;
        let x_c = self.content_mlp.trace(content, rate, Some(rng)).output;
        Ok(score_projections(&x_r, &x_c, &x_s))
    }

    /// Inference-mode probability.
    pub fn predict(&self, recipient: UserId, creator: UserId, content: &[f64]) -> Result<f64> {
        self.check_inputs(&[recipient, creator], content)?;
        Ok(self.predict_unchecked(recipient, creator, content))
    }

    fn predict_unchecked(&self, recipient: UserId, creator: UserId, content: &[f64]) -> f64 {
        score_projections(
            &self.user_projection(recipient),
            &self.content_projection(content),
            &self.user_projection(creator),
        )
    }

    /// Learned probabilities for every edge reachable from `creator`.
    ///
    /// Edge `(v -> w)` gets `P(w, s, c)` where `s` is `v` or `creator` per
    /// `attribution`. Edges outside the creator's reachable subgraph are never
    /// traversed and stay 0.
    pub fn edge_probabilities_for_content(
        &self,
        graph: &SocialGraph,
        creator: UserId,
        content: &[f64],
        attribution: EdgeAttribution,
    ) -> Result<EdgeProbabilityMap> {
        self.check_inputs(&[], content)?;
        if graph.user_count() > self.config.user_count {
            return Err(Error::InvalidArgument(format!(
                "graph has {} users but the model only {}",
                graph.user_count(),
                self.config.user_count
            )));
        }
        let reachable = graph.reachable(creator)?;
        let x_c = self.content_projection(content);
        let mut projections: Vec<Option<Vec<f64>>> = vec![None; graph.user_count()];
        for &u in &reachable {
            projections[u as usize] = Some(self.user_projection(u));
        }
        let mut map = EdgeProbabilityMap::new(ProbabilityMode::Learned, vec![0.0; graph.edge_count()])?;
        for &v in &reachable {
            let x_v = projections[attribution.source(creator, v) as usize].as_deref().expect("reachable");
            let range = graph.edge_range(v);
            for (offset, &w) in graph.followers(v).iter().enumerate() {
                let x_w = projections[w as usize].as_deref().expect("reachable");
                map.set_by_index(range.start + offset, score_projections(x_w, &x_c, x_v));
            }
        }
        Ok(map)
    }

    /// Snapshot with every user projection precomputed, for repeated inference.
    pub fn frozen(&self) -> FrozenEstimator<'_> {
        let dim = self.config.user_dims[2];
        let mut user_projections = Vec::with_capacity(self.config.user_count * dim);
        for u in 0..self.config.user_count as UserId {
            user_projections.extend(self.user_projection(u));
        }
        FrozenEstimator {
            model: self,
            user_projections,
        }
    }

    pub(crate) fn tensors(&self) -> [&[f64]; 9] {
        [
            &self.user_embeddings,
            &self.user_mlp.hidden.weight,
            &self.user_mlp.hidden.bias,
            &self.user_mlp.output.weight,
            &self.user_mlp.output.bias,
            &self.content_mlp.hidden.weight,
            &self.content_mlp.hidden.bias,
            &self.content_mlp.output.weight,
            &self.content_mlp.output.bias,
        ]
    }

    pub(crate) fn tensors_mut(&mut self) -> [&mut Vec<f64>; 9] {
        [
            &mut self.user_embeddings,
            &mut self.user_mlp.hidden.weight,
            &mut self.user_mlp.hidden.bias,
            &mut self.user_mlp.output.weight,
            &mut self.user_mlp.output.bias,
            &mut self.content_mlp.hidden.weight,
            &mut self.content_mlp.hidden.bias,
            &mut self.content_mlp.output.weight,
            &mut self.content_mlp.output.bias,
        ]
    }

    pub(crate) fn tensor_shapes(&self) -> [Vec<usize>; 9] {
        let [ue, uh, up] = self.config.user_dims;
        let [ce, ch, cp] = self.config.content_dims;
        [
            vec![self.config.user_count, ue],
            vec![uh, ue],
            vec![uh],
            vec![up, uh],
            vec![up],
            vec![ch, ce],
            vec![ch],
            vec![cp, ch],
            vec![cp],
        ]
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }
}

/// Inference view of a model with cached user projections.
pub struct FrozenEstimator<'a> {
    model: &'a EstimatorModel,
    user_projections: Vec<f64>,
}

impl FrozenEstimator<'_> {
    pub fn model(&self) -> &EstimatorModel {
        self.model
    }

    fn projection(&self, user: UserId) -> &[f64] {
        let d = self.model.config.user_dims[2];
        &self.user_projections[user as usize * d..(user as usize + 1) * d]
    }

    pub fn predict(&self, recipient: UserId, creator: UserId, content: &[f64]) -> Result<f64> {
        self.model.check_inputs(&[recipient, creator], content)?;
        let x_c = self.model.content_projection(content);
        Ok(score_projections(self.projection(recipient), &x_c, self.projection(creator)))
    }

    /// Same result as [`EstimatorModel::edge_probabilities_for_content`].
    pub fn edge_probabilities(
        &self,
        graph: &SocialGraph,
        creator: UserId,
        content: &[f64],
        attribution: EdgeAttribution,
    ) -> Result<EdgeProbabilityMap> {
        self.model.check_inputs(&[], content)?;
        if graph.user_count() > self.model.config.user_count {
            return Err(Error::InvalidArgument("graph larger than model".into()));
        }
        let reachable = graph.reachable(creator)?;
        let x_c = self.model.content_projection(content);
        let mut map = EdgeProbabilityMap::new(ProbabilityMode::Learned, vec![0.0; graph.edge_count()])?;
        for &v in &reachable {
            let range = graph.edge_range(v);
            for (offset, &w) in graph.followers(v).iter().enumerate() {
                map.set_by_index(
                    range.start + offset,
                    score_projections(self.projection(w), &x_c, self.projection(attribution.source(creator, v))),
                );
            }
        }
        Ok(map)
    }
}

/// Gradient buffers laid out like the model's tensors.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ModelGrads {
    pub user_embeddings: Vec<f64>,
    pub user_mlp: MlpGrads,
    pub content_mlp: MlpGrads,
}

impl ModelGrads {
    pub fn zeros_like(model: &EstimatorModel) -> Self {
        Self {
            user_embeddings: vec![0.0; model.user_embeddings.len()],
            user_mlp: MlpGrads::zeros_like(&model.user_mlp),
            content_mlp: MlpGrads::zeros_like(&model.content_mlp),
        }
    }

    pub fn tensors(&self) -> [&[f64]; 9] {
        [
            &self.user_embeddings,
            &self.user_mlp.hidden_weight,
            &self.user_mlp.hidden_bias,
            &self.user_mlp.output_weight,
            &self.user_mlp.output_bias,
            &self.content_mlp.hidden_weight,
            &self.content_mlp.hidden_bias,
            &self.content_mlp.output_weight,
            &self.content_mlp.output_bias,
        ]
    }
}
