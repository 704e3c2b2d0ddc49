//! Experiment harness: strategy spread tables, singular-user lift, estimator
//! mode comparison, hop sweep and degree-group analysis.
//!
//! Original and revised spreads of a post always share the simulation seed
//! `derive_seed(base_seed, [post_id])`, so a gain only reflects the content
//! change. Every other random choice is derived from `master_seed`.

mod config;
mod estimator_eval;
mod oracle;
mod report;
mod singular;
mod strategy;
mod training;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rayon::prelude::*;

pub use config::{EmbedderConfig, ExperimentConfig};
pub use estimator_eval::{evaluate_estimator, EstimatorReport, ModeRow};
pub use oracle::TopicOracle;
pub use report::{write_report, Report};
pub use singular::{SingularRecord, SingularReport};
pub use strategy::{group_report, GroupInfo, GroupReport, GroupRow, HopCell, HopReport, PostRecord, StrategyReport};
pub use training::{train_on_corpus, TrainingSetup};

use crate::cascade::influence_spread;
use crate::dataio::{Corpus, Post, PostId, Split};
use crate::embed::{CommandEmbedder, Lexicon, LexiconEmbedder, TextEmbedder};
use crate::error::{Error, Result};
use crate::estimator::{EstimatorModel, FrozenEstimator};
use crate::graph::UserId;
use crate::llm::{ChatModel, LlmError, LlmGateway, LlmMode};
use crate::prompting::{PromptBuilder, PromptText};
use crate::rng;

// Tags separating the harness' random streams.
const FEWSHOT_TAG: u64 = 1;
const STRATEGY_TAG: u64 = 2;
const SINGULAR_TAG: u64 = 3;

/// `100 * (new - old) / old`.
pub fn relative_gain(old: f64, new: f64) -> f64 {
    100.0 * (new - old) / old
}

/// Signed percentage with two decimals, e.g. `+15.18%`.
pub fn format_gain(gain: f64) -> String {
    format!("{gain:+.2}%")
}

/// Splits creators into `g` groups by follower count, ascending (ties by id).
/// The first `n % g` groups get one extra member.
pub fn tercile_groups(creators: &[(UserId, usize)], g: usize) -> Result<Vec<Vec<UserId>>> {
    if g == 0 {
        return Err(Error::InvalidArgument("group count must be at least 1".into()));
    }
    let mut sorted = creators.to_vec();
    sorted.sort_by_key(|&(u, followers)| (followers, u));
    sorted.dedup_by_key(|&mut (u, _)| u);
    let (base, extra) = (sorted.len() / g, sorted.len() % g);
    let mut groups = Vec::with_capacity(g);
    let mut rest = &sorted[..];
    for i in 0..g {
        let (head, tail) = rest.split_at(base + usize::from(i < extra));
        groups.push(head.iter().map(|&(u, _)| u).collect());
        rest = tail;
    }
    Ok(groups)
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Outcome of asking the model to revise one post.
pub(crate) struct Revision {
    pub text: String,
    pub embedding: Vec<f64>,
    pub refused: bool,
}

/// A loaded corpus, trained estimator, text embedder and LLM gateway.
pub struct Harness {
    pub config: ExperimentConfig,
    pub corpus: Corpus,
    pub model: EstimatorModel,
    embedder: Box<dyn TextEmbedder>,
    gateway: LlmGateway,
    originals: OnceLock<BTreeMap<PostId, f64>>,
}

impl Harness {
    /// Reads the corpus, checkpoint and lexicon named in `config`.
    pub fn load(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let corpus = Corpus::load(&config.corpus)?;
        let model = EstimatorModel::load(&config.checkpoint)?;
        let lexicon = || Lexicon::load(&config.corpus.join("lexicon.json"));
        let embedder: Box<dyn TextEmbedder> = match &config.embedder {
            EmbedderConfig::Lexicon => Box::new(LexiconEmbedder::new(lexicon()?)),
            EmbedderConfig::Command { program, args } => Box::new(CommandEmbedder {
                program: program.clone(),
                args: args.clone(),
                dim: corpus.embeddings.dim(),
            }),
        };
        let chat: Box<dyn ChatModel> = match config.llm.mode {
            LlmMode::Oracle => Box::new(TopicOracle::new(LexiconEmbedder::new(lexicon()?), config.llm.summary_terms)),
            _ => config.llm.build_model()?,
        };
        Self::from_parts(config, corpus, model, embedder, chat)
    }

    pub fn from_parts(
        config: ExperimentConfig,
        corpus: Corpus,
        model: EstimatorModel,
        embedder: Box<dyn TextEmbedder>,
        chat: Box<dyn ChatModel>,
    ) -> Result<Self> {
        config.validate()?;
        if model.user_count() < corpus.graph.user_count() {
            return Err(Error::InvalidArgument(format!(
                "checkpoint covers {} users, corpus has {}",
                model.user_count(),
                corpus.graph.user_count()
            )));
        }
        if embedder.dim() != model.content_dim() || corpus.embeddings.dim() != model.content_dim() {
            return Err(Error::InvalidArgument(format!(
                "embedding dimension {} (embedder {}) does not match the checkpoint's {}",
                corpus.embeddings.dim(),
                embedder.dim(),
                model.content_dim()
            )));
        }
        let gateway = LlmGateway::new(chat, &config.llm)?;
        Ok(Self {
            config,
            corpus,
            model,
            embedder,
            gateway,
            originals: OnceLock::new(),
        })
    }

    pub fn gateway(&self) -> &LlmGateway {
        &self.gateway
    }

    /// Test posts under evaluation, ascending id, capped by `max_posts`.
    pub fn eval_posts(&self) -> Vec<&Post> {
        let mut posts: Vec<&Post> = self.corpus.posts_in(Split::Test).collect();
        posts.sort_by_key(|p| p.id);
        if self.config.max_posts > 0 {
            posts.truncate(self.config.max_posts);
        }
        posts
    }

    pub(crate) fn prompt_builder(&self) -> Result<PromptBuilder<'_>> {
        let mut r = rng::seeded(rng::derive_seed(self.config.master_seed, &[FEWSHOT_TAG]));
        PromptBuilder::new(&self.corpus, self.config.k_fewshot_each, &mut r)
    }

    pub(crate) fn spread_seed(&self, post: PostId) -> u64 {
        rng::derive_seed(self.config.base_seed, &[post as u64])
    }

    /// Mean simulated spread of `creator` posting content `embedding`.
    pub(crate) fn spread(&self, frozen: &FrozenEstimator<'_>, post: PostId, creator: UserId, embedding: &[f64]) -> Result<f64> {
        let probs = frozen.edge_probabilities(&self.corpus.graph, creator, embedding, self.config.attribution)?;
        Ok(influence_spread(&self.corpus.graph, &probs, creator, self.config.rounds, self.spread_seed(post))?.spread)
    }

    /// Spreads of the unrevised eval posts, computed once.
    pub fn original_spreads(&self) -> Result<&BTreeMap<PostId, f64>> {
        if let Some(cached) = self.originals.get() {
            return Ok(cached);
        }
        let frozen = self.model.frozen();
        let computed = self
            .eval_posts()
            .par_iter()
            .map(|p| Ok((p.id, self.spread(&frozen, p.id, p.creator, self.corpus.embedding(p.id)?)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(self.originals.get_or_init(|| computed))
    }

    /// Interest summarization through the gateway; a refusal becomes `None`.
    pub(crate) fn summarize(&self, prompt: &PromptText) -> Result<Option<String>> {
        match self.gateway.summarize_interests(prompt) {
            Ok(s) => Ok(Some(s)),
            Err(LlmError::Refused { .. }) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Sends a revision prompt and embeds the answer. A refusal keeps the
    /// original post; an unchanged text keeps its stored embedding.
    pub(crate) fn revise(&self, prompt: &PromptText, post: &Post) -> Result<Revision> {
        let (text, refused) = match self.gateway.complete(prompt) {
            Ok(text) => (text, false),
            Err(LlmError::Refused { .. }) => (post.text.clone(), true),
            Err(e) => return Err(e.into()),
        };
        let embedding = if text == post.text {
            self.corpus.embedding(post.id)?.to_vec()
        } else {
            self.embedder.embed(&text)?
        };
        Ok(Revision {
            text,
            embedding,
            refused,
        })
    }

    pub(crate) fn strategy_rng(&self, strategy: u64, post: PostId, hops: usize) -> rng::Rng {
        rng::seeded(rng::derive_seed(
            self.config.master_seed,
            &[STRATEGY_TAG, strategy, post as u64, hops as u64],
        ))
    }

    pub(crate) fn singular_seed(&self, tags: &[u64]) -> u64 {
        let mut all = vec![SINGULAR_TAG];
        all.extend_from_slice(tags);
        rng::derive_seed(self.config.master_seed, &all)
    }
}
