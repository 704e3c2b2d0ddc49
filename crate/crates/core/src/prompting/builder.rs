use super::pools::{classify_popularity, FewShotSelector};
use super::sampling::{sample_interest_posts, sample_neighbor_posts, InterestVariant, NeighborVariant};
use super::{render_interest_summarization_prompt, render_prompt, PromptContext, PromptKind, PromptStrategy, PromptText, StrategyKind};
use crate::dataio::{Corpus, PostId, RepostHistory, Split};
use crate::error::{Error, Result};
use crate::graph::UserId;
use crate::rng::Rng;

/// The post being revised.
#[derive(Debug, Clone, Copy)]
pub struct PromptInputs<'a> {
    pub text: &'a str,
    pub creator: UserId,
    pub embedding: &'a [f64],
}

/// Assembles complete prompts from a corpus' training split: popularity pools,
/// repost histories restricted to training posts, and the samplers.
pub struct PromptBuilder<'a> {
    corpus: &'a Corpus,
    history: RepostHistory,
    fewshot: FewShotSelector,
}

impl<'a> PromptBuilder<'a> {
    /// `fewshot_rng` draws the fixed Prompt 2.1 exemplars once.
    pub fn new(corpus: &'a Corpus, k_fewshot_each: usize, fewshot_rng: &mut Rng) -> Result<Self> {
        let counts: Vec<(PostId, usize)> = corpus
            .posts_in(Split::Train)
            .map(|p| (p.id, p.repost_count()))
            .collect();
        let pools = classify_popularity(&counts)?;
        let fewshot = FewShotSelector::new(pools, k_fewshot_each, fewshot_rng)?;
        let history = RepostHistory::build(corpus.graph.user_count(), corpus.posts_in(Split::Train));
        Ok(Self {
            corpus,
            history,
            fewshot,
        })
    }

    pub fn history(&self) -> &RepostHistory {
        &self.history
    }

    pub fn fewshot(&self) -> &FewShotSelector {
        &self.fewshot
    }

    fn texts(&self, ids: &[PostId]) -> Result<Vec<String>> {
        ids.iter()
            .map(|&id| Ok(self.corpus.post(id)?.text.clone()))
            .collect()
    }

    fn finish(&self, kind: StrategyKind, requested: StrategyKind, input: &str, context: &PromptContext, provenance: Vec<PostId>) -> Result<PromptText> {
        Ok(PromptText {
            text: render_prompt(kind, input, context)?,
            kind: PromptKind::Revision(kind),
            requested: Some(requested),
            provenance,
        })
    }

    /// Builds the prompt for `strategy`. `summarize` turns sampled posts into
    /// an interest string for Prompt 4.x; `Ok(None)` (a refusal) degrades to
    /// Prompt 1. Empty neighborhoods degrade 3.x to 3.0 and 4.x to Prompt 1.
    pub fn build(
        &self,
        strategy: &PromptStrategy,
        input: &PromptInputs,
        rng: &mut Rng,
        summarize: &mut dyn FnMut(&PromptText) -> Result<Option<String>>,
    ) -> Result<PromptText> {
        strategy.validate()?;
        let kind = strategy.kind;
        let graph = &self.corpus.graph;
        match kind {
            StrategyKind::ZeroShot => self.finish(kind, kind, input.text, &PromptContext::None, Vec::new()),
            StrategyKind::FewShotFixed | StrategyKind::FewShotSimilar => {
                let (popular, unpopular) = if kind == StrategyKind::FewShotFixed {
                    let (p, u) = self.fewshot.fixed();
                    (p.to_vec(), u.to_vec())
                } else {
                    self.fewshot.similar(input.embedding, &self.corpus.embeddings)?
                };
                let context = PromptContext::FewShot {
                    popular: self.texts(&popular)?,
                    unpopular: self.texts(&unpopular)?,
                };
                let provenance = popular.into_iter().chain(unpopular).collect();
                self.finish(kind, kind, input.text, &context, provenance)
            }
            StrategyKind::NeighborPostsGlobal | StrategyKind::NeighborPostsRandom | StrategyKind::NeighborPostsInfluential => {
                let variant = match kind {
                    StrategyKind::NeighborPostsGlobal => NeighborVariant::Global,
                    StrategyKind::NeighborPostsRandom => NeighborVariant::NeighborRandom,
                    _ => NeighborVariant::NeighborInfluential,
                };
                let sampled = sample_neighbor_posts(
                    variant,
                    graph,
                    input.creator,
                    strategy.hops,
                    &self.corpus.splits.train,
                    &self.history,
                    strategy.k_neighbor_posts,
                    rng,
                )?;
                let rendered = if sampled.fallback {
                    StrategyKind::NeighborPostsGlobal
                } else {
                    kind
                };
                let context = PromptContext::NeighborPosts(self.texts(&sampled.posts)?);
                self.finish(rendered, kind, input.text, &context, sampled.posts)
            }
            StrategyKind::InterestUniform | StrategyKind::InterestScored => {
                let variant = if kind == StrategyKind::InterestUniform {
                    InterestVariant::Uniform
                } else {
                    InterestVariant::Scored
                };
                let posts = sample_interest_posts(
                    variant,
                    graph,
                    input.creator,
                    strategy.hops,
                    &self.history,
                    strategy.k_interest_posts,
                    rng,
                )?;
                if posts.is_empty() {
                    return self.finish(StrategyKind::ZeroShot, kind, input.text, &PromptContext::None, Vec::new());
                }
                let summary_prompt = PromptText {
                    text: render_interest_summarization_prompt(&self.texts(&posts)?)?,
                    kind: PromptKind::InterestSummarization,
                    requested: Some(kind),
                    provenance: posts.clone(),
                };
                match summarize(&summary_prompt)? {
                    Some(interest) if !interest.trim().is_empty() => {
                        self.finish(kind, kind, input.text, &PromptContext::Interest(interest), posts)
                    }
                    _ => self.finish(StrategyKind::ZeroShot, kind, input.text, &PromptContext::None, posts),
                }
            }
        }
    }

    /// Prompt 3-style revision aimed at one recipient: up to `k` posts from
    /// that user's repost history. `None` when the history is empty.
    pub fn build_for_recipient(
        &self,
        input: &PromptInputs,
        recipient: UserId,
        k: usize,
        rng: &mut Rng,
    ) -> Result<Option<PromptText>> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let history = self.history.of(recipient);
        if history.is_empty() {
            return Ok(None);
        }
        let picks: Vec<PostId> = rand::seq::index::sample(rng, history.len(), k.min(history.len()))
            .into_iter()
            .map(|i| history[i])
            .collect();
        let context = PromptContext::NeighborPosts(self.texts(&picks)?);
        let kind = StrategyKind::NeighborPostsRandom;
        self.finish(kind, kind, input.text, &context, picks).map(Some)
    }
}
