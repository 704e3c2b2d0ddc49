use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mean;
use crate::cascade::{assign_probabilities, influence_spread, spread_metrics, LearnedInputs, ProbabilityMode, SpreadMetrics};
use crate::dataio::{Corpus, Post, Split};
use crate::error::{Error, Result};
use crate::estimator::{EdgeAttribution, EstimatorModel};
use crate::graph::UserId;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRow {
    pub mode: ProbabilityMode,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub posts: usize,
    pub rounds: usize,
    pub rows: Vec<ModeRow>,
}

impl EstimatorReport {
    pub fn row(&self, mode: ProbabilityMode) -> Option<&ModeRow> {
        self.rows.iter().find(|r| r.mode == mode)
    }
}

/// Simulates every test post with a repost under each mode and scores the
/// activated users against the observed reposters. Negatives are the users
/// reachable from the creator who did not repost. Metrics are averaged over
/// simulations, then over posts. `max_posts` of 0 means all.
pub fn evaluate_estimator(
    corpus: &Corpus,
    model: &EstimatorModel,
    modes: &[ProbabilityMode],
    rounds: usize,
    base_seed: u64,
    attribution: EdgeAttribution,
    max_posts: usize,
) -> Result<EstimatorReport> {
    if rounds == 0 {
        return Err(Error::InvalidArgument("need at least one simulation".into()));
    }
    let mut posts: Vec<&Post> = corpus.posts_in(Split::Test).filter(|p| !p.reposters.is_empty()).collect();
    posts.sort_by_key(|p| p.id);
    if max_posts > 0 {
        posts.truncate(max_posts);
    }
    let graph = &corpus.graph;
    let per_post: Vec<Vec<SpreadMetrics>> = posts
        .par_iter()
        .map(|post| {
            let positives: HashSet<UserId> = post.reposters.iter().copied().filter(|&u| u != post.creator).collect();
            let negatives: HashSet<UserId> = graph
                .reachable(post.creator)?
                .into_iter()
                .filter(|u| *u != post.creator && !positives.contains(u))
                .collect();
            let learned = LearnedInputs {
                model,
                creator: post.creator,
                content_embedding: corpus.embedding(post.id)?,
                attribution,
            };
            let seed = rng::derive_seed(base_seed, &[post.id as u64]);
            modes
                .iter()
                .map(|&mode| {
                    let probs = assign_probabilities(mode, graph, Some(learned))?;
                    let result = influence_spread(graph, &probs, post.creator, rounds, seed)?;
                    let runs = result
                        .activations
                        .iter()
                        .map(|a| spread_metrics(a, &positives, &negatives, post.creator))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(SpreadMetrics {
                        precision: mean(runs.iter().map(|m| m.precision)),
                        recall: mean(runs.iter().map(|m| m.recall)),
                        f1: mean(runs.iter().map(|m| m.f1)),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let rows = modes
        .iter()
        .enumerate()
        .map(|(i, &mode)| ModeRow {
            mode,
            precision: mean(per_post.iter().map(|m| m[i].precision)),
            recall: mean(per_post.iter().map(|m| m[i].recall)),
            f1: mean(per_post.iter().map(|m| m[i].f1)),
        })
        .collect();
    Ok(EstimatorReport {
        posts: posts.len(),
        rounds,
        rows,
    })
}
