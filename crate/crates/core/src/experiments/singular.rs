use rand::seq::{index, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mean, Harness};
use crate::dataio::{Post, PostId};
use crate::error::Result;
use crate::graph::UserId;
use crate::prompting::PromptInputs;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularRecord {
    pub post_id: PostId,
    pub creator: UserId,
    pub neighbors: Vec<UserId>,
    pub mean_before: f64,
    pub mean_after: f64,
    pub success: bool,
    pub refusals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularReport {
    pub records: Vec<SingularRecord>,
    /// Posts passed over because no follower of the creator has a repost history.
    pub skipped: Vec<PostId>,
    pub success_rate: f64,
}

impl Harness {
    /// Direct followers of `creator` whose training-split repost history is non-empty.
    fn eligible_neighbors(&self, history: &crate::dataio::RepostHistory, creator: UserId) -> Vec<UserId> {
        self.corpus
            .graph
            .followers(creator)
            .iter()
            .copied()
            .filter(|&v| !history.of(v).is_empty())
            .collect()
    }

    /// For sampled posts and sampled followers, revises the post with that
    /// follower's own reposts as context and compares the estimator's
    /// probability of the follower reposting before and after.
    pub fn run_singular_user_eval(&self) -> Result<SingularReport> {
        let builder = self.prompt_builder()?;
        let mut posts: Vec<&Post> = self.eval_posts();
        posts.shuffle(&mut rng::seeded(self.singular_seed(&[])));

        let mut chosen = Vec::new();
        let mut skipped = Vec::new();
        for post in posts {
            if chosen.len() == self.config.singular_posts {
                break;
            }
            let neighbors = self.eligible_neighbors(builder.history(), post.creator);
            if neighbors.is_empty() {
                skipped.push(post.id);
                continue;
            }
            let mut r = rng::seeded(self.singular_seed(&[post.id as u64]));
            let take = self.config.singular_neighbors.min(neighbors.len());
            let mut picks: Vec<UserId> = index::sample(&mut r, neighbors.len(), take)
                .into_iter()
                .map(|i| neighbors[i])
                .collect();
            picks.sort_unstable();
            chosen.push((post, picks));
        }
        if !skipped.is_empty() {
            log::info!("singular-user eval skipped {} posts without eligible followers", skipped.len());
        }

        let records = chosen
            .par_iter()
            .map(|(post, neighbors)| {
                let original = self.corpus.embedding(post.id)?;
                let inputs = PromptInputs {
                    text: &post.text,
                    creator: post.creator,
                    embedding: original,
                };
                let mut before = Vec::with_capacity(neighbors.len());
                let mut after = Vec::with_capacity(neighbors.len());
                let mut refusals = 0;
                for &v in neighbors {
                    let mut r = rng::seeded(self.singular_seed(&[post.id as u64, v as u64]));
                    let prompt = builder
                        .build_for_recipient(&inputs, v, self.config.k_neighbor_posts, &mut r)?
                        .expect("eligible neighbors have a history");
                    let revision = self.revise(&prompt, post)?;
                    refusals += usize::from(revision.refused);
                    before.push(self.model.predict(v, post.creator, original)?);
                    after.push(self.model.predict(v, post.creator, &revision.embedding)?);
                }
                let (mean_before, mean_after) = (mean(before), mean(after));
                Ok(SingularRecord {
                    post_id: post.id,
                    creator: post.creator,
                    neighbors: neighbors.clone(),
                    mean_before,
                    mean_after,
                    success: mean_after > mean_before,
                    refusals,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let successes = records.iter().filter(|r| r.success).count();
        let success_rate = if records.is_empty() {
            0.0
        } else {
            successes as f64 / records.len() as f64
        };
        Ok(SingularReport {
            records,
            skipped,
            success_rate,
        })
    }
}
