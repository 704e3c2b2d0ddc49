use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::dataio::{Post, PostId};
use crate::graph::{SocialGraph, UserId};
use crate::rng::Rng;

/// One training example: did `recipient` repost `post` created by `creator`?
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionInstance {
    pub recipient: UserId,
    pub creator: UserId,
    pub post: PostId,
    pub label: f64,
}

/// Positives are every reposter of a post; negatives are followers of the
/// creator who did not repost, `negatives_per_positive` of them per positive
/// (all of them when fewer exist). Posts without reposters emit nothing.
pub fn build_training_dataset(
    graph: &SocialGraph,
    posts: &[Post],
    negatives_per_positive: usize,
    rng: &mut Rng,
) -> Vec<InteractionInstance> {
    let mut out = Vec::new();
    for post in posts {
        let positives: Vec<UserId> = post
            .reposters
            .iter()
            .copied()
            .filter(|&u| u != post.creator)
            .collect();
        if positives.is_empty() {
            log::debug!("post {} has no reposters; skipped", post.id);
            continue;
        }
        out.extend(positives.iter().map(|&u| InteractionInstance {
            recipient: u,
            creator: post.creator,
            post: post.id,
            label: 1.0,
        }));

        let pool: Vec<UserId> = graph
            .followers(post.creator)
            .iter()
            .copied()
            .filter(|u| post.reposters.binary_search(u).is_err())
            .collect();
        let wanted = (negatives_per_positive * positives.len()).min(pool.len());
        let mut picks: Vec<usize> = index::sample(rng, pool.len(), wanted).into_vec();
        picks.sort_unstable();
        out.extend(picks.into_iter().map(|i| InteractionInstance {
            recipient: pool[i],
            creator: post.creator,
            post: post.id,
            label: 0.0,
        }));
    }
    out
}
