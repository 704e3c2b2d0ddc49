use std::collections::HashSet;

use rand::seq::index;
use rand::Rng as _;

use crate::dataio::{PostId, RepostHistory};
use crate::error::{Error, Result};
use crate::graph::{softmax_index, SocialGraph, UserId};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborVariant {
    /// Prompt 3.0: any training post.
    Global,
    /// Prompt 3.1: reposts drawn from the audience's pooled histories.
    NeighborRandom,
    /// Prompt 3.2: the history of the audience member with most followers.
    NeighborInfluential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterestVariant {
    /// Prompt 4.1: neighbors drawn uniformly.
    Uniform,
    /// Prompt 4.2: neighbors drawn by softmax over importance scores.
    Scored,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledPosts {
    pub posts: Vec<PostId>,
    /// True when the requested pool was empty and the global pool was used.
    pub fallback: bool,
}

fn sample_from(pool: &[PostId], k: usize, rng: &mut Rng) -> Vec<PostId> {
    index::sample(rng, pool.len(), k.min(pool.len()))
        .into_iter()
        .map(|i| pool[i])
        .collect()
}

/// Posts for Prompt 3.x, in sampling order and without duplicates.
pub fn sample_neighbor_posts(
    variant: NeighborVariant,
    graph: &SocialGraph,
    creator: UserId,
    hops: usize,
    train_posts: &[PostId],
    history: &RepostHistory,
    k: usize,
    rng: &mut Rng,
) -> Result<SampledPosts> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let global = |rng: &mut Rng, fallback: bool| -> Result<SampledPosts> {
        if train_posts.is_empty() {
            return Err(Error::EmptyNeighborhood);
        }
        Ok(SampledPosts {
            posts: sample_from(train_posts, k, rng),
            fallback,
        })
    };
    let posts = match variant {
        NeighborVariant::Global => return global(rng, false),
        NeighborVariant::NeighborRandom => {
            // One entry per repost, so posts the audience shared widely are
            // proportionally likelier; duplicates are skipped on draw.
            let mut events: Vec<PostId> = graph
                .neighborhood(creator, hops)?
                .into_iter()
                .flat_map(|u| history.of(u).iter().copied())
                .collect();
            let mut chosen = Vec::with_capacity(k);
            while chosen.len() < k && !events.is_empty() {
                let post = events.swap_remove(rng.random_range(0..events.len()));
                if !chosen.contains(&post) {
                    chosen.push(post);
                }
            }
            chosen
        }
        NeighborVariant::NeighborInfluential => {
            let mut audience = graph.neighborhood(creator, hops)?;
            audience.sort_by_key(|&u| (std::cmp::Reverse(graph.follower_count(u)), u));
            let mut chosen: Vec<PostId> = Vec::with_capacity(k);
            for u in audience {
                if chosen.len() == k {
                    break;
                }
                let remaining: Vec<PostId> = history
                    .of(u)
                    .iter()
                    .copied()
                    .filter(|p| !chosen.contains(p))
                    .collect();
                let need = k - chosen.len();
                chosen.extend(sample_from(&remaining, need, rng));
            }
            chosen
        }
    };
    if posts.is_empty() {
        log::debug!("creator {creator}: empty neighborhood history, using global posts");
        return global(rng, true);
    }
    Ok(SampledPosts {
        posts,
        fallback: false,
    })
}

/// Posts for interest summarization: repeatedly draw a neighbor (uniformly or
/// by softmax over importance), then one of their not-yet-chosen reposts,
/// until `k` posts or no neighbor has posts left. Neighbors without history
/// are never drawn. An empty result means the caller degrades to Prompt 1.
pub fn sample_interest_posts(
    variant: InterestVariant,
    graph: &SocialGraph,
    creator: UserId,
    hops: usize,
    history: &RepostHistory,
    k: usize,
    rng: &mut Rng,
) -> Result<Vec<PostId>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let (neighbors, scores): (Vec<UserId>, Vec<f64>) = match variant {
        InterestVariant::Uniform => {
            let n = graph.neighborhood(creator, hops)?;
            let len = n.len();
            (n, vec![0.0; len])
        }
        InterestVariant::Scored => graph
            .importance_scores(creator, hops)?
            .entries()
            .iter()
            .copied()
            .unzip(),
    };
    let mut remaining: Vec<Vec<PostId>> = neighbors.iter().map(|&u| history.of(u).to_vec()).collect();
    let mut chosen = Vec::with_capacity(k);
    let mut taken = HashSet::new();
    while chosen.len() < k {
        let live: Vec<usize> = (0..neighbors.len()).filter(|&i| !remaining[i].is_empty()).collect();
        if live.is_empty() {
            break;
        }
        let pick = match variant {
            InterestVariant::Uniform => live[rng.random_range(0..live.len())],
            InterestVariant::Scored => {
                let s: Vec<f64> = live.iter().map(|&i| scores[i]).collect();
                live[softmax_index(&s, rng)]
            }
        };
        let list = &mut remaining[pick];
        let post = list.swap_remove(rng.random_range(0..list.len()));
        if taken.insert(post) {
            chosen.push(post);
        }
        // Posts shared by several neighbors stay drawable only once.
        for other in &mut remaining {
            other.retain(|p| *p != post);
        }
    }
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn history(lists: &[&[PostId]]) -> RepostHistory {
        RepostHistory::from_lists(lists.iter().map(|l| l.to_vec()).collect())
    }

    #[test]
    fn single_member_with_exact_history() {
        let g = SocialGraph::build(&[(1, 0)], 2).unwrap();
        let h = history(&[&[], &[4, 5, 6]]);
        let mut got = sample_neighbor_posts(NeighborVariant::NeighborRandom, &g, 0, 1, &[0, 1], &h, 3, &mut rng::seeded(0))
            .unwrap();
        got.posts.sort_unstable();
        assert_eq!(got.posts, vec![4, 5, 6]);
        assert!(!got.fallback);
    }

    #[test]
    fn influential_member_first() {
        // 1 and 2 follow 0; 1 has five followers, 2 has two.
        let mut edges = vec![(1, 0), (2, 0)];
        edges.extend((3..8).map(|f| (f, 1)));
        edges.extend((8..10).map(|f| (f, 2)));
        let g = SocialGraph::build(&edges, 10).unwrap();
        let mut lists: Vec<&[PostId]> = vec![&[]; 10];
        lists[1] = &[10, 11, 12, 13];
        lists[2] = &[20, 21];
        let h = history(&lists);
        for seed in 0..20 {
            let got =
                sample_neighbor_posts(NeighborVariant::NeighborInfluential, &g, 0, 1, &[], &h, 3, &mut rng::seeded(seed))
                    .unwrap();
            assert!(got.posts.iter().all(|p| (10..14).contains(p)));
        }
        let got =
            sample_neighbor_posts(NeighborVariant::NeighborInfluential, &g, 0, 1, &[], &h, 5, &mut rng::seeded(0)).unwrap();
        assert_eq!(got.posts.len(), 5);
        assert!(got.posts[4] >= 20);
    }

    #[test]
    fn pooled_reposts_weight_shared_posts() {
        // Post 9 was reposted by all four followers, posts 1..4 by one each.
        let edges: Vec<(UserId, UserId)> = (1..5).map(|f| (f, 0)).collect();
        let g = SocialGraph::build(&edges, 5).unwrap();
        let h = history(&[&[], &[9, 1], &[9, 2], &[9, 3], &[9, 4]]);
        let trials = 4000;
        let hits = (0..trials)
            .filter(|&s| {
                let got = sample_neighbor_posts(NeighborVariant::NeighborRandom, &g, 0, 1, &[], &h, 1, &mut rng::seeded(s))
                    .unwrap();
                got.posts == vec![9]
            })
            .count();
        // P = 4/8; a deduplicated pool would give 1/5.
        let p = hits as f64 / trials as f64;
        assert!((p - 0.5).abs() < 4.0 * (0.25 / trials as f64).sqrt(), "{p}");
        let got = sample_neighbor_posts(NeighborVariant::NeighborRandom, &g, 0, 1, &[], &h, 10, &mut rng::seeded(1)).unwrap();
        let mut posts = got.posts.clone();
        posts.sort_unstable();
        assert_eq!(posts, vec![1, 2, 3, 4, 9]);
    }

    #[test]
    fn empty_history_falls_back_to_global() {
        let g = SocialGraph::build(&[(1, 0)], 2).unwrap();
        let h = history(&[&[], &[]]);
        let got = sample_neighbor_posts(NeighborVariant::NeighborRandom, &g, 0, 1, &[7, 8, 9], &h, 3, &mut rng::seeded(0))
            .unwrap();
        assert!(got.fallback);
        assert_eq!(got.posts.len(), 3);
    }

    #[test]
    fn interest_exhausts_small_history() {
        let g = SocialGraph::build(&[(1, 0)], 2).unwrap();
        let h = history(&[&[], &[3, 4]]);
        for variant in [InterestVariant::Uniform, InterestVariant::Scored] {
            let mut got = sample_interest_posts(variant, &g, 0, 1, &h, 10, &mut rng::seeded(0)).unwrap();
            got.sort_unstable();
            assert_eq!(got, vec![3, 4]);
        }
        let empty = history(&[&[], &[]]);
        assert!(sample_interest_posts(InterestVariant::Uniform, &g, 0, 1, &empty, 10, &mut rng::seeded(0))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn scored_prefers_important_neighbor() {
        // Neighbor 1 has 60 followers, neighbor 2 has none: scores sqrt(2)*sqrt(60) vs 0.
        let mut edges = vec![(1, 0), (2, 0)];
        edges.extend((3..63).map(|f| (f, 1)));
        let g = SocialGraph::build(&edges, 63).unwrap();
        let mut lists: Vec<&[PostId]> = vec![&[]; 63];
        lists[1] = &[100];
        lists[2] = &[200];
        let h = history(&lists);
        let hits = (0..1000)
            .filter(|&s| {
                let got = sample_interest_posts(InterestVariant::Scored, &g, 0, 1, &h, 1, &mut rng::seeded(s)).unwrap();
                got == vec![100]
            })
            .count();
        assert!(hits >= 990, "{hits}");
    }
}
