use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::raw::{ActionKind, RawCorpus};
use super::split::SplitRatios;
use super::{Post, PostId};
use crate::error::{Error, Result};
use crate::graph::{SocialGraph, UserId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessParams {
    /// Authors of this many most-reposted posts seed the user subset.
    pub seed_top_k: usize,
    pub expansion_rounds: usize,
    /// Posts need this many reposters inside the retained network.
    pub min_reposts_in_network: usize,
    pub min_posts: usize,
    pub min_reposts_by_user: usize,
    pub split: SplitRatios,
}

impl Default for PreprocessParams {
    fn default() -> Self {
        Self {
            seed_top_k: 20,
            expansion_rounds: 2,
            min_reposts_in_network: 5,
            min_posts: 1,
            min_reposts_by_user: 1,
            split: SplitRatios::default(),
        }
    }
}

impl PreprocessParams {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            self.seed_top_k,
            self.expansion_rounds,
            self.min_reposts_in_network,
            self.min_posts,
            self.min_reposts_by_user,
        ];
        if counts.contains(&0) {
            return Err(Error::InvalidArgument("preprocessing counts must be at least 1".into()));
        }
        self.split.validate()
    }
}

/// Output of [`preprocess`]: dense ids plus the original ids they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedCorpus {
    pub graph: SocialGraph,
    pub posts: Vec<Post>,
    /// `user_ids[dense]` is the original user id.
    pub user_ids: Vec<String>,
    /// `post_ids[dense]` is the original post id.
    pub post_ids: Vec<String>,
}

struct RawPost<'a> {
    creator: &'a str,
    text: &'a str,
    reposters: BTreeSet<&'a str>,
}

/// Seed selection, two-way expansion, activity filter, induced network and the
/// in-network repost filter, in that order.
///
/// Expansion adds, each round, everyone who reposted a post written by the
/// current set and everyone whose post the current set reposted. A post's
/// in-network reposters are retained users who reposted it and can be reached
/// from its creator along follow edges inside the retained network. Dense ids
/// follow the byte order of the original id strings.
pub fn preprocess(raw: &RawCorpus, params: &PreprocessParams) -> Result<PreparedCorpus> {
    params.validate()?;

    let mut posts: BTreeMap<&str, RawPost> = BTreeMap::new();
    let texts: HashMap<&str, &str> = raw
        .contents
        .iter()
        .map(|(id, text)| (id.as_str(), text.as_str()))
        .collect();
    for action in raw.actions.iter().filter(|a| a.kind == ActionKind::Post) {
        let entry = posts.entry(action.post.as_str()).or_insert_with(|| RawPost {
            creator: action.user.as_str(),
            text: texts[action.post.as_str()],
            reposters: BTreeSet::new(),
        });
        // Several authors for one post: keep the smallest id, independent of row order.
        entry.creator = entry.creator.min(action.user.as_str());
    }
    for action in raw.actions.iter().filter(|a| a.kind == ActionKind::Repost) {
        if let Some(post) = posts.get_mut(action.post.as_str()) {
            post.reposters.insert(action.user.as_str());
        }
    }
    for post in posts.values_mut() {
        let creator = post.creator;
        post.reposters.remove(creator);
    }

    let mut authored: HashMap<&str, Vec<&str>> = HashMap::new();
    let mut reposted: HashMap<&str, Vec<&str>> = HashMap::new();
    for (&id, post) in &posts {
        authored.entry(post.creator).or_default().push(id);
        for &u in &post.reposters {
            reposted.entry(u).or_default().push(id);
        }
    }

    let mut ranked: Vec<(&str, usize)> = posts.iter().map(|(&id, p)| (id, p.reposters.len())).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let mut users: BTreeSet<&str> = ranked
        .iter()
        .take(params.seed_top_k)
        .map(|&(id, _)| posts[id].creator)
        .collect();
    if users.is_empty() {
        return Err(Error::EmptyAfterFilter("seed selection"));
    }

    for _ in 0..params.expansion_rounds {
        let mut next = users.clone();
        for &u in &users {
            for &pid in authored.get(u).into_iter().flatten() {
                next.extend(posts[pid].reposters.iter().copied());
            }
            for &pid in reposted.get(u).into_iter().flatten() {
                next.insert(posts[pid].creator);
            }
        }
        users = next;
    }

    users.retain(|u| {
        authored.get(u).map_or(0, Vec::len) >= params.min_posts
            && reposted.get(u).map_or(0, Vec::len) >= params.min_reposts_by_user
    });
    if users.is_empty() {
        return Err(Error::EmptyAfterFilter("user activity"));
    }

    let user_ids: Vec<String> = users.iter().map(|s| s.to_string()).collect();
    let dense: HashMap<&str, UserId> = users
        .iter()
        .enumerate()
        .map(|(i, &u)| (u, i as UserId))
        .collect();
    let edges: Vec<(UserId, UserId)> = raw
        .follows
        .iter()
        .filter_map(|(a, b)| Some((*dense.get(a.as_str())?, *dense.get(b.as_str())?)))
        .collect();
    let graph = SocialGraph::build(&edges, user_ids.len())?;

    let mut kept = Vec::new();
    let mut post_ids = Vec::new();
    for (&id, post) in &posts {
        let Some(&creator) = dense.get(post.creator) else {
            continue;
        };
        let reachable = graph.reachable(creator)?;
        let mut reposters: Vec<UserId> = post
            .reposters
            .iter()
            .filter_map(|u| dense.get(u).copied())
            .filter(|u| reachable.binary_search(u).is_ok())
            .collect();
        if reposters.len() < params.min_reposts_in_network {
            continue;
        }
        reposters.sort_unstable();
        kept.push(Post {
            id: kept.len() as PostId,
            creator,
            text: post.text.to_string(),
            reposters,
        });
        post_ids.push(id.to_string());
    }
    if kept.is_empty() {
        return Err(Error::EmptyAfterFilter("reposts in network"));
    }
    log::info!(
        "preprocess kept {} users, {} follow edges, {} posts",
        graph.user_count(),
        graph.edge_count(),
        kept.len()
    );
    Ok(PreparedCorpus {
        graph,
        posts: kept,
        user_ids,
        post_ids,
    })
}
