//! Synthetic corpora with a repost process tied to post topics.
//!
//! Users get a primary topic and an interest vector concentrated on it. Users
//! arrive one at a time and attach preferentially within their own topic; the
//! remaining follows go to other topics once everyone has arrived, plus
//! follow-backs. Each post has one topic (its creator's or, with
//! `off_topic_rate`, another), a text drawn from that topic's vocabulary, and
//! an embedding from [`LexiconEmbedder`]. Reposts are one Independent-Cascade run from the
//! creator where a user `w` exposed to a post on topic `t` by `v` reposts with
//! probability
//!
//! ```text
//! base_repost + affinity_weight * interest[w][t] * ((1 - s) + s * interest[v][t] / primary_interest)
//! ```
//!
//! with `s = sharer_weight`, so enthusiasts pass content on more persuasively.
//! Posts whose cascade stays below `min_reposts` are discarded and redrawn.

use std::collections::VecDeque;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::split::{split_posts, SplitRatios};
use super::{Corpus, EmbeddingTable, Post, PostId};
use crate::embed::{Lexicon, LexiconEmbedder, TextEmbedder};
use crate::error::{Error, Result};
use crate::estimator::CONTENT_DIM;
use crate::graph::{SocialGraph, UserId};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticParams {
    pub users: usize,
    pub posts: usize,
    pub topics: usize,
    /// Mean number of accounts each user follows on arrival.
    pub mean_follows: usize,
    /// Probability that a follow targets the follower's own topic; otherwise
    /// the followee's topic is uniform. Within a topic, attachment is
    /// preferential.
    pub topic_follow_rate: f64,
    /// Exponent on popularity when picking a followee outside one's topic
    /// (0 = uniform, 1 = preferential).
    pub stray_preference: f64,
    /// Probability that a followee follows back.
    pub reciprocity: f64,
    /// Interest mass on a user's primary topic; the rest is spread evenly.
    pub primary_interest: f64,
    /// Probability that a post is about a topic other than its creator's.
    pub off_topic_rate: f64,
    pub words_per_post: usize,
    /// Share of words drawn from the topic vocabulary (the rest is filler).
    pub topic_word_rate: f64,
    pub base_repost: f64,
    pub affinity_weight: f64,
    /// How much the sharer's own interest scales the repost probability.
    pub sharer_weight: f64,
    /// Creators are drawn with weight `followers^creator_bias` (0 = uniform).
    pub creator_bias: f64,
    pub min_reposts: usize,
    /// Redraws allowed per kept post before giving up.
    pub max_redraws: usize,
    pub split: SplitRatios,
    pub seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            users: 1000,
            posts: 300,
            topics: 8,
            mean_follows: 6,
            topic_follow_rate: 0.6,
            stray_preference: 0.75,
            reciprocity: 0.3,
            primary_interest: 0.95,
            off_topic_rate: 0.5,
            words_per_post: 12,
            topic_word_rate: 0.6,
            base_repost: 0.01,
            affinity_weight: 0.5,
            sharer_weight: 0.5,
            creator_bias: 2.0,
            min_reposts: 1,
            max_redraws: 1000,
            split: SplitRatios::default(),
            seed: 0,
        }
    }
}

impl SyntheticParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.users < 2 || self.posts < 3 {
            return bad("synthetic corpora need at least 2 users and 3 posts");
        }
        if self.topics < 2 {
            return bad("synthetic corpora need at least 2 topics");
        }
        if self.mean_follows == 0 || self.words_per_post == 0 {
            return bad("mean_follows and words_per_post must be positive");
        }
        for (name, p) in [
            ("reciprocity", self.reciprocity),
            ("topic_follow_rate", self.topic_follow_rate),
            ("primary_interest", self.primary_interest),
            ("off_topic_rate", self.off_topic_rate),
            ("topic_word_rate", self.topic_word_rate),
            ("base_repost", self.base_repost),
            ("sharer_weight", self.sharer_weight),
            ("stray_preference", self.stray_preference),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.affinity_weight < 0.0 || self.creator_bias < 0.0 {
            return bad("affinity_weight and creator_bias must be nonnegative");
        }
        self.split.validate()
    }
}

/// Generator-side facts that a learner never sees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub user_topics: Vec<usize>,
    pub interests: Vec<Vec<f64>>,
    pub post_topics: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub lexicon: Lexicon,
    pub truth: GroundTruth,
}

impl SyntheticCorpus {
    /// Writes the corpus directory plus `lexicon.json` and `truth.json`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        self.corpus.save(dir)?;
        self.lexicon.save(&dir.join("lexicon.json"))?;
        let path = dir.join("truth.json");
        let text = serde_json::to_string(&self.truth)? + "\n";
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

pub fn generate_synthetic(params: &SyntheticParams) -> Result<SyntheticCorpus> {
    params.validate()?;
    let lexicon = Lexicon::builtin(
        params.topics,
        rng::derive_seed(params.seed, &[4]),
        CONTENT_DIM,
    )?;
    let embedder = LexiconEmbedder::new(lexicon.clone());

    let mut r = rng::seeded(rng::derive_seed(params.seed, &[0]));
    let user_topics: Vec<usize> = (0..params.users)
        .map(|_| r.random_range(0..params.topics))
        .collect();
    let rest = (1.0 - params.primary_interest) / (params.topics - 1) as f64;
    let interests: Vec<Vec<f64>> = user_topics
        .iter()
        .map(|&t| {
            (0..params.topics)
                .map(|k| if k == t { params.primary_interest } else { rest })
                .collect()
        })
        .collect();
    let graph = follow_graph(params, &user_topics, &mut r)?;

    let mut r = rng::seeded(rng::derive_seed(params.seed, &[1]));
    let creators: Vec<UserId> = (0..params.users as UserId)
        .filter(|&u| graph.follower_count(u) > 0)
        .collect();
    if creators.is_empty() {
        return Err(Error::InvalidArgument("generated graph has no followed users".into()));
    }
    let mut post_topics = Vec::with_capacity(params.posts);
    let mut posts = Vec::with_capacity(params.posts);
    let mut cascade_rng = rng::seeded(rng::derive_seed(params.seed, &[2]));
    let weights: Vec<f64> = creators
        .iter()
        .map(|&u| (graph.follower_count(u) as f64).powf(params.creator_bias))
        .collect();
    let creator_dist = WeightedIndex::new(&weights).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut redraws = 0usize;
    while posts.len() < params.posts {
        let creator = creators[creator_dist.sample(&mut r)];
        let own = user_topics[creator as usize];
        let topic = if r.random_bool(params.off_topic_rate) {
            let other = r.random_range(0..params.topics - 1);
            if other >= own {
                other + 1
            } else {
                other
            }
        } else {
            own
        };
        let text = render_text(&lexicon, topic, params, &mut r);
        let reposters = cascade(&graph, creator, |v, w| repost_probability(params, &interests, v, w, topic), &mut cascade_rng);
        if reposters.len() < params.min_reposts {
            redraws += 1;
            if redraws > params.max_redraws.saturating_mul(params.posts) {
                return Err(Error::InvalidArgument(format!(
                    "only {} of {} posts reached {} reposts; raise the repost rates or lower min_reposts",
                    posts.len(),
                    params.posts,
                    params.min_reposts
                )));
            }
            continue;
        }
        post_topics.push(topic);
        posts.push(Post {
            id: posts.len() as PostId,
            creator,
            text,
            reposters,
        });
    }

    let mut data = Vec::with_capacity(posts.len() * CONTENT_DIM);
    for post in &posts {
        data.extend(embedder.embed(&post.text)?);
    }
    let embeddings = EmbeddingTable::new(CONTENT_DIM, data)?;
    let ids: Vec<PostId> = (0..posts.len() as PostId).collect();
    let splits = split_posts(&ids, &params.split, &mut rng::seeded(rng::derive_seed(params.seed, &[3])))?;
    let corpus = Corpus::new(graph, posts, splits, embeddings, "synthetic")?;
    Ok(SyntheticCorpus {
        corpus,
        lexicon,
        truth: GroundTruth {
            user_topics,
            interests,
            post_topics,
        },
    })
}

fn follow_graph(params: &SyntheticParams, topics: &[usize], r: &mut Rng) -> Result<SocialGraph> {
    let n = params.users;
    let mut followers = vec![0usize; n];
    // Users of each topic who have already arrived.
    let mut arrived: Vec<Vec<usize>> = vec![Vec::new(); params.topics];
    let mut follows: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut stray = vec![0usize; n];
    arrived[topics[0]].push(0);
    for u in 1..n {
        let want = r.random_range(1..=2 * params.mean_follows - 1);
        for _ in 0..want {
            if !r.random_bool(params.topic_follow_rate) {
                stray[u] += 1;
                continue;
            }
            let pool: Vec<usize> = arrived[topics[u]].iter().copied().filter(|v| !follows[u].contains(v)).collect();
            if pool.is_empty() {
                continue;
            }
            let dist = WeightedIndex::new(pool.iter().map(|&v| (followers[v] + 1) as f64))
                .map_err(|e| Error::InvalidArgument(format!("attachment weights: {e}")))?;
            let v = pool[dist.sample(r)];
            follows[u].push(v);
            followers[v] += 1;
        }
        arrived[topics[u]].push(u);
    }
    // Follows outside one's community are placed once everyone exists, so early
    // arrivals don't collect them just for being there first.
    for u in 0..n {
        for _ in 0..stray[u] {
            let pool: Vec<usize> = arrived[r.random_range(0..params.topics)]
                .iter()
                .copied()
                .filter(|&v| v != u && !follows[u].contains(&v))
                .collect();
            if pool.is_empty() {
                continue;
            }
            let dist = WeightedIndex::new(pool.iter().map(|&v| ((followers[v] + 1) as f64).powf(params.stray_preference)))
                .map_err(|e| Error::InvalidArgument(format!("attachment weights: {e}")))?;
            let v = pool[dist.sample(r)];
            follows[u].push(v);
            followers[v] += 1;
        }
    }
    let mut edges = Vec::new();
    for (u, targets) in follows.iter_mut().enumerate() {
        targets.sort_unstable();
        for &v in targets.iter() {
            edges.push((u as UserId, v as UserId));
            if r.random_bool(params.reciprocity) {
                edges.push((v as UserId, u as UserId));
            }
        }
    }
    SocialGraph::build(&edges, n)
}

fn render_text(lexicon: &Lexicon, topic: usize, params: &SyntheticParams, r: &mut Rng) -> String {
    let words = &lexicon.topics[topic].words;
    let mut out: Vec<&str> = Vec::with_capacity(params.words_per_post);
    out.push(&words[r.random_range(0..words.len())]);
    for _ in 1..params.words_per_post {
        if r.random_bool(params.topic_word_rate) {
            out.push(&words[r.random_range(0..words.len())]);
        } else {
            out.push(&lexicon.filler[r.random_range(0..lexicon.filler.len())]);
        }
    }
    out.join(" ")
}

/// Ground-truth probability that `w` reposts a topic-`topic` post shared by `v`.
pub fn repost_probability(params: &SyntheticParams, interests: &[Vec<f64>], v: UserId, w: UserId, topic: usize) -> f64 {
    let s = params.sharer_weight;
    let sharer = (1.0 - s) + s * interests[v as usize][topic] / params.primary_interest;
    (params.base_repost + params.affinity_weight * interests[w as usize][topic] * sharer).min(1.0)
}

/// One IC run from `creator`; returns the activated users other than the
/// creator, sorted.
fn cascade(graph: &SocialGraph, creator: UserId, p: impl Fn(UserId, UserId) -> f64, r: &mut Rng) -> Vec<UserId> {
    let mut active = vec![false; graph.user_count()];
    active[creator as usize] = true;
    let mut queue = VecDeque::from([creator]);
    let mut out = Vec::new();
    while let Some(v) = queue.pop_front() {
        for &w in graph.followers(v) {
            if active[w as usize] {
                continue;
            }
            if r.random::<f64>() < p(v, w) {
                active[w as usize] = true;
                out.push(w);
                queue.push_back(w);
            }
        }
    }
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticParams {
        SyntheticParams {
            users: 200,
            posts: 100,
            ..SyntheticParams::default()
        }
    }

    #[test]
    fn small_corpus_is_valid() {
        let s = generate_synthetic(&small()).unwrap();
        s.corpus.validate().unwrap();
        assert_eq!(s.corpus.posts.len(), 100);
        assert_eq!(s.corpus.graph.user_count(), 200);
        assert_eq!(s.corpus.splits.len(), 100);
        assert!(s.corpus.posts.iter().any(|p| !p.reposters.is_empty()));
    }

    #[test]
    fn embeddings_reproduce_from_text() {
        let s = generate_synthetic(&small()).unwrap();
        let e = LexiconEmbedder::new(s.lexicon.clone());
        for post in s.corpus.posts.iter().take(5) {
            assert_eq!(e.embed(&post.text).unwrap(), s.corpus.embedding(post.id).unwrap());
            assert_eq!(e.dominant_topic(&post.text), Some(s.truth.post_topics[post.id as usize]));
        }
    }

    #[test]
    fn same_seed_same_files() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a"), dir.path().join("b"));
        generate_synthetic(&small()).unwrap().save(&a).unwrap();
        generate_synthetic(&small()).unwrap().save(&b).unwrap();
        for f in ["meta.json", "network.tsv", "posts.tsv", "splits.tsv", "embeddings.txt", "lexicon.json", "truth.json"] {
            assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
        }
        let loaded = Corpus::load(&a).unwrap();
        assert_eq!(loaded, generate_synthetic(&small()).unwrap().corpus);
    }
}
