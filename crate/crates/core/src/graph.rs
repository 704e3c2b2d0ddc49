//! Follow graph in spread orientation.
//!
//! A follow edge `(follower, followee)` means the followee's posts reach the
//! follower, so the graph stores, for every user, the list of their followers
//! in compressed sparse row form. "Degree" throughout the crate means follower
//! count.

use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::Path;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

pub type UserId = u32;

/// Immutable follow graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialGraph {
    offsets: Vec<usize>,
    followers: Vec<UserId>,
    following_count: Vec<u32>,
}

impl SocialGraph {
    /// Build from `(follower, followee)` pairs. Self-loops and duplicates are
    /// dropped; any id `>= user_count` is rejected.
    pub fn build(edges: &[(UserId, UserId)], user_count: usize) -> Result<Self> {
        let mut spread: Vec<(UserId, UserId)> = Vec::with_capacity(edges.len());
        for &(follower, followee) in edges {
            if follower as usize >= user_count || followee as usize >= user_count {
                return Err(Error::EdgeOutOfRange {
                    follower,
                    followee,
                    user_count,
                });
            }
            if follower != followee {
                spread.push((followee, follower));
            }
        }
        spread.sort_unstable();
        spread.dedup();

        let mut offsets = vec![0usize; user_count + 1];
        let mut following_count = vec![0u32; user_count];
        for &(source, target) in &spread {
            offsets[source as usize + 1] += 1;
            following_count[target as usize] += 1;
        }
        for u in 0..user_count {
            offsets[u + 1] += offsets[u];
        }
        let followers = spread.into_iter().map(|(_, target)| target).collect();
        Ok(Self {
            offsets,
            followers,
            following_count,
        })
    }

    pub fn user_count(&self) -> usize {
        self.following_count.len()
    }

    pub fn edge_count(&self) -> usize {
        self.followers.len()
    }

    pub fn contains(&self, user: UserId) -> bool {
        (user as usize) < self.user_count()
    }

    pub(crate) fn check_user(&self, user: UserId) -> Result<()> {
        if self.contains(user) {
            Ok(())
        } else {
            Err(Error::UnknownUser(user))
        }
    }

    /// Users that receive `user`'s content, ascending.
    pub fn followers(&self, user: UserId) -> &[UserId] {
        &self.followers[self.edge_range(user)]
    }

    pub fn follower_count(&self, user: UserId) -> usize {
        let r = self.edge_range(user);
        r.end - r.start
    }

    /// Number of accounts `user` follows.
    pub fn following_count(&self, user: UserId) -> usize {
        self.following_count[user as usize] as usize
    }

    /// Positions of `user`'s outgoing spread edges in the global edge order.
    pub fn edge_range(&self, user: UserId) -> Range<usize> {
        let u = user as usize;
        self.offsets[u]..self.offsets[u + 1]
    }

    /// Spread edges `(source, target)` in global edge order.
    pub fn spread_edges(&self) -> impl Iterator<Item = (UserId, UserId)> + '_ {
        (0..self.user_count() as UserId)
            .flat_map(move |u| self.followers(u).iter().map(move |&v| (u, v)))
    }

    /// Follow edges `(follower, followee)`.
    pub fn follow_edges(&self) -> impl Iterator<Item = (UserId, UserId)> + '_ {
        self.spread_edges().map(|(followee, follower)| (follower, followee))
    }

    /// Every user reachable from `user` along spread edges, `user` included, ascending.
    pub fn reachable(&self, user: UserId) -> Result<Vec<UserId>> {
        self.check_user(user)?;
        let layers = self.bfs_layers(user, usize::MAX);
        let mut out: Vec<UserId> = layers.into_iter().flatten().collect();
        out.push(user);
        out.sort_unstable();
        Ok(out)
    }

    /// The h-hop audience of `user`: everyone reachable in 1..=h steps, excluding `user`.
    pub fn neighborhood(&self, user: UserId, hops: usize) -> Result<Vec<UserId>> {
        self.check_user(user)?;
        if hops == 0 {
            return Err(Error::ZeroHop);
        }
        let mut out: Vec<UserId> = self.bfs_layers(user, hops).into_iter().flatten().collect();
        out.sort_unstable();
        Ok(out)
    }

    fn bfs_layers(&self, start: UserId, max_depth: usize) -> Vec<Vec<UserId>> {
        let mut seen = vec![false; self.user_count()];
        seen[start as usize] = true;
        let mut layers = Vec::new();
        let mut frontier = VecDeque::from([start]);
        let mut depth = 0;
        while !frontier.is_empty() && depth < max_depth {
            let mut next = Vec::new();
            while let Some(u) = frontier.pop_front() {
                for &v in self.followers(u) {
                    if !seen[v as usize] {
                        seen[v as usize] = true;
                        next.push(v);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier.extend(next.iter().copied());
            layers.push(next);
            depth += 1;
        }
        layers
    }

    /// Degree-boosted propagation of the creator's one-hot vector.
    ///
    /// With `S[u][i] = sqrt(d_u) * A[u][i] * sqrt(d_i)` (d = follower count),
    /// the score of audience member `i` is `sum_{l=1..h} (S^l)[creator][i]`.
    /// `S` is never materialised: each layer is one sparse pass over the edges.
    pub fn importance_scores(&self, creator: UserId, hops: usize) -> Result<ImportanceVector> {
        let audience = self.neighborhood(creator, hops)?;
        let n = self.user_count();
        let sqrt_deg: Vec<f64> = (0..n as UserId)
            .map(|u| (self.follower_count(u) as f64).sqrt())
            .collect();

        let mut current = vec![0.0f64; n];
        current[creator as usize] = 1.0;
        let mut total = vec![0.0f64; n];
        for _ in 0..hops {
            let mut next = vec![0.0f64; n];
            for (u, &mass) in current.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                let out = mass * sqrt_deg[u];
                for &v in self.followers(u as UserId) {
                    next[v as usize] += out * sqrt_deg[v as usize];
                }
            }
            for (t, x) in total.iter_mut().zip(&next) {
                *t += x;
            }
            current = next;
        }

        let entries = audience
            .into_iter()
            .map(|i| (i, total[i as usize]))
            .collect();
        ImportanceVector::new(creator, hops, entries)
    }
}

/// Importance of each audience member for one creator and hop count.
///
/// Scores are stored only for members of the audience; everyone else scores 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceVector {
    creator: UserId,
    hops: usize,
    entries: Vec<(UserId, f64)>,
}

impl ImportanceVector {
    pub fn new(creator: UserId, hops: usize, mut entries: Vec<(UserId, f64)>) -> Result<Self> {
        if hops == 0 {
            return Err(Error::ZeroHop);
        }
        if entries.iter().any(|&(_, s)| !s.is_finite()) {
            return Err(Error::NonFinite("importance scores"));
        }
        if entries.iter().any(|&(_, s)| s < 0.0) {
            return Err(Error::InvalidArgument("importance scores must be non-negative".into()));
        }
        entries.sort_by_key(|&(u, _)| u);
        entries.dedup_by_key(|&mut (u, _)| u);
        Ok(Self {
            creator,
            hops,
            entries,
        })
    }

    pub fn creator(&self) -> UserId {
        self.creator
    }

    pub fn hops(&self) -> usize {
        self.hops
    }

    /// `(member, score)` pairs, ascending by member id.
    pub fn entries(&self) -> &[(UserId, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn score(&self, user: UserId) -> f64 {
        self.entries
            .binary_search_by_key(&user, |&(u, _)| u)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    /// Highest-scoring member, lowest id on ties.
    pub fn argmax(&self) -> Option<UserId> {
        let mut best: Option<(UserId, f64)> = None;
        for &(u, s) in &self.entries {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((u, s));
            }
        }
        best.map(|(u, _)| u)
    }

    /// Draw `k` distinct members, each draw picking among the remaining
    /// members with probability proportional to `exp(score)`.
    ///
    /// When the audience has at most `k` members all of them are returned,
    /// in draw order. An empty audience yields [`Error::EmptyNeighborhood`].
    pub fn softmax_sample(&self, k: usize, rng: &mut Rng) -> Result<Vec<UserId>> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if self.entries.is_empty() {
            return Err(Error::EmptyNeighborhood);
        }
        let mut remaining = self.entries.clone();
        let mut picked = Vec::with_capacity(k.min(remaining.len()));
        while picked.len() < k && !remaining.is_empty() {
            let scores: Vec<f64> = remaining.iter().map(|&(_, s)| s).collect();
            let idx = softmax_index(&scores, rng);
            picked.push(remaining.remove(idx).0);
        }
        Ok(picked)
    }
}

/// Index drawn with probability proportional to `exp(scores[i])`.
pub(crate) fn softmax_index(scores: &[f64], rng: &mut Rng) -> usize {
    debug_assert!(!scores.is_empty());
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut target = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if target < *w {
            return i;
        }
        target -= w;
    }
    // Rounding left a sliver past the last bucket.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Read a `follower<TAB>followee` edge list.
pub fn read_edge_list(path: &Path) -> Result<Vec<(UserId, UserId)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut edges = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        let parse = |s: Option<&str>| -> Result<UserId> {
            s.and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::parse(path, i + 1, "expected `follower<TAB>followee`"))
        };
        let follower = parse(cols.next())?;
        let followee = parse(cols.next())?;
        edges.push((follower, followee));
    }
    Ok(edges)
}

pub fn write_edge_list(path: &Path, graph: &SocialGraph) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut edges: Vec<(UserId, UserId)> = graph.follow_edges().collect();
    edges.sort_unstable();
    for (follower, followee) in edges {
        writeln!(out, "{follower}\t{followee}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
