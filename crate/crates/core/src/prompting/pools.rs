use std::cmp::Ordering;

use rand::seq::index;

use crate::dataio::{EmbeddingTable, PostId};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Top and bottom fifth of training posts by repost count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PopularityPools {
    /// Most reposted first.
    pub popular: Vec<PostId>,
    /// Least reposted first.
    pub unpopular: Vec<PostId>,
}

/// Sorts by (repost count desc, post id asc) and takes `ceil(n / 5)` posts from
/// each end.
pub fn classify_popularity(posts: &[(PostId, usize)]) -> Result<PopularityPools> {
    let n = posts.len();
    if n < 5 {
        return Err(Error::InvalidArgument(format!(
            "popularity pools need at least 5 posts, got {n}"
        )));
    }
    let mut ranked = posts.to_vec();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut k = n.div_ceil(5);
    if 2 * k > n {
        k = n / 2;
    }
    Ok(PopularityPools {
        popular: ranked[..k].iter().map(|p| p.0).collect(),
        unpopular: ranked[n - k..].iter().rev().map(|p| p.0).collect(),
    })
}

/// Few-shot exemplar selection for Prompts 2.1 and 2.2.
#[derive(Debug, Clone)]
pub struct FewShotSelector {
    pools: PopularityPools,
    k_each: usize,
    fixed_popular: Vec<PostId>,
    fixed_unpopular: Vec<PostId>,
}

impl FewShotSelector {
    /// Draws the fixed exemplars once; they are reused for every input.
    pub fn new(pools: PopularityPools, k_each: usize, rng: &mut Rng) -> Result<Self> {
        if k_each == 0 {
            return Err(Error::InvalidArgument("k_each must be at least 1".into()));
        }
        let draw = |pool: &[PostId], rng: &mut Rng| -> Vec<PostId> {
            if pool.len() < k_each {
                log::warn!("pool has {} posts, fewer than {k_each}; using all", pool.len());
            }
            index::sample(rng, pool.len(), k_each.min(pool.len()))
                .into_iter()
                .map(|i| pool[i])
                .collect()
        };
        let fixed_popular = draw(&pools.popular, rng);
        let fixed_unpopular = draw(&pools.unpopular, rng);
        Ok(Self {
            pools,
            k_each,
            fixed_popular,
            fixed_unpopular,
        })
    }

    pub fn pools(&self) -> &PopularityPools {
        &self.pools
    }

    pub fn fixed(&self) -> (&[PostId], &[PostId]) {
        (&self.fixed_popular, &self.fixed_unpopular)
    }

    /// Most cosine-similar posts to `input` from each pool, ties by post id.
    pub fn similar(&self, input: &[f64], embeddings: &EmbeddingTable) -> Result<(Vec<PostId>, Vec<PostId>)> {
        let pick = |pool: &[PostId]| -> Result<Vec<PostId>> {
            let mut scored = Vec::with_capacity(pool.len());
            for &id in pool {
                let row = embeddings.row(id).ok_or(Error::UnknownPost(id))?;
                scored.push((cosine(input, row), id));
            }
            scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
            Ok(scored.into_iter().take(self.k_each).map(|(_, id)| id).collect())
        };
        Ok((pick(&self.pools.popular)?, pick(&self.pools.unpopular)?))
    }
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
