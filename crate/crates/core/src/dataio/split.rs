use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{PostId, Splits};
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.6,
            val: 0.2,
            test: 0.2,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|r| !(0.0..=1.0).contains(r)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "split ratios {parts:?} must be in [0, 1] and sum to 1"
            )));
        }
        Ok(())
    }
}

/// Shuffles `posts`, then cuts at `round(train * n)` and `round((train + val) * n)`.
/// Each resulting list is sorted ascending.
pub fn split_posts(posts: &[PostId], ratios: &SplitRatios, rng: &mut Rng) -> Result<Splits> {
    ratios.validate()?;
    if posts.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 posts to split, got {}",
            posts.len()
        )));
    }
    let n = posts.len() as f64;
    let mut order = posts.to_vec();
    order.shuffle(rng);
    let a = (ratios.train * n).round() as usize;
    let b = (((ratios.train + ratios.val) * n).round() as usize).max(a);
    let mut splits = Splits {
        train: order[..a].to_vec(),
        val: order[a..b].to_vec(),
        test: order[b..].to_vec(),
    };
    splits.train.sort_unstable();
    splits.val.sort_unstable();
    splits.test.sort_unstable();
    Ok(splits)
}
