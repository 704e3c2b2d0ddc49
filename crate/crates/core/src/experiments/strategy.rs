use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{format_gain, mean, relative_gain, tercile_groups, Harness};
use crate::dataio::PostId;
use crate::error::Result;
use crate::graph::{SocialGraph, UserId};
use crate::prompting::{PromptInputs, StrategyKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostRecord {
    pub post_id: PostId,
    pub creator: UserId,
    pub original_spread: f64,
    pub revised_spread: f64,
    pub refused: bool,
    /// The prompt fell back to a simpler strategy (empty neighborhood or no summary).
    pub fallback: bool,
    pub revised_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub strategy: StrategyKind,
    pub hops: usize,
    pub posts: usize,
    pub mean_original: f64,
    pub mean_revised: f64,
    pub gain_percent: f64,
    pub refusals: usize,
    pub fallbacks: usize,
    pub records: Vec<PostRecord>,
}

impl StrategyReport {
    fn from_records(strategy: StrategyKind, hops: usize, records: Vec<PostRecord>) -> Self {
        let mean_original = mean(records.iter().map(|r| r.original_spread));
        let mean_revised = mean(records.iter().map(|r| r.revised_spread));
        Self {
            strategy,
            hops,
            posts: records.len(),
            mean_original,
            mean_revised,
            gain_percent: relative_gain(mean_original, mean_revised),
            refusals: records.iter().filter(|r| r.refused).count(),
            fallbacks: records.iter().filter(|r| r.fallback).count(),
            records,
        }
    }

    pub fn gain(&self) -> String {
        format_gain(self.gain_percent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopCell {
    pub strategy: StrategyKind,
    pub hops: usize,
    pub mean_original: f64,
    pub mean_revised: f64,
    pub gain_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopReport {
    pub posts: usize,
    pub cells: Vec<HopCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupInfo {
    /// 1-based, lowest follower counts first.
    pub group: usize,
    pub creators: Vec<UserId>,
    pub min_followers: usize,
    pub max_followers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub strategy: StrategyKind,
    pub group: usize,
    pub posts: usize,
    pub mean_original: f64,
    pub mean_revised: f64,
    pub gain_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub groups: Vec<GroupInfo>,
    pub rows: Vec<GroupRow>,
}

/// Splits every strategy report's posts by their creator's degree group.
pub fn group_report(graph: &SocialGraph, reports: &[StrategyReport], group_count: usize) -> Result<GroupReport> {
    let mut creators: Vec<(UserId, usize)> = reports
        .iter()
        .flat_map(|r| r.records.iter().map(|p| (p.creator, graph.follower_count(p.creator))))
        .collect();
    creators.sort_unstable();
    creators.dedup();
    let members = tercile_groups(&creators, group_count)?;
    let mut group_of: BTreeMap<UserId, usize> = BTreeMap::new();
    let groups: Vec<GroupInfo> = members
        .into_iter()
        .enumerate()
        .map(|(i, creators)| {
            for &u in &creators {
                group_of.insert(u, i + 1);
            }
            let degrees = creators.iter().map(|&u| graph.follower_count(u));
            GroupInfo {
                group: i + 1,
                min_followers: degrees.clone().min().unwrap_or(0),
                max_followers: degrees.max().unwrap_or(0),
                creators,
            }
        })
        .collect();
    let mut rows = Vec::new();
    for report in reports {
        for info in &groups {
            let records: Vec<&PostRecord> = report
                .records
                .iter()
                .filter(|r| group_of[&r.creator] == info.group)
                .collect();
            let mean_original = mean(records.iter().map(|r| r.original_spread));
            let mean_revised = mean(records.iter().map(|r| r.revised_spread));
            rows.push(GroupRow {
                strategy: report.strategy,
                group: info.group,
                posts: records.len(),
                mean_original,
                mean_revised,
                gain_percent: relative_gain(mean_original, mean_revised),
            });
        }
    }
    Ok(GroupReport { groups, rows })
}

impl Harness {
    /// Revises every eval post with `strategy` and compares simulated spreads.
    pub fn evaluate_strategy(&self, strategy: StrategyKind, hops: usize) -> Result<StrategyReport> {
        let originals = self.original_spreads()?;
        let builder = self.prompt_builder()?;
        let frozen = self.model.frozen();
        let prompt_strategy = self.config.prompt_strategy(strategy, hops);
        let records = self
            .eval_posts()
            .par_iter()
            .map(|post| {
                let inputs = PromptInputs {
                    text: &post.text,
                    creator: post.creator,
                    embedding: self.corpus.embedding(post.id)?,
                };
                let mut r = self.strategy_rng(strategy.code(), post.id, hops);
                let prompt = builder.build(&prompt_strategy, &inputs, &mut r, &mut |p| self.summarize(p))?;
                let revision = self.revise(&prompt, post)?;
                let original_spread = originals[&post.id];
                // Same seed as the original, so an unchanged post scores identically.
                let revised_spread = self.spread(&frozen, post.id, post.creator, &revision.embedding)?;
                Ok(PostRecord {
                    post_id: post.id,
                    creator: post.creator,
                    original_spread,
                    revised_spread,
                    refused: revision.refused,
                    fallback: prompt.is_fallback(),
                    revised_text: revision.text,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let report = StrategyReport::from_records(strategy, hops, records);
        log::info!(
            "strategy {} (h={hops}): {:.2} -> {:.2} ({})",
            strategy,
            report.mean_original,
            report.mean_revised,
            report.gain()
        );
        Ok(report)
    }

    /// One report per configured strategy at `eval_hops`.
    pub fn run_strategy_eval(&self) -> Result<Vec<StrategyReport>> {
        self.config
            .strategies
            .iter()
            .map(|&s| self.evaluate_strategy(s, self.config.eval_hops))
            .collect()
    }

    /// Gain of every hop-dependent strategy at every configured hop count.
    pub fn run_hop_analysis(&self) -> Result<HopReport> {
        self.config.validate()?;
        let mut cells = Vec::new();
        for &strategy in &self.config.hop_strategies {
            for &hops in &self.config.hops {
                let r = self.evaluate_strategy(strategy, hops)?;
                cells.push(HopCell {
                    strategy,
                    hops,
                    mean_original: r.mean_original,
                    mean_revised: r.mean_revised,
                    gain_percent: r.gain_percent,
                });
            }
        }
        Ok(HopReport {
            posts: self.eval_posts().len(),
            cells,
        })
    }

    pub fn run_group_analysis(&self) -> Result<GroupReport> {
        let reports = self.run_strategy_eval()?;
        group_report(&self.corpus.graph, &reports, self.config.group_count)
    }
}
