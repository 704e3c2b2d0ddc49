//! Plain-text tables, JSON summaries and CSVs for every analysis. Output is a
//! pure function of the report, so identical runs give identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{format_gain, EstimatorReport, GroupReport, HopReport, SingularReport, StrategyReport};
use crate::error::{Error, Result};

pub trait Report: Serialize {
    /// File stem, e.g. `strategies` for `strategies.txt`.
    fn stem(&self) -> &'static str;

    fn text(&self) -> String;

    fn csv(&self) -> String;
}

/// Writes `<stem>.txt`, `<stem>.json` and `<stem>.csv` under `dir`.
pub fn write_report<R: Report + ?Sized>(dir: &Path, report: &R) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json = serde_json::to_string_pretty(report)? + "\n";
    let mut written = Vec::new();
    for (ext, body) in [("txt", report.text()), ("json", json), ("csv", report.csv())] {
        let path = dir.join(format!("{}.{ext}", report.stem()));
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

impl Report for [StrategyReport] {
    fn stem(&self) -> &'static str {
        "strategies"
    }

    fn text(&self) -> String {
        let mut out = String::new();
        let posts = self.first().map_or(0, |r| r.posts);
        let original = self.first().map_or(0.0, |r| r.mean_original);
        writeln!(out, "{:<10} {:>4} {:>6} {:>12} {:>9} {:>8} {:>9}", "strategy", "hops", "posts", "spread", "gain", "refused", "fallback").unwrap();
        writeln!(out, "{:<10} {:>4} {:>6} {:>12.2} {:>9} {:>8} {:>9}", "original", "-", posts, original, "-", "-", "-").unwrap();
        for r in self {
            writeln!(
                out,
                "{:<10} {:>4} {:>6} {:>12.2} {:>9} {:>8} {:>9}",
                r.strategy.id(),
                r.hops,
                r.posts,
                r.mean_revised,
                r.gain(),
                r.refusals,
                r.fallbacks
            )
            .unwrap();
        }
        out
    }

    fn csv(&self) -> String {
        let mut out = String::from("strategy,hops,post_id,creator,original_spread,revised_spread,refused,fallback\n");
        for r in self {
            for p in &r.records {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    r.strategy.id(),
                    r.hops,
                    p.post_id,
                    p.creator,
                    p.original_spread,
                    p.revised_spread,
                    p.refused,
                    p.fallback
                )
                .unwrap();
            }
        }
        out
    }
}

impl Report for SingularReport {
    fn stem(&self) -> &'static str {
        "singular"
    }

    fn text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{:>8} {:>8} {:>9} {:>12} {:>12} {:>8}", "post", "creator", "neighbors", "before", "after", "success").unwrap();
        for r in &self.records {
            writeln!(
                out,
                "{:>8} {:>8} {:>9} {:>12.6} {:>12.6} {:>8}",
                r.post_id,
                r.creator,
                r.neighbors.len(),
                r.mean_before,
                r.mean_after,
                r.success
            )
            .unwrap();
        }
        writeln!(out, "success rate: {:.2} over {} posts ({} skipped)", self.success_rate, self.records.len(), self.skipped.len()).unwrap();
        out
    }

    fn csv(&self) -> String {
        let mut out = String::from("post_id,creator,neighbors,mean_before,mean_after,success,refusals\n");
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.post_id,
                r.creator,
                r.neighbors.len(),
                r.mean_before,
                r.mean_after,
                r.success,
                r.refusals
            )
            .unwrap();
        }
        out
    }
}

impl Report for EstimatorReport {
    fn stem(&self) -> &'static str {
        "estimator"
    }

    fn text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} posts, {} simulations each", self.posts, self.rounds).unwrap();
        writeln!(out, "{:<16} {:>9} {:>9} {:>9}", "mode", "precision", "recall", "f1").unwrap();
        for r in &self.rows {
            writeln!(out, "{:<16} {:>9.4} {:>9.4} {:>9.4}", r.mode.to_string(), r.precision, r.recall, r.f1).unwrap();
        }
        out
    }

    fn csv(&self) -> String {
        let mut out = String::from("mode,precision,recall,f1\n");
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r.mode, r.precision, r.recall, r.f1).unwrap();
        }
        out
    }
}

impl Report for HopReport {
    fn stem(&self) -> &'static str {
        "hops"
    }

    fn text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{:<10} {:>4} {:>12} {:>12} {:>9}", "strategy", "hops", "original", "revised", "gain").unwrap();
        for c in &self.cells {
            writeln!(
                out,
                "{:<10} {:>4} {:>12.2} {:>12.2} {:>9}",
                c.strategy.id(),
                c.hops,
                c.mean_original,
                c.mean_revised,
                format_gain(c.gain_percent)
            )
            .unwrap();
        }
        out
    }

    fn csv(&self) -> String {
        let mut out = String::from("strategy,hops,mean_original,mean_revised,gain_percent\n");
        for c in &self.cells {
            writeln!(out, "{},{},{},{},{}", c.strategy.id(), c.hops, c.mean_original, c.mean_revised, c.gain_percent).unwrap();
        }
        out
    }
}

impl Report for GroupReport {
    fn stem(&self) -> &'static str {
        "groups"
    }

    fn text(&self) -> String {
        let mut out = String::new();
        for g in &self.groups {
            writeln!(
                out,
                "group {}: {} creators, {}-{} followers",
                g.group,
                g.creators.len(),
                g.min_followers,
                g.max_followers
            )
            .unwrap();
        }
        writeln!(out).unwrap();
        writeln!(out, "{:<10} {:>5} {:>6} {:>12} {:>12} {:>9}", "strategy", "group", "posts", "original", "revised", "gain").unwrap();
        for r in &self.rows {
            writeln!(
                out,
                "{:<10} {:>5} {:>6} {:>12.2} {:>12.2} {:>9}",
                r.strategy.id(),
                r.group,
                r.posts,
                r.mean_original,
                r.mean_revised,
                format_gain(r.gain_percent)
            )
            .unwrap();
        }
        out
    }

    fn csv(&self) -> String {
        let mut out = String::from("strategy,group,posts,mean_original,mean_revised,gain_percent\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.strategy.id(),
                r.group,
                r.posts,
                r.mean_original,
                r.mean_revised,
                r.gain_percent
            )
            .unwrap();
        }
        out
    }
}
