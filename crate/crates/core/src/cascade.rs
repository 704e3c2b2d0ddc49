//! Independent Cascade simulation.
//!
//! Each newly activated user gets exactly one attempt on every still-inactive
//! follower, succeeding with the edge probability. Within a round the attempts
//! are made in ascending `(target, source)` order so the random stream is pinned;
//! the cascade distribution does not depend on that order.
//!
//! Simulation `i` of a batch draws from `rng::stream(base_seed, i)`, so batches
//! run in parallel and still reproduce bit-for-bit.

use std::collections::HashSet;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{EdgeAttribution, EstimatorModel};
use crate::graph::{SocialGraph, UserId};
use crate::rng::{self, Rng};

/// Simulation rounds used when evaluating influence.
pub const DEFAULT_ROUNDS: usize = 20;

/// Largest edge count `exact_influence` will enumerate.
pub const MAX_EXACT_EDGES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "p", rename_all = "snake_case")]
pub enum ProbabilityMode {
    /// Estimator-derived, content dependent.
    Learned,
    /// The same probability on every edge.
    Fixed(f64),
    /// `1 / (number of accounts the target follows)`.
    InverseDegree,
}

impl ProbabilityMode {
    /// Learned, fixed 0.1 through 0.6, and inverse degree.
    pub fn standard_sweep() -> Vec<ProbabilityMode> {
        let mut modes = vec![ProbabilityMode::Learned];
        modes.extend((1..=6).map(|i| ProbabilityMode::Fixed(i as f64 / 10.0)));
        modes.push(ProbabilityMode::InverseDegree);
        modes
    }
}

impl fmt::Display for ProbabilityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbabilityMode::Learned => write!(f, "learned"),
            ProbabilityMode::Fixed(p) => write!(f, "fixed({p})"),
            ProbabilityMode::InverseDegree => write!(f, "inverse_degree"),
        }
    }
}

impl FromStr for ProbabilityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "learned" => return Ok(ProbabilityMode::Learned),
            "inverse_degree" | "inverse-degree" => return Ok(ProbabilityMode::InverseDegree),
            _ => {}
        }
        let inner = s
            .strip_prefix("fixed(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| s.strip_prefix("fixed:"));
        inner
            .and_then(|p| p.parse::<f64>().ok())
            .filter(|p| (0.0..=1.0).contains(p))
            .map(ProbabilityMode::Fixed)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown probability mode `{s}`")))
    }
}

/// Activation probability for every spread edge, in the graph's edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeProbabilityMap {
    mode: ProbabilityMode,
    probabilities: Vec<f64>,
}

impl EdgeProbabilityMap {
    pub fn new(mode: ProbabilityMode, probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument(
                "edge probabilities must lie in [0, 1]".into(),
            ));
        }
        Ok(Self {
            mode,
            probabilities,
        })
    }

    pub fn fixed(graph: &SocialGraph, p: f64) -> Result<Self> {
        Self::new(ProbabilityMode::Fixed(p), vec![p; graph.edge_count()])
    }

    pub fn inverse_degree(graph: &SocialGraph) -> Self {
        let probabilities = graph
            .spread_edges()
            .map(|(_, target)| 1.0 / graph.following_count(target) as f64)
            .collect();
        Self {
            mode: ProbabilityMode::InverseDegree,
            probabilities,
        }
    }

    pub fn mode(&self) -> ProbabilityMode {
        self.mode
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn by_index(&self, edge: usize) -> f64 {
        self.probabilities[edge]
    }

    pub fn get(&self, graph: &SocialGraph, source: UserId, target: UserId) -> Option<f64> {
        let range = graph.edge_range(source);
        graph
            .followers(source)
            .binary_search(&target)
            .ok()
            .map(|i| self.probabilities[range.start + i])
    }

    pub(crate) fn set_by_index(&mut self, edge: usize, p: f64) {
        self.probabilities[edge] = p;
    }
}

/// Inputs needed for the learned mode.
#[derive(Debug, Clone, Copy)]
pub struct LearnedInputs<'a> {
    pub model: &'a EstimatorModel,
    pub creator: UserId,
    pub content_embedding: &'a [f64],
    pub attribution: EdgeAttribution,
}

pub fn assign_probabilities(
    mode: ProbabilityMode,
    graph: &SocialGraph,
    learned: Option<LearnedInputs<'_>>,
) -> Result<EdgeProbabilityMap> {
    match mode {
        ProbabilityMode::Fixed(p) => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("fixed probability {p} outside [0, 1]")));
            }
            EdgeProbabilityMap::fixed(graph, p)
        }
        ProbabilityMode::InverseDegree => Ok(EdgeProbabilityMap::inverse_degree(graph)),
        ProbabilityMode::Learned => {
            let inputs = learned.ok_or_else(|| {
                Error::InvalidArgument("learned mode needs a model and a content embedding".into())
            })?;
            inputs
                .model
                .edge_probabilities_for_content(graph, inputs.creator, inputs.content_embedding, inputs.attribution)
        }
    }
}

/// One IC run from `seed_user`. Returns the activated users, ascending, seed included.
pub fn simulate_once(
    graph: &SocialGraph,
    probs: &EdgeProbabilityMap,
    seed_user: UserId,
    rng: &mut Rng,
) -> Vec<UserId> {
    let mut active = vec![false; graph.user_count()];
    active[seed_user as usize] = true;
    let mut activated = vec![seed_user];
    let mut frontier = vec![seed_user];
    let mut attempts: Vec<(UserId, UserId, usize)> = Vec::new();

    while !frontier.is_empty() {
        attempts.clear();
        for &source in &frontier {
            let range = graph.edge_range(source);
            for (offset, &target) in graph.followers(source).iter().enumerate() {
                if !active[target as usize] {
                    attempts.push((target, source, range.start + offset));
                }
            }
        }
        attempts.sort_unstable();

        let mut next = Vec::new();
        for &(target, _, edge) in &attempts {
            if active[target as usize] {
                continue;
            }
            if rng.random::<f64>() < probs.by_index(edge) {
                active[target as usize] = true;
                next.push(target);
            }
        }
        activated.extend_from_slice(&next);
        frontier = next;
    }
    activated.sort_unstable();
    activated
}

/// Monte-Carlo influence estimate for one seed user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceResult {
    pub seed_user: UserId,
    pub rounds: usize,
    pub activations: Vec<Vec<UserId>>,
    /// Mean number of activated users, seed included.
    pub spread: f64,
}

impl InfluenceResult {
    pub fn sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.activations.iter().map(Vec::len)
    }

    /// Standard error of the mean spread (sample standard deviation / sqrt(R)).
    pub fn standard_error(&self) -> f64 {
        let r = self.rounds as f64;
        if self.rounds < 2 {
            return 0.0;
        }
        let var = self
            .sizes()
            .map(|n| (n as f64 - self.spread).powi(2))
            .sum::<f64>()
            / (r - 1.0);
        (var / r).sqrt()
    }
}

pub fn influence_spread(
    graph: &SocialGraph,
    probs: &EdgeProbabilityMap,
    seed_user: UserId,
    rounds: usize,
    base_seed: u64,
) -> Result<InfluenceResult> {
    graph.check_user(seed_user)?;
    if rounds == 0 {
        return Err(Error::InvalidArgument("need at least one simulation".into()));
    }
    let activations: Vec<Vec<UserId>> = (0..rounds as u64)
        .into_par_iter()
        .map(|i| simulate_once(graph, probs, seed_user, &mut rng::stream(base_seed, i)))
        .collect();
    let total: usize = activations.iter().map(Vec::len).sum();
    Ok(InfluenceResult {
        seed_user,
        rounds,
        spread: total as f64 / rounds as f64,
        activations,
    })
}

/// Expected spread by enumerating every live/blocked configuration of the
/// edges reachable from `seed_user`.
pub fn exact_influence(graph: &SocialGraph, probs: &EdgeProbabilityMap, seed_user: UserId) -> Result<f64> {
    let reachable = graph.reachable(seed_user)?;
    let mut local = vec![usize::MAX; graph.user_count()];
    for (i, &u) in reachable.iter().enumerate() {
        local[u as usize] = i;
    }
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for &u in &reachable {
        let range = graph.edge_range(u);
        for (offset, &v) in graph.followers(u).iter().enumerate() {
            edges.push((local[u as usize], local[v as usize], probs.by_index(range.start + offset)));
        }
    }
    if edges.len() > MAX_EXACT_EDGES {
        return Err(Error::TooManyEdges {
            got: edges.len(),
            max: MAX_EXACT_EDGES,
        });
    }

    let n = reachable.len();
    let start = local[seed_user as usize];
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut expected = 0.0;
    for mask in 0u32..(1u32 << edges.len()) {
        let mut weight = 1.0;
        for (bit, &(_, _, p)) in edges.iter().enumerate() {
            weight *= if mask & (1 << bit) != 0 { p } else { 1.0 - p };
        }
        if weight == 0.0 {
            continue;
        }
        for list in adjacency.iter_mut() {
            list.clear();
        }
        for (bit, &(s, t, _)) in edges.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                adjacency[s].push(t);
            }
        }
        let mut seen = vec![false; n];
        seen[start] = true;
        let mut stack = vec![start];
        let mut count = 1usize;
        while let Some(u) = stack.pop() {
            for &v in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        expected += weight * count as f64;
    }
    Ok(expected)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpreadMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Compare one simulated activation set with observed reposts.
///
/// Predicted positives are the activated users other than the seed that appear in
/// either ground-truth set. Zero denominators give 0.
pub fn spread_metrics(
    activated: &[UserId],
    positives: &HashSet<UserId>,
    negatives: &HashSet<UserId>,
    seed_user: UserId,
) -> Result<SpreadMetrics> {
    if let Some(&u) = positives.intersection(negatives).min() {
        return Err(Error::OverlappingGroundTruth(u));
    }
    if positives.contains(&seed_user) || negatives.contains(&seed_user) {
        return Err(Error::InvalidArgument(
            "seed user must not be part of the ground truth".into(),
        ));
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    for u in activated.iter().filter(|&&u| u != seed_user) {
        if positives.contains(u) {
            tp += 1;
        } else if negatives.contains(u) {
            fp += 1;
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, positives.len());
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(SpreadMetrics {
        precision,
        recall,
        f1,
    })
}

/// One row of an influence report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub post_id: u32,
    pub seed_user: UserId,
    pub rounds: usize,
    pub spread: f64,
    pub sizes: Option<Vec<usize>>,
}

impl ReportRow {
    pub fn from_result(post_id: u32, result: &InfluenceResult, with_sizes: bool) -> Self {
        Self {
            post_id,
            seed_user: result.seed_user,
            rounds: result.rounds,
            spread: result.spread,
            sizes: with_sizes.then(|| result.sizes().collect()),
        }
    }
}

pub const REPORT_HEADER: &str = "#post_id\tseed_user\trounds\tspread\tsizes";

/// Tab-separated influence report: a header line, then one row per post with
/// the per-simulation sizes comma separated (`-` when omitted).
pub fn write_influence_report<W: Write>(out: &mut W, rows: &[ReportRow]) -> io::Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for row in rows {
        let sizes = match &row.sizes {
            Some(s) => s.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
            None => "-".to_string(),
        };
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            row.post_id, row.seed_user, row.rounds, row.spread, sizes
        )?;
    }
    Ok(())
}

pub fn read_influence_report<R: BufRead>(input: R) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<report>", e))?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let bad = || Error::parse("<report>", i + 1, "malformed report row");
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(bad());
        }
        let sizes = if cols[4] == "-" {
            None
        } else if cols[4].is_empty() {
            Some(Vec::new())
        } else {
            Some(
                cols[4]
                    .split(',')
                    .map(|s| s.parse().map_err(|_| bad()))
                    .collect::<Result<Vec<usize>>>()?,
            )
        };
        rows.push(ReportRow {
            post_id: cols[0].parse().map_err(|_| bad())?,
            seed_user: cols[1].parse().map_err(|_| bad())?,
            rounds: cols[2].parse().map_err(|_| bad())?,
            spread: cols[3].parse().map_err(|_| bad())?,
            sizes,
        });
    }
    Ok(rows)
}
