//! Revision prompts and the samplers that fill them.
//!
//! Every revision prompt is the shared instruction paragraph, an optional
//! context block, and the input line, separated by blank lines:
//!
//! ```text
//! Instruction: Imagine you have a piece of text ... likes, and comments.
//!
//! <Demonstration / Neighborhood Information block, if any>
//!
//! Input Data: Input text={<input post>}.
//! ```
//!
//! Posts inserted into a block are quoted and joined as described in
//! [`format_post_list`]. Templates live in `templates/*.txt`.

mod builder;
mod pools;
mod sampling;
mod template;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use builder::{PromptBuilder, PromptInputs};
pub use pools::{classify_popularity, FewShotSelector, PopularityPools};
pub use sampling::{sample_interest_posts, sample_neighbor_posts, InterestVariant, NeighborVariant, SampledPosts};
pub use template::{format_post_list, parse_post_list, quote_post, render_template};

use crate::dataio::PostId;
use crate::error::{Error, Result};

const INSTRUCTION: &str = include_str!("../../templates/instruction.txt");
const INPUT: &str = include_str!("../../templates/input.txt");
const DEMONSTRATION: &str = include_str!("../../templates/demonstration.txt");
const NEIGHBOR_POSTS: &str = include_str!("../../templates/neighbor_posts.txt");
const NEIGHBOR_INTEREST: &str = include_str!("../../templates/neighbor_interest.txt");
const INTEREST_SUMMARIZATION: &str = include_str!("../../templates/interest_summarization.txt");

/// Marks the start of the input payload in every revision prompt.
pub const INPUT_MARKER: &str = "\n\nInput Data: Input text={";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    /// Prompt 1.
    ZeroShot,
    /// Prompt 2.1.
    FewShotFixed,
    /// Prompt 2.2.
    FewShotSimilar,
    /// Prompt 3.0.
    NeighborPostsGlobal,
    /// Prompt 3.1.
    NeighborPostsRandom,
    /// Prompt 3.2.
    NeighborPostsInfluential,
    /// Prompt 4.1.
    InterestUniform,
    /// Prompt 4.2.
    InterestScored,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 8] = [
        StrategyKind::ZeroShot,
        StrategyKind::FewShotFixed,
        StrategyKind::FewShotSimilar,
        StrategyKind::NeighborPostsGlobal,
        StrategyKind::NeighborPostsRandom,
        StrategyKind::NeighborPostsInfluential,
        StrategyKind::InterestUniform,
        StrategyKind::InterestScored,
    ];

    pub fn id(self) -> &'static str {
        match self {
            StrategyKind::ZeroShot => "1",
            StrategyKind::FewShotFixed => "2.1",
            StrategyKind::FewShotSimilar => "2.2",
            StrategyKind::NeighborPostsGlobal => "3.0",
            StrategyKind::NeighborPostsRandom => "3.1",
            StrategyKind::NeighborPostsInfluential => "3.2",
            StrategyKind::InterestUniform => "4.1",
            StrategyKind::InterestScored => "4.2",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::ZeroShot => "zero_shot",
            StrategyKind::FewShotFixed => "few_shot_fixed",
            StrategyKind::FewShotSimilar => "few_shot_similar",
            StrategyKind::NeighborPostsGlobal => "neighbor_posts_global",
            StrategyKind::NeighborPostsRandom => "neighbor_posts_random",
            StrategyKind::NeighborPostsInfluential => "neighbor_posts_influential",
            StrategyKind::InterestUniform => "interest_uniform",
            StrategyKind::InterestScored => "interest_scored",
        }
    }

    /// Strategies whose context depends on the creator's neighborhood depth.
    pub fn uses_hops(self) -> bool {
        matches!(
            self,
            StrategyKind::NeighborPostsRandom
                | StrategyKind::NeighborPostsInfluential
                | StrategyKind::InterestUniform
                | StrategyKind::InterestScored
        )
    }

    pub fn is_structure_aware(self) -> bool {
        self.uses_hops() || self == StrategyKind::NeighborPostsGlobal
    }

    /// Small stable integer used when deriving per-strategy seeds.
    pub fn code(self) -> u64 {
        Self::ALL.iter().position(|&k| k == self).expect("listed") as u64
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let s = s.strip_prefix("prompt").map_or(s, str::trim);
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.id() == s || k.name() == s || (s == "3" && *k == StrategyKind::NeighborPostsGlobal))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown prompt strategy `{s}`")))
    }
}

impl Serialize for StrategyKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.id())
    }
}

impl<'de> Deserialize<'de> for StrategyKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A strategy with its sampling sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptStrategy {
    pub kind: StrategyKind,
    pub k_fewshot_each: usize,
    pub k_neighbor_posts: usize,
    pub k_interest_posts: usize,
    pub hops: usize,
}

impl PromptStrategy {
    pub fn new(kind: StrategyKind) -> Self {
        Self {
            kind,
            k_fewshot_each: 2,
            k_neighbor_posts: 3,
            k_interest_posts: 10,
            hops: 1,
        }
    }

    pub fn with_hops(mut self, hops: usize) -> Self {
        self.hops = hops;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_fewshot_each == 0 || self.k_neighbor_posts == 0 || self.k_interest_posts == 0 {
            return Err(Error::InvalidArgument("prompt sample sizes must be at least 1".into()));
        }
        if self.hops == 0 {
            return Err(Error::ZeroHop);
        }
        Ok(())
    }
}

/// Context inserted between the instruction and the input line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PromptContext {
    None,
    FewShot {
        popular: Vec<String>,
        unpopular: Vec<String>,
    },
    NeighborPosts(Vec<String>),
    Interest(String),
}

/// Which template produced a prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Revision(StrategyKind),
    InterestSummarization,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptText {
    pub text: String,
    pub kind: PromptKind,
    /// Strategy the caller asked for; differs from `kind` after a fallback.
    pub requested: Option<StrategyKind>,
    /// Every post inserted, in insertion order (for Prompt 4.x, the posts that
    /// were summarized).
    pub provenance: Vec<PostId>,
}

impl PromptText {
    pub fn is_fallback(&self) -> bool {
        match (self.kind, self.requested) {
            (PromptKind::Revision(k), Some(r)) => k != r,
            _ => false,
        }
    }
}

fn section(template: &str) -> &str {
    template.trim_end_matches(['\n', '\r'])
}

/// Renders a revision prompt. The input text is inserted unmodified.
pub fn render_prompt(kind: StrategyKind, input: &str, context: &PromptContext) -> Result<String> {
    let missing = || Error::MissingContext(kind.id().to_string());
    let block = match (kind, context) {
        (StrategyKind::ZeroShot, PromptContext::None) => None,
        (StrategyKind::FewShotFixed | StrategyKind::FewShotSimilar, PromptContext::FewShot { popular, unpopular }) => {
            if popular.is_empty() || unpopular.is_empty() {
                return Err(missing());
            }
            Some(render_template(
                section(DEMONSTRATION),
                &[
                    ("popular", &format_post_list(popular)),
                    ("unpopular", &format_post_list(unpopular)),
                ],
            )?)
        }
        (
            StrategyKind::NeighborPostsGlobal | StrategyKind::NeighborPostsRandom | StrategyKind::NeighborPostsInfluential,
            PromptContext::NeighborPosts(posts),
        ) => {
            if posts.is_empty() {
                return Err(missing());
            }
            Some(render_template(section(NEIGHBOR_POSTS), &[("posts", &format_post_list(posts))])?)
        }
        (StrategyKind::InterestUniform | StrategyKind::InterestScored, PromptContext::Interest(interest)) => {
            if interest.trim().is_empty() {
                return Err(missing());
            }
            Some(render_template(section(NEIGHBOR_INTEREST), &[("interest", interest)])?)
        }
        _ => return Err(missing()),
    };
    let mut out = String::from(section(INSTRUCTION));
    if let Some(block) = block {
        out.push_str("\n\n");
        out.push_str(&block);
    }
    out.push_str("\n\n");
    out.push_str(&render_template(section(INPUT), &[("input", input)])?);
    Ok(out)
}

pub fn render_interest_summarization_prompt<S: AsRef<str>>(posts: &[S]) -> Result<String> {
    if posts.is_empty() {
        return Err(Error::MissingContext("interest summarization".into()));
    }
    render_template(section(INTEREST_SUMMARIZATION), &[("posts", &format_post_list(posts))])
}

/// Recovers the input post from a rendered revision prompt.
pub fn extract_input(prompt: &str) -> Option<&str> {
    let start = prompt.find(INPUT_MARKER)? + INPUT_MARKER.len();
    prompt[start..].strip_suffix("}.")
}

/// The quoted-post list of a rendered prompt's context block, if it has one.
pub fn extract_context_posts(prompt: &str) -> Option<Vec<String>> {
    const OPENERS: [&str; 3] = [
        "Your audience has interacted with the following posts: ",
        "Your audience have interacted with the following posts: ",
        "Following are the examples of popular posts: ",
    ];
    let head = prompt.find(INPUT_MARKER).map_or(prompt, |end| &prompt[..end]);
    for opener in OPENERS {
        if let Some(pos) = head.find(opener) {
            let rest = &head[pos + opener.len()..];
            let end = rest.rfind("\". ").map(|i| i + 1).or_else(|| rest.rfind("\".").map(|i| i + 1))?;
            let list = &rest[..end];
            // Demonstration blocks hold two lists; only the popular one is returned.
            let list = list
                .split_once(". Following are the examples of unpopular posts: ")
                .map_or(list, |(popular, _)| popular);
            return parse_post_list(list);
        }
    }
    None
}

/// The interest string of a rendered Prompt 4.x.
pub fn extract_interest(prompt: &str) -> Option<&str> {
    const OPENER: &str = "Your audience has the following interest: ";
    const CLOSER: &str = ". Based on their preferences, now transform the text for higher popularity.";
    let head = &prompt[..prompt.find(INPUT_MARKER)?];
    let start = head.find(OPENER)? + OPENER.len();
    let rest = &head[start..];
    Some(&rest[..rest.rfind(CLOSER)?])
}
