use std::collections::HashMap;

use sha2::{Digest, Sha256};

use super::{ChatModel, ModelReply};
use crate::embed::tokenize;
use crate::prompting::{extract_context_posts, extract_input};

/// Tokens ignored by offline interest summaries.
pub const STOPWORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "an", "and", "any", "are", "as", "at", "be", "been", "but", "by", "can", "day",
    "do", "for", "from", "get", "great", "had", "has", "have", "he", "her", "his", "how", "i", "if", "in", "into", "is",
    "it", "its", "just", "like", "me", "more", "my", "new", "no", "not", "now", "of", "on", "one", "or", "our", "out",
    "really", "she", "so", "some", "than", "that", "the", "their", "them", "then", "there", "they", "this", "time", "to",
    "today", "up", "us", "very", "was", "we", "were", "what", "when", "which", "who", "will", "with", "wow", "you", "your",
    "big", "check",
];

const SUMMARY_PREFIX: &str = "Instruction: Your goal is to summarize the interest of your audience";

/// The `k` most frequent non-stopword tokens across `posts`, most frequent
/// first (ties alphabetical), joined by `"; "`.
pub fn frequent_terms<S: AsRef<str>>(posts: &[S], k: usize) -> String {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for post in posts {
        for tok in tokenize(post.as_ref()) {
            if tok.chars().all(|c| c.is_ascii_digit()) || STOPWORDS.contains(&tok.as_str()) {
                continue;
            }
            *counts.entry(tok).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
        .into_iter()
        .take(k)
        .map(|(t, _)| t)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Trims, splits on `;`, collapses inner whitespace, drops empty items and
/// rejoins with `"; "`.
pub fn normalize_interests(raw: &str) -> String {
    raw.split(';')
        .map(|item| item.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|item| !item.is_empty())
        .collect::<Vec<_>>()
        .join("; ")
}

fn summary_reply(prompt: &str, k: usize) -> Option<ModelReply> {
    if !prompt.starts_with(SUMMARY_PREFIX) {
        return None;
    }
    let posts = extract_context_posts(prompt).unwrap_or_default();
    Some(ModelReply {
        result: Ok(frequent_terms(&posts, k)),
        attempts: 1,
    })
}

/// Offline stand-in: answers revision prompts with
/// `[revised] <input> #<first 8 hex digits of sha256(prompt)>`, and
/// summarization prompts with [`frequent_terms`].
#[derive(Debug, Clone)]
pub struct MockModel {
    summary_terms: usize,
}

impl MockModel {
    pub fn new(summary_terms: usize) -> Self {
        Self { summary_terms }
    }
}

impl ChatModel for MockModel {
    fn mode(&self) -> &'static str {
        "mock"
    }

    fn complete(&self, prompt: &str) -> ModelReply {
        if let Some(reply) = summary_reply(prompt, self.summary_terms) {
            return reply;
        }
        let digest = Sha256::digest(prompt.as_bytes());
        let tag: String = digest[..4].iter().map(|b| format!("{b:02x}")).collect();
        let payload = extract_input(prompt).unwrap_or(prompt);
        ModelReply {
            result: Ok(format!("[revised] {payload} #{tag}")),
            attempts: 1,
        }
    }
}

/// Returns the input post verbatim; summaries as in [`MockModel`].
#[derive(Debug, Clone)]
pub struct IdentityModel {
    summary_terms: usize,
}

impl IdentityModel {
    pub fn new(summary_terms: usize) -> Self {
        Self { summary_terms }
    }
}

impl ChatModel for IdentityModel {
    fn mode(&self) -> &'static str {
        "identity"
    }

    fn complete(&self, prompt: &str) -> ModelReply {
        if let Some(reply) = summary_reply(prompt, self.summary_terms) {
            return reply;
        }
        ModelReply {
            result: Ok(extract_input(prompt).unwrap_or(prompt).to_string()),
            attempts: 1,
        }
    }
}
