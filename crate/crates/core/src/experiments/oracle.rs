//! Topic-oracle reviser for synthetic corpora.
//!
//! Reads the audience's dominant topic off the prompt's context (inserted
//! posts, or the interest string) and swaps every off-topic vocabulary word
//! of the input for a word of that topic. Prompts without context come back
//! unchanged. Summarization prompts get the same frequency summary as the
//! mock model.

use sha2::{Digest, Sha256};

use crate::embed::{dominant, LexiconEmbedder};
use crate::llm::{frequent_terms, ChatModel, ModelReply};
use crate::prompting::{extract_context_posts, extract_input, extract_interest};

pub struct TopicOracle {
    embedder: LexiconEmbedder,
    summary_terms: usize,
}

impl TopicOracle {
    pub fn new(embedder: LexiconEmbedder, summary_terms: usize) -> Self {
        Self {
            embedder,
            summary_terms,
        }
    }

    fn context_topic(&self, prompt: &str) -> Option<usize> {
        let k = self.embedder.lexicon().topic_count();
        let mut counts = vec![0; k];
        if let Some(interest) = extract_interest(prompt) {
            add(&mut counts, &self.embedder.topic_counts(interest));
        } else if let Some(posts) = extract_context_posts(prompt) {
            for post in &posts {
                add(&mut counts, &self.embedder.topic_counts(post));
            }
        }
        dominant(&counts)
    }

    /// Replaces vocabulary words of other topics with words of `topic`; a text
    /// without vocabulary words gets one appended.
    pub fn rewrite(&self, text: &str, topic: usize) -> String {
        let words = &self.embedder.lexicon().topics[topic].words;
        let pick = |seed: &str| {
            let digest = Sha256::digest(seed.as_bytes());
            words[u32::from_le_bytes([digest[0], digest[1], digest[2], digest[3]]) as usize % words.len()].clone()
        };
        let mut touched = false;
        let out: Vec<String> = text
            .split(' ')
            .enumerate()
            .map(|(i, piece)| {
                let core: String = piece.chars().filter(|c| c.is_alphanumeric()).collect();
                match self.embedder.topic_of_word(&core) {
                    Some(t) if t != topic => {
                        touched = true;
                        piece.replacen(&core, &pick(&format!("{i}:{core}")), 1)
                    }
                    Some(_) => {
                        touched = true;
                        piece.to_string()
                    }
                    None => piece.to_string(),
                }
            })
            .collect();
        let mut out = out.join(" ");
        if !touched {
            out.push(' ');
            out.push_str(&pick(text));
        }
        out
    }
}

fn add(total: &mut [usize], counts: &[usize]) {
    for (t, c) in total.iter_mut().zip(counts) {
        *t += c;
    }
}

impl ChatModel for TopicOracle {
    fn mode(&self) -> &'static str {
        "oracle"
    }

    fn complete(&self, prompt: &str) -> ModelReply {
        let result = if let Some(input) = extract_input(prompt) {
            match self.context_topic(prompt) {
                Some(topic) => self.rewrite(input, topic),
                None => input.to_string(),
            }
        } else {
            frequent_terms(&extract_context_posts(prompt).unwrap_or_default(), self.summary_terms)
        };
        ModelReply {
            result: Ok(result),
            attempts: 1,
        }
    }
}
