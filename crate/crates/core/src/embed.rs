//! Text embedders used to place revised posts in the estimator's content space.
//!
//! Real corpora ship sentence embeddings computed offline; revised texts are
//! embedded by an external program through [`CommandEmbedder`]. Synthetic
//! corpora use [`LexiconEmbedder`], which reproduces the generator's embedding
//! of any text exactly.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub trait TextEmbedder: Send + Sync {
    fn dim(&self) -> usize;

    fn embed(&self, text: &str) -> Result<Vec<f64>>;
}

/// Lower-cased alphanumeric runs.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub name: String,
    pub words: Vec<String>,
}

/// Topic vocabularies plus the fixed random projection that lifts topic
/// histograms into the embedding space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    pub topics: Vec<Topic>,
    /// Topic-neutral words mixed into generated texts.
    pub filler: Vec<String>,
    pub projection_seed: u64,
    pub dim: usize,
}

const DEFAULT_TOPICS: [(&str, [&str; 12]); 8] = [
    (
        "technology",
        ["software", "robot", "chip", "coding", "startup", "gadget", "laptop", "algorithm", "cloud", "app", "server", "smartphone"],
    ),
    (
        "sports",
        ["football", "match", "goal", "team", "coach", "stadium", "league", "striker", "tennis", "marathon", "trophy", "referee"],
    ),
    (
        "food",
        ["noodles", "recipe", "dumplings", "spicy", "bakery", "chef", "dessert", "tea", "hotpot", "kitchen", "flavor", "restaurant"],
    ),
    (
        "travel",
        ["beach", "flight", "hotel", "mountain", "passport", "island", "hiking", "museum", "backpack", "sunset", "train", "village"],
    ),
    (
        "music",
        ["concert", "album", "guitar", "singer", "melody", "band", "piano", "lyrics", "festival", "drummer", "playlist", "chorus"],
    ),
    (
        "finance",
        ["stocks", "market", "investor", "bank", "loan", "fund", "dividend", "crypto", "budget", "savings", "inflation", "bond"],
    ),
    (
        "health",
        ["fitness", "doctor", "sleep", "vitamin", "yoga", "workout", "diet", "hospital", "running", "therapy", "wellness", "nutrition"],
    ),
    (
        "film",
        ["movie", "actor", "director", "premiere", "cinema", "trailer", "scene", "screenplay", "sequel", "studio", "documentary", "oscar"],
    ),
];

const DEFAULT_FILLER: [&str; 16] = [
    "today", "really", "just", "new", "great", "check", "this", "out", "my", "our", "so", "big", "what", "time", "day", "wow",
];

impl Lexicon {
    /// The built-in eight-topic vocabulary, truncated to `topics` topics.
    pub fn builtin(topics: usize, projection_seed: u64, dim: usize) -> Result<Self> {
        if topics == 0 || topics > DEFAULT_TOPICS.len() {
            return Err(Error::InvalidArgument(format!(
                "topic count must be in 1..={}",
                DEFAULT_TOPICS.len()
            )));
        }
        Ok(Self {
            topics: DEFAULT_TOPICS[..topics]
                .iter()
                .map(|(name, words)| Topic {
                    name: name.to_string(),
                    words: words.iter().map(|w| w.to_string()).collect(),
                })
                .collect(),
            filler: DEFAULT_FILLER.iter().map(|w| w.to_string()).collect(),
            projection_seed,
            dim,
        })
    }

    pub fn topic_count(&self) -> usize {
        self.topics.len()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    fn word_index(&self) -> HashMap<String, usize> {
        let mut index = HashMap::new();
        for (k, topic) in self.topics.iter().enumerate() {
            for w in &topic.words {
                index.entry(w.to_lowercase()).or_insert(k);
            }
        }
        index
    }
}

#[derive(Debug, Clone)]
pub struct LexiconEmbedder {
    lexicon: Lexicon,
    word_topic: HashMap<String, usize>,
    /// Row-major `dim x topics`.
    projection: Vec<f64>,
}

impl LexiconEmbedder {
    pub fn new(lexicon: Lexicon) -> Self {
        let k = lexicon.topic_count();
        let mut r = rng::seeded(lexicon.projection_seed);
        let projection = (0..lexicon.dim * k)
            .map(|_| StandardNormal.sample(&mut r))
            .collect();
        Self {
            word_topic: lexicon.word_index(),
            lexicon,
            projection,
        }
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn topic_of_word(&self, word: &str) -> Option<usize> {
        self.word_topic.get(&word.to_lowercase()).copied()
    }

    /// Topic-word counts of `text`.
    pub fn topic_counts(&self, text: &str) -> Vec<usize> {
        let mut counts = vec![0; self.lexicon.topic_count()];
        for tok in tokenize(text) {
            if let Some(&k) = self.word_topic.get(&tok) {
                counts[k] += 1;
            }
        }
        counts
    }

    /// Topic with the most words in `text`, lowest index on ties; `None` when
    /// the text has no topic words.
    pub fn dominant_topic(&self, text: &str) -> Option<usize> {
        dominant(&self.topic_counts(text))
    }

    /// Projects a topic mixture (any nonnegative weights) into embedding space.
    pub fn project(&self, mixture: &[f64]) -> Vec<f64> {
        let k = self.lexicon.topic_count();
        self.projection
            .chunks_exact(k)
            .map(|row| row.iter().zip(mixture).map(|(a, b)| a * b).sum())
            .collect()
    }
}

pub(crate) fn dominant(counts: &[usize]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, &c) in counts.iter().enumerate() {
        if c > 0 && best.is_none_or(|b| c > counts[b]) {
            best = Some(k);
        }
    }
    best
}

impl TextEmbedder for LexiconEmbedder {
    fn dim(&self) -> usize {
        self.lexicon.dim
    }

    /// Topic-word proportions of the text pushed through the projection.
    /// Texts without topic words embed to the zero vector.
    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let counts = self.topic_counts(text);
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Ok(vec![0.0; self.lexicon.dim]);
        }
        let mixture: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(self.project(&mixture))
    }
}

/// Exact-text lookup into precomputed embeddings.
#[derive(Debug, Clone)]
pub struct PrecomputedEmbedder {
    dim: usize,
    table: HashMap<String, Vec<f64>>,
}

impl PrecomputedEmbedder {
    pub fn new(dim: usize, entries: impl IntoIterator<Item = (String, Vec<f64>)>) -> Self {
        Self {
            dim,
            table: entries.into_iter().collect(),
        }
    }
}

impl TextEmbedder for PrecomputedEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        self.table
            .get(text)
            .cloned()
            .ok_or_else(|| Error::InvalidArgument(format!("no precomputed embedding for text `{text}`")))
    }
}

/// Runs an external program once per text. The program receives one JSON
/// string on stdin and must print an embedding file (`1 D` header, one row)
/// on stdout.
#[derive(Debug, Clone)]
pub struct CommandEmbedder {
    pub program: String,
    pub args: Vec<String>,
    pub dim: usize,
}

impl TextEmbedder for CommandEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let io = |e| Error::io(&self.program, e);
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(io)?;
        {
            let mut stdin = child.stdin.take().expect("piped stdin");
            writeln!(stdin, "{}", serde_json::to_string(text)?).map_err(io)?;
        }
        let output = child.wait_with_output().map_err(io)?;
        if !output.status.success() {
            return Err(Error::InvalidArgument(format!(
                "embedding command `{}` exited with {}",
                self.program, output.status
            )));
        }
        let stdout = String::from_utf8_lossy(&output.stdout);
        let mut lines = stdout.lines();
        let header = lines.next().unwrap_or_default();
        if header.split_whitespace().collect::<Vec<_>>() != ["1", &self.dim.to_string()] {
            return Err(Error::InvalidArgument(format!(
                "embedding command printed header `{header}`, expected `1 {}`",
                self.dim
            )));
        }
        let row: Vec<f64> = lines
            .next()
            .unwrap_or_default()
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidArgument(format!("embedding command output: {e}")))?;
        if row.len() != self.dim || row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("embedding command returned a malformed row".into()));
        }
        Ok(row)
    }
}
