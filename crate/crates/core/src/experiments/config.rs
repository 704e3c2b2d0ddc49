use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::EdgeAttribution;
use crate::llm::LlmClientConfig;
use super::training::TrainingSetup;
use crate::prompting::{PromptStrategy, StrategyKind};

/// How revised texts are embedded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EmbedderConfig {
    /// `lexicon.json` next to the corpus (synthetic corpora).
    Lexicon,
    /// External program, see [`crate::embed::CommandEmbedder`].
    Command { program: String, args: Vec<String> },
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        EmbedderConfig::Lexicon
    }
}

/// Experiment settings, read from TOML. Every key is optional.
///
/// ```toml
/// corpus = "data/synth"
/// checkpoint = "data/synth/model.json"
/// out_dir = "results"
/// strategies = ["1", "2.1", "2.2", "3.0", "3.1", "3.2", "4.1", "4.2"]
/// rounds = 20
/// base_seed = 0
/// master_seed = 0
/// eval_hops = 1         # neighborhood radius for eval-strategies, eval-single, groups
/// hops = [1, 2]          # sweep for the hop analysis
/// hop_strategies = ["3.1", "3.2", "4.1", "4.2"]
/// group_count = 3
/// singular_posts = 20
/// singular_neighbors = 20
/// k_fewshot_each = 2
/// k_neighbor_posts = 3
/// k_interest_posts = 10
/// max_posts = 0          # 0 = every test post
///
/// [training]
/// negatives_per_positive = 2
/// model_seed = 0
/// dataset_seed = 0
/// [training.optimizer]
/// learning_rate = 1e-4
/// batch_size = 1024
/// epochs = 50
///
/// [embedder]
/// kind = "lexicon"
///
/// [llm]
/// mode = "mock"          # remote | mock | identity | oracle
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub corpus: PathBuf,
    pub checkpoint: PathBuf,
    pub out_dir: PathBuf,
    pub strategies: Vec<StrategyKind>,
    /// Monte-Carlo simulations per spread estimate.
    pub rounds: usize,
    /// Seeds the cascade simulations; each post derives its own.
    pub base_seed: u64,
    /// Creator slot for cascade edges past the first hop.
    pub attribution: EdgeAttribution,
    /// Seeds every sampling decision in the harness.
    pub master_seed: u64,
    pub eval_hops: usize,
    pub hops: Vec<usize>,
    pub hop_strategies: Vec<StrategyKind>,
    pub group_count: usize,
    pub singular_posts: usize,
    pub singular_neighbors: usize,
    pub k_fewshot_each: usize,
    pub k_neighbor_posts: usize,
    pub k_interest_posts: usize,
    pub max_posts: usize,
    pub training: TrainingSetup,
    pub embedder: EmbedderConfig,
    pub llm: LlmClientConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            corpus: PathBuf::from("corpus"),
            checkpoint: PathBuf::from("corpus/model.json"),
            out_dir: PathBuf::from("results"),
            strategies: StrategyKind::ALL.to_vec(),
            rounds: crate::cascade::DEFAULT_ROUNDS,
            base_seed: 0,
            attribution: EdgeAttribution::default(),
            master_seed: 0,
            eval_hops: 1,
            hops: vec![1, 2],
            hop_strategies: StrategyKind::ALL.into_iter().filter(|k| k.uses_hops()).collect(),
            group_count: 3,
            singular_posts: 20,
            singular_neighbors: 20,
            k_fewshot_each: 2,
            k_neighbor_posts: 3,
            k_interest_posts: 10,
            max_posts: 0,
            training: TrainingSetup::default(),
            embedder: EmbedderConfig::default(),
            llm: LlmClientConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::parse(path, 0, e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.rounds == 0 {
            return bad("rounds must be at least 1");
        }
        if self.group_count < 2 {
            return bad("group_count must be at least 2");
        }
        if self.eval_hops == 0 || self.hops.contains(&0) {
            return Err(Error::ZeroHop);
        }
        if self.k_fewshot_each == 0 || self.k_neighbor_posts == 0 || self.k_interest_posts == 0 {
            return bad("prompt sample sizes must be at least 1");
        }
        if let Some(k) = self.hop_strategies.iter().find(|k| !k.uses_hops()) {
            return Err(Error::InvalidArgument(format!(
                "strategy {k} does not depend on the hop count"
            )));
        }
        self.training.validate()
    }

    pub fn prompt_strategy(&self, kind: StrategyKind, hops: usize) -> PromptStrategy {
        PromptStrategy {
            kind,
            k_fewshot_each: self.k_fewshot_each,
            k_neighbor_posts: self.k_neighbor_posts,
            k_interest_posts: self.k_interest_posts,
            hops,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_toml_fills_defaults() {
        let c: ExperimentConfig = toml::from_str(
            r#"
            corpus = "x"
            strategies = ["3.1", "interest_scored"]
            [llm]
            mode = "identity"
            "#,
        )
        .unwrap();
        assert_eq!(c.corpus, PathBuf::from("x"));
        assert_eq!(c.strategies, vec![StrategyKind::NeighborPostsRandom, StrategyKind::InterestScored]);
        assert_eq!(c.rounds, 20);
        assert_eq!(c.llm.mode, crate::llm::LlmMode::Identity);
        c.validate().unwrap();
    }

    #[test]
    fn command_embedder_parses() {
        let c: ExperimentConfig = toml::from_str(
            r#"
            [embedder]
            kind = "command"
            program = "python3"
            args = ["embed.py"]
            "#,
        )
        .unwrap();
        assert!(matches!(c.embedder, EmbedderConfig::Command { .. }));
    }

    #[test]
    fn hop_sweep_rejects_global_strategy() {
        let c = ExperimentConfig {
            hop_strategies: vec![StrategyKind::NeighborPostsGlobal],
            ..ExperimentConfig::default()
        };
        assert!(c.validate().is_err());
        assert_eq!(ExperimentConfig::default().hop_strategies.len(), 4);
    }
}
