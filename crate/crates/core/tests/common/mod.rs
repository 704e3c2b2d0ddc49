//! Shared fixtures for the integration tests.

#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};

use rand::Rng as _;

use amplifier_core::dataio::synthetic::{generate_synthetic, SyntheticCorpus, SyntheticParams};
use amplifier_core::embed::LexiconEmbedder;
use amplifier_core::estimator::{EdgeAttribution, EstimatorModel, TrainConfig};
use amplifier_core::experiments::{train_on_corpus, ExperimentConfig, Harness, TopicOracle, TrainingSetup};
use amplifier_core::graph::{SocialGraph, UserId};
use amplifier_core::llm::ChatModel;
use amplifier_core::rng;

/// Training schedule for the synthetic world. The corpus is far smaller than
/// the one the library defaults are sized for, so it takes a larger step and
/// smaller batches.
pub fn world_training() -> TrainingSetup {
    TrainingSetup {
        optimizer: TrainConfig {
            learning_rate: 1e-3,
            batch_size: 256,
            epochs: 30,
            ..TrainConfig::default()
        },
        ..TrainingSetup::default()
    }
}

pub struct World {
    pub synthetic: SyntheticCorpus,
    pub model: EstimatorModel,
}

/// The default synthetic corpus with an estimator trained on its training split.
pub fn world() -> World {
    let synthetic = generate_synthetic(&SyntheticParams::default()).expect("synthetic corpus");
    let (model, _) = train_on_corpus(&synthetic.corpus, &world_training()).expect("training");
    World { synthetic, model }
}

pub fn world_config() -> ExperimentConfig {
    ExperimentConfig {
        attribution: EdgeAttribution::Creator,
        training: world_training(),
        ..ExperimentConfig::default()
    }
}

impl World {
    pub fn embedder(&self) -> LexiconEmbedder {
        LexiconEmbedder::new(self.synthetic.lexicon.clone())
    }

    pub fn harness(&self, config: ExperimentConfig, chat: Box<dyn ChatModel>) -> Harness {
        Harness::from_parts(
            config,
            self.synthetic.corpus.clone(),
            self.model.clone(),
            Box::new(self.embedder()),
            chat,
        )
        .expect("harness")
    }

    pub fn oracle_harness(&self, config: ExperimentConfig) -> Harness {
        let oracle = TopicOracle::new(self.embedder(), config.llm.summary_terms);
        self.harness(config, Box::new(oracle))
    }
}

/// Random directed follow graph; `(follower, followee)` pairs without self loops.
pub fn random_graph(users: usize, edges: usize, seed: u64) -> SocialGraph {
    let mut r = rng::seeded(seed);
    let mut list = Vec::with_capacity(edges);
    while list.len() < edges && users > 1 {
        let a = r.random_range(0..users) as UserId;
        let b = r.random_range(0..users) as UserId;
        if a != b {
            list.push((a, b));
        }
    }
    SocialGraph::build(&list, users).expect("graph")
}

/// Users reachable from `seed` along spread edges (followee to follower),
/// including `seed`, by a plain BFS over the follow pairs.
pub fn bfs_reach(pairs: &[(UserId, UserId)], seed: UserId) -> HashSet<UserId> {
    let mut seen = HashSet::from([seed]);
    let mut queue = VecDeque::from([seed]);
    while let Some(u) = queue.pop_front() {
        for &(follower, followee) in pairs {
            if followee == u && seen.insert(follower) {
                queue.push_back(follower);
            }
        }
    }
    seen
}
