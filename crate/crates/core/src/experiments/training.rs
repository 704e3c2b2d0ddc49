use serde::{Deserialize, Serialize};

use crate::dataio::{Corpus, Post, Split};
use crate::error::{Error, Result};
use crate::estimator::{build_training_dataset, train, EstimatorModel, ModelConfig, TrainConfig, TrainOutcome};
use crate::rng;

/// Everything needed to fit the estimator on a corpus' training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingSetup {
    pub negatives_per_positive: usize,
    pub model_seed: u64,
    pub dataset_seed: u64,
    pub optimizer: TrainConfig,
}

impl Default for TrainingSetup {
    fn default() -> Self {
        Self {
            negatives_per_positive: 2,
            model_seed: 0,
            dataset_seed: 0,
            optimizer: TrainConfig::default(),
        }
    }
}

impl TrainingSetup {
    pub fn validate(&self) -> Result<()> {
        if self.negatives_per_positive == 0 {
            return Err(Error::InvalidArgument("negatives_per_positive must be at least 1".into()));
        }
        if self.optimizer.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Trains a fresh estimator on the training split only.
pub fn train_on_corpus(corpus: &Corpus, setup: &TrainingSetup) -> Result<(EstimatorModel, TrainOutcome)> {
    setup.validate()?;
    let posts: Vec<Post> = corpus.posts_in(Split::Train).cloned().collect();
    let dataset = build_training_dataset(
        &corpus.graph,
        &posts,
        setup.negatives_per_positive,
        &mut rng::seeded(setup.dataset_seed),
    );
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("training split has no reposts".into()));
    }
    let mut config = ModelConfig::new(corpus.graph.user_count());
    config.content_dims[0] = corpus.embeddings.dim();
    let mut model = EstimatorModel::new(config, setup.model_seed)?;
    log::info!(
        "training on {} instances from {} posts ({} parameters)",
        dataset.len(),
        posts.len(),
        model.parameter_count()
    );
    let outcome = train(&mut model, &dataset, &corpus.embeddings, &setup.optimizer)?;
    Ok((model, outcome))
}
