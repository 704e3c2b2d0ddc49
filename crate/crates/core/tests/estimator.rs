//! The pairwise estimator: gradients, fitting and checkpoints.

use rand::Rng as _;

use amplifier_core::dataio::synthetic::{generate_synthetic, SyntheticParams};
use amplifier_core::dataio::{EmbeddingTable, Split};
use amplifier_core::estimator::{
    build_training_dataset, dataset_loss, gradient_check, gradient_check_with, train, EdgeAttribution, EstimatorModel,
    GradCheckOptions, InteractionInstance, ModelConfig, TrainConfig, CONTENT_DIM,
};
use amplifier_core::experiments::{train_on_corpus, TrainingSetup};
use amplifier_core::rng;

fn random_table(rows: usize, seed: u64) -> EmbeddingTable {
    let mut r = rng::seeded(seed);
    EmbeddingTable::new(CONTENT_DIM, (0..rows * CONTENT_DIM).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap()
}

fn eight_instances() -> Vec<InteractionInstance> {
    (0..8u32)
        .map(|i| InteractionInstance {
            recipient: i % 4 + 1,
            creator: 0,
            post: i / 2,
            label: f64::from(i % 2),
        })
        .collect()
}

#[test]
fn gradients_agree_on_random_instances() {
    let table = random_table(5, 1);
    let mut r = rng::seeded(2);
    for i in 0..20 {
        let model = EstimatorModel::new(ModelConfig::new(10), i).unwrap();
        let instance = InteractionInstance {
            recipient: r.random_range(0..10),
            creator: r.random_range(0..10),
            post: r.random_range(0..5),
            label: r.random_range(0.0..=1.0),
        };
        let report = gradient_check(&model, &instance, &table, 1e-5).unwrap();
        assert!(report.max_relative_error < 1e-4, "instance {i}: {:?}", report.worst());
    }
}

#[test]
fn gradients_agree_after_training() {
    let table = random_table(4, 3);
    let mut model = EstimatorModel::new(ModelConfig::new(5), 4).unwrap();
    let config = TrainConfig {
        learning_rate: 1e-3,
        batch_size: 4,
        epochs: 20,
        ..TrainConfig::default()
    };
    train(&mut model, &eight_instances(), &table, &config).unwrap();
    let options = GradCheckOptions {
        samples_per_tensor: 200,
        ..GradCheckOptions::default()
    };
    for inst in eight_instances() {
        let report = gradient_check_with(&model, &inst, &table, &options).unwrap();
        assert!(report.max_relative_error < 1e-4, "{:?}", report.worst());
    }
}

#[test]
fn memorizes_eight_instances() {
    let table = random_table(4, 21);
    let mut model = EstimatorModel::new(ModelConfig::new(5), 3).unwrap();
    let config = TrainConfig {
        learning_rate: 1e-3,
        batch_size: 8,
        epochs: 200,
        ..TrainConfig::default()
    };
    let outcome = train(&mut model, &eight_instances(), &table, &config).unwrap();
    assert_eq!(outcome.loss_history.len(), 201);
    assert_eq!(outcome.steps, 200);
    let last = *outcome.loss_history.last().unwrap();
    assert!(last < 0.01, "final MSE {last}");
    assert_eq!(dataset_loss(&model, &eight_instances(), &table).unwrap(), last);
}

#[test]
fn trained_checkpoint_round_trips() {
    let synthetic = generate_synthetic(&SyntheticParams {
        users: 200,
        posts: 60,
        seed: 9,
        ..SyntheticParams::default()
    })
    .unwrap();
    let corpus = &synthetic.corpus;
    let setup = TrainingSetup {
        optimizer: TrainConfig {
            learning_rate: 1e-3,
            batch_size: 64,
            epochs: 3,
            ..TrainConfig::default()
        },
        ..TrainingSetup::default()
    };
    let (model, outcome) = train_on_corpus(corpus, &setup).unwrap();
    assert!(outcome.loss_history.iter().all(|l| l.is_finite()));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    model.save(&path).unwrap();
    let loaded = EstimatorModel::load(&path).unwrap();
    assert_eq!(loaded, model);

    for post in corpus.posts_in(Split::Test) {
        let content = corpus.embedding(post.id).unwrap();
        for attribution in [EdgeAttribution::Sharer, EdgeAttribution::Creator] {
            let a = model.edge_probabilities_for_content(&corpus.graph, post.creator, content, attribution).unwrap();
            let b = loaded.edge_probabilities_for_content(&corpus.graph, post.creator, content, attribution).unwrap();
            assert_eq!(a, b);
            assert!(a.as_slice().iter().all(|p| (0.0..1.0).contains(p)));
        }
    }
}

#[test]
fn negatives_are_followers_who_did_not_repost() {
    let synthetic = generate_synthetic(&SyntheticParams {
        users: 200,
        posts: 60,
        seed: 9,
        ..SyntheticParams::default()
    })
    .unwrap();
    let corpus = &synthetic.corpus;
    let posts: Vec<_> = corpus.posts_in(Split::Train).cloned().collect();
    let dataset = build_training_dataset(&corpus.graph, &posts, 2, &mut rng::seeded(0));
    for post in &posts {
        let mine: Vec<_> = dataset.iter().filter(|i| i.post == post.id).collect();
        let positives = mine.iter().filter(|i| i.label == 1.0).count();
        let negatives: Vec<_> = mine.iter().filter(|i| i.label == 0.0).collect();
        assert_eq!(positives, post.repost_count());
        let pool = corpus.graph.followers(post.creator).iter().filter(|u| !post.reposted_by(**u)).count();
        assert_eq!(negatives.len(), (2 * positives).min(pool));
        for n in negatives {
            assert!(corpus.graph.followers(post.creator).contains(&n.recipient));
            assert!(!post.reposted_by(n.recipient));
        }
    }
}
