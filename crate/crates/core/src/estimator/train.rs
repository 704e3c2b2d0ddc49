use std::collections::HashMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{sigmoid, triple_dot, EstimatorModel, InteractionInstance, ModelGrads};
use crate::dataio::{EmbeddingTable, PostId};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
    Sgd,
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: Optimizer,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            batch_size: 1024,
            epochs: 50,
            optimizer: Optimizer::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    /// Full-dataset MSE without dropout: entry 0 before training, entry `e` after epoch `e`.
    pub loss_history: Vec<f64>,
    pub steps: usize,
}

/// Mean of `(P(r, s, c) - label)^2` over the dataset, dropout off.
pub fn dataset_loss(model: &EstimatorModel, dataset: &[InteractionInstance], embeddings: &EmbeddingTable) -> Result<f64> {
    if dataset.is_empty() {
        return Ok(0.0);
    }
    let mut content: HashMap<PostId, Vec<f64>> = HashMap::new();
    let mut users: HashMap<u32, Vec<f64>> = HashMap::new();
    let mut total = 0.0;
    for inst in dataset {
        if !content.contains_key(&inst.post) {
            let row = embedding_row(embeddings, inst.post)?;
            content.insert(inst.post, model.content_projection(row));
        }
        for u in [inst.recipient, inst.creator] {
            users.entry(u).or_insert_with(|| model.user_projection(u));
        }
        let s = triple_dot(&users[&inst.recipient], &content[&inst.post], &users[&inst.creator]);
        total += (sigmoid(s) - inst.label).powi(2);
    }
    Ok(total / dataset.len() as f64)
}

fn embedding_row(embeddings: &EmbeddingTable, post: PostId) -> Result<&[f64]> {
    embeddings.row(post).ok_or(Error::UnknownPost(post))
}

/// Accumulate the gradient of the batch-mean squared error into `grads`.
/// Returns the batch-mean loss.
///
/// Instances sharing a post share the content tower's first-layer product, so
/// that 512-wide layer runs once per distinct post rather than once per instance.
pub(crate) fn batch_gradients(
    model: &EstimatorModel,
    batch: &[InteractionInstance],
    embeddings: &EmbeddingTable,
    mut dropout_rng: Option<&mut Rng>,
    grads: &mut ModelGrads,
) -> Result<f64> {
    let scale = 1.0 / batch.len() as f64;
    let rate = dropout_rng.as_ref().map(|_| model.config.dropout);
    let user_dim = model.config.user_dims[0];

    let mut order: Vec<usize> = (0..batch.len()).collect();
    order.sort_by_key(|&i| (batch[i].post, i));

    let mut loss = 0.0;
    let mut start = 0;
    while start < order.len() {
        let post = batch[order[start]].post;
        let end = start + order[start..].iter().take_while(|&&i| batch[i].post == post).count();
        let content = embedding_row(embeddings, post)?;
        let pre = model.content_mlp.hidden.forward(content);
        let mut d_pre_sum = vec![0.0; pre.len()];

        for &i in &order[start..end] {
            let inst = &batch[i];
            let c_trace = model
                .content_mlp
                .trace_from_pre(pre.clone(), rate, dropout_rng.as_deref_mut());
            let r_input = model.embedding_row(inst.recipient);
            let s_input = model.embedding_row(inst.creator);
            let r_trace = model.user_mlp.trace(r_input, rate, dropout_rng.as_deref_mut());
            let s_trace = model.user_mlp.trace(s_input, rate, dropout_rng.as_deref_mut());
            let (x_c, x_r, x_s) = (&c_trace.output, &r_trace.output, &s_trace.output);

            let p = sigmoid(triple_dot(x_r, x_c, x_s));
            let err = p - inst.label;
            loss += err * err;
            let d_score = 2.0 * err * scale * p * (1.0 - p);

            let d_xr: Vec<f64> = x_c.iter().zip(x_s).map(|(c, s)| d_score * c * s).collect();
            let d_xc: Vec<f64> = x_r.iter().zip(x_s).map(|(r, s)| d_score * r * s).collect();
            let d_xs: Vec<f64> = x_r.iter().zip(x_c).map(|(r, c)| d_score * r * c).collect();

            let d_pre = model.content_mlp.backward_to_pre(&c_trace, &d_xc, &mut grads.content_mlp);
            for (acc, d) in d_pre_sum.iter_mut().zip(&d_pre) {
                *acc += d;
            }
            for (user, input, trace, d_x) in [
                (inst.recipient, r_input, &r_trace, &d_xr),
                (inst.creator, s_input, &s_trace, &d_xs),
            ] {
                let d_emb = model.user_mlp.backward(input, trace, d_x, &mut grads.user_mlp);
                let row = &mut grads.user_embeddings[user as usize * user_dim..(user as usize + 1) * user_dim];
                for (g, d) in row.iter_mut().zip(&d_emb) {
                    *g += d;
                }
            }
        }
        model.content_mlp.hidden.accumulate_grads(
            content,
            &d_pre_sum,
            &mut grads.content_mlp.hidden_weight,
            &mut grads.content_mlp.hidden_bias,
        );
        start = end;
    }
    Ok(loss * scale)
}

struct OptimizerState {
    kind: Optimizer,
    step: i32,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl OptimizerState {
    fn new(kind: Optimizer, model: &EstimatorModel) -> Self {
        let zeros: Vec<Vec<f64>> = model.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        Self {
            kind,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    fn apply(&mut self, model: &mut EstimatorModel, grads: &ModelGrads, lr: f64) {
        self.step += 1;
        let grad_tensors = grads.tensors();
        for (k, param) in model.tensors_mut().into_iter().enumerate() {
            let g = grad_tensors[k];
            match self.kind {
                Optimizer::Sgd => {
                    for (p, gi) in param.iter_mut().zip(g) {
                        *p -= lr * gi;
                    }
                }
                Optimizer::Adam { beta1, beta2, epsilon } => {
                    let c1 = 1.0 - beta1.powi(self.step);
                    let c2 = 1.0 - beta2.powi(self.step);
                    let (m, v) = (&mut self.first[k], &mut self.second[k]);
                    for j in 0..param.len() {
                        m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
                        v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
                        let m_hat = m[j] / c1;
                        let v_hat = v[j] / c2;
                        param[j] -= lr * m_hat / (v_hat.sqrt() + epsilon);
                    }
                }
            }
        }
    }
}

/// Mini-batch training on mean squared error.
///
/// Epoch `e` shuffles with `rng::stream(seed, e)` and draws its dropout masks
/// from the same stream, so a run is fully determined by `config.seed`.
pub fn train(
    model: &mut EstimatorModel,
    dataset: &[InteractionInstance],
    embeddings: &EmbeddingTable,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if !(config.learning_rate >= 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::InvalidArgument("learning rate must be finite and non-negative".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be at least 1".into()));
    }
    for inst in dataset {
        embedding_row(embeddings, inst.post)?;
        for u in [inst.recipient, inst.creator] {
            if u as usize >= model.user_count() {
                return Err(Error::UnknownUser(u));
            }
        }
    }

    let mut state = OptimizerState::new(config.optimizer, model);
    let mut history = vec![dataset_loss(model, dataset, embeddings)?];
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut batch = Vec::with_capacity(config.batch_size);

    for epoch in 0..config.epochs {
        let mut rng = rng::stream(config.seed, epoch as u64);
        order.sort_unstable();
        order.shuffle(&mut rng);
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| dataset[i]));
            let mut grads = ModelGrads::zeros_like(model);
            let dropout = (model.config.dropout > 0.0).then_some(&mut rng);
            let loss = batch_gradients(model, &batch, embeddings, dropout, &mut grads)?;
            if !loss.is_finite() {
                return Err(Error::NanLoss { epoch, batch: b });
            }
            state.apply(model, &grads, config.learning_rate);
        }
        let loss = dataset_loss(model, dataset, embeddings)?;
        if !loss.is_finite() {
            return Err(Error::NanLoss {
                epoch,
                batch: order.len().div_ceil(config.batch_size),
            });
        }
        log::debug!("epoch {epoch}: mse {loss:.6}");
        history.push(loss);
    }
    Ok(TrainOutcome {
        loss_history: history,
        steps: state.step as usize,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{Activation, ModelConfig};
    use rand::Rng as _;

    fn table(posts: usize, dim: usize, seed: u64) -> EmbeddingTable {
        let mut r = rng::seeded(seed);
        EmbeddingTable::new(dim, (0..posts * dim).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap()
    }

    fn tiny_dataset() -> Vec<InteractionInstance> {
        (0..8)
            .map(|i| InteractionInstance {
                recipient: (i % 4) as u32 + 1,
                creator: 0,
                post: (i / 2) as u32,
                label: (i % 2) as f64,
            })
            .collect()
    }

    fn small_config(users: usize) -> ModelConfig {
        let mut c = ModelConfig::new(users);
        c.content_dims[0] = 24;
        c
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let mut model = EstimatorModel::new(small_config(5), 1).unwrap();
        let before = model.clone();
        let config = TrainConfig {
            learning_rate: 0.0,
            epochs: 3,
            batch_size: 3,
            ..TrainConfig::default()
        };
        train(&mut model, &tiny_dataset(), &table(4, 24, 2), &config).unwrap();
        assert_eq!(model, before);
    }

    #[test]
    fn balanced_labels_start_near_quarter() {
        let model = EstimatorModel::new(small_config(5), 1).unwrap();
        let loss = dataset_loss(&model, &tiny_dataset(), &table(4, 24, 2)).unwrap();
        assert!((loss - 0.25).abs() < 0.01, "loss = {loss}");
    }

    #[test]
    fn training_is_deterministic() {
        let config = TrainConfig {
            learning_rate: 1e-2,
            epochs: 5,
            batch_size: 3,
            ..TrainConfig::default()
        };
        let run = || {
            let mut model = EstimatorModel::new(small_config(5), 1).unwrap();
            let out = train(&mut model, &tiny_dataset(), &table(4, 24, 2), &config).unwrap();
            (model, out)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn missing_embedding_row_is_rejected() {
        let mut model = EstimatorModel::new(small_config(5), 1).unwrap();
        let err = train(&mut model, &tiny_dataset(), &table(2, 24, 2), &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, Error::UnknownPost(2)));
    }

    #[test]
    fn nan_loss_aborts() {
        let mut model = EstimatorModel::new(small_config(5), 1).unwrap();
        model.user_embeddings[0] = f64::NAN;
        let err = train(&mut model, &tiny_dataset(), &table(4, 24, 2), &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NanLoss { epoch: 0, batch: 0 }));
    }

    #[test]
    fn linear_full_batch_descent_is_monotone() {
        let mut config = small_config(5);
        config.activation = Activation::Identity;
        config.dropout = 0.0;
        let mut model = EstimatorModel::new(config, 3).unwrap();
        let train_config = TrainConfig {
            learning_rate: 0.05,
            epochs: 60,
            batch_size: 8,
            optimizer: Optimizer::Sgd,
            seed: 0,
        };
        let out = train(&mut model, &tiny_dataset(), &table(4, 24, 2), &train_config).unwrap();
        for pair in out.loss_history.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9, "{pair:?}");
        }
        assert!(out.loss_history.last().unwrap() < &out.loss_history[0]);
    }
}
