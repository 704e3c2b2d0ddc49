//! Finite-difference check of the training gradients.
//!
//! The analytic side comes from the batched training path; the numeric side
//! perturbs one parameter at a time and re-runs the plain inference forward pass.

use rand::seq::index;

use super::train::batch_gradients;
use super::{EstimatorModel, InteractionInstance, ModelGrads, TENSOR_NAMES};
use crate::dataio::EmbeddingTable;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckOptions {
    pub epsilon: f64,
    /// Parameters sampled from each tensor (whole tensor when smaller).
    pub samples_per_tensor: usize,
    /// Extra embedding rows, not touched by the instance, to include.
    pub untouched_rows: usize,
    /// Denominator floor for the relative error, so parameters whose true
    /// gradient is numerically zero compare on absolute difference instead.
    pub relative_floor: f64,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            samples_per_tensor: 48,
            untouched_rows: 1,
            relative_floor: 1e-7,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckEntry {
    pub tensor: &'static str,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub entries: Vec<GradCheckEntry>,
}

impl GradCheckReport {
    pub fn worst(&self) -> Option<&GradCheckEntry> {
        self.entries
            .iter()
            .max_by(|a, b| a.relative_error.total_cmp(&b.relative_error))
    }
}

pub fn gradient_check(
    model: &EstimatorModel,
    instance: &InteractionInstance,
    embeddings: &EmbeddingTable,
    epsilon: f64,
) -> Result<GradCheckReport> {
    gradient_check_with(
        model,
        instance,
        embeddings,
        &GradCheckOptions {
            epsilon,
            ..GradCheckOptions::default()
        },
    )
}

pub fn gradient_check_with(
    model: &EstimatorModel,
    instance: &InteractionInstance,
    embeddings: &EmbeddingTable,
    options: &GradCheckOptions,
) -> Result<GradCheckReport> {
    let content = embeddings.row(instance.post).ok_or(Error::UnknownPost(instance.post))?;
    let loss_of = |m: &EstimatorModel| -> Result<f64> {
        Ok((m.predict(instance.recipient, instance.creator, content)? - instance.label).powi(2))
    };

    let mut grads = ModelGrads::zeros_like(model);
    batch_gradients(model, std::slice::from_ref(instance), embeddings, None, &mut grads)?;
    let analytic = grads.tensors();

    let selection = select_parameters(model, instance, options);
    let mut probe = model.clone();
    let mut entries = Vec::with_capacity(selection.len());
    for (tensor, idx) in selection {
        let original = probe.tensors()[tensor][idx];
        probe.tensors_mut()[tensor][idx] = original + options.epsilon;
        let plus = loss_of(&probe)?;
        probe.tensors_mut()[tensor][idx] = original - options.epsilon;
        let minus = loss_of(&probe)?;
        probe.tensors_mut()[tensor][idx] = original;

        let numeric = (plus - minus) / (2.0 * options.epsilon);
        let a = analytic[tensor][idx];
        let denom = a.abs().max(numeric.abs()).max(options.relative_floor);
        entries.push(GradCheckEntry {
            tensor: TENSOR_NAMES[tensor],
            index: idx,
            analytic: a,
            numeric,
            relative_error: (a - numeric).abs() / denom,
        });
    }
    let max_relative_error = entries.iter().map(|e| e.relative_error).fold(0.0, f64::max);
    Ok(GradCheckReport {
        max_relative_error,
        entries,
    })
}

fn select_parameters(
    model: &EstimatorModel,
    instance: &InteractionInstance,
    options: &GradCheckOptions,
) -> Vec<(usize, usize)> {
    let mut rng = rng::seeded(options.seed);
    let mut out = Vec::new();
    let dim = model.config.user_dims[0];

    let mut rows = vec![instance.recipient as usize, instance.creator as usize];
    rows.extend(
        (0..model.user_count())
            .filter(|&u| u != instance.recipient as usize && u != instance.creator as usize)
            .take(options.untouched_rows),
    );
    rows.dedup();
    for row in rows {
        out.extend((row * dim..(row + 1) * dim).map(|i| (0, i)));
    }

    for (t, tensor) in model.tensors().iter().enumerate().skip(1) {
        if tensor.len() <= options.samples_per_tensor {
            out.extend((0..tensor.len()).map(|i| (t, i)));
        } else {
            let mut picks = index::sample(&mut rng, tensor.len(), options.samples_per_tensor).into_vec();
            picks.sort_unstable();
            out.extend(picks.into_iter().map(|i| (t, i)));
        }
    }
    out
}
