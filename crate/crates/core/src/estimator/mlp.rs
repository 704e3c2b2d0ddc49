//! Two-layer perceptron with an explicit backward pass.
//!
//! `hidden -> activation -> dropout -> output`, identity on the output layer.
//! Weights are row-major `out_dim x in_dim`.

use rand::distr::{Distribution, Uniform};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    /// Linear hidden layer; used for convex-ish test fixtures.
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => if x > 0.0 || x.is_nan() { x } else { 0.0 },
            Activation::Identity => x,
        }
    }

    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub(crate) in_dim: usize,
    pub(crate) out_dim: usize,
    pub(crate) weight: Vec<f64>,
    pub(crate) bias: Vec<f64>,
}

impl Dense {
    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
    pub fn init(in_dim: usize, out_dim: usize, rng: &mut Rng) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
        Self {
            in_dim,
            out_dim,
            weight: (0..in_dim * out_dim).map(|_| dist.sample(rng)).collect(),
            bias: (0..out_dim).map(|_| dist.sample(rng)).collect(),
        }
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weight: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    pub fn forward_into(&self, input: &[f64], out: &mut [f64]) {
        debug_assert_eq!(input.len(), self.in_dim);
        for (o, (row, b)) in out
            .iter_mut()
            .zip(self.weight.chunks_exact(self.in_dim).zip(&self.bias))
        {
            *o = b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
        }
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.out_dim];
        self.forward_into(input, &mut out);
        out
    }

    /// Accumulate `d_out ⊗ input` into the weight gradient and `d_out` into the bias gradient.
    pub(crate) fn accumulate_grads(&self, input: &[f64], d_out: &[f64], d_weight: &mut [f64], d_bias: &mut [f64]) {
        for (o, &g) in d_out.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            d_bias[o] += g;
            let row = &mut d_weight[o * self.in_dim..(o + 1) * self.in_dim];
            for (dw, x) in row.iter_mut().zip(input) {
                *dw += g * x;
            }
        }
    }

    /// `W^T d_out`.
    pub(crate) fn backward_input(&self, d_out: &[f64]) -> Vec<f64> {
        let mut d_in = vec![0.0; self.in_dim];
        for (row, &g) in self.weight.chunks_exact(self.in_dim).zip(d_out) {
            if g == 0.0 {
                continue;
            }
            for (d, w) in d_in.iter_mut().zip(row) {
                *d += g * w;
            }
        }
        d_in
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub(crate) hidden: Dense,
    pub(crate) output: Dense,
    pub(crate) activation: Activation,
}

/// Intermediate values of one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct MlpTrace {
    pub pre_hidden: Vec<f64>,
    /// Post-activation, post-dropout hidden values.
    pub hidden: Vec<f64>,
    /// Inverted-dropout multipliers (0 or 1/(1-rate)); `None` outside training.
    pub mask: Option<Vec<f64>>,
    pub output: Vec<f64>,
}

impl Mlp {
    pub fn init(dims: [usize; 3], activation: Activation, rng: &mut Rng) -> Self {
        Self {
            hidden: Dense::init(dims[0], dims[1], rng),
            output: Dense::init(dims[1], dims[2], rng),
            activation,
        }
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        self.trace_from_pre(self.hidden.forward(input), None, None).output
    }

    /// Finish a forward pass from a precomputed hidden pre-activation.
    ///
    /// `dropout` is `(rate, rng)` during training.
    pub(crate) fn trace_from_pre(&self, pre_hidden: Vec<f64>, dropout: Option<f64>, rng: Option<&mut Rng>) -> MlpTrace {
        let mut hidden: Vec<f64> = pre_hidden.iter().map(|&z| self.activation.apply(z)).collect();
        let mask = match (dropout, rng) {
            (Some(rate), Some(rng)) if rate > 0.0 => {
                let keep = 1.0 - rate;
                let m: Vec<f64> = (0..hidden.len())
                    .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                    .collect();
                for (h, k) in hidden.iter_mut().zip(&m) {
                    *h *= k;
                }
                Some(m)
            }
            _ => None,
        };
        let output = self.output.forward(&hidden);
        MlpTrace {
            pre_hidden,
            hidden,
            mask,
            output,
        }
    }

    pub(crate) fn trace(&self, input: &[f64], dropout: Option<f64>, rng: Option<&mut Rng>) -> MlpTrace {
        self.trace_from_pre(self.hidden.forward(input), dropout, rng)
    }

    /// Backpropagate `d_output` through the output layer and the activation.
    /// Accumulates output-layer gradients and returns the gradient with respect
    /// to the hidden pre-activation.
    pub(crate) fn backward_to_pre(&self, trace: &MlpTrace, d_output: &[f64], grads: &mut MlpGrads) -> Vec<f64> {
        self.output
            .accumulate_grads(&trace.hidden, d_output, &mut grads.output_weight, &mut grads.output_bias);
        let mut d_pre = self.output.backward_input(d_output);
        for (i, d) in d_pre.iter_mut().enumerate() {
            let keep = trace.mask.as_ref().map_or(1.0, |m| m[i]);
            *d *= keep * self.activation.derivative(trace.pre_hidden[i]);
        }
        d_pre
    }

    /// Full backward pass for one input. Returns the gradient with respect to the input.
    pub(crate) fn backward(&self, input: &[f64], trace: &MlpTrace, d_output: &[f64], grads: &mut MlpGrads) -> Vec<f64> {
        let d_pre = self.backward_to_pre(trace, d_output, grads);
        self.hidden
            .accumulate_grads(input, &d_pre, &mut grads.hidden_weight, &mut grads.hidden_bias);
        self.hidden.backward_input(&d_pre)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct MlpGrads {
    pub hidden_weight: Vec<f64>,
    pub hidden_bias: Vec<f64>,
    pub output_weight: Vec<f64>,
    pub output_bias: Vec<f64>,
}

impl MlpGrads {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Self {
            hidden_weight: vec![0.0; mlp.hidden.weight.len()],
            hidden_bias: vec![0.0; mlp.hidden.bias.len()],
            output_weight: vec![0.0; mlp.output.weight.len()],
            output_bias: vec![0.0; mlp.output.bias.len()],
        }
    }
}
