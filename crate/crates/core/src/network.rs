//! The explainable network: parameters, forward pass, losses and exact gradients.
//!
//! Layout, input to output:
//!
//! 1. one explainable unit per input, `v_i = w_i * x_i`, no bias;
//! 2. a merge step that concatenates the `v_i` (no parameters);
//! 3. `l >= 2` dense hidden layers, the first of which is linear;
//! 4. a dense output layer whose activation is tied to the loss.
//!
//! Trained `|w_i|` values are the importance scores read out by
//! [`crate::experiment::explain`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, SeededRng, Vector};

/// Lower/upper clamp applied to predicted probabilities inside cross-entropy.
pub const PROBABILITY_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Linear,
    Tanh,
    Sigmoid,
    /// Output layer only.
    Softmax,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Linear => "linear",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Softmax => "softmax",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Mse,
    BinaryCrossEntropy,
    CategoricalCrossEntropy,
}

impl LossKind {
    /// The only output activation each loss may be paired with.
    pub fn required_head(self) -> Activation {
        match self {
            LossKind::Mse => Activation::Linear,
            LossKind::BinaryCrossEntropy => Activation::Sigmoid,
            LossKind::CategoricalCrossEntropy => Activation::Softmax,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub n_inputs: usize,
    pub hidden_sizes: Vec<usize>,
    pub hidden_activations: Vec<Activation>,
    pub n_outputs: usize,
    pub output_activation: Activation,
    pub loss: LossKind,
}

impl NetworkConfig {
    /// The shape used throughout the reproduced cases: three hidden layers of
    /// width `n_inputs`, linear then tanh then tanh.
    pub fn standard(n_inputs: usize, n_outputs: usize, loss: LossKind) -> Self {
        Self {
            n_inputs,
            hidden_sizes: vec![n_inputs; 3],
            hidden_activations: vec![Activation::Linear, Activation::Tanh, Activation::Tanh],
            n_outputs,
            output_activation: loss.required_head(),
            loss,
        }
    }

    pub fn n_hidden(&self) -> usize {
        self.hidden_sizes.len()
    }

    /// Width of the layer feeding hidden layer `k` (the merge layer for `k == 0`).
    pub fn fan_in(&self, k: usize) -> usize {
        if k == 0 {
            self.n_inputs
        } else {
            self.hidden_sizes[k - 1]
        }
    }

    pub fn last_hidden_size(&self) -> usize {
        *self
            .hidden_sizes
            .last()
            .expect("validated config has hidden layers")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_inputs == 0 || self.n_outputs == 0 {
            return bad("n_inputs and n_outputs must be positive".into());
        }
        if self.hidden_sizes.len() < 2 {
            return bad(format!(
                "at least two hidden layers are required, got {}",
                self.hidden_sizes.len()
            ));
        }
        if self.hidden_sizes.len() != self.hidden_activations.len() {
            return bad(format!(
                "{} hidden sizes but {} hidden activations",
                self.hidden_sizes.len(),
                self.hidden_activations.len()
            ));
        }
        if let Some(k) = self.hidden_sizes.iter().position(|&s| s == 0) {
            return bad(format!("hidden layer {k} has zero neurons"));
        }
        if self.hidden_activations[0] != Activation::Linear {
            return bad(format!(
                "the first hidden layer must be linear, got {}",
                self.hidden_activations[0].name()
            ));
        }
        if let Some(k) = self
            .hidden_activations
            .iter()
            .position(|&a| a == Activation::Softmax)
        {
            return bad(format!(
                "softmax is only allowed on the output layer (hidden layer {k})"
            ));
        }
        let head = self.loss.required_head();
        if self.output_activation != head {
            return bad(format!(
                "loss {:?} requires a {} output, got {}",
                self.loss,
                head.name(),
                self.output_activation.name()
            ));
        }
        Ok(())
    }
}

/// All trainable parameters. Also used, shape for shape, for gradients and
/// optimizer moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpDnnParams {
    pub explainable_weights: Vector,
    /// `hidden_weights[k]` is `hidden_sizes[k] x fan_in(k)`.
    pub hidden_weights: Vec<Matrix>,
    pub hidden_biases: Vec<Vector>,
    pub output_weights: Matrix,
    pub output_bias: Vector,
}

/// `∂loss/∂θ` for every parameter θ, laid out like [`ExpDnnParams`].
pub type Gradients = ExpDnnParams;

impl ExpDnnParams {
    pub fn zeros(config: &NetworkConfig) -> Self {
        Self {
            explainable_weights: vec![0.0; config.n_inputs],
            hidden_weights: (0..config.n_hidden())
                .map(|k| Matrix::zeros(config.hidden_sizes[k], config.fan_in(k)))
                .collect(),
            hidden_biases: config.hidden_sizes.iter().map(|&s| vec![0.0; s]).collect(),
            output_weights: Matrix::zeros(config.n_outputs, config.last_hidden_size()),
            output_bias: vec![0.0; config.n_outputs],
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        for block in out.blocks_mut() {
            block.fill(0.0);
        }
        out
    }

    /// Parameter blocks in a fixed order: explainable weights, then each
    /// hidden layer's weights and biases, then output weights and bias.
    pub fn blocks(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(3 + 2 * self.hidden_weights.len());
        out.push(&self.explainable_weights);
        for (w, b) in self.hidden_weights.iter().zip(&self.hidden_biases) {
            out.push(w.data());
            out.push(b);
        }
        out.push(self.output_weights.data());
        out.push(&self.output_bias);
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(3 + 2 * self.hidden_weights.len());
        out.push(&mut self.explainable_weights);
        for (w, b) in self
            .hidden_weights
            .iter_mut()
            .zip(self.hidden_biases.iter_mut())
        {
            out.push(w.data_mut());
            out.push(b);
        }
        out.push(self.output_weights.data_mut());
        out.push(&mut self.output_bias);
        out
    }

    pub fn num_params(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    /// Flattened copy of every parameter in [`Self::blocks`] order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.blocks().concat()
    }

    pub fn get_flat(&self, index: usize) -> f64 {
        let mut rest = index;
        for block in self.blocks() {
            if rest < block.len() {
                return block[rest];
            }
            rest -= block.len();
        }
        panic!("flat index {index} out of range");
    }

    pub fn set_flat(&mut self, index: usize, value: f64) {
        let mut rest = index;
        for block in self.blocks_mut() {
            if rest < block.len() {
                block[rest] = value;
                return;
            }
            rest -= block.len();
        }
        panic!("flat index {index} out of range");
    }

    /// Human-readable name of the parameter at a flat index, e.g.
    /// `hidden_weights[1][0][2]`.
    pub fn param_label(&self, index: usize) -> String {
        let mut rest = index;
        if rest < self.explainable_weights.len() {
            return format!("explainable_weights[{rest}]");
        }
        rest -= self.explainable_weights.len();
        for (k, (w, b)) in self
            .hidden_weights
            .iter()
            .zip(&self.hidden_biases)
            .enumerate()
        {
            if rest < w.data().len() {
                return format!(
                    "hidden_weights[{k}][{}][{}]",
                    rest / w.cols(),
                    rest % w.cols()
                );
            }
            rest -= w.data().len();
            if rest < b.len() {
                return format!("hidden_biases[{k}][{rest}]");
            }
            rest -= b.len();
        }
        let w = &self.output_weights;
        if rest < w.data().len() {
            return format!("output_weights[{}][{}]", rest / w.cols(), rest % w.cols());
        }
        rest -= w.data().len();
        format!("output_bias[{rest}]")
    }

    /// Checks every block against the shapes `config` implies.
    pub fn check_shapes(&self, config: &NetworkConfig) -> Result<()> {
        let expected = ExpDnnParams::zeros(config);
        let same = expected.blocks().len() == self.blocks().len()
            && self.hidden_weights.len() == expected.hidden_weights.len()
            && self
                .hidden_weights
                .iter()
                .zip(&expected.hidden_weights)
                .all(|(a, b)| a.rows() == b.rows() && a.cols() == b.cols())
            && self.output_weights.rows() == expected.output_weights.rows()
            && self.output_weights.cols() == expected.output_weights.cols()
            && self
                .blocks()
                .iter()
                .zip(expected.blocks())
                .all(|(a, b)| a.len() == b.len());
        if same {
            Ok(())
        } else {
            Err(Error::shape(
                "parameters",
                format!(
                    "{} parameters laid out for {:?}",
                    expected.num_params(),
                    config.hidden_sizes
                ),
                format!("{} parameters", self.num_params()),
            ))
        }
    }
}

/// Initial parameters.
///
/// Explainable weights, first-hidden-layer weights and first-hidden-layer
/// biases are all exactly 1. Deeper layers and the output layer draw
/// Glorot-uniform weights from `rng` (row-major, layer by layer) and start
/// with zero biases.
pub fn init_params(config: &NetworkConfig, rng: &mut SeededRng) -> Result<ExpDnnParams> {
    config.validate()?;
    let mut params = ExpDnnParams::zeros(config);
    params.explainable_weights.fill(1.0);
    params.hidden_weights[0].data_mut().fill(1.0);
    params.hidden_biases[0].fill(1.0);
    for k in 1..config.n_hidden() {
        glorot_fill(&mut params.hidden_weights[k], rng)?;
    }
    glorot_fill(&mut params.output_weights, rng)?;
    Ok(params)
}

fn glorot_fill(w: &mut Matrix, rng: &mut SeededRng) -> Result<()> {
    let limit = glorot_limit(w.cols(), w.rows());
    for x in w.data_mut() {
        *x = rng.uniform(-limit, limit)?;
    }
    Ok(())
}

pub fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn apply_activation(kind: Activation, z: &[f64]) -> Vector {
    match kind {
        Activation::Linear => z.to_vec(),
        Activation::Tanh => z.iter().map(|v| v.tanh()).collect(),
        Activation::Sigmoid => z.iter().map(|&v| sigmoid(v)).collect(),
        Activation::Softmax => {
            let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
            let total: f64 = exps.iter().sum();
            exps.into_iter().map(|e| e / total).collect()
        }
    }
}

/// `φ'(z)` expressed through `a = φ(z)`.
pub fn activation_derivative(kind: Activation, activated: &[f64]) -> Result<Vector> {
    match kind {
        Activation::Linear => Ok(vec![1.0; activated.len()]),
        Activation::Tanh => Ok(activated.iter().map(|a| 1.0 - a * a).collect()),
        Activation::Sigmoid => Ok(activated.iter().map(|a| a * (1.0 - a)).collect()),
        Activation::Softmax => Err(Error::UnsupportedActivation("softmax")),
    }
}

/// `φ'(z)` from the pre-activation. Unlike [`activation_derivative`] this
/// keeps full relative precision when tanh or sigmoid saturate, where
/// `1 - a²` cancels to a few digits.
pub fn activation_slope(kind: Activation, pre: &[f64]) -> Result<Vector> {
    match kind {
        Activation::Linear => Ok(vec![1.0; pre.len()]),
        Activation::Tanh => Ok(pre
            .iter()
            .map(|z| {
                let c = z.cosh();
                1.0 / (c * c)
            })
            .collect()),
        Activation::Sigmoid => Ok(pre.iter().map(|&z| sigmoid(z) * sigmoid(-z)).collect()),
        Activation::Softmax => Err(Error::UnsupportedActivation("softmax")),
    }
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub input: Vector,
    /// `v_i = w_i * x_i`; the merge layer passes this through unchanged.
    pub explainable_out: Vector,
    pub hidden_pre: Vec<Vector>,
    pub hidden_out: Vec<Vector>,
    pub output: Vector,
}

pub fn forward(params: &ExpDnnParams, config: &NetworkConfig, x: &[f64]) -> Result<ForwardTrace> {
    if x.len() != config.n_inputs {
        return Err(Error::shape("forward input", config.n_inputs, x.len()));
    }
    let explainable_out: Vector = params
        .explainable_weights
        .iter()
        .zip(x)
        .map(|(w, xi)| w * xi)
        .collect();

    let mut hidden_pre = Vec::with_capacity(config.n_hidden());
    let mut hidden_out: Vec<Vector> = Vec::with_capacity(config.n_hidden());
    for k in 0..config.n_hidden() {
        let prev = if k == 0 {
            &explainable_out
        } else {
            &hidden_out[k - 1]
        };
        let mut z = params.hidden_weights[k].mul_vec(prev)?;
        add_assign(&mut z, &params.hidden_biases[k]);
        hidden_out.push(apply_activation(config.hidden_activations[k], &z));
        hidden_pre.push(z);
    }

    let mut z = params
        .output_weights
        .mul_vec(&hidden_out[config.n_hidden() - 1])?;
    add_assign(&mut z, &params.output_bias);
    let output = apply_activation(config.output_activation, &z);

    Ok(ForwardTrace {
        input: x.to_vec(),
        explainable_out,
        hidden_pre,
        hidden_out,
        output,
    })
}

/// Forward pass over every row of `features`.
pub fn forward_batch(
    params: &ExpDnnParams,
    config: &NetworkConfig,
    features: &Matrix,
) -> Result<Vec<ForwardTrace>> {
    (0..features.rows())
        .map(|i| forward(params, config, features.row(i)))
        .collect()
}

/// Stacks trace outputs into an `M x m` prediction matrix.
pub fn predictions(traces: &[ForwardTrace]) -> Matrix {
    let cols = traces.first().map_or(0, |t| t.output.len());
    let data = traces
        .iter()
        .flat_map(|t| t.output.iter().copied())
        .collect();
    Matrix::new(traces.len(), cols, data).expect("traces share an output width")
}

fn add_assign(acc: &mut [f64], other: &[f64]) {
    for (a, b) in acc.iter_mut().zip(other) {
        *a += b;
    }
}

/// Mean loss over the batch.
///
/// MSE and binary cross-entropy average over all `M x m` entries;
/// categorical cross-entropy sums over classes and averages over samples.
/// Probabilities are clamped to `[PROBABILITY_CLAMP, 1 - PROBABILITY_CLAMP]`.
pub fn compute_loss(kind: LossKind, predictions: &Matrix, targets: &Matrix) -> Result<f64> {
    if predictions.rows() != targets.rows() || predictions.cols() != targets.cols() {
        return Err(Error::shape(
            "compute_loss",
            targets.shape_string(),
            predictions.shape_string(),
        ));
    }
    if predictions.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("predictions"));
    }
    let clamp = |y: f64| y.clamp(PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP);
    let pairs = predictions.data().iter().zip(targets.data());
    let entries = predictions.data().len() as f64;
    let loss = match kind {
        LossKind::Mse => pairs.map(|(y, t)| (y - t) * (y - t)).sum::<f64>() / entries,
        LossKind::BinaryCrossEntropy => {
            pairs
                .map(|(&y, &t)| {
                    let y = clamp(y);
                    -(t * y.ln() + (1.0 - t) * (1.0 - y).ln())
                })
                .sum::<f64>()
                / entries
        }
        LossKind::CategoricalCrossEntropy => {
            pairs.map(|(&y, &t)| -t * clamp(y).ln()).sum::<f64>() / predictions.rows() as f64
        }
    };
    Ok(loss)
}

/// Exact batch-mean gradients of `config.loss` with respect to every parameter.
///
/// The output delta uses the fused forms: `(y - t)` for sigmoid with binary
/// cross-entropy and softmax with categorical cross-entropy, `2 (y - t)` for
/// linear with MSE, each scaled to match [`compute_loss`]'s averaging.
pub fn backward(
    params: &ExpDnnParams,
    config: &NetworkConfig,
    traces: &[ForwardTrace],
    targets: &Matrix,
) -> Result<Gradients> {
    if traces.len() != targets.rows() || targets.cols() != config.n_outputs {
        return Err(Error::shape(
            "backward targets",
            format!("{}x{}", traces.len(), config.n_outputs),
            targets.shape_string(),
        ));
    }
    if traces.is_empty() {
        return Err(Error::shape("backward", "at least one trace", "none"));
    }
    let samples = traces.len() as f64;
    let outputs = config.n_outputs as f64;
    let scale = match config.loss {
        LossKind::Mse => 2.0 / (samples * outputs),
        LossKind::BinaryCrossEntropy => 1.0 / (samples * outputs),
        LossKind::CategoricalCrossEntropy => 1.0 / samples,
    };

    let l = config.n_hidden();
    let mut grads = ExpDnnParams::zeros(config);
    for (s, trace) in traces.iter().enumerate() {
        check_trace(trace, config)?;
        let delta: Vector = trace
            .output
            .iter()
            .zip(targets.row(s))
            .map(|(y, t)| scale * (y - t))
            .collect();
        outer_add(&mut grads.output_weights, &delta, &trace.hidden_out[l - 1]);
        add_assign(&mut grads.output_bias, &delta);
        let mut err = params.output_weights.transpose_mul_vec(&delta)?;

        for k in (0..l).rev() {
            let slope = activation_slope(config.hidden_activations[k], &trace.hidden_pre[k])?;
            let delta: Vector = err.iter().zip(&slope).map(|(e, d)| e * d).collect();
            let layer_in = if k == 0 {
                &trace.explainable_out
            } else {
                &trace.hidden_out[k - 1]
            };
            outer_add(&mut grads.hidden_weights[k], &delta, layer_in);
            add_assign(&mut grads.hidden_biases[k], &delta);
            err = params.hidden_weights[k].transpose_mul_vec(&delta)?;
        }

        // err is now ∂loss/∂v; ∂v_i/∂w_i = x_i
        for ((g, x), e) in grads
            .explainable_weights
            .iter_mut()
            .zip(&trace.input)
            .zip(&err)
        {
            *g += x * e;
        }
    }
    Ok(grads)
}

fn check_trace(trace: &ForwardTrace, config: &NetworkConfig) -> Result<()> {
    let ok = trace.input.len() == config.n_inputs
        && trace.explainable_out.len() == config.n_inputs
        && trace.hidden_out.len() == config.n_hidden()
        && trace
            .hidden_out
            .iter()
            .zip(&config.hidden_sizes)
            .all(|(a, &s)| a.len() == s)
        && trace.output.len() == config.n_outputs;
    if ok {
        Ok(())
    } else {
        Err(Error::shape(
            "backward trace",
            format!(
                "trace for {} inputs, layers {:?}",
                config.n_inputs, config.hidden_sizes
            ),
            format!(
                "trace with {} inputs, layers {:?}",
                trace.input.len(),
                trace.hidden_out.iter().map(Vec::len).collect::<Vec<_>>()
            ),
        ))
    }
}

/// `w += delta ⊗ input`.
fn outer_add(w: &mut Matrix, delta: &[f64], input: &[f64]) {
    let cols = w.cols();
    for (row, d) in w.data_mut().chunks_exact_mut(cols).zip(delta) {
        for (wij, a) in row.iter_mut().zip(input) {
            *wij += d * a;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table2() -> NetworkConfig {
        NetworkConfig::standard(2, 1, LossKind::Mse)
    }

    #[test]
    fn first_layers_start_at_one() {
        for seed in 0..5 {
            let p = init_params(&table2(), &mut SeededRng::new(seed)).unwrap();
            assert_eq!(p.explainable_weights, vec![1.0, 1.0]);
            assert!(p.hidden_weights[0].data().iter().all(|&w| w == 1.0));
            assert_eq!(p.hidden_biases[0], vec![1.0, 1.0]);
            assert!(p.hidden_biases[1..].iter().flatten().all(|&b| b == 0.0));
            assert!(p.output_bias.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn glorot_bound_on_second_hidden_layer() {
        let bound = (6.0f64 / 4.0).sqrt();
        assert!((bound - 1.2247).abs() < 1e-4);
        for seed in 0..50 {
            let p = init_params(&table2(), &mut SeededRng::new(seed)).unwrap();
            assert!(p.hidden_weights[1].data().iter().all(|w| w.abs() <= bound));
        }
    }

    #[test]
    fn analytic_activations() {
        assert_eq!(apply_activation(Activation::Tanh, &[0.0]), vec![0.0]);
        assert_eq!(apply_activation(Activation::Sigmoid, &[0.0]), vec![0.5]);
        for c in [-30.0, 0.0, 2.5, 700.0] {
            let s = apply_activation(Activation::Softmax, &[c, c, c]);
            for v in s {
                assert!((v - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn analytic_derivatives() {
        assert_eq!(
            activation_derivative(Activation::Tanh, &[0.0]).unwrap(),
            vec![1.0]
        );
        assert_eq!(
            activation_derivative(Activation::Sigmoid, &[0.5]).unwrap(),
            vec![0.25]
        );
        assert_eq!(
            activation_derivative(Activation::Linear, &[7.0, -3.0]).unwrap(),
            vec![1.0, 1.0]
        );
        assert!(matches!(
            activation_derivative(Activation::Softmax, &[0.2, 0.8]),
            Err(Error::UnsupportedActivation(_))
        ));
    }

    #[test]
    fn slope_agrees_with_derivative_away_from_saturation() {
        let z = [-2.0, -0.3, 0.0, 0.7, 3.0];
        for kind in [Activation::Linear, Activation::Tanh, Activation::Sigmoid] {
            let a = apply_activation(kind, &z);
            let from_out = activation_derivative(kind, &a).unwrap();
            let from_pre = activation_slope(kind, &z).unwrap();
            for (p, q) in from_out.iter().zip(&from_pre) {
                assert!((p - q).abs() < 1e-15, "{kind:?}");
            }
        }
    }

    #[test]
    fn saturated_tanh_slope_keeps_precision() {
        // sech²(16) = 4e^-32 / (1 + e^-32)² ≈ 5.0650977e-14
        let slope = activation_slope(Activation::Tanh, &[16.0]).unwrap()[0];
        let exact = 4.0 * (-32f64).exp() / (1.0 + (-32f64).exp()).powi(2);
        assert!((slope - exact).abs() / exact < 1e-14);
        let lossy = activation_derivative(Activation::Tanh, &[16f64.tanh()]).unwrap()[0];
        assert!((lossy - exact).abs() / exact > 1e-4);
    }

    #[test]
    fn explainable_layer_at_unit_weight() {
        let p = init_params(&table2(), &mut SeededRng::new(0)).unwrap();
        let t = forward(&p, &table2(), &[0.1, 0.1]).unwrap();
        assert_eq!(t.explainable_out, vec![0.1, 0.1]);
    }

    #[test]
    fn first_hidden_layer_sums_plus_one() {
        let cfg = table2();
        let mut p = init_params(&cfg, &mut SeededRng::new(0)).unwrap();
        for k in 1..cfg.n_hidden() {
            p.hidden_weights[k] = Matrix::identity(2);
        }
        p.output_weights = Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let t = forward(&p, &cfg, &[0.1, 0.1]).unwrap();
        for a in &t.hidden_out[0] {
            assert!((a - 1.2).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_output_layer_gives_zero() {
        let cfg = table2();
        let mut p = init_params(&cfg, &mut SeededRng::new(3)).unwrap();
        p.output_weights = Matrix::zeros(1, 2);
        for x in [[0.3, -2.0], [10.0, 4.0]] {
            assert_eq!(forward(&p, &cfg, &x).unwrap().output, vec![0.0]);
        }
    }

    #[test]
    fn forward_rejects_wrong_input_length() {
        let p = init_params(&table2(), &mut SeededRng::new(0)).unwrap();
        assert!(matches!(
            forward(&p, &table2(), &[1.0]),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn analytic_losses() {
        let y = Matrix::from_rows(&[vec![0.5]]).unwrap();
        let t = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let bce = compute_loss(LossKind::BinaryCrossEntropy, &y, &t).unwrap();
        assert!((bce - 2f64.ln()).abs() < 1e-12);

        let y = Matrix::from_rows(&[vec![1.0 / 3.0; 3]]).unwrap();
        let t = Matrix::from_rows(&[vec![0.0, 1.0, 0.0]]).unwrap();
        let cce = compute_loss(LossKind::CategoricalCrossEntropy, &y, &t).unwrap();
        assert!((cce - 3f64.ln()).abs() < 1e-12);

        let y = Matrix::from_rows(&[vec![0.3, 0.1], vec![2.0, -1.0]]).unwrap();
        assert_eq!(compute_loss(LossKind::Mse, &y, &y).unwrap(), 0.0);
    }

    #[test]
    fn loss_errors() {
        let a = Matrix::zeros(2, 1);
        let b = Matrix::zeros(1, 1);
        assert!(matches!(
            compute_loss(LossKind::Mse, &a, &b),
            Err(Error::Shape { .. })
        ));
        let nan = Matrix::from_rows(&[vec![f64::NAN]]).unwrap();
        assert!(matches!(
            compute_loss(LossKind::Mse, &nan, &b),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn clamp_keeps_cross_entropy_finite() {
        let y = Matrix::from_rows(&[vec![0.0, 1.0]]).unwrap();
        let t = Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let bce = compute_loss(LossKind::BinaryCrossEntropy, &y, &t).unwrap();
        assert!((bce - (-(1e-7f64).ln())).abs() < 1e-9);
    }

    #[test]
    fn config_validation() {
        let mut c = table2();
        c.hidden_activations[0] = Activation::Tanh;
        assert!(c.validate().is_err());

        let mut c = table2();
        c.hidden_sizes.truncate(1);
        c.hidden_activations.truncate(1);
        assert!(c.validate().is_err());

        let mut c = table2();
        c.hidden_activations[1] = Activation::Softmax;
        assert!(c.validate().is_err());

        let mut c = table2();
        c.output_activation = Activation::Sigmoid;
        assert!(c.validate().is_err());

        for loss in [
            LossKind::Mse,
            LossKind::BinaryCrossEntropy,
            LossKind::CategoricalCrossEntropy,
        ] {
            NetworkConfig::standard(4, 3, loss).validate().unwrap();
        }
    }

    #[test]
    fn perfect_mse_fit_has_zero_gradient() {
        let cfg = table2();
        let p = init_params(&cfg, &mut SeededRng::new(1)).unwrap();
        let x = Matrix::from_rows(&[vec![0.1, 0.2], vec![0.5, -0.3]]).unwrap();
        let traces = forward_batch(&p, &cfg, &x).unwrap();
        let targets = predictions(&traces);
        let g = backward(&p, &cfg, &traces, &targets).unwrap();
        assert!(g.to_flat().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_column_gets_exactly_zero_gradient() {
        let cfg = NetworkConfig::standard(3, 1, LossKind::BinaryCrossEntropy);
        let p = init_params(&cfg, &mut SeededRng::new(5)).unwrap();
        let x = Matrix::from_rows(&[
            vec![0.0, 0.0, 1.0],
            vec![0.0, 1.0, 1.0],
            vec![0.0, 0.5, -1.0],
        ])
        .unwrap();
        let t = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![1.0]]).unwrap();
        let traces = forward_batch(&p, &cfg, &x).unwrap();
        let g = backward(&p, &cfg, &traces, &t).unwrap();
        assert_eq!(g.explainable_weights[0], 0.0);
        assert_ne!(g.explainable_weights[1], 0.0);
    }

    #[test]
    fn backward_rejects_mismatched_targets() {
        let cfg = table2();
        let p = init_params(&cfg, &mut SeededRng::new(0)).unwrap();
        let traces = forward_batch(&p, &cfg, &Matrix::zeros(3, 2)).unwrap();
        assert!(backward(&p, &cfg, &traces, &Matrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn param_labels_cover_every_block() {
        let cfg = NetworkConfig::standard(2, 3, LossKind::CategoricalCrossEntropy);
        let p = ExpDnnParams::zeros(&cfg);
        assert_eq!(p.param_label(0), "explainable_weights[0]");
        assert_eq!(p.param_label(2), "hidden_weights[0][0][0]");
        assert_eq!(p.param_label(5), "hidden_weights[0][1][1]");
        assert_eq!(p.param_label(6), "hidden_biases[0][0]");
        let n = p.num_params();
        assert_eq!(p.param_label(n - 1), "output_bias[2]");
        assert_eq!(p.param_label(n - 4), "output_weights[2][1]");
    }

    #[test]
    fn doubling_explainable_weights_doubles_first_layer_sums() {
        for (n, m, loss) in [
            (2, 1, LossKind::Mse),
            (4, 1, LossKind::Mse),
            (2, 1, LossKind::BinaryCrossEntropy),
            (4, 1, LossKind::BinaryCrossEntropy),
            (4, 3, LossKind::CategoricalCrossEntropy),
        ] {
            let cfg = NetworkConfig::standard(n, m, loss);
            let p = init_params(&cfg, &mut SeededRng::new(9)).unwrap();
            let mut doubled = p.clone();
            doubled
                .explainable_weights
                .iter_mut()
                .for_each(|w| *w *= 2.0);
            let x: Vec<f64> = (0..n).map(|i| 0.1 * (i as f64 + 1.0)).collect();
            let a = forward(&p, &cfg, &x).unwrap();
            let b = forward(&doubled, &cfg, &x).unwrap();
            let sums_a = p.hidden_weights[0].mul_vec(&a.explainable_out).unwrap();
            let sums_b = p.hidden_weights[0].mul_vec(&b.explainable_out).unwrap();
            for j in 0..n {
                assert_eq!(sums_b[j], 2.0 * sums_a[j]);
                assert_eq!(a.hidden_pre[0][j], sums_a[j] + p.hidden_biases[0][j]);
            }
        }
    }

    proptest! {
        #[test]
        fn softmax_is_a_distribution(z in prop::collection::vec(-50.0f64..50.0, 1..10)) {
            let s = apply_activation(Activation::Softmax, &z);
            let total: f64 = s.iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
            // the dominant entry may round to exactly 1.0 when the others are below ulp
            prop_assert!(s.iter().all(|&p| p > 0.0 && p <= 1.0));
        }
    }
}
