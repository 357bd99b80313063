#![allow(dead_code, clippy::needless_range_loop)]

use expdnn::data::BuiltinDataset;
use expdnn::data::Dataset;
use expdnn::experiment::{DatasetSource, ExperimentConfig};
use expdnn::network::{Activation, ExpDnnParams, LossKind, NetworkConfig};
use expdnn::numerics::{Matrix, SeededRng};
use expdnn::optim::NadamHyper;

/// Forward pass written with plain index loops, sharing nothing with the
/// library's matrix kernels.
pub fn scalar_forward(p: &ExpDnnParams, net: &NetworkConfig, x: &[f64]) -> Vec<f64> {
    let mut a: Vec<f64> = Vec::new();
    for i in 0..net.n_inputs {
        a.push(p.explainable_weights[i] * x[i]);
    }
    for k in 0..net.hidden_sizes.len() {
        let w = &p.hidden_weights[k];
        let mut next = Vec::new();
        for j in 0..net.hidden_sizes[k] {
            let mut z = p.hidden_biases[k][j];
            for i in 0..a.len() {
                z += w.get(j, i) * a[i];
            }
            next.push(z);
        }
        a = scalar_activate(net.hidden_activations[k], next);
    }
    let mut y = Vec::new();
    for j in 0..net.n_outputs {
        let mut z = p.output_bias[j];
        for i in 0..a.len() {
            z += p.output_weights.get(j, i) * a[i];
        }
        y.push(z);
    }
    scalar_activate(net.output_activation, y)
}

fn scalar_activate(kind: Activation, z: Vec<f64>) -> Vec<f64> {
    match kind {
        Activation::Linear => z,
        Activation::Tanh => z.into_iter().map(f64::tanh).collect(),
        Activation::Sigmoid => z.into_iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect(),
        Activation::Softmax => {
            let e: Vec<f64> = z.into_iter().map(f64::exp).collect();
            let s: f64 = e.iter().sum();
            e.into_iter().map(|v| v / s).collect()
        }
    }
}

fn pick(rng: &mut SeededRng, n: usize) -> usize {
    (rng.unit() * n as f64) as usize
}

/// Random valid architecture: up to 4 inputs, 2 to 4 hidden layers of at
/// most 8 neurons, any head/loss pairing.
pub fn random_network(rng: &mut SeededRng) -> NetworkConfig {
    let n_inputs = 1 + pick(rng, 4);
    let layers = 2 + pick(rng, 3);
    let hidden_sizes: Vec<usize> = (0..layers).map(|_| 1 + pick(rng, 8)).collect();
    let mut hidden_activations = vec![Activation::Linear];
    for _ in 1..layers {
        hidden_activations
            .push([Activation::Tanh, Activation::Sigmoid, Activation::Linear][pick(rng, 3)]);
    }
    let loss = [
        LossKind::Mse,
        LossKind::BinaryCrossEntropy,
        LossKind::CategoricalCrossEntropy,
    ][pick(rng, 3)];
    let n_outputs = match loss {
        LossKind::CategoricalCrossEntropy => 2 + pick(rng, 2),
        _ => 1 + pick(rng, 3),
    };
    NetworkConfig {
        n_inputs,
        hidden_sizes,
        hidden_activations,
        n_outputs,
        output_activation: loss.required_head(),
        loss,
    }
}

pub fn random_params(net: &NetworkConfig, rng: &mut SeededRng) -> ExpDnnParams {
    let mut p = ExpDnnParams::zeros(net);
    for block in p.blocks_mut() {
        for v in block.iter_mut() {
            *v = rng.uniform(-1.5, 1.5).unwrap();
        }
    }
    p
}

pub fn random_input(n: usize, rng: &mut SeededRng) -> Vec<f64> {
    (0..n).map(|_| rng.uniform(-2.0, 2.0).unwrap()).collect()
}

/// Small random dataset whose targets suit the network's loss.
pub fn random_dataset(net: &NetworkConfig, samples: usize, rng: &mut SeededRng) -> Dataset {
    let rows: Vec<Vec<f64>> = (0..samples)
        .map(|_| random_input(net.n_inputs, rng))
        .collect();
    let targets: Vec<Vec<f64>> = (0..samples)
        .map(|_| match net.loss {
            LossKind::Mse => random_input(net.n_outputs, rng),
            LossKind::BinaryCrossEntropy => (0..net.n_outputs)
                .map(|_| if rng.unit() < 0.5 { 0.0 } else { 1.0 })
                .collect(),
            LossKind::CategoricalCrossEntropy => {
                let hot = pick(rng, net.n_outputs);
                (0..net.n_outputs)
                    .map(|j| if j == hot { 1.0 } else { 0.0 })
                    .collect()
            }
        })
        .collect();
    Dataset::new(
        Matrix::from_rows(&rows).unwrap(),
        Matrix::from_rows(&targets).unwrap(),
        (0..net.n_inputs).map(|i| format!("x{i}")).collect(),
        (0..net.n_outputs).map(|j| format!("y{j}")).collect(),
    )
    .unwrap()
}

/// Experiment wrapper for a network trained on an externally supplied
/// dataset; the dataset source is never loaded.
pub fn experiment(net: NetworkConfig, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        network: net,
        dataset: DatasetSource::Builtin(BuiltinDataset::Case1),
        selected_features: None,
        epochs: 100,
        seed,
        optimizer: NadamHyper::default(),
        loss_log_stride: 10,
        scale_features: false,
    }
}
