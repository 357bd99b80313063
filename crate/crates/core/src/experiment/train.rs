use serde::Serialize;

use super::ExperimentConfig;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::network::{
    backward, compute_loss, forward_batch, init_params, predictions, Activation, ExpDnnParams,
    ForwardTrace, NetworkConfig,
};
use crate::numerics::{Matrix, SeededRng};
use crate::optim::NadamState;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainResult {
    pub params: ExpDnnParams,
    /// `(epoch, loss)` where the loss is measured after `epoch` optimizer
    /// steps; every `loss_log_stride` epochs plus the final one.
    pub loss_history: Vec<(usize, f64)>,
    pub final_loss: f64,
    pub seed: u64,
    pub feature_names: Vec<String>,
}

impl TrainResult {
    pub fn initial_loss(&self) -> f64 {
        self.loss_history[0].1
    }
}

/// Full-batch training: one forward/backward/Nadam step per epoch.
///
/// `dataset` is the raw table; `config.selected_features` and scaling are
/// applied here.
pub fn train(config: &ExperimentConfig, dataset: &Dataset) -> Result<TrainResult> {
    config.validate()?;
    let data = config.prepare(dataset)?;
    let net = &config.network;

    let mut rng = SeededRng::new(config.seed);
    let mut params = init_params(net, &mut rng)?;
    let mut state = NadamState::new(&params, config.optimizer);
    let mut loss_history = Vec::with_capacity(config.epochs / config.loss_log_stride + 2);

    for epoch in 0..config.epochs {
        let traces = forward_batch(&params, net, &data.features)?;
        let loss = batch_loss(net, &traces, &data.targets, epoch)?;
        if epoch % config.loss_log_stride == 0 {
            loss_history.push((epoch, loss));
        }
        let grads = backward(&params, net, &traces, &data.targets)?;
        state.step(&mut params, &grads)?;
    }

    let traces = forward_batch(&params, net, &data.features)?;
    let final_loss = batch_loss(net, &traces, &data.targets, config.epochs)?;
    loss_history.push((config.epochs, final_loss));

    Ok(TrainResult {
        params,
        loss_history,
        final_loss,
        seed: config.seed,
        feature_names: data.feature_names,
    })
}

fn batch_loss(
    net: &NetworkConfig,
    traces: &[ForwardTrace],
    targets: &Matrix,
    epoch: usize,
) -> Result<f64> {
    match compute_loss(net.loss, &predictions(traces), targets) {
        Ok(loss) if loss.is_finite() => Ok(loss),
        Ok(_) | Err(Error::Numeric(_)) => Err(Error::Divergence { epoch }),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub predictions: Matrix,
    /// `None` for regression heads.
    pub accuracy: Option<f64>,
}

/// Loss, predictions and (for classification heads) accuracy of `params`
/// on an already-prepared dataset.
pub fn evaluate(params: &ExpDnnParams, net: &NetworkConfig, data: &Dataset) -> Result<Evaluation> {
    let preds = predictions(&forward_batch(params, net, &data.features)?);
    let loss = compute_loss(net.loss, &preds, &data.targets)?;
    let accuracy = training_accuracy(net.output_activation, &preds, &data.targets);
    Ok(Evaluation {
        loss,
        predictions: preds,
        accuracy,
    })
}

/// Fraction of rows predicted correctly: every sigmoid output rounded at
/// 0.5 must match, or the softmax argmax must hit the target's argmax.
pub fn training_accuracy(head: Activation, predictions: &Matrix, targets: &Matrix) -> Option<f64> {
    let rows = predictions.rows();
    let correct = match head {
        Activation::Sigmoid => (0..rows)
            .filter(|&i| {
                predictions
                    .row(i)
                    .iter()
                    .zip(targets.row(i))
                    .all(|(y, t)| (if *y >= 0.5 { 1.0 } else { 0.0 }) == *t)
            })
            .count(),
        Activation::Softmax => (0..rows)
            .filter(|&i| argmax(predictions.row(i)) == argmax(targets.row(i)))
            .count(),
        Activation::Linear | Activation::Tanh => return None,
    };
    Some(correct as f64 / rows as f64)
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
