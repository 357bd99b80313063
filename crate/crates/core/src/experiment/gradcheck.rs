//! Central finite-difference check of [`crate::network::backward`].
//!
//! Losses for the difference quotient are evaluated in double-double
//! precision (see `extended`); in plain f64 the quotient carries about 1e-10
//! of round-off, which swamps the small gradients of saturated tanh units.

use serde::Serialize;

use super::extended::central_difference;
use super::ExperimentConfig;
use crate::data::Dataset;
use crate::error::Result;
use crate::network::{
    backward, forward_batch, init_params, ExpDnnParams, ForwardTrace, Gradients, NetworkConfig,
};
use crate::numerics::{Matrix, SeededRng};
use crate::optim::NadamState;

/// Floor on the denominator of the relative error.
const RELATIVE_ERROR_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub passed: bool,
    pub max_relative_error: f64,
    /// Parameter with the largest relative error.
    pub worst_parameter: String,
    /// Set when the check fails; same as `worst_parameter`.
    pub offending_parameter: Option<String>,
    pub analytic: f64,
    pub numeric: f64,
    pub num_params: usize,
    pub step: f64,
    pub tolerance: f64,
}

pub fn grad_check(
    config: &ExperimentConfig,
    dataset: &Dataset,
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport> {
    grad_check_with(config, dataset, step, tolerance, backward)
}

/// Like [`grad_check`] but differentiates with `backward_fn`, so a broken
/// backward pass can be fed to the checker.
///
/// Parameters come from `config.seed`'s initialization moved by one Nadam
/// step on uniform(-1, 1) pseudo-gradients drawn from the same stream, which
/// breaks the all-ones symmetry of the first layers.
pub fn grad_check_with<F>(
    config: &ExperimentConfig,
    dataset: &Dataset,
    step: f64,
    tolerance: f64,
    backward_fn: F,
) -> Result<GradCheckReport>
where
    F: Fn(&ExpDnnParams, &NetworkConfig, &[ForwardTrace], &Matrix) -> Result<Gradients>,
{
    config.validate()?;
    let data = config.prepare(dataset)?;
    let net = &config.network;

    let mut rng = SeededRng::new(config.seed);
    let mut params = init_params(net, &mut rng)?;
    let mut kick = params.zeros_like();
    for block in kick.blocks_mut() {
        for g in block.iter_mut() {
            *g = rng.uniform(-1.0, 1.0)?;
        }
    }
    NadamState::new(&params, config.optimizer).step(&mut params, &kick)?;

    let traces = forward_batch(&params, net, &data.features)?;
    let analytic = backward_fn(&params, net, &traces, &data.targets)?.to_flat();

    let mut worst = (0usize, 0.0f64, 0.0f64, 0.0f64);
    for (i, &a) in analytic.iter().enumerate() {
        let f = central_difference(&params, net, &data.features, &data.targets, i, step);
        let err = (a - f).abs() / a.abs().max(f.abs()).max(RELATIVE_ERROR_FLOOR);
        if i == 0 || err > worst.1 {
            worst = (i, err, a, f);
        }
    }

    let (index, max_relative_error, a, f) = worst;
    let passed = max_relative_error <= tolerance;
    let label = params.param_label(index);
    Ok(GradCheckReport {
        passed,
        max_relative_error,
        offending_parameter: (!passed).then(|| label.clone()),
        worst_parameter: label,
        analytic: a,
        numeric: f,
        num_params: analytic.len(),
        step,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{builtin_dataset, BuiltinDataset};
    use crate::experiment::{case_config, CaseId};

    #[test]
    fn regression_and_softmax_heads_pass() {
        for (case, data) in [
            (CaseId::Case1_1, BuiltinDataset::Case1),
            (CaseId::Case3, BuiltinDataset::Iris),
        ] {
            let cfg = case_config(case, 0);
            let r = grad_check(&cfg, &builtin_dataset(data), 1e-6, 1e-5).unwrap();
            assert!(r.passed, "{case:?}: {r:?}");
            assert!(r.offending_parameter.is_none());
        }
    }

    #[test]
    fn sign_flip_is_caught_and_named() {
        let cfg = case_config(CaseId::Case2_1, 1);
        let data = builtin_dataset(BuiltinDataset::Case2);
        let broken = |p: &ExpDnnParams, n: &NetworkConfig, t: &[ForwardTrace], y: &Matrix| {
            let mut g = backward(p, n, t, y)?;
            g.hidden_weights[1].data_mut()[1] *= -1.0;
            Ok(g)
        };
        let r = grad_check_with(&cfg, &data, 1e-6, 1e-5, broken).unwrap();
        assert!(!r.passed);
        assert_eq!(
            r.offending_parameter.as_deref(),
            Some("hidden_weights[1][0][1]")
        );
        assert!((r.max_relative_error - 2.0).abs() < 1e-3);
    }
}
