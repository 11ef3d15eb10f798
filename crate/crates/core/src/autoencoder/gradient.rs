use serde::{Deserialize, Serialize};

use super::{AutoencoderModel, LossEvaluator, LossKind};
use crate::channels::MixedUnitaryChannel;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GradientMethod {
    /// Exact for circuits where every parameter drives one rotation.
    #[default]
    ParameterShift,
    /// Central differences with step `h`.
    FiniteDiff { h: f64 },
}

/// `∂ᵢf = [f(θ + π/2·eᵢ) − f(θ − π/2·eᵢ)] / 2`.
pub fn parameter_shift<F>(mut f: F, theta: &[f64]) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let shift = std::f64::consts::FRAC_PI_2;
    shifted_differences(&mut f, theta, shift, 0.5)
}

/// `∂ᵢf ≈ [f(θ + h·eᵢ) − f(θ − h·eᵢ)] / 2h`.
pub fn central_difference<F>(mut f: F, theta: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    shifted_differences(&mut f, theta, h, 0.5 / h)
}

fn shifted_differences<F>(f: &mut F, theta: &[f64], shift: f64, scale: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut x = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        x[i] = theta[i] + shift;
        let plus = f(&x)?;
        x[i] = theta[i] - shift;
        let minus = f(&x)?;
        x[i] = theta[i];
        grad.push(scale * (plus - minus));
    }
    Ok(grad)
}

/// Gradient of the exact batch loss at the model's current θ.
pub fn gradient(
    batch: &[MixedUnitaryChannel],
    model: &AutoencoderModel,
    kind: LossKind,
    method: GradientMethod,
) -> Result<Vec<f64>> {
    let evaluator = LossEvaluator::new(batch, model, kind)?;
    evaluator.gradient(model.theta(), method, None)
}
