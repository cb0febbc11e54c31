use ndarray::ArrayView2;

use super::network::{DropoutMasks, Network};
use crate::Result;

/// Outcome of comparing backprop against central differences.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientCheck {
    pub parameters: usize,
    pub max_relative_error: f64,
    pub max_absolute_error: f64,
}

/// Compares the analytic gradient of the mean cross-entropy with
/// `(L(w + h) - L(w - h)) / 2h`, parameter by parameter.
///
/// Relative error is `|a - n| / max(|a|, |n|, floor)`; the floor keeps
/// near-zero components from dominating.
pub fn gradient_check(
    net: &Network<f64>,
    inputs: ArrayView2<f64>,
    labels: &[usize],
    masks: Option<&DropoutMasks<f64>>,
    h: f64,
    floor: f64,
) -> Result<GradientCheck> {
    let (_, grads) = net.loss_and_gradient(inputs, labels, masks)?;
    let analytic = grads.flatten();
    let base = net.parameters();
    let mut probe = net.clone();
    let mut params = base.clone();
    let mut max_rel = 0.0f64;
    let mut max_abs = 0.0f64;
    for (i, &a) in analytic.iter().enumerate() {
        params[i] = base[i] + h;
        probe.set_parameters(&params)?;
        let up = probe.loss(inputs, labels, masks)?;
        params[i] = base[i] - h;
        probe.set_parameters(&params)?;
        let down = probe.loss(inputs, labels, masks)?;
        params[i] = base[i];
        let numeric = (up - down) / (2.0 * h);
        let abs = (a - numeric).abs();
        max_abs = max_abs.max(abs);
        max_rel = max_rel.max(abs / a.abs().max(numeric.abs()).max(floor));
    }
    Ok(GradientCheck {
        parameters: analytic.len(),
        max_relative_error: max_rel,
        max_absolute_error: max_abs,
    })
}
