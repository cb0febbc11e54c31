use dbue_core::data::rotate_image;
use dbue_core::{dbue_estimate, ImageShape, SamplerConfig, StochasticClassifier};
use serde::{Deserialize, Serialize};

use crate::report::median;
use crate::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationPoint {
    pub angle: f64,
    pub predicted_class: usize,
    pub uncertainty: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationSeries {
    pub image_id: String,
    pub points: Vec<RotationPoint>,
}

impl RotationSeries {
    pub fn median_uncertainty(&self) -> Option<f64> {
        median(&self.points.iter().map(|p| p.uncertainty).collect::<Vec<_>>())
    }

    pub fn max_uncertainty(&self) -> Option<f64> {
        self.points.iter().map(|p| p.uncertainty).reduce(f64::max)
    }
}

/// `0, step, 2 step, ...` up to and including 360 (the last step is capped).
pub fn rotation_angles(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(HarnessError::Precondition(format!("rotation step must be positive, got {step}")));
    }
    let mut angles = Vec::new();
    let mut k = 0u32;
    loop {
        let a = step * k as f64;
        if a >= 360.0 - 1e-9 {
            angles.push(360.0);
            return Ok(angles);
        }
        angles.push(a);
        k += 1;
    }
}

/// Rotates `image` through a full turn and scores every angle with the same
/// sampler settings, so differences come from the image alone.
pub fn rotation_sweep<C: StochasticClassifier<f64> + ?Sized>(
    model: &C,
    image: &[f64],
    shape: ImageShape,
    image_id: impl Into<String>,
    step: f64,
    cfg: &SamplerConfig,
) -> Result<RotationSeries> {
    let mut points = Vec::new();
    for angle in rotation_angles(step)? {
        let rotated = rotate_image(image, shape, angle)?;
        let est = dbue_estimate(model, &rotated, cfg)?;
        points.push(RotationPoint {
            angle,
            predicted_class: est.score.predicted_class,
            uncertainty: est.score.value,
        });
    }
    Ok(RotationSeries {
        image_id: image_id.into(),
        points,
    })
}
