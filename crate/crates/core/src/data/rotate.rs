use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageShape {
    pub rows: usize,
    pub cols: usize,
}

impl ImageShape {
    pub fn len(self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }
}

pub const MNIST_SHAPE: ImageShape = ImageShape { rows: 28, cols: 28 };

fn cos_sin(degrees: f64) -> (f64, f64) {
    let turns = degrees / 90.0;
    if turns == turns.round() {
        // exact for quarter turns, so 0/90/180/270/360 are pure permutations
        match (turns as i64).rem_euclid(4) {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        }
    } else {
        let r = degrees.to_radians();
        (r.cos(), r.sin())
    }
}

/// Rotates a row-major image counterclockwise (as displayed, rows going down)
/// about its center `((rows-1)/2, (cols-1)/2)`.
///
/// Each output pixel is bilinearly sampled at its inverse-rotated position;
/// source positions outside the image read as 0. Output is clamped to `[0, 1]`.
pub fn rotate_image<T: Scalar>(image: &[T], shape: ImageShape, degrees: f64) -> Result<Vec<T>> {
    if image.len() != shape.len() {
        return Err(Error::DimensionMismatch {
            expected: shape.len(),
            actual: image.len(),
        });
    }
    if !degrees.is_finite() {
        return Err(Error::NonFinite("rotation angle"));
    }
    let (cos, sin) = cos_sin(degrees);
    let cy = (shape.rows as f64 - 1.0) / 2.0;
    let cx = (shape.cols as f64 - 1.0) / 2.0;
    let pixel = |r: i64, c: i64| -> f64 {
        if r < 0 || c < 0 || r >= shape.rows as i64 || c >= shape.cols as i64 {
            0.0
        } else {
            image[r as usize * shape.cols + c as usize].as_f64()
        }
    };
    let mut out = Vec::with_capacity(image.len());
    for r in 0..shape.rows {
        for c in 0..shape.cols {
            let (dx, dy) = (c as f64 - cx, r as f64 - cy);
            let sx = cx + dx * cos - dy * sin;
            let sy = cy + dx * sin + dy * cos;
            let (x0, y0) = (sx.floor(), sy.floor());
            let (fx, fy) = (sx - x0, sy - y0);
            let (x0, y0) = (x0 as i64, y0 as i64);
            let v = pixel(y0, x0) * (1.0 - fx) * (1.0 - fy)
                + pixel(y0, x0 + 1) * fx * (1.0 - fy)
                + pixel(y0 + 1, x0) * (1.0 - fx) * fy
                + pixel(y0 + 1, x0 + 1) * fx * fy;
            out.push(T::lit(v.clamp(0.0, 1.0)));
        }
    }
    Ok(out)
}
