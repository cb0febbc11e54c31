use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Hidden-layer nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Softplus,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu => relu_scalar(z),
            Activation::Softplus => softplus_scalar(z),
        }
    }

    /// d/dz of [`Activation::apply`]. ReLU uses 0 at the kink.
    #[inline]
    pub fn derivative<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu => {
                if z > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Softplus => sigmoid_scalar(z),
        }
    }
}

#[inline]
pub(crate) fn relu_scalar<T: Scalar>(z: T) -> T {
    if z > T::zero() {
        z
    } else {
        T::zero()
    }
}

/// `ln(1 + e^z)` without overflow for large `|z|`.
#[inline]
pub(crate) fn softplus_scalar<T: Scalar>(z: T) -> T {
    z.max(T::zero()) + (-z.abs()).exp().ln_1p()
}

#[inline]
pub(crate) fn sigmoid_scalar<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

fn check_finite<T: Scalar>(z: &[T], what: &'static str) -> Result<()> {
    if z.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub fn relu<T: Scalar>(z: &[T]) -> Result<Vec<T>> {
    check_finite(z, "relu input")?;
    Ok(z.iter().map(|&v| relu_scalar(v)).collect())
}

pub fn softplus<T: Scalar>(z: &[T]) -> Result<Vec<T>> {
    check_finite(z, "softplus input")?;
    Ok(z.iter().map(|&v| softplus_scalar(v)).collect())
}

/// Max-shifted softmax.
pub fn softmax<T: Scalar>(z: &[T]) -> Result<Vec<T>> {
    check_finite(z, "softmax input")?;
    if z.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: 1,
            actual: 0,
        });
    }
    let mut out = z.to_vec();
    softmax_in_place(&mut out);
    Ok(out)
}

pub(crate) fn softmax_in_place<T: Scalar>(z: &mut [T]) {
    let max = z.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
    let mut total = T::zero();
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in z.iter_mut() {
        *v /= total;
    }
}
