//! Dirichlet strength and uncertainty from Monte Carlo moments, plus the
//! Dirichlet density, moments and sampler used to check them.
//!
//! For `p ~ Dir(alpha)` with `S = sum(alpha)`, every marginal satisfies
//! `Var(p_k) = E[p_k] (1 - E[p_k]) / (1 + S)`. Inverting that identity on the
//! empirical mean and variance of the predicted class gives
//! `S = E (1 - E) / Var - 1`, and the uncertainty is `u = K / |S|`.

use ndarray::Array2;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::mc::{empirical_moments, predicted_class, MomentEstimate, SamplerConfig, StochasticClassifier};
use crate::{rng, Error, Result, Scalar};

/// Lower bound applied to the variance before dividing by it.
pub const VARIANCE_FLOOR: f64 = 1e-12;
/// Lower bound applied to `|S|` before dividing by it.
pub const STRENGTH_FLOOR: f64 = 1e-9;

/// Concentration parameters, all strictly positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletParams<T = f64> {
    alpha: Vec<T>,
}

impl<T: Scalar> DirichletParams<T> {
    pub fn new(alpha: Vec<T>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::InvalidAlpha("empty parameter vector".into()));
        }
        if let Some(bad) = alpha.iter().find(|a| !(a.is_finite() && **a > T::zero())) {
            return Err(Error::InvalidAlpha(format!(
                "every alpha must be finite and positive, found {bad}"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> &[T] {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// `S = sum(alpha)`.
    pub fn strength(&self) -> T {
        self.alpha.iter().copied().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletStrength<T = f64> {
    pub value: T,
    /// Set when the variance floor or the `|S|` floor was applied.
    pub floored: bool,
}

impl<T: Scalar> DirichletStrength<T> {
    /// Possible only when the sample variance exceeds `mean (1 - mean)`.
    pub fn is_negative(&self) -> bool {
        self.value < T::zero()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyScore<T = f64> {
    /// `u = K / max(|S|, STRENGTH_FLOOR)`; unbounded above.
    pub value: T,
    pub predicted_class: usize,
    pub strength: DirichletStrength<T>,
}

/// Moment-matched strength `S = mean (1 - mean) / max(variance, 1e-12) - 1`.
pub fn dirichlet_strength<T: Scalar>(m: &MomentEstimate<T>) -> Result<DirichletStrength<T>> {
    if !(m.mean.is_finite() && m.variance.is_finite()) {
        return Err(Error::NonFinite("moment estimate"));
    }
    if m.mean < T::zero() || m.mean > T::one() {
        return Err(Error::Domain(format!("mean {} outside [0, 1]", m.mean)));
    }
    if m.variance < T::zero() {
        return Err(Error::Domain(format!("negative variance {}", m.variance)));
    }
    let floor = T::lit(VARIANCE_FLOOR);
    let floored = m.variance < floor;
    let variance = if floored { floor } else { m.variance };
    Ok(DirichletStrength {
        value: m.mean * (T::one() - m.mean) / variance - T::one(),
        floored,
    })
}

/// `u = K / max(|S|, 1e-9)`, tagged with the class it refers to.
pub fn uncertainty_from_strength<T: Scalar>(
    strength: DirichletStrength<T>,
    classes: usize,
    predicted_class: usize,
) -> UncertaintyScore<T> {
    let floor = T::lit(STRENGTH_FLOOR);
    let magnitude = strength.value.abs();
    let hit_floor = magnitude < floor;
    UncertaintyScore {
        value: T::lit(classes as f64) / magnitude.max(floor),
        predicted_class,
        strength: DirichletStrength {
            value: strength.value,
            floored: strength.floored || hit_floor,
        },
    }
}

/// The moments an uncertainty score was computed from, alongside the score.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DbueEstimate<T = f64> {
    pub moments: MomentEstimate<T>,
    pub score: UncertaintyScore<T>,
}

/// Sample passes, pick the class with the highest mean probability, match its
/// moments to a Dirichlet strength, and turn that into `u = K / |S|`.
pub fn dbue_estimate<T: Scalar, C: StochasticClassifier<T> + ?Sized>(
    model: &C,
    input: &[T],
    cfg: &SamplerConfig,
) -> Result<DbueEstimate<T>> {
    let samples = model.sample_probabilities(input, cfg)?;
    let class = predicted_class(&samples);
    let moments = empirical_moments(&samples, class)?;
    let strength = dirichlet_strength(&moments)?;
    Ok(DbueEstimate {
        moments,
        score: uncertainty_from_strength(strength, model.class_count(), class),
    })
}

pub fn dbue_uncertainty<T: Scalar, C: StochasticClassifier<T> + ?Sized>(
    model: &C,
    input: &[T],
    cfg: &SamplerConfig,
) -> Result<UncertaintyScore<T>> {
    dbue_estimate(model, input, cfg).map(|e| e.score)
}

/// `ln( prod p_k^(alpha_k - 1) / B(alpha) )`.
///
/// A zero coordinate is allowed when its `alpha_k >= 1` (giving `-inf` for
/// `alpha_k > 1`); with `alpha_k < 1` the density diverges and this is a
/// domain error.
pub fn dirichlet_log_density<T: Scalar>(p: &[T], a: &DirichletParams<T>) -> Result<T> {
    if p.len() != a.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: p.len(),
        });
    }
    if p.iter().any(|v| !v.is_finite() || *v < T::zero()) {
        return Err(Error::NotOnSimplex(format!("{p:?} has a negative or non-finite entry")));
    }
    let total: f64 = p.iter().map(|v| v.as_f64()).sum();
    if (total - 1.0).abs() > T::SIMPLEX_TOLERANCE {
        return Err(Error::NotOnSimplex(format!("entries sum to {total}")));
    }
    let mut log_density = libm::lgamma(a.strength().as_f64());
    for (&pk, &ak) in p.iter().zip(a.alpha()) {
        let (pk, ak) = (pk.as_f64(), ak.as_f64());
        log_density -= libm::lgamma(ak);
        if pk == 0.0 {
            if ak < 1.0 {
                return Err(Error::Domain(format!(
                    "density diverges at p_k = 0 with alpha_k = {ak}"
                )));
            }
            if ak > 1.0 {
                return Ok(T::neg_infinity());
            }
        } else {
            log_density += (ak - 1.0) * pk.ln();
        }
    }
    Ok(T::lit(log_density))
}

/// `E[p_k] = alpha_k / S`.
pub fn dirichlet_mean<T: Scalar>(a: &DirichletParams<T>) -> Vec<T> {
    let s = a.strength();
    a.alpha().iter().map(|&ak| ak / s).collect()
}

/// `Var(p_k) = E[p_k] (1 - E[p_k]) / (1 + S)`.
pub fn dirichlet_variance<T: Scalar>(a: &DirichletParams<T>, k: usize) -> Result<T> {
    if k >= a.len() {
        return Err(Error::ClassOutOfRange {
            class: k,
            classes: a.len(),
        });
    }
    let s = a.strength();
    let mean = a.alpha()[k] / s;
    Ok(mean * (T::one() - mean) / (T::one() + s))
}

/// `n` draws from `Dir(alpha)` as normalized independent `Gamma(alpha_k, 1)`
/// variates, one row per draw.
pub fn sample_dirichlet<T: Scalar>(a: &DirichletParams<T>, n: usize, seed: u64) -> Result<Array2<T>> {
    if n == 0 {
        return Err(Error::InvalidAlpha("sample count must be positive".into()));
    }
    let gammas: Vec<Gamma<f64>> = a
        .alpha()
        .iter()
        .map(|ak| Gamma::new(ak.as_f64(), 1.0).map_err(|e| Error::InvalidAlpha(e.to_string())))
        .collect::<Result<_>>()?;
    let mut r = rng::seeded(seed);
    let k = a.len();
    let mut out = Array2::zeros((n, k));
    let mut draw = vec![0.0; k];
    for mut row in out.rows_mut() {
        // tiny alphas can underflow every coordinate; redraw in that case
        let total = loop {
            for (d, g) in draw.iter_mut().zip(&gammas) {
                *d = g.sample(&mut r);
            }
            let total: f64 = draw.iter().sum();
            if total > 0.0 && total.is_finite() {
                break total;
            }
        };
        for (o, d) in row.iter_mut().zip(&draw) {
            *o = T::lit(d / total);
        }
    }
    Ok(out)
}
