//! Dirichlet moment-matched uncertainty estimation on top of Monte Carlo dropout.
//!
//! A trained classifier is run `L` times with dropout left on. The spread of the
//! predicted class's probability across those passes is matched to the
//! variance of a Dirichlet marginal, which yields a Dirichlet strength `S` and
//! an uncertainty score `u = K / |S|`.
//!
//! The crate also carries everything needed to evaluate that estimator:
//!
//! - [`nn`]: a small dense network with dropout, trained by hand-written
//!   backpropagation.
//! - [`mc`]: stochastic forward passes and their empirical moments.
//! - [`dirichlet`]: the strength/uncertainty estimator plus Dirichlet density,
//!   moments and a sampling oracle.
//! - [`evidential`]: ReLU (DEC) and softplus (IAD) evidence heads.
//! - [`data`]: IDX and CSV ingestion, noise injection, rotation, OOD alignment.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); `f64` is the
//! default type parameter everywhere and the aliases below name the common
//! instantiations.

pub mod data;
pub mod dirichlet;
pub mod error;
pub mod evidential;
pub mod mc;
pub mod nn;
pub mod rng;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use data::{FeatureKind, FeatureSpec, ImageShape, LabeledDataset, NoiseSpec, Provenance};
pub use dirichlet::{
    dbue_estimate, dbue_uncertainty, dirichlet_log_density, dirichlet_mean, dirichlet_strength,
    dirichlet_variance, sample_dirichlet, uncertainty_from_strength, DbueEstimate,
    DirichletParams, DirichletStrength, UncertaintyScore,
};
pub use evidential::{
    baseline_predict, evidence_from_logits, evidential_uncertainty, BaselinePrediction,
    EvidenceMethod, EvidenceVector, EvidentialOutput,
};
pub use mc::{
    empirical_moments, mc_forward, predicted_class, MomentEstimate, ProbabilitySamples,
    SamplerConfig, StochasticClassifier,
};
pub use nn::{
    train, Activation, EpochMetrics, ForwardOutput, Network, NetworkConfig, OptimizerKind,
    TrainingHyperparams, TrainingReport,
};

/// Double-precision network, the configuration used for all experiments.
pub type Network64 = Network<f64>;
/// Single-precision network.
pub type Network32 = Network<f32>;
pub type Dataset64 = LabeledDataset<f64>;
pub type Dataset32 = LabeledDataset<f32>;
pub type Samples64 = ProbabilitySamples<f64>;
pub type Moments64 = MomentEstimate<f64>;
pub type Dirichlet64 = DirichletParams<f64>;
pub type Uncertainty64 = UncertaintyScore<f64>;

/// Index of the largest entry; ties resolve to the lowest index.
///
/// NaN entries never win. Returns 0 for an empty slice.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
