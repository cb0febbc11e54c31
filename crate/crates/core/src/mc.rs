//! Monte Carlo dropout: `L` stochastic passes over one input, reduced to the
//! predicted class and that class's empirical mean and variance.

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::nn::{DropoutMasks, Network};
use crate::{argmax, rng, Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Number of stochastic passes `L`, at least 2.
    pub passes: usize,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(passes: usize, seed: u64) -> Result<Self> {
        let cfg = Self { passes, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.passes < 2 {
            return Err(Error::TooFewPasses(self.passes));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// `L x K` matrix whose row `l` is the probability vector of pass `l`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilitySamples<T: Scalar = f64> {
    samples: Array2<T>,
    input_id: u64,
}

impl<T: Scalar> ProbabilitySamples<T> {
    /// Checks `L >= 2` and that every row lies on the simplex.
    pub fn new(samples: Array2<T>, input_id: u64) -> Result<Self> {
        if samples.nrows() < 2 {
            return Err(Error::TooFewPasses(samples.nrows()));
        }
        if samples.ncols() == 0 {
            return Err(Error::NotOnSimplex("rows are empty".into()));
        }
        for (l, row) in samples.rows().into_iter().enumerate() {
            let mut total = 0.0;
            for &p in row {
                if !p.is_finite() || p < T::zero() {
                    return Err(Error::NotOnSimplex(format!("row {l} has entry {p}")));
                }
                total += p.as_f64();
            }
            if (total - 1.0).abs() > T::SIMPLEX_TOLERANCE {
                return Err(Error::NotOnSimplex(format!("row {l} sums to {total}")));
            }
        }
        Ok(Self { samples, input_id })
    }

    pub fn samples(&self) -> &Array2<T> {
        &self.samples
    }

    pub fn passes(&self) -> usize {
        self.samples.nrows()
    }

    pub fn class_count(&self) -> usize {
        self.samples.ncols()
    }

    pub fn input_id(&self) -> u64 {
        self.input_id
    }

    pub fn column_means(&self) -> Vec<T> {
        self.samples
            .mean_axis(Axis(0))
            .expect("at least two rows")
            .to_vec()
    }
}

/// Moments of the predicted class's probability across passes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate<T = f64> {
    pub predicted_class: usize,
    pub mean: T,
    /// Bessel-corrected (divides by `L - 1`).
    pub variance: T,
}

/// Anything that yields `L` probability vectors per input.
///
/// A trained [`Network`] is the production implementation; tests plug in
/// synthetic generators with known output distributions.
pub trait StochasticClassifier<T: Scalar> {
    fn class_count(&self) -> usize;

    fn sample_probabilities(&self, input: &[T], cfg: &SamplerConfig) -> Result<ProbabilitySamples<T>>;
}

impl<T: Scalar> StochasticClassifier<T> for Network<T> {
    fn class_count(&self) -> usize {
        Network::class_count(self)
    }

    fn sample_probabilities(&self, input: &[T], cfg: &SamplerConfig) -> Result<ProbabilitySamples<T>> {
        mc_forward(self, input, cfg)
    }
}

/// `cfg.passes` forward passes with dropout active.
///
/// Pass `l` draws its masks from substream `l` of `cfg.seed`, so each row is
/// what `net.forward(input, true, &mut rng::substream(cfg.seed, l))` returns,
/// independent of evaluation order. `input_id` is set to `cfg.seed`.
pub fn mc_forward<T: Scalar>(
    net: &Network<T>,
    input: &[T],
    cfg: &SamplerConfig,
) -> Result<ProbabilitySamples<T>> {
    cfg.validate()?;
    let widths = net.config().hidden_widths();
    let mut masks = DropoutMasks::ones(widths, cfg.passes);
    for pass in 0..cfg.passes {
        masks.fill_row(
            pass,
            net.dropout_rate(),
            &mut rng::substream(cfg.seed, pass as u64),
        );
    }
    let probabilities = net.forward_replicated(input, &masks)?;
    ProbabilitySamples::new(probabilities, cfg.seed)
}

/// Argmax of the column means; ties go to the lowest class index.
pub fn predicted_class<T: Scalar>(samples: &ProbabilitySamples<T>) -> usize {
    argmax(&samples.column_means())
}

/// Mean and Bessel-corrected variance of column `class`.
pub fn empirical_moments<T: Scalar>(
    samples: &ProbabilitySamples<T>,
    class: usize,
) -> Result<MomentEstimate<T>> {
    if class >= samples.class_count() {
        return Err(Error::ClassOutOfRange {
            class,
            classes: samples.class_count(),
        });
    }
    let column = samples.samples.column(class);
    let n = T::lit(column.len() as f64);
    // shifted two-pass: a constant column gives exactly zero variance
    let shift = column[0];
    let offset = column.iter().map(|&p| p - shift).sum::<T>() / n;
    let variance = column
        .iter()
        .map(|&p| {
            let d = p - shift - offset;
            d * d
        })
        .sum::<T>()
        / (n - T::one());
    let mean = shift + offset;
    Ok(MomentEstimate {
        predicted_class: class,
        mean,
        variance,
    })
}
