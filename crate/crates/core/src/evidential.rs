//! Single-pass evidential heads: logits become nonnegative evidence `e`,
//! `alpha = e + 1`, `S = sum(alpha)`, `u = K / S` and `p = alpha / S`.
//!
//! DEC uses ReLU evidence, IAD uses softplus evidence. Both run the network
//! once with dropout off.

use serde::{Deserialize, Serialize};

use crate::dirichlet::{dirichlet_mean, DirichletParams};
use crate::nn::{relu_scalar, softplus_scalar, Network};
use crate::{argmax, Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EvidenceMethod {
    /// ReLU evidence.
    #[serde(rename = "dec")]
    DecRelu,
    /// Softplus evidence.
    #[serde(rename = "iad")]
    IadSoftplus,
}

impl EvidenceMethod {
    pub fn name(self) -> &'static str {
        match self {
            EvidenceMethod::DecRelu => "dec",
            EvidenceMethod::IadSoftplus => "iad",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvidenceVector<T = f64> {
    evidence: Vec<T>,
    method: EvidenceMethod,
}

impl<T: Scalar> EvidenceVector<T> {
    pub fn new(evidence: Vec<T>, method: EvidenceMethod) -> Result<Self> {
        if let Some(bad) = evidence.iter().find(|e| !(e.is_finite() && **e >= T::zero())) {
            return Err(Error::Domain(format!(
                "evidence must be finite and nonnegative, found {bad}"
            )));
        }
        Ok(Self { evidence, method })
    }

    pub fn evidence(&self) -> &[T] {
        &self.evidence
    }

    pub fn method(&self) -> EvidenceMethod {
        self.method
    }
}

pub fn evidence_from_logits<T: Scalar>(logits: &[T], method: EvidenceMethod) -> Result<EvidenceVector<T>> {
    if !logits.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("logits"));
    }
    let evidence = logits
        .iter()
        .map(|&z| match method {
            EvidenceMethod::DecRelu => relu_scalar(z),
            EvidenceMethod::IadSoftplus => softplus_scalar(z),
        })
        .collect();
    EvidenceVector::new(evidence, method)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvidentialOutput<T = f64> {
    pub alpha: DirichletParams<T>,
    pub strength: T,
    /// In `(0, 1]`; equals 1 exactly at zero evidence.
    pub uncertainty: T,
    pub probabilities: Vec<T>,
}

pub fn evidential_uncertainty<T: Scalar>(e: &EvidenceVector<T>, classes: usize) -> Result<EvidentialOutput<T>> {
    if e.evidence().len() != classes {
        return Err(Error::DimensionMismatch {
            expected: classes,
            actual: e.evidence().len(),
        });
    }
    let alpha = DirichletParams::new(e.evidence().iter().map(|&v| v + T::one()).collect())?;
    let strength = alpha.strength();
    Ok(EvidentialOutput {
        strength,
        uncertainty: T::lit(classes as f64) / strength,
        probabilities: dirichlet_mean(&alpha),
        alpha,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselinePrediction<T = f64> {
    pub predicted_class: usize,
    pub uncertainty: T,
}

/// One deterministic pass, evidence head on the logits, argmax of `alpha / S`.
pub fn baseline_predict<T: Scalar>(
    net: &Network<T>,
    input: &[T],
    method: EvidenceMethod,
) -> Result<BaselinePrediction<T>> {
    let out = net.predict(input)?;
    baseline_from_logits(&out.logits, method)
}

/// [`baseline_predict`] for logits that were already computed.
pub fn baseline_from_logits<T: Scalar>(logits: &[T], method: EvidenceMethod) -> Result<BaselinePrediction<T>> {
    let e = evidence_from_logits(logits, method)?;
    let out = evidential_uncertainty(&e, logits.len())?;
    Ok(BaselinePrediction {
        predicted_class: argmax(&out.probabilities),
        uncertainty: out.uncertainty,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::{Activation, NetworkConfig};

    #[test]
    fn evidence_examples() {
        let e = evidence_from_logits(&[-1.0, -2.0, -3.0], EvidenceMethod::DecRelu).unwrap();
        assert_eq!(e.evidence(), &[0.0, 0.0, 0.0]);
        let e = evidence_from_logits(&[0.0, 0.0], EvidenceMethod::IadSoftplus).unwrap();
        for v in e.evidence() {
            assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        }
        let e = evidence_from_logits(&[3.0, -1.0], EvidenceMethod::DecRelu).unwrap();
        assert_eq!(e.evidence(), &[3.0, 0.0]);
        assert!(evidence_from_logits(&[f64::NAN], EvidenceMethod::DecRelu).is_err());
    }

    #[test]
    fn uncertainty_examples() {
        let zero = EvidenceVector::new(vec![0.0f64; 10], EvidenceMethod::DecRelu).unwrap();
        let out = evidential_uncertainty(&zero, 10).unwrap();
        assert_eq!(out.strength, 10.0);
        assert_eq!(out.uncertainty, 1.0);
        assert!(out.probabilities.iter().all(|&p| (p - 0.1).abs() < 1e-15));

        let mut e = vec![0.0f64; 10];
        e[0] = 9.0;
        let out = evidential_uncertainty(&EvidenceVector::new(e, EvidenceMethod::DecRelu).unwrap(), 10).unwrap();
        assert_eq!(out.strength, 19.0);
        assert!((out.uncertainty - 10.0 / 19.0).abs() < 1e-15);
        assert!((out.probabilities[0] - 10.0 / 19.0).abs() < 1e-15);

        let big = EvidenceVector::new(vec![1e12, 0.0, 0.0], EvidenceMethod::IadSoftplus).unwrap();
        let out = evidential_uncertainty(&big, 3).unwrap();
        assert!(out.uncertainty < 1e-11);
        assert!(out.probabilities[0] > 1.0 - 1e-11);

        assert!(evidential_uncertainty(&zero, 3).is_err());
        assert!(EvidenceVector::new(vec![-1.0], EvidenceMethod::DecRelu).is_err());
    }

    #[test]
    fn baseline_examples() {
        // zero weights give all-zero logits
        let mut net: Network = Network::init(NetworkConfig::new(vec![3, 4, 5], Activation::Relu, 0.0, 1)).unwrap();
        let zeros = vec![0.0; net.parameter_count()];
        net.set_parameters(&zeros).unwrap();
        let p = baseline_predict(&net, &[1.0, 2.0, 3.0], EvidenceMethod::DecRelu).unwrap();
        assert_eq!(p.predicted_class, 0);
        assert_eq!(p.uncertainty, 1.0);

        let net: Network = Network::init(NetworkConfig::new(vec![3, 8, 4], Activation::Relu, 0.5, 7)).unwrap();
        let x = [0.4, -1.2, 0.9];
        let a = baseline_predict(&net, &x, EvidenceMethod::IadSoftplus).unwrap();
        let b = baseline_predict(&net, &x, EvidenceMethod::IadSoftplus).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn evidential_invariants(e in proptest::collection::vec(0.0..50.0f64, 2..8), bump in 1e-3..10.0f64, idx in any::<prop::sample::Index>()) {
            let k = e.len();
            let out = evidential_uncertainty(&EvidenceVector::new(e.clone(), EvidenceMethod::DecRelu).unwrap(), k).unwrap();
            prop_assert!(out.uncertainty > 0.0 && out.uncertainty <= 1.0);
            prop_assert!((out.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert_eq!(&out.probabilities, &dirichlet_mean(&out.alpha));
            let mut more = e.clone();
            more[idx.index(k)] += bump;
            let out2 = evidential_uncertainty(&EvidenceVector::new(more, EvidenceMethod::DecRelu).unwrap(), k).unwrap();
            prop_assert!(out2.uncertainty < out.uncertainty);
        }

        #[test]
        fn evidence_sign_properties(z in proptest::collection::vec(-40.0..40.0f64, 1..10)) {
            let sp = evidence_from_logits(&z, EvidenceMethod::IadSoftplus).unwrap();
            prop_assert!(sp.evidence().iter().all(|&v| v > 0.0));
            let r = evidence_from_logits(&z, EvidenceMethod::DecRelu).unwrap();
            for (&zi, &ei) in z.iter().zip(r.evidence()) {
                if zi <= 0.0 { prop_assert_eq!(ei, 0.0); } else { prop_assert_eq!(ei, zi); }
            }
        }

        #[test]
        fn dec_argmax_follows_positive_logits(z in proptest::collection::vec(-5.0..5.0f64, 2..10)) {
            prop_assume!(z.iter().cloned().fold(f64::MIN, f64::max) > 0.0);
            let p = baseline_from_logits(&z, EvidenceMethod::DecRelu).unwrap();
            prop_assert_eq!(p.predicted_class, argmax(&z));
        }

        #[test]
        fn zero_evidence_iff_unit_uncertainty(e in proptest::collection::vec(prop_oneof![Just(0.0), 0.0..3.0f64], 2..6)) {
            let k = e.len();
            let out = evidential_uncertainty(&EvidenceVector::new(e.clone(), EvidenceMethod::DecRelu).unwrap(), k).unwrap();
            prop_assert_eq!(out.uncertainty == 1.0, e.iter().all(|&v| v == 0.0));
        }
    }
}
