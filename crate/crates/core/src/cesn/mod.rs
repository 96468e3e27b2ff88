//! Conceptor echo state networks.
//!
//! One [`EsnModel`] learns several temporal patterns in a single reservoir.
//! Each pattern gets a [`Conceptor`] that characterizes the state subspace
//! it occupies; new patterns are loaded only into the space earlier ones
//! left free, so they do not overwrite each other.

mod codec;
mod conceptor;
mod model;

use thiserror::Error;

use crate::numerics::NumericsError;

pub use codec::{decode_model, encode_model, MODEL_MAGIC, MODEL_VERSION};
pub use conceptor::{compute_conceptor, conceptor_matrix, conceptor_not, conceptor_or, free_memory, Conceptor};
pub use model::{ridge_readout, EsnModel, LoadReport, RECALL_WARMUP};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CesnError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("aperture mismatch: {0} vs {1}")]
    ApertureMismatch(f64, f64),
    #[error("reservoir memory exhausted (free quota {quota:.4}); retrain with a larger reservoir")]
    QuotaExhausted { quota: f64 },
    #[error("no patterns loaded")]
    NoPatterns,
    #[error("readout not trained")]
    Untrained,
    #[error("pattern {index} out of range ({count} loaded)")]
    PatternIndex { index: usize, count: usize },
    #[error("truth sequence has zero variance")]
    ZeroVariance,
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("model file: {0}")]
    Codec(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Root-mean-square error over the truth variance. Sequences of vectors are
/// compared after flattening.
pub fn nrmse(predicted: &[f64], truth: &[f64]) -> Result<f64, CesnError> {
    if predicted.len() != truth.len() || truth.is_empty() {
        return Err(CesnError::Dimension(format!("nrmse lengths {} and {}", predicted.len(), truth.len())));
    }
    let n = truth.len() as f64;
    let mean = truth.iter().sum::<f64>() / n;
    let var = truth.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
    if var <= 0.0 {
        return Err(CesnError::ZeroVariance);
    }
    let mse = predicted.iter().zip(truth).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / n;
    Ok((mse / var).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::RandomSource;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn nrmse_examples() {
        let y: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        assert_eq!(nrmse(&y, &y).unwrap(), 0.0);
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let flat = vec![mean; y.len()];
        assert!((nrmse(&flat, &y).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(nrmse(&[1.0, 1.0], &[2.0, 2.0]), Err(CesnError::ZeroVariance));
        assert!(nrmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn nrmse_of_variance_sized_noise_is_one() {
        let mut rng = RandomSource::new(7).rng();
        let y: Vec<f64> = (0..200_000).map(|i| (i as f64 * 0.01).sin() * 2.0).collect();
        let n = y.len() as f64;
        let m = y.iter().sum::<f64>() / n;
        let sd = (y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
        let noisy: Vec<f64> = y
            .iter()
            .map(|v| v + sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        assert!((nrmse(&noisy, &y).unwrap() - 1.0).abs() < 0.01);
    }
}
