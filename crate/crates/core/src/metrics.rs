//! Evaluation metrics.

use crate::error::{shape_err, Error, Result};

/// Fraction of mismatched predictions, in `[0, 1]`.
pub fn error_rate<T: PartialEq>(predicted: &[T], truth: &[T]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(shape_err("error_rate", truth.len(), predicted.len()));
    }
    if truth.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let wrong = predicted.iter().zip(truth).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / truth.len() as f64)
}

/// Mean squared error over all entries.
pub fn mse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(shape_err("mse", truth.len(), estimate.len()));
    }
    if truth.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    Ok(estimate.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / truth.len() as f64)
}

/// `10 log10(255^2 / mse)` for an MSE measured on the 0..255 scale.
/// Returns `+inf` when `mse == 0`.
pub fn psnr(mse_255: f64) -> f64 {
    if mse_255 == 0.0 {
        f64::INFINITY
    } else {
        10.0 * libm::log10(255.0 * 255.0 / mse_255)
    }
}

/// PSNR between two images with intensities in `[0, 1]`.
pub fn psnr_unit(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    Ok(psnr(mse(estimate, truth)? * 255.0 * 255.0))
}
