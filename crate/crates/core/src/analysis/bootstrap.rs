use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

/// Resamples `sample_size` runs with replacement `n_resamples` times and
/// reports the mean and spread of `metric` over the resamples.
pub fn bootstrap<T, R: Rng + ?Sized>(
    runs: &[T],
    metric: impl Fn(&[&T]) -> f64,
    n_resamples: usize,
    sample_size: usize,
    rng: &mut R,
) -> Result<MeanSe> {
    if runs.len() < 2 {
        return Err(Error::InsufficientData(format!("bootstrap needs at least 2 runs, got {}", runs.len())));
    }
    if n_resamples < 2 || sample_size == 0 {
        return Err(Error::config("bootstrap needs at least 2 resamples of at least 1 run"));
    }
    let mut sample: Vec<&T> = Vec::with_capacity(sample_size);
    let values: Vec<f64> = (0..n_resamples)
        .map(|_| {
            sample.clear();
            sample.extend((0..sample_size).map(|_| &runs[rng.random_range(0..runs.len())]));
            metric(&sample)
        })
        .collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(MeanSe { mean, se: var.sqrt() })
}

/// Mean of a per-run value over a resample.
pub fn mean_of<T>(f: impl Fn(&T) -> f64) -> impl Fn(&[&T]) -> f64 {
    move |s: &[&T]| s.iter().map(|r| f(r)).sum::<f64>() / s.len() as f64
}
