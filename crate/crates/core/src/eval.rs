//! Classification readout and accuracy measurement.
//!
//! The predicted class is the output neuron with the most spikes. Reading
//! only a prefix of the output window gives early classification: accuracy
//! as a function of how many bins the classifier has seen.

use alloc::vec::Vec;

use crate::error::CoreError;
use crate::event::SpikeTensor;
use crate::math;
use crate::network::Network;
use crate::train::TensorSample;

/// Per-class spike counts over the first `upto` bins.
pub fn spike_counts(output: &SpikeTensor, upto: usize) -> Vec<u32> {
    (0..output.channel_count())
        .map(|n| output.count_upto(n, upto))
        .collect()
}

/// Class with the highest spike count over the first `upto` bins. Ties go
/// to the lowest class index, so the result is total and deterministic.
pub fn predict(output: &SpikeTensor, upto: usize) -> usize {
    let mut best = 0usize;
    let mut best_count = output.count_upto(0, upto);
    for n in 1..output.channel_count() {
        let c = output.count_upto(n, upto);
        if c > best_count {
            best = n;
            best_count = c;
        }
    }
    best
}

/// Fraction of samples whose full-window prediction matches the label.
pub fn evaluate_accuracy(net: &Network, samples: &[TensorSample]) -> Result<f64, CoreError> {
    if samples.is_empty() {
        return Err(CoreError::InvalidConfig("evaluation set must not be empty"));
    }
    let mut correct = 0usize;
    for s in samples {
        let trace = net.forward(&s.inputs)?;
        let output = trace.output();
        if predict(output, output.n_bins()) == s.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / samples.len() as f64)
}

/// Cut points for an early-classification sweep: every 10 bins, plus the
/// horizon itself when it is not a multiple of 10.
pub fn default_time_points(horizon: usize) -> Vec<usize> {
    let mut points: Vec<usize> = (1..=horizon / 10).map(|k| k * 10).collect();
    if horizon > 0 && horizon % 10 != 0 {
        points.push(horizon);
    }
    points
}

/// Accuracy at each cut point, reusing one forward pass per sample.
pub fn accuracy_over_time(
    net: &Network,
    samples: &[TensorSample],
    upto_bins: &[usize],
) -> Result<Vec<f64>, CoreError> {
    if samples.is_empty() {
        return Err(CoreError::InvalidConfig("evaluation set must not be empty"));
    }
    if upto_bins.is_empty() {
        return Err(CoreError::InvalidConfig("need at least one cut point"));
    }
    let mut correct = alloc::vec![0usize; upto_bins.len()];
    for s in samples {
        let trace = net.forward(&s.inputs)?;
        let output = trace.output();
        for (slot, &upto) in correct.iter_mut().zip(upto_bins.iter()) {
            if predict(output, upto) == s.label {
                *slot += 1;
            }
        }
    }
    Ok(correct
        .into_iter()
        .map(|c| c as f64 / samples.len() as f64)
        .collect())
}

/// Early-classification accuracies aggregated across folds: per cut point,
/// the mean and population standard deviation of the fold accuracies.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyCurve {
    pub upto_bins: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl AccuracyCurve {
    pub fn from_folds(upto_bins: Vec<usize>, fold_accuracies: &[Vec<f64>]) -> Result<AccuracyCurve, CoreError> {
        if fold_accuracies.is_empty() {
            return Err(CoreError::InvalidConfig("need at least one fold"));
        }
        for fa in fold_accuracies {
            if fa.len() != upto_bins.len() {
                return Err(CoreError::ShapeMismatch {
                    context: "fold accuracies per cut point",
                    expected: upto_bins.len(),
                    got: fa.len(),
                });
            }
        }
        let k = fold_accuracies.len() as f64;
        let mut mean = Vec::with_capacity(upto_bins.len());
        let mut std = Vec::with_capacity(upto_bins.len());
        for p in 0..upto_bins.len() {
            let m: f64 = fold_accuracies.iter().map(|fa| fa[p]).sum::<f64>() / k;
            let var: f64 = fold_accuracies.iter().map(|fa| (fa[p] - m) * (fa[p] - m)).sum::<f64>() / k;
            mean.push(m);
            std.push(math::sqrt(var));
        }
        Ok(AccuracyCurve {
            upto_bins,
            mean,
            std,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensor_with_counts(counts: &[u32], n_bins: usize) -> SpikeTensor {
        let mut t = SpikeTensor::zeros(counts.len(), n_bins, 1_000);
        for (ch, &c) in counts.iter().enumerate() {
            for b in 0..c as usize {
                t.set(ch, b, true);
            }
        }
        t
    }

    #[test]
    fn predict_takes_argmax() {
        let t = tensor_with_counts(&[3, 9, 4], 20);
        assert_eq!(predict(&t, 20), 1);
        assert_eq!(spike_counts(&t, 20), alloc::vec![3, 9, 4]);
    }

    #[test]
    fn predict_breaks_ties_toward_lowest_index() {
        let t = tensor_with_counts(&[0, 5, 5], 20);
        assert_eq!(predict(&t, 20), 1);
        let z = tensor_with_counts(&[0, 0, 0], 20);
        assert_eq!(predict(&z, 20), 0);
    }

    #[test]
    fn predict_prefix_sees_only_early_spikes() {
        // channel 0 spikes early, channel 1 only late
        let mut t = SpikeTensor::zeros(2, 30, 1_000);
        for b in 0..3 {
            t.set(0, b, true);
        }
        for b in 20..30 {
            t.set(1, b, true);
        }
        assert_eq!(predict(&t, 10), 0);
        assert_eq!(predict(&t, 30), 1);
    }

    #[test]
    fn default_points_step_by_ten_and_end_at_horizon() {
        assert_eq!(default_time_points(150), (1..=15).map(|k| k * 10).collect::<Vec<_>>());
        assert_eq!(default_time_points(25), alloc::vec![10, 20, 25]);
        assert_eq!(default_time_points(7), alloc::vec![7]);
    }

    #[test]
    fn curve_mean_and_population_std() {
        let folds = alloc::vec![alloc::vec![0.5, 1.0], alloc::vec![1.0, 1.0]];
        let curve = AccuracyCurve::from_folds(alloc::vec![10, 20], &folds).unwrap();
        assert_eq!(curve.mean, alloc::vec![0.75, 1.0]);
        assert!((curve.std[0] - 0.25).abs() < 1e-12);
        assert_eq!(curve.std[1], 0.0);
        // one fold: zero spread by definition
        let single = AccuracyCurve::from_folds(alloc::vec![10], &[alloc::vec![0.8]]).unwrap();
        assert_eq!(single.std, alloc::vec![0.0]);
    }

    #[test]
    fn curve_rejects_ragged_folds() {
        let folds = alloc::vec![alloc::vec![0.5], alloc::vec![1.0, 1.0]];
        assert!(AccuracyCurve::from_folds(alloc::vec![10], &folds).is_err());
    }
}
