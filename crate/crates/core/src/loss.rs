//! Spike-count objectives.
//!
//! Classification drives each output neuron toward a desired total spike
//! count: high for the true class, low for the rest. The plain objective
//! compares raw counts; the time-weighted variant scales every step by a
//! decaying profile `omega(t) = beta * t^2 + gamma` so early spikes count
//! more than late ones, which rewards networks that commit early.

use alloc::vec::Vec;

use crate::error::CoreError;
use crate::event::SpikeTensor;
use crate::math;

/// Step-weighting profile applied inside the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weighting {
    /// Every step counts equally: the objective reduces to raw spike counts.
    Uniform,
    /// `omega(t) = beta * t^2 + gamma`, clamped at zero from below.
    /// `beta < 0` makes the profile decay; `beta = 0` (constant profile) is
    /// accepted so tests can pin the weighted path against the uniform one,
    /// but has no modelling value.
    Quadratic { beta: f64, gamma: f64 },
}

/// Where the desired spikes of the reference trains sit in time.
///
/// The weighted objective compares weighted observed counts against the
/// weighted count of a *reference train* with the desired number of spikes;
/// the placement decides which steps those reference spikes occupy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetPlacement {
    /// Reference spikes fill the earliest steps `0..count`. Pairs with a
    /// decaying profile: the target is "fire immediately".
    Earliest,
    /// Reference spikes spread evenly over the horizon.
    Uniform,
}

/// Complete objective description: step weighting, reference placement, and
/// desired counts for true and false classes.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSpec {
    pub weighting: Weighting,
    pub placement: TargetPlacement,
    pub true_count: u32,
    pub false_count: u32,
}

impl LossSpec {
    /// Plain spike-count objective.
    pub fn uniform(true_count: u32, false_count: u32) -> Result<LossSpec, CoreError> {
        if true_count <= false_count {
            return Err(CoreError::InvalidConfig(
                "true-class count must exceed false-class count",
            ));
        }
        Ok(LossSpec {
            weighting: Weighting::Uniform,
            placement: TargetPlacement::Uniform,
            true_count,
            false_count,
        })
    }

    /// Time-weighted objective with an explicit profile. Requires
    /// `beta <= 0`, `gamma > 0`, and a profile that stays positive somewhere
    /// in the horizon (an all-zero profile has zero gradient everywhere).
    pub fn quadratic(
        beta: f64,
        gamma: f64,
        true_count: u32,
        false_count: u32,
        horizon: usize,
    ) -> Result<LossSpec, CoreError> {
        if true_count <= false_count {
            return Err(CoreError::InvalidConfig(
                "true-class count must exceed false-class count",
            ));
        }
        if !beta.is_finite() || !gamma.is_finite() {
            return Err(CoreError::InvalidConfig("profile coefficients must be finite"));
        }
        if beta > 0.0 {
            return Err(CoreError::InvalidConfig("profile must decay: beta must be <= 0"));
        }
        if gamma <= 0.0 {
            return Err(CoreError::InvalidConfig("profile start gamma must be positive"));
        }
        if horizon == 0 {
            return Err(CoreError::InvalidConfig("horizon must be positive"));
        }
        Ok(LossSpec {
            weighting: Weighting::Quadratic { beta, gamma },
            placement: TargetPlacement::Earliest,
            true_count,
            false_count,
        })
    }

    /// Decaying profile that starts at 1 and reaches 0.1 at the horizon's
    /// end: `gamma = 1`, `beta = -0.9 / horizon^2`.
    pub fn quadratic_default(
        true_count: u32,
        false_count: u32,
        horizon: usize,
    ) -> Result<LossSpec, CoreError> {
        if horizon == 0 {
            return Err(CoreError::InvalidConfig("horizon must be positive"));
        }
        let gamma = 1.0;
        let beta = -0.9 * gamma / ((horizon * horizon) as f64);
        LossSpec::quadratic(beta, gamma, true_count, false_count, horizon)
    }

    /// Step weight at bin index `t` (clamped at zero from below).
    pub fn omega(&self, t: usize) -> f64 {
        match self.weighting {
            Weighting::Uniform => 1.0,
            Weighting::Quadratic { beta, gamma } => {
                let v = beta * (t * t) as f64 + gamma;
                if v > 0.0 {
                    v
                } else {
                    0.0
                }
            }
        }
    }

    /// Desired raw count for a neuron given whether it is the true class.
    pub fn desired_count(&self, is_true_class: bool) -> u32 {
        if is_true_class {
            self.true_count
        } else {
            self.false_count
        }
    }

    /// Weighted count of the reference train for one neuron: the sum of
    /// `omega` over the steps its desired spikes occupy.
    pub fn desired_weighted(&self, is_true_class: bool, horizon: usize) -> f64 {
        let count = self.desired_count(is_true_class) as usize;
        if count == 0 {
            return 0.0;
        }
        match self.placement {
            TargetPlacement::Earliest => (0..count.min(horizon)).map(|t| self.omega(t)).sum(),
            TargetPlacement::Uniform => {
                // count spikes at steps floor(j * horizon / count), j = 0..count
                (0..count.min(horizon))
                    .map(|j| self.omega(j * horizon / count.min(horizon).max(1)))
                    .sum()
            }
        }
    }

    /// Loss value and per-neuron residuals for one sample.
    ///
    /// Residual of neuron `n` is its weighted observed count minus its
    /// weighted desired count; the loss is half the sum of squared
    /// residuals. Under a uniform profile this is exactly half the squared
    /// distance between raw counts and desired counts.
    pub fn loss_and_residuals(
        &self,
        output: &SpikeTensor,
        label: usize,
    ) -> Result<(f64, Vec<f64>), CoreError> {
        let n_classes = output.channel_count();
        if label >= n_classes {
            return Err(CoreError::IndexOutOfRange {
                index: label,
                len: n_classes,
            });
        }
        let horizon = output.n_bins();
        let mut residuals = Vec::with_capacity(n_classes);
        let mut loss = 0.0;
        for n in 0..n_classes {
            let observed: f64 = match self.weighting {
                Weighting::Uniform => output.count(n) as f64,
                Weighting::Quadratic { .. } => output.spikes_in(n).map(|t| self.omega(t)).sum(),
            };
            let desired = match self.weighting {
                Weighting::Uniform => self.desired_count(n == label) as f64,
                Weighting::Quadratic { .. } => self.desired_weighted(n == label, horizon),
            };
            let r = observed - desired;
            loss += 0.5 * r * r;
            residuals.push(r);
        }
        Ok((loss, residuals))
    }

    /// Gradient of the loss with respect to neuron `n`'s spike value at step
    /// `t`, given that neuron's residual: `omega(t) * residual`. Under a
    /// uniform profile this is the residual itself at every step.
    #[inline]
    pub fn step_grad(&self, residual: f64, t: usize) -> f64 {
        self.omega(t) * residual
    }
}

/// Desired spike counts from an output horizon: the true class targets half
/// the horizon's steps (at least one), false classes a tenth of that.
/// Rounding is half away from zero.
pub fn make_target_counts(horizon: usize) -> (u32, u32) {
    let true_count = math::round(0.5 * horizon as f64).max(1.0) as u32;
    let false_count = math::round(0.1 * true_count as f64) as u32;
    (true_count, false_count)
}
