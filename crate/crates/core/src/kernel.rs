//! Temporal kernels for membrane dynamics.
//!
//! A kernel is a causal finite impulse response sampled at the simulation
//! step. The response kernel shapes the postsynaptic contribution of an
//! input spike; the refractory kernel is the non-positive self-feedback a
//! neuron applies to itself after firing.

use alloc::vec::Vec;

use crate::error::CoreError;
use crate::math;

/// Samples below this magnitude end the kernel's support.
const TRUNCATION_EPS: f64 = 1e-6;

/// A sampled causal kernel. `values[k]` is the contribution `k` steps after
/// the triggering spike.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    values: Vec<f64>,
}

impl Kernel {
    /// Postsynaptic response `(t / tau) * exp(1 - t / tau)`: zero at the
    /// spike itself, unit peak at `t = tau`, exponential decay after.
    /// Sampled at integer steps and truncated once past the peak the
    /// magnitude stays below 1e-6.
    pub fn response(tau_steps: f64) -> Result<Kernel, CoreError> {
        if !(tau_steps > 0.0) || !tau_steps.is_finite() {
            return Err(CoreError::InvalidConfig("response tau must be positive and finite"));
        }
        Ok(Kernel {
            values: sample_alpha(tau_steps, 1.0),
        })
    }

    /// Refractory response `-2 * threshold * (t / tau) * exp(1 - t / tau)`:
    /// a non-positive pull that at its peak doubles the distance back to
    /// rest, making an immediate second spike need twice the drive.
    pub fn refractory(tau_steps: f64, threshold: f64) -> Result<Kernel, CoreError> {
        if !(tau_steps > 0.0) || !tau_steps.is_finite() {
            return Err(CoreError::InvalidConfig("refractory tau must be positive and finite"));
        }
        if !(threshold > 0.0) || !threshold.is_finite() {
            return Err(CoreError::InvalidConfig("threshold must be positive and finite"));
        }
        Ok(Kernel {
            values: sample_alpha(tau_steps, -2.0 * threshold),
        })
    }

    /// Wraps explicit samples; used by tests to pin exact dynamics.
    pub fn from_samples(values: Vec<f64>) -> Result<Kernel, CoreError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidConfig("kernel samples must be finite"));
        }
        Ok(Kernel { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> usize {
        self.values.len()
    }

    /// Causal discrete convolution: `out[t] = sum_k values[k] * signal[t - k]`.
    /// Output has the same length as `signal`.
    pub fn convolve(&self, signal: &[f64]) -> Vec<f64> {
        let n = signal.len();
        let mut out = alloc::vec![0.0; n];
        for (t0, &s) in signal.iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            let kmax = self.values.len().min(n - t0);
            for k in 0..kmax {
                out[t0 + k] += self.values[k] * s;
            }
        }
        out
    }

    /// Cross-correlation: `out[t] = sum_k values[k] * signal[t + k]`.
    /// The adjoint of [`Kernel::convolve`] under the standard inner product:
    /// `<convolve(x), y> = <x, correlate(y)>`.
    pub fn correlate(&self, signal: &[f64]) -> Vec<f64> {
        let n = signal.len();
        let mut out = alloc::vec![0.0; n];
        for t in 0..n {
            let kmax = self.values.len().min(n - t);
            let mut acc = 0.0;
            for k in 0..kmax {
                acc += self.values[k] * signal[t + k];
            }
            out[t] = acc;
        }
        out
    }
}

/// Samples `amplitude * (t / tau) * exp(1 - t / tau)` at t = 0, 1, 2, ...
/// stopping after the peak once |value| < 1e-6.
fn sample_alpha(tau: f64, amplitude: f64) -> Vec<f64> {
    let mut values = Vec::new();
    let mut t = 0usize;
    loop {
        let x = t as f64 / tau;
        let v = amplitude * x * math::exp(1.0 - x);
        if t as f64 > tau && math::abs(v) < TRUNCATION_EPS {
            break;
        }
        values.push(v);
        t += 1;
    }
    values
}
