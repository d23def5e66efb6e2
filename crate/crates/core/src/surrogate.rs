//! Surrogate derivative for the spike nonlinearity.
//!
//! The hard threshold has a zero-almost-everywhere derivative, so training
//! substitutes a smooth pseudo-derivative of the spike with respect to the
//! membrane potential: a symmetric exponential peaking at the threshold.
//! Steps whose potential sits far from the threshold contribute almost
//! nothing; steps near it dominate the gradient.

use crate::error::CoreError;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateConfig {
    /// Peak value at `u = threshold`.
    pub scale: f64,
    /// Decay rate per unit of distance from the threshold.
    pub sharpness: f64,
}

impl SurrogateConfig {
    pub fn new(scale: f64, sharpness: f64) -> Result<Self, CoreError> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(CoreError::InvalidConfig("surrogate scale must be positive and finite"));
        }
        if !(sharpness > 0.0) || !sharpness.is_finite() {
            return Err(CoreError::InvalidConfig(
                "surrogate sharpness must be positive and finite",
            ));
        }
        Ok(SurrogateConfig { scale, sharpness })
    }

    /// Unit peak with decay `10 / threshold`, so the pseudo-derivative falls
    /// to `e^-10` one threshold-width away.
    pub fn default_for_threshold(threshold: f64) -> Result<Self, CoreError> {
        if !(threshold > 0.0) || !threshold.is_finite() {
            return Err(CoreError::InvalidConfig("threshold must be positive and finite"));
        }
        SurrogateConfig::new(1.0, 10.0 / threshold)
    }

    /// `scale * exp(-sharpness * |u - threshold|)`.
    #[inline]
    pub fn derivative(&self, membrane: f64, threshold: f64) -> f64 {
        self.scale * math::exp(-self.sharpness * math::abs(membrane - threshold))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peaks_at_threshold_and_is_symmetric() {
        let s = SurrogateConfig::default_for_threshold(1.25).unwrap();
        assert!((s.derivative(1.25, 1.25) - 1.0).abs() < 1e-12);
        let lo = s.derivative(1.0, 1.25);
        let hi = s.derivative(1.5, 1.25);
        assert!((lo - hi).abs() < 1e-12);
        assert!(lo < 1.0);
        // monotone decay away from the peak
        assert!(s.derivative(0.5, 1.25) < s.derivative(1.0, 1.25));
        assert!(s.derivative(2.0, 1.25) < s.derivative(1.5, 1.25));
    }

    #[test]
    fn default_decay_reaches_e_minus_ten_at_unit_distance() {
        let s = SurrogateConfig::default_for_threshold(1.25).unwrap();
        let got = s.derivative(1.25 + 1.25, 1.25);
        assert!((got - (-10.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SurrogateConfig::new(0.0, 1.0).is_err());
        assert!(SurrogateConfig::new(1.0, -1.0).is_err());
        assert!(SurrogateConfig::new(f64::NAN, 1.0).is_err());
        assert!(SurrogateConfig::default_for_threshold(0.0).is_err());
    }
}
