//! Root-mean-square gradient scaling with decoupled weight decay.
//!
//! Each weight keeps a running average of its squared gradient and steps by
//! the gradient normalized with that average's square root. The shrinkage
//! penalty multiplies the weight directly instead of entering the scaled
//! gradient, so one step always moves a weight toward zero by a fixed
//! fraction plus a bounded gradient move — regardless of the accumulator
//! state.

use alloc::vec::Vec;

use crate::backward::NetworkGradients;
use crate::error::CoreError;
use crate::mat::Matrix;
use crate::math;
use crate::network::Network;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmsPropConfig {
    pub learning_rate: f64,
    /// Forgetting factor of the squared-gradient average.
    pub decay: f64,
    /// Numerical floor inside the denominator.
    pub epsilon: f64,
    /// Decoupled shrinkage: each step multiplies weights by
    /// `1 - learning_rate * l2`.
    pub l2: f64,
}

impl Default for RmsPropConfig {
    fn default() -> Self {
        RmsPropConfig {
            learning_rate: 1e-3,
            decay: 0.99,
            epsilon: 1e-8,
            l2: 1e-4,
        }
    }
}

impl RmsPropConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(CoreError::InvalidConfig("learning rate must be finite and >= 0"));
        }
        if !(0.0..1.0).contains(&self.decay) {
            return Err(CoreError::InvalidConfig("decay must lie in [0, 1)"));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(CoreError::InvalidConfig("epsilon must be positive and finite"));
        }
        if !(self.l2 >= 0.0) || self.l2 * self.learning_rate >= 1.0 {
            return Err(CoreError::InvalidConfig(
                "l2 must be >= 0 and small enough that lr * l2 < 1",
            ));
        }
        Ok(())
    }
}

/// Per-weight squared-gradient accumulators, one matrix per trainable layer
/// in canonical network order.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    config: RmsPropConfig,
    v: Vec<Matrix>,
}

impl OptimizerState {
    pub fn new(net: &Network, config: RmsPropConfig) -> Result<OptimizerState, CoreError> {
        config.validate()?;
        let mut v = Vec::new();
        net.visit_weights(|w| v.push(Matrix::zeros(w.rows(), w.cols())));
        Ok(OptimizerState { config, v })
    }

    pub fn config(&self) -> &RmsPropConfig {
        &self.config
    }

    /// Applies one update in place:
    ///
    /// ```text
    /// v <- decay * v + (1 - decay) * g^2
    /// w <- w * (1 - lr * l2) - lr * g / (sqrt(v) + epsilon)
    /// ```
    pub fn step(&mut self, net: &mut Network, grads: &NetworkGradients) -> Result<(), CoreError> {
        let grad_mats: Vec<&Matrix> = grads
            .branches
            .iter()
            .flatten()
            .chain(grads.head.iter())
            .flatten()
            .collect();
        if grad_mats.len() != self.v.len() {
            return Err(CoreError::ShapeMismatch {
                context: "optimizer gradient slots",
                expected: self.v.len(),
                got: grad_mats.len(),
            });
        }
        let cfg = self.config;
        let shrink = 1.0 - cfg.learning_rate * cfg.l2;
        let mut slot = 0usize;
        let v = &mut self.v;
        let mut status = Ok(());
        net.visit_weights_mut(|w| {
            if status.is_err() {
                return;
            }
            let g = grad_mats[slot];
            let acc = &mut v[slot];
            slot += 1;
            if g.rows() != w.rows() || g.cols() != w.cols() {
                status = Err(CoreError::ShapeMismatch {
                    context: "optimizer weight slot",
                    expected: w.rows() * w.cols(),
                    got: g.rows() * g.cols(),
                });
                return;
            }
            let wd = w.data_mut();
            let gd = g.data();
            let vd = acc.data_mut();
            for j in 0..wd.len() {
                let gj = gd[j];
                vd[j] = cfg.decay * vd[j] + (1.0 - cfg.decay) * gj * gj;
                wd[j] = wd[j] * shrink - cfg.learning_rate * gj / (math::sqrt(vd[j]) + cfg.epsilon);
            }
        });
        status
    }
}
