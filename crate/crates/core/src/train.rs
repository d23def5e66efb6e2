//! Mini-batch training of spiking networks.
//!
//! One call owns the full schedule: seeded weight initialization, an
//! activity calibration pass that rescues silent layers, then epochs of
//! sequential mini-batches with gradients averaged per batch. Everything is
//! deterministic given the seed — samples are visited in a seeded shuffle
//! order and batches are processed one after another.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::backward::{backward, NetworkGradients};
use crate::error::CoreError;
use crate::eval::predict;
use crate::event::SpikeTensor;
use crate::loss::LossSpec;
use crate::math;
use crate::network::Network;
use crate::optim::{OptimizerState, RmsPropConfig};
use crate::surrogate::SurrogateConfig;

/// One binned training or evaluation sample: one spike tensor per network
/// branch, in branch order, plus the class label.
#[derive(Debug, Clone)]
pub struct TensorSample {
    pub inputs: Vec<SpikeTensor>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: RmsPropConfig,
    pub seed: u64,
    /// Reshuffle the sample order each epoch (seeded, reproducible).
    pub shuffle: bool,
    /// Upper bound on weight doublings per layer during calibration.
    pub max_calibration_doublings: u32,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            epochs: 50,
            batch_size: 8,
            optimizer: RmsPropConfig::default(),
            seed: 0,
            shuffle: true,
            max_calibration_doublings: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean per-sample loss over the epoch.
    pub train_loss: f64,
    /// Fraction of training samples classified correctly at the moment they
    /// were visited (before that batch's update).
    pub train_accuracy: f64,
    /// Accuracy on the held-out set after the epoch's updates, when a
    /// held-out set was supplied.
    pub test_accuracy: Option<f64>,
}

/// Draws every dense layer's weights uniformly from `[-a, a]` with
/// `a = 4 / sqrt(fan_in)`, visiting layers in canonical order so the random
/// stream — and therefore the network — is reproducible from the seed.
pub fn initialize_weights<R: Rng>(net: &mut Network, rng: &mut R) {
    net.visit_weights_mut(|w| {
        let a = 4.0 / math::sqrt(w.cols() as f64);
        for v in w.data_mut() {
            *v = rng.gen_range(-a..a);
        }
    });
}

/// Doubles the weights of any dense layer that stays completely silent on
/// the probe samples, layer by layer in canonical order, up to
/// `max_doublings` times per layer. Returns the total number of doublings.
///
/// A layer that is still silent after the cap is left as-is: downstream
/// layers will see no input and training starts from a flat loss, but that
/// is a property of the configuration, not an error.
pub fn calibrate_activity(
    net: &mut Network,
    probes: &[TensorSample],
    max_doublings: u32,
) -> Result<u32, CoreError> {
    if probes.is_empty() {
        return Ok(0);
    }
    let mut total = 0u32;
    let branch_layer_counts: Vec<usize> = net.branches.iter().map(|b| b.layers.len()).collect();
    for (b, &n_layers) in branch_layer_counts.iter().enumerate() {
        for j in 0..n_layers {
            if net.branches[b].layers[j].weights().is_none() {
                continue;
            }
            for _ in 0..max_doublings {
                let mut silent = true;
                for s in probes {
                    let trace = net.forward(&s.inputs)?;
                    if trace.branch_traces[b][j].output.total_spikes() > 0 {
                        silent = false;
                        break;
                    }
                }
                if !silent {
                    break;
                }
                if let Some(w) = net.branches[b].layers[j].weights_mut() {
                    w.scale(2.0);
                }
                total += 1;
            }
        }
    }
    let n_head = net.head.len();
    for j in 0..n_head {
        if net.head[j].weights().is_none() {
            continue;
        }
        for _ in 0..max_doublings {
            let mut silent = true;
            for s in probes {
                let trace = net.forward(&s.inputs)?;
                if trace.head_traces[j].output.total_spikes() > 0 {
                    silent = false;
                    break;
                }
            }
            if !silent {
                break;
            }
            if let Some(w) = net.head[j].weights_mut() {
                w.scale(2.0);
            }
            total += 1;
        }
    }
    Ok(total)
}

fn check_finite_weights(net: &Network) -> bool {
    let mut finite = true;
    net.visit_weights(|w| finite &= w.data().iter().all(|v| v.is_finite()));
    finite
}

/// Trains `net` in place and reports one metrics row per epoch.
///
/// The network's existing weights are discarded: training starts from a
/// fresh seeded initialization followed by activity calibration on the
/// first (up to) eight samples. Returns an error if the loss or any weight
/// stops being finite, naming the epoch and batch where it happened.
pub fn train(
    net: &mut Network,
    train_set: &[TensorSample],
    held_out: Option<&[TensorSample]>,
    spec: &LossSpec,
    surrogate: &SurrogateConfig,
    settings: &TrainSettings,
) -> Result<Vec<EpochMetrics>, CoreError> {
    if train_set.is_empty() {
        return Err(CoreError::InvalidConfig("training set must not be empty"));
    }
    if settings.batch_size == 0 {
        return Err(CoreError::InvalidConfig("batch size must be positive"));
    }
    settings.optimizer.validate()?;
    if let Some(n_classes) = net.output_channels() {
        for s in train_set.iter().chain(held_out.into_iter().flatten()) {
            if s.label >= n_classes {
                return Err(CoreError::IndexOutOfRange {
                    index: s.label,
                    len: n_classes,
                });
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    initialize_weights(net, &mut rng);
    let probe_len = train_set.len().min(8);
    calibrate_activity(net, &train_set[..probe_len], settings.max_calibration_doublings)?;

    let mut opt = OptimizerState::new(net, settings.optimizer)?;
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut metrics = Vec::with_capacity(settings.epochs);
    for epoch in 0..settings.epochs {
        if settings.shuffle {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss = 0.0;
        let mut correct = 0usize;
        for (batch_idx, batch) in order.chunks(settings.batch_size).enumerate() {
            let mut acc = NetworkGradients::zeros_like(net);
            for &idx in batch {
                let sample = &train_set[idx];
                let trace = net.forward(&sample.inputs)?;
                let output = trace.output();
                let (loss, residuals) = spec.loss_and_residuals(output, sample.label)?;
                if !loss.is_finite() {
                    return Err(CoreError::Diverged {
                        epoch,
                        batch: batch_idx,
                    });
                }
                epoch_loss += loss;
                if predict(output, output.n_bins()) == sample.label {
                    correct += 1;
                }
                let g = backward(net, &sample.inputs, &trace, &residuals, spec, surrogate)?;
                acc.add_scaled(&g, 1.0);
            }
            acc.scale(1.0 / batch.len() as f64);
            if !acc.is_finite() {
                return Err(CoreError::Diverged {
                    epoch,
                    batch: batch_idx,
                });
            }
            opt.step(net, &acc)?;
        }
        if !check_finite_weights(net) {
            return Err(CoreError::Diverged {
                epoch,
                batch: order.len().div_ceil(settings.batch_size).saturating_sub(1),
            });
        }
        let test_accuracy = match held_out {
            Some(samples) => Some(crate::eval::evaluate_accuracy(net, samples)?),
            None => None,
        };
        metrics.push(EpochMetrics {
            epoch,
            train_loss: epoch_loss / train_set.len() as f64,
            train_accuracy: correct as f64 / train_set.len() as f64,
            test_accuracy,
        });
    }
    Ok(metrics)
}
