//! Event-driven spiking neural networks: binning of raw event streams into
//! binary spike tensors, Spike Response Model simulation, surrogate-gradient
//! training under spike-count objectives, stratified evaluation, synthetic
//! data, and pose-based slip annotation.
//!
//! The crate is `no_std`-compatible (with `alloc`); the `std` feature (on by
//! default) only adds `std::error::Error` for [`CoreError`]. All floating
//! point goes through one math shim, so results are bit-identical with and
//! without `std`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod backward;
pub mod error;
pub mod eval;
pub mod event;
pub mod kernel;
pub mod loss;
pub mod mat;
mod math;
pub mod model;
pub mod network;
pub mod optim;
pub mod pose;
pub mod split;
pub mod srm;
pub mod surrogate;
pub mod synth;
pub mod train;

pub use backward::{backward, NetworkGradients};
pub use error::CoreError;
pub use eval::{
    accuracy_over_time, default_time_points, evaluate_accuracy, predict, spike_counts,
    AccuracyCurve,
};
pub use event::{
    bin_events, seconds_to_us, vision_channel_index, Event, EventStream, Geometry, Modality,
    Polarity, SpikeTensor,
};
pub use kernel::Kernel;
pub use loss::{make_target_counts, LossSpec, TargetPlacement, Weighting};
pub use mat::Matrix;
pub use model::{
    default_vision_geometry, multimodal_network, tactile_network, vision_network,
    DEFAULT_POOL_GAIN, POOL_KERNEL, POOL_STRIDE, TACTILE_CODE, TACTILE_HIDDEN, TACTILE_TAXELS,
    VISION_CODE, VISION_HIDDEN,
};
pub use network::{Branch, Layer, Network, NetworkTrace};
pub use optim::{OptimizerState, RmsPropConfig};
pub use pose::{
    annotate_slip, detect_onset, rotation_angle_between, OnsetParams, PoseFrame, PoseTrace,
    Quaternion, SlipAnnotation,
};
pub use split::{stratified_kfold, stratified_train_test, Fold};
pub use srm::{LayerTrace, PoolLayer, SrmConfig, SrmLayer};
pub use surrogate::SurrogateConfig;
pub use synth::{
    block_rate_profiles, derive_rng, early_window_profiles, generate_labeled,
    onset_delay_profiles, sample_stream, ChannelActivity, ClassProfile,
};
pub use train::{
    calibrate_activity, initialize_weights, train, EpochMetrics, TensorSample, TrainSettings,
};
