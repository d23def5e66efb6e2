//! Error type shared by the core modules.

use core::fmt;

/// Errors produced by the core algorithms.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// A crop or bin window with `start >= end`.
    InvalidWindow { start_us: u64, end_us: u64 },
    /// An event references a channel outside the stream's declared range.
    ChannelOutOfRange { channel: u32, channel_count: u32 },
    /// Event timestamps decrease at the given index.
    UnsortedEvents { index: usize },
    /// A pixel coordinate lies outside the declared geometry.
    CoordinateOutOfRange {
        x: u32,
        y: u32,
        polarity_index: u32,
        width: u32,
        height: u32,
        polarities: u32,
    },
    /// An operation that needs a channel layout got a tensor without one.
    MissingGeometry,
    /// Tensor or layer dimensions do not line up.
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    /// A class or neuron index outside the valid range.
    IndexOutOfRange { index: usize, len: usize },
    /// A configuration value violates its invariant.
    InvalidConfig(&'static str),
    /// A quaternion is not unit-norm within tolerance.
    NonUnitQuaternion { norm: f64 },
    /// A pose series is too short for the requested baseline.
    SeriesTooShort { len: usize, baseline_len: usize },
    /// Stratified splitting needs at least `k` samples per class.
    Stratification { class: usize, count: usize, k: usize },
    /// Training produced a non-finite loss.
    Diverged { epoch: usize, batch: usize },
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::InvalidWindow { start_us, end_us } => {
                write!(f, "invalid window: start {start_us}us >= end {end_us}us")
            }
            CoreError::ChannelOutOfRange {
                channel,
                channel_count,
            } => write!(
                f,
                "channel {channel} out of range for {channel_count} channels"
            ),
            CoreError::UnsortedEvents { index } => {
                write!(f, "event timestamps decrease at index {index}")
            }
            CoreError::CoordinateOutOfRange {
                x,
                y,
                polarity_index,
                width,
                height,
                polarities,
            } => write!(
                f,
                "coordinate ({x}, {y}, p{polarity_index}) outside {width}x{height}x{polarities}"
            ),
            CoreError::MissingGeometry => write!(f, "tensor has no channel geometry"),
            CoreError::ShapeMismatch {
                context,
                expected,
                got,
            } => write!(f, "shape mismatch in {context}: expected {expected}, got {got}"),
            CoreError::IndexOutOfRange { index, len } => {
                write!(f, "index {index} out of range for length {len}")
            }
            CoreError::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            CoreError::NonUnitQuaternion { norm } => {
                write!(f, "quaternion norm {norm} is not 1 within tolerance")
            }
            CoreError::SeriesTooShort { len, baseline_len } => write!(
                f,
                "series of length {len} too short for baseline of {baseline_len} frames"
            ),
            CoreError::Stratification { class, count, k } => write!(
                f,
                "class {class} has {count} samples, fewer than {k} folds"
            ),
            CoreError::Diverged { epoch, batch } => {
                write!(f, "non-finite loss at epoch {epoch}, batch {batch}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CoreError {}
