//! Synthetic event streams for tests and demos.
//!
//! Each channel fires as an independent Poisson process inside an active
//! window, sampled by accumulating exponential inter-arrival gaps. Every
//! sample owns an RNG derived from (dataset seed, sample index), so a
//! sample's events do not depend on how many other samples were generated
//! before it.

use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::CoreError;
use crate::event::{Event, EventStream, Geometry, Modality, Polarity};
use crate::math;

/// Firing behaviour of one channel: silent outside `[start_us, stop_us)`,
/// Poisson at `rate_hz` inside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelActivity {
    pub rate_hz: f64,
    pub start_us: u64,
    pub stop_us: u64,
}

impl ChannelActivity {
    pub fn silent() -> ChannelActivity {
        ChannelActivity {
            rate_hz: 0.0,
            start_us: 0,
            stop_us: u64::MAX,
        }
    }

    pub fn steady(rate_hz: f64) -> ChannelActivity {
        ChannelActivity {
            rate_hz,
            start_us: 0,
            stop_us: u64::MAX,
        }
    }

    pub fn windowed(rate_hz: f64, start_us: u64, stop_us: u64) -> ChannelActivity {
        ChannelActivity {
            rate_hz,
            start_us,
            stop_us,
        }
    }
}

/// Per-channel activity of one class; index = channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProfile {
    pub channels: Vec<ChannelActivity>,
}

impl ClassProfile {
    fn validate(&self) -> Result<(), CoreError> {
        if self.channels.is_empty() {
            return Err(CoreError::InvalidConfig("class profile needs at least one channel"));
        }
        for c in &self.channels {
            if !(c.rate_hz >= 0.0) || !c.rate_hz.is_finite() {
                return Err(CoreError::InvalidConfig("channel rate must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

/// RNG for sample `index` of a dataset with the given seed. The two values
/// fill disjoint bytes of the stream key, so distinct (seed, index) pairs
/// never collide.
pub fn derive_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&index.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Draws one event stream for a class profile. Events from all channels are
/// merged into timestamp order (ties broken by channel for determinism).
pub fn sample_stream(
    profile: &ClassProfile,
    duration_us: u64,
    modality: Modality,
    geometry: Option<Geometry>,
    rng: &mut ChaCha8Rng,
) -> Result<EventStream, CoreError> {
    profile.validate()?;
    if duration_us == 0 {
        return Err(CoreError::InvalidConfig("duration must be positive"));
    }
    let mut events: Vec<Event> = Vec::new();
    for (ch, activity) in profile.channels.iter().enumerate() {
        if activity.rate_hz <= 0.0 {
            continue;
        }
        let stop = activity.stop_us.min(duration_us);
        if activity.start_us >= stop {
            continue;
        }
        let mut t = activity.start_us as f64;
        loop {
            // exponential gap in seconds -> microseconds
            let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            t += -math::ln(u) / activity.rate_hz * 1e6;
            if !(t < stop as f64) {
                break;
            }
            events.push(Event {
                timestamp_us: t as u64,
                channel: ch as u32,
                polarity: Polarity::Positive,
            });
        }
    }
    events.sort_unstable_by_key(|e| (e.timestamp_us, e.channel));
    EventStream::new(events, profile.channels.len() as u32, modality, geometry)
}

/// Generates `per_class` streams for every profile, class-major. Sample `j`
/// of class `c` uses the RNG derived from index `c * per_class + j`,
/// independent of generation order.
pub fn generate_labeled(
    profiles: &[ClassProfile],
    per_class: usize,
    duration_us: u64,
    modality: Modality,
    geometry: Option<Geometry>,
    seed: u64,
) -> Result<Vec<(EventStream, usize)>, CoreError> {
    if profiles.is_empty() {
        return Err(CoreError::InvalidConfig("need at least one class profile"));
    }
    if per_class == 0 {
        return Err(CoreError::InvalidConfig("need at least one sample per class"));
    }
    let mut out = Vec::with_capacity(profiles.len() * per_class);
    for (label, profile) in profiles.iter().enumerate() {
        for j in 0..per_class {
            let index = (label * per_class + j) as u64;
            let mut rng = derive_rng(seed, index);
            out.push((
                sample_stream(profile, duration_us, modality, geometry, &mut rng)?,
                label,
            ));
        }
    }
    Ok(out)
}

/// Classes distinguished by which channel block is active: class `c` fires
/// its own `block_channels` channels at `active_hz` for the whole window,
/// all other channels at `background_hz`.
pub fn block_rate_profiles(
    n_classes: usize,
    block_channels: usize,
    active_hz: f64,
    background_hz: f64,
) -> Vec<ClassProfile> {
    let total = n_classes * block_channels;
    (0..n_classes)
        .map(|c| {
            let channels = (0..total)
                .map(|ch| {
                    if ch / block_channels == c {
                        ChannelActivity::steady(active_hz)
                    } else if background_hz > 0.0 {
                        ChannelActivity::steady(background_hz)
                    } else {
                        ChannelActivity::silent()
                    }
                })
                .collect();
            ClassProfile { channels }
        })
        .collect()
}

/// Classes whose evidence is confined to the start: class `c`'s block fires
/// at `active_hz` only during `[0, active_until_us)`, while a shared tail of
/// `distractor_channels` fires at `distractor_hz` for the whole window
/// regardless of class. After the active window ends, nothing distinguishes
/// the classes.
pub fn early_window_profiles(
    n_classes: usize,
    block_channels: usize,
    distractor_channels: usize,
    active_hz: f64,
    distractor_hz: f64,
    active_until_us: u64,
) -> Vec<ClassProfile> {
    let total = n_classes * block_channels + distractor_channels;
    (0..n_classes)
        .map(|c| {
            let channels = (0..total)
                .map(|ch| {
                    if ch < n_classes * block_channels {
                        if ch / block_channels == c {
                            ChannelActivity::windowed(active_hz, 0, active_until_us)
                        } else {
                            ChannelActivity::silent()
                        }
                    } else {
                        ChannelActivity::steady(distractor_hz)
                    }
                })
                .collect();
            ClassProfile { channels }
        })
        .collect()
}

/// Classes distinguished by onset time: every class fires the same single
/// block of channels at `rate_hz`, but class `c` starts only at
/// `c * stagger_us`.
pub fn onset_delay_profiles(
    n_classes: usize,
    channels: usize,
    rate_hz: f64,
    stagger_us: u64,
) -> Vec<ClassProfile> {
    (0..n_classes)
        .map(|c| ClassProfile {
            channels: (0..channels)
                .map(|_| ChannelActivity::windowed(rate_hz, c as u64 * stagger_us, u64::MAX))
                .collect(),
        })
        .collect()
}
