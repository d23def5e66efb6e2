//! Event streams and their conversion to binary spike tensors.
//!
//! Raw sensor data is a time-ordered list of channel events. Training
//! consumes fixed-width binary bins instead: a bin is 1 when the channel's
//! event count inside the bin window reaches a threshold `s_min`. All
//! timestamps are integer microseconds and bin edges are computed with
//! integer arithmetic, so long windows accumulate no float drift.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;

/// Sign of an event: increase (positive) or decrease (negative) of the
/// measured quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Negative,
    Positive,
}

impl Polarity {
    /// 0 for negative, 1 for positive; the plane index used by the vision
    /// channel layout.
    #[inline]
    pub fn index(self) -> u32 {
        match self {
            Polarity::Negative => 0,
            Polarity::Positive => 1,
        }
    }

    pub fn from_index(i: u32) -> Option<Polarity> {
        match i {
            0 => Some(Polarity::Negative),
            1 => Some(Polarity::Positive),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    Tactile,
    Vision,
}

/// A single sensor event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    /// Microseconds since recording start.
    pub timestamp_us: u64,
    pub channel: u32,
    pub polarity: Polarity,
}

/// Channel layout for pixel-addressed streams.
///
/// Channels are polarity-major, then row-major:
/// `channel = ((polarity_index * height) + y) * width + x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Geometry {
    pub width: u32,
    pub height: u32,
    pub polarities: u32,
}

impl Geometry {
    pub fn new(width: u32, height: u32, polarities: u32) -> Result<Self, CoreError> {
        if width == 0 || height == 0 || polarities == 0 {
            return Err(CoreError::InvalidConfig("geometry dimensions must be positive"));
        }
        Ok(Geometry {
            width,
            height,
            polarities,
        })
    }

    #[inline]
    pub fn channel_count(&self) -> u32 {
        self.width * self.height * self.polarities
    }

    /// Flattens `(x, y, polarity_index)` to a channel index. Bijective over
    /// the declared geometry and stable across runs.
    pub fn channel_index(&self, x: u32, y: u32, polarity_index: u32) -> Result<u32, CoreError> {
        if x >= self.width || y >= self.height || polarity_index >= self.polarities {
            return Err(CoreError::CoordinateOutOfRange {
                x,
                y,
                polarity_index,
                width: self.width,
                height: self.height,
                polarities: self.polarities,
            });
        }
        Ok((polarity_index * self.height + y) * self.width + x)
    }

    /// Inverse of [`Geometry::channel_index`].
    pub fn decompose(&self, channel: u32) -> Result<(u32, u32, u32), CoreError> {
        if channel >= self.channel_count() {
            return Err(CoreError::ChannelOutOfRange {
                channel,
                channel_count: self.channel_count(),
            });
        }
        let x = channel % self.width;
        let rest = channel / self.width;
        let y = rest % self.height;
        let p = rest / self.height;
        Ok((x, y, p))
    }
}

/// Flattens a pixel coordinate to its channel index under the given layout.
pub fn vision_channel_index(
    x: u32,
    y: u32,
    polarity: Polarity,
    geometry: &Geometry,
) -> Result<u32, CoreError> {
    geometry.channel_index(x, y, polarity.index())
}

/// A validated, time-ordered event recording for one modality.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    events: Vec<Event>,
    channel_count: u32,
    modality: Modality,
    geometry: Option<Geometry>,
}

impl EventStream {
    /// Validates ordering, channel bounds, and geometry consistency.
    pub fn new(
        events: Vec<Event>,
        channel_count: u32,
        modality: Modality,
        geometry: Option<Geometry>,
    ) -> Result<Self, CoreError> {
        if channel_count == 0 {
            return Err(CoreError::InvalidConfig("channel_count must be positive"));
        }
        if let Some(g) = &geometry {
            if g.channel_count() != channel_count {
                return Err(CoreError::ShapeMismatch {
                    context: "geometry channel count",
                    expected: g.channel_count() as usize,
                    got: channel_count as usize,
                });
            }
        }
        let mut prev = 0u64;
        for (i, e) in events.iter().enumerate() {
            if e.timestamp_us < prev {
                return Err(CoreError::UnsortedEvents { index: i });
            }
            prev = e.timestamp_us;
            if e.channel >= channel_count {
                return Err(CoreError::ChannelOutOfRange {
                    channel: e.channel,
                    channel_count,
                });
            }
        }
        Ok(EventStream {
            events,
            channel_count,
            modality,
            geometry,
        })
    }

    pub fn empty(channel_count: u32, modality: Modality, geometry: Option<Geometry>) -> Self {
        EventStream::new(Vec::new(), channel_count, modality, geometry)
            .expect("empty stream is always valid")
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn channel_count(&self) -> u32 {
        self.channel_count
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn geometry(&self) -> Option<&Geometry> {
        self.geometry.as_ref()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Keeps events with `t_start_us <= timestamp < t_end_us`, re-based to
    /// `t_start_us`. Channel count and geometry are preserved.
    pub fn crop_window(&self, t_start_us: u64, t_end_us: u64) -> Result<EventStream, CoreError> {
        if t_start_us >= t_end_us {
            return Err(CoreError::InvalidWindow {
                start_us: t_start_us,
                end_us: t_end_us,
            });
        }
        let start = self.events.partition_point(|e| e.timestamp_us < t_start_us);
        let end = self.events.partition_point(|e| e.timestamp_us < t_end_us);
        let events = self.events[start..end]
            .iter()
            .map(|e| Event {
                timestamp_us: e.timestamp_us - t_start_us,
                channel: e.channel,
                polarity: e.polarity,
            })
            .collect();
        Ok(EventStream {
            events,
            channel_count: self.channel_count,
            modality: self.modality,
            geometry: self.geometry,
        })
    }

    /// ORs the polarity planes of a pixel-addressed stream: every event is
    /// remapped onto plane 0 and the geometry collapses to one polarity.
    ///
    /// Binning the merged stream with `s_min = 1` equals binning each plane
    /// separately and OR-ing the results; with `s_min > 1` the per-plane
    /// counts add before thresholding.
    pub fn merge_polarity(&self) -> Result<EventStream, CoreError> {
        let g = self.geometry.ok_or(CoreError::MissingGeometry)?;
        let plane = g.width * g.height;
        let events = self
            .events
            .iter()
            .map(|e| Event {
                timestamp_us: e.timestamp_us,
                channel: e.channel % plane,
                polarity: e.polarity,
            })
            .collect();
        Ok(EventStream {
            events,
            channel_count: plane,
            modality: self.modality,
            geometry: Some(Geometry {
                width: g.width,
                height: g.height,
                polarities: 1,
            }),
        })
    }
}

/// Binary spike data indexed `[channel][bin]`, bit-packed per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeTensor {
    channel_count: usize,
    n_bins: usize,
    bin_width_us: u64,
    geometry: Option<Geometry>,
    words_per_row: usize,
    data: Vec<u64>,
}

impl SpikeTensor {
    pub fn zeros(channel_count: usize, n_bins: usize, bin_width_us: u64) -> Self {
        let words_per_row = n_bins.div_ceil(64);
        SpikeTensor {
            channel_count,
            n_bins,
            bin_width_us,
            geometry: None,
            words_per_row,
            data: vec![0; channel_count * words_per_row],
        }
    }

    pub fn with_geometry(mut self, geometry: Geometry) -> Self {
        debug_assert_eq!(geometry.channel_count() as usize, self.channel_count);
        self.geometry = Some(geometry);
        self
    }

    #[inline]
    pub fn channel_count(&self) -> usize {
        self.channel_count
    }

    #[inline]
    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    #[inline]
    pub fn bin_width_us(&self) -> u64 {
        self.bin_width_us
    }

    /// Covered time window: `n_bins * bin_width`.
    pub fn duration_us(&self) -> u64 {
        self.n_bins as u64 * self.bin_width_us
    }

    pub fn geometry(&self) -> Option<&Geometry> {
        self.geometry.as_ref()
    }

    #[inline]
    pub fn get(&self, channel: usize, bin: usize) -> bool {
        debug_assert!(channel < self.channel_count && bin < self.n_bins);
        let w = self.data[channel * self.words_per_row + bin / 64];
        (w >> (bin % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, channel: usize, bin: usize, value: bool) {
        debug_assert!(channel < self.channel_count && bin < self.n_bins);
        let w = &mut self.data[channel * self.words_per_row + bin / 64];
        if value {
            *w |= 1 << (bin % 64);
        } else {
            *w &= !(1 << (bin % 64));
        }
    }

    /// Spike count of one channel over bins `[0, upto)`.
    pub fn count_upto(&self, channel: usize, upto: usize) -> u32 {
        let upto = upto.min(self.n_bins);
        let row = &self.data[channel * self.words_per_row..(channel + 1) * self.words_per_row];
        let full = upto / 64;
        let mut n: u32 = row[..full].iter().map(|w| w.count_ones()).sum();
        let rem = upto % 64;
        if rem > 0 {
            n += (row[full] & ((1u64 << rem) - 1)).count_ones();
        }
        n
    }

    pub fn count(&self, channel: usize) -> u32 {
        self.count_upto(channel, self.n_bins)
    }

    pub fn total_spikes(&self) -> u64 {
        self.data.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Iterates the set bin indices of one channel in increasing order.
    pub fn spikes_in(&self, channel: usize) -> impl Iterator<Item = usize> + '_ {
        let row = &self.data[channel * self.words_per_row..(channel + 1) * self.words_per_row];
        row.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            core::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let b = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }

    /// Stacks tensors along the channel axis. All parts must agree on bin
    /// count and bin width; geometry is dropped.
    pub fn concat_channels(parts: &[&SpikeTensor]) -> Result<SpikeTensor, CoreError> {
        let first = parts.first().ok_or(CoreError::InvalidConfig(
            "concat_channels needs at least one tensor",
        ))?;
        let mut out = SpikeTensor::zeros(
            parts.iter().map(|p| p.channel_count).sum(),
            first.n_bins,
            first.bin_width_us,
        );
        let mut base = 0usize;
        for p in parts {
            if p.n_bins != first.n_bins {
                return Err(CoreError::ShapeMismatch {
                    context: "concat bin count",
                    expected: first.n_bins,
                    got: p.n_bins,
                });
            }
            if p.bin_width_us != first.bin_width_us {
                return Err(CoreError::ShapeMismatch {
                    context: "concat bin width",
                    expected: first.bin_width_us as usize,
                    got: p.bin_width_us as usize,
                });
            }
            let w = p.words_per_row;
            for ch in 0..p.channel_count {
                let dst = (base + ch) * out.words_per_row;
                let src = ch * w;
                out.data[dst..dst + w].copy_from_slice(&p.data[src..src + w]);
            }
            base += p.channel_count;
        }
        Ok(out)
    }
}

/// Bins an event stream into a binary spike tensor.
///
/// For each channel and bin `w`, the output is 1 iff the channel has at
/// least `s_min` events with timestamps in the half-open window
/// `[w * bin_width, (w + 1) * bin_width)`. Events at or beyond
/// `n_bins * bin_width` are discarded.
///
/// `s_min = 0` makes every bin 1 (the count condition holds vacuously) and
/// saturates the channel; callers opting into it get a constant-on tensor.
pub fn bin_events(
    stream: &EventStream,
    bin_width_us: u64,
    n_bins: usize,
    s_min: u32,
) -> Result<SpikeTensor, CoreError> {
    if bin_width_us == 0 {
        return Err(CoreError::InvalidConfig("bin width must be positive"));
    }
    if n_bins == 0 {
        return Err(CoreError::InvalidConfig("bin count must be positive"));
    }
    let mut out = SpikeTensor::zeros(stream.channel_count() as usize, n_bins, bin_width_us);
    if let Some(g) = stream.geometry() {
        out = out.with_geometry(*g);
    }
    if s_min == 0 {
        for w in &mut out.data {
            *w = u64::MAX;
        }
        // clear padding past n_bins so counts stay exact
        let rem = n_bins % 64;
        if rem > 0 {
            let mask = (1u64 << rem) - 1;
            for ch in 0..out.channel_count {
                out.data[ch * out.words_per_row + out.words_per_row - 1] &= mask;
            }
        }
        return Ok(out);
    }
    if s_min == 1 {
        for e in stream.events() {
            let bin = (e.timestamp_us / bin_width_us) as usize;
            if bin < n_bins {
                out.set(e.channel as usize, bin, true);
            }
        }
        return Ok(out);
    }
    // s_min >= 2: count per channel inside each bin. Events are time-sorted,
    // so each bin's events form a contiguous run.
    let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
    let mut run_bin: Option<usize> = None;
    let flush =
        |bin: Option<usize>, counts: &mut BTreeMap<u32, u32>, out: &mut SpikeTensor| {
            if let Some(b) = bin {
                for (&ch, &n) in counts.iter() {
                    if n >= s_min {
                        out.set(ch as usize, b, true);
                    }
                }
            }
            counts.clear();
        };
    for e in stream.events() {
        let bin = (e.timestamp_us / bin_width_us) as usize;
        if bin >= n_bins {
            break; // sorted: everything later is out of range too
        }
        if run_bin != Some(bin) {
            flush(run_bin, &mut counts, &mut out);
            run_bin = Some(bin);
        }
        *counts.entry(e.channel).or_insert(0) += 1;
    }
    flush(run_bin, &mut counts, &mut out);
    Ok(out)
}

/// Converts a duration in seconds to integer microseconds (round to nearest).
pub fn seconds_to_us(seconds: f64) -> u64 {
    crate::math::round(seconds * 1e6) as u64
}
