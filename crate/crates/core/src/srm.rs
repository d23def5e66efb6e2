//! Spike Response Model layers.
//!
//! A neuron's membrane potential is the response-kernel convolution of its
//! weighted input spikes plus the refractory-kernel convolution of its own
//! past output. It fires whenever the potential reaches the threshold.
//! Because the refractory term only depends on spikes strictly before `t`,
//! the sweep over time resolves each step exactly once.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::event::{Geometry, SpikeTensor};
use crate::kernel::Kernel;
use crate::mat::Matrix;

/// Shared neuron dynamics for every layer of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct SrmConfig {
    pub threshold: f64,
    pub response: Kernel,
    pub refractory: Kernel,
}

impl SrmConfig {
    pub fn new(threshold: f64, response: Kernel, refractory: Kernel) -> Result<Self, CoreError> {
        if !(threshold > 0.0) || !threshold.is_finite() {
            return Err(CoreError::InvalidConfig("threshold must be positive and finite"));
        }
        if refractory.values().iter().any(|&v| v > 0.0) {
            return Err(CoreError::InvalidConfig("refractory kernel must be non-positive"));
        }
        Ok(SrmConfig {
            threshold,
            response,
            refractory,
        })
    }

    /// Threshold 1.25 with both kernel time constants at 5 simulation steps.
    pub fn default_for_step() -> SrmConfig {
        let threshold = 1.25;
        SrmConfig {
            threshold,
            response: Kernel::response(5.0).expect("fixed tau is valid"),
            refractory: Kernel::refractory(5.0, threshold).expect("fixed tau is valid"),
        }
    }
}

/// Per-layer record of a forward pass: membrane potentials and the emitted
/// spike trains, both indexed `[neuron][step]`.
#[derive(Debug, Clone)]
pub struct LayerTrace {
    /// Membrane potential at each step, refractory contribution included.
    pub membrane: Matrix,
    pub output: SpikeTensor,
}

/// Fully connected spiking layer: `n_out` neurons, each weighing all
/// `n_in` input channels.
#[derive(Debug, Clone, PartialEq)]
pub struct SrmLayer {
    /// `n_out x n_in`.
    pub weights: Matrix,
}

impl SrmLayer {
    pub fn new(weights: Matrix) -> SrmLayer {
        SrmLayer { weights }
    }

    pub fn n_in(&self) -> usize {
        self.weights.cols()
    }

    pub fn n_out(&self) -> usize {
        self.weights.rows()
    }

    /// Runs the layer over all steps of `input`.
    ///
    /// The input contribution for neuron `n` is the response-kernel
    /// convolution of its summed weighted input train
    /// `c_n(t) = sum_i w[n][i] * s_i(t)`; summing before convolving is exact
    /// because convolution is linear in the signal.
    pub fn forward(&self, input: &SpikeTensor, config: &SrmConfig) -> Result<LayerTrace, CoreError> {
        if input.channel_count() != self.n_in() {
            return Err(CoreError::ShapeMismatch {
                context: "layer input channels",
                expected: self.n_in(),
                got: input.channel_count(),
            });
        }
        let n_steps = input.n_bins();
        let mut membrane = Matrix::zeros(self.n_out(), n_steps);
        let mut output = SpikeTensor::zeros(self.n_out(), n_steps, input.bin_width_us());
        let mut current = vec![0.0; n_steps];
        for n in 0..self.n_out() {
            current.iter_mut().for_each(|c| *c = 0.0);
            let w_row = self.weights.row(n);
            for i in 0..self.n_in() {
                let w = w_row[i];
                if w == 0.0 {
                    continue;
                }
                for t in input.spikes_in(i) {
                    current[t] += w;
                }
            }
            let drive = config.response.convolve(&current);
            sweep_neuron(&drive, config, membrane.row_mut(n), |t| {
                output.set(n, t, true);
            });
        }
        Ok(LayerTrace { membrane, output })
    }
}

/// Resolves one neuron's spikes step by step. `drive[t]` is the input-side
/// potential; the refractory feedback of each emitted spike is added to
/// later steps before they are visited, so a spike at `t` influences
/// `t + 1` onward but never its own step.
pub(crate) fn sweep_neuron<F: FnMut(usize)>(
    drive: &[f64],
    config: &SrmConfig,
    membrane: &mut [f64],
    mut on_spike: F,
) {
    let n_steps = drive.len();
    membrane.copy_from_slice(drive);
    let refr = config.refractory.values();
    for t in 0..n_steps {
        if membrane[t] >= config.threshold {
            on_spike(t);
            let kmax = refr.len().min(n_steps - t);
            for k in 1..kmax {
                membrane[t + k] += refr[k];
            }
        }
    }
}

/// Non-learned spatial downsampler for pixel-addressed inputs. Each output
/// channel covers a `kernel x kernel` field advanced by `stride` within its
/// polarity plane; its drive at step `t` is `gain` times the number of field
/// pixels spiking at `t`, and spikes are resolved with the same threshold
/// and refractory dynamics as a dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolLayer {
    pub kernel: u32,
    pub stride: u32,
    pub gain: f64,
}

/// Output cells along one axis: full windows only, but never fewer than one
/// (a window clipped to the extent) so tiny inputs still map somewhere.
fn pooled_extent(extent: u32, kernel: u32, stride: u32) -> u32 {
    if extent < kernel {
        return 1;
    }
    (extent - kernel) / stride + 1
}

impl PoolLayer {
    pub fn new(kernel: u32, stride: u32, gain: f64) -> Result<PoolLayer, CoreError> {
        if kernel == 0 || stride == 0 {
            return Err(CoreError::InvalidConfig("pool kernel and stride must be positive"));
        }
        if !(gain > 0.0) || !gain.is_finite() {
            return Err(CoreError::InvalidConfig("pool gain must be positive and finite"));
        }
        Ok(PoolLayer { kernel, stride, gain })
    }

    /// Geometry of the pooled output for a given input geometry.
    pub fn pooled_geometry(&self, input: &Geometry) -> Geometry {
        Geometry {
            width: pooled_extent(input.width, self.kernel, self.stride),
            height: pooled_extent(input.height, self.kernel, self.stride),
            polarities: input.polarities,
        }
    }

    pub fn n_out(&self, input: &Geometry) -> usize {
        self.pooled_geometry(input).channel_count() as usize
    }

    /// Input channels covered by pooled output channel `out_ch`.
    pub(crate) fn field_channels(&self, input: &Geometry, out_ch: u32) -> Vec<u32> {
        let out_geom = self.pooled_geometry(input);
        let (ox, oy, p) = out_geom
            .decompose(out_ch)
            .expect("out_ch below pooled channel count");
        let x0 = ox * self.stride;
        let y0 = oy * self.stride;
        let mut field = Vec::new();
        for dy in 0..self.kernel {
            for dx in 0..self.kernel {
                let (x, y) = (x0 + dx, y0 + dy);
                if x < input.width && y < input.height {
                    field.push(
                        input
                            .channel_index(x, y, p)
                            .expect("field coordinates within input"),
                    );
                }
            }
        }
        field
    }

    /// Runs the pool layer; `input` must carry pixel geometry.
    pub fn forward(&self, input: &SpikeTensor, config: &SrmConfig) -> Result<LayerTrace, CoreError> {
        let geom = *input.geometry().ok_or(CoreError::MissingGeometry)?;
        if geom.channel_count() as usize != input.channel_count() {
            return Err(CoreError::ShapeMismatch {
                context: "pool input geometry",
                expected: geom.channel_count() as usize,
                got: input.channel_count(),
            });
        }
        let out_geom = self.pooled_geometry(&geom);
        let n_out = out_geom.channel_count() as usize;
        let n_steps = input.n_bins();
        let mut membrane = Matrix::zeros(n_out, n_steps);
        let mut output =
            SpikeTensor::zeros(n_out, n_steps, input.bin_width_us()).with_geometry(out_geom);
        let mut current = vec![0.0; n_steps];
        for n in 0..n_out {
            current.iter_mut().for_each(|c| *c = 0.0);
            for ch in self.field_channels(&geom, n as u32) {
                for t in input.spikes_in(ch as usize) {
                    current[t] += self.gain;
                }
            }
            let drive = config.response.convolve(&current);
            sweep_neuron(&drive, config, membrane.row_mut(n), |t| {
                output.set(n, t, true);
            });
        }
        Ok(LayerTrace { membrane, output })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{bin_events, Event, EventStream, Modality, Polarity};

    fn config_with(threshold: f64) -> SrmConfig {
        SrmConfig::new(
            threshold,
            Kernel::response(5.0).unwrap(),
            Kernel::refractory(5.0, threshold).unwrap(),
        )
        .unwrap()
    }

    fn single_spike_input(n_bins: usize, spike_at: usize) -> SpikeTensor {
        let mut t = SpikeTensor::zeros(1, n_bins, 1_000);
        t.set(0, spike_at, true);
        t
    }

    /// Scalar reference: resolves one neuron by recomputing the full
    /// convolution sums at every step, nothing shared with the sweep.
    fn oracle_neuron(
        weighted_input: &[f64],
        response: &[f64],
        refractory: &[f64],
        threshold: f64,
    ) -> (Vec<f64>, Vec<bool>) {
        let n = weighted_input.len();
        let mut spikes = alloc::vec![false; n];
        let mut membrane = alloc::vec![0.0; n];
        for t in 0..n {
            let mut u = 0.0;
            for k in 0..response.len().min(t + 1) {
                u += response[k] * weighted_input[t - k];
            }
            for k in 1..refractory.len().min(t + 1) {
                if spikes[t - k] {
                    u += refractory[k];
                }
            }
            membrane[t] = u;
            if u >= threshold {
                spikes[t] = true;
            }
        }
        (membrane, spikes)
    }

    #[test]
    fn sub_threshold_membrane_is_scaled_kernel() {
        // one input spike at t = 10 through weight 0.5 with a huge threshold:
        // no output spikes, membrane equals 0.5 * response shifted by 10
        let cfg = config_with(100.0);
        let layer = SrmLayer::new(Matrix::from_vec(1, 1, alloc::vec![0.5]));
        let input = single_spike_input(120, 10);
        let trace = layer.forward(&input, &cfg).unwrap();
        assert_eq!(trace.output.total_spikes(), 0);
        let resp = cfg.response.values();
        for t in 0..120 {
            let expect = if t >= 10 && t - 10 < resp.len() {
                0.5 * resp[t - 10]
            } else {
                0.0
            };
            assert!((trace.membrane.get(0, t) - expect).abs() < 1e-12, "step {t}");
        }
    }

    #[test]
    fn strong_spike_triggers_and_refractory_suppresses() {
        // weight 2 drives the membrane to 2 * peak = 2 x unit kernel; with
        // threshold 1.25 the neuron fires on the rising flank, and the
        // refractory pull keeps it from firing at every subsequent step
        let cfg = config_with(1.25);
        let layer = SrmLayer::new(Matrix::from_vec(1, 1, alloc::vec![2.0]));
        let input = single_spike_input(60, 0);
        let trace = layer.forward(&input, &cfg).unwrap();
        let n_spikes = trace.output.count(0);
        assert!(n_spikes >= 1, "must fire at least once");
        // without refractory feedback every step with 2*eps >= 1.25 would fire
        let above: u32 = (0..60)
            .filter(|&t| {
                let resp = cfg.response.values();
                t < resp.len() && 2.0 * resp[t] >= 1.25
            })
            .count() as u32;
        assert!(n_spikes < above, "refractory must suppress some steps");
    }

    #[test]
    fn forward_matches_scalar_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let cfg = config_with(1.25);
        let n_in = 6;
        let n_steps = 80;
        // random weights and random input spikes
        let w: Vec<f64> = (0..2 * n_in).map(|_| rng.gen_range(-0.8..1.6)).collect();
        let layer = SrmLayer::new(Matrix::from_vec(2, n_in, w.clone()));
        let mut input = SpikeTensor::zeros(n_in, n_steps, 1_000);
        for ch in 0..n_in {
            for t in 0..n_steps {
                if rng.gen_bool(0.15) {
                    input.set(ch, t, true);
                }
            }
        }
        let trace = layer.forward(&input, &cfg).unwrap();
        for n in 0..2 {
            let mut weighted = alloc::vec![0.0; n_steps];
            for ch in 0..n_in {
                for t in 0..n_steps {
                    if input.get(ch, t) {
                        weighted[t] += w[n * n_in + ch];
                    }
                }
            }
            let (membrane, spikes) = oracle_neuron(
                &weighted,
                cfg.response.values(),
                cfg.refractory.values(),
                cfg.threshold,
            );
            for t in 0..n_steps {
                assert!(
                    (trace.membrane.get(n, t) - membrane[t]).abs() < 1e-9,
                    "membrane neuron {n} step {t}: {} vs {}",
                    trace.membrane.get(n, t),
                    membrane[t]
                );
                assert_eq!(trace.output.get(n, t), spikes[t], "spike neuron {n} step {t}");
            }
        }
    }

    #[test]
    fn rejects_shape_mismatch() {
        let cfg = config_with(1.25);
        let layer = SrmLayer::new(Matrix::zeros(3, 4));
        let input = SpikeTensor::zeros(5, 10, 1_000);
        assert!(matches!(
            layer.forward(&input, &cfg),
            Err(CoreError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn pool_dims_drop_partial_windows() {
        let pool = PoolLayer::new(4, 4, 1.1).unwrap();
        let g = Geometry::new(200, 250, 2).unwrap();
        let out = pool.pooled_geometry(&g);
        assert_eq!((out.width, out.height, out.polarities), (50, 62, 2));
        assert_eq!(pool.n_out(&g), 6_200);
    }

    #[test]
    fn pool_degenerate_extent_clamps_to_one() {
        let pool = PoolLayer::new(4, 4, 1.1).unwrap();
        let g = Geometry::new(3, 9, 1).unwrap();
        let out = pool.pooled_geometry(&g);
        assert_eq!((out.width, out.height), (1, 2));
        // the single column window is truncated to the 3 existing pixels
        let field = pool.field_channels(&g, 0);
        assert_eq!(field.len(), 3 * 4);
    }

    #[test]
    fn pool_counts_field_spikes() {
        // 8x4 single polarity, 2x2 pooling stride 2 -> 4x2 output
        let g = Geometry::new(8, 4, 1).unwrap();
        let pool = PoolLayer::new(2, 2, 0.7).unwrap();
        let out_geom = pool.pooled_geometry(&g);
        assert_eq!((out_geom.width, out_geom.height), (4, 2));
        // all four pixels of output cell (1, 0) spike at t = 0; with
        // threshold below 4 * 0.7 * peak the cell fires
        let mut events = Vec::new();
        for (x, y) in [(2, 0), (3, 0), (2, 1), (3, 1)] {
            events.push(Event {
                timestamp_us: 0,
                channel: g.channel_index(x, y, 0).unwrap(),
                polarity: Polarity::Positive,
            });
        }
        events.sort_by_key(|e| e.channel);
        let stream = EventStream::new(events, g.channel_count(), Modality::Vision, Some(g)).unwrap();
        let input = bin_events(&stream, 1_000, 30, 1).unwrap();
        let cfg = config_with(2.0);
        let trace = pool.forward(&input, &cfg).unwrap();
        // drive peaks at 4 * 0.7 = 2.8 >= 2.0 for cell (1, 0); all other cells silent
        let hot = out_geom.channel_index(1, 0, 0).unwrap() as usize;
        assert!(trace.output.count(hot) >= 1);
        for ch in 0..pool.n_out(&g) {
            if ch != hot {
                assert_eq!(trace.output.count(ch), 0, "cell {ch} should stay silent");
            }
        }
        // pooled tensor carries pooled geometry
        assert_eq!(trace.output.geometry(), Some(&out_geom));
    }

    #[test]
    fn pool_requires_geometry() {
        let pool = PoolLayer::new(2, 2, 1.0).unwrap();
        let input = SpikeTensor::zeros(16, 10, 1_000);
        assert!(matches!(
            pool.forward(&input, &config_with(1.0)),
            Err(CoreError::MissingGeometry)
        ));
    }

    #[test]
    fn refractory_kernel_must_be_non_positive() {
        let bad = Kernel::from_samples(alloc::vec![0.0, 0.5]).unwrap();
        assert!(SrmConfig::new(1.0, Kernel::response(5.0).unwrap(), bad).is_err());
    }
}
