//! Forward-pass latency benchmark.
//!
//! The harness runs one forward pass per sample, strictly serially, and
//! reports the whole-run wall time divided by the total number of
//! simulation steps. In realtime-simulation mode a fixed fetch delay is
//! slept before every sample to mimic paced arrival of sensor windows; the
//! delay is inside the per-sample wall measurement (so per-sample wall is
//! bounded below by the delay) and inside the whole-run wall, but the
//! per-sample forward compute time is also tracked separately.

use std::time::{Duration, Instant};

use evsnn_core::{Network, TensorSample};

use crate::error::{AppError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMode {
    /// Samples stream back to back.
    Offline,
    /// A fetch delay is slept before each sample's forward pass.
    RealtimeSimulation,
}

impl std::str::FromStr for BenchMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "offline" => Ok(BenchMode::Offline),
            "realtime" => Ok(BenchMode::RealtimeSimulation),
            other => Err(format!("unknown mode {other:?}, expected offline or realtime")),
        }
    }
}

impl std::fmt::Display for BenchMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BenchMode::Offline => "offline",
            BenchMode::RealtimeSimulation => "realtime",
        })
    }
}

/// Workload contract: how many samples, how many simulation steps each,
/// and the realtime fetch delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchProtocol {
    pub n_samples: usize,
    pub n_steps: usize,
    pub fetch_delay: Duration,
}

impl Default for BenchProtocol {
    fn default() -> Self {
        BenchProtocol {
            n_samples: 1_000,
            n_steps: 150,
            fetch_delay: Duration::from_millis(150),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchReport {
    pub mode: BenchMode,
    pub n_samples: usize,
    pub n_steps: usize,
    /// Whole-run wall time, first fetch to last forward.
    pub wall: Duration,
    /// `wall / (n_samples * n_steps)`, in microseconds.
    pub latency_us_per_step: f64,
    /// Smallest single-sample wall time (fetch delay included).
    pub min_sample_wall: Duration,
    /// Forward-pass compute time summed over samples (delays excluded).
    pub compute: Duration,
}

impl BenchReport {
    /// The headline figure: whole-run wall time over total steps.
    pub fn latency_us(wall: Duration, n_samples: usize, n_steps: usize) -> f64 {
        wall.as_secs_f64() * 1e6 / (n_samples as f64 * n_steps as f64)
    }

    pub fn csv_header() -> &'static str {
        "mode,n_samples,n_steps,wall_s,latency_us_per_step,min_sample_wall_s,compute_s"
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.mode,
            self.n_samples,
            self.n_steps,
            self.wall.as_secs_f64(),
            self.latency_us_per_step,
            self.min_sample_wall.as_secs_f64(),
            self.compute.as_secs_f64()
        )
    }

    pub fn summary(&self) -> String {
        format!(
            "{} benchmark: {} samples x {} steps in {:.3} s -> {:.2} us/step \
             (min sample wall {:.4} s, forward compute {:.3} s)",
            self.mode,
            self.n_samples,
            self.n_steps,
            self.wall.as_secs_f64(),
            self.latency_us_per_step,
            self.min_sample_wall.as_secs_f64(),
            self.compute.as_secs_f64()
        )
    }
}

/// Runs the benchmark. The dataset must match the protocol exactly: as
/// many samples as declared, each tensor spanning the declared step count.
pub fn bench(net: &Network, samples: &[TensorSample], protocol: &BenchProtocol, mode: BenchMode) -> Result<BenchReport> {
    if protocol.n_samples == 0 || protocol.n_steps == 0 {
        return Err(AppError::Config("benchmark needs at least one sample and one step".into()));
    }
    if samples.len() != protocol.n_samples {
        return Err(AppError::Config(format!(
            "benchmark protocol declares {} samples but the dataset has {}",
            protocol.n_samples,
            samples.len()
        )));
    }
    for (i, s) in samples.iter().enumerate() {
        for t in &s.inputs {
            if t.n_bins() != protocol.n_steps {
                return Err(AppError::Config(format!(
                    "sample {i} spans {} steps but the protocol declares {}",
                    t.n_bins(),
                    protocol.n_steps
                )));
            }
        }
    }

    let mut min_sample_wall = Duration::MAX;
    let mut compute = Duration::ZERO;
    let run_start = Instant::now();
    for s in samples {
        let sample_start = Instant::now();
        if mode == BenchMode::RealtimeSimulation {
            std::thread::sleep(protocol.fetch_delay);
        }
        let forward_start = Instant::now();
        let trace = net.forward(&s.inputs)?;
        compute += forward_start.elapsed();
        // The trace must not be optimized away; fold a value into a sink.
        std::hint::black_box(trace.output().total_spikes());
        min_sample_wall = min_sample_wall.min(sample_start.elapsed());
    }
    let wall = run_start.elapsed();

    Ok(BenchReport {
        mode,
        n_samples: protocol.n_samples,
        n_steps: protocol.n_steps,
        wall,
        latency_us_per_step: BenchReport::latency_us(wall, protocol.n_samples, protocol.n_steps),
        min_sample_wall,
        compute,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use evsnn_core::{tactile_network, SpikeTensor, SrmConfig};

    fn toy_workload(n_samples: usize, n_steps: usize) -> (Network, Vec<TensorSample>) {
        let net = tactile_network(4, 2, SrmConfig::default_for_step()).unwrap();
        let samples = (0..n_samples)
            .map(|i| {
                let mut t = SpikeTensor::zeros(4, n_steps, 1_000);
                t.set(i % 4, i % n_steps, true);
                TensorSample {
                    inputs: vec![t],
                    label: i % 2,
                }
            })
            .collect();
        (net, samples)
    }

    #[test]
    fn latency_is_wall_over_total_steps() {
        let (net, samples) = toy_workload(3, 10);
        let protocol = BenchProtocol {
            n_samples: 3,
            n_steps: 10,
            fetch_delay: Duration::from_millis(1),
        };
        let report = bench(&net, &samples, &protocol, BenchMode::Offline).unwrap();
        assert_eq!(
            report.latency_us_per_step,
            BenchReport::latency_us(report.wall, 3, 10)
        );
        assert!(report.wall >= report.compute);
    }

    #[test]
    fn realtime_lower_bounds_sample_wall() {
        let (net, samples) = toy_workload(3, 10);
        let protocol = BenchProtocol {
            n_samples: 3,
            n_steps: 10,
            fetch_delay: Duration::from_millis(20),
        };
        let report = bench(&net, &samples, &protocol, BenchMode::RealtimeSimulation).unwrap();
        assert!(report.min_sample_wall >= protocol.fetch_delay);
        // Offline has no pacing floor.
        let offline = bench(&net, &samples, &protocol, BenchMode::Offline).unwrap();
        assert!(offline.min_sample_wall < protocol.fetch_delay);
    }

    #[test]
    fn size_mismatches_are_config_errors() {
        let (net, samples) = toy_workload(3, 10);
        let protocol = BenchProtocol {
            n_samples: 4,
            n_steps: 10,
            fetch_delay: Duration::ZERO,
        };
        let err = bench(&net, &samples, &protocol, BenchMode::Offline).unwrap_err();
        assert_eq!(err.exit_code(), 6, "{err}");

        let protocol = BenchProtocol {
            n_samples: 3,
            n_steps: 11,
            fetch_delay: Duration::ZERO,
        };
        let err = bench(&net, &samples, &protocol, BenchMode::Offline).unwrap_err();
        assert!(err.to_string().contains("10 steps"), "{err}");
    }

    #[test]
    fn csv_line_matches_header_arity() {
        let (net, samples) = toy_workload(2, 5);
        let protocol = BenchProtocol {
            n_samples: 2,
            n_steps: 5,
            fetch_delay: Duration::ZERO,
        };
        let report = bench(&net, &samples, &protocol, BenchMode::Offline).unwrap();
        let fields = report.csv_line().split(',').count();
        assert_eq!(fields, BenchReport::csv_header().split(',').count());
    }
}
