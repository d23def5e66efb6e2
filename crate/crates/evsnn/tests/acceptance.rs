//! Acceptance gate: one test per release criterion, each printing a
//! single PASS line with its measured margin (visible with
//! `cargo test --test acceptance -- --nocapture`). A failed assertion is
//! the FAIL line. Criterion 8 depends on externally recorded datasets and
//! is ignored by default; see its doc comment.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use evsnn_core::{
    accuracy_over_time, bin_events, block_rate_profiles, derive_rng, early_window_profiles,
    evaluate_accuracy, generate_labeled, rotation_angle_between, stratified_train_test,
    tactile_network, train, Event, EventStream, LossSpec, Modality, Network, OnsetParams,
    Polarity, Quaternion, RmsPropConfig, SpikeTensor, SrmConfig, SurrogateConfig, TensorSample,
    TrainSettings,
};

use evsnn::bench::{bench, BenchMode, BenchProtocol, BenchReport};

// ---------------------------------------------------------------------------
// criterion 1: with a constant weight profile, the time-weighted loss
// collapses to the plain spike-count loss (exactly for weight 1, scaled by
// c^2 within 1e-12 relative for weight c)
// ---------------------------------------------------------------------------

fn random_output(rng: &mut ChaCha8Rng, neurons: usize, horizon: usize) -> SpikeTensor {
    let mut t = SpikeTensor::zeros(neurons, horizon, 1_000);
    let density: f64 = rng.gen_range(0.02..0.4);
    for n in 0..neurons {
        for b in 0..horizon {
            if rng.gen_bool(density) {
                t.set(n, b, true);
            }
        }
    }
    t
}

#[test]
fn criterion_1_loss_reduction_identity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut max_rel = 0.0f64;
    for _ in 0..1_000 {
        let neurons = rng.gen_range(2..8);
        let horizon = rng.gen_range(30..200);
        let output = random_output(&mut rng, neurons, horizon);
        let label = rng.gen_range(0..neurons);
        let true_count = rng.gen_range(5..horizon as u32 / 2 + 5);
        let false_count = rng.gen_range(0..true_count);

        let uniform = LossSpec::uniform(true_count, false_count).unwrap();
        let (l_uniform, _) = uniform.loss_and_residuals(&output, label).unwrap();

        // Constant profile at 1: must agree exactly (all terms are
        // integer-valued in f64).
        let unit = LossSpec::quadratic(0.0, 1.0, true_count, false_count, horizon).unwrap();
        let (l_unit, _) = unit.loss_and_residuals(&output, label).unwrap();
        assert_eq!(
            l_unit, l_uniform,
            "constant weight 1 must reproduce the count loss exactly"
        );

        // Constant profile at c: scales the loss by c^2 within rounding.
        let c: f64 = rng.gen_range(0.1..10.0);
        let scaled = LossSpec::quadratic(0.0, c, true_count, false_count, horizon).unwrap();
        let (l_scaled, _) = scaled.loss_and_residuals(&output, label).unwrap();
        let expected = c * c * l_uniform;
        if expected != 0.0 {
            let rel = ((l_scaled - expected) / expected).abs();
            max_rel = max_rel.max(rel);
            assert!(rel < 1e-12, "c={c}: loss {l_scaled} vs expected {expected} (rel {rel:e})");
        } else {
            assert_eq!(l_scaled, 0.0);
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:.2?}, budget 1 s");
    println!("criterion 1 (loss reduction identity): PASS — 1000 pairs, max rel dev {max_rel:.2e}, {elapsed:.2?}");
}

// ---------------------------------------------------------------------------
// criterion 2: below threshold the membrane is linear in the weights; its
// gradient matches central finite differences to < 1e-6 relative on 100
// random single-neuron configurations
// ---------------------------------------------------------------------------

/// Response kernel value from the closed form, independent of the library's
/// sampling code. Valid while the horizon stays inside the kernel support.
fn alpha_raw(k: usize, tau: f64) -> f64 {
    let t = k as f64;
    (t / tau) * (1.0 - t / tau).exp()
}

#[test]
fn criterion_2_subthreshold_membrane_gradient() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut max_rel = 0.0f64;
    for config_idx in 0..100 {
        let n_inputs = rng.gen_range(2..6);
        let horizon = rng.gen_range(30..50);
        let tau: f64 = rng.gen_range(5.0..8.0);
        // Keep every membrane value far below threshold: the neuron never
        // spikes, so no refractory term enters and u is linear in w.
        let threshold = 1e9;
        let config = SrmConfig::new(
            threshold,
            evsnn_core::Kernel::response(tau).unwrap(),
            evsnn_core::Kernel::refractory(tau, threshold).unwrap(),
        )
        .unwrap();

        let mut input = SpikeTensor::zeros(n_inputs, horizon, 1_000);
        for ch in 0..n_inputs {
            for b in 0..horizon {
                if rng.gen_bool(0.15) {
                    input.set(ch, b, true);
                }
            }
        }
        let mut weights = evsnn_core::Matrix::zeros(1, n_inputs);
        for i in 0..n_inputs {
            weights.set(0, i, rng.gen_range(-1.0..1.0));
        }
        // Random linear readout of the membrane trace.
        let readout: Vec<f64> = (0..horizon).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let membrane_readout = |w: &evsnn_core::Matrix| -> f64 {
            let layer = evsnn_core::SrmLayer::new(w.clone());
            let trace = layer.forward(&input, &config).unwrap();
            assert_eq!(trace.output.total_spikes(), 0, "config {config_idx} must stay sub-threshold");
            (0..horizon).map(|t| readout[t] * trace.membrane.get(0, t)).sum()
        };

        for i in 0..n_inputs {
            // Analytic gradient from the closed-form kernel: the membrane
            // contribution of weight i is the kernel-filtered spike train
            // of channel i, so dJ/dw_i = sum_t readout[t] * (eps * s_i)(t).
            let mut analytic = 0.0;
            for t in 0..horizon {
                let mut filtered = 0.0;
                for u in 0..=t {
                    if input.get(i, u) && t > u {
                        filtered += alpha_raw(t - u, tau);
                    }
                }
                analytic += readout[t] * filtered;
            }

            let h = 1e-3;
            let mut plus = weights.clone();
            plus.set(0, i, weights.get(0, i) + h);
            let mut minus = weights.clone();
            minus.set(0, i, weights.get(0, i) - h);
            let fd = (membrane_readout(&plus) - membrane_readout(&minus)) / (2.0 * h);

            let denom = analytic.abs().max(1e-9);
            let rel = (fd - analytic).abs() / denom;
            max_rel = max_rel.max(rel);
            assert!(
                rel < 1e-6,
                "config {config_idx}, weight {i}: fd {fd} vs analytic {analytic} (rel {rel:e})"
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:.2?}, budget 10 s");
    println!("criterion 2 (sub-threshold membrane gradient): PASS — 100 configs, max rel dev {max_rel:.2e}, {elapsed:.2?}");
}

// ---------------------------------------------------------------------------
// criterion 3: binning equals a brute-force per-bin histogram bit for bit,
// including the two stock parameter sets
// ---------------------------------------------------------------------------

fn brute_force_bins(stream: &EventStream, bin_width_us: u64, n_bins: usize, s_min: u32) -> Vec<Vec<bool>> {
    let channels = stream.channel_count() as usize;
    let mut counts = vec![vec![0u32; n_bins]; channels];
    for ev in stream.events() {
        let bin = (ev.timestamp_us / bin_width_us) as usize;
        if bin < n_bins {
            counts[ev.channel as usize][bin] += 1;
        }
    }
    counts
        .into_iter()
        .map(|row| row.into_iter().map(|c| c >= s_min).collect())
        .collect()
}

fn random_stream(rng: &mut ChaCha8Rng, channels: u32, duration_us: u64, n_events: usize) -> EventStream {
    let mut events: Vec<Event> = (0..n_events)
        .map(|_| Event {
            // Deliberately allow timestamps beyond the binned window so the
            // discard rule is exercised.
            timestamp_us: rng.gen_range(0..duration_us + duration_us / 5 + 1),
            channel: rng.gen_range(0..channels),
            polarity: if rng.gen_bool(0.5) { Polarity::Positive } else { Polarity::Negative },
        })
        .collect();
    events.sort_by_key(|e| (e.timestamp_us, e.channel));
    EventStream::new(events, channels, Modality::Tactile, None).unwrap()
}

#[test]
fn criterion_3_binning_matches_histogram_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    // The two stock parameter sets first, then random ones.
    let mut cases: Vec<(EventStream, u64, usize, u32)> = vec![
        (random_stream(&mut rng, 156, 20_000 * 325, 30_000), 20_000, 325, 1),
        (random_stream(&mut rng, 156, 1_000 * 150, 10_000), 1_000, 150, 1),
    ];
    while cases.len() < 50 {
        let channels = rng.gen_range(1..200);
        let bin_width = rng.gen_range(100..50_000);
        let n_bins = rng.gen_range(1..400);
        let s_min = rng.gen_range(0..5);
        let n_events = rng.gen_range(0..20_000);
        let stream = random_stream(&mut rng, channels, bin_width * n_bins as u64, n_events);
        cases.push((stream, bin_width, n_bins, s_min));
    }

    for (i, (stream, bin_width, n_bins, s_min)) in cases.iter().enumerate() {
        let tensor = bin_events(stream, *bin_width, *n_bins, *s_min).unwrap();
        let oracle = brute_force_bins(stream, *bin_width, *n_bins, *s_min);
        for ch in 0..stream.channel_count() as usize {
            for b in 0..*n_bins {
                assert_eq!(
                    tensor.get(ch, b),
                    oracle[ch][b],
                    "case {i}: channel {ch}, bin {b} (width {bin_width}, s_min {s_min})"
                );
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:.2?}, budget 5 s");
    println!("criterion 3 (binning vs histogram oracle): PASS — 50 streams bit-for-bit, {elapsed:.2?}");
}

// ---------------------------------------------------------------------------
// criterion 4: the tactile architecture trained with the count loss solves
// the two-class disjoint-channel task — 100% train, >= 95% held-out within
// 50 epochs, bitwise deterministic per seed
// ---------------------------------------------------------------------------

fn binned_dataset(profile_samples: &[(EventStream, usize)], n_bins: usize) -> Vec<TensorSample> {
    profile_samples
        .iter()
        .map(|(stream, label)| TensorSample {
            inputs: vec![bin_events(stream, 1_000, n_bins, 1).unwrap()],
            label: *label,
        })
        .collect()
}

fn net_weights(net: &Network) -> Vec<f64> {
    let mut out = Vec::new();
    net.visit_weights(|m| out.extend_from_slice(m.data()));
    out
}

struct TrainedRun {
    net: Network,
    train_acc: f64,
    test_acc: f64,
}

fn run_blocks_training(seed: u64) -> TrainedRun {
    let profiles = block_rate_profiles(2, 10, 60.0, 2.0);
    let raw = generate_labeled(&profiles, 50, 150_000, Modality::Tactile, None, 42).unwrap();
    let samples = binned_dataset(&raw, 150);
    let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
    let fold = stratified_train_test(&labels, 0.2, 7).unwrap();
    let train_set: Vec<TensorSample> = fold.train.iter().map(|&i| samples[i].clone()).collect();
    let test_set: Vec<TensorSample> = fold.test.iter().map(|&i| samples[i].clone()).collect();

    let mut net = tactile_network(20, 2, SrmConfig::default_for_step()).unwrap();
    let spec = LossSpec::uniform(75, 8).unwrap();
    let surrogate = SurrogateConfig::default_for_threshold(net.config.threshold).unwrap();
    let settings = TrainSettings {
        epochs: 50,
        seed,
        ..TrainSettings::default()
    };
    train(&mut net, &train_set, Some(&test_set), &spec, &surrogate, &settings).unwrap();
    let train_acc = evaluate_accuracy(&net, &train_set).unwrap();
    let test_acc = evaluate_accuracy(&net, &test_set).unwrap();
    TrainedRun {
        net,
        train_acc,
        test_acc,
    }
}

#[test]
fn criterion_4_desk_scale_learnability() {
    let start = Instant::now();
    let first = run_blocks_training(0);
    assert_eq!(first.train_acc, 1.0, "train accuracy {}", first.train_acc);
    assert!(first.test_acc >= 0.95, "held-out accuracy {}", first.test_acc);

    // Same seed, fresh everything: bitwise identical weights and metrics.
    let second = run_blocks_training(0);
    assert_eq!(net_weights(&first.net), net_weights(&second.net), "training must be deterministic per seed");
    assert_eq!(first.test_acc, second.test_acc);

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(120), "took {elapsed:.2?}, budget 2 min");
    println!(
        "criterion 4 (desk-scale learnability): PASS — train {:.3}, held-out {:.3}, deterministic, {elapsed:.2?}",
        first.train_acc, first.test_acc
    );
}

// ---------------------------------------------------------------------------
// criterion 5: with class evidence confined to the first third of the
// window, the decaying-weight loss gives early-cutoff accuracy at least as
// good as the count loss, averaged over 5 seeds
// ---------------------------------------------------------------------------

fn early_cutoff_accuracy(spec: &LossSpec, seed: u64) -> f64 {
    const BINS: usize = 150;
    const CUTOFF: usize = BINS / 3;
    let profiles = early_window_profiles(4, 5, 10, 40.0, 150.0, (CUTOFF * 1_000) as u64);
    let raw = generate_labeled(&profiles, 30, (BINS * 1_000) as u64, Modality::Tactile, None, 100 + seed).unwrap();
    let samples = binned_dataset(&raw, BINS);
    let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
    let fold = stratified_train_test(&labels, 0.2, seed).unwrap();
    let train_set: Vec<TensorSample> = fold.train.iter().map(|&i| samples[i].clone()).collect();
    let test_set: Vec<TensorSample> = fold.test.iter().map(|&i| samples[i].clone()).collect();

    let mut net = tactile_network(30, 4, SrmConfig::default_for_step()).unwrap();
    let surrogate = SurrogateConfig::default_for_threshold(net.config.threshold).unwrap();
    let settings = TrainSettings {
        epochs: 25,
        seed,
        ..TrainSettings::default()
    };
    train(&mut net, &train_set, Some(&test_set), spec, &surrogate, &settings).unwrap();
    accuracy_over_time(&net, &test_set, &[CUTOFF]).unwrap()[0]
}

#[test]
fn criterion_5_early_classification_ordering() {
    let start = Instant::now();
    let mut weighted_sum = 0.0;
    let mut uniform_sum = 0.0;
    let mut per_seed = Vec::new();
    for seed in 0..5u64 {
        let weighted_spec = LossSpec::quadratic_default(50, 5, 150).unwrap();
        let uniform_spec = LossSpec::uniform(50, 5).unwrap();
        let w = early_cutoff_accuracy(&weighted_spec, seed);
        let u = early_cutoff_accuracy(&uniform_spec, seed);
        per_seed.push((w, u));
        weighted_sum += w;
        uniform_sum += u;
    }
    let weighted_mean = weighted_sum / 5.0;
    let uniform_mean = uniform_sum / 5.0;
    assert!(
        weighted_mean >= uniform_mean,
        "weighted {weighted_mean} < uniform {uniform_mean}; per seed {per_seed:?}"
    );
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(600), "took {elapsed:.2?}, budget 10 min");
    println!(
        "criterion 5 (early-classification ordering): PASS — weighted {weighted_mean:.4} vs count {uniform_mean:.4} at cutoff 50, {elapsed:.2?}"
    );
}

// ---------------------------------------------------------------------------
// criterion 6: onset detection on noisy programmed steps within +/- 1
// frame over 100 seeded traces; quaternion angles match a rotation-matrix
// oracle within 1e-9
// ---------------------------------------------------------------------------

fn rotation_matrix(q: &Quaternion) -> [[f64; 3]; 3] {
    let (w, x, y, z) = (q.w, q.x, q.y, q.z);
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// Geodesic angle via the relative rotation's matrix trace.
fn matrix_angle_oracle(a: &Quaternion, b: &Quaternion) -> f64 {
    let ra = rotation_matrix(a);
    let rb = rotation_matrix(b);
    // trace(Ra^T Rb)
    let mut tr = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            tr += ra[j][i] * rb[j][i];
        }
    }
    ((tr - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
}

fn random_unit_quaternion(rng: &mut ChaCha8Rng) -> Quaternion {
    loop {
        let q = Quaternion::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        if q.norm() > 1e-3 {
            return q.normalized().unwrap();
        }
    }
}

#[test]
fn criterion_6_slip_annotation() {
    let start = Instant::now();

    // Part 1: programmed steps, 10x the baseline noise amplitude.
    let params = OnsetParams::default();
    let noise = 1e-3;
    let step = 10.0 * noise;
    for trace_idx in 0..100u64 {
        let mut rng = derive_rng(6, trace_idx);
        let n = 420;
        let lift_at = rng.gen_range(140..260);
        let slip_at = lift_at + rng.gen_range(2..40);

        let displacement: Vec<f64> = (0..n)
            .map(|i| {
                let base = if i >= lift_at { step } else { 0.0 };
                base + rng.gen_range(0.0..noise)
            })
            .collect();
        let angle: Vec<f64> = (0..n)
            .map(|i| {
                let base = if i >= slip_at { step } else { 0.0 };
                base + rng.gen_range(0.0..noise)
            })
            .collect();

        let annotation = evsnn_core::annotate_slip(&displacement, &angle, &params, 120.0)
            .unwrap()
            .unwrap_or_else(|| panic!("trace {trace_idx}: onsets not found"));
        let lift_err = annotation.lift_frame.abs_diff(lift_at);
        let slip_err = annotation.slip_frame.abs_diff(slip_at);
        assert!(lift_err <= 1, "trace {trace_idx}: lift {} vs {lift_at}", annotation.lift_frame);
        assert!(slip_err <= 1, "trace {trace_idx}: slip {} vs {slip_at}", annotation.slip_frame);
    }

    // Part 2: quaternion angle vs the rotation-matrix oracle.
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut max_dev = 0.0f64;
    for _ in 0..1_000 {
        let a = random_unit_quaternion(&mut rng);
        let b = random_unit_quaternion(&mut rng);
        let got = rotation_angle_between(&a, &b).unwrap();
        let want = matrix_angle_oracle(&a, &b);
        let dev = (got - want).abs();
        max_dev = max_dev.max(dev);
        assert!(dev < 1e-9, "angle {got} vs oracle {want} (dev {dev:e})");
    }

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:.2?}, budget 5 s");
    println!(
        "criterion 6 (slip annotation): PASS — 100 traces within ±1 frame, angle oracle dev {max_dev:.2e}, {elapsed:.2?}"
    );
}

// ---------------------------------------------------------------------------
// criterion 7: the benchmark reports latency as whole-run wall time over
// total steps, exactly; realtime pacing floors the per-sample wall time.
// Absolute latency figures from other hardware are not targets.
// ---------------------------------------------------------------------------

fn bench_samples(n: usize, n_bins: usize) -> Vec<TensorSample> {
    let profiles = block_rate_profiles(2, 10, 60.0, 2.0);
    // Cycle two generated streams per class into n samples; the benchmark
    // only cares about tensor shape and realistic sparsity.
    let raw = generate_labeled(&profiles, 2, (n_bins * 1_000) as u64, Modality::Tactile, None, 7).unwrap();
    let base = binned_dataset(&raw, n_bins);
    (0..n).map(|i| base[i % base.len()].clone()).collect()
}

#[test]
fn criterion_7_benchmark_harness() {
    let samples = bench_samples(1_000, 150);
    let mut net = tactile_network(20, 2, SrmConfig::default_for_step()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    evsnn_core::train::initialize_weights(&mut net, &mut rng);

    let offline = bench(&net, &samples, &BenchProtocol::default(), BenchMode::Offline).unwrap();
    assert_eq!(offline.n_samples * offline.n_steps, 150_000);
    // The reported latency is the definitional formula applied to the
    // report's own wall-time field — bitwise.
    assert_eq!(
        offline.latency_us_per_step,
        BenchReport::latency_us(offline.wall, 1_000, 150),
        "latency must equal wall/(1000*150) exactly"
    );

    // Realtime pacing: every sample's wall time is floored by the fetch
    // delay (checked on a short run; the floor is per sample).
    let few = bench_samples(3, 150);
    let protocol = BenchProtocol {
        n_samples: 3,
        n_steps: 150,
        fetch_delay: Duration::from_millis(150),
    };
    let realtime = bench(&net, &few, &protocol, BenchMode::RealtimeSimulation).unwrap();
    assert!(
        realtime.min_sample_wall >= Duration::from_millis(150),
        "min sample wall {:?}",
        realtime.min_sample_wall
    );

    println!(
        "criterion 7 (benchmark harness): PASS — offline {:.2} us/step over 150000 steps, realtime sample floor {:?}",
        offline.latency_us_per_step, realtime.min_sample_wall
    );
}

// ---------------------------------------------------------------------------
// criterion 8 (optional, dataset-dependent): reach the reference accuracy
// floors on externally recorded container-handling and slip recordings.
// Requires imported data; excluded from CI.
// ---------------------------------------------------------------------------

/// Trains the combined model on an imported dataset directory and reports
/// mean held-out accuracy over 5 stratified folds.
///
/// Ignored by default: point `EVSNN_CONTAINERS_DIR` and/or `EVSNN_SLIP_DIR`
/// at dataset directories (see the dataset module for the layout, and the
/// `convert` subcommand for the one-time import) and run
/// `cargo test --test acceptance -- --ignored --nocapture`.
#[test]
#[ignore = "requires externally recorded datasets; set EVSNN_CONTAINERS_DIR / EVSNN_SLIP_DIR"]
fn criterion_8_recorded_dataset_accuracy() {
    let mut ran_any = false;

    // (dataset env var, label, bin width us, bins, expected floor)
    let tasks = [
        ("EVSNN_CONTAINERS_DIR", "containers", 20_000u64, 325usize, 0.70f64),
        ("EVSNN_SLIP_DIR", "slip", 1_000u64, 150usize, 0.95f64),
    ];
    for (var, label, bin_width_us, n_bins, floor) in tasks {
        let Some(dir) = std::env::var_os(var) else {
            println!("criterion 8 ({label}): SKIP — {var} not set");
            continue;
        };
        ran_any = true;
        let ds = evsnn::dataset::load_dataset(std::path::Path::new(&dir)).unwrap();
        let prep = evsnn::dataset::PrepParams {
            bin_width_us,
            n_bins,
            s_min: 1,
            merge_polarity: false,
            crop: None,
        };
        let samples = evsnn::dataset::prep_samples(&ds, evsnn::dataset::ModelKind::Multimodal, &prep).unwrap();
        let labels = ds.labels();
        let classes = labels.iter().max().unwrap() + 1;

        let arch = {
            let first = &samples[0];
            let geometry = first.inputs[1].geometry().expect("vision stream carries geometry");
            evsnn::arch::ArchSpec::multimodal(
                first.inputs[0].channel_count(),
                geometry,
                classes,
                evsnn_core::DEFAULT_POOL_GAIN,
            )
            .unwrap()
        };
        let surrogate = SurrogateConfig::default_for_threshold(arch.threshold).unwrap();
        let spec = {
            let (t, f) = evsnn_core::make_target_counts(n_bins);
            LossSpec::uniform(t, f).unwrap()
        };
        let settings = TrainSettings {
            epochs: 500,
            batch_size: 8,
            optimizer: RmsPropConfig::default(),
            seed: 0,
            ..TrainSettings::default()
        };

        let folds = evsnn_core::stratified_kfold(&labels, 5, 0).unwrap();
        let mut accs = Vec::new();
        for fold in &folds {
            let train_set: Vec<TensorSample> = fold.train.iter().map(|&i| samples[i].clone()).collect();
            let test_set: Vec<TensorSample> = fold.test.iter().map(|&i| samples[i].clone()).collect();
            let mut net = arch.build().unwrap();
            train(&mut net, &train_set, None, &spec, &surrogate, &settings).unwrap();
            accs.push(evaluate_accuracy(&net, &test_set).unwrap());
        }
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        assert!(
            mean >= floor,
            "criterion 8 ({label}): mean held-out accuracy {mean:.4} below the {floor} floor; folds {accs:?}"
        );
        println!("criterion 8 ({label}): PASS — mean held-out accuracy {mean:.4} over 5 folds (floor {floor})");
    }

    assert!(
        ran_any,
        "criterion 8 needs EVSNN_CONTAINERS_DIR and/or EVSNN_SLIP_DIR to point at imported datasets"
    );
}
