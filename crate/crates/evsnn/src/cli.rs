//! Command-line interface: `generate`, `convert`, `train`, `eval`,
//! `predict`, `curve`, `annotate`, `bench`.
//!
//! Every run that trains writes a self-contained run directory:
//!
//! ```text
//! run/
//!   manifest.txt          # resolved config, seed, version — reproduces the run
//!   arch.txt              # network shape (see arch module)
//!   splits.csv            # fold,role,sample
//!   weights_fold0.snnw    # one per fold
//!   metrics_fold0.csv     # epoch,train_loss,train_acc,test_acc
//! ```
//!
//! `eval`, `predict` and `curve` read everything they need back from the
//! run directory, so no preprocessing flags have to be restated.
//!
//! Environment: `EVSNN_OUT_DIR` prefixes relative output paths,
//! `EVSNN_THREADS` sizes the worker pool (the `--threads` flag wins).
//! Workers are only used for read-only evaluation; training and the
//! benchmark are strictly serial, and evaluation reductions are
//! index-ordered, so results do not depend on the thread count.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use evsnn_core::{
    accuracy_over_time, default_time_points, predict, stratified_kfold, stratified_train_test,
    train, AccuracyCurve, Fold, Geometry, Network, SurrogateConfig, TensorSample,
    DEFAULT_POOL_GAIN,
};

use crate::annotate::{annotate_trace, read_pose_csv, write_annotations_csv, RecordingAnnotation};
use crate::arch::ArchSpec;
use crate::bench::{bench, BenchMode, BenchProtocol, BenchReport};
use crate::config::{self, LossKind, TrainOverrides};
use crate::curve::write_curve_csv;
use crate::dataset::{self, Dataset, GenerateParams, ModelKind, PrepParams, Preset};
use crate::error::{AppError, Result};
use crate::evst;
use crate::weights::{load_weights_into, save_weights};

const EXIT_CODE_HELP: &str = "Exit codes:
  0  success
  1  unclassified failure
  2  usage error (bad flag or argument)
  3  missing file or I/O failure
  4  malformed file content (position reported)
  5  invalid data (domain invariant violated)
  6  inconsistent configuration
  7  training diverged (non-finite numbers)";

#[derive(Parser)]
#[command(
    name = "evsnn",
    version,
    about = "Event-driven spiking-network toolkit: synthetic datasets, training, evaluation, annotation and latency benchmarks",
    after_help = EXIT_CODE_HELP
)]
struct Cli {
    /// Worker threads for evaluation (default: all cores; EVSNN_THREADS
    /// is used when the flag is absent)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic event dataset
    Generate(GenerateArgs),
    /// Convert an event CSV into the binary stream format
    Convert(ConvertArgs),
    /// Train a model, writing a self-contained run directory
    Train(TrainArgs),
    /// Report a trained model's accuracy on a dataset
    Eval(EvalArgs),
    /// Classify a single sample with a trained model
    Predict(PredictArgs),
    /// Write an accuracy-over-time curve across folds
    Curve(CurveArgs),
    /// Detect lift and slip onsets in pose traces
    Annotate(AnnotateArgs),
    /// Measure forward-pass latency
    Bench(BenchArgs),
}

fn parse_geometry(s: &str) -> std::result::Result<Geometry, String> {
    let parts: Vec<&str> = s.split('x').collect();
    if parts.len() != 3 {
        return Err(format!("expected WIDTHxHEIGHTxPOLARITIES, found {s:?}"));
    }
    let dim = |t: &str| t.parse::<u32>().map_err(|_| format!("bad dimension {t:?}"));
    Geometry::new(dim(parts[0])?, dim(parts[1])?, dim(parts[2])?).map_err(|e| e.to_string())
}

#[derive(Args)]
struct GenerateArgs {
    /// Dataset family: blocks, early or slip-toy
    #[arg(long)]
    preset: Preset,
    /// Output dataset directory
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of classes (preset default when omitted)
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    per_class: Option<usize>,
    #[arg(long)]
    duration_us: Option<u64>,
    /// Channels per class block (shared channel count for slip-toy)
    #[arg(long)]
    block: Option<usize>,
    #[arg(long)]
    active_hz: Option<f64>,
    /// Idle-channel rate (blocks preset)
    #[arg(long)]
    background_hz: Option<f64>,
    /// Always-on shared channels (early preset)
    #[arg(long)]
    distractors: Option<usize>,
    #[arg(long)]
    distractor_hz: Option<f64>,
    /// End of the informative window in microseconds (early preset)
    #[arg(long)]
    active_until_us: Option<u64>,
    /// Per-class onset shift in microseconds (slip-toy preset)
    #[arg(long)]
    stagger_us: Option<u64>,
    /// Also write a vision stream per sample (blocks preset)
    #[arg(long)]
    with_vision: bool,
    /// Pixel grid for generated vision streams
    #[arg(long, value_parser = parse_geometry)]
    geometry: Option<Geometry>,
    /// Pixel rows per class band in generated vision streams
    #[arg(long)]
    band_rows: Option<u32>,
}

#[derive(Args)]
struct ConvertArgs {
    /// Input CSV: timestamp_us,channel,polarity
    #[arg(long)]
    events: PathBuf,
    /// Output .evst file
    #[arg(long)]
    out: PathBuf,
    /// Stream modality: tact or vis
    #[arg(long)]
    modality: String,
    /// Declared channel count
    #[arg(long)]
    channels: u32,
    /// Pixel grid (vision streams)
    #[arg(long, value_parser = parse_geometry)]
    geometry: Option<Geometry>,
    /// Sort rows by timestamp before validating
    #[arg(long)]
    sort: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset directory (see generate)
    #[arg(long)]
    data: PathBuf,
    /// Model family: tact, vis or mm
    #[arg(long)]
    model: ModelKind,
    /// Output run directory
    #[arg(long)]
    out: PathBuf,
    /// Number of classes (default: largest label + 1)
    #[arg(long)]
    classes: Option<usize>,
    /// Training config file (key = value); flags win
    #[arg(long)]
    config: Option<PathBuf>,
    /// Loss: count or weighted
    #[arg(long)]
    loss: Option<LossKind>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    l2: Option<f64>,
    /// Weighted-loss profile curvature (<= 0)
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// Weighted-loss profile start value (> 0)
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    true_count: Option<u32>,
    #[arg(long)]
    false_count: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Stratified k-fold cross-validation
    #[arg(long, conflicts_with = "test_frac")]
    folds: Option<usize>,
    /// Single stratified holdout fraction (default 0.2)
    #[arg(long)]
    test_frac: Option<f64>,
    #[arg(long, default_value_t = 1_000)]
    bin_width_us: u64,
    #[arg(long, default_value_t = 150)]
    bins: usize,
    #[arg(long, default_value_t = 1)]
    smin: u32,
    /// OR the vision polarity planes before binning
    #[arg(long)]
    merge_polarity: bool,
    /// Crop streams to [start, end) microseconds before binning
    #[arg(long)]
    crop_start_us: Option<u64>,
    #[arg(long)]
    crop_end_us: Option<u64>,
}

#[derive(Args)]
struct EvalArgs {
    /// Run directory written by train
    #[arg(long)]
    run: PathBuf,
    /// Dataset directory to evaluate on
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0)]
    fold: usize,
    /// Cutoff in bins (default: full horizon)
    #[arg(long)]
    upto: Option<usize>,
    /// Which samples: test, train (per the recorded split) or all
    #[arg(long, default_value = "test")]
    split: String,
}

#[derive(Args)]
struct PredictArgs {
    /// Run directory written by train
    #[arg(long)]
    run: PathBuf,
    #[arg(long, default_value_t = 0)]
    fold: usize,
    /// Tactile stream (models tact and mm)
    #[arg(long)]
    tact: Option<PathBuf>,
    /// Vision stream (models vis and mm)
    #[arg(long)]
    vis: Option<PathBuf>,
    /// Cutoff in bins (default: full horizon)
    #[arg(long)]
    upto: Option<usize>,
}

#[derive(Args)]
struct CurveArgs {
    /// Run directory written by train
    #[arg(long)]
    run: PathBuf,
    /// Dataset directory to evaluate on
    #[arg(long)]
    data: PathBuf,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    /// Cutoffs in bins (default: every 10 bins plus the horizon)
    #[arg(long, value_delimiter = ',')]
    points: Option<Vec<usize>>,
    /// Which samples per fold: test, train or all
    #[arg(long, default_value = "test")]
    split: String,
}

#[derive(Args)]
struct AnnotateArgs {
    /// Pose trace CSVs (timestamp,px,py,pz,qw,qx,qy,qz)
    #[arg(required = true)]
    poses: Vec<PathBuf>,
    /// Output annotations CSV
    #[arg(long)]
    out: PathBuf,
    /// Frames that define the resting noise distribution
    #[arg(long, default_value_t = 120)]
    baseline: usize,
    /// Fraction of baseline frames an onset must exceed
    #[arg(long, default_value_t = 0.98)]
    quantile: f64,
    /// Frames the exceedance must persist
    #[arg(long, default_value_t = 12)]
    persistence: usize,
}

#[derive(Args)]
struct BenchArgs {
    /// Dataset directory providing the benchmark samples
    #[arg(long)]
    data: PathBuf,
    /// offline or realtime
    #[arg(long, default_value = "offline")]
    mode: BenchMode,
    /// Reuse a trained run's model (arch + fold-0 weights + preprocessing)
    #[arg(long)]
    run: Option<PathBuf>,
    /// Model family when no run directory is given
    #[arg(long, conflicts_with = "run")]
    model: Option<ModelKind>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1_000)]
    samples: usize,
    #[arg(long, default_value_t = 150)]
    steps: usize,
    /// Realtime fetch delay in milliseconds
    #[arg(long, default_value_t = 150.0)]
    fetch_delay_ms: f64,
    #[arg(long, default_value_t = 1_000)]
    bin_width_us: u64,
    #[arg(long, default_value_t = 1)]
    smin: u32,
    #[arg(long)]
    merge_polarity: bool,
    /// Write bench.csv under this directory
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Entry point shared by `main` and the test suite. Returns the process
/// exit code; errors have already been reported on stderr as one line.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(argv.iter()) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            let first = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("{}", AppError::Usage(first.to_string()).report_line());
            return 2;
        }
    };

    init_worker_pool(cli.threads);
    let command_line = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join(" ");
    let outcome = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Convert(args) => cmd_convert(args),
        Command::Train(args) => cmd_train(args, &command_line),
        Command::Eval(args) => cmd_eval(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Curve(args) => cmd_curve(args),
        Command::Annotate(args) => cmd_annotate(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.report_line());
            e.exit_code()
        }
    }
}

fn init_worker_pool(flag: Option<usize>) {
    let threads = flag.or_else(|| {
        std::env::var("EVSNN_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        // A pool may already exist when run() is called twice in-process;
        // the first configuration then stays in effect.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Relative output paths land under `EVSNN_OUT_DIR` when it is set.
fn out_path(path: PathBuf) -> PathBuf {
    match std::env::var_os("EVSNN_OUT_DIR") {
        Some(base) if path.is_relative() => PathBuf::from(base).join(path),
        _ => path,
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let mut params = GenerateParams::new(args.preset, args.seed);
    macro_rules! apply {
        ($($field:ident),*) => {
            $(if let Some(v) = args.$field { params.$field = v; })*
        };
    }
    apply!(
        classes,
        per_class,
        duration_us,
        block,
        active_hz,
        background_hz,
        distractors,
        distractor_hz,
        active_until_us,
        stagger_us,
        geometry,
        band_rows
    );
    params.with_vision = args.with_vision;
    let dir = out_path(args.out);
    let ds = dataset::generate(&dir, &params)?;
    println!(
        "generated {} samples ({} classes, preset {}) in {}",
        ds.samples.len(),
        params.classes,
        params.preset,
        dir.display()
    );
    Ok(())
}

fn cmd_convert(args: ConvertArgs) -> Result<()> {
    let modality: dataset::ModelKind = args
        .modality
        .parse()
        .map_err(AppError::Usage)?;
    let modality = match modality {
        ModelKind::Tactile => evsnn_core::Modality::Tactile,
        ModelKind::Vision => evsnn_core::Modality::Vision,
        ModelKind::Multimodal => {
            return Err(AppError::Usage("a stream is tact or vis, not mm".into()))
        }
    };
    let stream = evst::import_csv(&args.events, modality, args.channels, args.geometry, args.sort)?;
    let out = out_path(args.out);
    evst::write_stream(&out, &stream)?;
    println!("wrote {} events to {}", stream.len(), out.display());
    Ok(())
}

const MANIFEST_NAME: &str = "manifest.txt";
const SPLITS_NAME: &str = "splits.csv";
const ARCH_NAME: &str = "arch.txt";

fn weights_name(fold: usize) -> String {
    format!("weights_fold{fold}.snnw")
}

fn metrics_name(fold: usize) -> String {
    format!("metrics_fold{fold}.csv")
}

/// Builds the stock architecture for the model family, reading input
/// widths and pixel geometry off the first prepared sample.
fn arch_for(model: ModelKind, first: &TensorSample, classes: usize) -> Result<ArchSpec> {
    match model {
        ModelKind::Tactile => Ok(ArchSpec::tactile(first.inputs[0].channel_count(), classes)),
        ModelKind::Vision => {
            let geometry = first.inputs[0]
                .geometry()
                .ok_or_else(|| AppError::Validation("vision stream lacks pixel geometry".into()))?;
            ArchSpec::vision(geometry, classes, DEFAULT_POOL_GAIN)
        }
        ModelKind::Multimodal => {
            let geometry = first.inputs[1]
                .geometry()
                .ok_or_else(|| AppError::Validation("vision stream lacks pixel geometry".into()))?;
            ArchSpec::multimodal(first.inputs[0].channel_count(), geometry, classes, DEFAULT_POOL_GAIN)
        }
    }
}

fn gather(samples: &[TensorSample], indices: &[usize]) -> Vec<TensorSample> {
    indices.iter().map(|&i| samples[i].clone()).collect()
}

fn write_kv_file(path: &Path, pairs: &[(String, String)]) -> Result<()> {
    let mut text = String::new();
    for (k, v) in pairs {
        text.push_str(&format!("{k} = {v}\n"));
    }
    std::fs::write(path, text).map_err(|e| AppError::io(path, e))
}

fn write_splits_csv(path: &Path, folds: &[Fold], names: &[String]) -> Result<()> {
    let mut text = String::from("fold,role,sample\n");
    for (f, fold) in folds.iter().enumerate() {
        for &i in &fold.train {
            text.push_str(&format!("{f},train,{}\n", names[i]));
        }
        for &i in &fold.test {
            text.push_str(&format!("{f},test,{}\n", names[i]));
        }
    }
    std::fs::write(path, text).map_err(|e| AppError::io(path, e))
}

fn cmd_train(args: TrainArgs, command_line: &str) -> Result<()> {
    let crop = match (args.crop_start_us, args.crop_end_us) {
        (Some(s), Some(e)) => Some((s, e)),
        (None, None) => None,
        _ => {
            return Err(AppError::Config(
                "crop needs both --crop-start-us and --crop-end-us".into(),
            ))
        }
    };
    let prep = PrepParams {
        bin_width_us: args.bin_width_us,
        n_bins: args.bins,
        s_min: args.smin,
        merge_polarity: args.merge_polarity,
        crop,
    };

    let ds = dataset::load_dataset(&args.data)?;
    let samples = dataset::prep_samples(&ds, args.model, &prep)?;
    let labels = ds.labels();
    let max_label = labels.iter().copied().max().expect("dataset is non-empty");
    let classes = args.classes.unwrap_or(max_label + 1);
    if max_label >= classes {
        return Err(AppError::Config(format!(
            "dataset labels reach {max_label} but --classes is {classes}"
        )));
    }

    let from_file = match &args.config {
        Some(path) => TrainOverrides::from_file(path)?,
        None => TrainOverrides::default(),
    };
    let from_flags = TrainOverrides {
        epochs: args.epochs,
        lr: args.lr,
        batch: args.batch,
        l2: args.l2,
        loss: args.loss,
        beta: args.beta,
        gamma: args.gamma,
        true_count: args.true_count,
        false_count: args.false_count,
        seed: args.seed,
    };
    let resolved = from_flags.merged_over(from_file).resolve(prep.n_bins)?;
    let seed = resolved.settings.seed;

    let folds: Vec<Fold> = match args.folds {
        Some(k) => stratified_kfold(&labels, k, seed)?,
        None => {
            let frac = args.test_frac.unwrap_or(0.2);
            vec![stratified_train_test(&labels, frac, seed)?]
        }
    };

    let arch = arch_for(args.model, &samples[0], classes)?;
    let surrogate = SurrogateConfig::default_for_threshold(arch.threshold)?;

    let run_dir = out_path(args.out);
    std::fs::create_dir_all(&run_dir).map_err(|e| AppError::io(&run_dir, e))?;
    arch.save(&run_dir.join(ARCH_NAME))?;
    let names: Vec<String> = ds.samples.iter().map(|s| s.name.clone()).collect();
    write_splits_csv(&run_dir.join(SPLITS_NAME), &folds, &names)?;

    let mut manifest: Vec<(String, String)> = vec![
        ("version".into(), env!("CARGO_PKG_VERSION").into()),
        ("command".into(), command_line.into()),
        ("data".into(), args.data.display().to_string()),
        ("model".into(), args.model.to_string()),
        ("classes".into(), classes.to_string()),
        ("bin_width_us".into(), prep.bin_width_us.to_string()),
        ("n_bins".into(), prep.n_bins.to_string()),
        ("s_min".into(), prep.s_min.to_string()),
        ("merge_polarity".into(), prep.merge_polarity.to_string()),
        ("loss".into(), resolved.kind.to_string()),
        ("true_count".into(), resolved.true_count.to_string()),
        ("false_count".into(), resolved.false_count.to_string()),
        ("epochs".into(), resolved.settings.epochs.to_string()),
        ("lr".into(), resolved.settings.optimizer.learning_rate.to_string()),
        ("batch".into(), resolved.settings.batch_size.to_string()),
        ("l2".into(), resolved.settings.optimizer.l2.to_string()),
        ("seed".into(), seed.to_string()),
    ];
    if let Some((s, e)) = crop {
        manifest.push(("crop_start_us".into(), s.to_string()));
        manifest.push(("crop_end_us".into(), e.to_string()));
    }
    if let evsnn_core::Weighting::Quadratic { beta, gamma } = resolved.loss.weighting {
        manifest.push(("beta".into(), beta.to_string()));
        manifest.push(("gamma".into(), gamma.to_string()));
    }
    match args.folds {
        Some(k) => manifest.push(("folds".into(), k.to_string())),
        None => manifest.push(("test_frac".into(), args.test_frac.unwrap_or(0.2).to_string())),
    }
    write_kv_file(&run_dir.join(MANIFEST_NAME), &manifest)?;

    for (f, fold) in folds.iter().enumerate() {
        let train_set = gather(&samples, &fold.train);
        let test_set = gather(&samples, &fold.test);
        let mut net = arch.build()?;
        let metrics = train(
            &mut net,
            &train_set,
            Some(&test_set),
            &resolved.loss,
            &surrogate,
            &resolved.settings,
        )?;

        save_weights(&run_dir.join(weights_name(f)), &net)?;
        let mut text = String::from("epoch,train_loss,train_acc,test_acc\n");
        for m in &metrics {
            let test = m.test_accuracy.map(|a| a.to_string()).unwrap_or_else(|| "NA".into());
            text.push_str(&format!("{},{},{},{}\n", m.epoch, m.train_loss, m.train_accuracy, test));
        }
        let metrics_path = run_dir.join(metrics_name(f));
        std::fs::write(&metrics_path, text).map_err(|e| AppError::io(&metrics_path, e))?;

        let last = metrics.last().expect("at least one epoch");
        println!(
            "fold {f}: {} epochs, final train acc {:.4}, test acc {:.4}",
            metrics.len(),
            last.train_accuracy,
            last.test_accuracy.unwrap_or(f64::NAN)
        );
    }
    println!("run written to {}", run_dir.display());
    Ok(())
}

/// A trained run directory read back for evaluation or prediction.
struct RunDir {
    dir: PathBuf,
    model: ModelKind,
    prep: PrepParams,
    arch: ArchSpec,
}

impl RunDir {
    fn load(dir: &Path) -> Result<RunDir> {
        let manifest_path = dir.join(MANIFEST_NAME);
        let pairs = config::read_kv_file(&manifest_path)?;
        let require = |key: &str| -> Result<String> {
            pairs
                .iter()
                .find(|(k, _, _)| k == key)
                .map(|(_, v, _)| v.clone())
                .ok_or_else(|| {
                    AppError::Validation(format!("{}: missing key {key}", manifest_path.display()))
                })
        };
        let model: ModelKind = require("model")?
            .parse()
            .map_err(|e: String| AppError::Validation(format!("{}: {e}", manifest_path.display())))?;
        let crop_start: Option<u64> = config::lookup(&manifest_path, &pairs, "crop_start_us")?;
        let crop_end: Option<u64> = config::lookup(&manifest_path, &pairs, "crop_end_us")?;
        let prep = PrepParams {
            bin_width_us: require("bin_width_us")?.parse().map_err(|_| {
                AppError::Validation(format!("{}: bad bin_width_us", manifest_path.display()))
            })?,
            n_bins: require("n_bins")?.parse().map_err(|_| {
                AppError::Validation(format!("{}: bad n_bins", manifest_path.display()))
            })?,
            s_min: require("s_min")?.parse().map_err(|_| {
                AppError::Validation(format!("{}: bad s_min", manifest_path.display()))
            })?,
            merge_polarity: config::lookup(&manifest_path, &pairs, "merge_polarity")?.unwrap_or(false),
            crop: match (crop_start, crop_end) {
                (Some(s), Some(e)) => Some((s, e)),
                _ => None,
            },
        };
        let arch = ArchSpec::load(&dir.join(ARCH_NAME))?;
        Ok(RunDir {
            dir: dir.to_path_buf(),
            model,
            prep,
            arch,
        })
    }

    fn network_for_fold(&self, fold: usize) -> Result<Network> {
        let mut net = self.arch.build()?;
        load_weights_into(&self.dir.join(weights_name(fold)), &mut net)?;
        Ok(net)
    }

    /// Sample indices of `ds` recorded under the given fold and role.
    /// `role = "all"` selects the whole dataset.
    fn split_indices(&self, ds: &Dataset, fold: usize, role: &str) -> Result<Vec<usize>> {
        if role == "all" {
            return Ok((0..ds.samples.len()).collect());
        }
        if role != "train" && role != "test" {
            return Err(AppError::Usage(format!(
                "--split must be train, test or all, found {role:?}"
            )));
        }
        let path = self.dir.join(SPLITS_NAME);
        let text = std::fs::read_to_string(&path).map_err(|e| AppError::io(&path, e))?;
        let by_name: BTreeMap<&str, usize> = ds
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| (s.name.as_str(), i))
            .collect();
        let mut indices = Vec::new();
        let mut fold_seen = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if i == 0 || line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(AppError::parse_at_line(&path, i as u64 + 1, "expected 3 fields"));
            }
            let f: usize = fields[0]
                .parse()
                .map_err(|_| AppError::parse_at_line(&path, i as u64 + 1, format!("bad fold {:?}", fields[0])))?;
            if f != fold {
                continue;
            }
            fold_seen = true;
            if fields[1] != role {
                continue;
            }
            let index = by_name.get(fields[2]).ok_or_else(|| {
                AppError::Validation(format!(
                    "split sample {:?} is not in the dataset; evaluate with --split all on foreign data",
                    fields[2]
                ))
            })?;
            indices.push(*index);
        }
        if !fold_seen {
            return Err(AppError::Validation(format!("fold {fold} is not in {}", path.display())));
        }
        Ok(indices)
    }
}

/// Index-ordered parallel prediction; the reduction is a count, so the
/// result is independent of the worker schedule.
fn accuracy_at(net: &Network, samples: &[TensorSample], upto: usize) -> Result<(usize, usize)> {
    let predictions: Vec<usize> = samples
        .par_iter()
        .map(|s| -> Result<usize> {
            let trace = net.forward(&s.inputs)?;
            Ok(predict(trace.output(), upto))
        })
        .collect::<Result<Vec<_>>>()?;
    let correct = predictions
        .iter()
        .zip(samples)
        .filter(|(p, s)| **p == s.label)
        .count();
    Ok((correct, samples.len()))
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let run = RunDir::load(&args.run)?;
    let ds = dataset::load_dataset(&args.data)?;
    let indices = run.split_indices(&ds, args.fold, &args.split)?;
    if indices.is_empty() {
        return Err(AppError::Validation("no samples selected".into()));
    }
    let all = dataset::prep_samples(&ds, run.model, &run.prep)?;
    let samples = gather(&all, &indices);
    let upto = args.upto.unwrap_or(run.prep.n_bins);
    if upto == 0 || upto > run.prep.n_bins {
        return Err(AppError::Config(format!(
            "--upto must lie in 1..={}, found {upto}",
            run.prep.n_bins
        )));
    }
    let net = run.network_for_fold(args.fold)?;
    let (correct, total) = accuracy_at(&net, &samples, upto)?;
    println!(
        "fold {}: accuracy {:.6} ({correct}/{total}, {} samples up to bin {upto})",
        args.fold,
        correct as f64 / total as f64,
        args.split
    );
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let run = RunDir::load(&args.run)?;
    let mut inputs = Vec::new();
    if run.model.needs_tactile() {
        let path = args
            .tact
            .as_ref()
            .ok_or_else(|| AppError::Usage(format!("model {} needs --tact", run.model)))?;
        let stream = evst::read_stream(path)?;
        inputs.push(prep_one(&stream, &run.prep, false)?);
    }
    if run.model.needs_vision() {
        let path = args
            .vis
            .as_ref()
            .ok_or_else(|| AppError::Usage(format!("model {} needs --vis", run.model)))?;
        let stream = evst::read_stream(path)?;
        inputs.push(prep_one(&stream, &run.prep, run.prep.merge_polarity)?);
    }
    let upto = args.upto.unwrap_or(run.prep.n_bins);
    let net = run.network_for_fold(args.fold)?;
    let trace = net.forward(&inputs)?;
    println!("{}", predict(trace.output(), upto));
    Ok(())
}

fn prep_one(stream: &evsnn_core::EventStream, prep: &PrepParams, merge: bool) -> Result<evsnn_core::SpikeTensor> {
    let cropped;
    let mut stream = stream;
    if let Some((start, end)) = prep.crop {
        cropped = stream.crop_window(start, end)?;
        stream = &cropped;
    }
    let merged;
    if merge {
        merged = stream.merge_polarity()?;
        stream = &merged;
    }
    Ok(evsnn_core::bin_events(stream, prep.bin_width_us, prep.n_bins, prep.s_min)?)
}

fn cmd_curve(args: CurveArgs) -> Result<()> {
    let run = RunDir::load(&args.run)?;
    let ds = dataset::load_dataset(&args.data)?;
    let all = dataset::prep_samples(&ds, run.model, &run.prep)?;
    let points = match args.points {
        Some(p) => {
            if p.is_empty() || p.iter().any(|&b| b == 0 || b > run.prep.n_bins) {
                return Err(AppError::Config(format!(
                    "curve points must lie in 1..={}",
                    run.prep.n_bins
                )));
            }
            p
        }
        None => default_time_points(run.prep.n_bins),
    };

    // Folds present = consecutive weight files on disk.
    let mut fold_count = 0;
    while run.dir.join(weights_name(fold_count)).exists() {
        fold_count += 1;
    }
    if fold_count == 0 {
        return Err(AppError::Validation(format!(
            "{}: no weights_fold0.snnw",
            run.dir.display()
        )));
    }

    let mut fold_accuracies = Vec::with_capacity(fold_count);
    for f in 0..fold_count {
        let indices = run.split_indices(&ds, f, &args.split)?;
        if indices.is_empty() {
            return Err(AppError::Validation(format!("fold {f} selects no samples")));
        }
        let samples = gather(&all, &indices);
        let net = run.network_for_fold(f)?;
        fold_accuracies.push(accuracy_over_time(&net, &samples, &points)?);
    }
    let curve = AccuracyCurve::from_folds(points, &fold_accuracies)?;
    let out = out_path(args.out);
    write_curve_csv(&out, &curve, run.prep.bin_width_us)?;
    println!(
        "curve over {fold_count} fold(s) and {} cutoffs written to {}",
        curve.upto_bins.len(),
        out.display()
    );
    Ok(())
}

fn cmd_annotate(args: AnnotateArgs) -> Result<()> {
    let params = evsnn_core::OnsetParams {
        baseline_len: args.baseline,
        quantile: args.quantile,
        persistence: args.persistence,
    };
    let mut rows = Vec::with_capacity(args.poses.len());
    for path in &args.poses {
        let trace = read_pose_csv(path)?;
        let annotation = annotate_trace(&trace, &params)?;
        let recording = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        rows.push(RecordingAnnotation {
            recording,
            annotation,
        });
    }
    let found = rows.iter().filter(|r| r.annotation.is_some()).count();
    let out = out_path(args.out);
    write_annotations_csv(&out, &rows)?;
    println!(
        "annotated {} recording(s), onsets found in {found}, written to {}",
        rows.len(),
        out.display()
    );
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let protocol = BenchProtocol {
        n_samples: args.samples,
        n_steps: args.steps,
        fetch_delay: Duration::from_secs_f64(args.fetch_delay_ms / 1e3),
    };
    let ds = dataset::load_dataset(&args.data)?;

    let (net, samples) = match &args.run {
        Some(run_dir) => {
            let run = RunDir::load(run_dir)?;
            if run.prep.n_bins != protocol.n_steps {
                return Err(AppError::Config(format!(
                    "run bins {} do not match --steps {}",
                    run.prep.n_bins, protocol.n_steps
                )));
            }
            let samples = dataset::prep_samples(&ds, run.model, &run.prep)?;
            (run.network_for_fold(0)?, samples)
        }
        None => {
            let model = args.model.ok_or_else(|| {
                AppError::Usage("bench needs --run or --model".into())
            })?;
            let prep = PrepParams {
                bin_width_us: args.bin_width_us,
                n_bins: args.steps,
                s_min: args.smin,
                merge_polarity: args.merge_polarity,
                crop: None,
            };
            let samples = dataset::prep_samples(&ds, model, &prep)?;
            let max_label = ds.labels().into_iter().max().expect("dataset is non-empty");
            let arch = arch_for(model, &samples[0], max_label + 1)?;
            let mut net = arch.build()?;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(args.seed);
            evsnn_core::train::initialize_weights(&mut net, &mut rng);
            (net, samples)
        }
    };

    let report = bench(&net, &samples, &protocol, args.mode)?;
    println!("{}", report.summary());
    if let Some(out) = args.out {
        let dir = out_path(out);
        std::fs::create_dir_all(&dir).map_err(|e| AppError::io(&dir, e))?;
        let path = dir.join("bench.csv");
        let text = format!("{}\n{}\n", BenchReport::csv_header(), report.csv_line());
        std::fs::write(&path, text).map_err(|e| AppError::io(&path, e))?;
        println!("report written to {}", path.display());
    }
    Ok(())
}
