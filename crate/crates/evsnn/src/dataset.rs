//! On-disk datasets: directory layout, manifest, synthetic generation, and
//! preparation of raw event streams into spike tensors for training.
//!
//! A dataset directory holds one subdirectory per sample plus a manifest:
//!
//! ```text
//! dataset/
//!   manifest.csv              # sample,label,object,condition,recording
//!   sample_0000/
//!     tact.evst               # tactile stream (when the sample has one)
//!     vis.evst                # vision stream (when the sample has one)
//!     label.txt               # class index, must agree with the manifest
//!   sample_0001/ ...
//! ```

use std::path::{Path, PathBuf};

use evsnn_core::{
    bin_events, block_rate_profiles, early_window_profiles, generate_labeled, onset_delay_profiles,
    ChannelActivity, ClassProfile, EventStream, Geometry, Modality, TensorSample,
};

use crate::error::{AppError, Result};
use crate::evst;

/// One manifest row. `object`, `condition` and `recording` are free-form
/// metadata; synthetic presets fill them with the preset name, the class
/// index and the sample directory name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleMeta {
    pub name: String,
    pub label: usize,
    pub object: String,
    pub condition: String,
    pub recording: String,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub dir: PathBuf,
    pub samples: Vec<SampleMeta>,
}

#[derive(Debug, Clone)]
pub struct LoadedSample {
    pub tactile: Option<EventStream>,
    pub vision: Option<EventStream>,
    pub label: usize,
}

const MANIFEST: &str = "manifest.csv";
const MANIFEST_HEADER: &str = "sample,label,object,condition,recording";

fn csv_field_ok(s: &str) -> bool {
    !s.contains(',') && !s.contains('\n') && !s.contains('\r')
}

pub fn write_manifest(dir: &Path, samples: &[SampleMeta]) -> Result<()> {
    let mut text = String::from(MANIFEST_HEADER);
    text.push('\n');
    for s in samples {
        for field in [&s.name, &s.object, &s.condition, &s.recording] {
            if !csv_field_ok(field) {
                return Err(AppError::Validation(format!(
                    "manifest field {field:?} contains a comma or newline"
                )));
            }
        }
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            s.name, s.label, s.object, s.condition, s.recording
        ));
    }
    let path = dir.join(MANIFEST);
    std::fs::write(&path, text).map_err(|e| AppError::io(path, e))
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(|e| AppError::io(&path, e))?;
    let mut samples = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if i == 0 {
            if line != MANIFEST_HEADER {
                return Err(AppError::parse_at_line(
                    &path,
                    line_no,
                    format!("expected header {MANIFEST_HEADER:?}"),
                ));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(AppError::parse_at_line(
                &path,
                line_no,
                format!("expected 5 fields, found {}", fields.len()),
            ));
        }
        let label: usize = fields[1]
            .parse()
            .map_err(|_| AppError::parse_at_line(&path, line_no, format!("bad label {:?}", fields[1])))?;
        samples.push(SampleMeta {
            name: fields[0].to_string(),
            label,
            object: fields[2].to_string(),
            condition: fields[3].to_string(),
            recording: fields[4].to_string(),
        });
    }
    if samples.is_empty() {
        return Err(AppError::Validation(format!(
            "{}: manifest lists no samples",
            path.display()
        )));
    }
    Ok(Dataset {
        dir: dir.to_path_buf(),
        samples,
    })
}

impl Dataset {
    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Loads one sample's streams, cross-checking `label.txt` against the
    /// manifest.
    pub fn load_sample(&self, index: usize) -> Result<LoadedSample> {
        let meta = self
            .samples
            .get(index)
            .ok_or_else(|| AppError::Validation(format!("sample index {index} out of range")))?;
        let sample_dir = self.dir.join(&meta.name);
        let label_path = sample_dir.join("label.txt");
        let label_text = std::fs::read_to_string(&label_path).map_err(|e| AppError::io(&label_path, e))?;
        let label: usize = label_text
            .trim()
            .parse()
            .map_err(|_| AppError::parse_at_line(&label_path, 1, format!("bad label {:?}", label_text.trim())))?;
        if label != meta.label {
            return Err(AppError::Validation(format!(
                "{}: label.txt says {label} but the manifest says {}",
                sample_dir.display(),
                meta.label
            )));
        }

        let mut loaded = LoadedSample {
            tactile: None,
            vision: None,
            label,
        };
        let tact = sample_dir.join("tact.evst");
        if tact.exists() {
            loaded.tactile = Some(evst::read_stream(&tact)?);
        }
        let vis = sample_dir.join("vis.evst");
        if vis.exists() {
            loaded.vision = Some(evst::read_stream(&vis)?);
        }
        if loaded.tactile.is_none() && loaded.vision.is_none() {
            return Err(AppError::Validation(format!(
                "{}: sample has neither tact.evst nor vis.evst",
                sample_dir.display()
            )));
        }
        Ok(loaded)
    }
}

/// Which model family a run trains or evaluates; decides which streams a
/// sample must provide and their order as network inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Tactile,
    Vision,
    Multimodal,
}

impl ModelKind {
    pub fn needs_tactile(self) -> bool {
        matches!(self, ModelKind::Tactile | ModelKind::Multimodal)
    }
    pub fn needs_vision(self) -> bool {
        matches!(self, ModelKind::Vision | ModelKind::Multimodal)
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "tact" => Ok(ModelKind::Tactile),
            "vis" => Ok(ModelKind::Vision),
            "mm" => Ok(ModelKind::Multimodal),
            other => Err(format!("unknown model {other:?}, expected tact, vis or mm")),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Tactile => "tact",
            ModelKind::Vision => "vis",
            ModelKind::Multimodal => "mm",
        })
    }
}

/// How raw streams become spike tensors: optional crop, per-bin count
/// threshold, and (vision only) polarity merging before binning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrepParams {
    pub bin_width_us: u64,
    pub n_bins: usize,
    pub s_min: u32,
    pub merge_polarity: bool,
    pub crop: Option<(u64, u64)>,
}

impl PrepParams {
    pub fn horizon(&self) -> usize {
        self.n_bins
    }
}

fn prep_stream(stream: &EventStream, prep: &PrepParams, merge: bool) -> Result<evsnn_core::SpikeTensor> {
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
    Ok(bin_events(stream, prep.bin_width_us, prep.n_bins, prep.s_min)?)
}

/// Converts every sample into the tensor inputs the chosen model consumes
/// (tactile first for the multimodal model). All samples must provide the
/// streams the model needs.
pub fn prep_samples(ds: &Dataset, model: ModelKind, prep: &PrepParams) -> Result<Vec<TensorSample>> {
    let mut out = Vec::with_capacity(ds.samples.len());
    for (i, meta) in ds.samples.iter().enumerate() {
        let loaded = ds.load_sample(i)?;
        let mut inputs = Vec::new();
        if model.needs_tactile() {
            let stream = loaded.tactile.as_ref().ok_or_else(|| {
                AppError::Validation(format!("sample {} has no tactile stream", meta.name))
            })?;
            inputs.push(prep_stream(stream, prep, false)?);
        }
        if model.needs_vision() {
            let stream = loaded.vision.as_ref().ok_or_else(|| {
                AppError::Validation(format!("sample {} has no vision stream", meta.name))
            })?;
            inputs.push(prep_stream(stream, prep, prep.merge_polarity)?);
        }
        out.push(TensorSample {
            inputs,
            label: loaded.label,
        });
    }
    Ok(out)
}

/// Synthetic dataset families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Each class owns a disjoint block of steadily firing channels.
    Blocks,
    /// Class evidence only in an early window, drowned later by shared
    /// distractor channels.
    Early,
    /// All classes fire the same channels; classes differ by onset time.
    SlipToy,
}

impl std::str::FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "blocks" => Ok(Preset::Blocks),
            "early" => Ok(Preset::Early),
            "slip-toy" => Ok(Preset::SlipToy),
            other => Err(format!("unknown preset {other:?}, expected blocks, early or slip-toy")),
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Preset::Blocks => "blocks",
            Preset::Early => "early",
            Preset::SlipToy => "slip-toy",
        })
    }
}

/// Everything a synthetic generation run needs. The CLI surfaces these as
/// flags with preset-appropriate defaults.
#[derive(Debug, Clone)]
pub struct GenerateParams {
    pub preset: Preset,
    pub classes: usize,
    pub per_class: usize,
    pub duration_us: u64,
    pub seed: u64,
    /// Channels per class block (`blocks`, `early`) or shared channels
    /// (`slip-toy`).
    pub block: usize,
    pub active_hz: f64,
    /// Idle-channel rate for `blocks`.
    pub background_hz: f64,
    /// Shared always-on channels for `early`.
    pub distractors: usize,
    pub distractor_hz: f64,
    /// End of the informative window for `early`.
    pub active_until_us: u64,
    /// Per-class onset shift for `slip-toy`.
    pub stagger_us: u64,
    /// Also emit a vision stream per sample (`blocks` only).
    pub with_vision: bool,
    /// Pixel grid for generated vision streams.
    pub geometry: Geometry,
    /// Rows of the active band per class in generated vision streams.
    pub band_rows: u32,
}

impl GenerateParams {
    pub fn new(preset: Preset, seed: u64) -> GenerateParams {
        let mut p = GenerateParams {
            preset,
            classes: 2,
            per_class: 50,
            duration_us: 150_000,
            seed,
            block: 10,
            active_hz: 60.0,
            background_hz: 2.0,
            distractors: 10,
            distractor_hz: 150.0,
            active_until_us: 50_000,
            stagger_us: 30_000,
            with_vision: false,
            geometry: Geometry::new(8, 16, 2).expect("static dimensions are valid"),
            band_rows: 4,
        };
        match preset {
            Preset::Blocks => {}
            Preset::Early => {
                p.classes = 4;
                p.block = 5;
                p.active_hz = 40.0;
            }
            Preset::SlipToy => {
                p.active_hz = 150.0;
            }
        }
        p
    }
}

/// Distinct seed stream for the vision half of a sample so the two
/// modalities are not generated from identical randomness.
const VISION_SEED_SALT: u64 = 0x5649_5349_4f4e;

/// Vision analog of the block preset: class `c` fires the pixel rows
/// `[c*band_rows, (c+1)*band_rows)` of polarity plane 0, everything else
/// idles at the background rate. Bands of whole rows stay distinguishable
/// after spatial pooling, which partitions rows.
fn vision_band_profiles(
    geometry: &Geometry,
    n_classes: usize,
    band_rows: u32,
    active_hz: f64,
    background_hz: f64,
) -> Result<Vec<ClassProfile>> {
    if n_classes as u32 * band_rows > geometry.height {
        return Err(AppError::Config(format!(
            "{n_classes} classes x {band_rows} band rows exceed the {} pixel rows",
            geometry.height
        )));
    }
    let count = geometry.channel_count();
    (0..n_classes)
        .map(|c| {
            let channels = (0..count)
                .map(|ch| {
                    let (_, y, p) = geometry.decompose(ch)?;
                    let active = p == 0 && y / band_rows == c as u32;
                    Ok(if active {
                        ChannelActivity::steady(active_hz)
                    } else if background_hz > 0.0 {
                        ChannelActivity::steady(background_hz)
                    } else {
                        ChannelActivity::silent()
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ClassProfile { channels })
        })
        .collect()
}

/// Generates a dataset under `dir` (created if missing; the manifest and
/// sample directories are overwritten). Byte-identical output for equal
/// parameters and seed.
pub fn generate(dir: &Path, params: &GenerateParams) -> Result<Dataset> {
    if params.classes < 2 {
        return Err(AppError::Config("need at least 2 classes".into()));
    }
    if params.per_class == 0 {
        return Err(AppError::Config("need at least 1 sample per class".into()));
    }
    if params.with_vision && params.preset != Preset::Blocks {
        return Err(AppError::Config("vision streams are only generated for the blocks preset".into()));
    }

    let tact_profiles: Vec<ClassProfile> = match params.preset {
        Preset::Blocks => block_rate_profiles(params.classes, params.block, params.active_hz, params.background_hz),
        Preset::Early => early_window_profiles(
            params.classes,
            params.block,
            params.distractors,
            params.active_hz,
            params.distractor_hz,
            params.active_until_us,
        ),
        Preset::SlipToy => onset_delay_profiles(params.classes, params.block, params.active_hz, params.stagger_us),
    };
    let tact = generate_labeled(
        &tact_profiles,
        params.per_class,
        params.duration_us,
        Modality::Tactile,
        None,
        params.seed,
    )?;
    let vis = if params.with_vision {
        let profiles = vision_band_profiles(
            &params.geometry,
            params.classes,
            params.band_rows,
            params.active_hz,
            params.background_hz,
        )?;
        Some(generate_labeled(
            &profiles,
            params.per_class,
            params.duration_us,
            Modality::Vision,
            Some(params.geometry),
            params.seed ^ VISION_SEED_SALT,
        )?)
    } else {
        None
    };

    std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let mut metas = Vec::with_capacity(tact.len());
    for (i, (stream, label)) in tact.iter().enumerate() {
        let name = format!("sample_{i:04}");
        let sample_dir = dir.join(&name);
        std::fs::create_dir_all(&sample_dir).map_err(|e| AppError::io(&sample_dir, e))?;
        evst::write_stream(&sample_dir.join("tact.evst"), stream)?;
        if let Some(vis) = &vis {
            evst::write_stream(&sample_dir.join("vis.evst"), &vis[i].0)?;
        }
        let label_path = sample_dir.join("label.txt");
        std::fs::write(&label_path, format!("{label}\n")).map_err(|e| AppError::io(&label_path, e))?;
        metas.push(SampleMeta {
            name: name.clone(),
            label: *label,
            object: params.preset.to_string(),
            condition: format!("class{label}"),
            recording: name,
        });
    }
    write_manifest(dir, &metas)?;
    Ok(Dataset {
        dir: dir.to_path_buf(),
        samples: metas,
    })
}
