//! Training configuration: `key = value` files, flag overrides, and the
//! resolution of both into concrete training settings and a loss.
//!
//! Recognized keys: `epochs`, `lr`, `batch`, `l2`, `loss` (`count` or
//! `weighted`), `beta`, `gamma`, `true_count`, `false_count`, `seed`.
//! Values given on the command line win over values from the file.

use std::path::Path;

use evsnn_core::{make_target_counts, LossSpec, RmsPropConfig, TrainSettings};

use crate::error::{AppError, Result};

/// One parsed `key = value` pair with its source line for error reports.
pub type KvPairs = Vec<(String, String, u64)>;

/// Parses `key = value` text: one pair per line, `#` comments and blank
/// lines ignored. Shared by training configs and run manifests.
pub fn parse_kv_text(path: &Path, text: &str) -> Result<KvPairs> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| AppError::parse_at_line(path, line_no, format!("expected key = value, found {line:?}")))?;
        pairs.push((key.trim().to_string(), value.trim().to_string(), line_no));
    }
    Ok(pairs)
}

pub fn read_kv_file(path: &Path) -> Result<KvPairs> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    parse_kv_text(path, &text)
}

/// Typed lookup in parsed pairs; `Ok(None)` when the key is absent.
pub fn lookup<T: std::str::FromStr>(path: &Path, pairs: &KvPairs, key: &str) -> Result<Option<T>> {
    for (k, v, line) in pairs {
        if k == key {
            return v
                .parse()
                .map(Some)
                .map_err(|_| AppError::parse_at_line(path, *line, format!("bad value {v:?} for {key}")));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Spike-count target, every step weighted equally.
    Count,
    /// Time-weighted spike placement with a decaying profile.
    Weighted,
}

impl std::str::FromStr for LossKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "count" => Ok(LossKind::Count),
            "weighted" => Ok(LossKind::Weighted),
            other => Err(format!("unknown loss {other:?}, expected count or weighted")),
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LossKind::Count => "count",
            LossKind::Weighted => "weighted",
        })
    }
}

/// Partial training configuration; `None` means "not stated here".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainOverrides {
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub batch: Option<usize>,
    pub l2: Option<f64>,
    pub loss: Option<LossKind>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub true_count: Option<u32>,
    pub false_count: Option<u32>,
    pub seed: Option<u64>,
}

impl TrainOverrides {
    pub fn from_file(path: &Path) -> Result<TrainOverrides> {
        let pairs = read_kv_file(path)?;
        for (key, _, line) in &pairs {
            const KNOWN: [&str; 10] = [
                "epochs", "lr", "batch", "l2", "loss", "beta", "gamma", "true_count", "false_count", "seed",
            ];
            if !KNOWN.contains(&key.as_str()) {
                return Err(AppError::parse_at_line(path, *line, format!("unknown key {key:?}")));
            }
        }
        Ok(TrainOverrides {
            epochs: lookup(path, &pairs, "epochs")?,
            lr: lookup(path, &pairs, "lr")?,
            batch: lookup(path, &pairs, "batch")?,
            l2: lookup(path, &pairs, "l2")?,
            loss: lookup(path, &pairs, "loss")?,
            beta: lookup(path, &pairs, "beta")?,
            gamma: lookup(path, &pairs, "gamma")?,
            true_count: lookup(path, &pairs, "true_count")?,
            false_count: lookup(path, &pairs, "false_count")?,
            seed: lookup(path, &pairs, "seed")?,
        })
    }

    /// Fields set in `self` win; gaps fall through to `base`.
    pub fn merged_over(self, base: TrainOverrides) -> TrainOverrides {
        TrainOverrides {
            epochs: self.epochs.or(base.epochs),
            lr: self.lr.or(base.lr),
            batch: self.batch.or(base.batch),
            l2: self.l2.or(base.l2),
            loss: self.loss.or(base.loss),
            beta: self.beta.or(base.beta),
            gamma: self.gamma.or(base.gamma),
            true_count: self.true_count.or(base.true_count),
            false_count: self.false_count.or(base.false_count),
            seed: self.seed.or(base.seed),
        }
    }

    /// Fills every gap with a default and validates. `horizon` (bins per
    /// sample) sizes the default spike-count targets and the weighted
    /// profile's decay.
    pub fn resolve(&self, horizon: usize) -> Result<ResolvedTraining> {
        let defaults = RmsPropConfig::default();
        let optimizer = RmsPropConfig {
            learning_rate: self.lr.unwrap_or(defaults.learning_rate),
            l2: self.l2.unwrap_or(defaults.l2),
            ..defaults
        };
        let settings = TrainSettings {
            epochs: self.epochs.unwrap_or(50),
            batch_size: self.batch.unwrap_or(8),
            optimizer,
            seed: self.seed.unwrap_or(0),
            ..TrainSettings::default()
        };

        let (default_true, default_false) = make_target_counts(horizon);
        let true_count = self.true_count.unwrap_or(default_true);
        let false_count = self.false_count.unwrap_or(default_false);
        let kind = self.loss.unwrap_or(LossKind::Count);
        let loss = match kind {
            LossKind::Count => {
                if self.beta.is_some() || self.gamma.is_some() {
                    return Err(AppError::Config(
                        "beta and gamma apply only to the weighted loss".into(),
                    ));
                }
                LossSpec::uniform(true_count, false_count)?
            }
            LossKind::Weighted => {
                if horizon == 0 {
                    return Err(AppError::Config("horizon must be positive".into()));
                }
                let gamma = self.gamma.unwrap_or(1.0);
                let beta = self
                    .beta
                    .unwrap_or(-0.9 * gamma / ((horizon * horizon) as f64));
                LossSpec::quadratic(beta, gamma, true_count, false_count, horizon)?
            }
        };
        Ok(ResolvedTraining {
            settings,
            loss,
            kind,
            true_count,
            false_count,
        })
    }
}

/// Fully resolved training run parameters.
#[derive(Debug, Clone)]
pub struct ResolvedTraining {
    pub settings: TrainSettings,
    pub loss: LossSpec,
    pub kind: LossKind,
    pub true_count: u32,
    pub false_count: u32,
}
