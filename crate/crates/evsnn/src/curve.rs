//! Accuracy-over-time curve output.
//!
//! Curves are written as CSV rows `time_s,mean_acc,std_acc`, one row per
//! evaluation cutoff, where `time_s` converts the cutoff bin count to
//! seconds under the run's bin width.

use std::path::Path;

use evsnn_core::AccuracyCurve;

use crate::error::{AppError, Result};

pub fn write_curve_csv(path: &Path, curve: &AccuracyCurve, bin_width_us: u64) -> Result<()> {
    let mut text = String::from("time_s,mean_acc,std_acc\n");
    for ((upto, mean), std) in curve.upto_bins.iter().zip(&curve.mean).zip(&curve.std) {
        let time_s = (*upto as f64) * (bin_width_us as f64) / 1e6;
        text.push_str(&format!("{time_s},{mean},{std}\n"));
    }
    std::fs::write(path, text).map_err(|e| AppError::io(path, e))
}
