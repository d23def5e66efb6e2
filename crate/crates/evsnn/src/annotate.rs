//! Pose-trace file handling for slip annotation.
//!
//! Input: one CSV per recording with rows
//! `timestamp,px,py,pz,qw,qx,qy,qz` (seconds, meters, unit quaternion),
//! optional header line. Output: a single CSV with one row per recording,
//! `recording,f_lift,f_slip,lag_s` — `NA` in all three columns when either
//! onset was not found.

use std::path::Path;

use evsnn_core::{annotate_slip, OnsetParams, PoseFrame, PoseTrace, Quaternion, SlipAnnotation};

use crate::error::{AppError, Result};

pub fn read_pose_csv(path: &Path) -> Result<PoseTrace> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    let mut frames = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 8 {
            return Err(AppError::parse_at_line(
                path,
                line_no,
                format!("expected 8 fields, found {}", fields.len()),
            ));
        }
        let mut values = [0f64; 8];
        let mut bad = None;
        for (j, f) in fields.iter().enumerate() {
            match f.parse::<f64>() {
                Ok(v) => values[j] = v,
                Err(_) => {
                    bad = Some(*f);
                    break;
                }
            }
        }
        if let Some(f) = bad {
            // Only the very first line may be a non-numeric header.
            if i == 0 {
                continue;
            }
            return Err(AppError::parse_at_line(path, line_no, format!("bad number {f:?}")));
        }
        frames.push(PoseFrame {
            timestamp_s: values[0],
            position: [values[1], values[2], values[3]],
            orientation: Quaternion::new(values[4], values[5], values[6], values[7]),
        });
    }
    PoseTrace::new(frames).map_err(|e| AppError::Validation(format!("{}: {e}", path.display())))
}

/// One output row; `annotation = None` means an onset was not found.
#[derive(Debug, Clone)]
pub struct RecordingAnnotation {
    pub recording: String,
    pub annotation: Option<SlipAnnotation>,
}

/// Runs lift detection on the positional displacement series and slip
/// detection on the rotation-angle series of one trace.
pub fn annotate_trace(trace: &PoseTrace, params: &OnsetParams) -> Result<Option<SlipAnnotation>> {
    let frame_rate = trace.frame_rate_hz().ok_or_else(|| {
        AppError::Validation("trace too short to estimate a frame rate".into())
    })?;
    let displacement = trace.displacement_series();
    let angle = trace.angle_series()?;
    Ok(annotate_slip(&displacement, &angle, params, frame_rate)?)
}

pub fn write_annotations_csv(path: &Path, rows: &[RecordingAnnotation]) -> Result<()> {
    let mut text = String::from("recording,f_lift,f_slip,lag_s\n");
    for row in rows {
        match &row.annotation {
            Some(a) => text.push_str(&format!("{},{},{},{}\n", row.recording, a.lift_frame, a.slip_frame, a.lag_s)),
            None => text.push_str(&format!("{},NA,NA,NA\n", row.recording)),
        }
    }
    std::fs::write(path, text).map_err(|e| AppError::io(path, e))
}
