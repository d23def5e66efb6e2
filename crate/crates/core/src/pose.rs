//! Object-pose analysis: rotation angles and motion-onset detection.
//!
//! A pose trace is a sequence of position + orientation frames from a
//! tracker. Rotational slip shows up as the angle between each frame's
//! orientation and the starting orientation; onsets (lift, slip) are found
//! by testing when a series climbs clear of its own early baseline.

use alloc::vec::Vec;

use crate::error::CoreError;
use crate::math;

/// Unit tolerance for quaternion norms.
const UNIT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Quaternion {
        Quaternion { w, x, y, z }
    }

    pub fn identity() -> Quaternion {
        Quaternion::new(1.0, 0.0, 0.0, 0.0)
    }

    pub fn norm(&self) -> f64 {
        math::sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)
    }

    pub fn normalized(&self) -> Result<Quaternion, CoreError> {
        let n = self.norm();
        if !(n > UNIT_TOL) || !n.is_finite() {
            return Err(CoreError::NonUnitQuaternion { norm: n });
        }
        Ok(Quaternion::new(self.w / n, self.x / n, self.y / n, self.z / n))
    }

    pub fn dot(&self, other: &Quaternion) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    fn check_unit(&self) -> Result<(), CoreError> {
        let n = self.norm();
        if math::abs(n - 1.0) > UNIT_TOL {
            return Err(CoreError::NonUnitQuaternion { norm: n });
        }
        Ok(())
    }
}

/// Geodesic rotation angle between two unit orientations, in radians within
/// `[0, pi]`: `arccos(2 * <a, b>^2 - 1)`. The squared inner product makes
/// the result invariant to each quaternion's sign, and the argument is
/// clamped to `[-1, 1]` so nearly-identical orientations cannot produce NaN.
pub fn rotation_angle_between(a: &Quaternion, b: &Quaternion) -> Result<f64, CoreError> {
    a.check_unit()?;
    b.check_unit()?;
    let d = a.dot(b);
    let mut c = 2.0 * d * d - 1.0;
    if c > 1.0 {
        c = 1.0;
    } else if c < -1.0 {
        c = -1.0;
    }
    Ok(math::acos(c))
}

/// One tracked frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseFrame {
    pub timestamp_s: f64,
    pub position: [f64; 3],
    pub orientation: Quaternion,
}

/// A time-ordered pose recording.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseTrace {
    pub frames: Vec<PoseFrame>,
}

impl PoseTrace {
    pub fn new(frames: Vec<PoseFrame>) -> Result<PoseTrace, CoreError> {
        for (i, pair) in frames.windows(2).enumerate() {
            if pair[1].timestamp_s < pair[0].timestamp_s {
                return Err(CoreError::UnsortedEvents { index: i + 1 });
            }
        }
        Ok(PoseTrace { frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Rotation angle of every frame relative to frame 0.
    pub fn angle_series(&self) -> Result<Vec<f64>, CoreError> {
        let first = match self.frames.first() {
            Some(f) => f.orientation,
            None => return Ok(Vec::new()),
        };
        self.frames
            .iter()
            .map(|f| rotation_angle_between(&first, &f.orientation))
            .collect()
    }

    /// Euclidean displacement of every frame from frame 0's position.
    pub fn displacement_series(&self) -> Vec<f64> {
        let first = match self.frames.first() {
            Some(f) => f.position,
            None => return Vec::new(),
        };
        self.frames
            .iter()
            .map(|f| {
                let dx = f.position[0] - first[0];
                let dy = f.position[1] - first[1];
                let dz = f.position[2] - first[2];
                math::sqrt(dx * dx + dy * dy + dz * dz)
            })
            .collect()
    }

    /// Mean frame rate implied by the first and last timestamps.
    pub fn frame_rate_hz(&self) -> Option<f64> {
        if self.frames.len() < 2 {
            return None;
        }
        let span = self.frames.last()?.timestamp_s - self.frames.first()?.timestamp_s;
        if span <= 0.0 {
            return None;
        }
        Some((self.frames.len() - 1) as f64 / span)
    }
}

/// Baseline-exceedance onset detector settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnsetParams {
    /// Frames at the start that define the resting distribution.
    pub baseline_len: usize,
    /// Fraction of baseline frames a candidate must exceed.
    pub quantile: f64,
    /// Consecutive frames the exceedance must hold.
    pub persistence: usize,
}

impl Default for OnsetParams {
    fn default() -> Self {
        OnsetParams {
            baseline_len: 120,
            quantile: 0.98,
            persistence: 12,
        }
    }
}

impl OnsetParams {
    fn validate(&self) -> Result<(), CoreError> {
        if self.baseline_len == 0 {
            return Err(CoreError::InvalidConfig("baseline length must be positive"));
        }
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            return Err(CoreError::InvalidConfig("quantile must lie in (0, 1)"));
        }
        if self.persistence == 0 {
            return Err(CoreError::InvalidConfig("persistence must be positive"));
        }
        Ok(())
    }
}

/// First frame index at which the series breaks clear of its own baseline.
///
/// A frame `j >= baseline_len` exceeds the baseline when more than
/// `quantile` of the baseline frames are strictly below `series[j]`. The
/// onset is the first `j` whose exceedance holds for `persistence`
/// consecutive frames (or to the series end, if it ends sooner). Returns
/// `Ok(None)` for a series that never leaves its baseline.
pub fn detect_onset(series: &[f64], params: &OnsetParams) -> Result<Option<usize>, CoreError> {
    params.validate()?;
    if series.len() < params.baseline_len {
        return Err(CoreError::SeriesTooShort {
            len: series.len(),
            baseline_len: params.baseline_len,
        });
    }
    let baseline = &series[..params.baseline_len];
    // smallest count with count / baseline_len > quantile
    let needed = (params.quantile * params.baseline_len as f64) as usize + 1;
    let exceeds = |v: f64| baseline.iter().filter(|&&b| b < v).count() >= needed;
    let mut streak = 0usize;
    let mut candidate = 0usize;
    for j in params.baseline_len..series.len() {
        if exceeds(series[j]) {
            if streak == 0 {
                candidate = j;
            }
            streak += 1;
            if streak >= params.persistence || j + 1 == series.len() {
                return Ok(Some(candidate));
            }
        } else {
            streak = 0;
        }
    }
    Ok(None)
}

/// A detected lift/slip pair on one recording.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlipAnnotation {
    /// Frame where the object's displacement leaves its baseline.
    pub lift_frame: usize,
    /// Frame where the rotation angle leaves its baseline.
    pub slip_frame: usize,
    /// `(slip_frame - lift_frame) / frame_rate`, in seconds.
    pub lag_s: f64,
}

/// Runs the onset detector on a displacement series (lift) and an angle
/// series (rotational slip) and reports the lag between the two onsets.
/// Returns `Ok(None)` unless both onsets are found.
pub fn annotate_slip(
    displacement: &[f64],
    angle: &[f64],
    params: &OnsetParams,
    frame_rate_hz: f64,
) -> Result<Option<SlipAnnotation>, CoreError> {
    if !(frame_rate_hz > 0.0) || !frame_rate_hz.is_finite() {
        return Err(CoreError::InvalidConfig("frame rate must be positive and finite"));
    }
    let lift = detect_onset(displacement, params)?;
    let slip = detect_onset(angle, params)?;
    match (lift, slip) {
        (Some(lift_frame), Some(slip_frame)) => Ok(Some(SlipAnnotation {
            lift_frame,
            slip_frame,
            lag_s: (slip_frame as f64 - lift_frame as f64) / frame_rate_hz,
        })),
        _ => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit_quaternion(rng: &mut ChaCha8Rng) -> Quaternion {
        loop {
            let q = Quaternion::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let n = q.norm();
            if n > 0.1 && n <= 1.0 {
                return q.normalized().unwrap();
            }
        }
    }

    fn rotation_matrix(q: &Quaternion) -> [[f64; 3]; 3] {
        let (w, x, y, z) = (q.w, q.x, q.y, q.z);
        [
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ]
    }

    /// Relative rotation angle via matrices: angle of Ra^T * Rb from its trace.
    fn oracle_angle(a: &Quaternion, b: &Quaternion) -> f64 {
        let (ra, rb) = (rotation_matrix(a), rotation_matrix(b));
        let mut trace = 0.0;
        for i in 0..3 {
            for k in 0..3 {
                trace += ra[k][i] * rb[k][i]; // (Ra^T Rb)[i][i]
            }
        }
        let c = ((trace - 1.0) / 2.0).clamp(-1.0, 1.0);
        c.acos()
    }

    #[test]
    fn angle_matches_rotation_matrix_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for i in 0..100 {
            let a = random_unit_quaternion(&mut rng);
            let b = random_unit_quaternion(&mut rng);
            let got = rotation_angle_between(&a, &b).unwrap();
            let want = oracle_angle(&a, &b);
            assert!((got - want).abs() < 1e-9, "pair {i}: {got} vs {want}");
        }
    }

    #[test]
    fn angle_ignores_quaternion_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let a = random_unit_quaternion(&mut rng);
            let b = random_unit_quaternion(&mut rng);
            let neg_b = Quaternion::new(-b.w, -b.x, -b.y, -b.z);
            let t1 = rotation_angle_between(&a, &b).unwrap();
            let t2 = rotation_angle_between(&a, &neg_b).unwrap();
            assert!((t1 - t2).abs() < 1e-12);
            // and symmetric in its arguments
            let t3 = rotation_angle_between(&b, &a).unwrap();
            assert!((t1 - t3).abs() < 1e-12);
        }
    }

    #[test]
    fn angle_extremes() {
        let id = Quaternion::identity();
        assert_eq!(rotation_angle_between(&id, &id).unwrap(), 0.0);
        // half-turn about z
        let half = Quaternion::new(0.0, 0.0, 0.0, 1.0);
        let got = rotation_angle_between(&id, &half).unwrap();
        assert!((got - core::f64::consts::PI).abs() < 1e-12);
        // quarter-turn about x
        let s = (0.5f64).sqrt();
        let quarter = Quaternion::new(s, s, 0.0, 0.0);
        let got = rotation_angle_between(&id, &quarter).unwrap();
        assert!((got - core::f64::consts::FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_unit_quaternions() {
        let id = Quaternion::identity();
        let bad = Quaternion::new(2.0, 0.0, 0.0, 0.0);
        assert!(matches!(
            rotation_angle_between(&id, &bad),
            Err(CoreError::NonUnitQuaternion { .. })
        ));
        assert!(Quaternion::new(0.0, 0.0, 0.0, 0.0).normalized().is_err());
    }

    fn step_series(onset: usize, total: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..total)
            .map(|i| {
                let noise = rng.gen_range(-0.001..0.001);
                if i < onset {
                    noise
                } else {
                    0.05 + 0.01 * (i - onset) as f64 + noise
                }
            })
            .collect()
    }

    #[test]
    fn onset_found_within_one_frame_over_many_traces() {
        let params = OnsetParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for trial in 0..100 {
            let onset = 130 + (trial % 60);
            let series = step_series(onset, 400, &mut rng);
            let got = detect_onset(&series, &params).unwrap().expect("onset exists");
            assert!(
                got.abs_diff(onset) <= 1,
                "trial {trial}: detected {got}, true {onset}"
            );
        }
    }

    #[test]
    fn flat_series_has_no_onset() {
        let params = OnsetParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let series: Vec<f64> = (0..400).map(|_| rng.gen_range(-0.001..0.001)).collect();
        assert_eq!(detect_onset(&series, &params).unwrap(), None);
    }

    #[test]
    fn short_blip_is_rejected_by_persistence() {
        let params = OnsetParams {
            baseline_len: 20,
            quantile: 0.9,
            persistence: 5,
        };
        let mut series = alloc::vec![0.0; 100];
        // 3-frame spike: shorter than persistence
        for v in series.iter_mut().skip(40).take(3) {
            *v = 1.0;
        }
        assert_eq!(detect_onset(&series, &params).unwrap(), None);
        // 5-frame spike passes
        for v in series.iter_mut().skip(60).take(5) {
            *v = 1.0;
        }
        assert_eq!(detect_onset(&series, &params).unwrap(), Some(60));
    }

    #[test]
    fn exceedance_survives_to_series_end() {
        // onset near the end: fewer than `persistence` frames remain but all
        // of them exceed, so the onset still counts
        let params = OnsetParams {
            baseline_len: 20,
            quantile: 0.9,
            persistence: 10,
        };
        let mut series = alloc::vec![0.0; 50];
        for v in series.iter_mut().skip(46) {
            *v = 1.0;
        }
        assert_eq!(detect_onset(&series, &params).unwrap(), Some(46));
    }

    #[test]
    fn short_series_is_an_error() {
        let params = OnsetParams::default();
        let series = alloc::vec![0.0; 60];
        assert!(matches!(
            detect_onset(&series, &params),
            Err(CoreError::SeriesTooShort { len: 60, baseline_len: 120 })
        ));
    }

    #[test]
    fn slip_annotation_reports_lag() {
        let params = OnsetParams {
            baseline_len: 20,
            quantile: 0.9,
            persistence: 5,
        };
        let mut displacement = alloc::vec![0.0; 200];
        for (i, v) in displacement.iter_mut().enumerate().skip(50) {
            *v = 0.1 * (i - 49) as f64;
        }
        let mut angle = alloc::vec![0.0; 200];
        for (i, v) in angle.iter_mut().enumerate().skip(80) {
            *v = 0.02 * (i - 79) as f64;
        }
        let got = annotate_slip(&displacement, &angle, &params, 120.0)
            .unwrap()
            .expect("both onsets present");
        assert_eq!(got.lift_frame, 50);
        assert_eq!(got.slip_frame, 80);
        assert!((got.lag_s - 30.0 / 120.0).abs() < 1e-12);
        // angle flat -> no annotation
        let flat = alloc::vec![0.0; 200];
        assert_eq!(annotate_slip(&displacement, &flat, &params, 120.0).unwrap(), None);
    }

    #[test]
    fn trace_series_and_frame_rate() {
        let s = (0.5f64).sqrt();
        let frames = alloc::vec![
            PoseFrame {
                timestamp_s: 0.0,
                position: [0.0, 0.0, 0.0],
                orientation: Quaternion::identity(),
            },
            PoseFrame {
                timestamp_s: 0.5,
                position: [3.0, 0.0, 4.0],
                orientation: Quaternion::new(s, s, 0.0, 0.0),
            },
        ];
        let trace = PoseTrace::new(frames).unwrap();
        assert_eq!(trace.displacement_series(), alloc::vec![0.0, 5.0]);
        let angles = trace.angle_series().unwrap();
        assert_eq!(angles[0], 0.0);
        assert!((angles[1] - core::f64::consts::FRAC_PI_2).abs() < 1e-9);
        assert_eq!(trace.frame_rate_hz(), Some(2.0));
    }

    #[test]
    fn trace_rejects_unsorted_frames() {
        let frames = alloc::vec![
            PoseFrame {
                timestamp_s: 1.0,
                position: [0.0; 3],
                orientation: Quaternion::identity(),
            },
            PoseFrame {
                timestamp_s: 0.5,
                position: [0.0; 3],
                orientation: Quaternion::identity(),
            },
        ];
        assert!(PoseTrace::new(frames).is_err());
    }
}
