//! Human sensitivity to calibration errors: distortion sampling, object
//! placement compensation, study records and a kNN sensitivity function.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{Point2, Vector3};
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::camera::{CameraCalibration, ImageDims, PlacedCamera, DEFAULT_CAMERA_HEIGHT_M};
use crate::dataset::{read_jsonl, write_jsonl};
use crate::error::{Error, Result};
use crate::sampling::{CameraSampler, SamplingConfig, MAX_ATTEMPTS};

pub const DEFAULT_K: usize = 15;

/// Tolerance of pitch, in image units, used to scale the kNN metric.
pub const PITCH_SCALE_UNITS: f64 = 0.2;
pub const ROLL_SCALE_DEG: f64 = 12.0;
pub const VFOV_SCALE_DEG: f64 = 15.0;

/// Magnitude ranges of sampled distortions, in degrees.
pub const PITCH_DISTORTION_DEG: (f64, f64) = (1.0, 30.0);
pub const ROLL_DISTORTION_DEG: (f64, f64) = (0.5, 20.0);
pub const VFOV_DISTORTION_DEG: (f64, f64) = (5.0, 55.0);

/// Map the percentage of participants who picked the ground truth (50 is
/// chance, 100 is certain detection) onto a 0-100 sensitivity.
pub fn sensitivity_from_pct(pct: f64) -> Result<f64> {
    if !(0.0..=100.0).contains(&pct) {
        return Err(Error::invalid(format!(
            "percentage must lie in [0, 100], got {pct}"
        )));
    }
    Ok(((pct - 50.0) / 50.0 * 100.0).clamp(0.0, 100.0))
}

/// One point of the sensitivity function's domain.
///
/// Pitch is expressed through the horizon midpoint in image units; roll and
/// field of view in degrees. Errors are distorted minus ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityQuery {
    pub pitch_value: f64,
    pub pitch_error: f64,
    pub roll_value_deg: f64,
    pub roll_error_deg: f64,
    pub vfov_value_deg: f64,
    pub vfov_error_deg: f64,
}

impl SensitivityQuery {
    pub fn new(values: [f64; 6]) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sensitivity query values must be finite"));
        }
        let [pitch_value, pitch_error, roll_value_deg, roll_error_deg, vfov_value_deg, vfov_error_deg] =
            values;
        Ok(Self {
            pitch_value,
            pitch_error,
            roll_value_deg,
            roll_error_deg,
            vfov_value_deg,
            vfov_error_deg,
        })
    }

    pub fn from_pair(gt: &CameraCalibration, distorted: &CameraCalibration) -> Self {
        Self {
            pitch_value: gt.midpoint(),
            pitch_error: distorted.midpoint() - gt.midpoint(),
            roll_value_deg: gt.roll().to_degrees(),
            roll_error_deg: (distorted.roll() - gt.roll()).to_degrees(),
            vfov_value_deg: gt.vfov().to_degrees(),
            vfov_error_deg: (distorted.vfov() - gt.vfov()).to_degrees(),
        }
    }

    pub fn as_array(&self) -> [f64; 6] {
        [
            self.pitch_value,
            self.pitch_error,
            self.roll_value_deg,
            self.roll_error_deg,
            self.vfov_value_deg,
            self.vfov_error_deg,
        ]
    }

    /// Coordinates in the metric space where each parameter is divided by
    /// its tolerance.
    pub fn scaled(&self) -> [f64; 6] {
        [
            self.pitch_value / PITCH_SCALE_UNITS,
            self.pitch_error / PITCH_SCALE_UNITS,
            self.roll_value_deg / ROLL_SCALE_DEG,
            self.roll_error_deg / ROLL_SCALE_DEG,
            self.vfov_value_deg / VFOV_SCALE_DEG,
            self.vfov_error_deg / VFOV_SCALE_DEG,
        ]
    }
}

/// Squared Euclidean distance between two scaled query vectors.
pub fn scaled_distance_sq(a: &[f64; 6], b: &[f64; 6]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Aggregated outcome of one ground-truth/distorted comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub gt: CameraCalibration,
    pub distorted: CameraCalibration,
    pub pct_chose_gt: f64,
    pub n_votes: u32,
}

impl StudyRecord {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=100.0).contains(&self.pct_chose_gt) {
            return Err(Error::invalid(format!(
                "pct_chose_gt must lie in [0, 100], got {}",
                self.pct_chose_gt
            )));
        }
        if self.n_votes == 0 {
            return Err(Error::invalid("n_votes must be at least 1"));
        }
        Ok(())
    }

    pub fn query(&self) -> SensitivityQuery {
        SensitivityQuery::from_pair(&self.gt, &self.distorted)
    }
}

pub fn load_study(path: &Path) -> Result<Vec<StudyRecord>> {
    read_jsonl(path, StudyRecord::validate)
}

pub fn save_study(path: &Path, records: &[StudyRecord]) -> Result<()> {
    for r in records {
        r.validate()?;
    }
    write_jsonl(path, records)
}

/// Nearest-neighbor sensitivity function over a fixed set of study records.
#[derive(Debug, Clone)]
pub struct SensitivityModel {
    points: Vec<[f64; 6]>,
    pcts: Vec<f64>,
    k: usize,
}

impl SensitivityModel {
    pub fn new(records: &[StudyRecord], k: usize) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::invalid(
                "sensitivity model needs at least one record",
            ));
        }
        if k == 0 || k > records.len() {
            return Err(Error::invalid(format!(
                "k must lie in [1, {}], got {k}",
                records.len()
            )));
        }
        for r in records {
            r.validate()?;
        }
        Ok(Self {
            points: records.iter().map(|r| r.query().scaled()).collect(),
            pcts: records.iter().map(|r| r.pct_chose_gt).collect(),
            k,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices of the `k` nearest records, nearest first. Equal distances
    /// are ordered by record index.
    pub fn neighbors(&self, query: &SensitivityQuery) -> Vec<usize> {
        let q = query.scaled();
        let mut cand: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (scaled_distance_sq(&q, p), i))
            .collect();
        let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < cand.len() {
            cand.select_nth_unstable_by(self.k - 1, by_dist);
            cand.truncate(self.k);
        }
        cand.sort_unstable_by(by_dist);
        cand.into_iter().map(|(_, i)| i).collect()
    }

    /// Mean percentage of the nearest records, mapped to sensitivity.
    pub fn sensitivity(&self, query: &SensitivityQuery) -> f64 {
        let idx = self.neighbors(query);
        let mean = idx.iter().map(|&i| self.pcts[i]).sum::<f64>() / idx.len() as f64;
        // Records are validated, so the mean stays inside [0, 100].
        sensitivity_from_pct(mean.clamp(0.0, 100.0)).unwrap_or(0.0)
    }
}

pub fn knn_sensitivity(query: &SensitivityQuery, records: &[StudyRecord], k: usize) -> Result<f64> {
    Ok(SensitivityModel::new(records, k)?.sensitivity(query))
}

/// Which calibration parameters a distortion perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ActiveParams {
    pub pitch: bool,
    pub roll: bool,
    pub vfov: bool,
}

impl ActiveParams {
    pub const ALL: ActiveParams = ActiveParams {
        pitch: true,
        roll: true,
        vfov: true,
    };

    pub fn is_empty(&self) -> bool {
        !(self.pitch || self.roll || self.vfov)
    }
}

impl FromStr for ActiveParams {
    type Err = Error;

    /// Comma-separated subset of `pitch`, `roll`, `vfov`, or `all`.
    fn from_str(s: &str) -> Result<Self> {
        let mut out = ActiveParams::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.to_ascii_lowercase().as_str() {
                "pitch" => out.pitch = true,
                "roll" => out.roll = true,
                "vfov" | "fov" => out.vfov = true,
                "all" => out = ActiveParams::ALL,
                other => return Err(Error::invalid(format!("unknown parameter '{other}'"))),
            }
        }
        Ok(out)
    }
}

impl fmt::Display for ActiveParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [
            (self.pitch, "pitch"),
            (self.roll, "roll"),
            (self.vfov, "vfov"),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, n)| *n)
        .collect();
        f.write_str(&names.join(","))
    }
}

/// Signed perturbation of each parameter in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionSpec {
    pub d_pitch_deg: f64,
    pub d_roll_deg: f64,
    pub d_vfov_deg: f64,
    pub active: ActiveParams,
}

impl DistortionSpec {
    pub fn zero() -> Self {
        Self {
            d_pitch_deg: 0.0,
            d_roll_deg: 0.0,
            d_vfov_deg: 0.0,
            active: ActiveParams::default(),
        }
    }
}

fn signed_uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    let magnitude = lo + (hi - lo) * rng.random::<f64>();
    if rng.random::<bool>() {
        magnitude
    } else {
        -magnitude
    }
}

/// Draw a distortion: each active parameter gets a uniform magnitude from its
/// range and a fair random sign. Parameters are drawn in the order pitch,
/// roll, vfov.
pub fn sample_distortion<R: Rng + ?Sized>(
    rng: &mut R,
    active: ActiveParams,
) -> Result<DistortionSpec> {
    if active.is_empty() {
        return Err(Error::invalid("at least one parameter must be distorted"));
    }
    let mut spec = DistortionSpec::zero();
    spec.active = active;
    if active.pitch {
        spec.d_pitch_deg = signed_uniform(rng, PITCH_DISTORTION_DEG);
    }
    if active.roll {
        spec.d_roll_deg = signed_uniform(rng, ROLL_DISTORTION_DEG);
    }
    if active.vfov {
        spec.d_vfov_deg = signed_uniform(rng, VFOV_DISTORTION_DEG);
    }
    Ok(spec)
}

/// Calibration obtained by adding the distortion to the camera angles.
pub fn apply_distortion(
    gt: &CameraCalibration,
    spec: &DistortionSpec,
) -> Result<CameraCalibration> {
    CameraCalibration::from_angles(
        gt.vfov() + spec.d_vfov_deg.to_radians(),
        gt.pitch() + spec.d_pitch_deg.to_radians(),
        gt.roll() + spec.d_roll_deg.to_radians(),
    )
}

/// Draw distortions until one yields a valid calibration.
pub fn sample_valid_distortion<R: Rng + ?Sized>(
    rng: &mut R,
    active: ActiveParams,
    gt: &CameraCalibration,
) -> Result<(DistortionSpec, CameraCalibration)> {
    for _ in 0..MAX_ATTEMPTS {
        let spec = sample_distortion(rng, active)?;
        if let Ok(c) = apply_distortion(gt, &spec) {
            return Ok((spec, c));
        }
    }
    Err(Error::SamplingExhausted(MAX_ATTEMPTS))
}

/// How the object scale is adjusted when rendering under a distorted camera.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompensationRule {
    /// Solve for the world height that reproduces the pixel height exactly,
    /// with the object standing on the ground at the anchor.
    #[default]
    GroundExact,
    /// Multiply by the ratio of focal lengths (ground truth over distorted).
    FocalRatio,
}

impl FromStr for CompensationRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ground-exact" | "exact" => Ok(Self::GroundExact),
            "focal-ratio" => Ok(Self::FocalRatio),
            other => Err(Error::invalid(format!(
                "unknown compensation rule '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Compensation {
    pub anchor_px: Point2<f64>,
    pub scale_factor: f64,
}

/// Pixel length of a vertical segment of world height `h` standing at the
/// ground point seen through `cam`.
pub fn vertical_segment_px(cam: &PlacedCamera, base: &Vector3<f64>, h: f64) -> Result<f64> {
    let a = cam.project(base)?;
    let b = cam.project(&(base + Vector3::new(0.0, h, 0.0)))?;
    Ok((b - a).norm())
}

/// World height of an object standing at the ground point under `anchor`
/// that appears `height_px` tall.
pub fn object_height_for_pixels(
    cam: &PlacedCamera,
    anchor: Point2<f64>,
    height_px: f64,
) -> Result<f64> {
    let base = cam.unproject_to_ground(anchor)?;
    let c0 = cam.to_camera(&base);
    let up = cam.to_camera(&(base + Vector3::y())) - c0;
    let f = cam.focal_px();
    // Image displacement of the top is h * u / (c0.z + h * up.z).
    let u = (up.xy() * c0.z - c0.xy() * up.z) * (f / c0.z);
    let denom = u.norm() - height_px * up.z;
    if !(denom > 0.0) {
        return Err(Error::invalid(format!(
            "no object standing at ({}, {}) can appear {height_px} px tall",
            anchor.x, anchor.y
        )));
    }
    Ok(height_px * c0.z / denom)
}

/// Anchor pixel and scale multiplier that make an object rendered under
/// `distorted` occupy the same pixels as under `gt`. The anchor is kept.
pub fn compensate_placement(
    gt: &CameraCalibration,
    distorted: &CameraCalibration,
    anchor_px: Point2<f64>,
    apparent_height_px: f64,
    dims: ImageDims,
    rule: CompensationRule,
) -> Result<Compensation> {
    if !(apparent_height_px > 0.0) || !apparent_height_px.is_finite() {
        return Err(Error::invalid(format!(
            "apparent height must be positive, got {apparent_height_px}"
        )));
    }
    let cam_gt = PlacedCamera::new(gt, dims, DEFAULT_CAMERA_HEIGHT_M)?;
    let cam_d = PlacedCamera::new(distorted, dims, DEFAULT_CAMERA_HEIGHT_M)?;
    // Both cameras must see ground under the anchor.
    cam_gt.unproject_to_ground(anchor_px)?;
    cam_d.unproject_to_ground(anchor_px)?;
    let scale_factor = match rule {
        CompensationRule::FocalRatio => cam_gt.focal_px() / cam_d.focal_px(),
        CompensationRule::GroundExact => {
            let h_gt = object_height_for_pixels(&cam_gt, anchor_px, apparent_height_px)?;
            let h_d = object_height_for_pixels(&cam_d, anchor_px, apparent_height_px)?;
            h_d / h_gt
        }
    };
    Ok(Compensation {
        anchor_px,
        scale_factor,
    })
}

/// Smooth, made-up sensitivity surface used to generate synthetic study data.
/// Errors below about half a tolerance go unnoticed; widening the field of
/// view is tolerated more than narrowing it.
pub fn synthetic_sensitivity(q: &SensitivityQuery) -> f64 {
    let vfov_tol = if q.vfov_error_deg >= 0.0 { 30.0 } else { 18.0 };
    let z = ((q.pitch_error / 0.25).powi(2)
        + (q.roll_error_deg / 10.0).powi(2)
        + (q.vfov_error_deg / vfov_tol).powi(2))
    .sqrt();
    let excess = (z - 0.5).max(0.0);
    100.0 * (1.0 - (-0.5 * excess * excess).exp())
}

/// Synthetic study records: ground truths from the dataset sampler, random
/// distortions on random parameter subsets, and binomial votes around the
/// surface of [`synthetic_sensitivity`]. For tests and demos only.
pub fn synthetic_study<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    n_votes: u32,
) -> Result<Vec<StudyRecord>> {
    if n_votes == 0 {
        return Err(Error::invalid("n_votes must be at least 1"));
    }
    let sampler = CameraSampler::new(SamplingConfig::default())?;
    let subsets: Vec<ActiveParams> = (1u8..8)
        .map(|m| ActiveParams {
            pitch: m & 1 != 0,
            roll: m & 2 != 0,
            vfov: m & 4 != 0,
        })
        .collect();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let gt = sampler.sample(rng)?.calibration;
        let active = subsets[rng.random_range(0..subsets.len())];
        let (_, distorted) = sample_valid_distortion(rng, active, &gt)?;
        let s = synthetic_sensitivity(&SensitivityQuery::from_pair(&gt, &distorted));
        let p = 0.5 + s / 200.0;
        let votes = Binomial::new(n_votes as u64, p)
            .map_err(|e| Error::invalid(e.to_string()))?
            .sample(rng);
        out.push(StudyRecord {
            gt,
            distorted,
            pct_chose_gt: votes as f64 / n_votes as f64 * 100.0,
            n_votes,
        });
    }
    Ok(out)
}
