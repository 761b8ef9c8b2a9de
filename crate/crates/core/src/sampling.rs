//! Random camera parameters for dataset generation.
//!
//! Focal length (mm) is a shifted lognormal, the horizon midpoint is normal,
//! roll is a two-component Cauchy mixture, the aspect ratio is categorical and
//! yaw is uniform. Draws whose calibration falls outside the label-codec
//! ranges are rejected and redrawn.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::camera::CameraCalibration;
use crate::codec::{ParamKind, OFFSET_RANGE, VFOV_RANGE};
use crate::error::{Error, Result};

/// Give up on rejection sampling after this many consecutive rejections.
pub const MAX_ATTEMPTS: usize = 10_000;

/// The generator used for every seeded stream in the toolkit.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `loc + scale * exp(shape * Z)` with `Z` standard normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftedLogNormal {
    pub shape: f64,
    pub loc: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalParams {
    pub mean: f64,
    pub std: f64,
}

/// Mixture of zero-centered Cauchy distributions. Weights are relative and
/// normalized before use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyMixture {
    pub location: f64,
    pub scales: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CauchyMixture {
    pub fn normalized_weights(&self) -> Vec<f64> {
        let total: f64 = self.weights.iter().sum();
        self.weights.iter().map(|w| w / total).collect()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.normalized_weights()
            .iter()
            .zip(&self.scales)
            .map(|(w, g)| w * (0.5 + ((x - self.location) / g).atan() / PI))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AspectChoice {
    pub w: u32,
    pub h: u32,
    pub p: f64,
}

impl AspectChoice {
    pub fn ratio(&self) -> f64 {
        self.w as f64 / self.h as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub focal_mm_lognormal: ShiftedLogNormal,
    pub horizon_normal: NormalParams,
    pub roll_cauchy: CauchyMixture,
    pub aspect_ratios: Vec<AspectChoice>,
    pub crops_per_pano: usize,
    pub out_size: u32,
    pub sensor_height_mm: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            focal_mm_lognormal: ShiftedLogNormal {
                shape: 0.8,
                loc: 14.0,
                scale: 17.0,
            },
            horizon_normal: NormalParams {
                mean: 0.046,
                std: 0.6,
            },
            roll_cauchy: CauchyMixture {
                location: 0.0,
                scales: vec![0.001, 0.1],
                weights: vec![0.33, 0.66],
            },
            aspect_ratios: vec![
                AspectChoice { w: 1, h: 1, p: 0.1 },
                AspectChoice { w: 5, h: 4, p: 0.1 },
                AspectChoice { w: 4, h: 3, p: 0.6 },
                AspectChoice { w: 3, h: 2, p: 0.1 },
                AspectChoice {
                    w: 16,
                    h: 9,
                    p: 0.1,
                },
            ],
            crops_per_pano: 7,
            out_size: 224,
            sensor_height_mm: 24.0,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {v}")))
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        positive("lognormal shape", self.focal_mm_lognormal.shape)?;
        positive("lognormal scale", self.focal_mm_lognormal.scale)?;
        if !self.focal_mm_lognormal.loc.is_finite() || self.focal_mm_lognormal.loc < 0.0 {
            return Err(Error::invalid(
                "lognormal loc must be finite and non-negative",
            ));
        }
        positive("horizon std", self.horizon_normal.std)?;
        if !self.horizon_normal.mean.is_finite() {
            return Err(Error::invalid("horizon mean must be finite"));
        }
        let mix = &self.roll_cauchy;
        if mix.scales.is_empty() || mix.scales.len() != mix.weights.len() {
            return Err(Error::invalid(
                "roll mixture needs one weight per scale and at least one component",
            ));
        }
        for &g in &mix.scales {
            positive("roll Cauchy scale", g)?;
        }
        for &w in &mix.weights {
            positive("roll mixture weight", w)?;
        }
        if self.aspect_ratios.is_empty() {
            return Err(Error::invalid("at least one aspect ratio is required"));
        }
        for a in &self.aspect_ratios {
            if a.w == 0 || a.h == 0 || !(a.p >= 0.0) {
                return Err(Error::invalid(format!("invalid aspect choice {a:?}")));
            }
        }
        let total: f64 = self.aspect_ratios.iter().map(|a| a.p).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "aspect probabilities sum to {total}, expected 1"
            )));
        }
        if self.crops_per_pano == 0 {
            return Err(Error::invalid("crops_per_pano must be at least 1"));
        }
        if self.out_size == 0 {
            return Err(Error::invalid("out_size must be at least 1"));
        }
        positive("sensor height", self.sensor_height_mm)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: SamplingConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn focal_mm_to_vfov(focal_mm: f64, sensor_height_mm: f64) -> Result<f64> {
    positive("focal length", focal_mm)?;
    positive("sensor height", sensor_height_mm)?;
    Ok(2.0 * (sensor_height_mm / (2.0 * focal_mm)).atan())
}

/// One draw before range rejection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawDraw {
    pub focal_mm: f64,
    pub midpoint: f64,
    pub roll: f64,
    pub roll_component: usize,
    pub aspect: AspectChoice,
    pub yaw: f64,
}

/// An accepted draw with its derived calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraSample {
    pub focal_mm: f64,
    pub calibration: CameraCalibration,
    pub aspect: AspectChoice,
    pub yaw: f64,
}

impl CameraSample {
    pub fn pitch(&self) -> f64 {
        self.calibration.pitch()
    }
}

#[derive(Debug, Clone)]
pub struct CameraSampler {
    config: SamplingConfig,
    roll_weights: Vec<f64>,
    roll_components: Vec<Cauchy<f64>>,
}

impl CameraSampler {
    pub fn new(config: SamplingConfig) -> Result<Self> {
        config.validate()?;
        let roll_components = config
            .roll_cauchy
            .scales
            .iter()
            .map(|&g| {
                Cauchy::new(config.roll_cauchy.location, g)
                    .map_err(|e| Error::invalid(format!("roll Cauchy: {e}")))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            roll_weights: config.roll_cauchy.normalized_weights(),
            roll_components,
            config,
        })
    }

    pub fn config(&self) -> &SamplingConfig {
        &self.config
    }

    fn pick<R: Rng + ?Sized>(rng: &mut R, probs: impl Iterator<Item = f64>) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = 0;
        for (i, p) in probs.enumerate() {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
        last
    }

    /// Draw every parameter once, with no range checks.
    pub fn draw_raw<R: Rng + ?Sized>(&self, rng: &mut R) -> RawDraw {
        let ln = &self.config.focal_mm_lognormal;
        let z: f64 = StandardNormal.sample(rng);
        let focal_mm = ln.loc + ln.scale * (ln.shape * z).exp();

        let hn = &self.config.horizon_normal;
        let zm: f64 = StandardNormal.sample(rng);
        let midpoint = hn.mean + hn.std * zm;

        let roll_component = Self::pick(rng, self.roll_weights.iter().copied());
        let roll = self.roll_components[roll_component].sample(rng);

        let ai = Self::pick(rng, self.config.aspect_ratios.iter().map(|a| a.p));
        let aspect = self.config.aspect_ratios[ai];

        let yaw = rng.random_range(-PI..PI);
        RawDraw {
            focal_mm,
            midpoint,
            roll,
            roll_component,
            aspect,
            yaw,
        }
    }

    /// Calibration for a raw draw, or `None` if it falls outside the codec
    /// ranges.
    pub fn accept(&self, raw: &RawDraw) -> Option<CameraCalibration> {
        if !ParamKind::Slope.contains(raw.roll) {
            return None;
        }
        let vfov = focal_mm_to_vfov(raw.focal_mm, self.config.sensor_height_mm).ok()?;
        if !(VFOV_RANGE.0..=VFOV_RANGE.1).contains(&vfov) {
            return None;
        }
        let offset = raw.midpoint * raw.roll.cos();
        if !(OFFSET_RANGE.0..=OFFSET_RANGE.1).contains(&offset) {
            return None;
        }
        CameraCalibration::new(vfov, raw.midpoint, raw.roll).ok()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CameraSample> {
        for _ in 0..MAX_ATTEMPTS {
            let raw = self.draw_raw(rng);
            if let Some(calibration) = self.accept(&raw) {
                return Ok(CameraSample {
                    focal_mm: raw.focal_mm,
                    calibration,
                    aspect: raw.aspect,
                    yaw: raw.yaw,
                });
            }
        }
        Err(Error::SamplingExhausted(MAX_ATTEMPTS))
    }
}

pub fn sample_camera_params<R: Rng + ?Sized>(
    rng: &mut R,
    config: &SamplingConfig,
) -> Result<CameraSample> {
    CameraSampler::new(config.clone())?.sample(rng)
}
