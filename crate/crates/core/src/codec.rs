//! Regression-as-classification targets: 256-bin discretizations of slope,
//! offset and vertical field of view, one-hot encoding, decoding, and the
//! summed KL-divergence loss over the three heads.
//!
//! Slope and offset bins are equal-probability quantiles of a zero-mean normal
//! truncated to the parameter range, so they are narrow around 0 and widen
//! toward the ends. Field-of-view bins are uniform.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const NUM_BINS: usize = 256;

/// Probability floor applied to predictions inside the log.
pub const KL_EPSILON: f64 = 1e-12;

/// Tolerance on the total mass of a [`LabelDistribution`].
pub const MASS_TOLERANCE: f64 = 1e-9;

pub const SLOPE_RANGE: (f64, f64) = (-FRAC_PI_2, FRAC_PI_2);
pub const OFFSET_RANGE: (f64, f64) = (-1.6, 1.6);
pub const VFOV_RANGE: (f64, f64) = (0.2, 1.8);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Slope,
    Offset,
    Vfov,
}

impl ParamKind {
    pub const ALL: [ParamKind; 3] = [ParamKind::Slope, ParamKind::Offset, ParamKind::Vfov];

    pub fn range(self) -> (f64, f64) {
        match self {
            ParamKind::Slope => SLOPE_RANGE,
            ParamKind::Offset => OFFSET_RANGE,
            ParamKind::Vfov => VFOV_RANGE,
        }
    }

    /// Standard deviation of the normal whose quantiles place the edges.
    /// `None` for uniform bins.
    pub fn sigma(self) -> Option<f64> {
        match self {
            ParamKind::Slope => Some(0.5),
            ParamKind::Offset => Some(1.0),
            ParamKind::Vfov => None,
        }
    }

    pub fn contains(self, value: f64) -> bool {
        let (lo, hi) = self.range();
        value >= lo && value <= hi
    }
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParamKind::Slope => "slope",
            ParamKind::Offset => "offset",
            ParamKind::Vfov => "vfov",
        })
    }
}

impl FromStr for ParamKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slope" => Ok(ParamKind::Slope),
            "offset" => Ok(ParamKind::Offset),
            "vfov" => Ok(ParamKind::Vfov),
            other => Err(Error::invalid(format!(
                "unknown parameter '{other}', expected slope, offset or vfov"
            ))),
        }
    }
}

/// Bin edges and centers for one calibration parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinSpec {
    kind: ParamKind,
    edges: Vec<f64>,
    centers: Vec<f64>,
}

impl BinSpec {
    pub fn kind(&self) -> ParamKind {
        self.kind
    }

    /// `NUM_BINS + 1` strictly increasing edges.
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn width(&self, bin: usize) -> f64 {
        self.edges[bin + 1] - self.edges[bin]
    }

    /// Index of the bin holding `value`. Values on an interior edge belong to
    /// the bin above it; the upper range bound belongs to the last bin.
    pub fn bin_index(&self, value: f64) -> Result<usize> {
        let (lo, hi) = self.kind.range();
        if !(value >= lo && value <= hi) {
            return Err(Error::invalid(format!(
                "{} value {value} outside [{lo}, {hi}]",
                self.kind
            )));
        }
        Ok(self.edges[1..NUM_BINS].partition_point(|&e| e <= value))
    }
}

pub fn make_bins(kind: ParamKind) -> BinSpec {
    let (lo, hi) = kind.range();
    let mut edges = vec![0.0; NUM_BINS + 1];
    match kind.sigma() {
        None => {
            let width = (hi - lo) / NUM_BINS as f64;
            for (i, e) in edges.iter_mut().enumerate() {
                *e = lo + width * i as f64;
            }
        }
        Some(sigma) => {
            // Symmetric range: build the left half and mirror it, so that
            // edges[i] == -edges[NUM_BINS - i] exactly.
            let normal = Normal::new(0.0, sigma).expect("positive sigma");
            let tail = normal.cdf(lo);
            let mass = 1.0 - 2.0 * tail;
            let half = NUM_BINS / 2;
            for i in 1..half {
                let p = tail + mass * (i as f64 / NUM_BINS as f64);
                edges[i] = normal.inverse_cdf(p);
            }
            for i in 1..half {
                edges[NUM_BINS - i] = -edges[i];
            }
            edges[half] = 0.0;
        }
    }
    edges[0] = lo;
    edges[NUM_BINS] = hi;
    let centers = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    BinSpec {
        kind,
        edges,
        centers,
    }
}

/// Probability mass over the bins of one head.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct LabelDistribution(Vec<f64>);

impl LabelDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() != NUM_BINS {
            return Err(Error::invalid(format!(
                "distribution must have {NUM_BINS} entries, got {}",
                probs.len()
            )));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::invalid(format!(
                "probability {i} is {p}, expected a finite non-negative value"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::invalid(format!(
                "distribution sums to {total}, expected 1"
            )));
        }
        Ok(Self(probs))
    }

    pub fn one_hot(bin: usize) -> Result<Self> {
        if bin >= NUM_BINS {
            return Err(Error::invalid(format!("bin {bin} out of range")));
        }
        let mut p = vec![0.0; NUM_BINS];
        p[bin] = 1.0;
        Ok(Self(p))
    }

    pub fn uniform() -> Self {
        Self(vec![1.0 / NUM_BINS as f64; NUM_BINS])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    /// Most probable bin; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }
}

impl<'de> Deserialize<'de> for LabelDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        LabelDistribution::new(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum DecodeRule {
    /// Probability-weighted mean of the bin centers.
    #[default]
    Expectation,
    /// Center of the most probable bin.
    Argmax,
}

pub fn encode(value: f64, spec: &BinSpec) -> Result<LabelDistribution> {
    LabelDistribution::one_hot(spec.bin_index(value)?)
}

pub fn decode(dist: &LabelDistribution, spec: &BinSpec) -> f64 {
    decode_with(dist, spec, DecodeRule::Expectation)
}

pub fn decode_with(dist: &LabelDistribution, spec: &BinSpec, rule: DecodeRule) -> f64 {
    match rule {
        DecodeRule::Argmax => spec.centers[dist.argmax()],
        DecodeRule::Expectation => {
            let mut acc = 0.0;
            let mut mass = 0.0;
            for (p, c) in dist.0.iter().zip(&spec.centers) {
                if *p > 0.0 {
                    acc += p * c;
                    mass += p;
                }
            }
            acc / mass
        }
    }
}

/// `KL(target || pred)` for one head, with `0 * log 0 = 0`.
pub fn kl_divergence(pred: &LabelDistribution, target: &LabelDistribution) -> f64 {
    target
        .0
        .iter()
        .zip(&pred.0)
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, p)| t * (t.ln() - p.max(KL_EPSILON).ln()))
        .sum()
}

/// Sum of the per-head divergences over the slope, offset and vfov heads.
pub fn kl_loss(pred: &[LabelDistribution; 3], target: &[LabelDistribution; 3]) -> f64 {
    pred.iter()
        .zip(target)
        .map(|(p, t)| kl_divergence(p, t))
        .sum()
}
