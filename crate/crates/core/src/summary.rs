//! Binned error statistics for calibration estimates.

use serde::{Deserialize, Serialize};

use crate::camera::CameraCalibration;
use crate::error::{Error, Result};

/// A ground truth and an estimate of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatePair {
    #[serde(default)]
    pub id: String,
    pub gt: CameraCalibration,
    pub pred: CameraCalibration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummaryParam {
    /// Horizon midpoint, image units.
    Midpoint,
    /// Roll, radians.
    Roll,
    /// Vertical field of view, radians.
    Vfov,
}

impl SummaryParam {
    pub const ALL: [SummaryParam; 3] = [Self::Midpoint, Self::Roll, Self::Vfov];

    pub fn name(self) -> &'static str {
        match self {
            Self::Midpoint => "midpoint",
            Self::Roll => "roll",
            Self::Vfov => "vfov",
        }
    }

    pub fn value(self, c: &CameraCalibration) -> f64 {
        match self {
            Self::Midpoint => c.midpoint(),
            Self::Roll => c.roll(),
            Self::Vfov => c.vfov(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinStats {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// `None` for empty bins.
    pub quartiles: Option<Quartiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSummary {
    pub param: SummaryParam,
    pub bins: Vec<BinStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdfPoint {
    pub abs_error: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub params: Vec<ParamSummary>,
    /// Empirical CDF of the absolute vfov error, one point per distinct value.
    pub vfov_abs_cdf: Vec<CdfPoint>,
}

/// Linearly interpolated quantile of sorted data (`(n - 1) * p` rule).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quartiles(values: &[f64]) -> Option<Quartiles> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(Quartiles {
        q1: quantile_sorted(&v, 0.25),
        median: quantile_sorted(&v, 0.5),
        q3: quantile_sorted(&v, 0.75),
    })
}

/// Group `(gt_value, error)` samples into `bin_count` equal bins spanning the
/// observed range of `gt_value`.
pub fn binned_quartiles(samples: &[(f64, f64)], bin_count: usize) -> Vec<BinStats> {
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = samples
        .iter()
        .map(|s| s.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bin_count as f64;
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); bin_count];
    for &(x, e) in samples {
        let b = if width > 0.0 {
            (((x - lo) / width).floor() as usize).min(bin_count - 1)
        } else {
            0
        };
        groups[b].push(e);
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(i, g)| BinStats {
            lo: lo + width * i as f64,
            hi: if i + 1 == bin_count {
                hi
            } else {
                lo + width * (i + 1) as f64
            },
            count: g.len(),
            quartiles: quartiles(&g),
        })
        .collect()
}

pub fn empirical_cdf(values: &[f64]) -> Vec<CdfPoint> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out: Vec<CdfPoint> = Vec::new();
    for (i, x) in v.iter().enumerate() {
        let fraction = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.abs_error == *x => last.fraction = fraction,
            _ => out.push(CdfPoint {
                abs_error: *x,
                fraction,
            }),
        }
    }
    out
}

/// Error statistics (prediction minus ground truth) per parameter.
pub fn summarize_errors(pairs: &[EstimatePair], bin_count: usize) -> Result<ErrorSummary> {
    if pairs.is_empty() {
        return Err(Error::invalid("need at least one estimate pair"));
    }
    if bin_count == 0 {
        return Err(Error::invalid("bin_count must be at least 1"));
    }
    let params = SummaryParam::ALL
        .iter()
        .map(|&param| {
            let samples: Vec<(f64, f64)> = pairs
                .iter()
                .map(|p| {
                    (
                        param.value(&p.gt),
                        param.value(&p.pred) - param.value(&p.gt),
                    )
                })
                .collect();
            ParamSummary {
                param,
                bins: binned_quartiles(&samples, bin_count),
            }
        })
        .collect();
    let abs_vfov: Vec<f64> = pairs
        .iter()
        .map(|p| (p.pred.vfov() - p.gt.vfov()).abs())
        .collect();
    Ok(ErrorSummary {
        params,
        vfov_abs_cdf: empirical_cdf(&abs_vfov),
    })
}
