//! Image retrieval by horizon position.
//!
//! Each image is keyed by where its horizon meets the left and right image
//! borders, in image units, and ranked by Euclidean distance to a query key.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::camera::{horizon_edge_intersections_for_aspect, CameraCalibration, HorizonFeature};
use crate::dataset::{read_jsonl, write_jsonl, ManifestRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub image_id: String,
    pub y_left: f64,
    pub y_right: f64,
}

impl IndexEntry {
    pub fn feature(&self) -> HorizonFeature {
        HorizonFeature {
            y_left: self.y_left,
            y_right: self.y_right,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Match {
    pub image_id: String,
    pub distance: f64,
}

/// Ascending distance, then image id.
pub fn rank_order(a: &Match, b: &Match) -> Ordering {
    a.distance
        .total_cmp(&b.distance)
        .then_with(|| a.image_id.cmp(&b.image_id))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RetrievalIndex {
    entries: Vec<IndexEntry>,
}

impl RetrievalIndex {
    /// Index precomputed features, rejecting duplicate ids and non-finite values.
    pub fn from_entries(entries: Vec<IndexEntry>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !(e.y_left.is_finite() && e.y_right.is_finite()) {
                return Err(Error::invalid(format!(
                    "feature of '{}' is not finite",
                    e.image_id
                )));
            }
            if !seen.insert(e.image_id.as_str()) {
                return Err(Error::invalid(format!(
                    "duplicate image id '{}'",
                    e.image_id
                )));
            }
        }
        Ok(Self { entries })
    }

    /// Index `(image_id, calibration, aspect)` triples, keeping their order.
    pub fn build<I, S>(items: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, CameraCalibration, f64)>,
        S: Into<String>,
    {
        let entries = items
            .into_iter()
            .map(|(id, calib, aspect)| {
                let f = horizon_edge_intersections_for_aspect(&calib, aspect)?;
                Ok(IndexEntry {
                    image_id: id.into(),
                    y_left: f.y_left,
                    y_right: f.y_right,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_entries(entries)
    }

    /// Index every crop of a dataset manifest under its crop id.
    pub fn from_manifest(records: &[ManifestRecord]) -> Result<Self> {
        let items = records
            .iter()
            .map(|r| Ok((r.crop_id.clone(), r.calibration()?, r.aspect())))
            .collect::<Result<Vec<_>>>()?;
        Self::build(items)
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, image_id: &str) -> Option<&IndexEntry> {
        self.entries.iter().find(|e| e.image_id == image_id)
    }

    /// The `top_k` entries closest to `feature`.
    pub fn query(&self, feature: &HorizonFeature, top_k: usize) -> Result<Vec<Match>> {
        if top_k == 0 {
            return Err(Error::invalid("top_k must be at least 1"));
        }
        let mut all: Vec<(f64, usize)> = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.feature().distance(feature), i))
            .collect();
        let order = |a: &(f64, usize), b: &(f64, usize)| {
            a.0.total_cmp(&b.0)
                .then_with(|| self.entries[a.1].image_id.cmp(&self.entries[b.1].image_id))
        };
        if top_k < all.len() {
            all.select_nth_unstable_by(top_k - 1, order);
            all.truncate(top_k);
        }
        all.sort_unstable_by(order);
        Ok(all
            .into_iter()
            .map(|(distance, i)| Match {
                image_id: self.entries[i].image_id.clone(),
                distance,
            })
            .collect())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_jsonl(path, &self.entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let entries = read_jsonl(path, |e: &IndexEntry| {
            if e.y_left.is_finite() && e.y_right.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid("y_left and y_right must be finite"))
            }
        })?;
        Self::from_entries(entries)
    }
}
