//! Labeled crop datasets built from a directory of equirectangular panoramas.
//!
//! Every panorama gets its own random stream derived from the run seed and the
//! panorama id, so the output does not depend on how many panoramas were
//! skipped or on the order in which crops finish rendering. Splits are
//! assigned per panorama from a hash of its id.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::camera::CameraCalibration;
use crate::crop::{extract_crop, CropView};
use crate::error::{Error, Result};
use crate::sampling::{CameraSample, CameraSampler, SamplingConfig};

/// Panoramas shorter than this are skipped.
pub const MIN_PANO_HEIGHT: u32 = 8;

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const DATASET_INFO_FILE: &str = "dataset.json";
pub const IMAGE_DIR: &str = "images";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::invalid("split fractions must be non-negative"));
        }
        let total: f64 = parts.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "split fractions sum to {total}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Uniform value in `[0, 1)` from a hash of the panorama id.
fn id_fraction(pano_id: &str) -> f64 {
    let digest = Sha256::digest(pano_id.as_bytes());
    let mut b = [0u8; 8];
    b.copy_from_slice(&digest[..8]);
    (u64::from_le_bytes(b) >> 11) as f64 / (1u64 << 53) as f64
}

pub fn split_for(pano_id: &str, fractions: &SplitFractions) -> Split {
    let u = id_fraction(pano_id);
    if u < fractions.train {
        Split::Train
    } else if u < fractions.train + fractions.val {
        Split::Val
    } else {
        Split::Test
    }
}

/// Random stream for one panorama.
pub fn pano_rng(seed: u64, pano_id: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(pano_id.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// One line of `manifest.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub pano_id: String,
    pub crop_id: String,
    pub image_path: String,
    pub vfov_rad: f64,
    pub midpoint_units: f64,
    pub roll_rad: f64,
    pub yaw_rad: f64,
    pub aspect_w: u32,
    pub aspect_h: u32,
    pub split: Split,
}

impl ManifestRecord {
    pub fn calibration(&self) -> Result<CameraCalibration> {
        CameraCalibration::new(self.vfov_rad, self.midpoint_units, self.roll_rad)
    }

    pub fn aspect(&self) -> f64 {
        self.aspect_w as f64 / self.aspect_h as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub seed: u64,
    pub config: SamplingConfig,
    pub split_fractions: SplitFractions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub records: Vec<ManifestRecord>,
    pub seed: u64,
    pub config: SamplingConfig,
}

fn is_image_file(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
        .unwrap_or(false)
}

/// Panorama files in `dir`, sorted by file name.
pub fn list_panoramas(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && is_image_file(&path) {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

fn pano_id_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn load_panorama(path: &Path) -> Option<image::RgbImage> {
    let img = match image::open(path) {
        Ok(img) => img.to_rgb8(),
        Err(e) => {
            warn!("skipping {}: {e}", path.display());
            return None;
        }
    };
    if img.width() != 2 * img.height() || img.height() < MIN_PANO_HEIGHT {
        warn!(
            "skipping {}: {}x{} is not a 2:1 panorama of height >= {MIN_PANO_HEIGHT}",
            path.display(),
            img.width(),
            img.height()
        );
        return None;
    }
    Some(img)
}

fn crop_view(sample: &CameraSample) -> CropView {
    CropView {
        yaw: sample.yaw,
        pitch: sample.pitch(),
        roll: sample.calibration.roll(),
        vfov: sample.calibration.vfov(),
        aspect: sample.aspect.ratio(),
    }
}

/// Sample crops for every readable panorama in `pano_dir`, write them to
/// `out_dir/images/` and the manifest to `out_dir/manifest.jsonl`.
pub fn build_dataset(
    pano_dir: &Path,
    out_dir: &Path,
    config: &SamplingConfig,
    seed: u64,
    fractions: &SplitFractions,
) -> Result<DatasetManifest> {
    fractions.validate()?;
    let sampler = CameraSampler::new(config.clone())?;
    let panos = list_panoramas(pano_dir)?;
    if panos.is_empty() {
        return Err(Error::invalid(format!(
            "no panoramas (png/jpg) found in {}",
            pano_dir.display()
        )));
    }
    let mut ids: Vec<String> = panos.iter().map(|p| pano_id_of(p)).collect();
    ids.sort();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::invalid(format!("duplicate panorama id '{}'", w[0])));
    }

    let image_dir = out_dir.join(IMAGE_DIR);
    fs::create_dir_all(&image_dir).map_err(|e| Error::io(&image_dir, e))?;

    let per_pano: Vec<Option<Vec<ManifestRecord>>> = panos
        .par_iter()
        .map(|path| -> Result<Option<Vec<ManifestRecord>>> {
            let Some(pano) = load_panorama(path) else {
                return Ok(None);
            };
            let pano_id = pano_id_of(path);
            let split = split_for(&pano_id, fractions);
            let mut rng = pano_rng(seed, &pano_id);
            let mut records = Vec::with_capacity(config.crops_per_pano);
            for k in 0..config.crops_per_pano {
                let sample = sampler.sample(&mut rng)?;
                let crop = extract_crop(&pano, &crop_view(&sample), config.out_size)?;
                let crop_id = format!("{pano_id}_{k:02}");
                let rel = format!("{IMAGE_DIR}/{crop_id}.png");
                crop.save(out_dir.join(&rel))?;
                let c = sample.calibration;
                records.push(ManifestRecord {
                    pano_id: pano_id.clone(),
                    crop_id,
                    image_path: rel,
                    vfov_rad: c.vfov(),
                    midpoint_units: c.midpoint(),
                    roll_rad: c.roll(),
                    yaw_rad: sample.yaw,
                    aspect_w: sample.aspect.w,
                    aspect_h: sample.aspect.h,
                    split,
                });
            }
            Ok(Some(records))
        })
        .collect::<Result<_>>()?;

    let records: Vec<ManifestRecord> = per_pano.into_iter().flatten().flatten().collect();
    if records.is_empty() {
        return Err(Error::invalid(format!(
            "no usable panoramas in {}",
            pano_dir.display()
        )));
    }

    write_manifest(&out_dir.join(MANIFEST_FILE), &records)?;
    let info = DatasetInfo {
        seed,
        config: config.clone(),
        split_fractions: *fractions,
    };
    let info_path = out_dir.join(DATASET_INFO_FILE);
    let text = serde_json::to_string_pretty(&info)? + "\n";
    fs::write(&info_path, text).map_err(|e| Error::io(&info_path, e))?;

    Ok(DatasetManifest {
        records,
        seed,
        config: config.clone(),
    })
}

pub fn write_manifest(path: &Path, records: &[ManifestRecord]) -> Result<()> {
    write_jsonl(path, records)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    read_jsonl(path, |r: &ManifestRecord| r.calibration().map(|_| ()))
}

/// Write one JSON object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read one JSON object per non-blank line, running `check` on each and
/// reporting failures with their line number.
pub fn read_jsonl<T, F>(path: &Path, check: F) -> Result<Vec<T>>
where
    T: for<'de> Deserialize<'de>,
    F: Fn(&T) -> Result<()>,
{
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |message: String| Error::Schema {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let item: T = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        check(&item).map_err(|e| schema(e.to_string()))?;
        out.push(item);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_a_function_of_id() {
        let f = SplitFractions::default();
        for id in ["a", "pano_0001", "x y z"] {
            assert_eq!(split_for(id, &f), split_for(id, &f));
        }
        let all_train = SplitFractions {
            train: 1.0,
            val: 0.0,
            test: 0.0,
        };
        assert_eq!(split_for("anything", &all_train), Split::Train);
    }

    #[test]
    fn split_fractions_roughly_respected() {
        let f = SplitFractions::default();
        let n = 20_000;
        let train = (0..n)
            .filter(|i| split_for(&format!("pano{i}"), &f) == Split::Train)
            .count();
        let frac = train as f64 / n as f64;
        assert!((frac - 0.8).abs() < 0.02, "{frac}");
    }

    #[test]
    fn bad_fractions_rejected() {
        let f = SplitFractions {
            train: 0.5,
            val: 0.1,
            test: 0.1,
        };
        assert!(f.validate().is_err());
    }

    #[test]
    fn pano_streams_differ_by_id_and_seed() {
        use rand::Rng;
        let a: u64 = pano_rng(1, "a").random();
        let b: u64 = pano_rng(1, "b").random();
        let c: u64 = pano_rng(2, "a").random();
        let a2: u64 = pano_rng(1, "a").random();
        assert_eq!(a, a2);
        assert!(a != b && a != c);
    }

    #[test]
    fn empty_dir_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        let r = build_dataset(
            dir.path(),
            out.path(),
            &SamplingConfig::default(),
            0,
            &SplitFractions::default(),
        );
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn manifest_line_numbers_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.jsonl");
        fs::write(&p, "\n{\"bogus\": 1}\n").unwrap();
        match read_manifest(&p) {
            Err(Error::Schema { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
