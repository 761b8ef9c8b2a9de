//! Rectified pinhole crops from equirectangular panoramas.
//!
//! Panorama columns map linearly to longitude `[-pi, pi)` (longitude 0 at the
//! center column, increasing to the right) and rows to latitude
//! `[pi/2, -pi/2]` from top to bottom. Sampling is bilinear, wrapping
//! horizontally and clamping vertically.

use image::{ImageBuffer, Pixel, Rgb};
use nalgebra::Vector3;

use crate::camera::{rotation_from_angles, WORLD_TO_CAMERA_AXES};
use crate::error::{Error, Result};

/// Channel types the sampler can interpolate.
pub trait Channel: image::Primitive + 'static {
    fn to_f32(self) -> f32;
    fn from_f32(v: f32) -> Self;
}

impl Channel for u8 {
    fn to_f32(self) -> f32 {
        self as f32
    }

    fn from_f32(v: f32) -> Self {
        v.round().clamp(0.0, 255.0) as u8
    }
}

impl Channel for u16 {
    fn to_f32(self) -> f32 {
        self as f32
    }

    fn from_f32(v: f32) -> Self {
        v.round().clamp(0.0, 65535.0) as u16
    }
}

impl Channel for f32 {
    fn to_f32(self) -> f32 {
        self
    }

    fn from_f32(v: f32) -> Self {
        v
    }
}

pub type Raster<T> = ImageBuffer<Rgb<T>, Vec<T>>;

/// Orientation and intrinsics of the virtual camera used for a crop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropView {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub vfov: f64,
    /// Width over height of the virtual image before it is squeezed to a
    /// square raster.
    pub aspect: f64,
}

impl CropView {
    fn validate(&self) -> Result<()> {
        if !(self.vfov > 0.0 && self.vfov < std::f64::consts::PI) {
            return Err(Error::invalid(format!(
                "vertical field of view must lie in (0, pi), got {}",
                self.vfov
            )));
        }
        if !(self.aspect > 0.0) || !self.aspect.is_finite() {
            return Err(Error::invalid(format!(
                "aspect must be positive, got {}",
                self.aspect
            )));
        }
        if ![self.yaw, self.pitch, self.roll]
            .iter()
            .all(|a| a.is_finite())
        {
            return Err(Error::invalid("crop angles must be finite"));
        }
        Ok(())
    }
}

/// Maps output pixels of a square crop to fractional panorama coordinates.
#[derive(Debug, Clone, Copy)]
pub struct CropProjector {
    camera_to_world: nalgebra::Matrix3<f64>,
    half_tan: f64,
    aspect: f64,
    out_size: u32,
    pano_width: f64,
    pano_height: f64,
}

impl CropProjector {
    pub fn new(view: &CropView, out_size: u32, pano_width: u32, pano_height: u32) -> Result<Self> {
        view.validate()?;
        check_pano_dims(pano_width, pano_height)?;
        if out_size == 0 {
            return Err(Error::invalid("out_size must be at least 1"));
        }
        let r = rotation_from_angles(view.pitch, view.roll, view.yaw);
        Ok(Self {
            camera_to_world: (r.matrix() * WORLD_TO_CAMERA_AXES).transpose(),
            half_tan: (view.vfov / 2.0).tan(),
            aspect: view.aspect,
            out_size,
            pano_width: pano_width as f64,
            pano_height: pano_height as f64,
        })
    }

    /// World direction of the ray through the center of output pixel `(col, row)`.
    pub fn ray(&self, col: u32, row: u32) -> Vector3<f64> {
        let s = self.out_size as f64;
        // Image units, y up; horizontal spans [-aspect, aspect].
        let xu = (2.0 * (col as f64 + 0.5) / s - 1.0) * self.aspect;
        let yu = 1.0 - 2.0 * (row as f64 + 0.5) / s;
        let dc = Vector3::new(xu * self.half_tan, -yu * self.half_tan, 1.0);
        self.camera_to_world * dc
    }

    /// Fractional panorama position `(x, y)` in pixel-center coordinates.
    pub fn pano_position(&self, col: u32, row: u32) -> (f64, f64) {
        let d = self.ray(col, row);
        let lon = d.x.atan2(-d.z);
        let lat = d.y.atan2(d.x.hypot(d.z));
        direction_to_pano(lon, lat, self.pano_width, self.pano_height)
    }
}

/// Pixel-center coordinates of a longitude/latitude in a `w x h` panorama.
pub fn direction_to_pano(lon: f64, lat: f64, w: f64, h: f64) -> (f64, f64) {
    let x = (lon / (2.0 * std::f64::consts::PI) + 0.5) * w - 0.5;
    let y = (0.5 - lat / std::f64::consts::PI) * h - 0.5;
    (x, y)
}

fn check_pano_dims(w: u32, h: u32) -> Result<()> {
    if h == 0 || w != 2 * h {
        return Err(Error::invalid(format!(
            "equirectangular panorama must be 2:1, got {w}x{h}"
        )));
    }
    Ok(())
}

/// Bilinear lookup with horizontal wraparound and vertical clamping.
pub fn sample_bilinear<T: Channel>(pano: &Raster<T>, x: f64, y: f64) -> [f32; 3]
where
    Rgb<T>: Pixel<Subpixel = T>,
{
    let (w, h) = (pano.width() as i64, pano.height() as i64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = (x - x0) as f32;
    let fy = (y - y0) as f32;
    let xa = (x0 as i64).rem_euclid(w) as u32;
    let xb = (x0 as i64 + 1).rem_euclid(w) as u32;
    let ya = y0 as u32;
    let yb = (y0 as i64 + 1).min(h - 1) as u32;
    let p00 = pano.get_pixel(xa, ya).0;
    let p10 = pano.get_pixel(xb, ya).0;
    let p01 = pano.get_pixel(xa, yb).0;
    let p11 = pano.get_pixel(xb, yb).0;
    let mut out = [0.0f32; 3];
    for c in 0..3 {
        let top = p00[c].to_f32() * (1.0 - fx) + p10[c].to_f32() * fx;
        let bottom = p01[c].to_f32() * (1.0 - fx) + p11[c].to_f32() * fx;
        out[c] = top * (1.0 - fy) + bottom * fy;
    }
    out
}

/// Render an `out_size x out_size` crop of `pano` seen through `view`.
pub fn extract_crop<T: Channel>(
    pano: &Raster<T>,
    view: &CropView,
    out_size: u32,
) -> Result<Raster<T>>
where
    Rgb<T>: Pixel<Subpixel = T>,
{
    let proj = CropProjector::new(view, out_size, pano.width(), pano.height())?;
    Ok(ImageBuffer::from_fn(out_size, out_size, |col, row| {
        let (x, y) = proj.pano_position(col, row);
        let v = sample_bilinear(pano, x, y);
        Rgb([T::from_f32(v[0]), T::from_f32(v[1]), T::from_f32(v[2])])
    }))
}
