//! Procedural equirectangular panoramas for tests and demos.

use std::f64::consts::PI;

use image::{ImageBuffer, Rgb, RgbImage};
use rand::Rng;

use crate::crop::Raster;
use crate::error::{Error, Result};

/// Latitude of the center of panorama row `row` in a panorama `height` rows tall.
pub fn row_latitude(row: u32, height: u32) -> f64 {
    (0.5 - (row as f64 + 0.5) / height as f64) * PI
}

/// Panorama whose every channel holds the latitude (radians) of the pixel.
pub fn latitude_panorama(height: u32) -> Result<Raster<f32>> {
    if height == 0 {
        return Err(Error::invalid("panorama height must be at least 1"));
    }
    Ok(ImageBuffer::from_fn(2 * height, height, |_, y| {
        let lat = row_latitude(y, height) as f32;
        Rgb([lat, lat, lat])
    }))
}

/// Sky above the equator, textured ground below, with a few random vertical
/// stripes so that different yaws give different crops.
pub fn textured_panorama<R: Rng + ?Sized>(rng: &mut R, height: u32) -> Result<RgbImage> {
    if height == 0 {
        return Err(Error::invalid("panorama height must be at least 1"));
    }
    let width = 2 * height;
    let stripes: Vec<(f64, f64, [u8; 3])> = (0..6)
        .map(|_| {
            let center = rng.random::<f64>();
            let half = 0.01 + 0.03 * rng.random::<f64>();
            let color = [rng.random(), rng.random(), rng.random()];
            (center, half, color)
        })
        .collect();
    let sky_tint: u8 = rng.random_range(150..=255);
    Ok(ImageBuffer::from_fn(width, height, |x, y| {
        let lat = row_latitude(y, height);
        let u = (x as f64 + 0.5) / width as f64;
        for &(c, h, color) in &stripes {
            let d = (u - c).abs();
            if d.min(1.0 - d) < h && lat > -0.3 && lat < 0.4 {
                return Rgb(color);
            }
        }
        if lat >= 0.0 {
            let t = (lat / (PI / 2.0) * 120.0) as u8;
            Rgb([90 + t / 2, 140 + t / 3, sky_tint])
        } else {
            let check = ((x / 8) + (y / 8)) % 2 == 0;
            let g = if check { 110 } else { 70 };
            Rgb([g, g / 2 + 40, 30])
        }
    }))
}
