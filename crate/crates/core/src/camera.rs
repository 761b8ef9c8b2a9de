//! Simplified pinhole camera: square pixels, no skew, principal point at the
//! image center, rotation restricted to pitch and roll (plus yaw for panorama
//! extraction).
//!
//! # Conventions
//!
//! - World frame is right-handed with `+y` up. The camera sits at
//!   `(0, camera_height, 0)` and, when level, looks along `-z` with `+x` to its
//!   right.
//! - Camera frame is `x` right, `y` down, `z` forward. A fixed half-turn about
//!   `x` ([`WORLD_TO_CAMERA_AXES`]) takes world axes into it before the
//!   rotation `R = Rz(roll) * Rx(pitch) * Ry(yaw)` is applied.
//! - Positive pitch tilts the camera down, which moves the horizon above the
//!   image center. Positive roll rotates the camera counter-clockwise as seen
//!   by the photographer, so the horizon sits higher on the left edge.
//! - Image units: vertical coordinate scaled so the top edge is `+1` and the
//!   bottom edge `-1`; horizontal uses the same scale, so the left/right edges
//!   are at `-aspect` / `+aspect`.
//! - Pixel coordinates are continuous, `(0, 0)` at the top-left corner, the
//!   center at `(width / 2, height / 2)`, rows growing downward.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix3, Point2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this `cos(roll)` a horizon line is treated as vertical.
pub const DEGENERATE_COS: f64 = 1e-6;

/// Camera height used for object placement when the user gives none.
pub const DEFAULT_CAMERA_HEIGHT_M: f64 = 1.6;

/// Half-turn about `x`: world (`x` right, `y` up, `z` back) to camera axes
/// (`x` right, `y` down, `z` forward).
pub const WORLD_TO_CAMERA_AXES: Matrix3<f64> =
    Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0);

/// Image size in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageDims {
    pub width: u32,
    pub height: u32,
}

impl ImageDims {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(Self { width, height })
    }

    /// Width over height.
    pub fn aspect(&self) -> f64 {
        self.width as f64 / self.height as f64
    }

    /// Pixels per image unit (half the image height).
    pub fn half_height(&self) -> f64 {
        self.height as f64 / 2.0
    }

    /// Convert a pixel position to image units (`y` up, center at the origin).
    pub fn pixel_to_units(&self, pixel: Point2<f64>) -> Point2<f64> {
        let s = self.half_height();
        Point2::new(
            (pixel.x - self.width as f64 / 2.0) / s,
            (self.height as f64 / 2.0 - pixel.y) / s,
        )
    }

    pub fn units_to_pixel(&self, units: Point2<f64>) -> Point2<f64> {
        let s = self.half_height();
        Point2::new(
            self.width as f64 / 2.0 + units.x * s,
            self.height as f64 / 2.0 - units.y * s,
        )
    }
}

/// Vertical field of view, horizon midpoint and roll of a simplified pinhole
/// camera.
///
/// `midpoint` is where the horizon crosses the image's vertical center axis,
/// in image units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CalibrationRepr", into = "CalibrationRepr")]
pub struct CameraCalibration {
    vfov: f64,
    midpoint: f64,
    roll: f64,
}

#[derive(Serialize, Deserialize)]
struct CalibrationRepr {
    vfov_rad: f64,
    midpoint_units: f64,
    roll_rad: f64,
}

impl TryFrom<CalibrationRepr> for CameraCalibration {
    type Error = Error;

    fn try_from(r: CalibrationRepr) -> Result<Self> {
        CameraCalibration::new(r.vfov_rad, r.midpoint_units, r.roll_rad)
    }
}

impl From<CameraCalibration> for CalibrationRepr {
    fn from(c: CameraCalibration) -> Self {
        CalibrationRepr {
            vfov_rad: c.vfov,
            midpoint_units: c.midpoint,
            roll_rad: c.roll,
        }
    }
}

impl CameraCalibration {
    pub fn new(vfov: f64, midpoint: f64, roll: f64) -> Result<Self> {
        check_vfov(vfov)?;
        if !midpoint.is_finite() {
            return Err(Error::invalid(format!(
                "midpoint must be finite, got {midpoint}"
            )));
        }
        if !roll.is_finite() || roll.abs() > FRAC_PI_2 {
            return Err(Error::invalid(format!(
                "roll must lie in [-pi/2, pi/2], got {roll}"
            )));
        }
        Ok(Self {
            vfov,
            midpoint,
            roll,
        })
    }

    /// Build a calibration from camera angles.
    ///
    /// The horizon's perpendicular distance from the center is
    /// `tan(pitch) / tan(vfov / 2)`; the midpoint on the vertical axis is that
    /// distance divided by `cos(roll)`.
    pub fn from_angles(vfov: f64, pitch: f64, roll: f64) -> Result<Self> {
        let offset = midpoint_from_pitch(pitch, vfov)?;
        if !roll.is_finite() || roll.cos() < DEGENERATE_COS {
            return Err(Error::DegenerateLine(format!(
                "roll {roll} rad leaves no midpoint on the vertical axis"
            )));
        }
        Self::new(vfov, offset / roll.cos(), roll)
    }

    pub fn vfov(&self) -> f64 {
        self.vfov
    }

    pub fn midpoint(&self) -> f64 {
        self.midpoint
    }

    pub fn roll(&self) -> f64 {
        self.roll
    }

    /// Camera pitch implied by this calibration.
    pub fn pitch(&self) -> f64 {
        (self.midpoint * self.roll.cos() * (self.vfov / 2.0).tan()).atan()
    }

    pub fn focal_px(&self, dims: ImageDims) -> f64 {
        dims.height as f64 / (2.0 * (self.vfov / 2.0).tan())
    }

    /// Same calibration with a different roll, keeping the pitch fixed.
    pub fn with_roll(&self, roll: f64) -> Result<Self> {
        Self::from_angles(self.vfov, self.pitch(), roll)
    }
}

fn check_vfov(vfov: f64) -> Result<()> {
    if !(vfov > 0.0 && vfov < PI) {
        return Err(Error::invalid(format!(
            "vertical field of view must lie in (0, pi), got {vfov}"
        )));
    }
    Ok(())
}

/// A proper 3x3 rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> RotationMatrix {
        RotationMatrix(self.0.transpose())
    }
}

/// Horizon line as inclination and signed perpendicular distance from the
/// image center (image units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonLine {
    pub slope: f64,
    pub offset: f64,
}

/// Heights (image units) where the horizon meets the left and right image
/// boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonFeature {
    pub y_left: f64,
    pub y_right: f64,
}

impl HorizonFeature {
    pub fn distance(&self, other: &HorizonFeature) -> f64 {
        let dl = self.y_left - other.y_left;
        let dr = self.y_right - other.y_right;
        (dl * dl + dr * dr).sqrt()
    }
}

pub fn vfov_from_focal_px(focal_px: f64, dims: ImageDims) -> Result<f64> {
    if !(focal_px > 0.0) || !focal_px.is_finite() {
        return Err(Error::invalid(format!(
            "focal length must be positive, got {focal_px}"
        )));
    }
    Ok(2.0 * (dims.height as f64 / (2.0 * focal_px)).atan())
}

pub fn focal_px_from_vfov(vfov: f64, dims: ImageDims) -> Result<f64> {
    check_vfov(vfov)?;
    Ok(dims.height as f64 / (2.0 * (vfov / 2.0).tan()))
}

/// Horizon position (image units) for a camera with no roll.
pub fn midpoint_from_pitch(pitch: f64, vfov: f64) -> Result<f64> {
    check_vfov(vfov)?;
    if !pitch.is_finite() || pitch.abs() >= FRAC_PI_2 {
        return Err(Error::invalid(format!(
            "pitch must lie in (-pi/2, pi/2), got {pitch}"
        )));
    }
    Ok(pitch.tan() / (vfov / 2.0).tan())
}

pub fn pitch_from_midpoint(midpoint: f64, vfov: f64) -> Result<f64> {
    check_vfov(vfov)?;
    if !midpoint.is_finite() {
        return Err(Error::invalid(format!(
            "midpoint must be finite, got {midpoint}"
        )));
    }
    Ok((midpoint * (vfov / 2.0).tan()).atan())
}

pub fn slope_offset_from_calibration(calib: &CameraCalibration) -> Result<HorizonLine> {
    let c = calib.roll.cos();
    if c < DEGENERATE_COS {
        return Err(Error::DegenerateLine(format!(
            "roll {} rad is vertical",
            calib.roll
        )));
    }
    Ok(HorizonLine {
        slope: calib.roll,
        offset: calib.midpoint * c,
    })
}

pub fn calibration_from_slope_offset(line: HorizonLine, vfov: f64) -> Result<CameraCalibration> {
    let c = line.slope.cos();
    if !line.slope.is_finite() || c < DEGENERATE_COS {
        return Err(Error::DegenerateLine(format!(
            "slope {} rad is vertical",
            line.slope
        )));
    }
    CameraCalibration::new(vfov, line.offset / c, line.slope)
}

pub fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// `Rz(roll) * Rx(pitch) * Ry(yaw)`, acting on camera-convention axes.
pub fn rotation_from_angles(pitch: f64, roll: f64, yaw: f64) -> RotationMatrix {
    RotationMatrix(rot_z(roll) * rot_x(pitch) * rot_y(yaw))
}

/// Extrinsics and intrinsics of a camera standing on the ground plane.
#[derive(Debug, Clone, Copy)]
pub struct PlacedCamera {
    world_to_camera: Matrix3<f64>,
    center: Vector3<f64>,
    focal_px: f64,
    dims: ImageDims,
}

impl PlacedCamera {
    pub fn new(calib: &CameraCalibration, dims: ImageDims, camera_height: f64) -> Result<Self> {
        if !camera_height.is_finite() || camera_height <= 0.0 {
            return Err(Error::invalid(format!(
                "camera height must be positive, got {camera_height}"
            )));
        }
        let r = rotation_from_angles(calib.pitch(), calib.roll(), 0.0);
        Ok(Self {
            world_to_camera: r.0 * WORLD_TO_CAMERA_AXES,
            center: Vector3::new(0.0, camera_height, 0.0),
            focal_px: calib.focal_px(dims),
            dims,
        })
    }

    /// Camera-frame coordinates of a world point.
    pub fn to_camera(&self, point_world: &Vector3<f64>) -> Vector3<f64> {
        self.world_to_camera * (point_world - self.center)
    }

    pub fn focal_px(&self) -> f64 {
        self.focal_px
    }

    pub fn project(&self, point_world: &Vector3<f64>) -> Result<Point2<f64>> {
        let pc = self.to_camera(point_world);
        if !(pc.z > 0.0) {
            return Err(Error::BehindCamera);
        }
        Ok(Point2::new(
            self.dims.width as f64 / 2.0 + self.focal_px * pc.x / pc.z,
            self.dims.height as f64 / 2.0 + self.focal_px * pc.y / pc.z,
        ))
    }

    /// World-frame direction of the ray through a pixel (not normalized).
    pub fn ray_direction(&self, pixel: Point2<f64>) -> Vector3<f64> {
        let dc = Vector3::new(
            (pixel.x - self.dims.width as f64 / 2.0) / self.focal_px,
            (pixel.y - self.dims.height as f64 / 2.0) / self.focal_px,
            1.0,
        );
        self.world_to_camera.transpose() * dc
    }

    pub fn unproject_to_ground(&self, pixel: Point2<f64>) -> Result<Vector3<f64>> {
        let d = self.ray_direction(pixel);
        // Rays within a relative 1e-12 of horizontal never meet the ground.
        if !(d.y < -1e-12 * d.norm()) {
            return Err(Error::NoGroundIntersection {
                u: pixel.x,
                v: pixel.y,
            });
        }
        let t = -self.center.y / d.y;
        Ok(self.center + d * t)
    }
}

pub fn project(
    point_world: &Vector3<f64>,
    calib: &CameraCalibration,
    dims: ImageDims,
    camera_height: f64,
) -> Result<Point2<f64>> {
    PlacedCamera::new(calib, dims, camera_height)?.project(point_world)
}

pub fn unproject_to_ground(
    pixel: Point2<f64>,
    calib: &CameraCalibration,
    dims: ImageDims,
    camera_height: f64,
) -> Result<Vector3<f64>> {
    PlacedCamera::new(calib, dims, camera_height)?.unproject_to_ground(pixel)
}

pub fn horizon_edge_intersections(
    calib: &CameraCalibration,
    dims: ImageDims,
) -> Result<HorizonFeature> {
    horizon_edge_intersections_for_aspect(calib, dims.aspect())
}

/// Same as [`horizon_edge_intersections`] for an explicit width/height ratio.
pub fn horizon_edge_intersections_for_aspect(
    calib: &CameraCalibration,
    aspect: f64,
) -> Result<HorizonFeature> {
    if !(aspect > 0.0) || !aspect.is_finite() {
        return Err(Error::invalid(format!(
            "aspect must be positive, got {aspect}"
        )));
    }
    if calib.roll.cos() < DEGENERATE_COS {
        return Err(Error::DegenerateLine(format!(
            "roll {} rad is vertical",
            calib.roll
        )));
    }
    let rise = aspect * calib.roll.tan();
    Ok(HorizonFeature {
        y_left: calib.midpoint + rise,
        y_right: calib.midpoint - rise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dims(w: u32, h: u32) -> ImageDims {
        ImageDims::new(w, h).unwrap()
    }

    #[test]
    fn vfov_examples() {
        assert_relative_eq!(
            vfov_from_focal_px(112.0, dims(224, 224)).unwrap(),
            FRAC_PI_2,
            epsilon = 1e-15
        );
        assert!(vfov_from_focal_px(1e12, dims(224, 224)).unwrap() < 1e-9);
        assert_relative_eq!(
            vfov_from_focal_px(224.0, dims(224, 224)).unwrap(),
            0.927_295_218_001_612_2,
            epsilon = 1e-14
        );
        assert!(matches!(
            vfov_from_focal_px(0.0, dims(10, 10)),
            Err(Error::InvalidArgument(_))
        ));
        assert!(vfov_from_focal_px(-3.0, dims(10, 10)).is_err());
    }

    #[test]
    fn focal_examples() {
        assert_relative_eq!(
            focal_px_from_vfov(FRAC_PI_2, dims(224, 224)).unwrap(),
            112.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            focal_px_from_vfov(0.927_295_218_001_612_2, dims(224, 224)).unwrap(),
            224.0,
            epsilon = 1e-10
        );
        assert_relative_eq!(
            focal_px_from_vfov(1.0, dims(448, 448)).unwrap(),
            410.029_249_663_589_23,
            epsilon = 1e-9
        );
        assert!(focal_px_from_vfov(0.0, dims(1, 1)).is_err());
        assert!(focal_px_from_vfov(PI, dims(1, 1)).is_err());
    }

    #[test]
    fn midpoint_examples() {
        assert_eq!(midpoint_from_pitch(0.0, 1.3).unwrap(), 0.0);
        assert_relative_eq!(midpoint_from_pitch(0.5, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(
            midpoint_from_pitch(0.2, 1.0).unwrap(),
            0.371_058_231_066_520_1,
            epsilon = 1e-14
        );
        assert!(midpoint_from_pitch(FRAC_PI_2, 1.0).is_err());
        assert!(midpoint_from_pitch(-2.0, 1.0).is_err());

        assert_eq!(pitch_from_midpoint(0.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(pitch_from_midpoint(1.0, 1.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(
            pitch_from_midpoint(0.371_058_231_066_520_1, 1.0).unwrap(),
            0.2,
            epsilon = 1e-14
        );
    }

    #[test]
    fn slope_offset_examples() {
        let c = CameraCalibration::new(1.0, 0.25, 0.0).unwrap();
        let l = slope_offset_from_calibration(&c).unwrap();
        assert_eq!((l.slope, l.offset), (0.0, 0.25));

        let c = CameraCalibration::new(1.0, 0.0, 0.7).unwrap();
        assert_eq!(slope_offset_from_calibration(&c).unwrap().offset, 0.0);

        let c = CameraCalibration::new(1.0, 0.5, 0.3).unwrap();
        assert_relative_eq!(
            slope_offset_from_calibration(&c).unwrap().offset,
            0.477_668_244_562_803,
            epsilon = 1e-14
        );

        let c = CameraCalibration::new(1.0, 0.5, FRAC_PI_2).unwrap();
        assert!(matches!(
            slope_offset_from_calibration(&c),
            Err(Error::DegenerateLine(_))
        ));
    }

    #[test]
    fn calibration_from_slope_offset_examples() {
        let c = calibration_from_slope_offset(
            HorizonLine {
                slope: 0.0,
                offset: 0.25,
            },
            1.0,
        )
        .unwrap();
        assert_eq!((c.midpoint(), c.roll(), c.vfov()), (0.25, 0.0, 1.0));

        let c = calibration_from_slope_offset(
            HorizonLine {
                slope: 0.3,
                offset: 0.477_668_244_562_803,
            },
            1.0,
        )
        .unwrap();
        assert_relative_eq!(c.midpoint(), 0.5, epsilon = 1e-14);

        let c = calibration_from_slope_offset(
            HorizonLine {
                slope: 0.0,
                offset: 0.0,
            },
            0.4,
        )
        .unwrap();
        assert_eq!((c.midpoint(), c.roll()), (0.0, 0.0));

        let bad = HorizonLine {
            slope: FRAC_PI_2 - 1e-9,
            offset: 0.1,
        };
        assert!(matches!(
            calibration_from_slope_offset(bad, 1.0),
            Err(Error::DegenerateLine(_))
        ));
    }

    #[test]
    fn rotation_identity_and_quarter_pitch() {
        assert_eq!(
            *rotation_from_angles(0.0, 0.0, 0.0).matrix(),
            Matrix3::identity()
        );

        // Elementary oracle: a quarter turn about x, written out by hand.
        let r = rotation_from_angles(FRAC_PI_2, 0.0, 0.0);
        let expected = Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0);
        assert_relative_eq!(*r.matrix(), expected, epsilon = 1e-15);
        let z = r.matrix() * Vector3::z();
        assert_relative_eq!(z, -Vector3::y(), epsilon = 1e-15);
    }

    #[test]
    fn pitch_down_looks_down() {
        let calib = CameraCalibration::from_angles(1.0, 0.3, 0.0).unwrap();
        let cam = PlacedCamera::new(&calib, dims(640, 480), 1.6).unwrap();
        let forward = cam.ray_direction(Point2::new(320.0, 240.0));
        assert!(forward.y < 0.0 && forward.z < 0.0);
        assert!(calib.midpoint() > 0.0);
    }

    #[test]
    fn project_optical_axis_hits_center() {
        let calib = CameraCalibration::new(1.0, 0.0, 0.0).unwrap();
        let d = dims(640, 480);
        let p = project(&Vector3::new(0.0, 1.6, -7.0), &calib, d, 1.6).unwrap();
        assert_eq!(p, Point2::new(320.0, 240.0));
    }

    #[test]
    fn far_ground_point_sits_on_horizon_row() {
        let calib = CameraCalibration::new(0.9, 0.0, 0.0).unwrap();
        let d = dims(224, 224);
        let p = project(&Vector3::new(0.0, 0.0, -1e6), &calib, d, 1.6).unwrap();
        assert!((p.y - 112.0).abs() < 0.01);
    }

    #[test]
    fn project_matches_homogeneous_oracle() {
        // K [R | t] p written out independently of PlacedCamera.
        let calib = CameraCalibration::from_angles(0.8, 0.15, -0.1).unwrap();
        let d = dims(320, 240);
        let f = 240.0 / (2.0 * (0.4f64).tan());
        let k = Matrix3::new(f, 0.0, 160.0, 0.0, f, 120.0, 0.0, 0.0, 1.0);
        let r = rot_z(-0.1) * rot_x(0.15) * WORLD_TO_CAMERA_AXES;
        let c = Vector3::new(0.0, 1.6, 0.0);
        let t = -(r * c);
        let pw = Vector3::new(0.7, 0.4, -5.0);
        let h = k * (r * pw + t);
        let got = project(&pw, &calib, d, 1.6).unwrap();
        assert_relative_eq!(got.x, h.x / h.z, epsilon = 1e-9);
        assert_relative_eq!(got.y, h.y / h.z, epsilon = 1e-9);
        // Frozen regression value.
        assert_relative_eq!(got.x, 201.016_475_635_402_54, epsilon = 1e-6);
        assert_relative_eq!(got.y, 140.346_180_325_596_12, epsilon = 1e-6);
    }

    #[test]
    fn behind_camera_rejected() {
        let calib = CameraCalibration::new(1.0, 0.0, 0.0).unwrap();
        let r = project(&Vector3::new(0.0, 1.6, 3.0), &calib, dims(10, 10), 1.6);
        assert!(matches!(r, Err(Error::BehindCamera)));
        let r = project(&Vector3::new(1.0, 1.6, 0.0), &calib, dims(10, 10), 1.6);
        assert!(matches!(r, Err(Error::BehindCamera)));
    }

    #[test]
    fn unproject_examples() {
        let calib = CameraCalibration::new(1.0, 0.0, 0.0).unwrap();
        let d = dims(300, 200);
        let r = unproject_to_ground(Point2::new(150.0, 100.0), &calib, d, 1.6);
        assert!(matches!(r, Err(Error::NoGroundIntersection { .. })));

        let g = unproject_to_ground(Point2::new(150.0, 200.0), &calib, d, 1.6).unwrap();
        assert_relative_eq!(g.y, 0.0, epsilon = 1e-12);
        assert_relative_eq!(g.x, 0.0, epsilon = 1e-12);
        assert_relative_eq!(-g.z, 2.928_780_354_739_923, epsilon = 1e-12);
    }

    #[test]
    fn horizon_edges_examples() {
        let c = CameraCalibration::new(1.0, 0.3, 0.0).unwrap();
        let h = horizon_edge_intersections(&c, dims(640, 480)).unwrap();
        assert_eq!((h.y_left, h.y_right), (0.3, 0.3));

        let c = CameraCalibration::new(1.0, 0.0, 0.1).unwrap();
        let h = horizon_edge_intersections(&c, dims(100, 100)).unwrap();
        assert_relative_eq!(h.y_left, 0.100_334_672_085_450_55, epsilon = 1e-15);
        assert_relative_eq!(h.y_right, -0.100_334_672_085_450_55, epsilon = 1e-15);

        let c = CameraCalibration::new(1.0, 0.2, 0.0).unwrap();
        let h = horizon_edge_intersections(&c, dims(1920, 1080)).unwrap();
        assert_eq!((h.y_left, h.y_right), (0.2, 0.2));
    }

    #[test]
    fn horizon_edges_agree_with_projected_horizon() {
        // Project distant level points and compare with the closed form.
        let calib = CameraCalibration::from_angles(1.1, 0.2, 0.25).unwrap();
        let d = dims(400, 300);
        let cam = PlacedCamera::new(&calib, d, 1.6).unwrap();
        let feat = horizon_edge_intersections(&calib, d).unwrap();
        let a = d.aspect();
        let horizon_pts: Vec<Point2<f64>> = [-0.3f64, 0.3]
            .iter()
            .map(|ang| {
                let far = Vector3::new(1e9 * ang.sin(), 1.6, -1e9 * ang.cos());
                d.pixel_to_units(cam.project(&far).unwrap())
            })
            .collect();
        let (p, q) = (horizon_pts[0], horizon_pts[1]);
        let at = |x: f64| p.y + (q.y - p.y) * (x - p.x) / (q.x - p.x);
        assert_relative_eq!(at(-a), feat.y_left, epsilon = 1e-6);
        assert_relative_eq!(at(a), feat.y_right, epsilon = 1e-6);
        assert_relative_eq!(at(0.0), calib.midpoint(), epsilon = 1e-6);
        assert!(feat.y_left > feat.y_right);
    }

    #[test]
    fn calibration_json_field_names() {
        let c = CameraCalibration::new(1.0, 0.25, -0.125).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(
            s,
            r#"{"vfov_rad":1.0,"midpoint_units":0.25,"roll_rad":-0.125}"#
        );
        let back: CameraCalibration = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        let bad = r#"{"vfov_rad":4.0,"midpoint_units":0.25,"roll_rad":0.0}"#;
        assert!(serde_json::from_str::<CameraCalibration>(bad).is_err());
    }

    #[test]
    fn invalid_calibrations() {
        assert!(CameraCalibration::new(0.0, 0.0, 0.0).is_err());
        assert!(CameraCalibration::new(1.0, f64::NAN, 0.0).is_err());
        assert!(CameraCalibration::new(1.0, 0.0, 1.6).is_err());
        assert!(ImageDims::new(0, 4).is_err());
    }
}
