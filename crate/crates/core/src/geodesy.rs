//! WGS84 geodetic, ECEF and local ENU frames.
//!
//! Angles are radians here; degrees only appear at the file and CLI boundary.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// WGS84 semi-major axis (m).
pub const WGS84_A: f64 = 6378137.0;
/// WGS84 flattening.
pub const WGS84_F: f64 = 1.0 / 298.257223563;
/// WGS84 semi-minor axis (m).
pub const WGS84_B: f64 = WGS84_A * (1.0 - WGS84_F);
/// First eccentricity squared.
pub const WGS84_E2: f64 = WGS84_F * (2.0 - WGS84_F);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeodesyError {
    #[error("ECEF point {0:?} too close to the geocenter")]
    Geocenter([f64; 3]),
    #[error("{field} = {value} rad out of range")]
    AngleRange { field: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodeticCoord {
    /// radians, [-π/2, π/2]
    pub latitude: f64,
    /// radians, (-π, π]
    pub longitude: f64,
    /// meters above the ellipsoid
    pub height: f64,
}

impl GeodeticCoord {
    pub fn new(latitude: f64, longitude: f64, height: f64) -> Result<Self, GeodesyError> {
        use std::f64::consts::{FRAC_PI_2, PI};
        if !(latitude.abs() <= FRAC_PI_2) {
            return Err(GeodesyError::AngleRange { field: "latitude", value: latitude });
        }
        if !(longitude > -PI && longitude <= PI) {
            return Err(GeodesyError::AngleRange { field: "longitude", value: longitude });
        }
        Ok(Self { latitude, longitude, height })
    }

    pub fn from_degrees(lat_deg: f64, lon_deg: f64, height: f64) -> Result<Self, GeodesyError> {
        Self::new(lat_deg.to_radians(), lon_deg.to_radians(), height)
    }

    pub fn to_degrees(self) -> (f64, f64, f64) {
        (self.latitude.to_degrees(), self.longitude.to_degrees(), self.height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcefCoord {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EcefCoord {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }
}

/// East/north/up offset in meters from a geodetic origin. Underwater points have `up < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct EnuCoord {
    pub east: f64,
    pub north: f64,
    pub up: f64,
}

impl From<[f64; 3]> for EnuCoord {
    fn from([east, north, up]: [f64; 3]) -> Self {
        Self { east, north, up }
    }
}

impl From<EnuCoord> for [f64; 3] {
    fn from(p: EnuCoord) -> Self {
        [p.east, p.north, p.up]
    }
}

impl EnuCoord {
    pub const fn new(east: f64, north: f64, up: f64) -> Self {
        Self { east, north, up }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.east, self.north, self.up)
    }

    pub fn from_vector(v: Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    /// Positive-down depth, the convention used by the water column.
    pub fn depth(self) -> f64 {
        -self.up
    }

    pub fn distance(self, other: EnuCoord) -> f64 {
        (self.to_vector() - other.to_vector()).norm()
    }

    pub fn horizontal_distance(self, other: EnuCoord) -> f64 {
        (self.east - other.east).hypot(self.north - other.north)
    }
}

pub fn geodetic_to_ecef(g: GeodeticCoord) -> EcefCoord {
    let (sin_lat, cos_lat) = g.latitude.sin_cos();
    let (sin_lon, cos_lon) = g.longitude.sin_cos();
    let n = WGS84_A / (1.0 - WGS84_E2 * sin_lat * sin_lat).sqrt();
    EcefCoord {
        x: (n + g.height) * cos_lat * cos_lon,
        y: (n + g.height) * cos_lat * sin_lon,
        z: (n * (1.0 - WGS84_E2) + g.height) * sin_lat,
    }
}

/// Inverse of [`geodetic_to_ecef`] by Bowring's iteration on the parametric latitude.
///
/// Longitude is reported as 0 on the polar axis.
pub fn ecef_to_geodetic(e: EcefCoord) -> Result<GeodeticCoord, GeodesyError> {
    let ep2 = WGS84_E2 / (1.0 - WGS84_E2);
    let p = e.x.hypot(e.y);
    if !(e.x.is_finite() && e.y.is_finite() && e.z.is_finite()) || p.hypot(e.z) < 1.0 {
        return Err(GeodesyError::Geocenter([e.x, e.y, e.z]));
    }
    let longitude = if p == 0.0 { 0.0 } else { e.y.atan2(e.x) };
    if p == 0.0 {
        let latitude = std::f64::consts::FRAC_PI_2.copysign(e.z);
        return Ok(GeodeticCoord { latitude, longitude, height: e.z.abs() - WGS84_B });
    }

    let mut beta = (e.z * WGS84_A).atan2(p * WGS84_B);
    let mut latitude = 0.0;
    for _ in 0..10 {
        let (sb, cb) = beta.sin_cos();
        let next = (e.z + ep2 * WGS84_B * sb * sb * sb).atan2(p - WGS84_E2 * WGS84_A * cb * cb * cb);
        let done = (next - latitude).abs() < 1e-12;
        latitude = next;
        if done {
            break;
        }
        beta = ((1.0 - WGS84_F) * latitude.sin()).atan2(latitude.cos());
    }

    let (sin_lat, cos_lat) = latitude.sin_cos();
    let n = WGS84_A / (1.0 - WGS84_E2 * sin_lat * sin_lat).sqrt();
    // Projection onto the normal; well conditioned at every latitude.
    let height = p * cos_lat + e.z * sin_lat - WGS84_A * WGS84_A / n;
    Ok(GeodeticCoord { latitude, longitude, height })
}

/// Rotation taking ECEF offsets into the local ENU frame at `origin`.
fn ecef_to_enu_rotation(origin: GeodeticCoord) -> Matrix3<f64> {
    let (sl, cl) = origin.latitude.sin_cos();
    let (so, co) = origin.longitude.sin_cos();
    Matrix3::new(
        -so,
        co,
        0.0, //
        -sl * co,
        -sl * so,
        cl, //
        cl * co,
        cl * so,
        sl,
    )
}

pub fn ecef_to_enu(e: EcefCoord, origin: GeodeticCoord) -> EnuCoord {
    let o = geodetic_to_ecef(origin).to_vector();
    EnuCoord::from_vector(ecef_to_enu_rotation(origin) * (e.to_vector() - o))
}

pub fn enu_to_ecef(p: EnuCoord, origin: GeodeticCoord) -> EcefCoord {
    let o = geodetic_to_ecef(origin).to_vector();
    EcefCoord::from_vector(ecef_to_enu_rotation(origin).transpose() * p.to_vector() + o)
}

pub fn geodetic_to_enu(g: GeodeticCoord, origin: GeodeticCoord) -> EnuCoord {
    ecef_to_enu(geodetic_to_ecef(g), origin)
}

pub fn enu_to_geodetic(p: EnuCoord, origin: GeodeticCoord) -> Result<GeodeticCoord, GeodesyError> {
    ecef_to_geodetic(enu_to_ecef(p, origin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn deg(lat: f64, lon: f64, h: f64) -> GeodeticCoord {
        GeodeticCoord::from_degrees(lat, lon, h).unwrap()
    }

    #[test]
    fn equator_prime_meridian() {
        let e = geodetic_to_ecef(deg(0.0, 0.0, 0.0));
        assert_eq!((e.x, e.y, e.z), (6378137.0, 0.0, 0.0));
        let g = ecef_to_geodetic(e).unwrap();
        assert_eq!(g.latitude, 0.0);
        assert_eq!(g.longitude, 0.0);
        assert_abs_diff_eq!(g.height, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn north_pole() {
        let e = geodetic_to_ecef(deg(90.0, 0.0, 0.0));
        assert_abs_diff_eq!(e.x, 0.0, epsilon = 1e-9);
        assert_eq!(e.y, 0.0);
        assert_abs_diff_eq!(e.z, 6356752.314245179, epsilon = 1e-6);
        let g = ecef_to_geodetic(EcefCoord::new(0.0, 0.0, 6356752.314)).unwrap();
        assert_eq!(g.latitude, std::f64::consts::FRAC_PI_2);
        assert_eq!(g.longitude, 0.0);
        assert_abs_diff_eq!(g.height, 0.0, epsilon = 1e-3);
    }

    #[test]
    fn ninety_east_with_height() {
        let e = geodetic_to_ecef(deg(0.0, 90.0, 100.0));
        assert_abs_diff_eq!(e.x, 0.0, epsilon = 1e-9);
        assert_eq!(e.y, 6378237.0);
        assert_eq!(e.z, 0.0);
    }

    #[test]
    fn geocenter_rejected() {
        assert!(ecef_to_geodetic(EcefCoord::new(0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn angle_validation() {
        assert!(GeodeticCoord::from_degrees(91.0, 0.0, 0.0).is_err());
        assert!(GeodeticCoord::from_degrees(0.0, -180.0, 0.0).is_err());
        assert!(GeodeticCoord::from_degrees(0.0, 180.0, 0.0).is_ok());
    }

    #[test]
    fn round_trip_portland() {
        let g = deg(45.5, -122.6, 30.0);
        let e = geodetic_to_ecef(g);
        let back = geodetic_to_ecef(ecef_to_geodetic(e).unwrap());
        assert!((e.to_vector() - back.to_vector()).norm() < 1e-6);
    }

    #[test]
    fn origin_maps_to_zero() {
        let o = deg(38.7, -9.1, 12.0);
        let p = ecef_to_enu(geodetic_to_ecef(o), o);
        assert!(p.to_vector().norm() < 1e-9);
    }

    #[test]
    fn east_is_plus_y_at_equator() {
        let o = deg(0.0, 0.0, 0.0);
        let e = enu_to_ecef(EnuCoord::new(1.0, 0.0, 0.0), o);
        assert_abs_diff_eq!(e.x, WGS84_A, epsilon = 1e-9);
        assert_abs_diff_eq!(e.y, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(e.z, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn depth_is_negated_up() {
        assert_eq!(EnuCoord::new(1.0, 2.0, -30.0).depth(), 30.0);
    }
}
