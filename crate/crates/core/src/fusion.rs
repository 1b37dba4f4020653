//! Constant-velocity Kalman filter fusing GA fixes with pressure depth.
//!
//! State is `[east, north, up, v_east, v_north, v_up]`. Both measurement
//! models are linear, so the extended filter reduces to the linear equations;
//! all updates use the Joseph form and re-symmetrize the covariance.

use nalgebra::{Matrix3, Matrix6, RowVector6, SMatrix, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodesy::EnuCoord;

pub const ATMOSPHERIC_PRESSURE: f64 = 101_325.0;
pub const STANDARD_GRAVITY: f64 = 9.80665;
pub const SEAWATER_DENSITY: f64 = 1025.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("pressure {0} Pa is below atmospheric")]
    BelowAtmospheric(f64),
    #[error("measurement covariance is not positive definite")]
    NotPositiveDefinite,
    #[error("measurement at t={measurement} precedes filter time t={state}; predict first")]
    OutOfOrder { measurement: f64, state: f64 },
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureReading {
    /// Pa, absolute
    pub pressure: f64,
    pub timestamp: f64,
}

/// Hydrostatic depth (m, positive down) for the given water density.
pub fn pressure_to_depth_with_density(p: PressureReading, density: f64) -> Result<f64, FusionError> {
    if !(p.pressure >= ATMOSPHERIC_PRESSURE) {
        return Err(FusionError::BelowAtmospheric(p.pressure));
    }
    Ok((p.pressure - ATMOSPHERIC_PRESSURE) / (density * STANDARD_GRAVITY))
}

pub fn pressure_to_depth(p: PressureReading) -> Result<f64, FusionError> {
    pressure_to_depth_with_density(p, SEAWATER_DENSITY)
}

/// White-acceleration spectral densities per axis, m²/s³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct ProcessNoise {
    pub east: f64,
    pub north: f64,
    pub up: f64,
}

impl From<[f64; 3]> for ProcessNoise {
    fn from([east, north, up]: [f64; 3]) -> Self {
        Self { east, north, up }
    }
}

impl From<ProcessNoise> for [f64; 3] {
    fn from(q: ProcessNoise) -> Self {
        [q.east, q.north, q.up]
    }
}

impl ProcessNoise {
    pub fn isotropic(q: f64) -> Self {
        Self { east: q, north: q, up: q }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EkfState {
    pub mean: Vector6<f64>,
    pub covariance: Matrix6<f64>,
    pub timestamp: f64,
}

impl EkfState {
    pub fn new(position: EnuCoord, position_sigma: f64, velocity_sigma: f64, timestamp: f64) -> Self {
        let mut mean = Vector6::zeros();
        mean.fixed_rows_mut::<3>(0).copy_from(&position.to_vector());
        let (pv, vv) = (position_sigma * position_sigma, velocity_sigma * velocity_sigma);
        let covariance = Matrix6::from_diagonal(&Vector6::new(pv, pv, pv, vv, vv, vv));
        Self { mean, covariance, timestamp }
    }

    pub fn position(&self) -> EnuCoord {
        EnuCoord::new(self.mean[0], self.mean[1], self.mean[2])
    }

    pub fn velocity(&self) -> Vector3<f64> {
        self.mean.fixed_rows::<3>(3).into_owned()
    }

    pub fn position_variance(&self) -> Vector3<f64> {
        Vector3::new(self.covariance[(0, 0)], self.covariance[(1, 1)], self.covariance[(2, 2)])
    }

    /// Smallest covariance eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        self.covariance.symmetric_eigen().eigenvalues.min()
    }

    /// Largest absolute asymmetry |P - Pᵀ|.
    pub fn asymmetry(&self) -> f64 {
        (self.covariance - self.covariance.transpose()).amax()
    }
}

fn symmetrize(p: Matrix6<f64>) -> Matrix6<f64> {
    (p + p.transpose()) * 0.5
}

/// Constant-velocity prediction over `dt` seconds.
pub fn ekf_predict(s: &EkfState, dt: f64, noise: ProcessNoise) -> EkfState {
    let mut f = Matrix6::identity();
    let mut q = Matrix6::zeros();
    let (dt2, dt3) = (dt * dt, dt * dt * dt);
    for (k, qk) in [noise.east, noise.north, noise.up].into_iter().enumerate() {
        f[(k, k + 3)] = dt;
        q[(k, k)] = qk * dt3 / 3.0;
        q[(k, k + 3)] = qk * dt2 / 2.0;
        q[(k + 3, k)] = qk * dt2 / 2.0;
        q[(k + 3, k + 3)] = qk * dt;
    }
    EkfState {
        mean: f * s.mean,
        covariance: symmetrize(f * s.covariance * f.transpose() + q),
        timestamp: s.timestamp + dt,
    }
}

fn check_time(s: &EkfState, t: f64) -> Result<(), FusionError> {
    if t < s.timestamp {
        return Err(FusionError::OutOfOrder { measurement: t, state: s.timestamp });
    }
    Ok(())
}

/// Position update with a 3×3 measurement covariance.
pub fn ekf_update_position(
    s: &EkfState,
    measured: EnuCoord,
    r: &Matrix3<f64>,
    timestamp: f64,
) -> Result<EkfState, FusionError> {
    check_time(s, timestamp)?;
    if (r - r.transpose()).amax() > 1e-12 * r.amax().max(1.0) || r.cholesky().is_none() {
        return Err(FusionError::NotPositiveDefinite);
    }
    let h = SMatrix::<f64, 3, 6>::identity();
    let innovation = measured.to_vector() - h * s.mean;
    let innovation_cov = h * s.covariance * h.transpose() + r;
    let inv = innovation_cov.try_inverse().ok_or(FusionError::NotPositiveDefinite)?;
    let gain = s.covariance * h.transpose() * inv;
    let i_kh = Matrix6::identity() - gain * h;
    Ok(EkfState {
        mean: s.mean + gain * innovation,
        covariance: symmetrize(i_kh * s.covariance * i_kh.transpose() + gain * r * gain.transpose()),
        timestamp: s.timestamp,
    })
}

/// Update with a GA fix. `timestamp` is the fix epoch.
pub fn ekf_update_fix(
    s: &EkfState,
    fix: &crate::multilateration::PositionEstimate,
    r: &Matrix3<f64>,
    timestamp: f64,
) -> Result<EkfState, FusionError> {
    ekf_update_position(s, fix.position, r, timestamp)
}

/// Scalar update of the up component with measurement `-depth`.
pub fn ekf_update_depth(s: &EkfState, depth: f64, variance: f64) -> Result<EkfState, FusionError> {
    if !(variance > 0.0) {
        return Err(FusionError::NonPositive("depth variance"));
    }
    let mut h = RowVector6::zeros();
    h[2] = 1.0;
    let innovation = -depth - s.mean[2];
    let innovation_var = s.covariance[(2, 2)] + variance;
    let gain: Vector6<f64> = s.covariance.column(2) / innovation_var;
    let i_kh = Matrix6::identity() - gain * h;
    Ok(EkfState {
        mean: s.mean + gain * innovation,
        covariance: symmetrize(i_kh * s.covariance * i_kh.transpose() + gain * gain.transpose() * variance),
        timestamp: s.timestamp,
    })
}
