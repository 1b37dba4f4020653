use nalgebra::Matrix3;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::environment::{AcousticProfile, EnvironmentError};
use crate::fusion::{
    ekf_predict, ekf_update_depth, ekf_update_fix, pressure_to_depth_with_density, EkfState, FusionError,
    PressureReading, ProcessNoise, ATMOSPHERIC_PRESSURE, STANDARD_GRAVITY,
};
use crate::geodesy::EnuCoord;
use crate::multilateration::{ga_localize_traced, Anchor, GaConfig, GenerationStats, LocalizeError, PositionEstimate};
use crate::propagation::{simulate_ping, ChannelModel, PingMeasurement, PropagationError};

use super::scenario::{FixSigmaMode, Scenario};
use super::seeds::{child_rng, child_seed, Stream};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Environment(#[from] EnvironmentError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error("epoch {epoch}: {source}")]
    Localize {
        epoch: usize,
        #[source]
        source: LocalizeError,
    },
    #[error("epoch {epoch}: {source}")]
    Fusion {
        epoch: usize,
        #[source]
        source: FusionError,
    },
    #[error("epoch {0} out of range ({1} epochs)")]
    NoSuchEpoch(usize, usize),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Everything the localizer sees at one epoch.
#[derive(Debug, Clone)]
pub struct EpochInputs {
    pub epoch: usize,
    pub timestamp: f64,
    pub truth: EnuCoord,
    /// GPS-perturbed anchor positions, as reported to the localizer.
    pub anchors: Vec<Anchor>,
    pub measurements: Vec<PingMeasurement>,
    pub ga: GaConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub timestamp: f64,
    pub truth: EnuCoord,
    pub detections: usize,
    /// `None` for a fix-gap.
    pub estimate: Option<PositionEstimate>,
    /// Filter state after this epoch's updates.
    pub fused: EkfState,
    pub raw_error: Option<f64>,
    pub fused_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisRmse {
    pub east: f64,
    pub north: f64,
    pub up: f64,
    pub total: f64,
}

impl AxisRmse {
    fn from_pairs<'a>(pairs: impl Iterator<Item = (EnuCoord, EnuCoord)> + 'a) -> Option<Self> {
        let mut acc = [0.0; 3];
        let mut n = 0usize;
        for (est, truth) in pairs {
            let d = est.to_vector() - truth.to_vector();
            for k in 0..3 {
                acc[k] += d[k] * d[k];
            }
            n += 1;
        }
        if n == 0 {
            return None;
        }
        let m = acc.map(|s| (s / n as f64).sqrt());
        Some(Self { east: m[0], north: m[1], up: m[2], total: ((acc[0] + acc[1] + acc[2]) / n as f64).sqrt() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OriginSummary {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub epochs: usize,
    pub fixes: usize,
    pub fix_gaps: usize,
    pub pings: usize,
    pub detections: usize,
    pub detection_rate: f64,
    /// Over epochs with a fix.
    pub raw_rmse: Option<AxisRmse>,
    /// Over the same epochs as `raw_rmse`.
    pub fused_rmse: Option<AxisRmse>,
    /// Over every epoch, fix-gaps included.
    pub fused_rmse_all: Option<AxisRmse>,
    pub raw_max_error: Option<f64>,
    pub fused_max_error: Option<f64>,
    pub origin: OriginSummary,
    pub master_seed: u64,
    pub ga_seed: u64,
    pub path_model: String,
}

/// A scenario prepared for execution.
pub struct Simulation<'a> {
    scenario: &'a Scenario,
    channel: ChannelModel,
    times: Vec<f64>,
}

impl<'a> Simulation<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self, RunError> {
        let profile = AcousticProfile::from_column(&scenario.column, scenario.file.carrier_frequency)?;
        Ok(Self {
            scenario,
            channel: ChannelModel::new(profile, scenario.file.channel.path_model),
            times: scenario.epoch_times(),
        })
    }

    pub fn channel(&self) -> &ChannelModel {
        &self.channel
    }

    pub fn epoch_count(&self) -> usize {
        self.times.len()
    }

    /// Ground truth, noisy anchors and detected pings for epoch `k`.
    pub fn epoch_inputs(&self, k: usize) -> Result<EpochInputs, RunError> {
        let s = self.scenario;
        let seed = s.seed();
        let t = *self.times.get(k).ok_or(RunError::NoSuchEpoch(k, self.times.len()))?;
        let truth = s.position_at(t);
        let mut anchors = Vec::with_capacity(s.anchors.len());
        let mut measurements = Vec::with_capacity(s.anchors.len());
        for (i, a) in s.anchors.iter().enumerate() {
            // hydrophones ride at the surface
            let hydrophone = EnuCoord { up: a.position.up.min(0.0), ..a.position };

            let mut gps = child_rng(seed, Stream::Gps, i as u64, k as u64);
            let mut reported: [f64; 3] = a.position.into();
            for (x, sigma) in reported.iter_mut().zip(a.gps_sigma) {
                let z: f64 = gps.sample(StandardNormal);
                *x += sigma * z;
            }
            anchors.push(Anchor::new(a.id.clone(), reported.into()));

            let mut rng = child_rng(seed, Stream::Ping, i as u64, k as u64);
            if let Some(m) =
                simulate_ping(&self.channel.profile, &s.file.channel, &a.id, truth, hydrophone, &mut rng, t)?
            {
                measurements.push(m);
            }
        }
        let ga = GaConfig { seed: child_seed(seed, Stream::Ga, s.file.ga.seed, k as u64), ..s.file.ga.clone() };
        Ok(EpochInputs { epoch: k, timestamp: t, truth, anchors, measurements, ga })
    }

    /// Runs the GA on one epoch's inputs; `None` when fewer than four anchors heard the ping.
    pub fn localize(
        &self,
        inputs: &EpochInputs,
        trace: impl FnMut(&GenerationStats),
    ) -> Result<Option<PositionEstimate>, RunError> {
        if inputs.measurements.len() < 4 {
            return Ok(None);
        }
        ga_localize_traced(&inputs.measurements, &inputs.anchors, &inputs.ga, &self.channel, trace)
            .map(Some)
            .map_err(|source| RunError::Localize { epoch: inputs.epoch, source })
    }

    fn fix_covariance(&self, fix: &PositionEstimate) -> Matrix3<f64> {
        let ekf = &self.scenario.file.ekf;
        let sigma = match ekf.fix_sigma_mode {
            FixSigmaMode::Fixed => ekf.fix_sigma,
            FixSigmaMode::Dispersion => ekf.fix_sigma.max(ekf.dispersion_scale * fix.population_dispersion),
        };
        Matrix3::identity() * (sigma * sigma)
    }

    pub fn run(&self) -> Result<(Vec<EpochRecord>, RunSummary), RunError> {
        let s = self.scenario;
        let ekf = &s.file.ekf;
        let noise = ProcessNoise::from(ekf.process_noise);
        let mut state: Option<EkfState> = None;
        let mut records = Vec::with_capacity(self.times.len());
        let mut detections = 0;

        for k in 0..self.times.len() {
            let inputs = self.epoch_inputs(k)?;
            let t = inputs.timestamp;
            detections += inputs.measurements.len();
            let estimate = self.localize(&inputs, |_| {})?;
            let fusion_err = |source| RunError::Fusion { epoch: k, source };

            let mut st = match state.take() {
                None => EkfState::new(EnuCoord::default(), ekf.initial_position_sigma, ekf.initial_velocity_sigma, t),
                Some(prev) => ekf_predict(&prev, t - prev.timestamp, noise),
            };
            if let Some(fix) = &estimate {
                st = ekf_update_fix(&st, fix, &self.fix_covariance(fix), t).map_err(fusion_err)?;
            }

            let true_depth = inputs.truth.depth().max(0.0);
            let mut rng = child_rng(s.seed(), Stream::Pressure, 0, k as u64);
            let z: f64 = rng.sample(StandardNormal);
            let reading = PressureReading {
                pressure: ATMOSPHERIC_PRESSURE
                    + ekf.water_density * STANDARD_GRAVITY * true_depth
                    + ekf.pressure_sigma * z,
                timestamp: t,
            };
            match pressure_to_depth_with_density(reading, ekf.water_density) {
                Ok(depth) => st = ekf_update_depth(&st, depth, ekf.depth_variance()).map_err(fusion_err)?,
                Err(e) => log::debug!("epoch {k}: skipping depth update: {e}"),
            }

            let raw_error = estimate.as_ref().map(|e| e.position.distance(inputs.truth));
            records.push(EpochRecord {
                epoch: k,
                timestamp: t,
                truth: inputs.truth,
                detections: inputs.measurements.len(),
                estimate,
                fused_error: st.position().distance(inputs.truth),
                fused: st.clone(),
                raw_error,
            });
            state = Some(st);
        }

        let summary = self.summarize(&records, detections);
        Ok((records, summary))
    }

    fn summarize(&self, records: &[EpochRecord], detections: usize) -> RunSummary {
        let s = self.scenario;
        let pings = records.len() * s.anchors.len();
        let fixed = || records.iter().filter(|r| r.estimate.is_some());
        let max =
            |it: &mut dyn Iterator<Item = f64>| it.fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
        let (lat, lon, h) = s.origin.to_degrees();
        RunSummary {
            epochs: records.len(),
            fixes: fixed().count(),
            fix_gaps: records.len() - fixed().count(),
            pings,
            detections,
            detection_rate: if pings == 0 { 0.0 } else { detections as f64 / pings as f64 },
            raw_rmse: AxisRmse::from_pairs(fixed().map(|r| (r.estimate.as_ref().unwrap().position, r.truth))),
            fused_rmse: AxisRmse::from_pairs(fixed().map(|r| (r.fused.position(), r.truth))),
            fused_rmse_all: AxisRmse::from_pairs(records.iter().map(|r| (r.fused.position(), r.truth))),
            raw_max_error: max(&mut fixed().filter_map(|r| r.raw_error)),
            fused_max_error: max(&mut records.iter().map(|r| r.fused_error)),
            origin: OriginSummary { latitude_deg: lat, longitude_deg: lon, height: h },
            master_seed: s.seed(),
            ga_seed: s.file.ga.seed,
            path_model: s.file.channel.path_model.to_string(),
        }
    }
}

/// Runs the full pipeline over every ping epoch.
pub fn run_simulation(scenario: &Scenario) -> Result<(Vec<EpochRecord>, RunSummary), RunError> {
    Simulation::new(scenario)?.run()
}
