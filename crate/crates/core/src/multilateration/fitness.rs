use std::collections::HashMap;

use crate::environment::AcousticProfile;
use crate::geodesy::EnuCoord;
use crate::propagation::{ChannelModel, PingMeasurement, PropagationError};

use super::{Anchor, FitnessMode, LocalizeError};

/// Residual term charged when a candidate has no direct path to an anchor.
pub const NO_PATH_PENALTY: f64 = 1e6;

/// Converts a travel time into a range using the thickness-weighted harmonic
/// mean sound speed between the two depths.
pub fn range_from_tof(
    tof: f64,
    profile: &AcousticProfile,
    anchor_depth: f64,
    assumed_target_depth: f64,
) -> Result<f64, PropagationError> {
    let top = anchor_depth.min(assumed_target_depth);
    let bottom = anchor_depth.max(assumed_target_depth);
    let local = profile.layer_index_at(top)?;
    profile.layer_index_at(bottom)?;
    let spans = profile.spans(top, bottom);
    let speed = if spans.is_empty() {
        profile.layers()[local].sound_speed
    } else {
        let slowness: f64 = spans.iter().map(|&(i, dz)| dz / profile.layers()[i].sound_speed).sum();
        (bottom - top) / slowness
    };
    Ok(tof * speed)
}

/// Measurements resolved against their anchors, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct FitnessContext<'a> {
    channel: &'a ChannelModel,
    mode: FitnessMode,
    terms: Vec<Term>,
    distinct_anchors: usize,
}

#[derive(Debug, Clone, Copy)]
struct Term {
    anchor: EnuCoord,
    tof: f64,
    weight: f64,
}

impl<'a> FitnessContext<'a> {
    pub fn new(
        measurements: &[PingMeasurement],
        anchors: &[Anchor],
        mode: FitnessMode,
        snr_weighting: bool,
        channel: &'a ChannelModel,
    ) -> Result<Self, LocalizeError> {
        let mut by_id = HashMap::with_capacity(anchors.len());
        for a in anchors {
            if by_id.insert(a.id.as_str(), a.position).is_some() {
                return Err(LocalizeError::DuplicateAnchor(a.id.clone()));
            }
        }
        let weights: Vec<f64> = if snr_weighting && !measurements.is_empty() {
            let lin: Vec<f64> = measurements.iter().map(|m| 10f64.powf(m.snr / 10.0)).collect();
            let mean = lin.iter().sum::<f64>() / lin.len() as f64;
            lin.into_iter().map(|w| w / mean).collect()
        } else {
            vec![1.0; measurements.len()]
        };
        let terms = measurements
            .iter()
            .zip(weights)
            .map(|(m, weight)| {
                by_id
                    .get(m.anchor_id.as_str())
                    .map(|&anchor| Term { anchor, tof: m.tof_measured, weight })
                    .ok_or_else(|| LocalizeError::UnknownAnchor(m.anchor_id.clone()))
            })
            .collect::<Result<_, _>>()?;
        let mut ids: Vec<&str> = measurements.iter().map(|m| m.anchor_id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        Ok(Self { channel, mode, terms, distinct_anchors: ids.len() })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of distinct anchor ids among the measurements.
    pub fn distinct_anchors(&self) -> usize {
        self.distinct_anchors
    }

    /// Weighted sum of squared residuals at `candidate`.
    pub fn evaluate(&self, candidate: EnuCoord) -> Result<f64, LocalizeError> {
        let total_depth = self.channel.profile.total_depth();
        let depth = candidate.depth();
        if !(depth >= 0.0 && depth <= total_depth) {
            return Err(LocalizeError::OutsideColumn { depth, total_depth });
        }
        let mut sum = 0.0;
        for t in &self.terms {
            let residual = match self.mode {
                FitnessMode::TofResidual => match self.channel.tof(candidate, t.anchor) {
                    Ok(model) => model - t.tof,
                    Err(PropagationError::NoDirectPath { .. }) => {
                        sum += t.weight * NO_PATH_PENALTY;
                        continue;
                    }
                    Err(e) => unreachable!("candidate validated against the column: {e}"),
                },
                FitnessMode::RangeResidual => {
                    let anchor_depth = t.anchor.depth().max(0.0);
                    let range = range_from_tof(t.tof, &self.channel.profile, anchor_depth, depth)
                        .expect("depths validated against the column");
                    candidate.distance(t.anchor) - range
                }
            };
            sum += t.weight * residual * residual;
        }
        Ok(sum)
    }
}

/// Non-negative misfit of `candidate` against the measurements.
pub fn fitness(
    candidate: EnuCoord,
    measurements: &[PingMeasurement],
    anchors: &[Anchor],
    mode: FitnessMode,
    channel: &ChannelModel,
) -> Result<f64, LocalizeError> {
    FitnessContext::new(measurements, anchors, mode, false, channel)?.evaluate(candidate)
}
