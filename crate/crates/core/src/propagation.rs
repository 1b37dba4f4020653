//! Direct acoustic paths through a layered column, link budget and ping synthesis.
//!
//! Two path models are available. The refracted model enforces Snell's law
//! (cos θ / c conserved across interfaces) and solves for the ray that lands
//! at the requested horizontal range. The straight model splits the Euclidean
//! chord at layer boundaries and charges each piece at its layer's speed.
//! Only direct paths are traced: no surface or bottom bounces, no turning rays.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::{AcousticProfile, EnvironmentError};
use crate::geodesy::EnuCoord;

/// Largest tan(grazing angle) admitted in the fastest traversed layer.
///
/// `p·c_max` is then within 1e-30 of 1, so only ranges beyond
/// `1e15 × (fastest layer thickness)` are reported as unreachable.
pub const MAX_GRAZING_TAN: f64 = 1e15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropagationError {
    #[error("no direct path: range {range} m unreachable (max {max_range} m) between depths {source_depth} and {receiver_depth}")]
    NoDirectPath { source_depth: f64, receiver_depth: f64, range: f64, max_range: f64 },
    #[error(transparent)]
    Range(#[from] EnvironmentError),
    #[error("horizontal range {0} must be finite and non-negative")]
    BadRange(f64),
    #[error("path length {0} m is below the 1 m reference distance")]
    ReferenceDistance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathModel {
    #[default]
    Refracted,
    Straight,
}

impl fmt::Display for PathModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathModel::Refracted => f.write_str("refracted"),
            PathModel::Straight => f.write_str("straight"),
        }
    }
}

/// The part of a ray inside one layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub layer: usize,
    /// m
    pub length: f64,
    /// radians above the horizontal
    pub grazing_angle: f64,
    /// horizontal advance, m
    pub horizontal: f64,
    /// travel time, s
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayPath {
    /// Ordered from source to receiver.
    pub segments: Vec<Segment>,
    pub total_length: f64,
    pub tof: f64,
    /// cos θ / c in s/m. Conserved along refracted paths; for straight paths
    /// this holds cos θ / max c over the traversed layers.
    pub ray_parameter: f64,
}

impl RayPath {
    fn from_segments(segments: Vec<Segment>, ray_parameter: f64) -> Self {
        let total_length = segments.iter().map(|s| s.length).sum();
        let tof = segments.iter().map(|s| s.time).sum();
        Self { segments, total_length, tof, ray_parameter }
    }

    fn empty() -> Self {
        Self::from_segments(Vec::new(), 0.0)
    }

    pub fn horizontal_range(&self) -> f64 {
        self.segments.iter().map(|s| s.horizontal).sum()
    }
}

fn check_depth(profile: &AcousticProfile, depth: f64) -> Result<usize, PropagationError> {
    Ok(profile.layer_index_at(depth)?)
}

/// Traversed layers between two depths, ordered from source to receiver.
fn traversed(profile: &AcousticProfile, source_depth: f64, receiver_depth: f64) -> Vec<(usize, f64)> {
    let mut spans = profile.spans(source_depth.min(receiver_depth), source_depth.max(receiver_depth));
    if source_depth > receiver_depth {
        spans.reverse();
    }
    spans
}

/// Horizontal ray within the layer containing `depth`.
fn horizontal_path(profile: &AcousticProfile, depth: f64, range: f64) -> Result<RayPath, PropagationError> {
    let layer = check_depth(profile, depth)?;
    if range == 0.0 {
        return Ok(RayPath::empty());
    }
    let c = profile.layers()[layer].sound_speed;
    let seg = Segment { layer, length: range, grazing_angle: 0.0, horizontal: range, time: range / c };
    Ok(RayPath::from_segments(vec![seg], 1.0 / c))
}

/// One traversed layer, described relative to the fastest traversed layer.
struct RaySpan {
    layer: usize,
    dz: f64,
    c: f64,
    /// c / c_max
    ratio: f64,
    /// 1 - ratio², computed without cancellation
    slack: f64,
}

/// The ray is parameterised by `u = tan(grazing)` in the fastest layer rather
/// than by `p` directly: with `p = u / (c_max √(1+u²))` every per-layer
/// quantity stays well conditioned as the ray approaches grazing.
struct RayFan {
    spans: Vec<RaySpan>,
    c_max: f64,
}

impl RayFan {
    fn new(profile: &AcousticProfile, spans: &[(usize, f64)]) -> Self {
        let c_max = spans.iter().map(|&(i, _)| profile.layers()[i].sound_speed).fold(f64::MIN, f64::max);
        let spans = spans
            .iter()
            .map(|&(layer, dz)| {
                let c = profile.layers()[layer].sound_speed;
                let ratio = c / c_max;
                let slack = (c_max - c) * (c_max + c) / (c_max * c_max);
                RaySpan { layer, dz, c, ratio, slack }
            })
            .collect();
        Self { spans, c_max }
    }

    fn range_and_slope(&self, u: f64) -> (f64, f64) {
        self.spans.iter().fold((0.0, 0.0), |(x, dx), s| {
            let q = 1.0 + u * u * s.slack;
            let root = q.sqrt();
            (x + s.dz * s.ratio * u / root, dx + s.dz * s.ratio / (q * root))
        })
    }

    /// `u` in `[0, u_max]` with range(u) = target. range(u) is increasing and
    /// concave, so Newton iterates started at 0 approach the root from below.
    fn solve(&self, target: f64, u_max: f64) -> f64 {
        let tol = 1e-11 * target.max(1.0);
        let (mut lo, mut hi) = (0.0_f64, u_max);
        let mut u = 0.0_f64;
        for _ in 0..200 {
            let (x, dx) = self.range_and_slope(u);
            let err = x - target;
            if err.abs() <= tol {
                return u;
            }
            if err < 0.0 {
                lo = u;
            } else {
                hi = u;
            }
            let newton = u - err / dx;
            let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if next == u || hi - lo <= f64::EPSILON * hi {
                return next;
            }
            u = next;
        }
        u
    }

    fn ray_parameter(&self, u: f64) -> f64 {
        u / (self.c_max * (1.0 + u * u).sqrt())
    }

    fn segments(&self, u: f64) -> Vec<Segment> {
        let hyp = (1.0 + u * u).sqrt();
        self.spans
            .iter()
            .map(|s| {
                let q = (1.0 + u * u * s.slack).sqrt();
                // sin θ = q / hyp, cos θ = ratio·u / hyp
                let length = s.dz * hyp / q;
                Segment {
                    layer: s.layer,
                    length,
                    grazing_angle: q.atan2(s.ratio * u),
                    horizontal: s.dz * s.ratio * u / q,
                    time: length / s.c,
                }
            })
            .collect()
    }
}

/// Snell-law ray between two depths separated by `horizontal_range`.
pub fn trace_refracted(
    profile: &AcousticProfile,
    source_depth: f64,
    receiver_depth: f64,
    horizontal_range: f64,
) -> Result<RayPath, PropagationError> {
    check_depth(profile, source_depth)?;
    check_depth(profile, receiver_depth)?;
    if !(horizontal_range.is_finite() && horizontal_range >= 0.0) {
        return Err(PropagationError::BadRange(horizontal_range));
    }
    if source_depth == receiver_depth {
        return horizontal_path(profile, source_depth, horizontal_range);
    }

    let fan = RayFan::new(profile, &traversed(profile, source_depth, receiver_depth));
    if horizontal_range == 0.0 {
        return Ok(RayPath::from_segments(fan.segments(0.0), 0.0));
    }
    let u_max = MAX_GRAZING_TAN;
    let (max_range, _) = fan.range_and_slope(u_max);
    if max_range < horizontal_range {
        return Err(PropagationError::NoDirectPath {
            source_depth,
            receiver_depth,
            range: horizontal_range,
            max_range,
        });
    }
    let u = fan.solve(horizontal_range, u_max);
    Ok(RayPath::from_segments(fan.segments(u), fan.ray_parameter(u)))
}

/// Straight chord between two ENU points, split at layer boundaries.
pub fn trace_straight(
    profile: &AcousticProfile,
    source: EnuCoord,
    receiver: EnuCoord,
) -> Result<RayPath, PropagationError> {
    let (zs, zr) = (source.depth(), receiver.depth());
    check_depth(profile, zs)?;
    check_depth(profile, zr)?;
    let horizontal = source.horizontal_distance(receiver);
    let vertical = (zs - zr).abs();
    if vertical == 0.0 {
        return horizontal_path(profile, zs, horizontal);
    }
    let length = horizontal.hypot(vertical);
    let grazing_angle = vertical.atan2(horizontal);
    let spans = traversed(profile, zs, zr);
    let c_max = spans.iter().map(|&(i, _)| profile.layers()[i].sound_speed).fold(f64::MIN, f64::max);
    let segments = spans
        .into_iter()
        .map(|(layer, dz)| {
            let frac = dz / vertical;
            let seg_len = length * frac;
            Segment {
                layer,
                length: seg_len,
                grazing_angle,
                horizontal: horizontal * frac,
                time: seg_len / profile.layers()[layer].sound_speed,
            }
        })
        .collect();
    Ok(RayPath::from_segments(segments, grazing_angle.cos() / c_max))
}

/// Trace between two ENU points with the chosen model.
pub fn trace(
    profile: &AcousticProfile,
    model: PathModel,
    source: EnuCoord,
    receiver: EnuCoord,
) -> Result<RayPath, PropagationError> {
    match model {
        PathModel::Refracted => {
            trace_refracted(profile, source.depth(), receiver.depth(), source.horizontal_distance(receiver))
        }
        PathModel::Straight => trace_straight(profile, source, receiver),
    }
}

/// Spherical spreading plus per-segment absorption, in dB.
pub fn transmission_loss(path: &RayPath, profile: &AcousticProfile) -> Result<f64, PropagationError> {
    if !(path.total_length >= 1.0) {
        return Err(PropagationError::ReferenceDistance(path.total_length));
    }
    let absorption: f64 = path.segments.iter().map(|s| profile.layers()[s.layer].absorption * 1e-3 * s.length).sum();
    Ok(20.0 * path.total_length.log10() + absorption)
}

/// Passive sonar equation: SL − TL − NL.
pub fn snr(source_level: f64, transmission_loss: f64, noise_level: f64) -> f64 {
    source_level - transmission_loss - noise_level
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkBudget {
    pub source_level: f64,
    pub transmission_loss: f64,
    pub noise_level: f64,
    pub snr: f64,
}

impl LinkBudget {
    pub fn new(source_level: f64, transmission_loss: f64, noise_level: f64) -> Self {
        Self { source_level, transmission_loss, noise_level, snr: snr(source_level, transmission_loss, noise_level) }
    }
}

fn default_source_level() -> f64 {
    180.0
}
fn default_noise_level() -> f64 {
    60.0
}
fn default_detection_threshold() -> f64 {
    10.0
}

/// Beacon/hydrophone link parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    /// dB re 1 µPa @ 1 m
    #[serde(default = "default_source_level")]
    pub source_level: f64,
    /// dB re 1 µPa
    #[serde(default = "default_noise_level")]
    pub noise_level: f64,
    /// dB
    #[serde(default = "default_detection_threshold")]
    pub detection_threshold: f64,
    /// s, one-way timing jitter
    #[serde(default)]
    pub tof_noise_sigma: f64,
    #[serde(default)]
    pub path_model: PathModel,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            source_level: default_source_level(),
            noise_level: default_noise_level(),
            detection_threshold: default_detection_threshold(),
            tof_noise_sigma: 0.0,
            path_model: PathModel::default(),
        }
    }
}

/// One anchor's observation of a beacon ping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PingMeasurement {
    pub anchor_id: String,
    /// s
    pub tof_measured: f64,
    /// dB
    pub snr: f64,
    /// s since scenario start
    pub timestamp: f64,
}

/// Synthesizes one ping from `source` (beacon) to `receiver` (hydrophone).
///
/// Returns `Ok(None)` for a non-detection: SNR below threshold, no direct path,
/// or a noise draw that would make the time of flight non-positive. One standard
/// normal draw is consumed from `rng` whenever a path exists.
#[allow(clippy::too_many_arguments)]
pub fn simulate_ping<R: Rng + ?Sized>(
    profile: &AcousticProfile,
    config: &ChannelConfig,
    anchor_id: &str,
    source: EnuCoord,
    receiver: EnuCoord,
    rng: &mut R,
    timestamp: f64,
) -> Result<Option<PingMeasurement>, PropagationError> {
    let path = match trace(profile, config.path_model, source, receiver) {
        Ok(path) => path,
        Err(e @ PropagationError::NoDirectPath { .. }) => {
            log::debug!("anchor {anchor_id} at t={timestamp}: {e}");
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    let jitter: f64 = rng.sample(StandardNormal);
    let tof_measured = path.tof + config.tof_noise_sigma * jitter;
    let budget = LinkBudget::new(config.source_level, transmission_loss(&path, profile)?, config.noise_level);
    if budget.snr < config.detection_threshold || !(tof_measured > 0.0) {
        return Ok(None);
    }
    Ok(Some(PingMeasurement { anchor_id: anchor_id.to_owned(), tof_measured, snr: budget.snr, timestamp }))
}

/// Forward model shared by the simulator and the localizer.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    pub profile: AcousticProfile,
    pub path_model: PathModel,
}

impl ChannelModel {
    pub fn new(profile: AcousticProfile, path_model: PathModel) -> Self {
        Self { profile, path_model }
    }

    /// Model travel time between two points. Endpoints above the surface (GPS
    /// noise on a surface anchor) are projected onto it; other out-of-column
    /// points are an error.
    pub fn tof(&self, a: EnuCoord, b: EnuCoord) -> Result<f64, PropagationError> {
        let surface = |p: EnuCoord| EnuCoord { up: p.up.min(0.0), ..p };
        Ok(trace(&self.profile, self.path_model, surface(a), surface(b))?.tof)
    }
}
