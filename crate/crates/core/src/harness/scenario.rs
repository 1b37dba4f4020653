//! Scenario files: strict TOML, validated into a [`Scenario`].

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::{EnvironmentError, Layer, WaterColumn};
use crate::geodesy::{geodetic_to_enu, EnuCoord, GeodeticCoord};
use crate::multilateration::{GaConfig, LocalizeError};
use crate::propagation::ChannelConfig;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid `{key}`: {message}")]
    Invalid { key: String, message: String },
}

impl ScenarioError {
    fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Invalid { key: key.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaterColumnSpec {
    pub layers: Vec<Layer>,
}

/// Degrees and meters, as written in the file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeodeticSpec {
    pub latitude: f64,
    pub longitude: f64,
    #[serde(default)]
    pub height: f64,
}

impl GeodeticSpec {
    fn to_coord(self, key: &str) -> Result<GeodeticCoord, ScenarioError> {
        GeodeticCoord::from_degrees(self.latitude, self.longitude, self.height)
            .map_err(|e| ScenarioError::invalid(key, e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorSpec {
    pub id: String,
    pub latitude: f64,
    pub longitude: f64,
    #[serde(default)]
    pub height: f64,
    /// Per-axis (east, north, up) GPS noise σ in meters.
    #[serde(default)]
    pub gps_sigma: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub t: f64,
    pub position: EnuCoord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixSigmaMode {
    /// σ = max(fix_sigma, dispersion_scale · population_dispersion)
    #[default]
    Dispersion,
    /// σ = fix_sigma
    Fixed,
}

fn d_process_noise() -> [f64; 3] {
    [0.01, 0.01, 0.01]
}
fn d_initial_position_sigma() -> f64 {
    100.0
}
fn d_initial_velocity_sigma() -> f64 {
    1.0
}
fn d_fix_sigma() -> f64 {
    2.0
}
fn d_dispersion_scale() -> f64 {
    1.0
}
fn d_pressure_sigma() -> f64 {
    // 0.1 m of seawater
    0.1 * crate::fusion::SEAWATER_DENSITY * crate::fusion::STANDARD_GRAVITY
}
fn d_density() -> f64 {
    crate::fusion::SEAWATER_DENSITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EkfConfig {
    /// White-acceleration spectral density per axis, m²/s³.
    #[serde(default = "d_process_noise")]
    pub process_noise: [f64; 3],
    #[serde(default = "d_initial_position_sigma")]
    pub initial_position_sigma: f64,
    #[serde(default = "d_initial_velocity_sigma")]
    pub initial_velocity_sigma: f64,
    #[serde(default)]
    pub fix_sigma_mode: FixSigmaMode,
    /// m
    #[serde(default = "d_fix_sigma")]
    pub fix_sigma: f64,
    #[serde(default = "d_dispersion_scale")]
    pub dispersion_scale: f64,
    /// Pressure sensor noise σ, Pa.
    #[serde(default = "d_pressure_sigma")]
    pub pressure_sigma: f64,
    /// kg/m³
    #[serde(default = "d_density")]
    pub water_density: f64,
}

impl Default for EkfConfig {
    fn default() -> Self {
        Self {
            process_noise: d_process_noise(),
            initial_position_sigma: d_initial_position_sigma(),
            initial_velocity_sigma: d_initial_velocity_sigma(),
            fix_sigma_mode: FixSigmaMode::default(),
            fix_sigma: d_fix_sigma(),
            dispersion_scale: d_dispersion_scale(),
            pressure_sigma: d_pressure_sigma(),
            water_density: d_density(),
        }
    }
}

impl EkfConfig {
    /// Depth variance (m²) implied by the pressure noise.
    pub fn depth_variance(&self) -> f64 {
        let s = self.pressure_sigma / (self.water_density * crate::fusion::STANDARD_GRAVITY);
        s * s
    }
}

fn d_ping_interval() -> f64 {
    1.0
}
fn d_carrier() -> f64 {
    10.0
}

/// The file layout. Every table rejects unknown keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub seed: u64,
    /// kHz
    #[serde(default = "d_carrier")]
    pub carrier_frequency: f64,
    /// s
    #[serde(default = "d_ping_interval")]
    pub ping_interval: f64,
    pub water_column: WaterColumnSpec,
    #[serde(default)]
    pub channel: ChannelConfig,
    pub anchors: Vec<AnchorSpec>,
    #[serde(default)]
    pub origin: Option<GeodeticSpec>,
    pub trajectory: Vec<Waypoint>,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default)]
    pub ekf: EkfConfig,
}

/// A surface robot resolved into the local frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioAnchor {
    pub id: String,
    pub geodetic: GeodeticCoord,
    /// Nominal ENU position of the hydrophone.
    pub position: EnuCoord,
    pub gps_sigma: [f64; 3],
}

/// A fully validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub column: WaterColumn,
    pub origin: GeodeticCoord,
    pub anchors: Vec<ScenarioAnchor>,
    /// Original document, echoed into run outputs.
    pub source: String,
}

impl Scenario {
    pub fn seed(&self) -> u64 {
        self.file.seed
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.file.seed = seed;
    }

    pub fn trajectory(&self) -> &[Waypoint] {
        &self.file.trajectory
    }

    /// Piecewise-linear position at `t`, held constant outside the waypoints.
    pub fn position_at(&self, t: f64) -> EnuCoord {
        let wps = &self.file.trajectory;
        let first = wps[0];
        if t <= first.t {
            return first.position;
        }
        for pair in wps.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if t <= b.t {
                let w = (t - a.t) / (b.t - a.t);
                let (pa, pb) = (a.position.to_vector(), b.position.to_vector());
                return EnuCoord::from_vector(pa + (pb - pa) * w);
            }
        }
        wps[wps.len() - 1].position
    }

    /// Ping epochs from the first waypoint to the last, inclusive.
    pub fn epoch_times(&self) -> Vec<f64> {
        let wps = &self.file.trajectory;
        let (start, end) = (wps[0].t, wps[wps.len() - 1].t);
        let dt = self.file.ping_interval;
        let mut times = Vec::new();
        let mut k = 0u64;
        loop {
            let t = start + k as f64 * dt;
            if t > end + 1e-9 * dt {
                break;
            }
            times.push(t);
            k += 1;
        }
        times
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut file: ScenarioFile = toml::from_str(text)?;
    let doc: toml::Table = text.parse()?;
    let explicit_bounds = doc.get("ga").and_then(|ga| ga.get("search_bounds")).is_some();
    if !explicit_bounds {
        // default box, reaching down to the floor of this column
        let depth: f64 = file.water_column.layers.iter().map(|l| l.thickness).sum();
        if depth.is_finite() && depth > 0.0 {
            file.ga.search_bounds.min.up = -depth;
        }
    }
    validate(file, text.to_owned())
}

fn positive(key: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ScenarioError::invalid(key, format!("{v} must be positive")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ScenarioError::invalid(key, format!("{v} must be non-negative")))
    }
}

fn validate(file: ScenarioFile, source: String) -> Result<Scenario, ScenarioError> {
    let column = WaterColumn::new(file.water_column.layers.clone()).map_err(|e| match &e {
        EnvironmentError::InvalidLayer { layer, field, .. } => {
            ScenarioError::invalid(format!("water_column.layers[{layer}].{field}"), e.to_string())
        }
        _ => ScenarioError::invalid("water_column.layers", e.to_string()),
    })?;
    let total_depth = column.total_depth();

    positive("carrier_frequency", file.carrier_frequency)?;
    positive("ping_interval", file.ping_interval)?;

    let ch = &file.channel;
    for (key, v) in [
        ("channel.source_level", ch.source_level),
        ("channel.noise_level", ch.noise_level),
        ("channel.detection_threshold", ch.detection_threshold),
    ] {
        if !v.is_finite() {
            return Err(ScenarioError::invalid(key, "must be finite"));
        }
    }
    non_negative("channel.tof_noise_sigma", ch.tof_noise_sigma)?;

    if file.anchors.len() < 4 {
        return Err(ScenarioError::invalid(
            "anchors",
            format!("at least 4 anchors required, found {}", file.anchors.len()),
        ));
    }
    let origin = match file.origin {
        Some(o) => o.to_coord("origin")?,
        None => {
            let a = &file.anchors[0];
            GeodeticSpec { latitude: a.latitude, longitude: a.longitude, height: a.height }.to_coord("anchors[0]")?
        }
    };
    let mut anchors = Vec::with_capacity(file.anchors.len());
    for (i, a) in file.anchors.iter().enumerate() {
        let key = format!("anchors[{i}]");
        if a.id.is_empty() {
            return Err(ScenarioError::invalid(format!("{key}.id"), "must not be empty"));
        }
        if file.anchors[..i].iter().any(|b| b.id == a.id) {
            return Err(ScenarioError::invalid(format!("{key}.id"), format!("duplicate id {:?}", a.id)));
        }
        for (axis, s) in a.gps_sigma.iter().enumerate() {
            non_negative(&format!("{key}.gps_sigma[{axis}]"), *s)?;
        }
        let geodetic =
            GeodeticSpec { latitude: a.latitude, longitude: a.longitude, height: a.height }.to_coord(&key)?;
        let position = geodetic_to_enu(geodetic, origin);
        if position.depth() > total_depth {
            return Err(ScenarioError::invalid(key, format!("hydrophone {} m below the column", position.depth())));
        }
        anchors.push(ScenarioAnchor { id: a.id.clone(), geodetic, position, gps_sigma: a.gps_sigma });
    }

    if file.trajectory.is_empty() {
        return Err(ScenarioError::invalid("trajectory", "at least one waypoint required"));
    }
    for (i, w) in file.trajectory.iter().enumerate() {
        let key = format!("trajectory[{i}]");
        if !w.t.is_finite() {
            return Err(ScenarioError::invalid(format!("{key}.t"), "must be finite"));
        }
        if i > 0 && !(w.t > file.trajectory[i - 1].t) {
            return Err(ScenarioError::invalid(format!("{key}.t"), "timestamps must be strictly increasing"));
        }
        let d = w.position.depth();
        if !(d >= 0.0 && d <= total_depth) || !w.position.east.is_finite() || !w.position.north.is_finite() {
            return Err(ScenarioError::invalid(
                format!("{key}.position"),
                format!("depth {d} m outside the column [0, {total_depth}]"),
            ));
        }
    }

    file.ga.validate().map_err(|e| match e {
        LocalizeError::Config(msg) => ScenarioError::invalid("ga", msg),
        other => ScenarioError::invalid("ga", other.to_string()),
    })?;
    if -file.ga.search_bounds.min.up > total_depth {
        return Err(ScenarioError::invalid(
            "ga.search_bounds.min",
            format!("up = {} lies below the {total_depth} m column", file.ga.search_bounds.min.up),
        ));
    }

    let ekf = &file.ekf;
    for (axis, q) in ekf.process_noise.iter().enumerate() {
        non_negative(&format!("ekf.process_noise[{axis}]"), *q)?;
    }
    positive("ekf.initial_position_sigma", ekf.initial_position_sigma)?;
    positive("ekf.initial_velocity_sigma", ekf.initial_velocity_sigma)?;
    positive("ekf.fix_sigma", ekf.fix_sigma)?;
    non_negative("ekf.dispersion_scale", ekf.dispersion_scale)?;
    positive("ekf.pressure_sigma", ekf.pressure_sigma)?;
    positive("ekf.water_density", ekf.water_density)?;

    Ok(Scenario { file, column, origin, anchors, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"
seed = 1

[water_column]
layers = [{ thickness = 100.0, temperature = 10.0, salinity = 35.0, ph = 8.0 }]

[[anchors]]
id = "a"
latitude = 41.0
longitude = -8.0

[[anchors]]
id = "b"
latitude = 41.001
longitude = -8.0

[[anchors]]
id = "c"
latitude = 41.0
longitude = -8.001

[[anchors]]
id = "d"
latitude = 41.001
longitude = -8.001

[[trajectory]]
t = 0.0
position = [10.0, 20.0, -30.0]

[[trajectory]]
t = 4.0
position = [14.0, 20.0, -30.0]
"#;

    #[test]
    fn minimal_file_fills_defaults() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.file.carrier_frequency, 10.0);
        assert_eq!(s.file.ping_interval, 1.0);
        let bounds = s.file.ga.search_bounds;
        assert_eq!(bounds.min, EnuCoord::new(-500.0, -500.0, -100.0));
        assert_eq!(
            GaConfig { search_bounds: GaConfig::default().search_bounds, ..s.file.ga.clone() },
            GaConfig::default()
        );
        assert_eq!(s.file.ekf, EkfConfig::default());
        assert_eq!(s.column.total_depth(), 100.0);
        assert_eq!(s.anchors[0].position, EnuCoord::new(0.0, 0.0, 0.0));
        assert!(s.anchors[1].position.north > 100.0);
        assert_eq!(s.epoch_times(), vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.position_at(1.0), EnuCoord::new(11.0, 20.0, -30.0));
        assert_eq!(s.position_at(9.0), EnuCoord::new(14.0, 20.0, -30.0));
    }

    #[test]
    fn three_anchors_rejected() {
        let text = MINIMAL.replace("[[anchors]]\nid = \"d\"\nlatitude = 41.001\nlongitude = -8.001\n", "");
        assert_eq!(text.matches("[[anchors]]").count(), 3);
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("at least 4 anchors"), "{err}");
    }

    #[test]
    fn unknown_key_named() {
        let text = MINIMAL.replace("seed = 1", "seed = 1\nmystery = 3");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("mystery"), "{err}");
        let nested = MINIMAL.replace("id = \"a\"", "id = \"a\"\ncolour = \"red\"");
        assert!(parse_scenario(&nested).unwrap_err().to_string().contains("colour"));
    }

    #[test]
    fn field_level_errors() {
        let text = MINIMAL.replace("thickness = 100.0", "thickness = -1.0");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("water_column.layers[0].thickness"), "{err}");

        let text = MINIMAL.replace("t = 4.0", "t = 0.0");
        assert!(parse_scenario(&text).unwrap_err().to_string().contains("trajectory[1].t"));

        let text = MINIMAL.replace("[10.0, 20.0, -30.0]", "[10.0, 20.0, -300.0]");
        assert!(parse_scenario(&text).unwrap_err().to_string().contains("trajectory[0].position"));

        let text = format!("{MINIMAL}\n[ga]\npopulation_size = 2\n");
        assert!(parse_scenario(&text).unwrap_err().to_string().contains("population_size"));
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = parse_scenario("seed = \n").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }
}
