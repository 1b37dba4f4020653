//! Stratified water column and the empirical per-layer acoustic properties.
//!
//! Depth is positive-down everywhere in this module. Sound speed follows the
//! Mackenzie (1981) nine-term equation and absorption follows the Ainslie &
//! McColm (1998) simplification of Francois–Garrison, evaluated in dB/km with
//! frequency in kHz.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TEMPERATURE_RANGE: (f64, f64) = (-2.0, 40.0);
pub const SALINITY_RANGE: (f64, f64) = (0.0, 42.0);
pub const PH_RANGE: (f64, f64) = (6.0, 9.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvironmentError {
    #[error("water column needs at least one layer")]
    EmptyColumn,
    #[error("layer {layer}: {field} = {value} outside [{min}, {max}]")]
    InvalidLayer { layer: usize, field: &'static str, value: f64, min: f64, max: f64 },
    #[error("{field} = {value} outside the valid domain [{min}, {max}]")]
    Domain { field: &'static str, value: f64, min: f64, max: f64 },
    #[error("depth {depth} m outside the column [0, {total_depth}]")]
    DepthOutOfRange { depth: f64, total_depth: f64 },
}

fn check(field: &'static str, value: f64, (min, max): (f64, f64)) -> Result<(), EnvironmentError> {
    if value.is_finite() && value >= min && value <= max {
        Ok(())
    } else {
        Err(EnvironmentError::Domain { field, value, min, max })
    }
}

/// One horizontally homogeneous slab of water.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    /// meters
    pub thickness: f64,
    /// degrees Celsius
    pub temperature: f64,
    /// PSU
    pub salinity: f64,
    pub ph: f64,
}

impl Layer {
    pub fn new(thickness: f64, temperature: f64, salinity: f64, ph: f64) -> Self {
        Self { thickness, temperature, salinity, ph }
    }

    /// Checks every field against its validation range.
    pub fn validate(&self) -> Result<(), EnvironmentError> {
        let fields = [
            ("thickness", self.thickness, (f64::MIN_POSITIVE, f64::MAX)),
            ("temperature", self.temperature, TEMPERATURE_RANGE),
            ("salinity", self.salinity, SALINITY_RANGE),
            ("ph", self.ph, PH_RANGE),
        ];
        for (field, value, range) in fields {
            check(field, value, range)?;
        }
        Ok(())
    }
}

/// Ordered stack of layers, index 0 at the surface.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterColumn {
    layers: Vec<Layer>,
    /// `boundaries[i]` is the top of layer `i`; the last entry is the bottom.
    boundaries: Vec<f64>,
}

impl WaterColumn {
    pub fn new(layers: Vec<Layer>) -> Result<Self, EnvironmentError> {
        if layers.is_empty() {
            return Err(EnvironmentError::EmptyColumn);
        }
        for (i, layer) in layers.iter().enumerate() {
            layer.validate().map_err(|e| match e {
                EnvironmentError::Domain { field, value, min, max } => {
                    EnvironmentError::InvalidLayer { layer: i, field, value, min, max }
                }
                other => other,
            })?;
        }
        let mut boundaries = Vec::with_capacity(layers.len() + 1);
        let mut depth = 0.0;
        boundaries.push(depth);
        for layer in &layers {
            depth += layer.thickness;
            boundaries.push(depth);
        }
        Ok(Self { layers, boundaries })
    }

    /// A single layer of the given thickness.
    pub fn homogeneous(layer: Layer) -> Result<Self, EnvironmentError> {
        Self::new(vec![layer])
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn total_depth(&self) -> f64 {
        self.boundaries[self.layers.len()]
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Index of the layer containing `depth`. A boundary belongs to the layer
    /// below it, except the bottom which belongs to the last layer.
    pub fn layer_index_at(&self, depth: f64) -> Result<usize, EnvironmentError> {
        layer_index_in(&self.boundaries, depth)
    }

    pub fn mid_depth(&self, index: usize) -> f64 {
        0.5 * (self.boundaries[index] + self.boundaries[index + 1])
    }
}

pub(crate) fn layer_index_in(boundaries: &[f64], depth: f64) -> Result<usize, EnvironmentError> {
    let total_depth = *boundaries.last().expect("non-empty boundaries");
    if !(depth >= 0.0 && depth <= total_depth) {
        return Err(EnvironmentError::DepthOutOfRange { depth, total_depth });
    }
    let n = boundaries.len() - 1;
    // number of layer tops <= depth, minus the surface
    let idx = boundaries[1..n].partition_point(|&b| b <= depth);
    Ok(idx)
}

/// Convenience wrapper over [`WaterColumn::new`].
pub fn build_water_column(layer_specs: Vec<Layer>) -> Result<WaterColumn, EnvironmentError> {
    WaterColumn::new(layer_specs)
}

// Mackenzie (1981) coefficients.
const MK_C0: f64 = 1448.96;
const MK_T1: f64 = 4.591;
const MK_T2: f64 = -5.304e-2;
const MK_T3: f64 = 2.374e-4;
const MK_S1: f64 = 1.340;
const MK_D1: f64 = 1.630e-2;
const MK_D2: f64 = 1.675e-7;
const MK_TS: f64 = -1.025e-2;
const MK_TD3: f64 = -7.139e-13;

/// Sound speed in m/s from temperature (°C), salinity (PSU) and depth (m).
pub fn sound_speed(temperature: f64, salinity: f64, depth: f64) -> Result<f64, EnvironmentError> {
    check("temperature", temperature, TEMPERATURE_RANGE)?;
    check("salinity", salinity, SALINITY_RANGE)?;
    check("depth", depth, (0.0, f64::MAX))?;
    let t = temperature;
    let ds = salinity - 35.0;
    let d = depth;
    Ok(MK_C0
        + MK_T1 * t
        + MK_T2 * t * t
        + MK_T3 * t * t * t
        + MK_S1 * ds
        + MK_D1 * d
        + MK_D2 * d * d
        + MK_TS * t * ds
        + MK_TD3 * t * d * d * d)
}

/// Absorption coefficient in dB/km.
///
/// `frequency` is in kHz and `depth` in meters; the formula itself works in km.
/// The three terms are boric acid relaxation, magnesium sulfate relaxation and
/// pure-water viscous absorption.
pub fn absorption_coeff(
    frequency: f64,
    temperature: f64,
    salinity: f64,
    ph: f64,
    depth: f64,
) -> Result<f64, EnvironmentError> {
    if !(frequency.is_finite() && frequency > 0.0) {
        return Err(EnvironmentError::Domain { field: "frequency", value: frequency, min: 0.0, max: f64::INFINITY });
    }
    check("temperature", temperature, TEMPERATURE_RANGE)?;
    check("salinity", salinity, SALINITY_RANGE)?;
    check("ph", ph, PH_RANGE)?;
    check("depth", depth, (0.0, f64::MAX))?;

    let f2 = frequency * frequency;
    let t = temperature;
    let s = salinity;
    let z = depth / 1000.0;

    let f_boric = 0.78 * (s / 35.0).sqrt() * (t / 26.0).exp();
    let f_mgso4 = 42.0 * (t / 17.0).exp();

    let boric = 0.106 * f_boric * f2 / (f_boric * f_boric + f2) * ((ph - 8.0) / 0.56).exp();
    let mgso4 = 0.52 * (1.0 + t / 43.0) * (s / 35.0) * f_mgso4 * f2 / (f_mgso4 * f_mgso4 + f2) * (-z / 6.0).exp();
    let water = 0.00049 * f2 * (-(t / 27.0 + z / 17.0)).exp();
    Ok(boric + mgso4 + water)
}

/// Acoustic properties of one layer at the carrier frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayerAcoustics {
    /// m/s
    pub sound_speed: f64,
    /// dB/km
    pub absorption: f64,
}

/// Per-layer sound speed and absorption, both evaluated at each layer's mid-depth.
pub fn acoustics_profile(
    column: &WaterColumn,
    carrier_frequency: f64,
) -> Result<Vec<LayerAcoustics>, EnvironmentError> {
    column
        .layers()
        .iter()
        .enumerate()
        .map(|(i, layer)| {
            let z = column.mid_depth(i);
            Ok(LayerAcoustics {
                sound_speed: sound_speed(layer.temperature, layer.salinity, z)?,
                absorption: absorption_coeff(carrier_frequency, layer.temperature, layer.salinity, layer.ph, z)?,
            })
        })
        .collect()
}

/// Piecewise-constant acoustic profile: layer boundaries plus per-layer values.
///
/// This is what the propagation code consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct AcousticProfile {
    boundaries: Vec<f64>,
    layers: Vec<LayerAcoustics>,
    carrier_frequency: f64,
}

impl AcousticProfile {
    pub fn from_column(column: &WaterColumn, carrier_frequency: f64) -> Result<Self, EnvironmentError> {
        Ok(Self {
            boundaries: column.boundaries().to_vec(),
            layers: acoustics_profile(column, carrier_frequency)?,
            carrier_frequency,
        })
    }

    /// Builds a profile directly from thicknesses and acoustic values, bypassing
    /// the empirical formulas. Useful for synthetic sound speed profiles.
    pub fn from_parts(thicknesses: &[f64], layers: Vec<LayerAcoustics>) -> Result<Self, EnvironmentError> {
        if thicknesses.is_empty() || thicknesses.len() != layers.len() {
            return Err(EnvironmentError::EmptyColumn);
        }
        let mut boundaries = vec![0.0];
        for (i, &h) in thicknesses.iter().enumerate() {
            if !(h.is_finite() && h > 0.0) {
                return Err(EnvironmentError::InvalidLayer {
                    layer: i,
                    field: "thickness",
                    value: h,
                    min: 0.0,
                    max: f64::MAX,
                });
            }
            boundaries.push(boundaries[i] + h);
        }
        for (i, l) in layers.iter().enumerate() {
            if !(l.sound_speed.is_finite() && l.sound_speed > 0.0) {
                return Err(EnvironmentError::InvalidLayer {
                    layer: i,
                    field: "sound_speed",
                    value: l.sound_speed,
                    min: 0.0,
                    max: f64::MAX,
                });
            }
            if !(l.absorption.is_finite() && l.absorption >= 0.0) {
                return Err(EnvironmentError::InvalidLayer {
                    layer: i,
                    field: "absorption",
                    value: l.absorption,
                    min: 0.0,
                    max: f64::MAX,
                });
            }
        }
        Ok(Self { boundaries, layers, carrier_frequency: f64::NAN })
    }

    /// Single layer of constant sound speed and absorption.
    pub fn uniform(thickness: f64, sound_speed: f64, absorption: f64) -> Result<Self, EnvironmentError> {
        Self::from_parts(&[thickness], vec![LayerAcoustics { sound_speed, absorption }])
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn layers(&self) -> &[LayerAcoustics] {
        &self.layers
    }

    pub fn total_depth(&self) -> f64 {
        *self.boundaries.last().unwrap()
    }

    /// NaN when the profile was assembled by hand.
    pub fn carrier_frequency(&self) -> f64 {
        self.carrier_frequency
    }

    pub fn layer_index_at(&self, depth: f64) -> Result<usize, EnvironmentError> {
        layer_index_in(&self.boundaries, depth)
    }

    /// Thickness of the overlap between layer `i` and the depth interval `[top, bottom]`.
    pub(crate) fn overlap(&self, i: usize, top: f64, bottom: f64) -> f64 {
        (self.boundaries[i + 1].min(bottom) - self.boundaries[i].max(top)).max(0.0)
    }

    /// Layers overlapping the open interval `(top, bottom)` with their overlap
    /// thickness, in surface-to-bottom order.
    pub(crate) fn spans(&self, top: f64, bottom: f64) -> Vec<(usize, f64)> {
        (0..self.layers.len())
            .filter_map(|i| {
                let dz = self.overlap(i, top, bottom);
                (dz > 0.0).then_some((i, dz))
            })
            .collect()
    }
}
