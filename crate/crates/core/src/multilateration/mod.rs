//! Beacon localization from surface-anchor pings with a real-coded genetic algorithm.

mod fitness;
mod ga;

pub use fitness::{fitness, range_from_tof, FitnessContext, NO_PATH_PENALTY};
pub use ga::{evolve_generation, ga_localize, ga_localize_traced, GenerationStats};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodesy::EnuCoord;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LocalizeError {
    #[error("no measurements")]
    NoMeasurements,
    #[error("underdetermined: {0} distinct anchors, need at least 4")]
    Underdetermined(usize),
    #[error("measurement references unknown anchor {0:?}")]
    UnknownAnchor(String),
    #[error("duplicate anchor id {0:?}")]
    DuplicateAnchor(String),
    #[error("invalid GA config: {0}")]
    Config(String),
    #[error("candidate depth {depth} m outside the column [0, {total_depth}]")]
    OutsideColumn { depth: f64, total_depth: f64 },
}

/// A surface robot at a (noisy) GPS-derived ENU position.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub id: String,
    pub position: EnuCoord,
}

impl Anchor {
    pub fn new(id: impl Into<String>, position: EnuCoord) -> Self {
        Self { id: id.into(), position }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitnessMode {
    /// Σ (model TOF − measured TOF)², s²
    #[default]
    TofResidual,
    /// Σ (geometric distance − TOF-derived range)², m²
    RangeResidual,
}

/// Axis-aligned ENU search box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchBounds {
    pub min: EnuCoord,
    pub max: EnuCoord,
}

impl SearchBounds {
    pub fn new(min: EnuCoord, max: EnuCoord) -> Self {
        Self { min, max }
    }

    pub(crate) fn lower(&self) -> [f64; 3] {
        self.min.into()
    }

    pub(crate) fn upper(&self) -> [f64; 3] {
        self.max.into()
    }

    pub fn contains(&self, p: EnuCoord) -> bool {
        let (lo, hi, x) = (self.lower(), self.upper(), <[f64; 3]>::from(p));
        (0..3).all(|k| x[k] >= lo[k] && x[k] <= hi[k])
    }

    pub fn largest_extent(&self) -> f64 {
        let (lo, hi) = (self.lower(), self.upper());
        (0..3).map(|k| hi[k] - lo[k]).fold(0.0, f64::max)
    }

    pub fn clamp(&self, p: [f64; 3]) -> [f64; 3] {
        let (lo, hi) = (self.lower(), self.upper());
        std::array::from_fn(|k| p[k].clamp(lo[k], hi[k]))
    }
}

impl Default for SearchBounds {
    fn default() -> Self {
        Self::new(EnuCoord::new(-500.0, -500.0, -200.0), EnuCoord::new(500.0, 500.0, 0.0))
    }
}

fn d_population() -> usize {
    200
}
fn d_generations() -> usize {
    300
}
fn d_tournament() -> usize {
    3
}
fn d_crossover() -> f64 {
    0.9
}
fn d_mutation() -> f64 {
    0.3
}
fn d_decay() -> f64 {
    0.98
}
fn d_elite() -> usize {
    1
}
fn d_stagnation() -> usize {
    50
}
fn d_target() -> f64 {
    1e-12
}
fn d_gdop_warning() -> f64 {
    5.0
}
fn d_seed() -> u64 {
    42
}

/// Genetic algorithm tuning knobs. Field names double as scenario-file keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaConfig {
    #[serde(default = "d_population")]
    pub population_size: usize,
    #[serde(default = "d_generations")]
    pub generations: usize,
    #[serde(default = "d_tournament")]
    pub tournament_size: usize,
    #[serde(default = "d_crossover")]
    pub crossover_rate: f64,
    #[serde(default = "d_mutation")]
    pub mutation_rate: f64,
    /// Initial mutation σ in meters; `None` means 10% of the largest bounds extent.
    #[serde(default)]
    pub mutation_sigma_initial: Option<f64>,
    #[serde(default = "d_decay")]
    pub mutation_sigma_decay: f64,
    #[serde(default = "d_elite")]
    pub elite_count: usize,
    #[serde(default)]
    pub search_bounds: SearchBounds,
    #[serde(default)]
    pub fitness_mode: FitnessMode,
    /// Weight residuals by linear SNR (normalised to mean 1).
    #[serde(default)]
    pub snr_weighting: bool,
    /// Stop once the best fitness falls below this value.
    #[serde(default = "d_target")]
    pub fitness_target: f64,
    /// Stop after this many generations without improvement.
    #[serde(default = "d_stagnation")]
    pub stagnation_limit: usize,
    /// Population dispersion (m) above which the fix is flagged as poorly conditioned.
    #[serde(default = "d_gdop_warning")]
    pub gdop_warning_dispersion: f64,
    #[serde(default = "d_seed")]
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: d_population(),
            generations: d_generations(),
            tournament_size: d_tournament(),
            crossover_rate: d_crossover(),
            mutation_rate: d_mutation(),
            mutation_sigma_initial: None,
            mutation_sigma_decay: d_decay(),
            elite_count: d_elite(),
            search_bounds: SearchBounds::default(),
            fitness_mode: FitnessMode::default(),
            snr_weighting: false,
            fitness_target: d_target(),
            stagnation_limit: d_stagnation(),
            gdop_warning_dispersion: d_gdop_warning(),
            seed: d_seed(),
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), LocalizeError> {
        let fail = |msg: String| Err(LocalizeError::Config(msg));
        if self.population_size < 4 {
            return fail(format!("population_size = {} must be at least 4", self.population_size));
        }
        if self.tournament_size == 0 {
            return fail("tournament_size must be positive".into());
        }
        for (name, rate) in [("crossover_rate", self.crossover_rate), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&rate) {
                return fail(format!("{name} = {rate} outside [0, 1]"));
            }
        }
        if self.elite_count >= self.population_size {
            return fail(format!(
                "elite_count = {} must be below population_size = {}",
                self.elite_count, self.population_size
            ));
        }
        if let Some(s) = self.mutation_sigma_initial {
            if !(s.is_finite() && s >= 0.0) {
                return fail(format!("mutation_sigma_initial = {s} must be non-negative"));
            }
        }
        if !(self.mutation_sigma_decay > 0.0 && self.mutation_sigma_decay <= 1.0) {
            return fail(format!("mutation_sigma_decay = {} outside (0, 1]", self.mutation_sigma_decay));
        }
        let (lo, hi) = (self.search_bounds.lower(), self.search_bounds.upper());
        if (0..3).any(|k| !(lo[k].is_finite() && hi[k].is_finite() && lo[k] < hi[k])) {
            return fail("search_bounds must satisfy min < max on every axis".into());
        }
        if hi[2] > 0.0 {
            return fail(format!("search_bounds.max up = {} must be <= 0 (underwater)", hi[2]));
        }
        Ok(())
    }

    pub fn initial_sigma(&self) -> f64 {
        self.mutation_sigma_initial.unwrap_or_else(|| 0.1 * self.search_bounds.largest_extent())
    }
}

/// The GA's fix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositionEstimate {
    pub position: EnuCoord,
    /// s² or m² depending on the fitness mode
    pub best_fitness: f64,
    /// RMS distance of the best decile of the final population from the best individual, m
    pub population_dispersion: f64,
    pub generations_run: usize,
    /// Dispersion exceeded the configured GDOP warning threshold.
    pub geometry_warning: bool,
}
