//! Real-coded GA: tournament selection, BLX-0.5 crossover, Gaussian mutation
//! with geometric σ decay, elitism and clamping to the search box.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::geodesy::EnuCoord;
use crate::propagation::{ChannelModel, PingMeasurement};

use super::fitness::FitnessContext;
use super::{Anchor, GaConfig, LocalizeError, PositionEstimate};

type Genome = [f64; 3];

const BLX_ALPHA: f64 = 0.5;

/// Per-generation progress, reported to the trace callback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub mutation_sigma: f64,
    pub best: EnuCoord,
}

fn by_fitness(fitness: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(a.cmp(&b)));
    order
}

fn tournament<R: Rng + ?Sized>(fitness: &[f64], size: usize, rng: &mut R) -> usize {
    let mut best = rng.gen_range(0..fitness.len());
    for _ in 1..size {
        let challenger = rng.gen_range(0..fitness.len());
        if fitness[challenger].total_cmp(&fitness[best]) == Ordering::Less {
            best = challenger;
        }
    }
    best
}

fn blend<R: Rng + ?Sized>(a: &Genome, b: &Genome, rng: &mut R) -> (Genome, Genome) {
    let mut child = || -> Genome {
        std::array::from_fn(|k| {
            let (lo, hi) = (a[k].min(b[k]), a[k].max(b[k]));
            let spread = BLX_ALPHA * (hi - lo);
            lo - spread + rng.gen::<f64>() * (hi - lo + 2.0 * spread)
        })
    };
    (child(), child())
}

fn mutate<R: Rng + ?Sized>(g: &mut Genome, rate: f64, sigma: f64, rng: &mut R) {
    for x in g.iter_mut() {
        if rng.gen::<f64>() < rate {
            let z: f64 = rng.sample(StandardNormal);
            *x += sigma * z;
        }
    }
}

fn mutation_sigma(config: &GaConfig, generation: usize) -> f64 {
    config.initial_sigma() * config.mutation_sigma_decay.powi(generation as i32)
}

/// Produces the next population from `population` and its `fitness` values.
///
/// The `elite_count` best individuals are copied verbatim; the remainder come
/// from tournament pairs, blended with probability `crossover_rate` (cloned
/// otherwise), mutated per coordinate with probability `mutation_rate`, and
/// clamped to the search box. `generation` sets the decayed mutation σ.
pub fn evolve_generation<R: Rng + ?Sized>(
    population: &[Genome],
    fitness: &[f64],
    config: &GaConfig,
    generation: usize,
    rng: &mut R,
) -> Vec<Genome> {
    let n = population.len();
    let sigma = mutation_sigma(config, generation);
    let mut next: Vec<Genome> =
        by_fitness(fitness).into_iter().take(config.elite_count.min(n)).map(|i| population[i]).collect();
    while next.len() < n {
        let a = population[tournament(fitness, config.tournament_size, rng)];
        let b = population[tournament(fitness, config.tournament_size, rng)];
        let (mut c1, mut c2) = if rng.gen::<f64>() < config.crossover_rate { blend(&a, &b, rng) } else { (a, b) };
        for child in [&mut c1, &mut c2] {
            mutate(child, config.mutation_rate, sigma, rng);
            *child = config.search_bounds.clamp(*child);
        }
        next.push(c1);
        if next.len() < n {
            next.push(c2);
        }
    }
    next
}

/// Estimates the beacon position; see [`ga_localize_traced`].
pub fn ga_localize(
    measurements: &[PingMeasurement],
    anchors: &[Anchor],
    config: &GaConfig,
    channel: &ChannelModel,
) -> Result<PositionEstimate, LocalizeError> {
    ga_localize_traced(measurements, anchors, config, channel, |_| {})
}

/// Runs the GA, calling `trace` once per evaluated generation.
///
/// Stops after `config.generations`, when the best fitness drops below
/// `config.fitness_target`, or after `config.stagnation_limit` generations
/// without improvement. Identical inputs and seed give a bit-identical result.
pub fn ga_localize_traced(
    measurements: &[PingMeasurement],
    anchors: &[Anchor],
    config: &GaConfig,
    channel: &ChannelModel,
    mut trace: impl FnMut(&GenerationStats),
) -> Result<PositionEstimate, LocalizeError> {
    config.validate()?;
    if measurements.is_empty() {
        return Err(LocalizeError::NoMeasurements);
    }
    let ctx = FitnessContext::new(measurements, anchors, config.fitness_mode, config.snr_weighting, channel)?;
    if ctx.distinct_anchors() < 4 {
        return Err(LocalizeError::Underdetermined(ctx.distinct_anchors()));
    }
    let total_depth = channel.profile.total_depth();
    let floor = config.search_bounds.min.up;
    if -floor > total_depth {
        return Err(LocalizeError::Config(format!(
            "search_bounds.min up = {floor} lies below the {total_depth} m column"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (lo, hi) = (config.search_bounds.lower(), config.search_bounds.upper());
    let mut population: Vec<Genome> =
        (0..config.population_size).map(|_| std::array::from_fn(|k| rng.gen_range(lo[k]..=hi[k]))).collect();

    let evaluate = |pop: &[Genome]| -> Result<Vec<f64>, LocalizeError> {
        pop.iter().map(|g| ctx.evaluate(EnuCoord::from(*g))).collect()
    };

    let mut fitness = evaluate(&population)?;
    let mut best_fitness = f64::INFINITY;
    let mut best: Genome = population[0];
    let mut stagnant = 0;
    let mut generations_run = 0;
    for generation in 0..config.generations.max(1) {
        generations_run = generation + 1;
        let leader = by_fitness(&fitness)[0];
        if fitness[leader] < best_fitness {
            best_fitness = fitness[leader];
            best = population[leader];
            stagnant = 0;
        } else {
            stagnant += 1;
        }
        trace(&GenerationStats {
            generation,
            best_fitness,
            mean_fitness: fitness.iter().sum::<f64>() / fitness.len() as f64,
            mutation_sigma: mutation_sigma(config, generation),
            best: best.into(),
        });
        if best_fitness < config.fitness_target
            || stagnant >= config.stagnation_limit
            || generation + 1 == config.generations
        {
            break;
        }
        population = evolve_generation(&population, &fitness, config, generation, &mut rng);
        fitness = evaluate(&population)?;
    }

    let order = by_fitness(&fitness);
    let decile = order.len().div_ceil(10);
    let dispersion = (order[..decile]
        .iter()
        .map(|&i| (0..3).map(|k| (population[i][k] - best[k]).powi(2)).sum::<f64>())
        .sum::<f64>()
        / decile as f64)
        .sqrt();

    Ok(PositionEstimate {
        position: best.into(),
        best_fitness,
        population_dispersion: dispersion,
        generations_run,
        geometry_warning: dispersion > config.gdop_warning_dispersion,
    })
}
