//! Generational genetic-algorithm engine over binary genomes.
//!
//! Fitness is a cost (measured seconds); lower is better. Each generation
//! keeps an elite prefix verbatim, fills the rest by selecting parents
//! from a truncation pool, optionally recombining them, and mutating every
//! non-elite child. All randomness flows from the seed in [`GAConfig`], so
//! a run is a pure function of its configuration and fitness function.

pub mod config;
pub mod crossover;
pub mod draws;
pub mod mutation;
pub mod selection;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flagspace::Genome;

pub use config::{CrossoverType, GAConfig, MutationType, SelectionType, StoppingPolicy};
pub use crossover::crossover;
pub use draws::DrawSource;
pub use mutation::{mutate, GAUSS_BY_CENTER_STD};
pub use selection::select_parents;

/// A genome with its measured fitness. `eval_index` is the order in which
/// the fitness function first scored it; fitness ties break on it, which
/// keeps every ranking in the engine deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredIndividual {
    pub genome: Genome,
    pub fitness: f64,
    pub eval_index: u64,
}

/// One history row per evaluated generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStat {
    pub generation: u32,
    /// Best fitness seen so far across all generations, not just this one.
    pub best_fitness: f64,
    /// Mean fitness of this generation's population.
    pub mean_fitness: f64,
    /// Cumulative fitness evaluations, elites excluded after generation 0.
    pub evaluations: u64,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    GenerationBudget,
    NoImprovement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GAResult {
    pub best: ScoredIndividual,
    pub history: Vec<GenerationStat>,
    pub stop_reason: StopReason,
}

/// Scores a batch of genomes, in input order. With the `parallel` feature
/// (on by default) the batch runs on the rayon pool; the order of results
/// is independent of scheduling.
pub fn evaluate_all<F>(genomes: &[Genome], fitness_fn: &F) -> Vec<f64>
where
    F: Fn(&Genome) -> f64 + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        genomes.par_iter().map(fitness_fn).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        genomes.iter().map(fitness_fn).collect()
    }
}

/// Sequential twin of [`evaluate_all`], compiled unconditionally so the
/// two paths can be benchmarked against each other in one build.
pub fn evaluate_all_seq<F>(genomes: &[Genome], fitness_fn: &F) -> Vec<f64>
where
    F: Fn(&Genome) -> f64 + Sync,
{
    genomes.iter().map(fitness_fn).collect()
}

/// Uniform random population: every gene is an independent fair coin.
pub fn initialize_population(
    config: &GAConfig,
    genome_length: usize,
    draws: &mut impl DrawSource,
) -> Result<Vec<Genome>> {
    config.validate()?;
    if genome_length == 0 {
        return Err(Error::InvalidConfig(
            "cannot search over an empty flag catalog".into(),
        ));
    }
    Ok((0..config.population_size)
        .map(|_| Genome::new((0..genome_length).map(|_| draws.coin()).collect()))
        .collect())
}

/// Breeds the next population from a fully scored one: the elite prefix is
/// copied verbatim (never crossed or mutated), the remaining slots are
/// filled pairwise from the truncation parent pool. Output length equals
/// `population_size` exactly; the odd trailing child of the last pair is
/// dropped.
pub fn next_generation(
    scored: &[ScoredIndividual],
    config: &GAConfig,
    draws: &mut impl DrawSource,
) -> Result<Vec<Genome>> {
    let (elites, fresh) = breed(scored, config, draws)?;
    let mut out: Vec<Genome> = elites.into_iter().map(|e| e.genome).collect();
    out.extend(fresh);
    Ok(out)
}

/// Same breeding step, but keeps the elite records intact so the caller
/// can carry their fitness forward without re-measuring.
fn breed(
    scored: &[ScoredIndividual],
    config: &GAConfig,
    draws: &mut impl DrawSource,
) -> Result<(Vec<ScoredIndividual>, Vec<Genome>)> {
    config.validate()?;
    let n = config.population_size;
    if scored.len() != n {
        return Err(Error::InvalidConfig(format!(
            "scored population has {} entries, config expects {n}",
            scored.len()
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scored[a]
            .fitness
            .total_cmp(&scored[b].fitness)
            .then(scored[a].eval_index.cmp(&scored[b].eval_index))
    });
    let elites: Vec<ScoredIndividual> = order[..config.elite_count()]
        .iter()
        .map(|&i| scored[i].clone())
        .collect();
    let pool: Vec<ScoredIndividual> = order[..config.parent_pool_size()]
        .iter()
        .map(|&i| scored[i].clone())
        .collect();

    // Pool scores depend only on the generation's fitnesses, so they are
    // prepared once and reused for every pair.
    let sampler =
        selection::PreparedSelection::prepare(&pool, config.selection_type, config.tournament_size)?;

    let wanted = n - elites.len();
    let mut fresh = Vec::with_capacity(wanted);
    while fresh.len() < wanted {
        let picks = sampler.picks(&pool, 2, draws);
        let (pa, pb) = (&pool[picks[0]].genome, &pool[picks[1]].genome);
        let (first, second) = if draws.chance(config.crossover_probability) {
            crossover(pa, pb, config.crossover_type, draws)?
        } else {
            (pa.clone(), pb.clone())
        };
        fresh.push(mutate(
            &first,
            config.mutation_probability,
            config.mutation_type,
            draws,
        ));
        if fresh.len() < wanted {
            fresh.push(mutate(
                &second,
                config.mutation_probability,
                config.mutation_type,
                draws,
            ));
        }
    }
    Ok((elites, fresh))
}

/// Runs the search to completion. The returned history has one row per
/// evaluated generation; `best` is the first individual to reach the
/// minimum fitness seen.
///
/// Stopping: after each generation the no-improvement window is checked
/// first, then the generation budget, so a run whose last allowed
/// generation also exhausts the window reports `NoImprovement`.
pub fn run<F>(
    config: &GAConfig,
    stopping: &StoppingPolicy,
    genome_length: usize,
    fitness_fn: F,
) -> Result<GAResult>
where
    F: Fn(&Genome) -> f64 + Sync,
{
    config.validate()?;
    stopping.validate()?;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut next_eval_index: u64 = 0;

    let genomes = initialize_population(config, genome_length, &mut rng)?;
    let mut scored = score_batch(genomes, &fitness_fn, &mut next_eval_index);
    let mut evaluations = scored.len() as u64;
    let mut best = best_of(&scored).clone();
    let mut last_improvement_gen: u32 = 0;
    let mut history = vec![generation_stat(0, &best, &scored, evaluations, start)];

    let stop_reason = loop {
        let generation = history.len() as u32 - 1;
        if generation - last_improvement_gen >= stopping.max_iterations_without_improvement {
            break StopReason::NoImprovement;
        }
        if history.len() as u32 >= config.max_generations {
            break StopReason::GenerationBudget;
        }

        let (elites, fresh) = breed(&scored, config, &mut rng)?;
        let fresh_scored = score_batch(fresh, &fitness_fn, &mut next_eval_index);
        evaluations += fresh_scored.len() as u64;
        scored = elites;
        scored.extend(fresh_scored);

        let generation = generation + 1;
        let candidate = best_of(&scored);
        if candidate.fitness < best.fitness {
            best = candidate.clone();
            last_improvement_gen = generation;
        }
        history.push(generation_stat(generation, &best, &scored, evaluations, start));
    };

    Ok(GAResult {
        best,
        history,
        stop_reason,
    })
}

fn score_batch<F>(
    genomes: Vec<Genome>,
    fitness_fn: &F,
    next_eval_index: &mut u64,
) -> Vec<ScoredIndividual>
where
    F: Fn(&Genome) -> f64 + Sync,
{
    let fitnesses = evaluate_all(&genomes, fitness_fn);
    genomes
        .into_iter()
        .zip(fitnesses)
        .map(|(genome, fitness)| {
            let eval_index = *next_eval_index;
            *next_eval_index += 1;
            ScoredIndividual {
                genome,
                fitness,
                eval_index,
            }
        })
        .collect()
}

fn best_of(scored: &[ScoredIndividual]) -> &ScoredIndividual {
    scored
        .iter()
        .min_by(|a, b| {
            a.fitness
                .total_cmp(&b.fitness)
                .then(a.eval_index.cmp(&b.eval_index))
        })
        .expect("population is never empty")
}

fn generation_stat(
    generation: u32,
    best: &ScoredIndividual,
    scored: &[ScoredIndividual],
    evaluations: u64,
    start: Instant,
) -> GenerationStat {
    let mean = scored.iter().map(|s| s.fitness).sum::<f64>() / scored.len() as f64;
    GenerationStat {
        generation,
        best_fitness: best.fitness,
        mean_fitness: mean,
        evaluations,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    }
}
