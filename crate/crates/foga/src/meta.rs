//! Tuning the tuner: random search plus local refinement over the
//! engine's own parameters.
//!
//! A trial scores a candidate configuration by running the full engine a
//! few times with pre-drawn seeds and averaging the best fitnesses. The
//! same inner seeds are reused for every trial (common random numbers),
//! so trial objectives differ only through the configurations.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flagspace::Genome;
use crate::ga::{self, CrossoverType, GAConfig, MutationType, SelectionType, StoppingPolicy};

/// Bounds for every parameter the meta-tuner may vary. Tournament size and
/// the RNG seed are not searched; the seed is owned by the trial protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParameterSpace {
    pub crossover_types: Vec<CrossoverType>,
    pub mutation_types: Vec<MutationType>,
    pub selection_types: Vec<SelectionType>,
    pub population_size: (usize, usize),
    pub mutation_probability: (f64, f64),
    pub elitism_ratio: (f64, f64),
    pub crossover_probability: (f64, f64),
    pub parents_portion: (f64, f64),
    pub max_generations: (u32, u32),
    pub max_iterations_without_improvement: (u32, u32),
}

impl Default for ParameterSpace {
    fn default() -> Self {
        ParameterSpace {
            crossover_types: CrossoverType::ALL.to_vec(),
            mutation_types: MutationType::ALL.to_vec(),
            selection_types: SelectionType::ALL.to_vec(),
            population_size: (10, 500),
            mutation_probability: (0.01, 0.5),
            elitism_ratio: (0.0, 0.3),
            crossover_probability: (0.05, 1.0),
            parents_portion: (0.1, 0.9),
            max_generations: (10, 200),
            max_iterations_without_improvement: (5, 100),
        }
    }
}

impl ParameterSpace {
    pub fn validate(&self) -> Result<()> {
        if self.crossover_types.is_empty()
            || self.mutation_types.is_empty()
            || self.selection_types.is_empty()
        {
            return Err(Error::InvalidSpace("an operator menu is empty".into()));
        }
        fn ordered<T: PartialOrd + std::fmt::Debug>(name: &str, (lo, hi): &(T, T)) -> Result<()> {
            if lo > hi {
                return Err(Error::InvalidSpace(format!(
                    "{name} range is reversed: {lo:?} > {hi:?}"
                )));
            }
            Ok(())
        }
        ordered("population_size", &self.population_size)?;
        ordered("mutation_probability", &self.mutation_probability)?;
        ordered("elitism_ratio", &self.elitism_ratio)?;
        ordered("crossover_probability", &self.crossover_probability)?;
        ordered("parents_portion", &self.parents_portion)?;
        ordered("max_generations", &self.max_generations)?;
        ordered(
            "max_iterations_without_improvement",
            &self.max_iterations_without_improvement,
        )?;
        if self.population_size.0 < 2 {
            return Err(Error::InvalidSpace("population_size lower bound below 2".into()));
        }
        Ok(())
    }
}

const SAMPLE_ATTEMPTS: usize = 1000;

/// Draws one configuration uniformly from the space, resampling until the
/// engine's cross-field invariants hold. A space that cannot produce a
/// valid configuration within a bounded number of attempts is rejected.
pub fn sample_config(
    space: &ParameterSpace,
    rng: &mut impl Rng,
) -> Result<(GAConfig, StoppingPolicy)> {
    space.validate()?;
    for _ in 0..SAMPLE_ATTEMPTS {
        let config = GAConfig {
            max_generations: range_u32(space.max_generations, rng),
            population_size: range_usize(space.population_size, rng),
            mutation_probability: range_f64(space.mutation_probability, rng),
            elitism_ratio: range_f64(space.elitism_ratio, rng),
            crossover_probability: range_f64(space.crossover_probability, rng),
            parents_portion: range_f64(space.parents_portion, rng),
            crossover_type: pick(&space.crossover_types, rng),
            mutation_type: pick(&space.mutation_types, rng),
            selection_type: pick(&space.selection_types, rng),
            tournament_size: GAConfig::default().tournament_size,
            rng_seed: 0,
        };
        let stopping = StoppingPolicy {
            max_iterations_without_improvement: range_u32(
                space.max_iterations_without_improvement,
                rng,
            ),
        };
        if config.validate().is_ok() && stopping.validate().is_ok() {
            return Ok((config, stopping));
        }
    }
    Err(Error::InvalidSpace(format!(
        "no valid configuration found in {SAMPLE_ATTEMPTS} samples"
    )))
}

/// One scored candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaTrial {
    pub index: usize,
    pub config: GAConfig,
    pub stopping: StoppingPolicy,
    /// Mean best fitness over the trial seeds; lower is better.
    pub objective: f64,
    /// Inner fitness evaluations summed over the trial's runs.
    pub evaluations_spent: u64,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneOutcome {
    pub best_config: GAConfig,
    pub best_stopping: StoppingPolicy,
    /// Inner-run seeds shared by every trial; replaying the best config
    /// against these seeds reproduces its objective exactly.
    pub inner_seeds: Vec<u64>,
    /// Every trial evaluated, in order; exactly `budget` entries.
    pub trials: Vec<MetaTrial>,
}

/// Spends `budget` trials on the inner problem: the first half (rounded
/// up) is uniform random search, the rest perturbs the incumbent one
/// parameter at a time, keeping strict improvements. Returns the argmin
/// over all trials.
pub fn tune<F>(
    space: &ParameterSpace,
    genome_length: usize,
    fitness_fn: F,
    budget: usize,
    seeds_per_trial: usize,
    meta_seed: u64,
) -> Result<TuneOutcome>
where
    F: Fn(&Genome) -> f64 + Sync,
{
    space.validate()?;
    if budget == 0 {
        return Err(Error::InvalidConfig("meta-tuning budget must be positive".into()));
    }
    if seeds_per_trial == 0 {
        return Err(Error::InvalidConfig("seeds_per_trial must be positive".into()));
    }
    if genome_length == 0 {
        return Err(Error::InvalidConfig(
            "cannot search over an empty flag catalog".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(meta_seed);
    let inner_seeds: Vec<u64> = (0..seeds_per_trial).map(|_| rng.random()).collect();

    let random_trials = budget.div_ceil(2);
    let candidates: Vec<(GAConfig, StoppingPolicy)> = (0..random_trials)
        .map(|_| sample_config(space, &mut rng))
        .collect::<Result<_>>()?;

    let score = |config: &GAConfig, stopping: &StoppingPolicy| -> Result<(f64, u64, f64)> {
        let started = Instant::now();
        let mut total = 0.0;
        let mut evaluations = 0;
        for &seed in &inner_seeds {
            let seeded = GAConfig {
                rng_seed: seed,
                ..config.clone()
            };
            let result = ga::run(&seeded, stopping, genome_length, &fitness_fn)?;
            total += result.best.fitness;
            evaluations += result.history.last().expect("history never empty").evaluations;
        }
        Ok((
            total / inner_seeds.len() as f64,
            evaluations,
            started.elapsed().as_secs_f64(),
        ))
    };

    // Random phase: candidates were drawn sequentially above, so scoring
    // them in parallel cannot change which configurations are tried.
    let scores = score_candidates(&candidates, &score)?;
    let mut trials: Vec<MetaTrial> = candidates
        .into_iter()
        .zip(scores)
        .enumerate()
        .map(
            |(index, ((config, stopping), (objective, evaluations_spent, wall)))| MetaTrial {
                index,
                config,
                stopping,
                objective,
                evaluations_spent,
                wall_clock_seconds: wall,
            },
        )
        .collect();

    // Refinement phase: strict-improvement hill climb around the incumbent.
    let mut incumbent = argmin(&trials);
    for index in trials.len()..budget {
        let (config, stopping) = perturb(
            &trials[incumbent].config,
            &trials[incumbent].stopping,
            space,
            &mut rng,
        )?;
        let (objective, evaluations_spent, wall) = score(&config, &stopping)?;
        trials.push(MetaTrial {
            index,
            config,
            stopping,
            objective,
            evaluations_spent,
            wall_clock_seconds: wall,
        });
        if objective < trials[incumbent].objective {
            incumbent = index;
        }
    }

    let best = argmin(&trials);
    Ok(TuneOutcome {
        best_config: trials[best].config.clone(),
        best_stopping: trials[best].stopping.clone(),
        inner_seeds,
        trials,
    })
}

fn score_candidates<S>(
    candidates: &[(GAConfig, StoppingPolicy)],
    score: &S,
) -> Result<Vec<(f64, u64, f64)>>
where
    S: Fn(&GAConfig, &StoppingPolicy) -> Result<(f64, u64, f64)> + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        candidates
            .par_iter()
            .map(|(c, s)| score(c, s))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        candidates.iter().map(|(c, s)| score(c, s)).collect()
    }
}

fn argmin(trials: &[MetaTrial]) -> usize {
    let mut best = 0;
    for (i, trial) in trials.iter().enumerate().skip(1) {
        if trial.objective < trials[best].objective {
            best = i;
        }
    }
    best
}

const PERTURB_ATTEMPTS: usize = 100;

/// Moves exactly one parameter: categorical parameters step to a
/// neighboring menu entry, numeric parameters scale by plus or minus ten
/// percent and clamp to their range. Falls back to a fresh sample if no
/// single-parameter move yields a valid configuration.
fn perturb(
    config: &GAConfig,
    stopping: &StoppingPolicy,
    space: &ParameterSpace,
    rng: &mut impl Rng,
) -> Result<(GAConfig, StoppingPolicy)> {
    for _ in 0..PERTURB_ATTEMPTS {
        let mut config = config.clone();
        let mut stopping = stopping.clone();
        match rng.random_range(0..10u32) {
            0 => config.crossover_type = step(&space.crossover_types, config.crossover_type, rng),
            1 => config.mutation_type = step(&space.mutation_types, config.mutation_type, rng),
            2 => config.selection_type = step(&space.selection_types, config.selection_type, rng),
            3 => {
                config.population_size = scale_usize(
                    config.population_size,
                    space.population_size,
                    rng,
                )
            }
            4 => {
                config.mutation_probability = scale_f64(
                    config.mutation_probability,
                    space.mutation_probability,
                    rng,
                )
            }
            5 => config.elitism_ratio = scale_f64(config.elitism_ratio, space.elitism_ratio, rng),
            6 => {
                config.crossover_probability = scale_f64(
                    config.crossover_probability,
                    space.crossover_probability,
                    rng,
                )
            }
            7 => {
                config.parents_portion =
                    scale_f64(config.parents_portion, space.parents_portion, rng)
            }
            8 => {
                config.max_generations =
                    scale_u32(config.max_generations, space.max_generations, rng)
            }
            _ => {
                stopping.max_iterations_without_improvement = scale_u32(
                    stopping.max_iterations_without_improvement,
                    space.max_iterations_without_improvement,
                    rng,
                )
            }
        }
        if config.validate().is_ok() && stopping.validate().is_ok() {
            return Ok((config, stopping));
        }
    }
    sample_config(space, rng)
}

/// Neighboring entry in the menu: one step left or right, clamped to the
/// ends. A missing or lone entry stays put.
fn step<T: Copy + PartialEq>(menu: &[T], current: T, rng: &mut impl Rng) -> T {
    let Some(position) = menu.iter().position(|&m| m == current) else {
        return menu[rng.random_range(0..menu.len())];
    };
    let up = rng.random_bool(0.5);
    let next = if up {
        (position + 1).min(menu.len() - 1)
    } else {
        position.saturating_sub(1)
    };
    menu[next]
}

fn scale_factor(rng: &mut impl Rng) -> f64 {
    if rng.random_bool(0.5) {
        1.1
    } else {
        0.9
    }
}

fn scale_f64(value: f64, (lo, hi): (f64, f64), rng: &mut impl Rng) -> f64 {
    (value * scale_factor(rng)).clamp(lo, hi)
}

fn scale_usize(value: usize, (lo, hi): (usize, usize), rng: &mut impl Rng) -> usize {
    ((value as f64 * scale_factor(rng)).round() as usize).clamp(lo, hi)
}

fn scale_u32(value: u32, (lo, hi): (u32, u32), rng: &mut impl Rng) -> u32 {
    ((f64::from(value) * scale_factor(rng)).round() as u32).clamp(lo, hi)
}

fn range_f64((lo, hi): (f64, f64), rng: &mut impl Rng) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

fn range_u32((lo, hi): (u32, u32), rng: &mut impl Rng) -> u32 {
    rng.random_range(lo..=hi)
}

fn range_usize((lo, hi): (usize, usize), rng: &mut impl Rng) -> usize {
    rng.random_range(lo..=hi)
}

fn pick<T: Copy>(menu: &[T], rng: &mut impl Rng) -> T {
    menu[rng.random_range(0..menu.len())]
}
