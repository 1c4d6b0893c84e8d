//! Engine configuration and stopping policy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CrossoverType {
    OnePoint,
    TwoPoint,
    Uniform,
    Shuffle,
    Segment,
}

impl CrossoverType {
    pub const ALL: [CrossoverType; 5] = [
        CrossoverType::OnePoint,
        CrossoverType::TwoPoint,
        CrossoverType::Uniform,
        CrossoverType::Shuffle,
        CrossoverType::Segment,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MutationType {
    UniformBit,
    GaussByCenter,
}

impl MutationType {
    pub const ALL: [MutationType; 2] = [MutationType::UniformBit, MutationType::GaussByCenter];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SelectionType {
    FullyRandom,
    Roulette,
    StochasticUniversal,
    SigmaScaling,
    Ranking,
    LinearRanking,
    Tournament,
}

impl SelectionType {
    pub const ALL: [SelectionType; 7] = [
        SelectionType::FullyRandom,
        SelectionType::Roulette,
        SelectionType::StochasticUniversal,
        SelectionType::SigmaScaling,
        SelectionType::Ranking,
        SelectionType::LinearRanking,
        SelectionType::Tournament,
    ];
}

/// Engine parameters. The defaults are the tuned values that won the
/// meta-tuning study this tool reproduces; they are a strong starting
/// point for compiler workloads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GAConfig {
    pub max_generations: u32,
    pub population_size: usize,
    pub mutation_probability: f64,
    pub elitism_ratio: f64,
    pub crossover_probability: f64,
    /// Fraction of the population admitted to the parent pool.
    pub parents_portion: f64,
    pub crossover_type: CrossoverType,
    pub mutation_type: MutationType,
    pub selection_type: SelectionType,
    /// Draws per tournament when `selection_type` is `Tournament`.
    pub tournament_size: usize,
    pub rng_seed: u64,
}

impl Default for GAConfig {
    fn default() -> Self {
        GAConfig {
            max_generations: 100,
            population_size: 277,
            mutation_probability: 0.287,
            elitism_ratio: 0.147,
            crossover_probability: 0.120,
            parents_portion: 0.689,
            crossover_type: CrossoverType::Segment,
            mutation_type: MutationType::GaussByCenter,
            selection_type: SelectionType::LinearRanking,
            tournament_size: 2,
            rng_seed: 0,
        }
    }
}

impl GAConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let config: GAConfig =
            serde_json::from_str(text).map_err(|e| Error::DocumentParse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::DocumentParse(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "population_size must be at least 2, got {}",
                self.population_size
            )));
        }
        if self.max_generations == 0 {
            return Err(Error::InvalidConfig("max_generations must be positive".into()));
        }
        for (name, value) in [
            ("mutation_probability", self.mutation_probability),
            ("elitism_ratio", self.elitism_ratio),
            ("crossover_probability", self.crossover_probability),
            ("parents_portion", self.parents_portion),
        ] {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie in [0, 1], got {value}"
                )));
            }
        }
        if self.tournament_size == 0 {
            return Err(Error::InvalidConfig("tournament_size must be positive".into()));
        }
        if self.elite_count() > self.parent_pool_size() {
            return Err(Error::InvalidConfig(format!(
                "elite count {} exceeds parent pool size {}",
                self.elite_count(),
                self.parent_pool_size()
            )));
        }
        Ok(())
    }

    /// Individuals copied unchanged into the next generation.
    pub fn elite_count(&self) -> usize {
        (self.elitism_ratio * self.population_size as f64).floor() as usize
    }

    /// Size of the truncation pool parents are selected from; never below 2
    /// so a pair can always be drawn.
    pub fn parent_pool_size(&self) -> usize {
        let truncated = (self.parents_portion * self.population_size as f64).floor() as usize;
        truncated.max(2).min(self.population_size)
    }
}

/// When to give up independent of the generation budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StoppingPolicy {
    /// Stop once this many consecutive generations have passed without the
    /// best-so-far fitness strictly improving.
    pub max_iterations_without_improvement: u32,
}

impl Default for StoppingPolicy {
    fn default() -> Self {
        StoppingPolicy {
            max_iterations_without_improvement: 45,
        }
    }
}

impl StoppingPolicy {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let policy: StoppingPolicy =
            serde_json::from_str(text).map_err(|e| Error::DocumentParse(e.to_string()))?;
        policy.validate()?;
        Ok(policy)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::DocumentParse(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations_without_improvement == 0 {
            return Err(Error::InvalidConfig(
                "max_iterations_without_improvement must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_tuned_values() {
        let c = GAConfig::default();
        assert_eq!(c.max_generations, 100);
        assert_eq!(c.population_size, 277);
        assert_eq!(c.mutation_probability, 0.287);
        assert_eq!(c.elitism_ratio, 0.147);
        assert_eq!(c.crossover_probability, 0.120);
        assert_eq!(c.parents_portion, 0.689);
        assert_eq!(c.crossover_type, CrossoverType::Segment);
        assert_eq!(c.mutation_type, MutationType::GaussByCenter);
        assert_eq!(c.selection_type, SelectionType::LinearRanking);
        assert_eq!(StoppingPolicy::default().max_iterations_without_improvement, 45);
        c.validate().unwrap();
    }

    #[test]
    fn default_pool_arithmetic() {
        let c = GAConfig::default();
        assert_eq!(c.elite_count(), 40); // floor(0.147 * 277)
        assert_eq!(c.parent_pool_size(), 190); // floor(0.689 * 277)
    }

    #[test]
    fn small_population_pool_arithmetic() {
        let c = GAConfig {
            population_size: 6,
            elitism_ratio: 0.34,
            parents_portion: 0.67,
            ..GAConfig::default()
        };
        assert_eq!(c.elite_count(), 2);
        assert_eq!(c.parent_pool_size(), 4);
    }

    #[test]
    fn pool_never_smaller_than_two() {
        let c = GAConfig {
            population_size: 10,
            elitism_ratio: 0.0,
            parents_portion: 0.1,
            ..GAConfig::default()
        };
        assert_eq!(c.parent_pool_size(), 2);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_population_below_two() {
        let c = GAConfig {
            population_size: 1,
            ..GAConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn rejects_out_of_range_probability() {
        let c = GAConfig {
            mutation_probability: 1.5,
            ..GAConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn rejects_elites_exceeding_pool() {
        let c = GAConfig {
            population_size: 10,
            elitism_ratio: 0.9,
            parents_portion: 0.3,
            ..GAConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_document_round_trip_with_partial_fields() {
        let full = GAConfig::default();
        let json = serde_json::to_string(&full).unwrap();
        let back = GAConfig::from_json_str(&json).unwrap();
        assert_eq!(back, full);

        let partial = GAConfig::from_json_str(r#"{"population_size": 50, "rng_seed": 7}"#).unwrap();
        assert_eq!(partial.population_size, 50);
        assert_eq!(partial.rng_seed, 7);
        assert_eq!(partial.max_generations, 100);

        assert!(GAConfig::from_json_str(r#"{"population_sise": 50}"#).is_err());
    }

    #[test]
    fn stopping_document_round_trip() {
        let p = StoppingPolicy::from_json_str(r#"{"max_iterations_without_improvement": 9}"#)
            .unwrap();
        assert_eq!(p.max_iterations_without_improvement, 9);
        assert!(StoppingPolicy::from_json_str(r#"{"max_iters": 9}"#).is_err());
        assert!(StoppingPolicy::from_json_str(r#"{"max_iterations_without_improvement": 0}"#)
            .is_err());
    }
}
