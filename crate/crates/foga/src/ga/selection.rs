//! Parent selection over a scored population.
//!
//! Lower fitness is better everywhere. Fitness-proportionate schemes first
//! map fitness to a non-negative survival score, then sample parents with
//! replacement proportionally to score; degenerate score totals fall back
//! to uniform sampling so selection stays total.

use super::config::SelectionType;
use super::draws::DrawSource;
use super::ScoredIndividual;
use crate::error::{Error, Result};

/// Epsilon keeping the worst individual's roulette score positive.
const ROULETTE_FLOOR: f64 = 1e-3;
/// Lower bound on sigma-scaled scores.
const SIGMA_FLOOR: f64 = 0.1;

/// Draws `count` parents with replacement. Ties in fitness are broken by
/// evaluation order, so equal-fitness populations still rank
/// deterministically.
pub fn select_parents(
    scored: &[ScoredIndividual],
    count: usize,
    ty: SelectionType,
    tournament_size: usize,
    draws: &mut impl DrawSource,
) -> Result<Vec<ScoredIndividual>> {
    let prepared = PreparedSelection::prepare(scored, ty, tournament_size)?;
    let picks = prepared.picks(scored, count, draws);
    Ok(picks.into_iter().map(|i| scored[i].clone()).collect())
}

/// Survival scores computed once for a fixed population, reusable across
/// every pair drawn from it within a generation. The draw sequence is
/// identical to calling [`select_parents`] repeatedly.
pub(crate) struct PreparedSelection {
    kind: PreparedKind,
    tournament_size: usize,
}

enum PreparedKind {
    Uniform,
    Tournament,
    /// Cumulative scores for one spin per pick.
    Wheel(Vec<f64>),
    /// Cumulative scores for a single spin spacing all of a call's picks.
    Universal(Vec<f64>),
}

impl PreparedSelection {
    pub(crate) fn prepare(
        scored: &[ScoredIndividual],
        ty: SelectionType,
        tournament_size: usize,
    ) -> Result<Self> {
        if scored.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        let kind = match ty {
            SelectionType::FullyRandom => PreparedKind::Uniform,
            SelectionType::Tournament => PreparedKind::Tournament,
            SelectionType::StochasticUniversal => match positive_scores(roulette_scores(scored)) {
                Some(scores) => PreparedKind::Universal(running_sum(&scores)),
                None => PreparedKind::Uniform,
            },
            _ => {
                let scores = match ty {
                    SelectionType::Roulette => roulette_scores(scored),
                    SelectionType::SigmaScaling => sigma_scores(scored),
                    SelectionType::Ranking => rank_scores(scored, false),
                    SelectionType::LinearRanking => rank_scores(scored, true),
                    _ => unreachable!("handled above"),
                };
                match positive_scores(scores) {
                    Some(scores) => PreparedKind::Wheel(running_sum(&scores)),
                    None => PreparedKind::Uniform,
                }
            }
        };
        Ok(Self {
            kind,
            tournament_size,
        })
    }

    pub(crate) fn picks(
        &self,
        scored: &[ScoredIndividual],
        count: usize,
        draws: &mut impl DrawSource,
    ) -> Vec<usize> {
        match &self.kind {
            PreparedKind::Uniform => uniform_picks(scored.len(), count, draws),
            PreparedKind::Tournament => (0..count)
                .map(|_| {
                    let mut winner = draws.index(scored.len());
                    for _ in 1..self.tournament_size.max(1) {
                        let challenger = draws.index(scored.len());
                        if beats(&scored[challenger], &scored[winner]) {
                            winner = challenger;
                        }
                    }
                    winner
                })
                .collect(),
            PreparedKind::Wheel(cumulative) => {
                (0..count).map(|_| spin(cumulative, draws)).collect()
            }
            PreparedKind::Universal(cumulative) => universal_picks(cumulative, count, draws),
        }
    }
}

fn beats(challenger: &ScoredIndividual, incumbent: &ScoredIndividual) -> bool {
    (challenger.fitness, challenger.eval_index) < (incumbent.fitness, incumbent.eval_index)
}

/// Distance below the worst fitness, plus a spread-scaled epsilon so the
/// worst individual keeps a nonzero score. A constant population totals
/// zero and selects uniformly.
fn roulette_scores(scored: &[ScoredIndividual]) -> Vec<f64> {
    let max = scored.iter().map(|s| s.fitness).fold(f64::NEG_INFINITY, f64::max);
    let min = scored.iter().map(|s| s.fitness).fold(f64::INFINITY, f64::min);
    scored
        .iter()
        .map(|s| (max - s.fitness) + ROULETTE_FLOOR * (max - min))
        .collect()
}

/// 1 + (mean - f) / 2 sigma, floored at 0.1; sigma is the population
/// standard deviation. Zero spread selects uniformly.
fn sigma_scores(scored: &[ScoredIndividual]) -> Vec<f64> {
    let n = scored.len() as f64;
    let mean = scored.iter().map(|s| s.fitness).sum::<f64>() / n;
    let variance = scored
        .iter()
        .map(|s| (s.fitness - mean).powi(2))
        .sum::<f64>()
        / n;
    let sigma = variance.sqrt();
    if sigma == 0.0 {
        return vec![0.0; scored.len()];
    }
    scored
        .iter()
        .map(|s| (1.0 + (mean - s.fitness) / (2.0 * sigma)).max(SIGMA_FLOOR))
        .collect()
}

/// Plain ranking scores the best individual N down to 1 for the worst.
/// Linear ranking rescales the same ranks onto equal intervals of [1, 2],
/// halving the selection pressure.
fn rank_scores(scored: &[ScoredIndividual], linear: bool) -> Vec<f64> {
    let n = scored.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scored[a]
            .fitness
            .total_cmp(&scored[b].fitness)
            .then(scored[a].eval_index.cmp(&scored[b].eval_index))
    });
    let mut scores = vec![0.0; n];
    for (position, &i) in order.iter().enumerate() {
        scores[i] = if linear {
            if n == 1 {
                1.0
            } else {
                2.0 - position as f64 / (n - 1) as f64
            }
        } else {
            (n - position) as f64
        };
    }
    scores
}

fn positive_scores(scores: Vec<f64>) -> Option<Vec<f64>> {
    let total: f64 = scores.iter().sum();
    (total > 0.0).then_some(scores)
}

fn uniform_picks(n: usize, count: usize, draws: &mut impl DrawSource) -> Vec<usize> {
    (0..count).map(|_| draws.index(n)).collect()
}

/// One roulette-wheel spin over precomputed cumulative scores.
fn spin(cumulative: &[f64], draws: &mut impl DrawSource) -> usize {
    let total = *cumulative.last().unwrap();
    locate(cumulative, draws.unit() * total)
}

/// Stochastic universal sampling: a single spin positions `count` equally
/// spaced pointers on the wheel, so a score k times the mean yields about
/// k picks with one draw's worth of variance.
fn universal_picks(cumulative: &[f64], count: usize, draws: &mut impl DrawSource) -> Vec<usize> {
    if count == 0 {
        return Vec::new();
    }
    let total = *cumulative.last().unwrap();
    let step = total / count as f64;
    let start = draws.unit() * step;
    (0..count)
        .map(|k| locate(cumulative, start + k as f64 * step))
        .collect()
}

fn running_sum(scores: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    scores
        .iter()
        .map(|s| {
            sum += s;
            sum
        })
        .collect()
}

fn locate(cumulative: &[f64], target: f64) -> usize {
    cumulative
        .partition_point(|&c| c <= target)
        .min(cumulative.len() - 1)
}
