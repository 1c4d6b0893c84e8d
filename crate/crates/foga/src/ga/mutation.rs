//! Per-gene mutation operators.

use super::config::MutationType;
use super::draws::DrawSource;
use crate::flagspace::Genome;

/// Standard deviation of the centered normal draw used by
/// [`MutationType::GaussByCenter`]; the draw is clamped to the unit
/// interval and rounded, so for binary genes the replacement is a fair bit.
pub const GAUSS_BY_CENTER_STD: f64 = 0.25;

/// Returns a copy of `genome` where each gene was independently replaced
/// with probability `probability`. The replacement ignores the old value:
/// `UniformBit` draws a fair coin, `GaussByCenter` rounds a clamped draw
/// from N(0.5, 0.25). Probabilities 0 and 1 are legal.
pub fn mutate(
    genome: &Genome,
    probability: f64,
    ty: MutationType,
    draws: &mut impl DrawSource,
) -> Genome {
    let mut bits = genome.bits().to_vec();
    for bit in bits.iter_mut() {
        if draws.chance(probability) {
            *bit = match ty {
                MutationType::UniformBit => draws.coin(),
                MutationType::GaussByCenter => {
                    let v = draws.normal(0.5, GAUSS_BY_CENTER_STD).clamp(0.0, 1.0);
                    v.round() >= 1.0
                }
            };
        }
    }
    Genome::new(bits)
}
