//! Two-parent recombination operators.
//!
//! Every operator is gene-conserving: at each position the two children
//! carry the two parent genes, possibly swapped. Genomes shorter than two
//! genes are returned as verbatim copies without consuming draws.

use super::config::CrossoverType;
use super::draws::DrawSource;
use crate::error::{Error, Result};
use crate::flagspace::Genome;

pub fn crossover(
    a: &Genome,
    b: &Genome,
    ty: CrossoverType,
    draws: &mut impl DrawSource,
) -> Result<(Genome, Genome)> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let len = a.len();
    if len < 2 {
        return Ok((a.clone(), b.clone()));
    }
    let a = a.bits();
    let b = b.bits();
    let (x, y) = match ty {
        CrossoverType::OnePoint => one_point(a, b, draws),
        CrossoverType::TwoPoint => two_point(a, b, draws),
        CrossoverType::Uniform => uniform(a, b, draws),
        CrossoverType::Shuffle => shuffle(a, b, draws),
        CrossoverType::Segment => segment(a, b, draws),
    };
    Ok((Genome::new(x), Genome::new(y)))
}

/// Cut at one of the len-1 interior points; children swap suffixes.
fn one_point(a: &[bool], b: &[bool], draws: &mut impl DrawSource) -> (Vec<bool>, Vec<bool>) {
    let cut = 1 + draws.index(a.len() - 1);
    splice_ranges(a, b, |i| i >= cut)
}

/// Two interior cuts (drawn independently, order normalized); children swap
/// the middle span. Equal cuts degenerate to verbatim copies.
fn two_point(a: &[bool], b: &[bool], draws: &mut impl DrawSource) -> (Vec<bool>, Vec<bool>) {
    let c1 = 1 + draws.index(a.len() - 1);
    let c2 = 1 + draws.index(a.len() - 1);
    let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
    splice_ranges(a, b, |i| i >= lo && i < hi)
}

/// Independent fair coin per position.
fn uniform(a: &[bool], b: &[bool], draws: &mut impl DrawSource) -> (Vec<bool>, Vec<bool>) {
    let swaps: Vec<bool> = (0..a.len()).map(|_| draws.coin()).collect();
    splice_ranges(a, b, |i| swaps[i])
}

/// Permute positions, one-point cross in permuted space, un-permute.
/// Equivalent to swapping a uniformly random subset of a fixed size drawn
/// from the cut position.
fn shuffle(a: &[bool], b: &[bool], draws: &mut impl DrawSource) -> (Vec<bool>, Vec<bool>) {
    let len = a.len();
    let mut perm: Vec<usize> = (0..len).collect();
    for i in (1..len).rev() {
        let j = draws.index(i + 1);
        perm.swap(i, j);
    }
    let shuffled_a: Vec<bool> = perm.iter().map(|&p| a[p]).collect();
    let shuffled_b: Vec<bool> = perm.iter().map(|&p| b[p]).collect();
    let (ca, cb) = one_point(&shuffled_a, &shuffled_b, draws);
    let mut out_a = vec![false; len];
    let mut out_b = vec![false; len];
    for (k, &p) in perm.iter().enumerate() {
        out_a[p] = ca[k];
        out_b[p] = cb[k];
    }
    (out_a, out_b)
}

/// Split the genome into contiguous segments by flipping a coin at each
/// interior boundary, then swap whole segments by a coin per segment.
fn segment(a: &[bool], b: &[bool], draws: &mut impl DrawSource) -> (Vec<bool>, Vec<bool>) {
    let len = a.len();
    let mut segment_id = vec![0usize; len];
    let mut current = 0;
    for i in 1..len {
        if draws.coin() {
            current += 1;
        }
        segment_id[i] = current;
    }
    let swap_segment: Vec<bool> = (0..=current).map(|_| draws.coin()).collect();
    splice_ranges(a, b, |i| swap_segment[segment_id[i]])
}

fn splice_ranges(
    a: &[bool],
    b: &[bool],
    take_from_other: impl Fn(usize) -> bool,
) -> (Vec<bool>, Vec<bool>) {
    let mut x = Vec::with_capacity(a.len());
    let mut y = Vec::with_capacity(a.len());
    for i in 0..a.len() {
        if take_from_other(i) {
            x.push(b[i]);
            y.push(a[i]);
        } else {
            x.push(a[i]);
            y.push(b[i]);
        }
    }
    (x, y)
}
