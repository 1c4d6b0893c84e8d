//! Elementary random draws the genetic operators consume.
//!
//! Operators never touch an RNG directly; they pull typed draws from a
//! [`DrawSource`]. Any [`rand::Rng`] is a `DrawSource`, and tests drive the
//! operators with scripted or exhaustively enumerated sources instead.

use rand::Rng;
use rand_distr::{Distribution, Normal};

pub trait DrawSource {
    /// Uniform integer in `[0, bound)`. `bound` must be at least 1.
    fn index(&mut self, bound: usize) -> usize;

    /// Fair coin.
    fn coin(&mut self) -> bool;

    /// Bernoulli draw; `p` outside `[0, 1]` saturates.
    fn chance(&mut self, p: f64) -> bool;

    /// Normal draw with the given mean and standard deviation.
    fn normal(&mut self, mean: f64, std_dev: f64) -> f64;

    /// Uniform in `[0, 1)`.
    fn unit(&mut self) -> f64;
}

impl<R: Rng> DrawSource for R {
    fn index(&mut self, bound: usize) -> usize {
        self.random_range(0..bound)
    }

    fn coin(&mut self) -> bool {
        self.random_bool(0.5)
    }

    fn chance(&mut self, p: f64) -> bool {
        if p <= 0.0 {
            false
        } else if p >= 1.0 {
            true
        } else {
            self.random_bool(p)
        }
    }

    fn normal(&mut self, mean: f64, std_dev: f64) -> f64 {
        Normal::new(mean, std_dev)
            .expect("std_dev is finite and non-negative")
            .sample(self)
    }

    fn unit(&mut self) -> f64 {
        self.random_range(0.0..1.0)
    }
}
