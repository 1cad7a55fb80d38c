//! Navigation through a field of static traps.
//!
//! Layout for size `n`: the exit is the corner `(n-1, n-1)`; the agent starts
//! uniformly in the 2×2 block at the origin; `max(1, n²/9)` traps are drawn
//! with a generator seeded by `n` from the cells off the bottom row, off the
//! rightmost column and outside the start block, so the border path along
//! the bottom and right edges is always trap free. A move advances one or two
//! cells with equal probability and stops at walls. The only observation is
//! whether the current cell is a trap, the exit, or neither.
//!
//! States are exactly the `n²` cells plus the sink.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::builder::{manhattan, move_names, shift, Dynamics, Kind};

pub(crate) const STEP_REWARD: f64 = -1.0;
pub(crate) const EXIT_REWARD: f64 = 1000.0;
pub(crate) const TRAP_REWARD: f64 = -1000.0;

pub(crate) struct Obstacle {
    n: usize,
    traps: Vec<(usize, usize)>,
}

impl Obstacle {
    pub(crate) fn new(n: usize) -> Self {
        let candidates: Vec<(usize, usize)> = (1..n)
            .flat_map(|y| (0..n - 1).map(move |x| (x, y)))
            .filter(|&(x, y)| !(x <= 1 && y <= 1))
            .collect();
        let count = (n * n / 9).clamp(1, candidates.len());
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let mut traps: Vec<_> = sample(&mut rng, candidates.len(), count).into_iter().map(|i| candidates[i]).collect();
        traps.sort_unstable();
        Obstacle { n, traps }
    }

    #[cfg(test)]
    pub(crate) fn traps(&self) -> &[(usize, usize)] {
        &self.traps
    }

    fn exit(&self) -> (usize, usize) {
        (self.n - 1, self.n - 1)
    }
}

impl Dynamics for Obstacle {
    type S = (usize, usize);

    fn actions(&self) -> Vec<String> {
        move_names()
    }

    fn initial(&self) -> Vec<(Self::S, f64)> {
        vec![((0, 0), 0.25), ((1, 0), 0.25), ((0, 1), 0.25), ((1, 1), 0.25)]
    }

    fn kind(&self, s: &Self::S) -> Kind {
        if *s == self.exit() {
            Kind::Reach
        } else if self.traps.contains(s) {
            Kind::Avoid
        } else {
            Kind::Normal
        }
    }

    fn step(&self, s: &Self::S, a: usize) -> Vec<(Self::S, f64)> {
        vec![(shift(*s, a, 1, self.n), 0.5), (shift(*s, a, 2, self.n), 0.5)]
    }

    fn observe(&self, s: &Self::S) -> Vec<(String, f64)> {
        let z = match self.kind(s) {
            Kind::Reach => "exit",
            Kind::Avoid => "trap",
            Kind::Normal => "none",
        };
        vec![(z.to_string(), 1.0)]
    }

    fn reward(&self, s: &Self::S, _a: usize) -> f64 {
        match self.kind(s) {
            Kind::Reach => EXIT_REWARD,
            Kind::Avoid => TRAP_REWARD,
            Kind::Normal => STEP_REWARD,
        }
    }

    fn potential(&self, s: &Self::S) -> f64 {
        -(manhattan(*s, self.exit()) as f64)
    }

    fn name(&self, s: &Self::S) -> String {
        format!("c{}_{}", s.0, s.1)
    }
}
