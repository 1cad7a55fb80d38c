//! A rover crossing the grid on a limited battery.
//!
//! The rover starts at `(0, 0)` with a full battery of `energy` units and
//! must reach `(n-1, n-1)`. Obstacles occupy the middle third of the main
//! diagonal. Every move costs one unit and advances one cell (probability
//! 0.8) or two (0.2), stopping at walls. `refuel` at one of the two stations
//! in the other corners restores the full battery and does nothing
//! elsewhere. Hitting an obstacle or running empty away from the goal fails.
//!
//! The position is observed exactly; the battery reading is off by at most
//! one level, uniformly among the readings inside `[0, energy]`.

use super::builder::{manhattan, move_names, shift, Dynamics, Kind};

pub(crate) const GOAL_REWARD: f64 = 10.0;
const SLIP: f64 = 0.2;
const REFUEL: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Rover {
    pos: (usize, usize),
    energy: usize,
}

pub(crate) struct Refuel {
    n: usize,
    energy: usize,
}

impl Refuel {
    pub(crate) fn new(n: usize, energy: usize) -> Self {
        Refuel { n, energy }
    }

    fn goal(&self) -> (usize, usize) {
        (self.n - 1, self.n - 1)
    }

    pub(crate) fn obstacles(&self) -> Vec<(usize, usize)> {
        let lo = self.n / 3;
        let hi = self.n - 1 - self.n / 3;
        (lo.max(1)..=hi.min(self.n - 2)).map(|i| (i, i)).collect()
    }

    pub(crate) fn stations(&self) -> [(usize, usize); 2] {
        [(self.n - 1, 0), (0, self.n - 1)]
    }
}

impl Dynamics for Refuel {
    type S = Rover;

    fn actions(&self) -> Vec<String> {
        let mut a = move_names();
        a.push("refuel".into());
        a
    }

    fn initial(&self) -> Vec<(Rover, f64)> {
        vec![(Rover { pos: (0, 0), energy: self.energy }, 1.0)]
    }

    fn kind(&self, s: &Rover) -> Kind {
        if s.pos == self.goal() {
            Kind::Reach
        } else if s.energy == 0 || self.obstacles().contains(&s.pos) {
            Kind::Avoid
        } else {
            Kind::Normal
        }
    }

    fn step(&self, s: &Rover, a: usize) -> Vec<(Rover, f64)> {
        if a == REFUEL {
            let energy = if self.stations().contains(&s.pos) { self.energy } else { s.energy };
            return vec![(Rover { pos: s.pos, energy }, 1.0)];
        }
        let energy = s.energy - 1;
        vec![
            (Rover { pos: shift(s.pos, a, 1, self.n), energy }, 1.0 - SLIP),
            (Rover { pos: shift(s.pos, a, 2, self.n), energy }, SLIP),
        ]
    }

    fn observe(&self, s: &Rover) -> Vec<(String, f64)> {
        let lo = s.energy.saturating_sub(1);
        let hi = (s.energy + 1).min(self.energy);
        let p = 1.0 / (hi - lo + 1) as f64;
        (lo..=hi).map(|r| (format!("p{}_{}_b{r}", s.pos.0, s.pos.1), p)).collect()
    }

    fn reward(&self, s: &Rover, _a: usize) -> f64 {
        if self.kind(s) == Kind::Reach {
            GOAL_REWARD
        } else {
            0.0
        }
    }

    fn potential(&self, s: &Rover) -> f64 {
        -(manhattan(s.pos, self.goal()) as f64)
    }

    fn name(&self, s: &Rover) -> String {
        format!("r{}_{}_e{}", s.pos.0, s.pos.1, s.energy)
    }
}
