//! Crossing the grid past two patrolling robots.
//!
//! The agent starts at `(0, 0)` and heads for `(n-1, n-1)`. Each patroller
//! cycles around a fixed rectangle, advancing one or two route cells per step
//! with equal probability. One rectangle spans `x ∈ [0, n/2]`,
//! `y ∈ [n/3, n/3+1]` and cuts the left edge; the other is its mirror image
//! cutting the bottom edge, so both border paths out of the start corner
//! cross a route. Patroller positions are observed only within Manhattan
//! distance `radius`. Sharing a cell with a patroller fails.

use super::builder::{manhattan, move_names, shift, Dynamics, Kind};

pub(crate) const STEP_REWARD: f64 = -1.0;
pub(crate) const GOAL_REWARD: f64 = 1000.0;
pub(crate) const CAUGHT_REWARD: f64 = -1000.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Patrol {
    agent: (usize, usize),
    at: [usize; 2],
}

pub(crate) struct Avoid {
    n: usize,
    radius: usize,
    routes: [Vec<(usize, usize)>; 2],
}

/// Clockwise cells around the rectangle `[x0, x1] × [y0, y1]`.
fn rectangle(x0: usize, x1: usize, y0: usize, y1: usize) -> Vec<(usize, usize)> {
    let mut cells = Vec::new();
    cells.extend((x0..=x1).map(|x| (x, y1)));
    cells.extend((y0..y1).rev().map(|y| (x1, y)));
    cells.extend((x0..x1).rev().map(|x| (x, y0)));
    cells.extend((y0 + 1..y1).map(|y| (x0, y)));
    cells
}

impl Avoid {
    pub(crate) fn new(n: usize, radius: usize) -> Self {
        let (lo, mid) = (n / 3, n / 2);
        let a = rectangle(0, mid, lo, lo + 1);
        let b = a.iter().map(|&(x, y)| (y, x)).collect();
        Avoid { n, radius, routes: [a, b] }
    }

    #[cfg(test)]
    pub(crate) fn routes(&self) -> &[Vec<(usize, usize)>; 2] {
        &self.routes
    }

    fn goal(&self) -> (usize, usize) {
        (self.n - 1, self.n - 1)
    }

    fn cell(&self, s: &Patrol, i: usize) -> (usize, usize) {
        self.routes[i][s.at[i]]
    }

    fn advance(&self, i: usize, at: usize) -> [(usize, f64); 2] {
        let len = self.routes[i].len();
        [((at + 1) % len, 0.5), ((at + 2) % len, 0.5)]
    }
}

impl Dynamics for Avoid {
    type S = Patrol;

    fn actions(&self) -> Vec<String> {
        move_names()
    }

    fn initial(&self) -> Vec<(Patrol, f64)> {
        let (la, lb) = (self.routes[0].len(), self.routes[1].len());
        let p = 1.0 / (la * lb) as f64;
        (0..la).flat_map(|i| (0..lb).map(move |j| (Patrol { agent: (0, 0), at: [i, j] }, p))).collect()
    }

    fn kind(&self, s: &Patrol) -> Kind {
        if s.agent == self.cell(s, 0) || s.agent == self.cell(s, 1) {
            Kind::Avoid
        } else if s.agent == self.goal() {
            Kind::Reach
        } else {
            Kind::Normal
        }
    }

    fn step(&self, s: &Patrol, a: usize) -> Vec<(Patrol, f64)> {
        let agent = shift(s.agent, a, 1, self.n);
        let mut out = Vec::with_capacity(4);
        for (i, p) in self.advance(0, s.at[0]) {
            for (j, q) in self.advance(1, s.at[1]) {
                out.push((Patrol { agent, at: [i, j] }, p * q));
            }
        }
        out
    }

    fn observe(&self, s: &Patrol) -> Vec<(String, f64)> {
        let mut z = format!("a{}_{}", s.agent.0, s.agent.1);
        for i in 0..2 {
            if manhattan(s.agent, self.cell(s, i)) <= self.radius {
                z.push_str(&format!("_{}", s.at[i]));
            } else {
                z.push_str("_u");
            }
        }
        vec![(z, 1.0)]
    }

    fn reward(&self, s: &Patrol, _a: usize) -> f64 {
        match self.kind(s) {
            Kind::Reach => GOAL_REWARD,
            Kind::Avoid => CAUGHT_REWARD,
            Kind::Normal => STEP_REWARD,
        }
    }

    fn potential(&self, s: &Patrol) -> f64 {
        -(manhattan(s.agent, self.goal()) as f64)
    }

    fn name(&self, s: &Patrol) -> String {
        format!("a{}_{}_p{}_q{}", s.agent.0, s.agent.1, s.at[0], s.at[1])
    }
}
