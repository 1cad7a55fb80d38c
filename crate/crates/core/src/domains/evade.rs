//! Reaching a door while a faster robot roams the grid.
//!
//! The agent starts at `(0, 0)`; the door is `(n-1, n-1)`. The robot moves
//! exactly two cells in a uniformly random compass direction per step, or
//! stays if that would leave the grid. Two-cell moves keep the parities of
//! its coordinates, and it starts on a cell whose parities differ (`x` even
//! and `y` odd, or the reverse), uniformly among those beyond the vision
//! radius. The agent sees the robot within Manhattan distance `radius`, or
//! anywhere right after a `scan`, which costs a step without moving.
//! Sharing a cell with the robot fails.

use super::builder::{jump, manhattan, move_names, shift, Dynamics, Kind};

pub(crate) const DOOR_REWARD: f64 = 10.0;
const SCAN: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Chase {
    agent: (usize, usize),
    robot: (usize, usize),
    scanned: bool,
}

pub(crate) struct Evade {
    n: usize,
    radius: usize,
}

impl Evade {
    pub(crate) fn new(n: usize, radius: usize) -> Self {
        Evade { n, radius }
    }

    fn door(&self) -> (usize, usize) {
        (self.n - 1, self.n - 1)
    }
}

impl Dynamics for Evade {
    type S = Chase;

    fn actions(&self) -> Vec<String> {
        let mut a = move_names();
        a.push("scan".into());
        a
    }

    fn initial(&self) -> Vec<(Chase, f64)> {
        let starts: Vec<(usize, usize)> = (0..self.n)
            .flat_map(|y| (0..self.n).map(move |x| (x, y)))
            .filter(|&(x, y)| x % 2 != y % 2 && manhattan((x, y), (0, 0)) > self.radius)
            .collect();
        let p = 1.0 / starts.len() as f64;
        starts.into_iter().map(|robot| (Chase { agent: (0, 0), robot, scanned: false }, p)).collect()
    }

    fn kind(&self, s: &Chase) -> Kind {
        if s.agent == s.robot {
            Kind::Avoid
        } else if s.agent == self.door() {
            Kind::Reach
        } else {
            Kind::Normal
        }
    }

    fn step(&self, s: &Chase, a: usize) -> Vec<(Chase, f64)> {
        let (agent, scanned) = if a == SCAN { (s.agent, true) } else { (shift(s.agent, a, 1, self.n), false) };
        (0..4).map(|dir| (Chase { agent, robot: jump(s.robot, dir, 2, self.n), scanned }, 0.25)).collect()
    }

    fn observe(&self, s: &Chase) -> Vec<(String, f64)> {
        let (ax, ay) = s.agent;
        let z = if s.scanned || manhattan(s.agent, s.robot) <= self.radius {
            format!("a{ax}_{ay}_r{}_{}", s.robot.0, s.robot.1)
        } else {
            format!("a{ax}_{ay}_u")
        };
        vec![(z, 1.0)]
    }

    fn reward(&self, s: &Chase, _a: usize) -> f64 {
        if self.kind(s) == Kind::Reach {
            DOOR_REWARD
        } else {
            0.0
        }
    }

    fn potential(&self, s: &Chase) -> f64 {
        -(manhattan(s.agent, self.door()) as f64)
    }

    fn name(&self, s: &Chase) -> String {
        format!("a{}_{}_r{}_{}{}", s.agent.0, s.agent.1, s.robot.0, s.robot.1, if s.scanned { "_s" } else { "" })
    }
}
