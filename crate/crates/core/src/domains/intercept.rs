//! Catching a robot before it leaves through one of two exits.
//!
//! The robot enters at `(0, y0)` with `y0` uniform in `1..n-1` and moves one
//! cell east with probability 1/2 per step. On the east edge it turns
//! towards the nearer exit corner, `(n-1, 0)` or `(n-1, n-1)` (a fair coin on
//! ties), keeps moving with probability 1/2, and escapes on the step after
//! reaching the corner. The agent starts in the middle of the east edge and
//! may also `wait`. It sees the robot within Manhattan distance `radius` and
//! whenever the robot is in the centre column. Meeting means sharing a cell
//! or swapping cells within one step.

use super::builder::{manhattan, move_names, shift, Dynamics, Kind};

pub(crate) const STEP_REWARD: f64 = -1.0;
pub(crate) const MEET_REWARD: f64 = 1000.0;
pub(crate) const ESCAPE_REWARD: f64 = -1000.0;
const WAIT: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) enum Robot {
    East { x: usize, y: usize },
    /// On the east edge heading to the corner at row 0 (`down`) or `n-1`.
    Edge { y: usize, down: bool },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) enum Chase {
    Play { agent: (usize, usize), robot: Robot },
    Met,
    Escaped,
}

pub(crate) struct Intercept {
    n: usize,
    radius: usize,
}

impl Intercept {
    pub(crate) fn new(n: usize, radius: usize) -> Self {
        Intercept { n, radius }
    }

    fn cell(&self, r: Robot) -> (usize, usize) {
        match r {
            Robot::East { x, y } => (x, y),
            Robot::Edge { y, .. } => (self.n - 1, y),
        }
    }

    /// Robot successors; `None` is the escape.
    fn robot_moves(&self, r: Robot) -> Vec<(Option<Robot>, f64)> {
        let last = self.n - 1;
        match r {
            Robot::East { x, y } if x + 1 < last => vec![(Some(r), 0.5), (Some(Robot::East { x: x + 1, y }), 0.5)],
            Robot::East { y, .. } => {
                let mut out = vec![(Some(r), 0.5)];
                if 2 * y == last {
                    out.push((Some(Robot::Edge { y, down: true }), 0.25));
                    out.push((Some(Robot::Edge { y, down: false }), 0.25));
                } else {
                    out.push((Some(Robot::Edge { y, down: 2 * y < last }), 0.5));
                }
                out
            }
            Robot::Edge { y, down } if (down && y == 0) || (!down && y == last) => vec![(None, 1.0)],
            Robot::Edge { y, down } => {
                let y2 = if down { y - 1 } else { y + 1 };
                vec![(Some(r), 0.5), (Some(Robot::Edge { y: y2, down }), 0.5)]
            }
        }
    }
}

impl Dynamics for Intercept {
    type S = Chase;

    fn actions(&self) -> Vec<String> {
        let mut a = move_names();
        a.push("wait".into());
        a
    }

    fn initial(&self) -> Vec<(Chase, f64)> {
        let agent = (self.n - 1, self.n / 2);
        let p = 1.0 / (self.n - 2) as f64;
        (1..self.n - 1).map(|y| (Chase::Play { agent, robot: Robot::East { x: 0, y } }, p)).collect()
    }

    fn kind(&self, s: &Chase) -> Kind {
        match s {
            Chase::Met => Kind::Reach,
            Chase::Escaped => Kind::Avoid,
            Chase::Play { .. } => Kind::Normal,
        }
    }

    fn step(&self, s: &Chase, a: usize) -> Vec<(Chase, f64)> {
        let Chase::Play { agent, robot } = *s else { unreachable!("pre-terminal states are not stepped") };
        let next = if a == WAIT { agent } else { shift(agent, a, 1, self.n) };
        let here = self.cell(robot);
        self.robot_moves(robot)
            .into_iter()
            .map(|(r, p)| {
                let t = match r {
                    None => Chase::Escaped,
                    Some(r) if self.cell(r) == next || (next == here && self.cell(r) == agent) => Chase::Met,
                    Some(r) => Chase::Play { agent: next, robot: r },
                };
                (t, p)
            })
            .collect()
    }

    fn observe(&self, s: &Chase) -> Vec<(String, f64)> {
        let z = match *s {
            Chase::Met => "met".to_string(),
            Chase::Escaped => "escaped".to_string(),
            Chase::Play { agent, robot } => {
                let r = self.cell(robot);
                if manhattan(agent, r) <= self.radius || r.0 == self.n / 2 {
                    format!("a{}_{}_r{}_{}", agent.0, agent.1, r.0, r.1)
                } else {
                    format!("a{}_{}_u", agent.0, agent.1)
                }
            }
        };
        vec![(z, 1.0)]
    }

    fn reward(&self, s: &Chase, _a: usize) -> f64 {
        match s {
            Chase::Met => MEET_REWARD,
            Chase::Escaped => ESCAPE_REWARD,
            Chase::Play { .. } => STEP_REWARD,
        }
    }

    fn potential(&self, s: &Chase) -> f64 {
        match *s {
            Chase::Met => 0.0,
            Chase::Escaped => -(2.0 * (self.n - 1) as f64),
            Chase::Play { agent, robot } => -(manhattan(agent, self.cell(robot)) as f64),
        }
    }

    fn name(&self, s: &Chase) -> String {
        match *s {
            Chase::Met => "met".into(),
            Chase::Escaped => "escaped".into(),
            Chase::Play { agent, robot } => {
                let tag = match robot {
                    Robot::East { x, y } => format!("e{x}_{y}"),
                    Robot::Edge { y, down: true } => format!("d{y}"),
                    Robot::Edge { y, down: false } => format!("u{y}"),
                };
                format!("a{}_{}_{tag}", agent.0, agent.1)
            }
        }
    }
}
