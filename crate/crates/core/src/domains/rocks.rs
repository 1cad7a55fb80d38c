//! Collecting a valuable rock and delivering it.
//!
//! Two rocks lie at `(1, n-2)` and `(n-2, 1)`; their qualities are one of
//! good/good, good/bad, bad/good with equal probability, so at least one is
//! worth collecting. The agent starts at `(0, 0)`, moves deterministically,
//! and learns a rock's quality exactly by sampling from a cell next to it.
//! `collect` on a rock cell picks it up: +10 if good, -10 and failure if bad.
//! Arriving at the drop-off `(n-1, n-1)` carrying a good rock delivers it for
//! another +10. Only one rock can be carried.

use super::builder::{manhattan, move_names, shift, Dynamics, Kind};

pub(crate) const GOOD_REWARD: f64 = 10.0;
pub(crate) const BAD_REWARD: f64 = -10.0;
pub(crate) const DELIVER_REWARD: f64 = 10.0;
const SAMPLE: usize = 4;
const COLLECT: usize = 5;
/// Rock qualities, `true` = good.
const QUALITIES: [[bool; 2]; 3] = [[true, true], [true, false], [false, true]];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) enum Field {
    Play { pos: (usize, usize), q: usize, carrying: bool, sensed: bool },
    Bad,
}

pub(crate) struct Rocks {
    n: usize,
}

impl Rocks {
    pub(crate) fn new(n: usize) -> Self {
        Rocks { n }
    }

    pub(crate) fn rocks(&self) -> [(usize, usize); 2] {
        [(1, self.n - 2), (self.n - 2, 1)]
    }

    fn dropoff(&self) -> (usize, usize) {
        (self.n - 1, self.n - 1)
    }

    fn rock_at(&self, pos: (usize, usize)) -> Option<usize> {
        self.rocks().iter().position(|&r| r == pos)
    }

    fn rock_next_to(&self, pos: (usize, usize)) -> Option<usize> {
        self.rocks().iter().position(|&r| manhattan(r, pos) == 1)
    }
}

impl Dynamics for Rocks {
    type S = Field;

    fn actions(&self) -> Vec<String> {
        let mut a = move_names();
        a.push("sample".into());
        a.push("collect".into());
        a
    }

    fn initial(&self) -> Vec<(Field, f64)> {
        (0..QUALITIES.len())
            .map(|q| (Field::Play { pos: (0, 0), q, carrying: false, sensed: false }, 1.0 / QUALITIES.len() as f64))
            .collect()
    }

    fn kind(&self, s: &Field) -> Kind {
        match *s {
            Field::Bad => Kind::Avoid,
            Field::Play { pos, carrying: true, .. } if pos == self.dropoff() => Kind::Reach,
            Field::Play { .. } => Kind::Normal,
        }
    }

    fn step(&self, s: &Field, a: usize) -> Vec<(Field, f64)> {
        let Field::Play { pos, q, carrying, .. } = *s else { unreachable!("pre-terminal states are not stepped") };
        let t = match a {
            SAMPLE => Field::Play { pos, q, carrying, sensed: self.rock_next_to(pos).is_some() },
            COLLECT => match self.rock_at(pos) {
                Some(i) if !carrying && !QUALITIES[q][i] => Field::Bad,
                Some(_) => Field::Play { pos, q, carrying: true, sensed: false },
                None => Field::Play { pos, q, carrying, sensed: false },
            },
            dir => Field::Play { pos: shift(pos, dir, 1, self.n), q, carrying, sensed: false },
        };
        vec![(t, 1.0)]
    }

    fn observe(&self, s: &Field) -> Vec<(String, f64)> {
        let z = match *s {
            Field::Bad => "bad".to_string(),
            Field::Play { pos, q, sensed, .. } => match (sensed, self.rock_next_to(pos)) {
                (true, Some(i)) => format!("p{}_{}_{}", pos.0, pos.1, if QUALITIES[q][i] { "good" } else { "bad" }),
                _ => format!("p{}_{}", pos.0, pos.1),
            },
        };
        vec![(z, 1.0)]
    }

    fn reward(&self, s: &Field, a: usize) -> f64 {
        match self.kind(s) {
            Kind::Reach => DELIVER_REWARD,
            Kind::Avoid => 0.0,
            Kind::Normal => {
                let Field::Play { pos, q, carrying, .. } = *s else { return 0.0 };
                match self.rock_at(pos) {
                    Some(i) if a == COLLECT && !carrying => {
                        if QUALITIES[q][i] {
                            GOOD_REWARD
                        } else {
                            BAD_REWARD
                        }
                    }
                    _ => 0.0,
                }
            }
        }
    }

    fn potential(&self, s: &Field) -> f64 {
        match *s {
            Field::Bad => -(4.0 * self.n as f64),
            Field::Play { pos, carrying: true, .. } => -(manhattan(pos, self.dropoff()) as f64),
            Field::Play { pos, q, .. } => {
                let rocks = self.rocks();
                let best = (0..2)
                    .filter(|&i| QUALITIES[q][i])
                    .map(|i| manhattan(pos, rocks[i]) + manhattan(rocks[i], self.dropoff()))
                    .min()
                    .expect("some rock is good");
                -(best as f64)
            }
        }
    }

    fn name(&self, s: &Field) -> String {
        match *s {
            Field::Bad => "bad".into(),
            Field::Play { pos, q, carrying, sensed } => {
                format!("p{}_{}_q{q}{}{}", pos.0, pos.1, if carrying { "_c" } else { "" }, if sensed { "_s" } else { "" })
            }
        }
    }
}
