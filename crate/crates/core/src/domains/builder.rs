//! Turns a small dynamics description into an explicit POMDP by enumerating
//! the states reachable from the initial distribution.
//!
//! Goal and failure states are pre-terminal: every action moves them to a
//! shared absorbing sink labelled `terminal`, and the reward of that last
//! step carries the goal bonus or failure penalty.

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::DomainError;
use crate::model::{Pomdp, PomdpBuilder, SpecKind, Specification, AVOID_LABEL, REACH_LABEL};
use crate::sim::TERMINAL_LABEL;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Kind {
    Normal,
    Reach,
    Avoid,
}

pub(crate) trait Dynamics {
    type S: Clone + Eq + Hash;

    fn actions(&self) -> Vec<String>;
    fn initial(&self) -> Vec<(Self::S, f64)>;
    fn kind(&self, s: &Self::S) -> Kind;
    /// Successor distribution; only asked for `Kind::Normal` states.
    fn step(&self, s: &Self::S, a: usize) -> Vec<(Self::S, f64)>;
    fn observe(&self, s: &Self::S) -> Vec<(String, f64)>;
    /// For pre-terminal states this is the reward of entering the sink.
    fn reward(&self, s: &Self::S, a: usize) -> f64;
    fn potential(&self, s: &Self::S) -> f64;
    fn name(&self, s: &Self::S) -> String;
}

pub(crate) struct Built {
    pub pomdp: Pomdp,
    pub spec: Specification,
    pub potential: Vec<f64>,
}

const SINK_NAME: &str = "sink";
const SINK_OBS: &str = "end";

pub(crate) fn build<D: Dynamics>(d: &D) -> Result<Built, DomainError> {
    let actions = d.actions();
    let mut states: Vec<D::S> = Vec::new();
    let mut index: HashMap<D::S, usize> = HashMap::new();
    let mut intern = |s: D::S, states: &mut Vec<D::S>| -> usize {
        *index.entry(s.clone()).or_insert_with(|| {
            states.push(s);
            states.len() - 1
        })
    };
    let initial: Vec<(usize, f64)> = d.initial().into_iter().map(|(s, p)| (intern(s, &mut states), p)).collect();
    // rows[i][a] for normal states, None for pre-terminal ones
    let mut rows: Vec<Option<Vec<Vec<(usize, f64)>>>> = Vec::new();
    let mut next = 0;
    while next < states.len() {
        let s = states[next].clone();
        if d.kind(&s) == Kind::Normal {
            let mut per_action = Vec::with_capacity(actions.len());
            for a in 0..actions.len() {
                let row: Vec<(usize, f64)> = d.step(&s, a).into_iter().map(|(t, p)| (intern(t, &mut states), p)).collect();
                per_action.push(row);
            }
            rows.push(Some(per_action));
        } else {
            rows.push(None);
        }
        next += 1;
    }

    let sink = states.len();
    let mut obs_names: Vec<String> = Vec::new();
    let mut obs_index: HashMap<String, usize> = HashMap::new();
    let mut obs_rows = Vec::with_capacity(states.len());
    for s in &states {
        let row: Vec<(usize, f64)> = d
            .observe(s)
            .into_iter()
            .map(|(name, p)| {
                let id = *obs_index.entry(name.clone()).or_insert_with(|| {
                    obs_names.push(name);
                    obs_names.len() - 1
                });
                (id, p)
            })
            .collect();
        obs_rows.push(row);
    }
    let sink_obs = obs_names.len();
    obs_names.push(SINK_OBS.to_string());

    let mut b = PomdpBuilder::new(sink + 1, actions.clone(), obs_names);
    let mut names: Vec<String> = states.iter().map(|s| d.name(s)).collect();
    names.push(SINK_NAME.to_string());
    b.state_names(names);
    for &(s, p) in &initial {
        b.initial(s, p);
    }
    let (mut reach, mut avoid) = (Vec::new(), Vec::new());
    for (i, s) in states.iter().enumerate() {
        match d.kind(s) {
            Kind::Reach => reach.push(i),
            Kind::Avoid => avoid.push(i),
            Kind::Normal => {}
        }
        for a in 0..actions.len() {
            match &rows[i] {
                Some(per_action) => {
                    for &(t, p) in &per_action[a] {
                        b.transition(i, a, t, p);
                    }
                }
                None => {
                    b.transition(i, a, sink, 1.0);
                }
            }
            let r = d.reward(s, a);
            if r != 0.0 {
                b.reward(i, a, r);
            }
        }
        for &(z, p) in &obs_rows[i] {
            b.observation(i, z, p);
        }
    }
    for a in 0..actions.len() {
        b.transition(sink, a, sink, 1.0);
    }
    b.observation(sink, sink_obs, 1.0);
    b.label(REACH_LABEL, reach.iter().copied());
    b.label(AVOID_LABEL, avoid.iter().copied());
    b.label(TERMINAL_LABEL, [sink]);
    let pomdp = b.build()?;
    let spec = Specification::from_labels(&pomdp, SpecKind::ReachAvoid)?;
    let mut potential: Vec<f64> = states.iter().map(|s| d.potential(s)).collect();
    potential.push(0.0);
    Ok(Built { pomdp, spec, potential })
}

/// Compass moves on an `n × n` grid; `y` grows northwards.
pub(crate) const MOVES: [(&str, i64, i64); 4] = [("north", 0, 1), ("south", 0, -1), ("east", 1, 0), ("west", -1, 0)];

pub(crate) fn move_names() -> Vec<String> {
    MOVES.iter().map(|m| m.0.to_string()).collect()
}

/// Moves `k` cells in direction `dir`, stopping at the border.
pub(crate) fn shift(p: (usize, usize), dir: usize, k: usize, n: usize) -> (usize, usize) {
    let (_, dx, dy) = MOVES[dir];
    let clamp = |v: usize, d: i64| (v as i64 + d * k as i64).clamp(0, n as i64 - 1) as usize;
    (clamp(p.0, dx), clamp(p.1, dy))
}

/// Moves exactly `k` cells or not at all if that would leave the grid.
pub(crate) fn jump(p: (usize, usize), dir: usize, k: usize, n: usize) -> (usize, usize) {
    let (_, dx, dy) = MOVES[dir];
    let x = p.0 as i64 + dx * k as i64;
    let y = p.1 as i64 + dy * k as i64;
    if (0..n as i64).contains(&x) && (0..n as i64).contains(&y) {
        (x as usize, y as usize)
    } else {
        p
    }
}

pub(crate) fn manhattan(a: (usize, usize), b: (usize, usize)) -> usize {
    a.0.abs_diff(b.0) + a.1.abs_diff(b.1)
}
