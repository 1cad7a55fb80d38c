//! Sampling episodes from an explicit POMDP.

use rand::Rng;

use crate::error::RuntimeError;
use crate::estimator::{SupportId, SupportTracker};
use crate::model::{ActionId, ActionSet, ObsId, Pomdp, Specification, StateId};
use crate::runtime::{uniform_action, ShieldGate};

/// States carrying this label end an episode. Models without it end on
/// REACH or AVOID.
pub const TERMINAL_LABEL: &str = "terminal";

pub fn terminal_states(m: &Pomdp, spec: &Specification) -> Vec<bool> {
    let mut term = vec![false; m.num_states()];
    match m.label(TERMINAL_LABEL) {
        Some(states) => states.iter().for_each(|&s| term[s] = true),
        None => spec.reach().iter().chain(spec.avoid()).for_each(|&s| term[s] = true),
    }
    term
}

/// Draws an index from a sparse distribution. Falls back to the last entry
/// when rounding leaves the draw past the total.
pub fn sample<R: Rng>(dist: &[(usize, f64)], rng: &mut R) -> usize {
    let mut u: f64 = rng.gen();
    for &(i, p) in dist {
        if u < p {
            return i;
        }
        u -= p;
    }
    dist.last().expect("distribution is nonempty").0
}

pub fn sample_initial<R: Rng>(m: &Pomdp, rng: &mut R) -> (StateId, ObsId) {
    let s = sample(m.initial(), rng);
    (s, sample(m.observations(s), rng))
}

/// One environment step: successor, its observation and the reward `R(s, a)`.
pub fn sample_step<R: Rng>(m: &Pomdp, s: StateId, a: ActionId, rng: &mut R) -> (StateId, ObsId, f64) {
    let t = sample(m.successors(s, a), rng);
    (t, sample(m.observations(t), rng), m.reward(s, a))
}

/// A finished episode. `states`, `supports` and `observations` have one more
/// entry than `actions`, `allowed` and `rewards`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub states: Vec<StateId>,
    pub observations: Vec<ObsId>,
    pub supports: Vec<SupportId>,
    pub actions: Vec<ActionId>,
    pub allowed: Vec<ActionSet>,
    pub rewards: Vec<f64>,
    /// Some visited state is in REACH.
    pub reached: bool,
    /// Some visited state is in AVOID.
    pub violated: bool,
    /// Ended in a terminal state rather than at the step cap.
    pub terminated: bool,
    /// Some step left the shield's winning region.
    pub abstained: bool,
}

impl Trace {
    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Runs one episode of at most `cap` steps. `choose` receives the current
/// support id and returns the permitted set and the action taken.
pub fn rollout<R, F>(
    tracker: &mut SupportTracker,
    spec: &Specification,
    terminal: &[bool],
    cap: usize,
    rng: &mut R,
    mut choose: F,
) -> Result<Trace, RuntimeError>
where
    R: Rng,
    F: FnMut(&SupportTracker, SupportId, &mut R) -> Result<(ActionSet, ActionId, bool), RuntimeError>,
{
    let m = tracker.model();
    let (mut s, z) = sample_initial(m, rng);
    let mut b = tracker.initial(z)?;
    let mut tr = Trace { states: vec![s], observations: vec![z], supports: vec![b], ..Trace::default() };
    tr.reached = spec.is_reach(s);
    tr.violated = spec.is_avoid(s);
    while !terminal[s] && tr.actions.len() < cap {
        let (allowed, a, abstained) = choose(tracker, b, rng)?;
        tr.abstained |= abstained;
        let (t, z, r) = sample_step(m, s, a, rng);
        b = tracker.update(b, a, z)?;
        s = t;
        tr.reached |= spec.is_reach(s);
        tr.violated |= spec.is_avoid(s);
        tr.actions.push(a);
        tr.allowed.push(allowed);
        tr.rewards.push(r);
        tr.states.push(s);
        tr.observations.push(z);
        tr.supports.push(b);
    }
    tr.terminated = terminal[s];
    Ok(tr)
}

/// Uniform choice over the gate's mask; with a shield this is the fair
/// admissible policy, without one a uniform random walk.
pub fn random_rollout<R: Rng>(
    tracker: &mut SupportTracker,
    gate: &mut ShieldGate,
    spec: &Specification,
    terminal: &[bool],
    cap: usize,
    rng: &mut R,
) -> Result<Trace, RuntimeError> {
    rollout(tracker, spec, terminal, cap, rng, |tracker, b, rng| {
        let g = gate.apply(tracker, b, 1.0, rng)?;
        Ok((g.mask, uniform_action(g.mask, rng).expect("mask is nonempty"), g.abstained))
    })
}
