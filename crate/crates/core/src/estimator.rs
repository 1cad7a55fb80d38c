//! Belief-support state estimation.
//!
//! The support update needs only the graph of the model: a state `s'` is
//! possible after `(a, z)` iff some currently possible `s` reaches it under
//! `a` and `s'` can emit `z`. The exact Bayesian filter is kept alongside for
//! comparison and is never consulted by shields.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::EstimatorError;
use crate::model::{ActionId, ActionSet, ObsId, Pomdp, StateId};

/// The set of states with positive belief; sorted, duplicate free, nonempty.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BeliefSupport(Vec<StateId>);

impl BeliefSupport {
    /// Sorts and deduplicates `states`; `None` if empty.
    pub fn new(states: impl IntoIterator<Item = StateId>) -> Option<Self> {
        let mut v: Vec<_> = states.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        v.sort_unstable();
        v.dedup();
        Some(BeliefSupport(v))
    }

    pub fn singleton(s: StateId) -> Self {
        BeliefSupport(vec![s])
    }

    pub fn states(&self) -> &[StateId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, s: StateId) -> bool {
        self.0.binary_search(&s).is_ok()
    }

    pub fn is_subset(&self, other: &BeliefSupport) -> bool {
        self.0.iter().all(|&s| other.contains(s))
    }

    pub fn intersects(&self, ids: &[StateId]) -> bool {
        // both sides sorted
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < ids.len() {
            match self.0[i].cmp(&ids[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    pub fn all_in(&self, ids: &[StateId]) -> bool {
        self.0.iter().all(|s| ids.binary_search(s).is_ok())
    }
}

impl fmt::Debug for BeliefSupport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(&self.0).finish()
    }
}

/// Actions offered at a support: those available in every member state.
pub fn offered_actions(m: &Pomdp, b: &BeliefSupport) -> ActionSet {
    b.states()
        .iter()
        .fold(ActionSet::full(m.num_actions()), |acc, &s| acc.intersection(m.available(s)))
}

/// `{ s : I(s) > 0 and O(z0|s) > 0 }`.
pub fn initial_support(m: &Pomdp, z0: ObsId) -> Result<BeliefSupport, EstimatorError> {
    BeliefSupport::new(
        m.initial()
            .iter()
            .map(|&(s, _)| s)
            .filter(|&s| m.obs_prob(s, z0) > 0.0),
    )
    .ok_or_else(|| EstimatorError::EmptySupport { observation: m.obs_name(z0).to_string() })
}

/// Every support the agent can start in, one per observation consistent with `I`.
pub fn initial_supports(m: &Pomdp) -> Vec<(ObsId, BeliefSupport)> {
    m.initial_observations()
        .into_iter()
        .map(|z| (z, initial_support(m, z).expect("observation is consistent with I")))
        .collect()
}

fn check_available(m: &Pomdp, b: &BeliefSupport, a: ActionId) -> Result<(), EstimatorError> {
    match b.states().iter().find(|&&s| !m.available(s).contains(a)) {
        Some(&s) => Err(EstimatorError::UnavailableAction { action: m.action_name(a).to_string(), state: s }),
        None => Ok(()),
    }
}

/// The unique successor support after playing `a` in `b` and observing `z`.
pub fn update_support(m: &Pomdp, b: &BeliefSupport, a: ActionId, z: ObsId) -> Result<BeliefSupport, EstimatorError> {
    check_available(m, b, a)?;
    BeliefSupport::new(
        b.states()
            .iter()
            .flat_map(|&s| m.successors(s, a))
            .map(|&(t, _)| t)
            .filter(|&t| m.obs_prob(t, z) > 0.0),
    )
    .ok_or_else(|| EstimatorError::EmptySupport { observation: m.obs_name(z).to_string() })
}

/// All nonempty successor supports of `(b, a)`, keyed by observation in id order.
pub fn successor_supports(m: &Pomdp, b: &BeliefSupport, a: ActionId) -> Result<Vec<(ObsId, BeliefSupport)>, EstimatorError> {
    check_available(m, b, a)?;
    let mut by_obs: Vec<Vec<StateId>> = vec![Vec::new(); m.num_observations()];
    for &s in b.states() {
        for &(t, _) in m.successors(s, a) {
            for &(z, _) in m.observations(t) {
                by_obs[z].push(t);
            }
        }
    }
    Ok(by_obs
        .into_iter()
        .enumerate()
        .filter_map(|(z, states)| BeliefSupport::new(states).map(|b| (z, b)))
        .collect())
}

/// The 0/1 membership vector of `b` over `n_states` states.
pub fn support_feature_vector(b: &BeliefSupport, n_states: usize) -> Vec<bool> {
    let mut v = vec![false; n_states];
    for &s in b.states() {
        v[s] = true;
    }
    v
}

/// A sparse probability distribution over states.
#[derive(Clone, Debug, PartialEq)]
pub struct Belief(Vec<(StateId, f64)>);

impl Belief {
    /// Normalizes nonnegative weights; `None` if they are all zero.
    pub fn from_weights(weights: impl IntoIterator<Item = (StateId, f64)>) -> Option<Self> {
        let mut entries: Vec<(StateId, f64)> = weights.into_iter().filter(|e| e.1 > 0.0).collect();
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(StateId, f64)> = Vec::with_capacity(entries.len());
        for (s, p) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == s => last.1 += p,
                _ => merged.push((s, p)),
            }
        }
        let total: f64 = merged.iter().map(|e| e.1).sum();
        if total <= 0.0 {
            return None;
        }
        for e in &mut merged {
            e.1 /= total;
        }
        Some(Belief(merged))
    }

    /// The prior `I` conditioned on the first observation.
    pub fn initial(m: &Pomdp, z0: ObsId) -> Result<Self, EstimatorError> {
        Belief::from_weights(m.initial().iter().map(|&(s, p)| (s, p * m.obs_prob(s, z0))))
            .ok_or_else(|| EstimatorError::ZeroProbabilityObservation { observation: m.obs_name(z0).to_string() })
    }

    pub fn entries(&self) -> &[(StateId, f64)] {
        &self.0
    }

    pub fn prob(&self, s: StateId) -> f64 {
        self.0.binary_search_by_key(&s, |e| e.0).map(|i| self.0[i].1).unwrap_or(0.0)
    }

    pub fn support(&self) -> BeliefSupport {
        BeliefSupport::new(self.0.iter().map(|e| e.0)).expect("beliefs are nonempty")
    }

    pub fn total(&self) -> f64 {
        self.0.iter().map(|e| e.1).sum()
    }
}

/// `b'(s') ∝ O(z|s') · Σ_s P(s'|s,a) b(s)`.
pub fn bayes_update(m: &Pomdp, b: &Belief, a: ActionId, z: ObsId) -> Result<Belief, EstimatorError> {
    let mut weights = Vec::new();
    for &(s, p) in b.entries() {
        if !m.available(s).contains(a) {
            return Err(EstimatorError::UnavailableAction { action: m.action_name(a).to_string(), state: s });
        }
        for &(t, q) in m.successors(s, a) {
            let o = m.obs_prob(t, z);
            if o > 0.0 {
                weights.push((t, p * q * o));
            }
        }
    }
    Belief::from_weights(weights).ok_or_else(|| EstimatorError::ZeroProbabilityObservation { observation: m.obs_name(z).to_string() })
}

/// The estimator `σ` of one rollout: consumes `(a, z)` pairs and reports the
/// current support. Optionally tracks the exact belief as well.
#[derive(Clone, Debug)]
pub struct Estimator<'m> {
    model: &'m Pomdp,
    current: BeliefSupport,
    belief: Option<Belief>,
    steps: usize,
}

impl<'m> Estimator<'m> {
    pub fn new(model: &'m Pomdp, z0: ObsId) -> Result<Self, EstimatorError> {
        Ok(Estimator { model, current: initial_support(model, z0)?, belief: None, steps: 0 })
    }

    /// Like [`Estimator::new`] but also runs the Bayesian filter.
    pub fn with_belief(model: &'m Pomdp, z0: ObsId) -> Result<Self, EstimatorError> {
        let mut est = Estimator::new(model, z0)?;
        est.belief = Some(Belief::initial(model, z0)?);
        Ok(est)
    }

    pub fn step(&mut self, a: ActionId, z: ObsId) -> Result<&BeliefSupport, EstimatorError> {
        let next = update_support(self.model, &self.current, a, z)?;
        if let Some(b) = &self.belief {
            self.belief = Some(bayes_update(self.model, b, a, z)?);
        }
        self.current = next;
        self.steps += 1;
        Ok(&self.current)
    }

    pub fn current(&self) -> &BeliefSupport {
        &self.current
    }

    pub fn belief(&self) -> Option<&Belief> {
        self.belief.as_ref()
    }

    /// Number of `(a, z)` pairs consumed since the first observation.
    pub fn history_len(&self) -> usize {
        self.steps
    }

    pub fn offered(&self) -> ActionSet {
        offered_actions(self.model, &self.current)
    }
}

/// Dense id for an interned support.
pub type SupportId = u32;

/// Interns supports and memoizes `(support, a, z)` updates so long training
/// runs pay for each distinct update once. One tracker per run.
#[derive(Debug)]
pub struct SupportTracker<'m> {
    model: &'m Pomdp,
    supports: Vec<BeliefSupport>,
    offered: Vec<ActionSet>,
    index: HashMap<BeliefSupport, SupportId>,
    memo: HashMap<(SupportId, u8, u32), SupportId>,
}

impl<'m> SupportTracker<'m> {
    pub fn new(model: &'m Pomdp) -> Self {
        SupportTracker { model, supports: Vec::new(), offered: Vec::new(), index: HashMap::new(), memo: HashMap::new() }
    }

    pub fn model(&self) -> &'m Pomdp {
        self.model
    }

    pub fn intern(&mut self, b: BeliefSupport) -> SupportId {
        if let Some(&id) = self.index.get(&b) {
            return id;
        }
        let id = self.supports.len() as SupportId;
        self.offered.push(offered_actions(self.model, &b));
        self.supports.push(b.clone());
        self.index.insert(b, id);
        id
    }

    pub fn initial(&mut self, z0: ObsId) -> Result<SupportId, EstimatorError> {
        let b = initial_support(self.model, z0)?;
        Ok(self.intern(b))
    }

    pub fn update(&mut self, id: SupportId, a: ActionId, z: ObsId) -> Result<SupportId, EstimatorError> {
        let key = (id, a as u8, z as u32);
        if let Some(&next) = self.memo.get(&key) {
            return Ok(next);
        }
        let next = update_support(self.model, &self.supports[id as usize], a, z)?;
        let next = self.intern(next);
        self.memo.insert(key, next);
        Ok(next)
    }

    pub fn support(&self, id: SupportId) -> &BeliefSupport {
        &self.supports[id as usize]
    }

    pub fn offered(&self, id: SupportId) -> ActionSet {
        self.offered[id as usize]
    }

    pub fn len(&self) -> usize {
        self.supports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supports.is_empty()
    }
}
