//! Explicit POMDPs, reach-avoid specifications and partial-model relations.
//!
//! A [`Pomdp`] is immutable once built. All distributions are stored sparsely
//! with strictly positive entries, so the support of every distribution is
//! simply the set of stored ids.

mod actions;
pub mod format;
mod relations;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use actions::{ActionSet, MAX_ACTIONS};
pub use relations::{is_graph_preserving, overapproximates};

use crate::error::ModelError;

pub type StateId = usize;
pub type ActionId = usize;
pub type ObsId = usize;

/// Tolerance for distributions summing to one.
pub const PROB_TOLERANCE: f64 = 1e-9;

pub const REACH_LABEL: &str = "reach";
pub const AVOID_LABEL: &str = "avoid";

#[derive(Clone, Debug, PartialEq)]
pub struct Pomdp {
    state_names: Vec<String>,
    action_names: Vec<String>,
    obs_names: Vec<String>,
    initial: Vec<(StateId, f64)>,
    available: Vec<ActionSet>,
    // [state][action] -> sorted successor distribution; empty when unavailable
    trans: Vec<Vec<Vec<(StateId, f64)>>>,
    obs: Vec<Vec<(ObsId, f64)>>,
    reward: Vec<Vec<f64>>,
    labels: BTreeMap<String, Vec<StateId>>,
}

impl Pomdp {
    pub fn num_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn num_actions(&self) -> usize {
        self.action_names.len()
    }

    pub fn num_observations(&self) -> usize {
        self.obs_names.len()
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.state_names[s]
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        &self.action_names[a]
    }

    pub fn action_names(&self) -> &[String] {
        &self.action_names
    }

    pub fn obs_name(&self, z: ObsId) -> &str {
        &self.obs_names[z]
    }

    pub fn obs_names(&self) -> &[String] {
        &self.obs_names
    }

    pub fn action_id(&self, name: &str) -> Option<ActionId> {
        self.action_names.iter().position(|n| n == name)
    }

    pub fn obs_id(&self, name: &str) -> Option<ObsId> {
        self.obs_names.iter().position(|n| n == name)
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.state_names.iter().position(|n| n == name)
    }

    /// Sparse initial distribution, sorted by state.
    pub fn initial(&self) -> &[(StateId, f64)] {
        &self.initial
    }

    pub fn available(&self, s: StateId) -> ActionSet {
        self.available[s]
    }

    /// `P(.|s,a)`; empty if `a` is unavailable in `s`.
    pub fn successors(&self, s: StateId, a: ActionId) -> &[(StateId, f64)] {
        &self.trans[s][a]
    }

    pub fn transition_prob(&self, s: StateId, a: ActionId, t: StateId) -> f64 {
        lookup(&self.trans[s][a], t)
    }

    /// `O(.|s)`, the observation emitted when arriving in `s`.
    pub fn observations(&self, s: StateId) -> &[(ObsId, f64)] {
        &self.obs[s]
    }

    pub fn obs_prob(&self, s: StateId, z: ObsId) -> f64 {
        lookup(&self.obs[s], z)
    }

    pub fn reward(&self, s: StateId, a: ActionId) -> f64 {
        self.reward[s][a]
    }

    pub fn labels(&self) -> &BTreeMap<String, Vec<StateId>> {
        &self.labels
    }

    pub fn label(&self, name: &str) -> Option<&[StateId]> {
        self.labels.get(name).map(Vec::as_slice)
    }

    /// Observations that some initial state can emit, in id order.
    pub fn initial_observations(&self) -> Vec<ObsId> {
        let mut seen = vec![false; self.num_observations()];
        for &(s, _) in &self.initial {
            for &(z, _) in &self.obs[s] {
                seen[z] = true;
            }
        }
        (0..seen.len()).filter(|&z| seen[z]).collect()
    }

    /// Hash of the graph structure: vocabularies, availability, the supports
    /// of `I`, `P` and `O`, and labels. Probabilities and rewards are ignored.
    pub fn graph_fingerprint(&self) -> String {
        let mut h = Sha256::new();
        let mut put = |bytes: &[u8]| {
            h.update((bytes.len() as u64).to_le_bytes());
            h.update(bytes);
        };
        put(&(self.num_states() as u64).to_le_bytes());
        for name in self.action_names.iter().chain(&self.obs_names) {
            put(name.as_bytes());
        }
        put(&ids_bytes(self.initial.iter().map(|e| e.0)));
        for s in 0..self.num_states() {
            put(&self.available[s].bits().to_le_bytes());
            for a in self.available[s].iter() {
                put(&ids_bytes(self.trans[s][a].iter().map(|e| e.0)));
            }
            put(&ids_bytes(self.obs[s].iter().map(|e| e.0)));
        }
        for (name, states) in &self.labels {
            put(name.as_bytes());
            put(&ids_bytes(states.iter().copied()));
        }
        to_hex(&h.finalize())
    }

    /// A copy with the probabilities of `P` replaced by `f(s, a, row)`; the
    /// closure must return a distribution over the same successors.
    pub fn with_transition_probs<F>(&self, mut f: F) -> Result<Pomdp, ModelError>
    where
        F: FnMut(StateId, ActionId, &[(StateId, f64)]) -> Vec<f64>,
    {
        let mut out = self.clone();
        for s in 0..out.num_states() {
            for a in out.available[s].iter() {
                let probs = f(s, a, &self.trans[s][a]);
                assert_eq!(probs.len(), self.trans[s][a].len(), "row length must be preserved");
                for (entry, p) in out.trans[s][a].iter_mut().zip(probs) {
                    entry.1 = p;
                }
                out.trans[s][a].retain(|e| e.1 > 0.0);
            }
        }
        out.validate()?;
        Ok(out)
    }

    /// Rebuilds this model through a builder so it can be edited.
    pub fn to_builder(&self) -> PomdpBuilder {
        let mut b = PomdpBuilder::new(self.num_states(), self.action_names.clone(), self.obs_names.clone());
        b.state_names = self.state_names.clone();
        for &(s, p) in &self.initial {
            b.initial(s, p);
        }
        for s in 0..self.num_states() {
            b.set_available(s, self.available[s]);
            for a in 0..self.num_actions() {
                for &(t, p) in &self.trans[s][a] {
                    b.transition(s, a, t, p);
                }
                if self.reward[s][a] != 0.0 {
                    b.reward(s, a, self.reward[s][a]);
                }
            }
            for &(z, p) in &self.obs[s] {
                b.observation(s, z, p);
            }
        }
        for (name, states) in &self.labels {
            b.label(name, states.iter().copied());
        }
        b
    }

    fn validate(&self) -> Result<(), ModelError> {
        let n = self.num_states();
        check_distribution(&self.initial, "initial distribution")
            .map_err(|sum| ModelError::InitialDistribution { sum })?;
        for s in 0..n {
            if self.available[s].is_empty() {
                return Err(ModelError::NoAvailableAction { state: s });
            }
            for a in 0..self.num_actions() {
                let row = &self.trans[s][a];
                if !self.available[s].contains(a) {
                    if !row.is_empty() {
                        return Err(ModelError::UnavailableTransition {
                            state: s,
                            action: self.action_names[a].clone(),
                        });
                    }
                    continue;
                }
                check_distribution(row, "transition").map_err(|sum| ModelError::TransitionDistribution {
                    state: s,
                    action: self.action_names[a].clone(),
                    sum,
                })?;
            }
            check_distribution(&self.obs[s], "observation")
                .map_err(|sum| ModelError::ObservationDistribution { state: s, sum })?;
        }
        if let (Some(reach), Some(avoid)) = (self.labels.get(REACH_LABEL), self.labels.get(AVOID_LABEL)) {
            if let Some(&s) = reach.iter().find(|s| avoid.binary_search(s).is_ok()) {
                return Err(ModelError::LabelOverlap { state: s });
            }
        }
        Ok(())
    }
}

fn lookup<K: Ord + Copy>(row: &[(K, f64)], key: K) -> f64 {
    row.binary_search_by(|e| e.0.cmp(&key)).map(|i| row[i].1).unwrap_or(0.0)
}

fn check_distribution<K>(row: &[(K, f64)], _what: &str) -> Result<(), f64> {
    let sum: f64 = row.iter().map(|e| e.1).sum();
    if (sum - 1.0).abs() > PROB_TOLERANCE {
        Err(sum)
    } else {
        Ok(())
    }
}

fn ids_bytes(ids: impl Iterator<Item = usize>) -> Vec<u8> {
    ids.flat_map(|i| (i as u64).to_le_bytes()).collect()
}

pub(crate) fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Incremental construction of a [`Pomdp`]; `build` validates every invariant.
#[derive(Clone, Debug)]
pub struct PomdpBuilder {
    state_names: Vec<String>,
    action_names: Vec<String>,
    obs_names: Vec<String>,
    initial: BTreeMap<StateId, f64>,
    available: Vec<Option<ActionSet>>,
    trans: Vec<Vec<BTreeMap<StateId, f64>>>,
    obs: Vec<BTreeMap<ObsId, f64>>,
    reward: Vec<Vec<f64>>,
    labels: BTreeMap<String, Vec<StateId>>,
}

impl PomdpBuilder {
    pub fn new(num_states: usize, actions: Vec<String>, observations: Vec<String>) -> Self {
        let na = actions.len();
        PomdpBuilder {
            state_names: (0..num_states).map(|i| i.to_string()).collect(),
            action_names: actions,
            obs_names: observations,
            initial: BTreeMap::new(),
            available: vec![None; num_states],
            trans: vec![vec![BTreeMap::new(); na]; num_states],
            obs: vec![BTreeMap::new(); num_states],
            reward: vec![vec![0.0; na]; num_states],
            labels: BTreeMap::new(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn state_names(&mut self, names: Vec<String>) -> &mut Self {
        assert_eq!(names.len(), self.state_names.len());
        self.state_names = names;
        self
    }

    /// Adds `p` to `I(s)`.
    pub fn initial(&mut self, s: StateId, p: f64) -> &mut Self {
        *self.initial.entry(s).or_default() += p;
        self
    }

    /// Adds `p` to `P(t|s,a)`.
    pub fn transition(&mut self, s: StateId, a: ActionId, t: StateId, p: f64) -> &mut Self {
        *self.trans[s][a].entry(t).or_default() += p;
        self
    }

    pub fn remove_transition(&mut self, s: StateId, a: ActionId, t: StateId) -> &mut Self {
        self.trans[s][a].remove(&t);
        self
    }

    /// Adds `p` to `O(z|s)`.
    pub fn observation(&mut self, s: StateId, z: ObsId, p: f64) -> &mut Self {
        *self.obs[s].entry(z).or_default() += p;
        self
    }

    pub fn reward(&mut self, s: StateId, a: ActionId, r: f64) -> &mut Self {
        self.reward[s][a] = r;
        self
    }

    /// Restricts `Act(s)`; states without an explicit set get every action.
    pub fn set_available(&mut self, s: StateId, actions: ActionSet) -> &mut Self {
        self.available[s] = Some(actions);
        self
    }

    pub fn label(&mut self, name: &str, states: impl IntoIterator<Item = StateId>) -> &mut Self {
        let entry = self.labels.entry(name.to_string()).or_default();
        entry.extend(states);
        entry.sort_unstable();
        entry.dedup();
        self
    }

    pub fn build(self) -> Result<Pomdp, ModelError> {
        let n = self.num_states();
        let na = self.action_names.len();
        let nz = self.obs_names.len();
        if na > MAX_ACTIONS {
            return Err(ModelError::TooManyActions(na));
        }
        let check_id = |kind: &'static str, id: usize, len: usize| {
            if id >= len {
                Err(ModelError::OutOfRange { kind, id, len })
            } else {
                Ok(())
            }
        };
        let check_prob = |p: f64, context: String| {
            if !(0.0..=1.0 + PROB_TOLERANCE).contains(&p) || p.is_nan() {
                Err(ModelError::ProbabilityRange { value: p, context })
            } else {
                Ok(())
            }
        };

        let mut initial = Vec::new();
        for (&s, &p) in &self.initial {
            check_id("state", s, n)?;
            check_prob(p, format!("I({s})"))?;
            if p > 0.0 {
                initial.push((s, p));
            }
        }
        let mut trans = Vec::with_capacity(n);
        for (s, rows) in self.trans.into_iter().enumerate() {
            let mut out = Vec::with_capacity(na);
            for (a, row) in rows.into_iter().enumerate() {
                let mut r = Vec::with_capacity(row.len());
                for (t, p) in row {
                    check_id("state", t, n)?;
                    check_prob(p, format!("P({t}|{s},{})", self.action_names[a]))?;
                    if p > 0.0 {
                        r.push((t, p));
                    }
                }
                out.push(r);
            }
            trans.push(out);
        }
        let mut obs = Vec::with_capacity(n);
        for (s, row) in self.obs.into_iter().enumerate() {
            let mut r = Vec::with_capacity(row.len());
            for (z, p) in row {
                check_id("observation", z, nz)?;
                check_prob(p, format!("O({z}|{s})"))?;
                if p > 0.0 {
                    r.push((z, p));
                }
            }
            obs.push(r);
        }
        for states in self.labels.values() {
            for &s in states {
                check_id("state", s, n)?;
            }
        }
        let available = self
            .available
            .into_iter()
            .map(|a| a.unwrap_or_else(|| ActionSet::full(na)))
            .collect::<Vec<_>>();
        for set in &available {
            if let Some(a) = set.iter().find(|&a| a >= na) {
                return Err(ModelError::OutOfRange { kind: "action", id: a, len: na });
            }
        }
        let m = Pomdp {
            state_names: self.state_names,
            action_names: self.action_names,
            obs_names: self.obs_names,
            initial,
            available,
            trans,
            obs,
            reward: self.reward,
            labels: self.labels,
        };
        m.validate()?;
        Ok(m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecKind {
    ReachAvoid,
    AvoidOnly,
}

impl std::str::FromStr for SpecKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reach-avoid" => Ok(SpecKind::ReachAvoid),
            "avoid" | "avoid-only" => Ok(SpecKind::AvoidOnly),
            other => Err(format!("unknown specification kind {other:?}")),
        }
    }
}

/// A reach-avoid pair `<REACH, AVOID>` or an avoid-only `<AVOID>`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Specification {
    kind: SpecKind,
    reach: Vec<StateId>,
    avoid: Vec<StateId>,
}

impl Specification {
    pub fn reach_avoid(reach: impl IntoIterator<Item = StateId>, avoid: impl IntoIterator<Item = StateId>) -> Result<Self, ModelError> {
        let reach = sorted(reach);
        let avoid = sorted(avoid);
        if reach.is_empty() {
            return Err(ModelError::InvalidSpecification("reach-avoid needs a nonempty REACH set".into()));
        }
        if let Some(s) = reach.iter().find(|s| avoid.binary_search(s).is_ok()) {
            return Err(ModelError::InvalidSpecification(format!("state {s} is in both REACH and AVOID")));
        }
        Ok(Specification { kind: SpecKind::ReachAvoid, reach, avoid })
    }

    pub fn avoid_only(avoid: impl IntoIterator<Item = StateId>) -> Result<Self, ModelError> {
        let avoid = sorted(avoid);
        if avoid.is_empty() {
            return Err(ModelError::InvalidSpecification("avoid specification needs a nonempty AVOID set".into()));
        }
        Ok(Specification { kind: SpecKind::AvoidOnly, reach: Vec::new(), avoid })
    }

    /// Reads the `reach` and `avoid` labels of `m`.
    pub fn from_labels(m: &Pomdp, kind: SpecKind) -> Result<Self, ModelError> {
        let avoid = m.label(AVOID_LABEL).unwrap_or(&[]).to_vec();
        let spec = match kind {
            SpecKind::ReachAvoid => {
                let reach = m
                    .label(REACH_LABEL)
                    .ok_or_else(|| ModelError::InvalidSpecification("model has no `reach` label".into()))?;
                Specification::reach_avoid(reach.iter().copied(), avoid)?
            }
            SpecKind::AvoidOnly => Specification::avoid_only(avoid)?,
        };
        spec.check_states(m.num_states())?;
        Ok(spec)
    }

    pub fn check_states(&self, num_states: usize) -> Result<(), ModelError> {
        match self.reach.iter().chain(&self.avoid).find(|&&s| s >= num_states) {
            Some(&s) => Err(ModelError::OutOfRange { kind: "state", id: s, len: num_states }),
            None => Ok(()),
        }
    }

    pub fn kind(&self) -> SpecKind {
        self.kind
    }

    pub fn reach(&self) -> &[StateId] {
        &self.reach
    }

    pub fn avoid(&self) -> &[StateId] {
        &self.avoid
    }

    pub fn is_reach(&self, s: StateId) -> bool {
        self.reach.binary_search(&s).is_ok()
    }

    pub fn is_avoid(&self, s: StateId) -> bool {
        self.avoid.binary_search(&s).is_ok()
    }
}

fn sorted(ids: impl IntoIterator<Item = StateId>) -> Vec<StateId> {
    let mut v: Vec<_> = ids.into_iter().collect();
    v.sort_unstable();
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn builder_rejects_short_rows() {
        let mut b = PomdpBuilder::new(2, vec!["a".into()], vec!["z".into()]);
        b.initial(0, 1.0);
        b.transition(0, 0, 1, 0.9);
        b.transition(1, 0, 1, 1.0);
        b.observation(0, 0, 1.0).observation(1, 0, 1.0);
        let err = b.build().unwrap_err();
        assert!(err.to_string().contains("transition distribution"), "{err}");
    }

    #[test]
    fn builder_rejects_missing_availability() {
        let mut b = PomdpBuilder::new(1, vec!["a".into()], vec!["z".into()]);
        b.initial(0, 1.0).observation(0, 0, 1.0).set_available(0, ActionSet::EMPTY);
        assert_eq!(b.build().unwrap_err(), ModelError::NoAvailableAction { state: 0 });
    }

    #[test]
    fn fingerprint_ignores_probabilities() {
        let t2 = fixtures::t2();
        let skewed = t2
            .with_transition_probs(|_, _, row| {
                if row.len() == 2 {
                    vec![0.7, 0.3]
                } else {
                    row.iter().map(|e| e.1).collect()
                }
            })
            .unwrap();
        assert_ne!(t2, skewed);
        assert_eq!(t2.graph_fingerprint(), skewed.graph_fingerprint());
        assert_ne!(t2.graph_fingerprint(), fixtures::t1().graph_fingerprint());
    }

    #[test]
    fn specification_invariants() {
        assert!(Specification::reach_avoid([1], [1]).is_err());
        assert!(Specification::reach_avoid([], [1]).is_err());
        assert!(Specification::avoid_only([]).is_err());
        let spec = Specification::reach_avoid([3, 3], [2]).unwrap();
        assert_eq!(spec.reach(), &[3]);
        assert!(spec.is_avoid(2) && !spec.is_avoid(3));
    }

    #[test]
    fn spec_from_t1_labels() {
        let m = fixtures::t1();
        let spec = Specification::from_labels(&m, SpecKind::ReachAvoid).unwrap();
        assert_eq!((spec.reach(), spec.avoid()), (&[3][..], &[2][..]));
        let avoid = Specification::from_labels(&m, SpecKind::AvoidOnly).unwrap();
        assert!(avoid.reach().is_empty());
    }
}
