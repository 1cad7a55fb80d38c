//! Tabular Q-learning over feature keys.

use std::collections::HashMap;

use rand::Rng;

use crate::model::{ActionId, ActionSet};
use crate::runtime::uniform_action;

/// Action values per feature vector, zero until first written.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QTable {
    num_actions: usize,
    values: HashMap<Vec<u32>, Vec<f64>>,
}

impl QTable {
    pub fn new(num_actions: usize) -> Self {
        QTable { num_actions, values: HashMap::new() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, x: &[u32], a: ActionId) -> f64 {
        self.values.get(x).map_or(0.0, |row| row[a])
    }

    pub fn set(&mut self, x: &[u32], a: ActionId, v: f64) {
        let n = self.num_actions;
        match self.values.get_mut(x) {
            Some(row) => row[a] = v,
            None => {
                let mut row = vec![0.0; n];
                row[a] = v;
                self.values.insert(x.to_vec(), row);
            }
        }
    }

    /// `max_{a ∈ mask} Q(x, a)`.
    pub fn max_over(&self, x: &[u32], mask: ActionSet) -> f64 {
        match self.values.get(x) {
            Some(row) => mask.iter().map(|a| row[a]).fold(f64::NEG_INFINITY, f64::max),
            None => 0.0,
        }
    }

    /// Greedy action in `mask`, lowest index on ties.
    pub fn greedy(&self, x: &[u32], mask: ActionSet) -> ActionId {
        let row = self.values.get(x);
        let mut best: Option<(ActionId, f64)> = None;
        for a in mask.iter() {
            let v = row.map_or(0.0, |r| r[a]);
            if best.map_or(true, |(_, bv)| v > bv) {
                best = Some((a, v));
            }
        }
        best.expect("mask is nonempty").0
    }

    pub fn epsilon_greedy<R: Rng>(&self, x: &[u32], mask: ActionSet, epsilon: f64, rng: &mut R) -> ActionId {
        if epsilon > 0.0 && rng.gen_bool(epsilon.min(1.0)) {
            uniform_action(mask, rng).expect("mask is nonempty")
        } else {
            self.greedy(x, mask)
        }
    }
}

/// A transition for [`q_update`]; `next` is `None` when the episode ended.
#[derive(Clone, Copy, Debug)]
pub struct Transition<'a> {
    pub x: &'a [u32],
    pub a: ActionId,
    pub r: f64,
    /// Successor features and the actions permitted there.
    pub next: Option<(&'a [u32], ActionSet)>,
}

/// `Q(x,a) += η (r + γ max_{a' ∈ allowed'} Q(x',a') - Q(x,a))`.
pub fn q_update(q: &mut QTable, t: &Transition, gamma: f64, lr: f64) {
    let bootstrap = t.next.map_or(0.0, |(x2, mask)| q.max_over(x2, mask));
    let old = q.get(t.x, t.a);
    let target = t.r + gamma * bootstrap;
    if lr != 0.0 {
        q.set(t.x, t.a, old + lr * (target - old));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{BeliefSupport, SupportTracker};
    use crate::fixtures;
    use crate::learn::{FeatureMap, FeatureRepr};
    use crate::model::{SpecKind, Specification};
    use crate::sim::{sample_step, terminal_states};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_rate_is_a_no_op() {
        let mut q = QTable::new(2);
        q.set(&[0, 1], 1, 3.0);
        let before = q.clone();
        q_update(&mut q, &Transition { x: &[0, 1], a: 1, r: 5.0, next: Some((&[0, 2], ActionSet::full(2))) }, 1.0, 0.0);
        assert_eq!(q, before);
    }

    #[test]
    fn absorbing_step() {
        let mut q = QTable::new(2);
        q_update(&mut q, &Transition { x: &[0, 1], a: 0, r: 10.0, next: None }, 1.0, 1.0);
        assert_eq!(q.get(&[0, 1], 0), 10.0);
    }

    #[test]
    fn max_respects_mask() {
        let mut q = QTable::new(3);
        q.set(&[0], 0, 5.0);
        q.set(&[0], 2, 1.0);
        assert_eq!(q.max_over(&[0], ActionSet::from_bits(0b110)), 1.0);
        assert_eq!(q.greedy(&[0], ActionSet::from_bits(0b110)), 2);
        q_update(&mut q, &Transition { x: &[1], a: 0, r: 0.0, next: Some((&[0], ActionSet::from_bits(0b110))) }, 1.0, 1.0);
        assert_eq!(q.get(&[1], 0), 1.0);
    }

    /// Value iteration on T1's support MDP. Each support of T1 is reached
    /// with one belief only: the initial {0,1} is uniform, the rest are
    /// singletons, so the transition probabilities are known exactly.
    fn t1_oracle(gamma: f64) -> HashMap<(Vec<usize>, usize), f64> {
        // (support, action) -> [(prob, reward, successor or None if terminal)]
        type Row = Vec<(f64, f64, Option<Vec<usize>>)>;
        let model: Vec<((Vec<usize>, usize), Row)> = vec![
            ((vec![0, 1], 0), vec![(0.5, 0.0, Some(vec![1])), (0.5, 10.0, None)]),
            ((vec![0, 1], 1), vec![(0.5, -10.0, None), (0.5, 0.0, Some(vec![0]))]),
            ((vec![0], 0), vec![(1.0, 0.0, Some(vec![1]))]),
            ((vec![0], 1), vec![(1.0, -10.0, None)]),
            ((vec![1], 0), vec![(1.0, 10.0, None)]),
            ((vec![1], 1), vec![(1.0, 0.0, Some(vec![0]))]),
        ];
        let mut q: HashMap<(Vec<usize>, usize), f64> = model.iter().map(|(k, _)| (k.clone(), 0.0)).collect();
        for _ in 0..500 {
            let v = |q: &HashMap<(Vec<usize>, usize), f64>, b: &Vec<usize>| q[&(b.clone(), 0)].max(q[&(b.clone(), 1)]);
            let next: HashMap<_, _> = model
                .iter()
                .map(|(k, row)| {
                    let val = row.iter().map(|(p, r, t)| p * (r + t.as_ref().map_or(0.0, |b| gamma * v(&q, b)))).sum::<f64>();
                    (k.clone(), val)
                })
                .collect();
            q = next;
        }
        q
    }

    #[test]
    fn t1_sweeps_match_value_iteration() {
        let gamma = 0.9;
        let oracle = t1_oracle(gamma);
        // closed form for two of the entries
        assert!((oracle[&(vec![0, 1], 0)] - 9.5).abs() < 1e-9);
        assert!((oracle[&(vec![1], 1)] - 8.1).abs() < 1e-9);

        // Synchronous sweeps: every (support, action) pair gets one sampled
        // transition per sweep, drawn from the true state under its belief.
        let m = fixtures::t1();
        let spec = Specification::from_labels(&m, SpecKind::ReachAvoid).unwrap();
        let term = terminal_states(&m, &spec);
        let fm = FeatureMap::new(FeatureRepr::Support, &m);
        let mut tracker = SupportTracker::new(&m);
        let mut q = QTable::new(2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let all = ActionSet::full(2);
        let keys: Vec<(Vec<usize>, usize)> = {
            let mut k: Vec<_> = oracle.keys().cloned().collect();
            k.sort();
            k
        };
        let sweeps = 100_000;
        for n in 1..=sweeps {
            for (support, a) in &keys {
                let b = tracker.intern(BeliefSupport::new(support.iter().copied()).unwrap());
                let s = support[rng.gen_range(0..support.len())];
                let x = fm.features(0, tracker.support(b), all);
                let (t, z2, r) = sample_step(&m, s, *a, &mut rng);
                let b2 = tracker.update(b, *a, z2).unwrap();
                let x2 = fm.features(z2, tracker.support(b2), all);
                let next = if term[t] { None } else { Some((x2.as_slice(), all)) };
                q_update(&mut q, &Transition { x: &x, a: *a, r, next }, gamma, 1.0 / n as f64);
            }
        }
        for ((support, a), want) in &oracle {
            let b = BeliefSupport::new(support.iter().copied()).unwrap();
            let x = fm.features(0, &b, all);
            let got = q.get(&x, *a);
            assert!((got - want).abs() < 0.05, "Q({support:?}, {a}) = {got}, oracle {want}");
        }
    }
}
