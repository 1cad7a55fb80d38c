//! Shared helpers for the integration tests: a random small-POMDP
//! generator and brute-force oracles that do not go through the library's
//! support MDP or fixpoint.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use beliefshield::estimator::BeliefSupport;
use beliefshield::model::{ActionId, ActionSet, ObsId, Pomdp, PomdpBuilder, SpecKind, Specification, AVOID_LABEL, REACH_LABEL};
use beliefshield::synth::{verify_winning_from, PolicyTable};
use rand::seq::SliceRandom;
use rand::Rng;

/// A random model with 2..=max_states states, 1..=max_actions actions and
/// 1..=max_obs observations. Every state has at least one available action;
/// rows have one to three successors with random positive weights. One
/// state is REACH and one or two others are AVOID.
pub fn random_pomdp<R: Rng>(rng: &mut R, max_states: usize, max_actions: usize, max_obs: usize) -> Pomdp {
    let n = rng.gen_range(2..=max_states);
    let na = rng.gen_range(1..=max_actions);
    let no = rng.gen_range(1..=max_obs);
    let actions: Vec<String> = (0..na).map(|a| format!("a{a}")).collect();
    let obs: Vec<String> = (0..no).map(|z| format!("z{z}")).collect();
    let mut b = PomdpBuilder::new(n, actions, obs);
    let weights = |rng: &mut R, k: usize| -> Vec<f64> {
        let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    };
    let states: Vec<usize> = (0..n).collect();
    let k0 = rng.gen_range(1..=n.min(3));
    let init: Vec<usize> = states.choose_multiple(rng, k0).copied().collect();
    for (s, p) in init.iter().zip(weights(rng, k0)) {
        b.initial(*s, p);
    }
    for s in 0..n {
        let mut avail = ActionSet::EMPTY;
        for a in 0..na {
            if rng.gen_bool(0.8) {
                avail.insert(a);
            }
        }
        if avail.is_empty() {
            avail.insert(rng.gen_range(0..na));
        }
        b.set_available(s, avail);
        for a in avail.iter() {
            let k = rng.gen_range(1..=n.min(3));
            let succ: Vec<usize> = states.choose_multiple(rng, k).copied().collect();
            for (t, p) in succ.iter().zip(weights(rng, k)) {
                b.transition(s, a, *t, p);
            }
        }
        let k = if no > 1 && rng.gen_bool(0.25) { 2 } else { 1 };
        let zs: Vec<usize> = (0..no).collect::<Vec<_>>().choose_multiple(rng, k).copied().collect();
        for (z, p) in zs.iter().zip(weights(rng, k)) {
            b.observation(s, *z, p);
        }
    }
    let mut shuffled = states.clone();
    shuffled.shuffle(rng);
    b.label(REACH_LABEL, [shuffled[0]]);
    let n_avoid = rng.gen_range(1..=2.min(n - 1));
    b.label(AVOID_LABEL, shuffled[1..1 + n_avoid].iter().copied());
    b.build().expect("generated model is valid")
}

pub fn spec_of(m: &Pomdp, kind: SpecKind) -> Specification {
    Specification::from_labels(m, kind).expect("labels are consistent")
}

/// Actions available in every state of `b`.
pub fn offered(m: &Pomdp, b: &BeliefSupport) -> ActionSet {
    b.states().iter().fold(ActionSet::full(m.num_actions()), |acc, &s| acc.intersection(m.available(s)))
}

/// Successor filter straight from the definition: states reachable from `b`
/// under `a` that can emit `z`.
pub fn brute_update(m: &Pomdp, b: &BeliefSupport, a: ActionId, z: ObsId) -> Option<BeliefSupport> {
    let mut out = Vec::new();
    for t in 0..m.num_states() {
        let reachable = b.states().iter().any(|&s| m.available(s).contains(a) && m.transition_prob(s, a, t) > 0.0);
        if reachable && m.obs_prob(t, z) > 0.0 {
            out.push(t);
        }
    }
    BeliefSupport::new(out)
}

/// All distinct successor supports of `b` under `a`.
pub fn brute_successors(m: &Pomdp, b: &BeliefSupport, a: ActionId) -> Vec<BeliefSupport> {
    let mut out: Vec<BeliefSupport> = (0..m.num_observations()).filter_map(|z| brute_update(m, b, a, z)).collect();
    out.sort();
    out.dedup();
    out
}

pub fn brute_initial(m: &Pomdp) -> Vec<BeliefSupport> {
    let mut out: Vec<BeliefSupport> = (0..m.num_observations())
        .filter_map(|z| BeliefSupport::new(m.initial().iter().map(|e| e.0).filter(|&s| m.obs_prob(s, z) > 0.0)))
        .collect();
    out.sort();
    out.dedup();
    out
}

fn is_bad(spec: &Specification, b: &BeliefSupport) -> bool {
    b.states().iter().any(|&s| spec.is_avoid(s))
}

fn is_target(spec: &Specification, b: &BeliefSupport) -> bool {
    spec.kind() == SpecKind::ReachAvoid && b.states().iter().all(|&s| spec.is_reach(s))
}

/// Supports reachable from the initial ones under any actions, not
/// expanding bad or target supports.
pub fn brute_reachable(m: &Pomdp, spec: &Specification) -> BTreeSet<BeliefSupport> {
    let mut seen: BTreeSet<BeliefSupport> = brute_initial(m).into_iter().collect();
    let mut queue: VecDeque<BeliefSupport> = seen.iter().cloned().collect();
    while let Some(b) = queue.pop_front() {
        if is_bad(spec, &b) || is_target(spec, &b) {
            continue;
        }
        for a in offered(m, &b).iter() {
            for next in brute_successors(m, &b, a) {
                if seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
    }
    seen
}

/// Searches permissive tables (each support mapped to a nonempty action
/// set, played uniformly) for one that `verify_winning_from` accepts from
/// `start`. Supports are assigned lazily as the partial table reaches them.
/// Supports in `losers` are known not to be winning, so sets that can reach
/// them, or a bad support, in one step are skipped.
pub fn brute_wins_from(m: &Pomdp, spec: &Specification, start: &BeliefSupport, losers: &BTreeSet<BeliefSupport>) -> bool {
    fn candidates(m: &Pomdp, spec: &Specification, b: &BeliefSupport, losers: &BTreeSet<BeliefSupport>) -> Vec<ActionSet> {
        let usable: Vec<ActionId> = offered(m, b)
            .iter()
            .filter(|&a| brute_successors(m, b, a).iter().all(|n| !is_bad(spec, n) && !losers.contains(n)))
            .collect();
        (1u64..(1 << usable.len()))
            .rev()
            .map(|mask| {
                let mut set = ActionSet::EMPTY;
                for (i, &a) in usable.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        set.insert(a);
                    }
                }
                set
            })
            .collect()
    }
    fn search(
        m: &Pomdp,
        spec: &Specification,
        start: &BeliefSupport,
        losers: &BTreeSet<BeliefSupport>,
        policy: &mut PolicyTable,
    ) -> bool {
        let mut seen = BTreeSet::from([start.clone()]);
        let mut queue = VecDeque::from([start.clone()]);
        let mut pending = None;
        while let Some(b) = queue.pop_front() {
            if is_bad(spec, &b) {
                return false;
            }
            if is_target(spec, &b) {
                continue;
            }
            match policy.get(&b) {
                Some(set) => {
                    for a in set.iter() {
                        for next in brute_successors(m, &b, a) {
                            if seen.insert(next.clone()) {
                                queue.push_back(next);
                            }
                        }
                    }
                }
                None if pending.is_none() => pending = Some(b),
                None => {}
            }
        }
        let Some(b) = pending else {
            return verify_winning_from(m, policy, spec, std::slice::from_ref(start)).expect("policy covers the closure");
        };
        for set in candidates(m, spec, &b, losers) {
            policy.insert(b.clone(), set);
            if search(m, spec, start, losers, policy) {
                policy.remove(&b);
                return true;
            }
        }
        policy.remove(&b);
        false
    }
    if is_bad(spec, start) || losers.contains(start) {
        return false;
    }
    search(m, spec, start, losers, &mut PolicyTable::new())
}

/// The maximal winning region by exhaustive search, with each winning
/// support mapped to the actions whose successors all stay winning (every
/// offered action for targets).
pub fn brute_force_region(m: &Pomdp, spec: &Specification) -> BTreeMap<BeliefSupport, ActionSet> {
    let reachable = brute_reachable(m, spec);
    let mut losers = BTreeSet::new();
    loop {
        let before = losers.len();
        for b in &reachable {
            if !losers.contains(b) && !brute_wins_from(m, spec, b, &losers) {
                losers.insert(b.clone());
            }
        }
        if losers.len() == before {
            break;
        }
    }
    let winning: BTreeSet<BeliefSupport> = reachable.difference(&losers).cloned().collect();
    winning
        .iter()
        .map(|b| {
            let allowed = if is_target(spec, b) {
                offered(m, b)
            } else {
                let mut set = ActionSet::EMPTY;
                for a in offered(m, b).iter() {
                    if brute_successors(m, b, a).iter().all(|n| winning.contains(n)) {
                        set.insert(a);
                    }
                }
                set
            };
            (b.clone(), allowed)
        })
        .collect()
}

/// Same graph, fresh random transition probabilities.
pub fn perturb<R: Rng>(m: &Pomdp, rng: &mut R) -> Pomdp {
    m.with_transition_probs(|_, _, row| {
        let w: Vec<f64> = row.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    })
    .expect("perturbation keeps the graph")
}

/// An overapproximation of `m`: each available row gains a random extra
/// successor with probability `extra`, taking half the row's mass.
pub fn widen<R: Rng>(m: &Pomdp, rng: &mut R, extra: f64) -> Pomdp {
    let mut b = PomdpBuilder::new(m.num_states(), m.action_names().to_vec(), m.obs_names().to_vec());
    for &(s, p) in m.initial() {
        b.initial(s, p);
    }
    for s in 0..m.num_states() {
        b.set_available(s, m.available(s));
        for a in m.available(s).iter() {
            let row = m.successors(s, a);
            let t = rng.gen_range(0..m.num_states());
            let add = rng.gen_bool(extra) && row.iter().all(|e| e.0 != t);
            let scale = if add { 0.5 } else { 1.0 };
            for &(u, p) in row {
                b.transition(s, a, u, p * scale);
            }
            if add {
                b.transition(s, a, t, 0.5);
            }
        }
        for &(z, p) in m.observations(s) {
            b.observation(s, z, p);
        }
    }
    for (name, states) in m.labels() {
        b.label(name, states.iter().copied());
    }
    b.build().expect("widened model is valid")
}
