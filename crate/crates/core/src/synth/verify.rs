//! Independent policy check on the product chain of states and supports.
//!
//! This does not use the support MDP or the fixpoint; it is the oracle the
//! synthesis tests compare against.

use std::collections::{BTreeMap, HashMap};

use crate::error::SynthError;
use crate::estimator::{initial_supports, update_support, BeliefSupport};
use crate::model::{ActionSet, Pomdp, SpecKind, Specification, StateId};

/// Supports mapped to the actions a policy may take there. Singleton sets
/// are deterministic policies; larger sets stand for the uniform (fair)
/// randomization over the set.
pub type PolicyTable = BTreeMap<BeliefSupport, ActionSet>;

/// Checks `policy` from every initial support of `m`.
pub fn verify_winning_policy(m: &Pomdp, policy: &PolicyTable, spec: &Specification) -> Result<bool, SynthError> {
    let starts: Vec<_> = initial_supports(m).into_iter().map(|(_, b)| b).collect();
    verify_winning_from(m, policy, spec, &starts)
}

/// Checks `policy` when the run may start in any state of any of `starts`
/// with that support as the estimate.
///
/// Winning means: no product node with an AVOID state is reachable and, for
/// reach-avoid, every reachable node can still reach a node whose support
/// lies inside REACH. In a finite chain the latter is the same as every
/// bottom SCC containing such a node.
pub fn verify_winning_from(
    m: &Pomdp,
    policy: &PolicyTable,
    spec: &Specification,
    starts: &[BeliefSupport],
) -> Result<bool, SynthError> {
    spec.check_states(m.num_states())?;
    let reach_avoid = spec.kind() == SpecKind::ReachAvoid;
    let mut supports: Vec<BeliefSupport> = Vec::new();
    let mut support_ids: HashMap<BeliefSupport, usize> = HashMap::new();
    let mut nodes: Vec<(StateId, usize)> = Vec::new();
    let mut node_ids: HashMap<(StateId, usize), usize> = HashMap::new();
    let mut succ: Vec<Vec<usize>> = Vec::new();
    let mut goal: Vec<bool> = Vec::new();

    let mut intern = |b: BeliefSupport, supports: &mut Vec<BeliefSupport>| -> usize {
        *support_ids.entry(b.clone()).or_insert_with(|| {
            supports.push(b);
            supports.len() - 1
        })
    };
    let mut stack = Vec::new();
    let mut push = |s: StateId,
                    bid: usize,
                    nodes: &mut Vec<(StateId, usize)>,
                    succ: &mut Vec<Vec<usize>>,
                    stack: &mut Vec<usize>|
     -> usize {
        *node_ids.entry((s, bid)).or_insert_with(|| {
            nodes.push((s, bid));
            succ.push(Vec::new());
            stack.push(nodes.len() - 1);
            nodes.len() - 1
        })
    };

    for b in starts {
        let bid = intern(b.clone(), &mut supports);
        for &s in b.states() {
            push(s, bid, &mut nodes, &mut succ, &mut stack);
        }
    }
    while let Some(v) = stack.pop() {
        let (s, bid) = nodes[v];
        if goal.len() <= v {
            goal.resize(v + 1, false);
        }
        if spec.is_avoid(s) {
            return Ok(false);
        }
        let b = supports[bid].clone();
        if reach_avoid && b.all_in(spec.reach()) {
            goal[v] = true;
            continue;
        }
        let actions = policy.get(&b).ok_or_else(|| SynthError::PolicyIncomplete(b.clone()))?.intersection(m.available(s));
        if actions.is_empty() {
            // stuck: cannot act, so cannot be winning
            return Ok(false);
        }
        let mut out = Vec::new();
        for a in actions.iter() {
            for &(t, _) in m.successors(s, a) {
                for &(z, _) in m.observations(t) {
                    let next = update_support(m, &b, a, z)?;
                    let nid = intern(next, &mut supports);
                    let w = push(t, nid, &mut nodes, &mut succ, &mut stack);
                    if !out.contains(&w) {
                        out.push(w);
                    }
                }
            }
        }
        succ[v] = out;
    }
    if !reach_avoid {
        return Ok(true);
    }
    goal.resize(nodes.len(), false);
    let mut preds = vec![Vec::new(); nodes.len()];
    for (v, out) in succ.iter().enumerate() {
        for &w in out {
            preds[w].push(v);
        }
    }
    let mut seen = goal.clone();
    let mut queue: Vec<usize> = (0..nodes.len()).filter(|&v| goal[v]).collect();
    while let Some(w) = queue.pop() {
        for &v in &preds[w] {
            if !seen[v] {
                seen[v] = true;
                queue.push(v);
            }
        }
    }
    Ok(seen.into_iter().all(|x| x))
}
