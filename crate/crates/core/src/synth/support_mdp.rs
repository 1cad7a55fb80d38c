use std::collections::{HashMap, VecDeque};

use crate::error::SynthError;
use crate::estimator::{initial_supports, offered_actions, successor_supports, BeliefSupport};
use crate::model::{ActionId, ActionSet, Pomdp, SpecKind, Specification};

pub type NodeId = usize;

/// Default cap on explored supports.
pub const DEFAULT_MAX_NODES: usize = 1 << 22;

/// The belief-support MDP reachable from every initial support.
///
/// Bad nodes (`B ∩ AVOID ≠ ∅`) and target nodes (`B ⊆ REACH`) are terminal
/// for synthesis and have no recorded edges.
///
/// Alongside the support edges it keeps the state-level layer: one member
/// per pair of a node and a state in its support, with the members each
/// action can lead to. Reachability of a target has to hold for every
/// member, not only for the support as a whole.
#[derive(Clone, Debug)]
pub struct SupportMdp {
    spec: Specification,
    num_actions: usize,
    nodes: Vec<BeliefSupport>,
    index: HashMap<BeliefSupport, NodeId>,
    initial: Vec<NodeId>,
    offered: Vec<ActionSet>,
    edges: Vec<Vec<(ActionId, Vec<NodeId>)>>,
    bad: Vec<bool>,
    target: Vec<bool>,
    offset: Vec<usize>,
    owner: Vec<NodeId>,
    member_edges: Vec<Vec<(ActionId, Vec<usize>)>>,
}

impl SupportMdp {
    pub fn spec(&self) -> &Specification {
        &self.spec
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &BeliefSupport {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[BeliefSupport] {
        &self.nodes
    }

    pub fn find(&self, b: &BeliefSupport) -> Option<NodeId> {
        self.index.get(b).copied()
    }

    pub fn initial(&self) -> &[NodeId] {
        &self.initial
    }

    pub fn offered(&self, id: NodeId) -> ActionSet {
        self.offered[id]
    }

    /// Successor nodes per offered action; empty for bad and target nodes.
    pub fn edges(&self, id: NodeId) -> &[(ActionId, Vec<NodeId>)] {
        &self.edges[id]
    }

    pub fn successors(&self, id: NodeId, a: ActionId) -> Option<&[NodeId]> {
        self.edges[id].iter().find(|e| e.0 == a).map(|e| e.1.as_slice())
    }

    pub fn is_bad(&self, id: NodeId) -> bool {
        self.bad[id]
    }

    pub fn is_target(&self, id: NodeId) -> bool {
        self.target[id]
    }

    pub fn num_edges(&self) -> usize {
        self.edges.iter().flatten().map(|e| e.1.len()).sum()
    }

    /// Total number of (node, state) members.
    pub fn num_members(&self) -> usize {
        self.owner.len()
    }

    /// Members of node `id`, in the order of its support's states.
    pub fn members(&self, id: NodeId) -> std::ops::Range<usize> {
        self.offset[id]..self.offset[id] + self.nodes[id].len()
    }

    pub fn owner(&self, member: usize) -> NodeId {
        self.owner[member]
    }

    /// Successor members per offered action; empty for bad and target nodes.
    pub fn member_edges(&self, member: usize) -> &[(ActionId, Vec<usize>)] {
        &self.member_edges[member]
    }
}

/// Forward closure of the support update from all initial supports.
pub fn build_support_mdp(m: &Pomdp, spec: &Specification, max_nodes: usize) -> Result<SupportMdp, SynthError> {
    spec.check_states(m.num_states())?;
    let mut g = SupportMdp {
        spec: spec.clone(),
        num_actions: m.num_actions(),
        nodes: Vec::new(),
        index: HashMap::new(),
        initial: Vec::new(),
        offered: Vec::new(),
        edges: Vec::new(),
        bad: Vec::new(),
        target: Vec::new(),
        offset: Vec::new(),
        owner: Vec::new(),
        member_edges: Vec::new(),
    };
    let mut queue = VecDeque::new();
    let add = |g: &mut SupportMdp, b: BeliefSupport, queue: &mut VecDeque<NodeId>| -> Result<NodeId, SynthError> {
        if let Some(&id) = g.index.get(&b) {
            return Ok(id);
        }
        if g.nodes.len() >= max_nodes {
            return Err(SynthError::SizeLimitExceeded { limit: max_nodes });
        }
        let id = g.nodes.len();
        g.bad.push(b.intersects(spec.avoid()));
        g.target.push(spec.kind() == SpecKind::ReachAvoid && b.all_in(spec.reach()));
        g.offered.push(offered_actions(m, &b));
        g.edges.push(Vec::new());
        g.offset.push(g.owner.len());
        g.owner.extend(std::iter::repeat(id).take(b.len()));
        g.member_edges.extend(std::iter::repeat_with(Vec::new).take(b.len()));
        g.index.insert(b.clone(), id);
        g.nodes.push(b);
        queue.push_back(id);
        Ok(id)
    };
    for (_, b) in initial_supports(m) {
        let id = add(&mut g, b, &mut queue)?;
        if !g.initial.contains(&id) {
            g.initial.push(id);
        }
    }
    while let Some(id) = queue.pop_front() {
        if g.bad[id] || g.target[id] {
            continue;
        }
        let b = g.nodes[id].clone();
        let mut out = Vec::new();
        let mut by_obs = vec![None; m.num_observations()];
        for a in g.offered[id].iter() {
            let mut succ = Vec::new();
            by_obs.iter_mut().for_each(|x| *x = None);
            for (z, next) in successor_supports(m, &b, a)? {
                let nid = add(&mut g, next, &mut queue)?;
                by_obs[z] = Some(nid);
                if !succ.contains(&nid) {
                    succ.push(nid);
                }
            }
            out.push((a, succ));
            for (i, &s) in b.states().iter().enumerate() {
                let mut targets = Vec::new();
                for &(t, _) in m.successors(s, a) {
                    for &(z, _) in m.observations(t) {
                        let nid = by_obs[z].expect("observation has a successor support");
                        let pos = g.nodes[nid].states().binary_search(&t).expect("state is in its successor support");
                        let member = g.offset[nid] + pos;
                        if !targets.contains(&member) {
                            targets.push(member);
                        }
                    }
                }
                let member = g.offset[id] + i;
                g.member_edges[member].push((a, targets));
            }
        }
        g.edges[id] = out;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::format::parse_model;

    fn sup(ids: &[usize]) -> BeliefSupport {
        BeliefSupport::new(ids.iter().copied()).unwrap()
    }

    #[test]
    fn t1_closure() {
        let m = fixtures::t1();
        let spec = Specification::from_labels(&m, SpecKind::ReachAvoid).unwrap();
        let g = build_support_mdp(&m, &spec, DEFAULT_MAX_NODES).unwrap();
        let mut nodes = g.nodes().to_vec();
        nodes.sort();
        assert_eq!(nodes, vec![sup(&[0]), sup(&[0, 1]), sup(&[1]), sup(&[2]), sup(&[3])]);
        let id = |ids: &[usize]| g.find(&sup(ids)).unwrap();
        assert!(g.is_bad(id(&[2])) && g.is_target(id(&[3])));
        assert!(g.edges(id(&[2])).is_empty() && g.edges(id(&[3])).is_empty());
        assert_eq!(g.successors(id(&[0, 1]), 0).unwrap(), &[id(&[1]), id(&[3])]);
        assert_eq!(g.successors(id(&[0, 1]), 1).unwrap(), &[id(&[0]), id(&[2])]);
        assert_eq!(g.successors(id(&[1]), 1).unwrap(), &[id(&[0])]);
        assert_eq!(g.initial(), &[id(&[0, 1])]);
    }

    #[test]
    fn single_target_state() {
        let m = parse_model(
            "pomdp\nstates: 1\nactions: a\nobservations: z\nstart: 0:1\nT: 0 a 0 1\nO: 0 z 1\nlabel reach: 0\n",
        )
        .unwrap();
        let spec = Specification::reach_avoid([0], []).unwrap();
        let g = build_support_mdp(&m, &spec, 10).unwrap();
        assert_eq!(g.len(), 1);
        assert!(g.is_target(0));
    }

    #[test]
    fn t2_branch_splits_by_observation() {
        let m = fixtures::t2();
        let spec = Specification::from_labels(&m, SpecKind::ReachAvoid).unwrap();
        let g = build_support_mdp(&m, &spec, DEFAULT_MAX_NODES).unwrap();
        let n0 = g.find(&sup(&[0])).unwrap();
        let succ: Vec<_> = g.successors(n0, 0).unwrap().iter().map(|&n| g.node(n).clone()).collect();
        assert_eq!(succ, vec![sup(&[1]), sup(&[2])]);
    }

    #[test]
    fn node_cap_is_an_error() {
        let m = fixtures::t1();
        let spec = Specification::from_labels(&m, SpecKind::ReachAvoid).unwrap();
        assert_eq!(build_support_mdp(&m, &spec, 3).unwrap_err(), SynthError::SizeLimitExceeded { limit: 3 });
    }
}
