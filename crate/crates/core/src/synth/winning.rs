use std::collections::BTreeMap;

use crate::estimator::BeliefSupport;
use crate::model::{ActionId, ActionSet, SpecKind};
use crate::synth::support_mdp::{NodeId, SupportMdp};

/// The greatest winning region with its maximal allowed-action sets.
#[derive(Clone, Debug, PartialEq)]
pub struct WinningRegion {
    kind: SpecKind,
    allowed: BTreeMap<BeliefSupport, ActionSet>,
    support_nodes: usize,
    rounds: usize,
}

impl WinningRegion {
    pub fn kind(&self) -> SpecKind {
        self.kind
    }

    pub fn allowed(&self, b: &BeliefSupport) -> Option<ActionSet> {
        self.allowed.get(b).copied()
    }

    pub fn contains(&self, b: &BeliefSupport) -> bool {
        self.allowed.contains_key(b)
    }

    /// Winning supports in sorted order.
    pub fn winning(&self) -> impl Iterator<Item = &BeliefSupport> {
        self.allowed.keys()
    }

    pub fn table(&self) -> &BTreeMap<BeliefSupport, ActionSet> {
        &self.allowed
    }

    pub fn into_table(self) -> BTreeMap<BeliefSupport, ActionSet> {
        self.allowed
    }

    pub fn len(&self) -> usize {
        self.allowed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.allowed.is_empty()
    }

    /// Size of the support MDP the region was computed on.
    pub fn support_nodes(&self) -> usize {
        self.support_nodes
    }

    /// Outer iterations of the fixpoint.
    pub fn rounds(&self) -> usize {
        self.rounds
    }
}

/// Dispatches on the specification kind the MDP was built for.
pub fn compute_winning(g: &SupportMdp) -> WinningRegion {
    match g.spec().kind() {
        SpecKind::ReachAvoid => compute_winning_reach_avoid(g),
        SpecKind::AvoidOnly => compute_winning_avoid(g),
    }
}

/// Nested fixpoint: prune actions leaving the region, drop nodes without
/// actions, drop nodes with a state that cannot reach a target through
/// allowed edges; repeat until stable.
pub fn compute_winning_reach_avoid(g: &SupportMdp) -> WinningRegion {
    Fixpoint::new(g, true).run(SpecKind::ReachAvoid)
}

/// Greatest safe fixpoint (pruning steps only). Targets are ignored, so dead
/// ends that avoid AVOID forever remain winning.
pub fn compute_winning_avoid(g: &SupportMdp) -> WinningRegion {
    Fixpoint::new(g, false).run(SpecKind::AvoidOnly)
}

struct Fixpoint<'g> {
    g: &'g SupportMdp,
    reach: bool,
    in_region: Vec<bool>,
    allowed: Vec<ActionSet>,
    preds: Vec<Vec<(NodeId, ActionId)>>,
    member_preds: Vec<Vec<(usize, ActionId)>>,
    removed: Vec<NodeId>,
}

impl<'g> Fixpoint<'g> {
    fn new(g: &'g SupportMdp, reach: bool) -> Self {
        let n = g.len();
        let is_target = |id: NodeId| reach && g.is_target(id);
        let mut preds = vec![Vec::new(); n];
        let mut allowed = vec![ActionSet::EMPTY; n];
        for id in 0..n {
            if g.is_bad(id) {
                continue;
            }
            if is_target(id) {
                allowed[id] = g.offered(id);
                continue;
            }
            for (a, succ) in g.edges(id) {
                allowed[id].insert(*a);
                for &t in succ {
                    preds[t].push((id, *a));
                }
            }
        }
        let in_region: Vec<bool> = (0..n).map(|id| !g.is_bad(id)).collect();
        let removed = (0..n).filter(|&id| !in_region[id]).collect();
        Fixpoint { g, reach, in_region, allowed, preds, member_preds: Vec::new(), removed }
    }

    fn is_target(&self, id: NodeId) -> bool {
        self.reach && self.g.is_target(id)
    }

    fn run(mut self, kind: SpecKind) -> WinningRegion {
        // nodes that start without any action (and are not absorbing targets)
        for id in 0..self.g.len() {
            if self.in_region[id] && !self.is_target(id) && self.allowed[id].is_empty() {
                self.in_region[id] = false;
                self.removed.push(id);
            }
        }
        let mut rounds = 0;
        loop {
            rounds += 1;
            self.prune();
            if !self.reach || !self.drop_unreaching() {
                break;
            }
        }
        let allowed = (0..self.g.len())
            .filter(|&id| self.in_region[id])
            .map(|id| (self.g.node(id).clone(), self.allowed[id]))
            .collect();
        WinningRegion { kind, allowed, support_nodes: self.g.len(), rounds }
    }

    /// Steps (1) and (2) as a worklist: every removed node strips the actions
    /// of its predecessors that could reach it.
    fn prune(&mut self) {
        while let Some(r) = self.removed.pop() {
            for i in 0..self.preds[r].len() {
                let (p, a) = self.preds[r][i];
                if !self.in_region[p] || self.is_target(p) || !self.allowed[p].contains(a) {
                    continue;
                }
                self.allowed[p].remove(a);
                if self.allowed[p].is_empty() {
                    self.in_region[p] = false;
                    self.removed.push(p);
                }
            }
        }
    }

    /// Step (3): backward search from target members over allowed edges of
    /// the state-level layer. A node is dropped when any of its states
    /// cannot reach a target; a support-level path may exist only from some
    /// of them. Returns whether any node was removed.
    fn drop_unreaching(&mut self) -> bool {
        let g = self.g;
        if self.member_preds.is_empty() {
            let mut preds = vec![Vec::new(); g.num_members()];
            for p in 0..g.num_members() {
                for (a, succ) in g.member_edges(p) {
                    for &q in succ {
                        preds[q].push((p, *a));
                    }
                }
            }
            self.member_preds = preds;
        }
        let mut reaching = vec![false; g.num_members()];
        let mut stack = Vec::new();
        for id in (0..g.len()).filter(|&id| self.in_region[id] && self.is_target(id)) {
            for p in g.members(id) {
                reaching[p] = true;
                stack.push(p);
            }
        }
        while let Some(q) = stack.pop() {
            for &(p, a) in &self.member_preds[q] {
                let id = g.owner(p);
                if !reaching[p] && self.in_region[id] && self.allowed[id].contains(a) {
                    reaching[p] = true;
                    stack.push(p);
                }
            }
        }
        let mut changed = false;
        for id in 0..g.len() {
            if self.in_region[id] && !g.members(id).all(|p| reaching[p]) {
                self.in_region[id] = false;
                self.removed.push(id);
                changed = true;
            }
        }
        changed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::format::parse_model;
    use crate::model::{Pomdp, Specification};
    use crate::synth::support_mdp::{build_support_mdp, DEFAULT_MAX_NODES};

    fn sup(ids: &[usize]) -> BeliefSupport {
        BeliefSupport::new(ids.iter().copied()).unwrap()
    }

    fn region(m: &Pomdp, kind: SpecKind) -> WinningRegion {
        let spec = Specification::from_labels(m, kind).unwrap();
        compute_winning(&build_support_mdp(m, &spec, DEFAULT_MAX_NODES).unwrap())
    }

    #[test]
    fn t1_reach_avoid() {
        let w = region(&fixtures::t1(), SpecKind::ReachAvoid);
        let winning: Vec<_> = w.winning().cloned().collect();
        assert_eq!(winning, vec![sup(&[0]), sup(&[0, 1]), sup(&[1]), sup(&[3])]);
        let (a, ab) = (ActionSet::singleton(0), ActionSet::full(2));
        assert_eq!(w.allowed(&sup(&[0])), Some(a));
        assert_eq!(w.allowed(&sup(&[1])), Some(ab));
        assert_eq!(w.allowed(&sup(&[0, 1])), Some(a));
        assert_eq!(w.allowed(&sup(&[3])), Some(ab));
    }

    #[test]
    fn t1_avoid_only() {
        let w = region(&fixtures::t1(), SpecKind::AvoidOnly);
        for ids in [&[0, 1][..], &[0], &[1], &[3]] {
            assert!(w.contains(&sup(ids)), "{ids:?}");
        }
        assert_eq!(w.allowed(&sup(&[1])), Some(ActionSet::full(2)));
        assert!(!w.contains(&sup(&[2])));
    }

    #[test]
    fn everything_in_reach() {
        let m = parse_model(
            "pomdp\nstates: 2\nactions: a b\nobservations: z\nstart: 0:0.5 1:0.5\n\
             T: 0 a 1 1\nT: 0 b 0 1\nT: 1 a 0 1\nT: 1 b 1 1\nO: 0 z 1\nO: 1 z 1\nlabel reach: 0 1\n",
        )
        .unwrap();
        let w = region(&m, SpecKind::ReachAvoid);
        assert_eq!(w.len(), 1);
        assert_eq!(w.allowed(&sup(&[0, 1])), Some(ActionSet::full(2)));
    }

    #[test]
    fn rerouted_goal_edge_leaves_nothing() {
        // P(3|1,a) moved to P(0|1,a): the goal support {3} is no longer
        // reachable, so every explored node fails the reachability step.
        let mut b = fixtures::t1().to_builder();
        b.remove_transition(1, 0, 3).transition(1, 0, 0, 1.0);
        let m = b.build().unwrap();
        let spec = Specification::from_labels(&m, SpecKind::ReachAvoid).unwrap();
        let g = build_support_mdp(&m, &spec, DEFAULT_MAX_NODES).unwrap();
        assert!(g.find(&sup(&[3])).is_none());
        assert!(compute_winning_reach_avoid(&g).is_empty());
        // the avoid-only region keeps the dead end
        assert!(!compute_winning(&build_support_mdp(&m, &Specification::avoid_only([2]).unwrap(), 100).unwrap()).is_empty());
    }

    #[test]
    fn unavoidable_bad_successor_empties_region() {
        let m = parse_model(
            "pomdp\nstates: 2\nactions: a\nobservations: z y\nstart: 0:1\n\
             T: 0 a 1 1\nT: 1 a 1 1\nO: 0 z 1\nO: 1 y 1\nlabel avoid: 1\n",
        )
        .unwrap();
        assert!(region(&m, SpecKind::AvoidOnly).is_empty());
    }

    #[test]
    fn dead_end_wins_only_for_avoid() {
        // state 0 can loop safely forever or step into the goal's twin that
        // never reaches the goal; the goal itself is unreachable
        let m = parse_model(
            "pomdp\nstates: 3\nactions: stay\nobservations: z g x\nstart: 0:1\n\
             T: 0 stay 0 1\nT: 1 stay 1 1\nT: 2 stay 2 1\nO: 0 z 1\nO: 1 g 1\nO: 2 x 1\n\
             label reach: 1\nlabel avoid: 2\n",
        )
        .unwrap();
        assert!(region(&m, SpecKind::ReachAvoid).is_empty());
        assert!(region(&m, SpecKind::AvoidOnly).contains(&sup(&[0])));
    }
}
