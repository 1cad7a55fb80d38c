use std::collections::VecDeque;

use crate::synth::support_mdp::{NodeId, SupportMdp};
use crate::synth::winning::WinningRegion;

/// Longest shortest path between two supports of the winning region when
/// only shield-allowed actions are taken. This is the graph a shielded agent
/// actually moves on.
pub fn shielded_diameter(g: &SupportMdp, w: &WinningRegion) -> usize {
    let adj: Vec<Vec<NodeId>> = (0..g.len())
        .map(|v| match w.allowed(g.node(v)) {
            Some(allowed) => {
                let mut out: Vec<NodeId> =
                    g.edges(v).iter().filter(|e| allowed.contains(e.0)).flat_map(|e| e.1.iter().copied()).collect();
                out.sort_unstable();
                out.dedup();
                out
            }
            None => Vec::new(),
        })
        .collect();
    graph_diameter(&adj)
}

/// Longest finite shortest-path distance in a directed graph.
pub fn graph_diameter(adj: &[Vec<usize>]) -> usize {
    let n = adj.len();
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    let mut best = 0;
    for src in 0..n {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[src] = 0;
        queue.push_back(src);
        while let Some(v) = queue.pop_front() {
            for &t in &adj[v] {
                if dist[t] == usize::MAX {
                    dist[t] = dist[v] + 1;
                    best = best.max(dist[t]);
                    queue.push_back(t);
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{SpecKind, Specification};
    use crate::synth::{build_support_mdp, compute_winning, DEFAULT_MAX_NODES};

    #[test]
    fn path_and_cycle() {
        assert_eq!(graph_diameter(&[vec![1], vec![2], vec![]]), 2);
        assert_eq!(graph_diameter(&[vec![1], vec![2], vec![3], vec![0]]), 3);
        assert_eq!(graph_diameter(&[vec![], vec![]]), 0);
    }

    #[test]
    fn t1_shielded_graph() {
        // e.g. {0} -a-> {1} -a-> {3}; {2} is outside the region
        let m = fixtures::t1();
        let spec = Specification::from_labels(&m, SpecKind::ReachAvoid).unwrap();
        let g = build_support_mdp(&m, &spec, DEFAULT_MAX_NODES).unwrap();
        assert_eq!(shielded_diameter(&g, &compute_winning(&g)), 2);
    }
}
