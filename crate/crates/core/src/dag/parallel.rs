use std::collections::BTreeSet;

use super::*;

/// Nodes grouped by longest-path distance from the sources.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelSchedule {
    pub levels: Vec<Vec<NodeId>>,
}

/// Topological order with ties broken by lowest id.
pub fn topo_order(graph: &DataflowGraph) -> Vec<NodeId> {
    let n = graph.nodes.len();
    let mut indegree = vec![0usize; n];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in &graph.edges {
        indegree[e.dst.0 as usize] += 1;
        succ[e.src.0 as usize].push(e.dst.0 as usize);
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(NodeId(v as u32));
        for &w in &succ[v] {
            indegree[w] -= 1;
            if indegree[w] == 0 {
                ready.insert(w);
            }
        }
    }
    assert_eq!(order.len(), n, "graph must be acyclic");
    order
}

/// `level(n) = 1 + max(level(pred))`, sources at level 0.
pub fn parallel_sets(graph: &DataflowGraph) -> ParallelSchedule {
    let mut level = vec![0usize; graph.nodes.len()];
    for v in topo_order(graph) {
        for e in graph.out_edges(v) {
            let d = e.dst.0 as usize;
            level[d] = level[d].max(level[v.0 as usize] + 1);
        }
    }
    let depth = level.iter().max().map_or(0, |m| m + 1);
    let mut levels = vec![Vec::new(); depth];
    for (i, l) in level.iter().enumerate() {
        levels[*l].push(NodeId(i as u32));
    }
    ParallelSchedule { levels }
}

/// The schedule restricted to invocation nodes, empty levels dropped.
pub fn invocation_levels(graph: &DataflowGraph) -> Vec<Vec<NodeId>> {
    parallel_sets(graph)
        .levels
        .into_iter()
        .map(|l| {
            l.into_iter()
                .filter(|n| graph.node(*n).is_invocation())
                .collect::<Vec<_>>()
        })
        .filter(|l| !l.is_empty())
        .collect()
}

/// Immediate precedence between invocations, looking through non-invocation
/// nodes (tuples, constants). Pairs are `port.Op` labels.
pub fn invocation_precedence(graph: &DataflowGraph) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    for u in graph.invocations() {
        let mut stack: Vec<NodeId> = graph.out_edges(u.id).map(|e| e.dst).collect();
        let mut seen = BTreeSet::new();
        while let Some(v) = stack.pop() {
            if !seen.insert(v) {
                continue;
            }
            let node = graph.node(v);
            if node.is_invocation() {
                out.insert((u.label(), node.label()));
            } else {
                stack.extend(graph.out_edges(v).map(|e| e.dst));
            }
        }
    }
    out
}
