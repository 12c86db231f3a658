use std::collections::{BTreeMap, BTreeSet};

use super::{FlowError, FlowGraph, FlowNode};

type Adjacency<'a> = BTreeMap<&'a FlowNode, Vec<&'a FlowNode>>;

fn adjacency(graph: &FlowGraph) -> Adjacency<'_> {
    let mut adj: Adjacency<'_> = graph.nodes().into_iter().map(|n| (n, Vec::new())).collect();
    for (h, s) in graph.edges() {
        adj.entry(h).or_default().push(s);
    }
    adj
}

/// Nodes reachable from `from`, itself included.
pub fn reachable(graph: &FlowGraph, from: &FlowNode) -> Result<BTreeSet<FlowNode>, FlowError> {
    let adj = adjacency(graph);
    if !adj.contains_key(from) {
        return Err(FlowError::NotFound(from.to_string()));
    }
    let mut seen: BTreeSet<&FlowNode> = BTreeSet::new();
    let mut stack = vec![from];
    while let Some(n) = stack.pop() {
        if seen.insert(n) {
            stack.extend(adj.get(n).into_iter().flatten().copied());
        }
    }
    Ok(seen.into_iter().cloned().collect())
}

/// Nodes lying on a cycle (non-trivial strongly connected component or self loop).
fn cyclic_nodes<'a>(adj: &Adjacency<'a>) -> BTreeSet<&'a FlowNode> {
    // Tarjan, iterative.
    let mut index: BTreeMap<&FlowNode, usize> = BTreeMap::new();
    let mut low: BTreeMap<&FlowNode, usize> = BTreeMap::new();
    let mut on_stack: BTreeSet<&FlowNode> = BTreeSet::new();
    let mut stack: Vec<&FlowNode> = Vec::new();
    let mut out = BTreeSet::new();
    let mut counter = 0;
    for &root in adj.keys() {
        if index.contains_key(root) {
            continue;
        }
        let mut work: Vec<(&FlowNode, usize)> = vec![(root, 0)];
        index.insert(root, counter);
        low.insert(root, counter);
        counter += 1;
        stack.push(root);
        on_stack.insert(root);
        while let Some(&mut (v, ref mut i)) = work.last_mut() {
            let succs = &adj[v];
            if *i < succs.len() {
                let w = succs[*i];
                *i += 1;
                if !index.contains_key(w) {
                    index.insert(w, counter);
                    low.insert(w, counter);
                    counter += 1;
                    stack.push(w);
                    on_stack.insert(w);
                    work.push((w, 0));
                } else if on_stack.contains(w) {
                    let lw = index[w].min(low[v]);
                    low.insert(v, lw);
                }
                continue;
            }
            work.pop();
            if let Some(&(parent, _)) = work.last() {
                let lp = low[parent].min(low[v]);
                low.insert(parent, lp);
            }
            if low[v] == index[v] {
                let mut component = Vec::new();
                while let Some(w) = stack.pop() {
                    on_stack.remove(w);
                    component.push(w);
                    if w == v {
                        break;
                    }
                }
                if component.len() > 1 || adj[v].contains(&v) {
                    out.extend(component);
                }
            }
        }
    }
    out
}

/// Per-node path facts under a node weighting: whether every path from the
/// node ends at a terminal without looping, and the heaviest such path.
#[derive(Debug, Clone)]
pub struct WeightedPaths {
    /// `None` when a cycle or a non-terminal dead end is reachable.
    costs: BTreeMap<FlowNode, Option<u64>>,
}

impl WeightedPaths {
    /// `weight(n)` is the cost of leaving `n` along any of its edges.
    pub fn new(graph: &FlowGraph, weight: impl Fn(&FlowNode) -> u64) -> WeightedPaths {
        let adj = adjacency(graph);
        let cyclic = cyclic_nodes(&adj);
        let mut memo: BTreeMap<&FlowNode, Option<u64>> = BTreeMap::new();
        fn visit<'a>(
            n: &'a FlowNode,
            adj: &Adjacency<'a>,
            cyclic: &BTreeSet<&'a FlowNode>,
            weight: &dyn Fn(&FlowNode) -> u64,
            memo: &mut BTreeMap<&'a FlowNode, Option<u64>>,
        ) -> Option<u64> {
            if let Some(v) = memo.get(n) {
                return *v;
            }
            let result = if cyclic.contains(n) {
                None
            } else {
                let succs = &adj[n];
                if succs.is_empty() {
                    n.is_terminal().then_some(0)
                } else {
                    let mut best = Some(0u64);
                    for s in succs {
                        best = match (best, visit(s, adj, cyclic, weight, memo)) {
                            (Some(b), Some(c)) => Some(b.max(c)),
                            _ => None,
                        };
                    }
                    best.map(|b| b.saturating_add(weight(n)))
                }
            };
            memo.insert(n, result);
            result
        }
        for n in adj.keys() {
            visit(n, &adj, &cyclic, &weight, &mut memo);
        }
        WeightedPaths { costs: memo.into_iter().map(|(k, v)| (k.clone(), v)).collect() }
    }

    /// Heaviest path cost to a terminal, or `None` if the node can loop,
    /// stall, or is not in the graph.
    pub fn cost(&self, node: &FlowNode) -> Option<u64> {
        self.costs.get(node).copied().flatten()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathReport {
    pub terminates: bool,
    /// Longest path in edges; back edges count as zero length.
    pub max_steps: usize,
    pub has_cycle: bool,
}

/// Path facts from `node` with unit step cost.
pub fn terminal_paths(graph: &FlowGraph, node: &FlowNode, budget: usize) -> PathReport {
    let adj = adjacency(graph);
    if !adj.contains_key(node) {
        return PathReport { terminates: node.is_terminal(), max_steps: 0, has_cycle: false };
    }
    let cyclic = cyclic_nodes(&adj);
    let reach = reachable(graph, node).unwrap_or_default();
    let has_cycle = reach.iter().any(|n| cyclic.contains(n));
    let dead_end = reach.iter().any(|n| adj.get(n).is_some_and(|s| s.is_empty()) && !n.is_terminal());

    // Longest path ignoring back edges.
    fn longest<'a>(
        n: &'a FlowNode,
        adj: &Adjacency<'a>,
        on_path: &mut BTreeSet<&'a FlowNode>,
        memo: &mut BTreeMap<&'a FlowNode, usize>,
    ) -> usize {
        if let Some(v) = memo.get(n) {
            return *v;
        }
        on_path.insert(n);
        let mut best = 0;
        for s in &adj[n] {
            if !on_path.contains(s) {
                best = best.max(1 + longest(s, adj, on_path, memo));
            }
        }
        on_path.remove(n);
        memo.insert(n, best);
        best
    }
    let max_steps = longest(node, &adj, &mut BTreeSet::new(), &mut BTreeMap::new());
    PathReport { terminates: !has_cycle && !dead_end && max_steps <= budget, max_steps, has_cycle }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::parse_flow_productions;

    fn g(text: &str) -> FlowGraph {
        parse_flow_productions(text).unwrap()
    }

    #[test]
    fn straight_line_terminates() {
        let graph = g("s -> {get}\nget -> {store}\nstore -> {return}\n");
        let r = terminal_paths(&graph, &FlowNode::tag("s"), 10);
        assert!(r.terminates);
        assert_eq!(r.max_steps, 3);
        assert!(!terminal_paths(&graph, &FlowNode::tag("s"), 2).terminates);
    }

    #[test]
    fn cycle_detected() {
        let graph = g("s -> {get}\nget -> {s}\n");
        let r = terminal_paths(&graph, &FlowNode::tag("get"), 10);
        assert!(r.has_cycle);
        assert!(!r.terminates);
    }

    #[test]
    fn dead_end_does_not_terminate() {
        let graph = g("s -> {get, return}\n");
        assert!(!terminal_paths(&graph, &FlowNode::tag("s"), 10).terminates);
        assert!(terminal_paths(&graph, &FlowNode::tag("return"), 0).terminates);
    }

    #[test]
    fn weighted_costs() {
        let graph = g("s -> {get}\nget -> {compute, return}\ncompute -> {return}\n");
        let w = WeightedPaths::new(&graph, |n| if *n == FlowNode::tag("compute") { 5 } else { 1 });
        assert_eq!(w.cost(&FlowNode::tag("s")), Some(7));
        assert_eq!(w.cost(&FlowNode::tag("return")), Some(0));
    }

    #[test]
    fn reachable_unknown_node() {
        let graph = g("s -> {return}\n");
        assert!(matches!(reachable(&graph, &FlowNode::tag("x")), Err(FlowError::NotFound(_))));
    }
}
