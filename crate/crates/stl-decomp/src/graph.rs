//! Undirected graphs over agents `1..=N`: hop-count shortest paths with a
//! deterministic lexicographic tie-break, exhaustive simple-cycle
//! enumeration, and the rewrite that replaces unsupported task edges with
//! communication-path edges.

use std::collections::BTreeSet;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("node {node} is out of range 1..={nodes}")]
    NodeOutOfRange { node: usize, nodes: usize },
    #[error("no path between {from} and {to}")]
    Disconnected { from: usize, to: usize },
    #[error("path endpoints must differ (got {node})")]
    SameEndpoints { node: usize },
    #[error("a path needs at least two nodes")]
    PathTooShort,
    #[error("consecutive path nodes must differ")]
    PathRepeatsNode,
    #[error("a cycle needs at least three distinct nodes and must close")]
    MalformedCycle,
    #[error("cannot remove missing edge ({u},{v})")]
    RemoveMissingEdge { u: usize, v: usize },
}

/// Simple undirected graph with optional self-loops, nodes `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    n: usize,
    adj: Vec<BTreeSet<usize>>,
    loops: BTreeSet<usize>,
}

impl UndirectedGraph {
    pub fn new(n: usize) -> Self {
        UndirectedGraph { n, adj: vec![BTreeSet::new(); n + 1], loops: BTreeSet::new() }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    fn check_node(&self, node: usize) -> Result<(), GraphError> {
        if node == 0 || node > self.n {
            return Err(GraphError::NodeOutOfRange { node, nodes: self.n });
        }
        Ok(())
    }

    /// Adds an undirected edge; `u == v` records a self-loop.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<(), GraphError> {
        self.check_node(u)?;
        self.check_node(v)?;
        if u == v {
            self.loops.insert(u);
        } else {
            self.adj[u].insert(v);
            self.adj[v].insert(u);
        }
        Ok(())
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        if u == v {
            return self.loops.contains(&u);
        }
        u >= 1 && u <= self.n && self.adj[u].contains(&v)
    }

    /// Neighbors in ascending order (self excluded).
    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[u].iter().copied()
    }

    /// All proper edges as canonical `(min, max)` pairs, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 1..=self.n {
            for &v in &self.adj[u] {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn loop_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.loops.iter().copied()
    }

    /// True when every node can reach every other node over proper edges.
    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut seen = vec![false; self.n + 1];
        let mut stack = vec![1usize];
        seen[1] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.n
    }

    /// Minimum-hop path from `from` to `to`. Among all shortest paths the
    /// lexicographically smallest node sequence is returned, so results are
    /// reproducible across runs.
    pub fn shortest_path(&self, from: usize, to: usize) -> Result<Path, GraphError> {
        self.check_node(from)?;
        self.check_node(to)?;
        if from == to {
            return Err(GraphError::SameEndpoints { node: from });
        }
        // BFS distances toward `to`, then a greedy descent picking the
        // smallest next node keeps the sequence lexicographically minimal.
        let mut dist = vec![usize::MAX; self.n + 1];
        dist[to] = 0;
        let mut queue = std::collections::VecDeque::from([to]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        if dist[from] == usize::MAX {
            return Err(GraphError::Disconnected { from, to });
        }
        let mut nodes = vec![from];
        let mut cur = from;
        while cur != to {
            let next = self
                .adj[cur]
                .iter()
                .copied()
                .find(|&v| dist[v] + 1 == dist[cur])
                .expect("BFS distance map admits a descent step");
            nodes.push(next);
            cur = next;
        }
        Path::new(nodes)
    }

    /// Every simple cycle with at most `max_len` distinct nodes, in
    /// canonical orientation, sorted lexicographically.
    ///
    /// A cycle is grown from its smallest node `s`; interior nodes are kept
    /// above `s` and the orientation with the smaller second node is the
    /// one emitted, so each cycle appears exactly once.
    pub fn enumerate_cycles(&self, max_len: usize) -> Vec<Cycle> {
        let mut out = Vec::new();
        if max_len < 3 {
            return out;
        }
        let mut stack: Vec<usize> = Vec::new();
        let mut on_stack = vec![false; self.n + 1];
        for s in 1..=self.n {
            stack.push(s);
            on_stack[s] = true;
            self.cycle_dfs(s, s, max_len, &mut stack, &mut on_stack, &mut out);
            on_stack[s] = false;
            stack.pop();
        }
        out
    }

    fn cycle_dfs(
        &self,
        start: usize,
        cur: usize,
        max_len: usize,
        stack: &mut Vec<usize>,
        on_stack: &mut Vec<bool>,
        out: &mut Vec<Cycle>,
    ) {
        for &next in &self.adj[cur] {
            if next == start && stack.len() >= 3 {
                // Close the cycle; emit only the orientation whose second
                // node is smaller than its second-to-last node.
                if stack[1] < stack[stack.len() - 1] {
                    let mut nodes = stack.clone();
                    nodes.push(start);
                    out.push(Cycle::new(nodes).expect("DFS builds well-formed cycles"));
                }
                continue;
            }
            if next <= start || on_stack[next] || stack.len() == max_len {
                continue;
            }
            stack.push(next);
            on_stack[next] = true;
            self.cycle_dfs(start, next, max_len, stack, on_stack, out);
            on_stack[next] = false;
            stack.pop();
        }
    }
}

/// Replaces the task edges in `drop` with the path edges in `add`,
/// preserving self-loops.
pub fn rewrite_task_graph(
    task_graph: &UndirectedGraph,
    drop: &[(usize, usize)],
    add: &[(usize, usize)],
) -> Result<UndirectedGraph, GraphError> {
    let mut g = task_graph.clone();
    for &(u, v) in drop {
        g.check_node(u)?;
        g.check_node(v)?;
        if !g.has_edge(u, v) || u == v {
            return Err(GraphError::RemoveMissingEdge { u, v });
        }
        g.adj[u].remove(&v);
        g.adj[v].remove(&u);
    }
    for &(u, v) in add {
        g.add_edge(u, v)?;
    }
    Ok(g)
}

/// Simple path as a node sequence; consecutive nodes are connected edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    nodes: Vec<usize>,
}

impl Path {
    pub fn new(nodes: Vec<usize>) -> Result<Self, GraphError> {
        if nodes.len() < 2 {
            return Err(GraphError::PathTooShort);
        }
        if nodes.windows(2).any(|w| w[0] == w[1]) {
            return Err(GraphError::PathRepeatsNode);
        }
        Ok(Path { nodes })
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn first(&self) -> usize {
        self.nodes[0]
    }

    pub fn last(&self) -> usize {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Directed edges `(nodes[i], nodes[i+1])` along the path. Summing the
    /// relative states over this sequence telescopes to the relative state
    /// of the endpoints.
    pub fn edge_sequence(&self) -> Vec<(usize, usize)> {
        self.nodes.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// Simple cycle stored as a closed node sequence `[a, ..., a]` with at
/// least three distinct nodes, canonically oriented: the smallest node
/// first and the smaller of its two neighbors second.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cycle {
    nodes: Vec<usize>,
}

impl Cycle {
    pub fn new(nodes: Vec<usize>) -> Result<Self, GraphError> {
        if nodes.len() < 4 || nodes.first() != nodes.last() {
            return Err(GraphError::MalformedCycle);
        }
        let interior = &nodes[..nodes.len() - 1];
        let mut seen = BTreeSet::new();
        if !interior.iter().all(|&v| seen.insert(v)) {
            return Err(GraphError::MalformedCycle);
        }
        Ok(Cycle { nodes })
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn distinct_len(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Directed edges around the cycle; the relative states along them sum
    /// to zero.
    pub fn edge_sequence(&self) -> Vec<(usize, usize)> {
        self.nodes.windows(2).map(|w| (w[0], w[1])).collect()
    }
}
