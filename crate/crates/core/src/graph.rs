//! Directed communication topology and its structural checks.
//!
//! Agents are indexed 1..=n. An edge `(j, i)` means agent `i` receives the
//! state of agent `j`, i.e. `j` is an in-neighbor of `i`. Self-feedback is
//! not an edge; it lives in the gain set.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};

/// Directed information-flow graph over `n` agents with a designated leader.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommGraph {
    n: usize,
    leader: usize,
    /// Edges stored as `(from, to)`: `to` listens to `from`.
    edges: BTreeSet<(usize, usize)>,
}

impl CommGraph {
    /// Validates and builds a communication graph.
    ///
    /// Rejects agent counts below 2, out-of-range indices, duplicate edges
    /// and self-loops. Cycles and reachability are *not* checked here; they
    /// are separate queries so that deliberately cyclic graphs can still be
    /// represented and analyzed.
    pub fn new(n: usize, leader: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidAgentCount { n });
        }
        if leader == 0 || leader > n {
            return Err(Error::IndexOutOfRange { index: leader, n });
        }
        let mut set = BTreeSet::new();
        for &(from, to) in edges {
            for index in [from, to] {
                if index == 0 || index > n {
                    return Err(Error::IndexOutOfRange { index, n });
                }
            }
            if from == to {
                return Err(Error::SelfLoop { agent: from });
            }
            if !set.insert((from, to)) {
                return Err(Error::DuplicateEdge { from, to });
            }
        }
        Ok(CommGraph {
            n,
            leader,
            edges: set,
        })
    }

    pub fn agent_count(&self) -> usize {
        self.n
    }

    pub fn leader(&self) -> usize {
        self.leader
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in ascending `(from, to)` order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains(&(from, to))
    }

    /// Agents whose state is available to `agent`, in ascending order.
    pub fn in_neighbors(&self, agent: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter(|&&(_, to)| to == agent)
            .map(|&(from, _)| from)
            .collect()
    }

    /// Agents that listen to `agent`, in ascending order.
    pub fn out_neighbors(&self, agent: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter(|&&(from, _)| from == agent)
            .map(|&(_, to)| to)
            .collect();
        out.sort_unstable();
        out
    }

    /// All agents except the leader, ascending.
    pub fn followers(&self) -> Vec<usize> {
        (1..=self.n).filter(|&a| a != self.leader).collect()
    }

    /// True iff every agent is reachable from the leader following edge
    /// direction, i.e. the graph contains a directed spanning tree rooted
    /// at the leader.
    pub fn has_rooted_spanning_tree(&self) -> bool {
        self.reachable_from_leader().len() == self.n
    }

    fn reachable_from_leader(&self) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        seen.insert(self.leader);
        queue.push_back(self.leader);
        while let Some(v) = queue.pop_front() {
            for w in self.out_neighbors(v) {
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    /// Agents with no directed path from the leader, ascending.
    pub fn unreachable_agents(&self) -> Vec<usize> {
        let reachable = self.reachable_from_leader();
        (1..=self.n).filter(|a| !reachable.contains(a)).collect()
    }

    /// Longest shortest-path distance from the leader to any agent, or
    /// `None` when some agent is unreachable. This is the number of
    /// synchronous rounds information needs to flood the whole graph.
    pub fn leader_eccentricity(&self) -> Option<usize> {
        let mut dist = vec![usize::MAX; self.n + 1];
        dist[self.leader] = 0;
        let mut queue = VecDeque::from([self.leader]);
        while let Some(v) = queue.pop_front() {
            for w in self.out_neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist[1..].iter().copied().max().filter(|&d| d != usize::MAX)
    }

    /// True iff the graph has no directed cycle. Kahn-style indegree peeling.
    pub fn is_acyclic(&self) -> bool {
        let mut indegree = vec![0usize; self.n + 1];
        for &(_, to) in &self.edges {
            indegree[to] += 1;
        }
        let mut ready: VecDeque<usize> = (1..=self.n).filter(|&v| indegree[v] == 0).collect();
        let mut removed = 0;
        while let Some(v) = ready.pop_front() {
            removed += 1;
            for w in self.out_neighbors(v) {
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    ready.push_back(w);
                }
            }
        }
        removed == self.n
    }

    /// Finds one directed cycle, as the agent sequence around it, or `None`.
    /// Independent of [`CommGraph::is_acyclic`]: this is a colored DFS.
    pub fn find_cycle(&self) -> Option<Vec<usize>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Color {
            White,
            Gray,
            Black,
        }
        let mut color = vec![Color::White; self.n + 1];
        let mut stack_path: Vec<usize> = Vec::new();

        fn dfs(
            g: &CommGraph,
            v: usize,
            color: &mut [Color],
            path: &mut Vec<usize>,
        ) -> Option<Vec<usize>> {
            color[v] = Color::Gray;
            path.push(v);
            for w in g.out_neighbors(v) {
                match color[w] {
                    Color::Gray => {
                        let start = path.iter().position(|&p| p == w).unwrap();
                        return Some(path[start..].to_vec());
                    }
                    Color::White => {
                        if let Some(c) = dfs(g, w, color, path) {
                            return Some(c);
                        }
                    }
                    Color::Black => {}
                }
            }
            path.pop();
            color[v] = Color::Black;
            None
        }

        for start in 1..=self.n {
            if color[start] == Color::White {
                if let Some(c) = dfs(self, start, &mut color, &mut stack_path) {
                    return Some(c);
                }
            }
        }
        None
    }

    /// Linear order in which every edge `(j, i)` has `j` before `i`.
    ///
    /// The leader is scheduled as soon as it is ready (first, whenever it is
    /// a source); remaining ties break toward the lowest agent index, so the
    /// output is deterministic. Errors with the offending cycle if the graph
    /// is cyclic.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let mut indegree = vec![0usize; self.n + 1];
        for &(_, to) in &self.edges {
            indegree[to] += 1;
        }
        let mut ready: BTreeSet<usize> = (1..=self.n).filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(self.n);
        while !ready.is_empty() {
            let v = if ready.contains(&self.leader) {
                self.leader
            } else {
                *ready.iter().next().unwrap()
            };
            ready.remove(&v);
            order.push(v);
            for w in self.out_neighbors(v) {
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    ready.insert(w);
                }
            }
        }
        if order.len() != self.n {
            let cycle = self.find_cycle().unwrap_or_default();
            return Err(Error::CycleDetected(cycle));
        }
        Ok(order)
    }

    /// Structural summary against the synthesis hypotheses.
    pub fn structural_report(&self) -> StructuralReport {
        let followers = self.followers();
        let beta_unique = followers
            .iter()
            .all(|&f| self.in_neighbors(f).len() == 1);
        StructuralReport {
            n: self.n,
            leader: self.leader,
            edge_count: self.edges.len(),
            spanning_tree: self.has_rooted_spanning_tree(),
            acyclic: self.is_acyclic(),
            at_min_edges: self.edges.len() == self.n - 1,
            within_max: self.edges.len() <= self.n * (self.n - 1) / 2,
            beta_unique,
        }
    }
}

/// Edge count and hypothesis flags reported by [`CommGraph::structural_report`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuralReport {
    pub n: usize,
    pub leader: usize,
    pub edge_count: usize,
    /// Directed spanning tree rooted at the leader exists.
    pub spanning_tree: bool,
    /// No directed cycle.
    pub acyclic: bool,
    /// Exactly n-1 edges: the minimum that still admits a formation.
    pub at_min_edges: bool,
    /// At most n(n-1)/2 edges: the maximum compatible with an acyclic order.
    pub within_max: bool,
    /// Inter-agent gains will be unique (every follower has one in-neighbor).
    pub beta_unique: bool,
}

impl StructuralReport {
    /// True iff the synthesis hypotheses hold (rooted spanning tree, acyclic).
    pub fn synthesis_ok(&self) -> bool {
        self.spanning_tree && self.acyclic
    }
}
