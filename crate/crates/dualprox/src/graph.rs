//! Undirected graphs, Erdős–Rényi sampling conditioned on connectivity, and
//! the plain edge-list text format.
//!
//! Nodes are labeled `1..=n`. The consensus constraints of the primal problem
//! live on the edges, so everything downstream (dual variable layout, gossip
//! neighborhoods) iterates neighbors in ascending node order.

use std::collections::BTreeSet;
use std::collections::VecDeque;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("edge probability must lie in (0, 1], got {0}")]
    BadProbability(f64),
    #[error("node id {id} out of range 1..={n}")]
    NodeOutOfRange { id: usize, n: usize },
    #[error("edge ({0}, {1}) is invalid: self-loops and out-of-range ids are rejected")]
    BadEdge(usize, usize),
    #[error("no connected sample found in {budget} attempts (n={n}, p={p})")]
    ResampleBudgetExhausted { n: usize, p: f64, budget: usize },
    #[error("malformed edge list: {0}")]
    Parse(String),
}

/// An immutable undirected graph over nodes `1..=n`.
///
/// Edges are stored as unordered pairs `(i, j)` with `i < j`; per-node
/// neighbor lists are kept sorted so iteration order is deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from an explicit edge list. Pairs may come in any
    /// order; duplicates collapse.
    pub fn from_edges(n: usize, pairs: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut edges = BTreeSet::new();
        for &(a, b) in pairs {
            if a == b || a < 1 || b < 1 || a > n || b > n {
                return Err(GraphError::BadEdge(a, b));
            }
            edges.insert((a.min(b), a.max(b)));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in &edges {
            adjacency[i - 1].push(j);
            adjacency[j - 1].push(i);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self { n, edges, adjacency })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as sorted `(i, j)` pairs with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    /// Neighbors of node `i` in ascending order.
    pub fn neighbors(&self, i: usize) -> Result<&[usize], GraphError> {
        self.check_node(i)?;
        Ok(&self.adjacency[i - 1])
    }

    pub fn degree(&self, i: usize) -> Result<usize, GraphError> {
        Ok(self.neighbors(i)?.len())
    }

    fn check_node(&self, i: usize) -> Result<(), GraphError> {
        if i < 1 || i > self.n {
            return Err(GraphError::NodeOutOfRange { id: i, n: self.n });
        }
        Ok(())
    }

    /// True iff a single component covers all nodes (breadth-first search).
    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([1usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for &j in &self.adjacency[i - 1] {
                if !seen[j - 1] {
                    seen[j - 1] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count == self.n
    }

    /// Serializes to the plain edge-list format: first line `n`, then one
    /// `i j` pair per line in sorted order.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for (i, j) in &self.edges {
            out.push_str(&format!("{i} {j}\n"));
        }
        out
    }

    /// Parses the edge-list format produced by [`Graph::to_edge_list`].
    pub fn from_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let n: usize = lines
            .next()
            .ok_or_else(|| GraphError::Parse("empty input".into()))?
            .trim()
            .parse()
            .map_err(|e| GraphError::Parse(format!("bad node count: {e}")))?;
        let mut pairs = Vec::new();
        for line in lines {
            let mut it = line.split_whitespace();
            let (a, b) = (it.next(), it.next());
            match (a, b) {
                (Some(a), Some(b)) if it.next().is_none() => {
                    let a = a
                        .parse()
                        .map_err(|e| GraphError::Parse(format!("bad node id {a:?}: {e}")))?;
                    let b = b
                        .parse()
                        .map_err(|e| GraphError::Parse(format!("bad node id {b:?}: {e}")))?;
                    pairs.push((a, b));
                }
                _ => return Err(GraphError::Parse(format!("expected \"i j\", got {line:?}"))),
            }
        }
        Self::from_edges(n, &pairs)
    }
}

pub const DEFAULT_RESAMPLE_BUDGET: usize = 10_000;

/// Samples a connected Erdős–Rényi graph G(n, p).
///
/// Each unordered pair is included independently with probability `p`; the
/// whole graph is resampled until connected, which preserves the G(n, p)
/// distribution conditioned on connectivity. Deterministic given `seed`.
pub fn erdos_renyi_connected(n: usize, p: f64, seed: u64) -> Result<Graph, GraphError> {
    erdos_renyi_connected_with_budget(n, p, seed, DEFAULT_RESAMPLE_BUDGET)
}

/// Same as [`erdos_renyi_connected`] with an explicit resample budget.
pub fn erdos_renyi_connected_with_budget(
    n: usize,
    p: f64,
    seed: u64,
    budget: usize,
) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::TooFewNodes(n));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(GraphError::BadProbability(p));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..budget {
        let mut pairs = Vec::new();
        for i in 1..=n {
            for j in (i + 1)..=n {
                if rng.gen::<f64>() < p {
                    pairs.push((i, j));
                }
            }
        }
        let g = Graph::from_edges(n, &pairs)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(GraphError::ResampleBudgetExhausted { n, p, budget })
}
