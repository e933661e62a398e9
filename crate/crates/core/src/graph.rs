//! Undirected communication topology over `n` agents.
//!
//! Nodes are the contiguous indices `0..n`. Edges are stored as ordered
//! pairs `(i, j)` with `i < j`, sorted, so two graphs with the same edge set
//! compare equal and serialize identically.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from an edge list. Pairs may be given in either
    /// orientation; self-loops and repeated pairs are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "a graph needs at least one node"));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            for idx in [a, b] {
                if idx >= n {
                    return Err(Error::NodeOutOfRange { index: idx, n });
                }
            }
            if a == b {
                return Err(Error::param("edges", format!("self-loop at node {a}")));
            }
            let pair = (a.min(b), a.max(b));
            if !set.insert(pair) {
                return Err(Error::param(
                    "edges",
                    format!("edge {{{}, {}}} listed twice", pair.0, pair.1),
                ));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Graph {
            n,
            edges,
            adjacency,
        })
    }

    pub fn path(n: usize) -> Result<Self> {
        Graph::new(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn star(n: usize) -> Result<Self> {
        Graph::new(n, (1..n).map(|i| (0, i)))
    }

    pub fn complete(n: usize) -> Result<Self> {
        Graph::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n && self.adjacency[i].binary_search(&j).is_ok()
    }

    /// Neighbor set of node `i`, sorted ascending, excluding `i` itself.
    pub fn neighbors(&self, i: usize) -> Result<&[usize]> {
        self.adjacency
            .get(i)
            .map(Vec::as_slice)
            .ok_or(Error::NodeOutOfRange { index: i, n: self.n })
    }

    /// True iff a breadth-first search from node 0 reaches every node.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        reached == self.n
    }

    /// Edge-list text: a header line `n m`, then one `i j` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.edges.len());
        for &(a, b) in &self.edges {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(no, l)| (no + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            reason: "missing `n m` header".into(),
        })?;
        let [n, m] = parse_pair(header, line)?;
        let mut edges = Vec::with_capacity(m);
        for (line, body) in lines {
            edges.push(parse_pair(body, line).map(|[a, b]| (a, b))?);
        }
        if edges.len() != m {
            return Err(Error::Parse {
                line: 1,
                reason: format!("header declares {m} edges, found {}", edges.len()),
            });
        }
        Graph::new(n, edges)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_edge_list())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Graph::from_edge_list(&std::fs::read_to_string(path)?)
    }
}

fn parse_pair(s: &str, line: usize) -> Result<[usize; 2]> {
    let fields: Vec<_> = s.split_whitespace().collect();
    let bad = |reason: String| Error::Parse { line, reason };
    if fields.len() != 2 {
        return Err(bad(format!("expected two integers, got `{s}`")));
    }
    let mut out = [0; 2];
    for (slot, f) in out.iter_mut().zip(&fields) {
        *slot = f.parse().map_err(|e| bad(format!("`{f}`: {e}")))?;
    }
    Ok(out)
}

/// Random connected graph with exactly `num_edges` edges.
///
/// A random spanning tree is grown first (random node order, each
/// new node attached to a uniformly chosen earlier node), then distinct
/// non-tree edges are sampled uniformly until the edge budget is met. The
/// result is a pure function of `(n, num_edges, seed)`.
pub fn random_connected_graph(n: usize, num_edges: usize, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::param("n", "must be positive"));
    }
    let max_edges = n * (n - 1) / 2;
    if num_edges + 1 < n || num_edges > max_edges {
        return Err(Error::param(
            "num_edges",
            format!("{num_edges} edges infeasible for a connected graph on {n} nodes (need {}..={max_edges})", n - 1),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let mut tree = BTreeSet::new();
    for pos in 1..n {
        let parent = order[rng.random_range(0..pos)];
        let child = order[pos];
        tree.insert((parent.min(child), parent.max(child)));
    }

    let candidates: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|e| !tree.contains(e))
        .collect();
    let extra = num_edges - (n - 1);
    let chosen = index::sample(&mut rng, candidates.len(), extra);
    let edges = tree
        .into_iter()
        .chain(chosen.into_iter().map(|k| candidates[k]));
    Graph::new(n, edges)
}
