//! Undirected simple graphs, stochastic blockmodel generation, edge-list
//! ingestion, and the structural statistics used by the referral designs.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Upper bound on the node count for anything materialized as a dense matrix.
pub const DENSE_NODE_CAP: usize = 3000;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: expected two whitespace-separated node ids, got {content:?}")]
    MalformedLine { line: usize, content: String },
    #[error("line {line}: self-loop on node {id}")]
    SelfLoop { line: usize, id: u64 },
    #[error("edge ({u}, {v}) is a self-loop")]
    SelfLoopEdge { u: u32, v: u32 },
    #[error("node {node} out of range for a graph on {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("codegree of a node with itself is undefined (node {0})")]
    CodegreeSelfPair(usize),
    #[error("no connected triplet; clustering coefficient is undefined")]
    NoConnectedTriplet,
    #[error("dense matrix over {nodes} nodes exceeds the {cap}-node cap")]
    TooLargeForDense { nodes: usize, cap: usize },
    #[error("block count must be positive")]
    EmptyBlockModel,
    #[error("block {0} has zero size")]
    EmptyBlock(usize),
    #[error("connectivity entry ({i}, {j}) = {value} is outside [0, 1]")]
    ProbabilityOutOfRange { i: usize, j: usize, value: f64 },
    #[error("connectivity matrix is not symmetric at ({i}, {j})")]
    AsymmetricConnectivity { i: usize, j: usize },
    #[error("connectivity matrix is {rows}x{cols}, expected {k}x{k}")]
    ConnectivityShape { rows: usize, cols: usize, k: usize },
    #[error("planted model requires 0 < r < p + r < 1, got p = {p}, r = {r}")]
    InvalidPlanted { p: f64, r: f64 },
    #[error("feature value at node {node} is not finite")]
    NonFiniteFeature { node: usize },
    #[error("feature has {len} values but the graph has {n} nodes")]
    FeatureLengthMismatch { len: usize, n: usize },
}

/// An undirected simple graph with dense 0-based node ids.
///
/// Neighbor lists are kept sorted so that adjacency tests are a binary search
/// and common-neighbor counts are a linear merge.
#[derive(Debug, Clone)]
pub struct Graph {
    adj: Vec<Vec<u32>>,
    edges: usize,
}

impl Graph {
    /// Builds a graph on `n` nodes from an edge list. Duplicate edges are
    /// collapsed; self-loops and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self, GraphError> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u == v {
                return Err(GraphError::SelfLoopEdge { u, v });
            }
            for node in [u, v] {
                if node as usize >= n {
                    return Err(GraphError::NodeOutOfRange {
                        node: node as usize,
                        n,
                    });
                }
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        let mut edge_count = 0;
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            edge_count += list.len();
        }
        Ok(Graph {
            adj,
            edges: edge_count / 2,
        })
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    /// Sorted neighbor list of `u`.
    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.adj[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&(v as u32)).is_ok()
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    /// Number of common neighbors of two distinct nodes.
    pub fn codegree(&self, u: usize, v: usize) -> Result<usize, GraphError> {
        if u == v {
            return Err(GraphError::CodegreeSelfPair(u));
        }
        let n = self.node_count();
        if u >= n || v >= n {
            return Err(GraphError::NodeOutOfRange { node: u.max(v), n });
        }
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.adj[u], &self.adj[v]);
        let mut count = 0;
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(count)
    }

    /// Connected components as sorted node lists, in order of their smallest
    /// member.
    pub fn connected_components(&self) -> Vec<Vec<u32>> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut components = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut stack = vec![start as u32];
            let mut comp = Vec::new();
            seen[start] = true;
            while let Some(u) = stack.pop() {
                comp.push(u);
                for &v in &self.adj[u as usize] {
                    if !seen[v as usize] {
                        seen[v as usize] = true;
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
        components
    }

    pub fn is_connected(&self) -> bool {
        self.node_count() <= 1 || self.connected_components().len() == 1
    }

    /// Induced subgraph on the largest connected component, together with the
    /// map from new ids to the original ids. Ties between equally large
    /// components go to the one containing the smallest original id.
    pub fn largest_connected_component(&self) -> (Graph, Vec<u32>) {
        let components = self.connected_components();
        let best = components
            .iter()
            .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
            .cloned()
            .unwrap_or_default();
        let mut new_id = vec![u32::MAX; self.node_count()];
        for (i, &old) in best.iter().enumerate() {
            new_id[old as usize] = i as u32;
        }
        let mut edges = Vec::new();
        for &old in &best {
            for &v in &self.adj[old as usize] {
                if old < v {
                    edges.push((new_id[old as usize], new_id[v as usize]));
                }
            }
        }
        let graph = Graph::from_edges(best.len(), &edges).expect("component edges are valid");
        (graph, best)
    }

    /// Summing codegrees over edges counts each triangle three times.
    fn closed_triplet_count(&self) -> u64 {
        let mut closed: u64 = 0;
        for u in 0..self.node_count() {
            for &v in &self.adj[u] {
                if (u as u32) < v {
                    closed += self.codegree(u, v as usize).expect("u != v") as u64;
                }
            }
        }
        closed
    }

    /// Global clustering coefficient: three times the triangle count divided
    /// by the number of connected triplets.
    pub fn global_clustering_coefficient(&self) -> Result<f64, GraphError> {
        let triplets: u64 = self
            .adj
            .iter()
            .map(|list| {
                let d = list.len() as u64;
                d * d.saturating_sub(1) / 2
            })
            .sum();
        if triplets == 0 {
            return Err(GraphError::NoConnectedTriplet);
        }
        Ok(self.closed_triplet_count() as f64 / triplets as f64)
    }

    /// Number of triangles.
    pub fn triangle_count(&self) -> u64 {
        self.closed_triplet_count() / 3
    }
}

/// A graph read from an edge list, retaining the original node ids.
///
/// `external_ids[i]` is the id that internal node `i` carried in the input;
/// internal ids follow the ascending order of the external ones.
#[derive(Debug, Clone)]
pub struct EdgeListGraph {
    pub graph: Graph,
    pub external_ids: Vec<u64>,
}

/// Parses line-oriented edge-list text: two whitespace-separated non-negative
/// integer ids per line, `#` starting a comment line. Duplicate edges
/// collapse; self-loops are rejected with their line number.
pub fn from_edge_list(text: &str) -> Result<EdgeListGraph, GraphError> {
    let mut raw_edges: Vec<(u64, u64)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let (a, b) = match (tokens.next(), tokens.next(), tokens.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(GraphError::MalformedLine {
                    line,
                    content: trimmed.to_string(),
                })
            }
        };
        let parse = |tok: &str| {
            tok.parse::<u64>().map_err(|_| GraphError::MalformedLine {
                line,
                content: trimmed.to_string(),
            })
        };
        let (u, v) = (parse(a)?, parse(b)?);
        if u == v {
            return Err(GraphError::SelfLoop { line, id: u });
        }
        raw_edges.push((u, v));
    }
    let mut external_ids: Vec<u64> = raw_edges.iter().flat_map(|&(u, v)| [u, v]).collect();
    external_ids.sort_unstable();
    external_ids.dedup();
    let index_of = |id: u64| external_ids.binary_search(&id).expect("id was collected") as u32;
    let edges: Vec<(u32, u32)> = raw_edges
        .iter()
        .map(|&(u, v)| (index_of(u), index_of(v)))
        .collect();
    let graph = Graph::from_edges(external_ids.len(), &edges)?;
    Ok(EdgeListGraph {
        graph,
        external_ids,
    })
}

/// Stochastic blockmodel parameters: fixed block sizes and a symmetric
/// block-connectivity matrix with entries in [0, 1].
///
/// Block membership is fixed by the sizes (node `u` belongs to the block whose
/// size range covers `u`), so a spec pins down the population matrices exactly.
#[derive(Debug, Clone)]
pub struct SbmSpec {
    block_sizes: Vec<usize>,
    b: DMatrix<f64>,
}

impl SbmSpec {
    pub fn new(block_sizes: Vec<usize>, b: DMatrix<f64>) -> Result<Self, GraphError> {
        let k = block_sizes.len();
        if k == 0 {
            return Err(GraphError::EmptyBlockModel);
        }
        if let Some(idx) = block_sizes.iter().position(|&s| s == 0) {
            return Err(GraphError::EmptyBlock(idx));
        }
        if b.nrows() != k || b.ncols() != k {
            return Err(GraphError::ConnectivityShape {
                rows: b.nrows(),
                cols: b.ncols(),
                k,
            });
        }
        for i in 0..k {
            for j in 0..k {
                let value = b[(i, j)];
                if !(0.0..=1.0).contains(&value) {
                    return Err(GraphError::ProbabilityOutOfRange { i, j, value });
                }
                if (value - b[(j, i)]).abs() > 0.0 {
                    return Err(GraphError::AsymmetricConnectivity { i, j });
                }
            }
        }
        Ok(SbmSpec { block_sizes, b })
    }

    /// Equal-size blocks with connectivity `B = p I + r J`; requires the
    /// planted-model regime `0 < r < p + r < 1`.
    pub fn planted(k: usize, block_size: usize, p: f64, r: f64) -> Result<Self, GraphError> {
        if !(r > 0.0 && p + r > r && p + r < 1.0) {
            return Err(GraphError::InvalidPlanted { p, r });
        }
        let b = DMatrix::from_fn(k, k, |i, j| if i == j { p + r } else { r });
        SbmSpec::new(vec![block_size; k], b)
    }

    /// Blocks with a common in-block probability and a common out-of-block
    /// probability. Unlike [`SbmSpec::planted`] this allows any values in
    /// [0, 1], e.g. for boundary cells of a parameter grid.
    pub fn from_in_out(block_sizes: Vec<usize>, p_in: f64, p_out: f64) -> Result<Self, GraphError> {
        let k = block_sizes.len();
        let b = DMatrix::from_fn(k, k, |i, j| if i == j { p_in } else { p_out });
        SbmSpec::new(block_sizes, b)
    }

    pub fn block_count(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn total_nodes(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn connectivity(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// Block of node `u` under the fixed assignment.
    pub fn block_of(&self, u: usize) -> usize {
        let mut offset = 0;
        for (k, &size) in self.block_sizes.iter().enumerate() {
            offset += size;
            if u < offset {
                return k;
            }
        }
        panic!("node {u} out of range for {} nodes", self.total_nodes());
    }

    /// The fixed block id of every node, in node order.
    pub fn block_assignment(&self) -> Vec<usize> {
        let mut z = Vec::with_capacity(self.total_nodes());
        for (k, &size) in self.block_sizes.iter().enumerate() {
            z.extend(std::iter::repeat_n(k, size));
        }
        z
    }

    /// Draws a graph: each unordered pair carries an edge independently with
    /// the probability given by its endpoints' blocks. Deterministic in `seed`.
    pub fn sample(&self, seed: u64) -> (Graph, Vec<usize>) {
        let z = self.block_assignment();
        let n = z.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                let p = self.b[(z[u], z[v])];
                if rng.random::<f64>() < p {
                    edges.push((u as u32, v as u32));
                }
            }
        }
        let graph = Graph::from_edges(n, &edges).expect("generated edges are valid");
        (graph, z)
    }

    /// The expected adjacency matrix, block structure expanded to node level.
    /// The diagonal is kept (it equals the in-block probability), matching the
    /// population algebra; sampled graphs stay simple.
    pub fn expected_adjacency(&self) -> Result<DMatrix<f64>, GraphError> {
        let n = self.total_nodes();
        if n > DENSE_NODE_CAP {
            return Err(GraphError::TooLargeForDense {
                nodes: n,
                cap: DENSE_NODE_CAP,
            });
        }
        let z = self.block_assignment();
        Ok(DMatrix::from_fn(n, n, |u, v| self.b[(z[u], z[v])]))
    }
}

/// A real-valued node feature, one value per node.
#[derive(Debug, Clone)]
pub struct NodeFeature {
    values: Vec<f64>,
}

impl NodeFeature {
    pub fn new(values: Vec<f64>) -> Result<Self, GraphError> {
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(GraphError::NonFiniteFeature { node });
        }
        Ok(NodeFeature { values })
    }

    pub fn constant(n: usize, value: f64) -> Self {
        NodeFeature {
            values: vec![value; n],
        }
    }

    /// Binary indicator of membership in the first `cutoff` blocks.
    pub fn block_indicator(assignment: &[usize], cutoff: usize) -> Self {
        NodeFeature {
            values: assignment
                .iter()
                .map(|&z| if z < cutoff { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, u: usize) -> f64 {
        self.values[u]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Unweighted population mean.
    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn check_length(&self, n: usize) -> Result<(), GraphError> {
        if self.values.len() != n {
            return Err(GraphError::FeatureLengthMismatch {
                len: self.values.len(),
                n,
            });
        }
        Ok(())
    }
}
