//! Referral weight schemes over a graph: standard uniform referral and the
//! anti-cluster variants, their transition rows, stationary distributions,
//! and the block-level population weight matrices.
//!
//! With `A` the adjacency matrix and `Abar = J - A`, the anti-cluster weight
//! of an edge (u, v) counts non-triangle witnesses:
//!
//! * type A: `[(A Abar) . A](u,v) = deg(u) - codeg(u,v)` on edges,
//! * type B: `[(Abar A) . A](u,v) = deg(v) - codeg(u,v)` on edges,
//! * combined: their sum `deg(u) + deg(v) - 2 codeg(u,v)`, which is symmetric.
//!
//! The deg/codeg identities hold because the diagonal of `A` is zero; the
//! tests check them against the literal triple-product definition.

use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::graph::{Graph, GraphError, SbmSpec, DENSE_NODE_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightScheme {
    /// Simple random walk: every edge weighs 1.
    Uniform,
    /// "Refer contacts who don't know many of your contacts."
    AntiClusterA,
    /// "Refer contacts who have many contacts who don't know you."
    AntiClusterB,
    /// Symmetric sum of the two anti-cluster kernels.
    AntiClusterCombined,
    /// Fair coin per referral between the row-normalized A and B kernels.
    CoinFlipMixture,
}

impl WeightScheme {
    /// Whether the scheme's weight matrix is symmetric, hence reversible with
    /// a closed-form stationary distribution.
    pub fn is_symmetric(self) -> bool {
        matches!(
            self,
            WeightScheme::Uniform | WeightScheme::AntiClusterCombined
        )
    }

    pub fn label(self) -> &'static str {
        match self {
            WeightScheme::Uniform => "uniform",
            WeightScheme::AntiClusterA => "anti_cluster_a",
            WeightScheme::AntiClusterB => "anti_cluster_b",
            WeightScheme::AntiClusterCombined => "anti_cluster_combined",
            WeightScheme::CoinFlipMixture => "coin_flip_mixture",
        }
    }

    pub fn parse(text: &str) -> Option<WeightScheme> {
        match text.trim() {
            "uniform" => Some(WeightScheme::Uniform),
            "anti_cluster_a" => Some(WeightScheme::AntiClusterA),
            "anti_cluster_b" => Some(WeightScheme::AntiClusterB),
            "anti_cluster_combined" => Some(WeightScheme::AntiClusterCombined),
            "coin_flip_mixture" => Some(WeightScheme::CoinFlipMixture),
            _ => None,
        }
    }
}

impl std::fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Error)]
pub enum WeightError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("node {0} is isolated: empty referral row under the uniform scheme")]
    IsolatedNode(usize),
    #[error("node {0} has zero anti-cluster row sum")]
    AntiClusterDeadNode(usize),
    #[error("scheme {0} is not reversible; stationary distribution is not closed-form")]
    NonReversibleScheme(WeightScheme),
    #[error("weighted graph is disconnected")]
    DisconnectedGraph,
    #[error("coin-flip mixture has two kernels, not a single weight matrix")]
    MixtureHasNoSingleMatrix,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// One referral kernel: per-node sparse weight rows plus their sums.
#[derive(Debug, Clone)]
struct KernelTable {
    rows: Vec<Vec<(u32, u64)>>,
    t: Vec<u64>,
}

impl KernelTable {
    fn build<F>(graph: &Graph, weight: F) -> Self
    where
        F: Fn(usize, usize, usize, usize, usize) -> u64,
    {
        let n = graph.node_count();
        let degrees = graph.degrees();
        let mut rows = Vec::with_capacity(n);
        let mut t = Vec::with_capacity(n);
        for u in 0..n {
            let mut row = Vec::with_capacity(graph.degree(u));
            let mut sum = 0u64;
            for &v in graph.neighbors(u) {
                let v = v as usize;
                let codeg = graph.codegree(u, v).expect("neighbors are distinct");
                let w = weight(u, v, degrees[u], degrees[v], codeg);
                if w > 0 {
                    sum += w;
                    row.push((v as u32, w));
                }
            }
            rows.push(row);
            t.push(sum);
        }
        KernelTable { rows, t }
    }
}

/// A view of one node's referral options under a single kernel.
#[derive(Debug, Clone, Copy)]
pub struct KernelRow<'a> {
    pub entries: &'a [(u32, u64)],
    pub total: u64,
}

/// A node's referral row: either one weighted kernel or the coin-flip pair.
#[derive(Debug, Clone, Copy)]
pub enum ReferralRow<'a> {
    Single(KernelRow<'a>),
    Mixture(KernelRow<'a>, KernelRow<'a>),
}

/// A weight scheme materialized over a graph.
///
/// Weights on sampled graphs are integer counts, so equality against
/// brute-force constructions is exact. Immutable after build and safe to
/// share across threads.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    graph: Arc<Graph>,
    scheme: WeightScheme,
    primary: KernelTable,
    alternate: Option<KernelTable>,
    row_sums: Vec<u64>,
}

impl WeightedGraph {
    /// Materializes `scheme` over `graph`.
    ///
    /// Errors if some node has an empty referral row: `IsolatedNode` under
    /// the uniform scheme, `AntiClusterDeadNode` under the others. For the
    /// coin-flip mixture both kernels must be live at every node.
    pub fn build(graph: Arc<Graph>, scheme: WeightScheme) -> Result<Self, WeightError> {
        if graph.node_count() == 0 {
            return Err(WeightError::EmptyGraph);
        }
        let (primary, alternate) = match scheme {
            WeightScheme::Uniform => (KernelTable::build(&graph, |_, _, _, _, _| 1), None),
            WeightScheme::AntiClusterA => (
                KernelTable::build(&graph, |_, _, du, _, codeg| (du - codeg) as u64),
                None,
            ),
            WeightScheme::AntiClusterB => (
                KernelTable::build(&graph, |_, _, _, dv, codeg| (dv - codeg) as u64),
                None,
            ),
            WeightScheme::AntiClusterCombined => (
                KernelTable::build(&graph, |_, _, du, dv, codeg| (du + dv - 2 * codeg) as u64),
                None,
            ),
            WeightScheme::CoinFlipMixture => (
                KernelTable::build(&graph, |_, _, du, _, codeg| (du - codeg) as u64),
                Some(KernelTable::build(&graph, |_, _, _, dv, codeg| {
                    (dv - codeg) as u64
                })),
            ),
        };
        for u in 0..graph.node_count() {
            let dead = primary.t[u] == 0 || alternate.as_ref().is_some_and(|alt| alt.t[u] == 0);
            if dead {
                return Err(match scheme {
                    WeightScheme::Uniform => WeightError::IsolatedNode(u),
                    _ => WeightError::AntiClusterDeadNode(u),
                });
            }
        }
        let row_sums = match &alternate {
            // The combined anti-cluster weights are the sum of the two
            // kernels, so this is the row sum the mixture would report.
            Some(alt) => primary.t.iter().zip(&alt.t).map(|(a, b)| a + b).collect(),
            None => primary.t.clone(),
        };
        Ok(WeightedGraph {
            graph,
            scheme,
            primary,
            alternate,
            row_sums,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn graph_arc(&self) -> &Arc<Graph> {
        &self.graph
    }

    pub fn scheme(&self) -> WeightScheme {
        self.scheme
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// Scheme weight of the (u, v) edge; zero off edges. For the mixture this
    /// is the combined (summed) weight.
    pub fn weight(&self, u: usize, v: usize) -> u64 {
        let lookup = |table: &KernelTable| {
            table.rows[u]
                .binary_search_by_key(&(v as u32), |&(node, _)| node)
                .map(|idx| table.rows[u][idx].1)
                .unwrap_or(0)
        };
        match &self.alternate {
            Some(alt) => lookup(&self.primary) + lookup(alt),
            None => lookup(&self.primary),
        }
    }

    /// Row sum `t(u)`. For the mixture this is the combined kernels' sum.
    pub fn row_sum(&self, u: usize) -> u64 {
        self.row_sums[u]
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    /// The referral options of node `u`, as the sampler consumes them.
    pub fn referral_row(&self, u: usize) -> ReferralRow<'_> {
        fn single(table: &KernelTable, u: usize) -> KernelRow<'_> {
            KernelRow {
                entries: &table.rows[u],
                total: table.t[u],
            }
        }
        match &self.alternate {
            Some(alt) => ReferralRow::Mixture(single(&self.primary, u), single(alt, u)),
            None => ReferralRow::Single(single(&self.primary, u)),
        }
    }

    /// Transition probabilities out of `u`, as a dense row over all nodes.
    /// For the mixture, the average of the two row-normalized kernels.
    pub fn transition_row(&self, u: usize) -> Vec<f64> {
        let n = self.node_count();
        let mut row = vec![0.0; n];
        match &self.alternate {
            None => {
                let total = self.primary.t[u] as f64;
                for &(v, w) in &self.primary.rows[u] {
                    row[v as usize] = w as f64 / total;
                }
            }
            Some(alt) => {
                for (table, share) in [(&self.primary, 0.5), (alt, 0.5)] {
                    let total = table.t[u] as f64;
                    for &(v, w) in &table.rows[u] {
                        row[v as usize] += share * w as f64 / total;
                    }
                }
            }
        }
        row
    }

    /// Whether every node can reach every other along positive-weight edges.
    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n <= 1 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0u32];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(v, _) in &self.primary.rows[u as usize] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    }

    /// Stationary distribution `pi(u) = t(u) / sum t`, defined for symmetric
    /// schemes on connected graphs.
    pub fn stationary_distribution(&self) -> Result<Vec<f64>, WeightError> {
        if !self.scheme.is_symmetric() {
            return Err(WeightError::NonReversibleScheme(self.scheme));
        }
        if !self.is_connected() {
            return Err(WeightError::DisconnectedGraph);
        }
        let total: u64 = self.row_sums.iter().sum();
        Ok(self
            .row_sums
            .iter()
            .map(|&t| t as f64 / total as f64)
            .collect())
    }

    /// The scheme's weight matrix as a dense float matrix, with its row sums.
    /// The mixture has no single matrix and is refused.
    pub fn dense_weights(&self) -> Result<(DMatrix<f64>, Vec<f64>), WeightError> {
        if self.alternate.is_some() {
            return Err(WeightError::MixtureHasNoSingleMatrix);
        }
        let n = self.node_count();
        let mut w = DMatrix::zeros(n, n);
        for u in 0..n {
            for &(v, weight) in &self.primary.rows[u] {
                w[(u, v as usize)] = weight as f64;
            }
        }
        let t = self.primary.t.iter().map(|&t| t as f64).collect();
        Ok((w, t))
    }
}

/// Builds the referral weights for `scheme` over `graph`.
pub fn build_weights(
    graph: Arc<Graph>,
    scheme: WeightScheme,
) -> Result<WeightedGraph, WeightError> {
    WeightedGraph::build(graph, scheme)
}

/// The block-level combined anti-cluster weights for an arbitrary symmetric
/// block connectivity `b` and block sizes `theta`:
/// `(B Theta Bbar + Bbar Theta B) . B` with `Bbar = J - B`.
pub fn population_block_weights_from(b: &DMatrix<f64>, theta: &[f64]) -> DMatrix<f64> {
    let k = theta.len();
    DMatrix::from_fn(k, k, |i, j| {
        let witnesses: f64 = (0..k)
            .map(|m| theta[m] * (b[(i, m)] * (1.0 - b[(m, j)]) + (1.0 - b[(i, m)]) * b[(m, j)]))
            .sum();
        witnesses * b[(i, j)]
    })
}

/// The block-level combined anti-cluster weights of the population model,
/// a KxK matrix whose expansion over nodes gives the population weights.
pub fn population_block_weights(spec: &SbmSpec) -> DMatrix<f64> {
    let theta: Vec<f64> = spec.block_sizes().iter().map(|&s| s as f64).collect();
    population_block_weights_from(spec.connectivity(), &theta)
}

/// The population combined anti-cluster weight matrix expanded to node level,
/// with its row sums. Equals `(A Abar + Abar A) . A` evaluated on the expected
/// adjacency matrix.
pub fn population_weights(spec: &SbmSpec) -> Result<(DMatrix<f64>, Vec<f64>), WeightError> {
    let n = spec.total_nodes();
    if n > DENSE_NODE_CAP {
        return Err(WeightError::Graph(GraphError::TooLargeForDense {
            nodes: n,
            cap: DENSE_NODE_CAP,
        }));
    }
    let blocks = population_block_weights(spec);
    let z = spec.block_assignment();
    let w = DMatrix::from_fn(n, n, |u, v| blocks[(z[u], z[v])]);
    let theta: Vec<f64> = spec.block_sizes().iter().map(|&s| s as f64).collect();
    let t: Vec<f64> = (0..n)
        .map(|u| {
            (0..spec.block_count())
                .map(|l| blocks[(z[u], l)] * theta[l])
                .sum()
        })
        .collect();
    Ok((w, t))
}
