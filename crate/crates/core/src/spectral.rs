//! Eigen-analysis of referral kernels.
//!
//! The transition matrix `P = T^{-1} W` of a symmetric weighting shares its
//! eigenvalues with the symmetric normalization `L = T^{-1/2} W T^{-1/2}`,
//! so everything here runs through dense symmetric eigendecompositions.
//! Desk scale only: matrices are capped at a few thousand nodes and no
//! iterative solvers are used.
//!
//! Two second-eigenvalue conventions coexist and both are reported: the
//! second largest *signed* eigenvalue drives the spectral gap `1 - lambda_2`,
//! while the autocovariance decomposition orders eigenvalues by absolute
//! value.

use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::graph::{Graph, GraphError, NodeFeature, SbmSpec};
use crate::weights::{
    build_weights, population_block_weights, population_weights, WeightError, WeightScheme,
    WeightedGraph,
};

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("zero row sum at index {0}")]
    ZeroRowSum(usize),
    #[error("matrix is {rows}x{cols}, expected square of size {expected}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("weight matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("chain is periodic or reducible: |lambda_2| = {0}")]
    PeriodicChain(f64),
    #[error("population simple walk is disconnected (lambda_2 = 1)")]
    DisconnectedPopulation,
    #[error("zero theta-weighted row sum in block {0}")]
    ZeroBlockRowSum(usize),
    #[error("got {got} values where {expected} were expected")]
    DimensionMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Full spectrum of a transition-like operator, sorted by signed value.
#[derive(Debug, Clone)]
pub struct SpectralSummary {
    /// Eigenvalues in descending signed order.
    pub eigenvalues: Vec<f64>,
    /// Second largest signed eigenvalue.
    pub lambda2_signed: f64,
    /// Second largest eigenvalue by absolute value.
    pub lambda2_abs: f64,
    /// `1 - lambda2_signed`.
    pub gap: f64,
}

/// Autocovariance of a node feature along a stationary reversible chain,
/// decomposed over the kernel's eigenpairs: `Cov(t) = sum_j c_j lambda_j^t`
/// over the non-leading eigenpairs, with `c_j` the squared pi-weighted
/// projection of the feature onto the j-th eigenvector.
#[derive(Debug, Clone)]
pub struct CovarianceProfile {
    /// Lags `1..=max_lag`.
    pub lags: Vec<usize>,
    /// Covariance at each lag.
    pub values: Vec<f64>,
    /// Non-leading eigenvalues, ordered by descending absolute value.
    pub eigenvalues: Vec<f64>,
    /// Squared projections, aligned with `eigenvalues`.
    pub projections: Vec<f64>,
}

impl CovarianceProfile {
    /// Covariance at `lag`, recomputed from the stored eigenpairs.
    pub fn reconstruct(&self, lag: usize) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.projections)
            .map(|(&l, &c)| c * l.powi(lag as i32))
            .sum()
    }
}

/// How far a sampled graph's anti-cluster kernel sits from its population
/// counterpart, with the minima that control the concentration bound.
#[derive(Debug, Clone)]
pub struct ConcentrationReport {
    /// Minimum over (i, j) of the count of i's friends not befriended by j.
    pub f_min: f64,
    /// Minimum of the transposed count; equals `f_min` for symmetric models.
    pub g_min: f64,
    /// Minimum expected degree.
    pub d_min: f64,
    /// Operator-norm distance between the symmetric normalizations of the
    /// sampled and population anti-cluster weights.
    pub op_distance: f64,
    /// Largest gap between matched (descending) eigenvalues of the sampled
    /// and population transitions.
    pub eig_deviation: f64,
}

/// `L(u,v) = w(u,v) / sqrt(t(u) t(v))`.
pub fn symmetric_normalized(w: &DMatrix<f64>, t: &[f64]) -> Result<DMatrix<f64>, SpectralError> {
    let n = t.len();
    if w.nrows() != n || w.ncols() != n {
        return Err(SpectralError::ShapeMismatch {
            rows: w.nrows(),
            cols: w.ncols(),
            expected: n,
        });
    }
    if let Some(u) = t.iter().position(|&x| x <= 0.0) {
        return Err(SpectralError::ZeroRowSum(u));
    }
    let inv_sqrt: Vec<f64> = t.iter().map(|&x| 1.0 / x.sqrt()).collect();
    Ok(DMatrix::from_fn(n, n, |u, v| {
        w[(u, v)] * inv_sqrt[u] * inv_sqrt[v]
    }))
}

/// Full real spectrum of a dense symmetric matrix.
pub fn spectrum(m: &DMatrix<f64>) -> SpectralSummary {
    let mut eigenvalues: Vec<f64> = m
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eigenvalues.sort_unstable_by(|a, b| b.partial_cmp(a).expect("real eigenvalues"));
    let lambda2_signed = eigenvalues.get(1).copied().unwrap_or(f64::NAN);
    let mut by_abs = eigenvalues.clone();
    by_abs.sort_unstable_by(|a, b| b.abs().partial_cmp(&a.abs()).expect("real eigenvalues"));
    let lambda2_abs = by_abs.get(1).copied().unwrap_or(f64::NAN).abs();
    SpectralSummary {
        gap: 1.0 - lambda2_signed,
        lambda2_signed,
        lambda2_abs,
        eigenvalues,
    }
}

/// Second eigenvalue of a symmetric scheme's transition matrix, as the
/// `(signed, absolute)` pair of conventions.
pub fn lambda2(wg: &WeightedGraph) -> Result<(f64, f64), SpectralError> {
    if !wg.scheme().is_symmetric() {
        return Err(SpectralError::Weight(WeightError::NonReversibleScheme(
            wg.scheme(),
        )));
    }
    let (w, t) = wg.dense_weights()?;
    let summary = spectrum(&symmetric_normalized(&w, &t)?);
    Ok((summary.lambda2_signed, summary.lambda2_abs))
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<(), SpectralError> {
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for u in 0..m.nrows() {
        for v in (u + 1)..m.ncols() {
            worst = worst.max((m[(u, v)] - m[(v, u)]).abs());
            scale = scale.max(m[(u, v)].abs());
        }
    }
    if worst > 1e-9 * scale {
        return Err(SpectralError::NotSymmetric(worst));
    }
    Ok(())
}

/// The K nonzero eigenvalues of the population transition built from a
/// symmetric block weight matrix `m` and block sizes `theta`.
///
/// Expanding `m` over nodes gives an NxN weight matrix whose transition has
/// this spectrum plus N - K zeros; the reduction diagonalizes the similar
/// symmetric matrix `(Theta/R)^{1/2} m (Theta/R)^{1/2}` where
/// `R_k = (m Theta 1)_k` are the theta-weighted row sums.
pub fn population_transition_spectrum(
    m: &DMatrix<f64>,
    theta: &[f64],
) -> Result<Vec<f64>, SpectralError> {
    let k = theta.len();
    if m.nrows() != k || m.ncols() != k {
        return Err(SpectralError::ShapeMismatch {
            rows: m.nrows(),
            cols: m.ncols(),
            expected: k,
        });
    }
    check_symmetric(m)?;
    let mut scale = Vec::with_capacity(k);
    for i in 0..k {
        let row: f64 = (0..k).map(|j| m[(i, j)] * theta[j]).sum();
        if row <= 0.0 {
            return Err(SpectralError::ZeroBlockRowSum(i));
        }
        scale.push((theta[i] / row).sqrt());
    }
    let reduced = DMatrix::from_fn(k, k, |i, j| scale[i] * m[(i, j)] * scale[j]);
    let mut eigenvalues: Vec<f64> = reduced
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eigenvalues.sort_unstable_by(|a, b| b.partial_cmp(a).expect("real eigenvalues"));
    Ok(eigenvalues)
}

/// Signed second eigenvalue of the expanded population transition: the
/// reduction's second value, except that blocks holding more than one node
/// pad the spectrum with zeros.
fn population_lambda2(
    m: &DMatrix<f64>,
    theta: &[f64],
    n_total: usize,
) -> Result<f64, SpectralError> {
    let eigenvalues = population_transition_spectrum(m, theta)?;
    let mut second = eigenvalues.get(1).copied().unwrap_or(0.0);
    if n_total > theta.len() {
        second = second.max(0.0);
    }
    Ok(second)
}

/// `lambda_2` of the population simple random walk on an equal-block planted
/// model `B = p I + r J`: `1 / (K r / p + 1)`.
pub fn lambda2_rds_closed_form(k: usize, p: f64, r: f64) -> f64 {
    1.0 / (k as f64 * r / p + 1.0)
}

/// The limit of the anti-cluster `lambda_2` as the block count grows with
/// `R = K r / p` and the in-block excess `p` held fixed: `1 / (c R + 1)`
/// with `c = (R + 1) / (R + 1 - p)`.
pub fn lambda2_acrds_limit(big_r: f64, p: f64) -> f64 {
    let c = (big_r + 1.0) / (big_r + 1.0 - p);
    1.0 / (c * big_r + 1.0)
}

/// Second eigenvalues of the simple and anti-cluster population walks for two
/// equal blocks with in-block probability `1 - eps` and cross-block
/// probability `eps`, as the pair `(simple, anti-cluster)`.
///
/// The anti-cluster block weights are proportional to `2 (1-eps)^2` in-block
/// and `(1-eps)^2 + eps^2` across, so the two-block transition eigenvalue
/// `(in - out) / (in + out)` evaluates to
/// `((1-eps)^2 - eps^2) / (3 (1-eps)^2 + eps^2)`. As `eps` vanishes the pair
/// approaches (1, 1/3).
pub fn lambda2_two_block_pair(eps: f64) -> (f64, f64) {
    let rds = 1.0 - 2.0 * eps;
    let s = (1.0 - eps) * (1.0 - eps);
    let acrds = (s - eps * eps) / (3.0 * s + eps * eps);
    (rds, acrds)
}

/// The ratio of spectral gaps `(1 - lambda_2(ac)) / (1 - lambda_2(rds))` of
/// the two population walks on a blockmodel, in the signed convention.
pub fn spectral_gap_ratio(spec: &SbmSpec) -> Result<f64, SpectralError> {
    let theta: Vec<f64> = spec.block_sizes().iter().map(|&s| s as f64).collect();
    let n_total = spec.total_nodes();
    let rds = population_lambda2(spec.connectivity(), &theta, n_total)?;
    if rds >= 1.0 - 1e-12 {
        return Err(SpectralError::DisconnectedPopulation);
    }
    let blocks = population_block_weights(spec);
    let ac = population_lambda2(&blocks, &theta, n_total)?;
    Ok((1.0 - ac) / (1.0 - rds))
}

/// Autocovariance profile of `y` under the stationary chain of a symmetric
/// weight matrix given dense. `t` must hold the row sums of `w`.
pub fn covariance_profile_dense(
    w: &DMatrix<f64>,
    t: &[f64],
    y: &[f64],
    max_lag: usize,
) -> Result<CovarianceProfile, SpectralError> {
    let n = t.len();
    if y.len() != n {
        return Err(SpectralError::DimensionMismatch {
            got: y.len(),
            expected: n,
        });
    }
    check_symmetric(w)?;
    let normalized = symmetric_normalized(w, t)?;
    let total: f64 = t.iter().sum();
    let sqrt_pi: Vec<f64> = t.iter().map(|&x| (x / total).sqrt()).collect();
    let eigen = normalized.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| {
        eigen.eigenvalues[b]
            .abs()
            .partial_cmp(&eigen.eigenvalues[a].abs())
            .expect("real eigenvalues")
    });
    if n >= 2 {
        let second = eigen.eigenvalues[order[1]].abs();
        if second >= 1.0 - 1e-9 {
            return Err(SpectralError::PeriodicChain(second));
        }
    }
    // <y, f_j>_pi = sum_u y(u) x_j(u) sqrt(pi(u)) where x_j is the unit
    // eigenvector of the symmetric normalization; the leading eigenpair
    // carries the mean and is dropped.
    let mut eigenvalues = Vec::with_capacity(n.saturating_sub(1));
    let mut projections = Vec::with_capacity(n.saturating_sub(1));
    for &j in order.iter().skip(1) {
        let column = eigen.eigenvectors.column(j);
        let norm = column.norm();
        let inner: f64 = (0..n).map(|u| y[u] * column[u] * sqrt_pi[u]).sum::<f64>() / norm;
        eigenvalues.push(eigen.eigenvalues[j]);
        projections.push(inner * inner);
    }
    let lags: Vec<usize> = (1..=max_lag).collect();
    let values: Vec<f64> = lags
        .iter()
        .map(|&lag| {
            eigenvalues
                .iter()
                .zip(&projections)
                .map(|(&l, &c)| c * l.powi(lag as i32))
                .sum()
        })
        .collect();
    Ok(CovarianceProfile {
        lags,
        values,
        eigenvalues,
        projections,
    })
}

/// Autocovariance profile of a feature along a symmetric referral scheme.
pub fn covariance_profile(
    wg: &WeightedGraph,
    y: &NodeFeature,
    max_lag: usize,
) -> Result<CovarianceProfile, SpectralError> {
    if !wg.scheme().is_symmetric() {
        return Err(SpectralError::Weight(WeightError::NonReversibleScheme(
            wg.scheme(),
        )));
    }
    y.check_length(wg.node_count())?;
    let (w, t) = wg.dense_weights()?;
    covariance_profile_dense(&w, &t, y.values(), max_lag)
}

/// Largest singular value.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0f64, |acc, &s| acc.max(s))
}

/// Concentration diagnostics of a graph sampled from a blockmodel: the
/// bound-controlling minima alongside the realized operator-norm and
/// eigenvalue deviations between the sampled and population anti-cluster
/// kernels.
pub fn concentration_report(
    spec: &SbmSpec,
    g: &Graph,
) -> Result<ConcentrationReport, SpectralError> {
    let n = spec.total_nodes();
    if g.node_count() != n {
        return Err(SpectralError::DimensionMismatch {
            got: g.node_count(),
            expected: n,
        });
    }
    let a = spec.expected_adjacency()?;
    let degrees: Vec<f64> = (0..n).map(|u| a.row(u).sum()).collect();
    // F = A (J - A) and G = (J - A) A entrywise reduce to D_i - (A^2)_ij and
    // D_j - (A^2)_ij.
    let a_squared = &a * &a;
    let mut f_min = f64::INFINITY;
    let mut g_min = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            f_min = f_min.min(degrees[i] - a_squared[(i, j)]);
            g_min = g_min.min(degrees[j] - a_squared[(i, j)]);
        }
    }
    let d_min = degrees.iter().fold(f64::INFINITY, |acc, &d| acc.min(d));

    let (w_pop, t_pop) = population_weights(spec)?;
    let l_pop = symmetric_normalized(&w_pop, &t_pop)?;
    let wg = build_weights(Arc::new(g.clone()), WeightScheme::AntiClusterCombined)?;
    let (w_sample, t_sample) = wg.dense_weights()?;
    let l_sample = symmetric_normalized(&w_sample, &t_sample)?;

    let op_distance = operator_norm(&(&l_sample - &l_pop));
    let sample_spectrum = spectrum(&l_sample).eigenvalues;
    let pop_spectrum = spectrum(&l_pop).eigenvalues;
    let eig_deviation = sample_spectrum
        .iter()
        .zip(&pop_spectrum)
        .map(|(s, p)| (s - p).abs())
        .fold(0.0f64, f64::max);

    Ok(ConcentrationReport {
        f_min,
        g_min,
        d_min,
        op_distance,
        eig_deviation,
    })
}
