//! Replication engine for the numerical studies, with CSV output.
//!
//! A scenario fixes a network source, a node feature, a sampling protocol,
//! and a grid of schemes and sample fractions; the engine runs every
//! combination over many replicates and tabulates the estimates. Blockmodel
//! scenarios draw a fresh graph per replicate; edge-list scenarios keep the
//! one network and vary only the referral randomness.
//!
//! Every replicate owns an RNG stream derived from `(base_seed, replicate,
//! scheme, fraction)`, so the table is identical no matter how many worker
//! threads rayon uses.

pub mod cli;
mod config;

use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::estimators::{ac_stationary_estimate, rds2_estimate, EstimatorError, WeightBasis};
use crate::graph::{Graph, GraphError, NodeFeature, SbmSpec};
use crate::sampler::{
    run_referral, DeadBranchPolicy, ReferralRun, Replacement, SamplerError, SamplingConfig,
    SeedStrategy,
};
use crate::spectral::{covariance_profile, population_transition_spectrum, SpectralError};
use crate::weights::{
    build_weights, population_block_weights_from, WeightError, WeightScheme, WeightedGraph,
};

pub use config::scenario_from_str;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("replicate {replicate}: {message}")]
    Replicate { replicate: u64, message: String },
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

/// Where the network comes from.
#[derive(Debug, Clone)]
pub enum NetworkSource {
    /// A fresh blockmodel draw per replicate.
    Sbm(SbmSpec),
    /// One fixed network from an edge-list file.
    EdgeList(PathBuf),
}

/// Where the node feature comes from.
#[derive(Debug, Clone)]
pub enum FeatureSource {
    /// Indicator of the first `blocks` blocks (blockmodel scenarios only).
    BlockIndicator { blocks: usize },
    /// One value per line, aligned to the sorted external node ids.
    Column(PathBuf),
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub network: NetworkSource,
    pub feature: FeatureSource,
    pub schemes: Vec<WeightScheme>,
    pub fractions: Vec<f64>,
    pub replications: usize,
    pub coupons: usize,
    pub replacement: Replacement,
    pub seed_strategy: SeedStrategy,
    pub dead_branch_policy: DeadBranchPolicy,
    pub estimators: Vec<WeightBasis>,
    pub base_seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.replications == 0 {
            return Err(ExperimentError::InvalidScenario(
                "replications must be at least 1".into(),
            ));
        }
        if self.fractions.is_empty() {
            return Err(ExperimentError::InvalidScenario(
                "no fractions given".into(),
            ));
        }
        for &f in &self.fractions {
            if !(f > 0.0 && f <= 1.0) {
                return Err(ExperimentError::InvalidScenario(format!(
                    "fraction {f} outside (0, 1]"
                )));
            }
        }
        if self.schemes.is_empty() {
            return Err(ExperimentError::InvalidScenario("no schemes given".into()));
        }
        if self.estimators.is_empty() {
            return Err(ExperimentError::InvalidScenario(
                "no estimators given".into(),
            ));
        }
        if self.estimators.contains(&WeightBasis::TrueStationary) {
            return Err(ExperimentError::InvalidScenario(
                "true_stationary needs explicit inclusion probabilities; \
                 use rds2 or stationary_ac"
                    .into(),
            ));
        }
        if matches!(self.network, NetworkSource::EdgeList(_))
            && matches!(self.feature, FeatureSource::BlockIndicator { .. })
        {
            return Err(ExperimentError::InvalidScenario(
                "block_indicator features need a blockmodel network".into(),
            ));
        }
        if matches!(self.network, NetworkSource::Sbm(_))
            && matches!(self.feature, FeatureSource::Column(_))
        {
            return Err(ExperimentError::InvalidScenario(
                "column features need an edge-list network".into(),
            ));
        }
        Ok(())
    }
}

/// One estimate from one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRow {
    pub replicate: u64,
    pub scheme: WeightScheme,
    pub fraction: f64,
    pub estimator: WeightBasis,
    pub estimate: f64,
    pub n_collected: usize,
    pub tree_died: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplicationTable {
    pub rows: Vec<ReplicationRow>,
}

/// The table plus the scenario-level truths needed to judge it.
#[derive(Debug, Clone)]
pub struct ReplicationOutcome {
    pub table: ReplicationTable,
    /// True population mean of the feature.
    pub mu_y: f64,
    pub n_nodes: usize,
}

/// Splitmix-style derivation of per-run seeds from the base seed and the
/// run's coordinates; collision-free in practice and independent of worker
/// scheduling.
fn derive_seed(base: u64, words: &[u64]) -> u64 {
    let mut state = base ^ 0x9e37_79b9_7f4a_7c15;
    for &w in words {
        state ^= w.wrapping_mul(0xbf58_476d_1ce4_e5b9).rotate_left(31);
        state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        state = z ^ (z >> 31);
    }
    state
}

fn estimate_with(
    kind: WeightBasis,
    records: &[crate::sampler::SampleRecord],
) -> Result<f64, EstimatorError> {
    match kind {
        WeightBasis::DegreeRds2 => Ok(rds2_estimate(records)?.value),
        WeightBasis::StationaryAc => Ok(ac_stationary_estimate(records)?.value),
        WeightBasis::TrueStationary => unreachable!("rejected by ScenarioConfig::validate"),
    }
}

fn replicate_rows(
    cfg: &ScenarioConfig,
    replicate: u64,
    weights: &[Arc<WeightedGraph>],
    y: &NodeFeature,
    n: usize,
) -> Result<Vec<ReplicationRow>, ExperimentError> {
    let mut rows = Vec::new();
    let attach = |e: &dyn std::fmt::Display| ExperimentError::Replicate {
        replicate,
        message: e.to_string(),
    };
    for (scheme_idx, wg) in weights.iter().enumerate() {
        for (fraction_idx, &fraction) in cfg.fractions.iter().enumerate() {
            let target = ((fraction * n as f64).ceil() as usize).max(1);
            let sampling = SamplingConfig {
                scheme: wg.scheme(),
                coupons: cfg.coupons,
                replacement: cfg.replacement,
                target,
                seed_strategy: cfg.seed_strategy,
                dead_branch_policy: cfg.dead_branch_policy,
            };
            let seed = derive_seed(
                cfg.base_seed,
                &[replicate, 1, scheme_idx as u64, fraction_idx as u64],
            );
            let run: ReferralRun = match run_referral(wg, &sampling, y, seed) {
                Ok(run) => run,
                Err(SamplerError::TreeDied(run)) => *run,
                Err(other) => return Err(attach(&other)),
            };
            for &estimator in &cfg.estimators {
                let estimate = estimate_with(estimator, &run.records).map_err(|e| attach(&e))?;
                rows.push(ReplicationRow {
                    replicate,
                    scheme: wg.scheme(),
                    fraction,
                    estimator,
                    estimate,
                    n_collected: run.records.len(),
                    tree_died: run.died,
                });
            }
        }
    }
    Ok(rows)
}

/// Runs every (replicate, scheme, fraction) cell of the scenario.
///
/// Deterministic in `base_seed` regardless of the rayon thread count: rows
/// come back in (replicate, scheme, fraction, estimator) order.
pub fn run_replications(cfg: &ScenarioConfig) -> Result<ReplicationOutcome, ExperimentError> {
    cfg.validate()?;
    let results: Result<Vec<(Vec<ReplicationRow>, f64, usize)>, ExperimentError> =
        match &cfg.network {
            NetworkSource::EdgeList(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
                    path: path.clone(),
                    source,
                })?;
                let parsed = crate::graph::from_edge_list(&text)?;
                let graph = Arc::new(parsed.graph);
                let n = graph.node_count();
                let y = load_feature(cfg, None, n)?;
                let weights: Vec<Arc<WeightedGraph>> = cfg
                    .schemes
                    .iter()
                    .map(|&scheme| build_weights(graph.clone(), scheme).map(Arc::new))
                    .collect::<Result<_, _>>()?;
                let mu_y = y.mean();
                (0..cfg.replications as u64)
                    .into_par_iter()
                    .map(|replicate| {
                        replicate_rows(cfg, replicate, &weights, &y, n).map(|rows| (rows, mu_y, n))
                    })
                    .collect()
            }
            NetworkSource::Sbm(spec) => (0..cfg.replications as u64)
                .into_par_iter()
                .map(|replicate| {
                    let graph_seed = derive_seed(cfg.base_seed, &[replicate, 0]);
                    let (graph, assignment) = spec.sample(graph_seed);
                    let graph = Arc::new(graph);
                    let n = graph.node_count();
                    let y = load_feature(cfg, Some(&assignment), n)?;
                    let weights: Vec<Arc<WeightedGraph>> = cfg
                        .schemes
                        .iter()
                        .map(|&scheme| {
                            build_weights(graph.clone(), scheme)
                                .map(Arc::new)
                                .map_err(|e| ExperimentError::Replicate {
                                    replicate,
                                    message: e.to_string(),
                                })
                        })
                        .collect::<Result<_, _>>()?;
                    let mu_y = y.mean();
                    replicate_rows(cfg, replicate, &weights, &y, n).map(|rows| (rows, mu_y, n))
                })
                .collect(),
        };
    let per_replicate = results?;
    let mu_y = per_replicate.first().map(|(_, mu, _)| *mu).unwrap_or(0.0);
    let n_nodes = per_replicate.first().map(|(_, _, n)| *n).unwrap_or(0);
    let rows: Vec<ReplicationRow> = per_replicate
        .into_iter()
        .flat_map(|(rows, _, _)| rows)
        .collect();
    Ok(ReplicationOutcome {
        table: ReplicationTable { rows },
        mu_y,
        n_nodes,
    })
}

fn load_feature(
    cfg: &ScenarioConfig,
    assignment: Option<&[usize]>,
    n: usize,
) -> Result<NodeFeature, ExperimentError> {
    match &cfg.feature {
        FeatureSource::BlockIndicator { blocks } => {
            let assignment = assignment.ok_or_else(|| {
                ExperimentError::InvalidScenario(
                    "block_indicator features need a blockmodel network".into(),
                )
            })?;
            Ok(NodeFeature::block_indicator(assignment, *blocks))
        }
        FeatureSource::Column(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
                path: path.clone(),
                source,
            })?;
            let y = parse_feature_column(&text)?;
            y.check_length(n)?;
            Ok(y)
        }
    }
}

/// One feature value per non-comment line.
pub fn parse_feature_column(text: &str) -> Result<NodeFeature, ExperimentError> {
    let mut values = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let value: f64 = trimmed.parse().map_err(|_| ExperimentError::Csv {
            line: idx + 1,
            message: format!("expected a number, got {trimmed:?}"),
        })?;
        values.push(value);
    }
    Ok(NodeFeature::new(values)?)
}

/// Linear interpolation between order statistics.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Distribution summary of the estimates in one (scheme, fraction,
/// estimator) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scheme: WeightScheme,
    pub fraction: f64,
    pub estimator: WeightBasis,
    pub runs: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub bias: f64,
}

/// Summarizes the table per (scheme, fraction, estimator) cell. Rows from
/// died trees are excluded only when `complete_only` is set.
pub fn summarize(table: &ReplicationTable, mu_y: f64, complete_only: bool) -> Vec<SummaryRow> {
    let mut order: Vec<(WeightScheme, f64, WeightBasis)> = Vec::new();
    for row in &table.rows {
        let key = (row.scheme, row.fraction, row.estimator);
        if !order.contains(&key) {
            order.push(key);
        }
    }
    order
        .into_iter()
        .map(|(scheme, fraction, estimator)| {
            let mut estimates: Vec<f64> = table
                .rows
                .iter()
                .filter(|r| {
                    r.scheme == scheme
                        && r.fraction == fraction
                        && r.estimator == estimator
                        && !(complete_only && r.tree_died)
                })
                .map(|r| r.estimate)
                .collect();
            estimates.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite estimates"));
            let runs = estimates.len();
            let mean = if runs == 0 {
                f64::NAN
            } else {
                estimates.iter().sum::<f64>() / runs as f64
            };
            let q1 = quantile(&estimates, 0.25);
            let q3 = quantile(&estimates, 0.75);
            SummaryRow {
                scheme,
                fraction,
                estimator,
                runs,
                mean,
                median: quantile(&estimates, 0.5),
                q1,
                q3,
                iqr: q3 - q1,
                bias: mean - mu_y,
            }
        })
        .collect()
}

/// Which two-block family a grid cell comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridMode {
    /// In-block probability `1 - eps`, cross probability `eps`.
    ComplementEps,
    /// Fixed in-block probability (default 0.8), cross `eps`.
    FixedDiag(f64),
}

impl GridMode {
    pub fn label(self) -> &'static str {
        match self {
            GridMode::ComplementEps => "complement_eps",
            GridMode::FixedDiag(_) => "fixed_diag",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub mode: GridMode,
    pub ratio: f64,
    pub eps: f64,
    /// The in-block probability the cell used.
    pub diag: f64,
    pub lambda2_rds: f64,
    pub lambda2_ac: f64,
    pub gap_ratio: f64,
}

/// Spectral-gap ratios over a grid of block-size ratios and `eps` values for
/// a two-block population model.
pub fn unbalance_grid(
    ratios: &[f64],
    eps_values: &[f64],
    mode: GridMode,
) -> Result<Vec<GridRow>, ExperimentError> {
    let mut rows = Vec::with_capacity(ratios.len() * eps_values.len());
    for &ratio in ratios {
        if !(ratio >= 1.0 && ratio.is_finite()) {
            return Err(ExperimentError::InvalidScenario(format!(
                "block-size ratio {ratio} must be at least 1"
            )));
        }
        for &eps in eps_values {
            let diag = match mode {
                GridMode::ComplementEps => 1.0 - eps,
                GridMode::FixedDiag(d) => d,
            };
            if !(0.0..=1.0).contains(&eps) || !(0.0..=1.0).contains(&diag) {
                return Err(ExperimentError::InvalidScenario(format!(
                    "eps {eps} leaves the probability range under {}",
                    mode.label()
                )));
            }
            let b = nalgebra::DMatrix::from_row_slice(2, 2, &[diag, eps, eps, diag]);
            let theta = [ratio, 1.0];
            let lambda2_rds = grid_lambda2(&b, &theta)?;
            if lambda2_rds >= 1.0 - 1e-12 {
                return Err(ExperimentError::Spectral(
                    SpectralError::DisconnectedPopulation,
                ));
            }
            let blocks = population_block_weights_from(&b, &theta);
            let lambda2_ac = grid_lambda2(&blocks, &theta)?;
            rows.push(GridRow {
                mode,
                ratio,
                eps,
                diag,
                lambda2_rds,
                lambda2_ac,
                gap_ratio: (1.0 - lambda2_ac) / (1.0 - lambda2_rds),
            });
        }
    }
    Ok(rows)
}

/// Signed second eigenvalue of the expanded transition for a conceptual
/// population much larger than the block count (so the spectrum carries
/// zeros beyond the reduction's values).
fn grid_lambda2(m: &nalgebra::DMatrix<f64>, theta: &[f64]) -> Result<f64, ExperimentError> {
    let eigenvalues = population_transition_spectrum(m, theta)?;
    Ok(eigenvalues.get(1).copied().unwrap_or(0.0).max(0.0))
}

/// Structural summary of one network: counts, clustering, and the lag-1
/// autocovariance of the feature under the uniform and anti-cluster walks.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkReport {
    pub nodes: usize,
    pub edges: usize,
    pub clustering: Option<f64>,
    pub cov_rds_lag1: Option<f64>,
    pub cov_ac_lag1: Option<f64>,
    /// Names of the cells that could not be computed, with the reason.
    pub flags: Vec<String>,
}

pub fn network_report(g: &Graph, y: &NodeFeature) -> NetworkReport {
    let mut flags = Vec::new();
    let clustering = match g.global_clustering_coefficient() {
        Ok(cc) => Some(cc),
        Err(e) => {
            flags.push(format!("clustering: {e}"));
            None
        }
    };
    let graph = Arc::new(g.clone());
    let mut lag1 = |scheme: WeightScheme, name: &str| match build_weights(graph.clone(), scheme)
        .map_err(SpectralError::from)
        .and_then(|wg| covariance_profile(&wg, y, 1))
    {
        Ok(profile) => Some(profile.values[0]),
        Err(e) => {
            flags.push(format!("{name}: {e}"));
            None
        }
    };
    let cov_rds_lag1 = lag1(WeightScheme::Uniform, "cov_rds_lag1");
    let cov_ac_lag1 = lag1(WeightScheme::AntiClusterCombined, "cov_ac_lag1");
    NetworkReport {
        nodes: g.node_count(),
        edges: g.edge_count(),
        clustering,
        cov_rds_lag1,
        cov_ac_lag1,
        flags,
    }
}

/// One row of a concentration sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationRow {
    pub n: usize,
    pub seed_index: u64,
    pub f_min: f64,
    pub g_min: f64,
    pub d_min: f64,
    pub op_distance: f64,
    pub eig_deviation: f64,
}

/// Concentration diagnostics across a size sweep of equal-block models.
pub fn concentration_sweep(
    blocks: usize,
    n_list: &[usize],
    p_in: f64,
    p_out: f64,
    seeds: u64,
    base_seed: u64,
) -> Result<Vec<ConcentrationRow>, ExperimentError> {
    let mut rows = Vec::new();
    for &n in n_list {
        if blocks == 0 || n % blocks != 0 {
            return Err(ExperimentError::InvalidScenario(format!(
                "{n} nodes do not split into {blocks} equal blocks"
            )));
        }
        let spec = SbmSpec::from_in_out(vec![n / blocks; blocks], p_in, p_out)?;
        let reports: Result<Vec<ConcentrationRow>, ExperimentError> = (0..seeds)
            .into_par_iter()
            .map(|seed_index| {
                let (g, _) = spec.sample(derive_seed(base_seed, &[n as u64, seed_index]));
                let report = crate::spectral::concentration_report(&spec, &g)?;
                Ok(ConcentrationRow {
                    n,
                    seed_index,
                    f_min: report.f_min,
                    g_min: report.g_min,
                    d_min: report.d_min,
                    op_distance: report.op_distance,
                    eig_deviation: report.eig_deviation,
                })
            })
            .collect();
        rows.extend(reports?);
    }
    Ok(rows)
}

// --- CSV encoding ------------------------------------------------------
//
// Headered, comma-separated, `.` decimal. Floats print through Rust's
// shortest round-trip formatting, so parsing a written file reproduces the
// table bit for bit.

pub const REPLICATION_HEADER: &str =
    "replicate,scheme,fraction,estimator,estimate,n_collected,tree_died";
pub const SUMMARY_HEADER: &str = "scheme,fraction,estimator,runs,mean,median,q1,q3,iqr,bias";
pub const GRID_HEADER: &str = "mode,ratio,eps,diag,lambda2_rds,lambda2_ac,gap_ratio";
pub const REPORT_HEADER: &str = "nodes,edges,clustering,cov_rds_lag1,cov_ac_lag1,flags";
pub const CONCENTRATION_HEADER: &str = "n,seed,f_min,g_min,d_min,op_distance,eig_deviation";

fn optional(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn check_header(line: Option<&str>, expected: &str) -> Result<(), ExperimentError> {
    if line != Some(expected) {
        return Err(ExperimentError::Csv {
            line: 1,
            message: format!("unexpected header {line:?}"),
        });
    }
    Ok(())
}

fn split_fields(line: &str, count: usize, line_no: usize) -> Result<Vec<&str>, ExperimentError> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != count {
        return Err(ExperimentError::Csv {
            line: line_no,
            message: format!("expected {count} fields, got {}", fields.len()),
        });
    }
    Ok(fields)
}

fn parse_field<T: std::str::FromStr>(field: &str, line: usize) -> Result<T, ExperimentError>
where
    T::Err: std::fmt::Display,
{
    field.parse().map_err(|e| ExperimentError::Csv {
        line,
        message: format!("{field:?}: {e}"),
    })
}

fn parse_optional(field: &str, line: usize) -> Result<Option<f64>, ExperimentError> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_field(field, line).map(Some)
    }
}

impl ReplicationTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPLICATION_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                row.replicate,
                row.scheme.label(),
                row.fraction,
                row.estimator.label(),
                row.estimate,
                row.n_collected,
                row.tree_died
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, ExperimentError> {
        let mut rows = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let fail = |message: String| ExperimentError::Csv {
                line: idx + 1,
                message,
            };
            if idx == 0 {
                if line != REPLICATION_HEADER {
                    return Err(fail(format!("unexpected header {line:?}")));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(fail(format!("expected 7 fields, got {}", fields.len())));
            }
            rows.push(ReplicationRow {
                replicate: fields[0]
                    .parse()
                    .map_err(|e| fail(format!("replicate: {e}")))?,
                scheme: WeightScheme::parse(fields[1])
                    .ok_or_else(|| fail(format!("unknown scheme {:?}", fields[1])))?,
                fraction: fields[2]
                    .parse()
                    .map_err(|e| fail(format!("fraction: {e}")))?,
                estimator: parse_weight_basis(fields[3])
                    .ok_or_else(|| fail(format!("unknown estimator {:?}", fields[3])))?,
                estimate: fields[4]
                    .parse()
                    .map_err(|e| fail(format!("estimate: {e}")))?,
                n_collected: fields[5]
                    .parse()
                    .map_err(|e| fail(format!("n_collected: {e}")))?,
                tree_died: fields[6]
                    .parse()
                    .map_err(|e| fail(format!("tree_died: {e}")))?,
            });
        }
        Ok(ReplicationTable { rows })
    }
}

pub fn parse_weight_basis(text: &str) -> Option<WeightBasis> {
    match text.trim() {
        "rds2" => Some(WeightBasis::DegreeRds2),
        "stationary_ac" => Some(WeightBasis::StationaryAc),
        "true_stationary" => Some(WeightBasis::TrueStationary),
        _ => None,
    }
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            row.scheme.label(),
            row.fraction,
            row.estimator.label(),
            row.runs,
            row.mean,
            row.median,
            row.q1,
            row.q3,
            row.iqr,
            row.bias
        ));
    }
    out
}

pub fn summary_from_csv(text: &str) -> Result<Vec<SummaryRow>, ExperimentError> {
    let mut lines = text.lines();
    check_header(lines.next(), SUMMARY_HEADER)?;
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let line_no = idx + 2;
        let f = split_fields(line, 10, line_no)?;
        rows.push(SummaryRow {
            scheme: WeightScheme::parse(f[0]).ok_or_else(|| ExperimentError::Csv {
                line: line_no,
                message: format!("unknown scheme {:?}", f[0]),
            })?,
            fraction: parse_field(f[1], line_no)?,
            estimator: parse_weight_basis(f[2]).ok_or_else(|| ExperimentError::Csv {
                line: line_no,
                message: format!("unknown estimator {:?}", f[2]),
            })?,
            runs: parse_field(f[3], line_no)?,
            mean: parse_field(f[4], line_no)?,
            median: parse_field(f[5], line_no)?,
            q1: parse_field(f[6], line_no)?,
            q3: parse_field(f[7], line_no)?,
            iqr: parse_field(f[8], line_no)?,
            bias: parse_field(f[9], line_no)?,
        });
    }
    Ok(rows)
}

pub fn grid_to_csv(rows: &[GridRow]) -> String {
    let mut out = String::from(GRID_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.mode.label(),
            row.ratio,
            row.eps,
            row.diag,
            row.lambda2_rds,
            row.lambda2_ac,
            row.gap_ratio
        ));
    }
    out
}

pub fn grid_from_csv(text: &str) -> Result<Vec<GridRow>, ExperimentError> {
    let mut lines = text.lines();
    check_header(lines.next(), GRID_HEADER)?;
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let line_no = idx + 2;
        let f = split_fields(line, 7, line_no)?;
        let diag: f64 = parse_field(f[3], line_no)?;
        let mode = match f[0] {
            "complement_eps" => GridMode::ComplementEps,
            "fixed_diag" => GridMode::FixedDiag(diag),
            other => {
                return Err(ExperimentError::Csv {
                    line: line_no,
                    message: format!("unknown grid mode {other:?}"),
                })
            }
        };
        rows.push(GridRow {
            mode,
            ratio: parse_field(f[1], line_no)?,
            eps: parse_field(f[2], line_no)?,
            diag,
            lambda2_rds: parse_field(f[4], line_no)?,
            lambda2_ac: parse_field(f[5], line_no)?,
            gap_ratio: parse_field(f[6], line_no)?,
        });
    }
    Ok(rows)
}

pub fn report_to_csv(report: &NetworkReport) -> String {
    format!(
        "{}\n{},{},{},{},{},{}\n",
        REPORT_HEADER,
        report.nodes,
        report.edges,
        optional(report.clustering),
        optional(report.cov_rds_lag1),
        optional(report.cov_ac_lag1),
        report.flags.join("; ")
    )
}

pub fn report_from_csv(text: &str) -> Result<NetworkReport, ExperimentError> {
    let mut lines = text.lines();
    check_header(lines.next(), REPORT_HEADER)?;
    let line = lines.next().ok_or(ExperimentError::Csv {
        line: 2,
        message: "missing report row".into(),
    })?;
    let f = split_fields(line, 6, 2)?;
    Ok(NetworkReport {
        nodes: parse_field(f[0], 2)?,
        edges: parse_field(f[1], 2)?,
        clustering: parse_optional(f[2], 2)?,
        cov_rds_lag1: parse_optional(f[3], 2)?,
        cov_ac_lag1: parse_optional(f[4], 2)?,
        flags: if f[5].is_empty() {
            Vec::new()
        } else {
            f[5].split("; ").map(str::to_string).collect()
        },
    })
}

pub fn concentration_to_csv(rows: &[ConcentrationRow]) -> String {
    let mut out = String::from(CONCENTRATION_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.n,
            row.seed_index,
            row.f_min,
            row.g_min,
            row.d_min,
            row.op_distance,
            row.eig_deviation
        ));
    }
    out
}

pub fn concentration_from_csv(text: &str) -> Result<Vec<ConcentrationRow>, ExperimentError> {
    let mut lines = text.lines();
    check_header(lines.next(), CONCENTRATION_HEADER)?;
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let line_no = idx + 2;
        let f = split_fields(line, 7, line_no)?;
        rows.push(ConcentrationRow {
            n: parse_field(f[0], line_no)?,
            seed_index: parse_field(f[1], line_no)?,
            f_min: parse_field(f[2], line_no)?,
            g_min: parse_field(f[3], line_no)?,
            d_min: parse_field(f[4], line_no)?,
            op_distance: parse_field(f[5], line_no)?,
            eig_deviation: parse_field(f[6], line_no)?,
        });
    }
    Ok(rows)
}
