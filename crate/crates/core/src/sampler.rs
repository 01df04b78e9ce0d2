//! The tree-indexed referral process.
//!
//! A run starts from a seed participant, hands each participant a fixed
//! number of coupons, and expands breadth-first: every coupon is an
//! independent draw from the participant's transition row. Referrals can be
//! drawn with replacement (the Markov model) or restricted to
//! not-yet-sampled nodes with the row renormalized (the field protocol).
//! Runs are pure functions of `(weights, config, feature, seed)`; replicates
//! parallelize by seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{GraphError, NodeFeature};
use crate::weights::{KernelRow, ReferralRow, WeightError, WeightScheme, WeightedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Replacement {
    With,
    Without,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeedStrategy {
    /// Uniform over all nodes.
    UniformNode,
    /// Draw from the scheme's stationary distribution.
    Stationary,
    /// Uniform over nodes whose feature equals the given value.
    FeatureBiased(f64),
}

/// What to do when a without-replacement branch has no positively weighted
/// eligible neighbor left.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeadBranchPolicy {
    /// The branch stops referring.
    Prune,
    /// Fall back to a uniform draw over eligible neighbors; the branch still
    /// dies when none remain.
    FallbackUniformNeighbor,
}

#[derive(Debug, Clone)]
pub struct SamplingConfig {
    pub scheme: WeightScheme,
    /// Referrals per participant.
    pub coupons: usize,
    pub replacement: Replacement,
    /// Stop once this many samples are collected.
    pub target: usize,
    pub seed_strategy: SeedStrategy,
    pub dead_branch_policy: DeadBranchPolicy,
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.target == 0 {
            return Err(SamplerError::InvalidTarget);
        }
        Ok(())
    }
}

/// One node of the referral tree, in breadth-first generation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeNode {
    pub graph_node: u32,
    /// Index of the parent within the tree; the root has none.
    pub parent: Option<u32>,
    pub wave: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReferralTree {
    pub nodes: Vec<TreeNode>,
}

/// What is measured when a participant is sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRecord {
    pub node: u32,
    pub feature: f64,
    pub degree: u32,
    /// Referral row sum `t(node)` under the run's scheme.
    pub row_sum: u64,
    pub wave: u32,
}

/// A completed (or prematurely dead) referral run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReferralRun {
    pub tree: ReferralTree,
    pub records: Vec<SampleRecord>,
    /// The frontier emptied before the target was reached.
    pub died: bool,
}

#[derive(Debug, Error)]
pub enum SamplerError {
    /// The frontier emptied before the target; the partial run rides along.
    #[error("referral tree died after collecting {} samples", .0.records.len())]
    TreeDied(Box<ReferralRun>),
    #[error("no node carries the feature value {0}")]
    EmptyFeatureClass(f64),
    #[error("sampling target must be at least 1")]
    InvalidTarget,
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn draw_weighted<R: Rng>(row: &KernelRow<'_>, rng: &mut R) -> u32 {
    debug_assert!(row.total > 0);
    let mut ticket = rng.random_range(0..row.total);
    for &(v, w) in row.entries {
        if ticket < w {
            return v;
        }
        ticket -= w;
    }
    unreachable!("ticket below total")
}

fn draw_weighted_eligible<R: Rng>(
    row: &KernelRow<'_>,
    eligible: &[bool],
    rng: &mut R,
) -> Option<u32> {
    let total: u64 = row
        .entries
        .iter()
        .filter(|&&(v, _)| eligible[v as usize])
        .map(|&(_, w)| w)
        .sum();
    if total == 0 {
        return None;
    }
    let mut ticket = rng.random_range(0..total);
    for &(v, w) in row.entries {
        if !eligible[v as usize] {
            continue;
        }
        if ticket < w {
            return Some(v);
        }
        ticket -= w;
    }
    unreachable!("ticket below total")
}

fn pick_kernel<'a, R: Rng>(row: &ReferralRow<'a>, rng: &mut R) -> KernelRow<'a> {
    match row {
        ReferralRow::Single(kernel) => *kernel,
        // The coin comes first, matching the implementation story.
        ReferralRow::Mixture(a, b) => {
            if rng.random::<bool>() {
                *a
            } else {
                *b
            }
        }
    }
}

/// One with-replacement referral out of `u`.
fn draw_referral<R: Rng>(wg: &WeightedGraph, u: usize, rng: &mut R) -> u32 {
    let kernel = pick_kernel(&wg.referral_row(u), rng);
    draw_weighted(&kernel, rng)
}

/// One without-replacement referral out of `u`, restricted to nodes not yet
/// sampled. `None` means the branch is dead.
fn draw_referral_without<R: Rng>(
    wg: &WeightedGraph,
    u: usize,
    sampled: &[bool],
    policy: DeadBranchPolicy,
    rng: &mut R,
) -> Option<u32> {
    let eligible: Vec<bool> = sampled.iter().map(|&s| !s).collect();
    let kernel = pick_kernel(&wg.referral_row(u), rng);
    if let Some(v) = draw_weighted_eligible(&kernel, &eligible, rng) {
        return Some(v);
    }
    match policy {
        DeadBranchPolicy::Prune => None,
        DeadBranchPolicy::FallbackUniformNeighbor => {
            let open: Vec<u32> = wg
                .graph()
                .neighbors(u)
                .iter()
                .copied()
                .filter(|&v| eligible[v as usize])
                .collect();
            if open.is_empty() {
                None
            } else {
                Some(open[rng.random_range(0..open.len())])
            }
        }
    }
}

/// Picks the seed participant.
pub fn choose_seed<R: Rng>(
    wg: &WeightedGraph,
    strategy: &SeedStrategy,
    y: &NodeFeature,
    rng: &mut R,
) -> Result<u32, SamplerError> {
    let n = wg.node_count();
    match strategy {
        SeedStrategy::UniformNode => Ok(rng.random_range(0..n) as u32),
        SeedStrategy::Stationary => {
            let pi = wg.stationary_distribution()?;
            let ticket: f64 = rng.random();
            let mut acc = 0.0;
            for (u, &p) in pi.iter().enumerate() {
                acc += p;
                if ticket < acc {
                    return Ok(u as u32);
                }
            }
            Ok((n - 1) as u32)
        }
        SeedStrategy::FeatureBiased(value) => {
            let members: Vec<u32> = y
                .values()
                .iter()
                .enumerate()
                .filter(|&(_, &f)| f == *value)
                .map(|(u, _)| u as u32)
                .collect();
            if members.is_empty() {
                return Err(SamplerError::EmptyFeatureClass(*value));
            }
            Ok(members[rng.random_range(0..members.len())])
        }
    }
}

/// Runs the referral process to the configured target.
///
/// Expansion is breadth-first and truncates mid-wave once the target is hit.
/// If the frontier empties first (without replacement, or with zero coupons)
/// the run dies and comes back inside [`SamplerError::TreeDied`] with
/// everything collected so far. Deterministic in `seed`.
pub fn run_referral(
    wg: &WeightedGraph,
    cfg: &SamplingConfig,
    y: &NodeFeature,
    seed: u64,
) -> Result<ReferralRun, SamplerError> {
    cfg.validate()?;
    debug_assert_eq!(cfg.scheme, wg.scheme(), "config scheme must match weights");
    let n = wg.node_count();
    y.check_length(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let record_of = |node: u32, wave: u32| SampleRecord {
        node,
        feature: y.get(node as usize),
        degree: wg.graph().degree(node as usize) as u32,
        row_sum: wg.row_sum(node as usize),
        wave,
    };

    let root = choose_seed(wg, &cfg.seed_strategy, y, &mut rng)?;
    let mut tree = ReferralTree {
        nodes: vec![TreeNode {
            graph_node: root,
            parent: None,
            wave: 0,
        }],
    };
    let mut records = vec![record_of(root, 0)];
    let mut sampled = vec![false; n];
    sampled[root as usize] = true;
    let mut queue = std::collections::VecDeque::from([0usize]);

    'expand: while records.len() < cfg.target {
        let Some(parent_idx) = queue.pop_front() else {
            return Err(SamplerError::TreeDied(Box::new(ReferralRun {
                tree,
                records,
                died: true,
            })));
        };
        let parent_node = tree.nodes[parent_idx].graph_node as usize;
        let child_wave = tree.nodes[parent_idx].wave + 1;
        for _ in 0..cfg.coupons {
            if records.len() >= cfg.target {
                break 'expand;
            }
            let child = match cfg.replacement {
                Replacement::With => Some(draw_referral(wg, parent_node, &mut rng)),
                Replacement::Without => draw_referral_without(
                    wg,
                    parent_node,
                    &sampled,
                    cfg.dead_branch_policy,
                    &mut rng,
                ),
            };
            let Some(child) = child else {
                break; // branch is dead; move on to the next participant
            };
            sampled[child as usize] = true;
            tree.nodes.push(TreeNode {
                graph_node: child,
                parent: Some(parent_idx as u32),
                wave: child_wave,
            });
            records.push(record_of(child, child_wave));
            queue.push_back(tree.nodes.len() - 1);
        }
    }
    Ok(ReferralRun {
        tree,
        records,
        died: false,
    })
}

/// Frequency of each node among `draws` independent with-replacement
/// referrals out of `u`; a validation harness for the transition rows.
pub fn empirical_transition_check(
    wg: &WeightedGraph,
    u: usize,
    draws: usize,
    seed: u64,
) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0usize; wg.node_count()];
    for _ in 0..draws {
        counts[draw_referral(wg, u, &mut rng) as usize] += 1;
    }
    counts
        .into_iter()
        .map(|c| c as f64 / draws as f64)
        .collect()
}
