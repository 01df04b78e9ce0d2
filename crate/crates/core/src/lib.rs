//! Referral sampling on networks.
//!
//! Chain-referral surveys explore a hidden population along its social ties.
//! When the network has tight communities, referrals rarely cross them, the
//! underlying walk mixes slowly, and estimates ride on which community the
//! seed landed in. The anti-cluster designs in this crate re-weight referrals
//! toward edges that sit in few triangles, which widens the spectral gap of
//! the referral walk and decorrelates successive samples.
//!
//! The crate is organized around that pipeline:
//!
//! * [`graph`] — undirected simple graphs, blockmodel generation, edge-list
//!   ingestion, clustering statistics.
//! * [`weights`] — referral weight schemes and their stationary laws, plus
//!   the block-level population weight matrices.
//! * [`spectral`] — eigenvalues of the referral kernels, closed forms for
//!   blockmodels, autocovariance profiles, concentration diagnostics.
//! * [`sampler`] — the tree-indexed referral process itself.
//! * [`estimators`] — Horvitz-Thompson and Hajek style population-mean
//!   estimators over the collected samples.
//! * [`experiments`] — a replication harness and CLI that writes CSV.
//!
//! ```
//! use std::sync::Arc;
//! use acrds::{build_weights, SbmSpec, WeightScheme};
//! use acrds::graph::NodeFeature;
//! use acrds::sampler::{run_referral, DeadBranchPolicy, Replacement, SamplingConfig, SeedStrategy};
//! use acrds::estimators::rds2_estimate;
//! use acrds::spectral::{lambda2, spectral_gap_ratio};
//!
//! // Three communities, strong in-block connectivity.
//! let spec = SbmSpec::planted(3, 60, 0.27, 0.03)?;
//! assert!(spectral_gap_ratio(&spec)? > 1.0);
//!
//! let (graph, blocks) = spec.sample(7);
//! let graph = Arc::new(graph);
//! let y = NodeFeature::block_indicator(&blocks, 1);
//!
//! // Anti-cluster weighting shrinks the second eigenvalue on this draw.
//! let uniform = build_weights(graph.clone(), WeightScheme::Uniform)?;
//! let anti = build_weights(graph, WeightScheme::AntiClusterCombined)?;
//! assert!(lambda2(&anti)?.0 < lambda2(&uniform)?.0);
//!
//! // Simulate one referral tree and estimate the block share.
//! let cfg = SamplingConfig {
//!     scheme: WeightScheme::AntiClusterCombined,
//!     coupons: 3,
//!     replacement: Replacement::With,
//!     target: 30,
//!     seed_strategy: SeedStrategy::UniformNode,
//!     dead_branch_policy: DeadBranchPolicy::Prune,
//! };
//! let run = run_referral(&anti, &cfg, &y, 42)?;
//! let estimate = rds2_estimate(&run.records)?;
//! assert!((0.0..=1.0).contains(&estimate.value));
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod estimators;
pub mod experiments;
pub mod graph;
pub mod sampler;
pub mod spectral;
pub mod weights;

pub use graph::{from_edge_list, EdgeListGraph, Graph, GraphError, NodeFeature, SbmSpec};
pub use weights::{build_weights, WeightError, WeightScheme, WeightedGraph};
