//! Flat key-value scenario files.
//!
//! One `key = value` pair per line, `#` starting a comment. Relative paths
//! resolve against the config file's directory. Recognized keys:
//!
//! ```text
//! network        sbm | edge_list
//! blocks         block count                  (sbm)
//! block_size     nodes per block              (sbm)
//! in_prob        in-block edge probability    (sbm)
//! out_prob       cross-block edge probability (sbm; or edge_ratio)
//! edge_ratio     expected in/out edge count ratio; solves out_prob
//! edge_list_path path to the edge-list file   (edge_list)
//! feature        block_indicator | column
//! indicator_blocks  the feature is 1 on the first this-many blocks
//! feature_path   path to the per-node value file (column)
//! schemes        comma list: uniform, anti_cluster_a, anti_cluster_b,
//!                anti_cluster_combined, coin_flip_mixture
//! fractions      comma list of sample fractions in (0, 1]
//! replications   number of replicates
//! coupons        referrals per participant      (default 3)
//! replacement    with | without                 (default with)
//! seed_strategy  uniform | stationary | feature_biased  (default uniform)
//! biased_value   feature value for feature_biased seeding
//! dead_branch    prune | fallback_uniform_neighbor      (default prune)
//! estimators     comma list: rds2, stationary_ac  (default both)
//! base_seed      u64                            (default 0)
//! ```

use std::path::{Path, PathBuf};

use super::{parse_weight_basis, ExperimentError, FeatureSource, NetworkSource, ScenarioConfig};
use crate::graph::SbmSpec;
use crate::sampler::{DeadBranchPolicy, Replacement, SeedStrategy};
use crate::weights::WeightScheme;

struct Entry {
    line: usize,
    key: String,
    value: String,
    used: bool,
}

fn parse_lines(text: &str) -> Result<Vec<Entry>, ExperimentError> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(ExperimentError::Config {
                line,
                message: format!("expected `key = value`, got {trimmed:?}"),
            });
        };
        entries.push(Entry {
            line,
            key: key.trim().to_string(),
            value: value.trim().to_string(),
            used: false,
        });
    }
    Ok(entries)
}

struct Keys {
    entries: Vec<Entry>,
}

impl Keys {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries
            .iter_mut()
            .find(|e| !e.used && e.key == key)
            .map(|e| {
                e.used = true;
                (e.line, e.value.clone())
            })
    }

    fn require(&mut self, key: &str) -> Result<(usize, String), ExperimentError> {
        self.take(key).ok_or_else(|| ExperimentError::Config {
            line: 0,
            message: format!("missing required key `{key}`"),
        })
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, ExperimentError>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some((line, value)) => {
                value
                    .parse::<T>()
                    .map(Some)
                    .map_err(|e| ExperimentError::Config {
                        line,
                        message: format!("{key}: {e}"),
                    })
            }
        }
    }

    fn finish(self) -> Result<(), ExperimentError> {
        if let Some(stale) = self.entries.iter().find(|e| !e.used) {
            return Err(ExperimentError::Config {
                line: stale.line,
                message: format!("unknown or unused key `{}`", stale.key),
            });
        }
        Ok(())
    }
}

fn resolve(base: &Path, value: &str) -> PathBuf {
    let path = PathBuf::from(value);
    if path.is_absolute() {
        path
    } else {
        base.join(path)
    }
}

/// Solves the cross-block probability from the target in/out expected edge
/// count ratio for equal blocks.
pub fn out_prob_for_edge_ratio(
    blocks: usize,
    block_size: usize,
    p_in: f64,
    ratio: f64,
) -> Result<f64, ExperimentError> {
    let n = blocks * block_size;
    let in_pairs = blocks as f64 * (block_size * (block_size - 1) / 2) as f64;
    let out_pairs = (n * (n - 1) / 2) as f64 - in_pairs;
    if out_pairs <= 0.0 || ratio <= 0.0 {
        return Err(ExperimentError::InvalidScenario(
            "edge_ratio needs at least two blocks and a positive ratio".into(),
        ));
    }
    let p_out = in_pairs * p_in / (ratio * out_pairs);
    if !(0.0..=1.0).contains(&p_out) {
        return Err(ExperimentError::InvalidScenario(format!(
            "edge_ratio {ratio} implies out-of-range cross probability {p_out}"
        )));
    }
    Ok(p_out)
}

/// Parses a scenario file. `base_dir` anchors relative paths.
pub fn scenario_from_str(text: &str, base_dir: &Path) -> Result<ScenarioConfig, ExperimentError> {
    let mut keys = Keys {
        entries: parse_lines(text)?,
    };
    let bad = |line: usize, message: String| ExperimentError::Config { line, message };

    let (net_line, network_kind) = keys.require("network")?;
    let network = match network_kind.as_str() {
        "sbm" => {
            let blocks: usize = keys
                .parse("blocks")?
                .ok_or_else(|| bad(net_line, "sbm needs `blocks`".into()))?;
            let block_size: usize = keys
                .parse("block_size")?
                .ok_or_else(|| bad(net_line, "sbm needs `block_size`".into()))?;
            let p_in: f64 = keys
                .parse("in_prob")?
                .ok_or_else(|| bad(net_line, "sbm needs `in_prob`".into()))?;
            let p_out = match (
                keys.parse::<f64>("out_prob")?,
                keys.parse::<f64>("edge_ratio")?,
            ) {
                (Some(p), None) => p,
                (None, Some(ratio)) => out_prob_for_edge_ratio(blocks, block_size, p_in, ratio)?,
                (Some(_), Some(_)) => {
                    return Err(bad(
                        net_line,
                        "give either `out_prob` or `edge_ratio`, not both".into(),
                    ))
                }
                (None, None) => {
                    return Err(bad(net_line, "sbm needs `out_prob` or `edge_ratio`".into()))
                }
            };
            NetworkSource::Sbm(SbmSpec::from_in_out(vec![block_size; blocks], p_in, p_out)?)
        }
        "edge_list" => {
            let (_, path) = keys.require("edge_list_path")?;
            NetworkSource::EdgeList(resolve(base_dir, &path))
        }
        other => return Err(bad(net_line, format!("unknown network source {other:?}"))),
    };

    let (feat_line, feature_kind) = keys.require("feature")?;
    let feature = match feature_kind.as_str() {
        "block_indicator" => FeatureSource::BlockIndicator {
            blocks: keys
                .parse("indicator_blocks")?
                .ok_or_else(|| bad(feat_line, "block_indicator needs `indicator_blocks`".into()))?,
        },
        "column" => {
            let (_, path) = keys.require("feature_path")?;
            FeatureSource::Column(resolve(base_dir, &path))
        }
        other => return Err(bad(feat_line, format!("unknown feature source {other:?}"))),
    };

    let schemes = match keys.take("schemes") {
        None => vec![WeightScheme::Uniform, WeightScheme::AntiClusterCombined],
        Some((line, value)) => value
            .split(',')
            .map(|token| {
                WeightScheme::parse(token)
                    .ok_or_else(|| bad(line, format!("unknown scheme {:?}", token.trim())))
            })
            .collect::<Result<_, _>>()?,
    };

    let (frac_line, fraction_text) = keys.require("fractions")?;
    let fractions: Vec<f64> = fraction_text
        .split(',')
        .map(|token| {
            token
                .trim()
                .parse::<f64>()
                .map_err(|e| bad(frac_line, format!("fractions: {e}")))
        })
        .collect::<Result<_, _>>()?;

    let replications: usize = keys
        .parse("replications")?
        .ok_or_else(|| bad(0, "missing required key `replications`".into()))?;
    let coupons: usize = keys.parse("coupons")?.unwrap_or(3);

    let replacement = match keys.take("replacement") {
        None => Replacement::With,
        Some((_, value)) if value == "with" => Replacement::With,
        Some((_, value)) if value == "without" => Replacement::Without,
        Some((line, value)) => return Err(bad(line, format!("unknown replacement {value:?}"))),
    };

    let seed_strategy = match keys.take("seed_strategy") {
        None => SeedStrategy::UniformNode,
        Some((_, value)) if value == "uniform" => SeedStrategy::UniformNode,
        Some((_, value)) if value == "stationary" => SeedStrategy::Stationary,
        Some((line, value)) if value == "feature_biased" => {
            let biased: f64 = keys
                .parse("biased_value")?
                .ok_or_else(|| bad(line, "feature_biased needs `biased_value`".into()))?;
            SeedStrategy::FeatureBiased(biased)
        }
        Some((line, value)) => return Err(bad(line, format!("unknown seed strategy {value:?}"))),
    };

    let dead_branch_policy = match keys.take("dead_branch") {
        None => DeadBranchPolicy::Prune,
        Some((_, value)) if value == "prune" => DeadBranchPolicy::Prune,
        Some((_, value)) if value == "fallback_uniform_neighbor" => {
            DeadBranchPolicy::FallbackUniformNeighbor
        }
        Some((line, value)) => {
            return Err(bad(line, format!("unknown dead-branch policy {value:?}")))
        }
    };

    let estimators = match keys.take("estimators") {
        None => vec![
            crate::estimators::WeightBasis::DegreeRds2,
            crate::estimators::WeightBasis::StationaryAc,
        ],
        Some((line, value)) => value
            .split(',')
            .map(|token| {
                parse_weight_basis(token)
                    .ok_or_else(|| bad(line, format!("unknown estimator {:?}", token.trim())))
            })
            .collect::<Result<_, _>>()?,
    };

    let base_seed: u64 = keys.parse("base_seed")?.unwrap_or(0);
    keys.finish()?;

    let cfg = ScenarioConfig {
        network,
        feature,
        schemes,
        fractions,
        replications,
        coupons,
        replacement,
        seed_strategy,
        dead_branch_policy,
        estimators,
        base_seed,
    };
    cfg.validate()?;
    Ok(cfg)
}
