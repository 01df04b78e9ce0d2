//! Population-mean estimators over referral samples.
//!
//! All of them are inverse-probability weighted means; they differ in which
//! inclusion probabilities they plug in. The self-normalized (Hajek) form
//! needs the probabilities only up to a constant, so degree or row-sum
//! weights can be used directly.

use thiserror::Error;

use crate::sampler::SampleRecord;

/// Which inclusion probabilities an estimate used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightBasis {
    /// `pi` proportional to node degree (the classic RDS II weights).
    DegreeRds2,
    /// `pi` proportional to the anti-cluster referral row sums.
    StationaryAc,
    /// The scheme's exact stationary distribution.
    TrueStationary,
}

impl WeightBasis {
    pub fn label(self) -> &'static str {
        match self {
            WeightBasis::DegreeRds2 => "rds2",
            WeightBasis::StationaryAc => "stationary_ac",
            WeightBasis::TrueStationary => "true_stationary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateResult {
    pub value: f64,
    pub weights_used: WeightBasis,
    pub n_samples: usize,
}

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("no sample records")]
    EmptyRecords,
    #[error("node {0} has zero inclusion probability")]
    ZeroInclusionProbability(u32),
    #[error("record for node {0} has zero degree")]
    ZeroDegree(u32),
    #[error("record for node {0} has zero referral row sum")]
    ZeroRowSum(u32),
    #[error("inclusion values ({got}) do not cover node {node}")]
    InclusionTooShort { got: usize, node: u32 },
}

/// Unbiased inverse-probability-weighted mean
/// `(1/n) sum (1/N) y(x) / pi(x)`; needs the population size and the true
/// stationary probabilities.
pub fn ipw_estimate(
    records: &[SampleRecord],
    pi: &[f64],
    n_population: usize,
) -> Result<f64, EstimatorError> {
    if records.is_empty() {
        return Err(EstimatorError::EmptyRecords);
    }
    let mut sum = 0.0;
    for record in records {
        let node = record.node as usize;
        if node >= pi.len() {
            return Err(EstimatorError::InclusionTooShort {
                got: pi.len(),
                node: record.node,
            });
        }
        if pi[node] <= 0.0 {
            return Err(EstimatorError::ZeroInclusionProbability(record.node));
        }
        sum += record.feature / pi[node];
    }
    Ok(sum / (records.len() as f64 * n_population as f64))
}

/// Self-normalized weighted mean `sum y/pi / sum 1/pi`. Invariant to scaling
/// all inclusion values by a common positive constant.
pub fn hajek_estimate(values: &[f64], inclusion: &[f64]) -> Result<f64, EstimatorError> {
    if values.is_empty() {
        return Err(EstimatorError::EmptyRecords);
    }
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for (idx, (&y, &p)) in values.iter().zip(inclusion).enumerate() {
        if p <= 0.0 {
            return Err(EstimatorError::ZeroInclusionProbability(idx as u32));
        }
        numerator += y / p;
        denominator += 1.0 / p;
    }
    Ok(numerator / denominator)
}

/// The RDS II estimator: Hajek with `pi` proportional to degree. Used for
/// samples from every scheme, as the simulation studies do.
pub fn rds2_estimate(records: &[SampleRecord]) -> Result<EstimateResult, EstimatorError> {
    if records.is_empty() {
        return Err(EstimatorError::EmptyRecords);
    }
    if let Some(record) = records.iter().find(|r| r.degree == 0) {
        return Err(EstimatorError::ZeroDegree(record.node));
    }
    let values: Vec<f64> = records.iter().map(|r| r.feature).collect();
    let inclusion: Vec<f64> = records.iter().map(|r| r.degree as f64).collect();
    Ok(EstimateResult {
        value: hajek_estimate(&values, &inclusion)?,
        weights_used: WeightBasis::DegreeRds2,
        n_samples: records.len(),
    })
}

/// Hajek with `pi` proportional to the recorded referral row sums, i.e. the
/// stationary distribution of the run's own symmetric scheme.
pub fn ac_stationary_estimate(records: &[SampleRecord]) -> Result<EstimateResult, EstimatorError> {
    if records.is_empty() {
        return Err(EstimatorError::EmptyRecords);
    }
    if let Some(record) = records.iter().find(|r| r.row_sum == 0) {
        return Err(EstimatorError::ZeroRowSum(record.node));
    }
    let values: Vec<f64> = records.iter().map(|r| r.feature).collect();
    let inclusion: Vec<f64> = records.iter().map(|r| r.row_sum as f64).collect();
    Ok(EstimateResult {
        value: hajek_estimate(&values, &inclusion)?,
        weights_used: WeightBasis::StationaryAc,
        n_samples: records.len(),
    })
}

/// Hajek with the exact stationary probabilities supplied per node.
pub fn true_stationary_estimate(
    records: &[SampleRecord],
    pi: &[f64],
) -> Result<EstimateResult, EstimatorError> {
    if records.is_empty() {
        return Err(EstimatorError::EmptyRecords);
    }
    let mut values = Vec::with_capacity(records.len());
    let mut inclusion = Vec::with_capacity(records.len());
    for record in records {
        let node = record.node as usize;
        if node >= pi.len() {
            return Err(EstimatorError::InclusionTooShort {
                got: pi.len(),
                node: record.node,
            });
        }
        values.push(record.feature);
        inclusion.push(pi[node]);
    }
    Ok(EstimateResult {
        value: hajek_estimate(&values, &inclusion)?,
        weights_used: WeightBasis::TrueStationary,
        n_samples: records.len(),
    })
}
