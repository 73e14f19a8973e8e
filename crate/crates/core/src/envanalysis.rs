//! Environmental and strategy vulnerability, and the decomposition
//! `V(prior) = V_S(E) * V_E(E)` of perceived security into security by
//! aggregation and security by strategy.

use serde::Serialize;

use crate::error::{QifError, Result};
use crate::hyper::Hyper;
use crate::measures::{bayes_vulnerability, hyper_vulnerability, VulnerabilityMeasure};

/// Floor applied before taking `-log2` in reports.
pub const LOG_FLOOR: f64 = 1e-300;

/// `-log2(v)`, with `v` clamped below at [`LOG_FLOOR`]. Values within
/// `1e-12` of 1 give exactly 0, so rounding in a ratio does not show up as
/// a tiny negative number of bits.
pub fn bits(v: f64) -> f64 {
    if (v - 1.0).abs() < 1e-12 {
        return 0.0;
    }
    -v.max(LOG_FLOOR).log2()
}

/// Expected vulnerability over the strategies of an environment.
pub fn environmental_vulnerability(measure: &VulnerabilityMeasure, env: &Hyper) -> Result<f64> {
    hyper_vulnerability(measure, env)
}

/// `V(prior) / V_E(env)`, in `(0, 1]`.
pub fn strategy_vulnerability(measure: &VulnerabilityMeasure, env: &Hyper) -> Result<f64> {
    Ok(decompose_security(measure, env)?.by_aggregation)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bits {
    pub perceived: f64,
    pub by_aggregation: f64,
    pub by_strategy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SecurityDecomposition {
    /// `V(prior)`.
    pub perceived: f64,
    /// Strategy vulnerability `V_S(E)`.
    pub by_aggregation: f64,
    /// Environmental vulnerability `V_E(E)`.
    pub by_strategy: f64,
}

impl SecurityDecomposition {
    pub fn bits(&self) -> Bits {
        Bits {
            perceived: bits(self.perceived),
            by_aggregation: bits(self.by_aggregation),
            by_strategy: bits(self.by_strategy),
        }
    }
}

/// Builds the decomposition from the two measured quantities.
pub(crate) fn decomposition_from(perceived: f64, env_v: f64) -> Result<SecurityDecomposition> {
    if env_v <= 0.0 {
        return Err(QifError::ZeroEnvironmentalVulnerability);
    }
    Ok(SecurityDecomposition {
        perceived,
        by_aggregation: perceived / env_v,
        by_strategy: env_v,
    })
}

pub fn decompose_security(measure: &VulnerabilityMeasure, env: &Hyper) -> Result<SecurityDecomposition> {
    let env_v = environmental_vulnerability(measure, env)?;
    let perceived = measure.vulnerability(&env.prior())?;
    decomposition_from(perceived, env_v)
}

/// Bayes strategy vulnerability `V^B(prior) / V_E^B(E)`.
///
/// This is not a lower bound on the strategy vulnerability of every gain
/// function at the same prior; see [`capacity_lower_bound`] for one that
/// is.
pub fn bayes_ratio_lower_bound(env: &Hyper) -> Result<f64> {
    let env_v = environmental_vulnerability(&VulnerabilityMeasure::Bayes, env)?;
    Ok(decomposition_from(bayes_vulnerability(&env.prior()), env_v)?.by_aggregation)
}

/// `1 / ML(Delta_E)`, where `ML` is the Bayes capacity of the
/// strategy-identifying channel restricted to the prior's support. A lower
/// bound on the strategy vulnerability under any non-negative gain
/// function.
pub fn capacity_lower_bound(env: &Hyper) -> f64 {
    let prior = env.prior();
    let joint = env.joint_array();
    let capacity: f64 = joint
        .columns()
        .into_iter()
        .map(|col| {
            col.iter()
                .zip(prior.probs())
                .filter(|(_, &p)| p > 0.0)
                .map(|(&j, &p)| j / p)
                .fold(0.0, f64::max)
        })
        .sum();
    1.0 / capacity
}
