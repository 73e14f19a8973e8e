//! Quantitative information flow for secrets generated under many
//! strategies.
//!
//! Adversarial prior knowledge is a hyper-distribution: an environment is
//! a distribution over the strategies defenders use to pick secrets, and
//! an adversary's model is an abstraction of it. The crate computes
//! environmental vulnerability, strategy vulnerability, vulnerability
//! relative to an abstraction, and the decomposition of prior
//! vulnerability into security by aggregation and security by strategy.

pub mod abstraction;
pub mod corpus;
pub mod dist;
pub mod envanalysis;
pub mod error;
pub mod hyper;
pub mod json;
pub mod measures;
pub mod numfmt;
pub mod testkit;

pub use abstraction::{
    apply_aggregation, check_abstracts, check_abstracts_within, model_vulnerability, model_vulnerability_of,
    refinement_ratio, strategy_vulnerability_given, AggregationMatrix, RefinementWitness, EPS_FEAS,
};
pub use dist::{
    joint_from, make_distribution, marginals_and_conditionals, point_distribution, push_through, Channel,
    Distribution, JointDistribution, Marginals, SecretSpace, EPS_NORM,
};
pub use envanalysis::{
    bayes_ratio_lower_bound, capacity_lower_bound, decompose_security, environmental_vulnerability,
    strategy_vulnerability, SecurityDecomposition,
};
pub use error::{QifError, Result};
pub use hyper::{
    collapse, decompose, from_joint, joint_matrix, point_hyper, prior_of, reduce, vulnerability_n,
    HigherHyper, Hyper,
};
pub use measures::{
    bayes_vulnerability, g_vulnerability, hyper_vulnerability, joint_bayes, optimal_guess,
    posterior_g_vulnerability, GainFunction, VulnerabilityMeasure,
};
