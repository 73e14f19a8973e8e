//! Seeded random instances for property corpora.
//!
//! The default seed can be overridden with the `HYPERQIF_SEED` environment
//! variable so a failing corpus can be replayed.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::abstraction::AggregationMatrix;
use crate::dist::{Channel, Distribution, SecretSpace};
use crate::hyper::{HigherHyper, Hyper};
use crate::measures::{GainFunction, VulnerabilityMeasure};

pub const DEFAULT_SEED: u64 = 0x5EED_0FC0_FFEE;

pub fn seed() -> u64 {
    std::env::var("HYPERQIF_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_SEED)
}

pub fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed())
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn space(n: usize) -> SecretSpace {
    SecretSpace::indexed("x", n).expect("n >= 1")
}

/// A random probability vector. About one draw in four zeroes some
/// entries, so supports smaller than the space are exercised.
pub fn random_probs<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let sparse = n > 1 && rng.random_bool(0.25);
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            if sparse && rng.random_bool(0.4) {
                0.0
            } else {
                -(1.0 - rng.random::<f64>()).ln()
            }
        })
        .collect();
    if w.iter().all(|&v| v == 0.0) {
        let k = rng.random_range(0..n);
        w[k] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

pub fn random_distribution<R: Rng>(rng: &mut R, space: &SecretSpace) -> Distribution {
    Distribution::new(space.clone(), random_probs(rng, space.len())).expect("valid draw")
}

/// A random hyper with `k` inners, all with positive outer mass.
pub fn random_hyper<R: Rng>(rng: &mut R, space: &SecretSpace, k: usize) -> Hyper {
    let inners = (0..k).map(|_| random_distribution(rng, space)).collect();
    let mut outer: Vec<f64> = (0..k).map(|_| 0.05 + rng.random::<f64>()).collect();
    let s: f64 = outer.iter().sum();
    outer.iter_mut().for_each(|v| *v /= s);
    Hyper::new(space.clone(), inners, outer).expect("valid draw")
}

pub fn random_stochastic<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Array2<f64> {
    let mut m = Array2::zeros((rows, cols));
    for r in 0..rows {
        for (c, v) in random_probs(rng, cols).into_iter().enumerate() {
            m[[r, c]] = v;
        }
    }
    m
}

pub fn random_channel<R: Rng>(rng: &mut R, inputs: &SecretSpace, outputs: usize) -> Channel {
    let m = random_stochastic(rng, inputs.len(), outputs);
    Channel::new(inputs.clone(), SecretSpace::indexed("y", outputs).unwrap(), m).expect("valid draw")
}

/// Occasionally deterministic, to cover partitions as well as noisy
/// aggregations.
pub fn random_aggregation<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> AggregationMatrix {
    if rng.random_bool(0.3) {
        let assignment: Vec<usize> = (0..rows).map(|_| rng.random_range(0..cols)).collect();
        AggregationMatrix::deterministic(&assignment, cols).expect("valid draw")
    } else {
        AggregationMatrix::from_matrix(random_stochastic(rng, rows, cols)).expect("valid draw")
    }
}

/// Non-negative gains over `guesses` guesses.
pub fn random_gain<R: Rng>(rng: &mut R, space: &SecretSpace, guesses: usize) -> GainFunction {
    let g = Array2::from_shape_fn((guesses, space.len()), |_| {
        if rng.random_bool(0.3) {
            0.0
        } else {
            rng.random_range(0.0..10.0)
        }
    });
    GainFunction::new(SecretSpace::indexed("w", guesses).unwrap(), space.clone(), g).expect("valid draw")
}

/// Bayes followed by three random gain functions.
pub fn measure_family<R: Rng>(rng: &mut R, space: &SecretSpace) -> Vec<VulnerabilityMeasure> {
    let mut out = vec![VulnerabilityMeasure::Bayes];
    for _ in 0..3 {
        let w = rng.random_range(1..=space.len() + 2);
        out.push(VulnerabilityMeasure::Gain(random_gain(rng, space, w)));
    }
    out
}

pub fn random_higher<R: Rng>(
    rng: &mut R,
    space: &SecretSpace,
    depth: usize,
    max_fanout: usize,
) -> HigherHyper {
    if depth == 1 {
        return HigherHyper::Leaf(random_distribution(rng, space));
    }
    let k = rng.random_range(1..=max_fanout);
    let children = (0..k)
        .map(|_| random_higher(rng, space, depth - 1, max_fanout))
        .collect();
    HigherHyper::node(random_probs(rng, k), children).expect("uniform depth")
}
