//! Fixtures, frozen expected values and brute-force oracles shared by the
//! integration tests. The oracles work on plain vectors and never call the
//! library's analytic code.

#![allow(dead_code)]

use std::collections::HashMap;

use ndarray::Array2;
use rand::seq::SliceRandom;

use hyperqif::testkit::rng_from;
use hyperqif::{Distribution, HigherHyper, Hyper, SecretSpace, VulnerabilityMeasure};

pub type Matrix = Vec<Vec<f64>>;

// ---------------------------------------------------------------- fixtures

pub fn x2() -> SecretSpace {
    SecretSpace::new(["x1", "x2"]).unwrap()
}

pub fn hyper(outer: &[f64], inners: &[&[f64]]) -> Hyper {
    let space = SecretSpace::indexed("x", inners[0].len()).unwrap();
    hyper_on(&space, outer, inners)
}

pub fn hyper_on(space: &SecretSpace, outer: &[f64], inners: &[&[f64]]) -> Hyper {
    let inners = inners
        .iter()
        .map(|p| Distribution::new(space.clone(), p.to_vec()).unwrap())
        .collect();
    Hyper::new(space.clone(), inners, outer.to_vec()).unwrap()
}

pub const SIGMA1: [f64; 2] = [1.0, 0.0];
pub const SIGMA2: [f64; 2] = [0.0, 1.0];
pub const SIGMA3: [f64; 2] = [0.5, 0.5];
pub const SIGMA4: [f64; 2] = [0.9, 0.1];

/// Two deterministic strategies, equally likely.
pub fn env1() -> Hyper {
    hyper_on(&x2(), &[0.5, 0.5], &[&SIGMA1, &SIGMA2])
}

/// A single uniform strategy.
pub fn env2() -> Hyper {
    hyper_on(&x2(), &[1.0], &[&SIGMA3])
}

pub fn env3() -> Hyper {
    hyper_on(&x2(), &[0.5, 0.5], &[&SIGMA1, &SIGMA4])
}

/// Gain of the adversary who values the second secret 9.5 times as much.
pub const GAIN_B: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, 9.5]];

pub fn gain_b() -> VulnerabilityMeasure {
    let g = Array2::from_shape_vec((2, 2), GAIN_B.iter().flatten().copied().collect()).unwrap();
    VulnerabilityMeasure::Gain(hyperqif::GainFunction::new(x2(), x2(), g).unwrap())
}

pub const STATE_OUTER: [f64; 6] = [0.1, 0.1, 0.2, 0.3, 0.2, 0.1];
pub const STATE_INNERS: [[f64; 2]; 6] = [
    [1.0, 0.0],
    [0.0, 1.0],
    [0.5, 0.5],
    [0.25, 0.75],
    [0.75, 0.25],
    [1.0 / 3.0, 2.0 / 3.0],
];
pub const STATE_OF: [usize; 6] = [0, 0, 1, 1, 2, 2];

/// Six users' strategies.
pub fn state_env() -> Hyper {
    let inners: Vec<&[f64]> = STATE_INNERS.iter().map(|r| r.as_slice()).collect();
    hyper_on(&x2(), &STATE_OUTER, &inners)
}

/// The users grouped by state.
pub fn state_model() -> Hyper {
    hyper_on(
        &x2(),
        &[0.2, 0.5, 0.3],
        &[
            &[0.5, 0.5],
            &[7.0 / 20.0, 13.0 / 20.0],
            &[11.0 / 18.0, 7.0 / 18.0],
        ],
    )
}

pub fn state_env_joint() -> Matrix {
    vec![
        vec![1.0 / 10.0, 0.0, 1.0 / 10.0, 3.0 / 40.0, 3.0 / 20.0, 1.0 / 30.0],
        vec![0.0, 1.0 / 10.0, 1.0 / 10.0, 9.0 / 40.0, 1.0 / 20.0, 2.0 / 30.0],
    ]
}

pub fn state_model_joint() -> Matrix {
    vec![
        vec![1.0 / 10.0, 7.0 / 40.0, 11.0 / 60.0],
        vec![1.0 / 10.0, 13.0 / 40.0, 7.0 / 60.0],
    ]
}

pub const STATE_PRIOR: [f64; 2] = [11.0 / 24.0, 13.0 / 24.0];

/// Hyper used to illustrate the joint-matrix decomposition.
pub fn decomposition_hyper() -> Hyper {
    hyper_on(&x2(), &[0.25, 0.25, 0.5], &[&SIGMA1, &SIGMA2, &SIGMA3])
}

pub const DECOMPOSITION_PRIOR: [f64; 2] = [0.5, 0.5];
pub const DECOMPOSITION_DELTA: [[f64; 3]; 2] = [[0.5, 0.0, 0.5], [0.0, 0.5, 0.5]];
pub const DECOMPOSITION_JOINT: [[f64; 3]; 2] = [[0.25, 0.0, 0.25], [0.0, 0.25, 0.25]];

/// Joint of `X` (rows) and `Y` (columns) on which the chain rule fails.
pub const CHAIN_JOINT: [[f64; 2]; 2] = [[0.5, 0.25], [0.0, 0.25]];

// --------------------------------------------------------- frozen values

pub const STATE_ENV_BAYES: f64 = 89.0 / 120.0;
pub const STATE_MODEL_BAYES: f64 = 73.0 / 120.0;
pub const STATE_PRIOR_BAYES: f64 = 13.0 / 24.0;
pub const STATE_MODEL_GIVEN: f64 = 73.0 / 89.0;
pub const STATE_CHAIN_RATIO: f64 = 65.0 / 73.0;
/// Posterior identity-gain vulnerability of [`decomposition_hyper`].
pub const DECOMPOSITION_POSTERIOR: f64 = 0.75;

/// `(V(prior), V_E, V_S)` per environment, for Bayes and for [`GAIN_B`].
pub const GAIN_TABLE: [(&str, [f64; 3], [f64; 3]); 3] = [
    ("env1", [0.5, 1.0, 0.5], [4.75, 5.25, 95.0 / 105.0]),
    ("env2", [0.5, 0.5, 1.0], [4.75, 4.75, 1.0]),
    ("env3", [0.95, 0.95, 1.0], [0.95, 0.975, 38.0 / 39.0]),
];

// ---------------------------------------------------------------- oracles

/// Gain rows per guess; `None` is Bayes.
pub type Gain = Option<Matrix>;

pub fn gain_of(m: &VulnerabilityMeasure) -> Gain {
    match m {
        VulnerabilityMeasure::Bayes => None,
        VulnerabilityMeasure::Gain(g) => Some(g.gain().rows().into_iter().map(|r| r.to_vec()).collect()),
    }
}

pub fn oracle_v(g: &Gain, p: &[f64]) -> f64 {
    match g {
        None => p.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Some(rows) => {
            let mut best = f64::NEG_INFINITY;
            for row in rows {
                let mut s = 0.0;
                for x in 0..p.len() {
                    s += row[x] * p[x];
                }
                if s > best {
                    best = s;
                }
            }
            best
        }
    }
}

/// Vulnerability of an unnormalized vector: `V(c p) = c V(p)`.
pub fn oracle_v_mass(g: &Gain, col: &[f64]) -> f64 {
    let mass: f64 = col.iter().sum();
    if mass <= 0.0 {
        return 0.0;
    }
    let p: Vec<f64> = col.iter().map(|v| v / mass).collect();
    mass * oracle_v(g, &p)
}

pub struct PlainHyper {
    pub outer: Vec<f64>,
    pub inners: Matrix,
}

pub fn plain(h: &Hyper) -> PlainHyper {
    PlainHyper {
        outer: h.outer().to_vec(),
        inners: h.inners().iter().map(|d| d.probs().to_vec()).collect(),
    }
}

pub fn oracle_prior(h: &PlainHyper) -> Vec<f64> {
    let n = h.inners[0].len();
    let mut p = vec![0.0; n];
    for (w, inner) in h.outer.iter().zip(&h.inners) {
        for x in 0..n {
            p[x] += w * inner[x];
        }
    }
    p
}

pub fn oracle_joint(h: &PlainHyper) -> Matrix {
    let n = h.inners[0].len();
    (0..n)
        .map(|x| {
            h.outer
                .iter()
                .zip(&h.inners)
                .map(|(w, inner)| w * inner[x])
                .collect()
        })
        .collect()
}

pub fn oracle_env_v(g: &Gain, h: &PlainHyper) -> f64 {
    h.outer
        .iter()
        .zip(&h.inners)
        .map(|(w, inner)| w * oracle_v(g, inner))
        .sum()
}

/// `V_E(E . A)` as the sum of the vulnerabilities of the columns of
/// `[[E]] A`.
pub fn oracle_model_v(g: &Gain, h: &PlainHyper, a: &Matrix) -> f64 {
    let n = h.inners[0].len();
    let m = a[0].len();
    (0..m)
        .map(|j| {
            let col: Vec<f64> = (0..n)
                .map(|x| {
                    (0..h.outer.len())
                        .map(|i| h.outer[i] * a[i][j] * h.inners[i][x])
                        .sum()
                })
                .collect();
            oracle_v_mass(g, &col)
        })
        .sum()
}

/// Recursive expectation down to the leaves.
pub fn oracle_vn(g: &Gain, h: &HigherHyper) -> f64 {
    match h {
        HigherHyper::Leaf(d) => oracle_v(g, d.probs()),
        HigherHyper::Node { outer, children } => outer
            .iter()
            .zip(children)
            .map(|(w, c)| if *w > 0.0 { w * oracle_vn(g, c) } else { 0.0 })
            .sum(),
    }
}

/// Bayes environmental vulnerability of a corpus grouped by `block`:
/// the sum over blocks of the count of the block's most common secret,
/// over the corpus size.
pub fn oracle_block_bayes(secrets: &[&str], block: &[&str]) -> f64 {
    let mut counts: HashMap<(&str, &str), usize> = HashMap::new();
    for (s, b) in secrets.iter().zip(block) {
        *counts.entry((b, s)).or_default() += 1;
    }
    let mut best: HashMap<&str, usize> = HashMap::new();
    for ((b, _), c) in counts {
        let e = best.entry(b).or_default();
        *e = (*e).max(c);
    }
    best.values().sum::<usize>() as f64 / secrets.len() as f64
}

pub fn oracle_prior_bayes(secrets: &[&str]) -> f64 {
    let all = vec![""; secrets.len()];
    oracle_block_bayes(secrets, &all)
}

/// Slack for an attribute independent of the secrets: the 99th percentile
/// of `V_E(M) - V(prior)` when the fixture's attribute values are randomly
/// permuted over its records, which keeps the block sizes exact.
pub fn independence_slack(secrets: &[&str], attribute: &[&str], rounds: usize, seed: u64) -> f64 {
    let prior = oracle_prior_bayes(secrets);
    let mut values = attribute.to_vec();
    let mut rng = rng_from(seed);
    let mut gaps: Vec<f64> = (0..rounds)
        .map(|_| {
            values.shuffle(&mut rng);
            oracle_block_bayes(secrets, &values) - prior
        })
        .collect();
    gaps.sort_by(f64::total_cmp);
    gaps[(rounds * 99).div_ceil(100) - 1]
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| {
            assert_eq!(r.len(), s.len());
            r.iter().zip(s).map(|(x, y)| (x - y).abs())
        })
        .fold(0.0, f64::max)
}

pub fn to_matrix(m: &Array2<f64>) -> Matrix {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}
