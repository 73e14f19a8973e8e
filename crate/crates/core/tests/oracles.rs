//! The brute-force oracles reproduce every frozen value, and the library
//! agrees with the oracles on the fixtures.

mod common;

use common::*;
use rand::Rng;

use hyperqif::corpus::extract_year;
use hyperqif::testkit::rng_from;
use hyperqif::{environmental_vulnerability, Hyper, VulnerabilityMeasure};

const TOL: f64 = 1e-12;

#[test]
fn oracle_reproduces_gain_table() {
    let gb = Some(GAIN_B.iter().map(|r| r.to_vec()).collect::<Matrix>());
    for ((name, bayes, gain), env) in GAIN_TABLE.iter().zip([env1(), env2(), env3()]) {
        let h = plain(&env);
        for (g, want) in [(&None, bayes), (&gb, gain)] {
            let prior_v = oracle_v(g, &oracle_prior(&h));
            let env_v = oracle_env_v(g, &h);
            let got = [prior_v, env_v, prior_v / env_v];
            for k in 0..3 {
                assert!(
                    (got[k] - want[k]).abs() < TOL,
                    "{name} cell {k}: {} vs {}",
                    got[k],
                    want[k]
                );
            }
        }
    }
}

#[test]
fn oracle_reproduces_state_values() {
    let e = plain(&state_env());
    let f = plain(&state_model());
    assert!(max_abs_diff(&oracle_joint(&e), &state_env_joint()) < TOL);
    assert!(max_abs_diff(&oracle_joint(&f), &state_model_joint()) < TOL);
    let p = oracle_prior(&e);
    assert!((p[0] - STATE_PRIOR[0]).abs() < TOL && (p[1] - STATE_PRIOR[1]).abs() < TOL);

    let a: Matrix = STATE_OF
        .iter()
        .map(|&j| (0..3).map(|c| if c == j { 1.0 } else { 0.0 }).collect())
        .collect();
    assert!((oracle_env_v(&None, &e) - STATE_ENV_BAYES).abs() < TOL);
    assert!((oracle_env_v(&None, &f) - STATE_MODEL_BAYES).abs() < TOL);
    assert!((oracle_model_v(&None, &e, &a) - STATE_MODEL_BAYES).abs() < TOL);
    assert!((oracle_v(&None, &p) - STATE_PRIOR_BAYES).abs() < TOL);
    assert!((STATE_MODEL_BAYES / STATE_ENV_BAYES - STATE_MODEL_GIVEN).abs() < TOL);
    assert!((STATE_PRIOR_BAYES / STATE_MODEL_BAYES - STATE_CHAIN_RATIO).abs() < TOL);
    // the model bayes value written out block by block
    let by_block = 0.2 * 0.5 + 0.5 * (13.0 / 20.0) + 0.3 * (11.0 / 18.0);
    assert!((by_block - STATE_MODEL_BAYES).abs() < TOL);
}

#[test]
fn oracle_reproduces_decomposition_values() {
    let h = plain(&decomposition_hyper());
    let joint = oracle_joint(&h);
    let want: Matrix = DECOMPOSITION_JOINT.iter().map(|r| r.to_vec()).collect();
    assert!(max_abs_diff(&joint, &want) < TOL);
    let prior = oracle_prior(&h);
    assert_eq!(prior, DECOMPOSITION_PRIOR.to_vec());
    for x in 0..2 {
        for j in 0..3 {
            assert!((joint[x][j] / prior[x] - DECOMPOSITION_DELTA[x][j]).abs() < TOL);
        }
    }
    // identity gain: sum over inners of the largest joint entry
    let posterior: f64 = (0..3).map(|j| joint[0][j].max(joint[1][j])).sum();
    assert!((posterior - DECOMPOSITION_POSTERIOR).abs() < TOL);
}

#[test]
fn oracle_reproduces_chain_joint_values() {
    let rows: f64 = CHAIN_JOINT[0]
        .iter()
        .sum::<f64>()
        .max(CHAIN_JOINT[1].iter().sum());
    let given: f64 = CHAIN_JOINT.iter().map(|r| r[0].max(r[1])).sum();
    let joint = CHAIN_JOINT.iter().flatten().copied().fold(0.0, f64::max);
    assert_eq!((rows, given, joint), (0.75, 0.75, 0.5));
    assert_ne!(rows * given, joint);
}

#[test]
fn leftmost_year_matches_substring_scan() {
    fn scan(s: &str) -> Option<String> {
        let chars: Vec<char> = s.chars().collect();
        for i in 0..chars.len() {
            if i + 4 <= chars.len() {
                let w: String = chars[i..i + 4].iter().collect();
                if let Ok(y) = w.parse::<u32>() {
                    if w.chars().all(|c| c.is_ascii_digit()) && (1917..=1995).contains(&y) {
                        return Some(w);
                    }
                }
            }
        }
        None
    }
    let mut rng = rng_from(17);
    let alphabet: Vec<char> = "0123456789ab9_ñ".chars().collect();
    for _ in 0..5000 {
        let len = rng.random_range(0..12);
        let s: String = (0..len)
            .map(|_| alphabet[rng.random_range(0..alphabet.len())])
            .collect();
        assert_eq!(extract_year(&s).map(str::to_string), scan(&s), "{s}");
    }
    for s in ["patricia1983", "dragon", "19171995x"] {
        assert_eq!(extract_year(s).map(str::to_string), scan(s));
    }
}

/// `V_E(E) = V(prior)` does not force `E` to be a point hyper.
#[test]
fn equal_vulnerabilities_without_point_hyper() {
    let space = x2();
    // both copies of the same inner: equal, but reducible to a point
    let doubled = hyper_on(&space, &[0.5, 0.5], &[&SIGMA3, &SIGMA3]);
    let m = VulnerabilityMeasure::Bayes;
    assert_eq!(environmental_vulnerability(&m, &doubled).unwrap(), 0.5);
    assert!(doubled.approx_eq(&Hyper::point(doubled.prior()), 1e-12));

    let mut rng = rng_from(5);
    let mut witness = None;
    for _ in 0..10_000 {
        let a: f64 = rng.random();
        let b: f64 = rng.random();
        let w: f64 = rng.random_range(0.05..0.95);
        let h = plain(&hyper_on(&space, &[w, 1.0 - w], &[&[a, 1.0 - a], &[b, 1.0 - b]]));
        let gap = oracle_env_v(&None, &h) - oracle_v(&None, &oracle_prior(&h));
        if gap.abs() < 1e-12 && (a - b).abs() > 0.1 {
            witness = Some((w, a, b));
            break;
        }
    }
    let (w, a, b) = witness.expect("search finds a witness");
    let h = hyper_on(&space, &[w, 1.0 - w], &[&[a, 1.0 - a], &[b, 1.0 - b]]);
    let env_v = environmental_vulnerability(&m, &h).unwrap();
    assert!((env_v - m.vulnerability(&h.prior()).unwrap()).abs() < 1e-12);
    assert!(!h.approx_eq(&Hyper::point(h.prior()), 1e-6));
    assert_eq!(h.reduce().len(), 2);
}

#[test]
fn library_matches_oracle_on_fixtures() {
    for env in [
        env1(),
        env2(),
        env3(),
        state_env(),
        state_model(),
        decomposition_hyper(),
    ] {
        let h = plain(&env);
        for m in [VulnerabilityMeasure::Bayes, gain_b()] {
            let g = gain_of(&m);
            let got = environmental_vulnerability(&m, &env).unwrap();
            assert!((got - oracle_env_v(&g, &h)).abs() < TOL);
        }
        let joint = to_matrix(env.joint_matrix().matrix());
        assert!(max_abs_diff(&joint, &oracle_joint(&h)) < TOL);
    }
}
