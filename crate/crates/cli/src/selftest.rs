//! Seeded spot-check of the core identities, replayable through
//! `HYPERQIF_SEED`.

use serde_json::{json, Value};

use hyperqif::testkit::{self, measure_family, random_aggregation, random_higher, random_hyper};
use hyperqif::{
    apply_aggregation, collapse, decompose_security, environmental_vulnerability, hyper_vulnerability,
    model_vulnerability, vulnerability_n,
};

pub struct Report {
    pub seed: u64,
    pub instances: usize,
    pub checks: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
}

impl Report {
    pub fn to_json(&self) -> Value {
        json!({
            "seed": self.seed,
            "instances": self.instances,
            "checks": self.checks,
            "failures": self.failures,
            "first_failure": self.first_failure,
        })
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            self.first_failure.get_or_insert_with(what);
        }
    }
}

pub fn run(instances: usize, tol: f64) -> Report {
    let seed = testkit::seed();
    let mut rng = testkit::rng_from(seed);
    let mut r = Report {
        seed,
        instances,
        checks: 0,
        failures: 0,
        first_failure: None,
    };
    for k in 0..instances {
        let n = 1 + k % 5;
        let space = testkit::space(n);
        let env = random_hyper(&mut rng, &space, 1 + k % 6);
        let a = random_aggregation(&mut rng, env.len(), 1 + (k / 3) % 4);
        let model = apply_aggregation(&env, &a).expect("matching dims");
        for m in measure_family(&mut rng, &space) {
            let prior_v = m.vulnerability(&env.prior()).expect("same space");
            let env_v = environmental_vulnerability(&m, &env).expect("same space");
            r.check(prior_v <= env_v + tol, || {
                format!("instance {k}: Jensen bound under {}", m.name())
            });
            if let Ok(d) = decompose_security(&m, &env) {
                r.check(
                    (d.by_aggregation * d.by_strategy - d.perceived).abs() <= tol,
                    || format!("instance {k}: product identity under {}", m.name()),
                );
            }
            let via_model = environmental_vulnerability(&m, &model).expect("same space");
            let direct = model_vulnerability(&m, &env, &a).expect("same space");
            r.check((via_model - direct).abs() <= tol, || {
                format!("instance {k}: model vulnerability under {}", m.name())
            });
            r.check(via_model <= env_v + tol, || {
                format!("instance {k}: refinement under {}", m.name())
            });
        }
        let h = random_higher(&mut rng, &space, 2 + k % 3, 3);
        let m = hyperqif::VulnerabilityMeasure::Bayes;
        let flat = collapse(&h).expect("depth >= 2");
        let lhs = vulnerability_n(&m, &h).expect("same space");
        let rhs = hyper_vulnerability(&m, &flat).expect("same space");
        r.check((lhs - rhs).abs() <= tol, || format!("instance {k}: collapse"));
    }
    r
}
