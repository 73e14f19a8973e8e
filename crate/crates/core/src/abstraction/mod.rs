//! Abstractions of environments.
//!
//! An aggregation matrix `A` is a channel from the inners of a concrete
//! hyper `E` to the inners of a coarser model, indexed `(concrete row,
//! abstract column) = p(abstract | concrete)`. The model is `M = E . A`,
//! computed on joint matrices as `[[M]] = [[E]] A`. `M` abstracts `E`
//! (`M ⊑ E`) when such an `A` exists.

mod simplex;

use ndarray::Array2;

use crate::dist::{Channel, SecretSpace};
use crate::envanalysis::environmental_vulnerability;
use crate::error::{QifError, Result};
use crate::hyper::Hyper;
use crate::measures::VulnerabilityMeasure;

/// Feasibility tolerance for refinement checks.
pub const EPS_FEAS: f64 = 1e-7;

/// A row-stochastic `|inners(E)| x |inners(M)|` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregationMatrix(Channel);

impl AggregationMatrix {
    pub fn new(channel: Channel) -> Self {
        AggregationMatrix(channel)
    }

    pub fn from_matrix(matrix: Array2<f64>) -> Result<Self> {
        let (r, c) = matrix.dim();
        if r == 0 || c == 0 {
            return Err(QifError::DimensionMismatch("empty aggregation matrix".into()));
        }
        Ok(AggregationMatrix(Channel::new(
            SecretSpace::indexed("s", r)?,
            SecretSpace::indexed("s", c)?,
            matrix,
        )?))
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_matrix(Array2::eye(n))
    }

    /// The single-column matrix sending every strategy to one.
    pub fn noninterferent(n: usize) -> Result<Self> {
        Self::from_matrix(Array2::ones((n, 1)))
    }

    /// Row `i` is a point mass on column `assignment[i]`.
    pub fn deterministic(assignment: &[usize], columns: usize) -> Result<Self> {
        let mut m = Array2::zeros((assignment.len(), columns));
        for (i, &j) in assignment.iter().enumerate() {
            if j >= columns {
                return Err(QifError::DimensionMismatch(format!(
                    "row {i} maps to column {j} of {columns}"
                )));
            }
            m[[i, j]] = 1.0;
        }
        Self::from_matrix(m)
    }

    pub fn channel(&self) -> &Channel {
        &self.0
    }

    pub fn matrix(&self) -> &Array2<f64> {
        self.0.matrix()
    }

    pub fn rows(&self) -> usize {
        self.matrix().nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix().ncols()
    }
}

impl From<AggregationMatrix> for Channel {
    fn from(a: AggregationMatrix) -> Channel {
        a.0
    }
}

#[derive(Clone, Debug)]
pub struct RefinementWitness {
    pub holds: bool,
    pub matrix: Option<AggregationMatrix>,
    /// Max-norm violation of `[[E]] A = [[M]]` and of the row sums at the
    /// solution found.
    pub residual: f64,
}

fn check_dims(hyper: &Hyper, a: &AggregationMatrix) -> Result<()> {
    if a.rows() != hyper.len() {
        return Err(QifError::DimensionMismatch(format!(
            "aggregation matrix has {} rows, hyper has {} inners",
            a.rows(),
            hyper.len()
        )));
    }
    Ok(())
}

/// `H . A`. The prior is preserved; abstract strategies with no mass are
/// dropped.
pub fn apply_aggregation(hyper: &Hyper, a: &AggregationMatrix) -> Result<Hyper> {
    check_dims(hyper, a)?;
    let joint = hyper.joint_array().dot(a.matrix());
    Ok(Hyper::from_joint_matrix(hyper.space().clone(), &joint))
}

fn residual_of(je: &Array2<f64>, jm: &Array2<f64>, a: &Array2<f64>) -> f64 {
    let rows = a
        .rows()
        .into_iter()
        .map(|r| (r.sum() - 1.0).abs())
        .fold(0.0, f64::max);
    let joint = (je.dot(a) - jm).iter().map(|v| v.abs()).fold(0.0, f64::max);
    rows.max(joint)
}

/// Searches for a row-stochastic `A` with `[[E]] A = [[M]]` by linear
/// feasibility. The witness returned is a basic solution; it is not
/// canonical when several exist.
pub fn check_abstracts(model: &Hyper, env: &Hyper) -> Result<RefinementWitness> {
    check_abstracts_within(model, env, EPS_FEAS)
}

/// [`check_abstracts`] with an explicit residual tolerance.
pub fn check_abstracts_within(model: &Hyper, env: &Hyper, tol: f64) -> Result<RefinementWitness> {
    if model.space() != env.space() {
        return Err(QifError::SpaceMismatch);
    }
    let je = env.joint_array();
    let jm = model.joint_array();
    let (nx, n) = je.dim();
    let m = jm.ncols();

    // variable A(i, j) sits at column i * m + j
    let mut lhs = Array2::zeros((n + nx * m, n * m));
    let mut rhs = vec![0.0; n + nx * m];
    for i in 0..n {
        for j in 0..m {
            lhs[[i, i * m + j]] = 1.0;
        }
        rhs[i] = 1.0;
    }
    for x in 0..nx {
        for j in 0..m {
            let r = n + x * m + j;
            for i in 0..n {
                lhs[[r, i * m + j]] = je[[x, i]];
            }
            rhs[r] = jm[[x, j]];
        }
    }
    let sol = simplex::phase_one(&lhs, &rhs);
    let mut a = Array2::from_shape_fn((n, m), |(i, j)| sol.x[i * m + j].max(0.0));
    let raw_residual = residual_of(&je, &jm, &a);
    if raw_residual > tol {
        return Ok(RefinementWitness {
            holds: false,
            matrix: None,
            residual: raw_residual,
        });
    }
    for mut row in a.rows_mut() {
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    let residual = residual_of(&je, &jm, &a);
    let holds = residual <= tol;
    Ok(RefinementWitness {
        holds,
        matrix: if holds {
            Some(AggregationMatrix::from_matrix(a)?)
        } else {
            None
        },
        residual,
    })
}

/// Vulnerability of the secret when the adversary reasons with
/// `M = E . A`: for each abstract strategy the adversary plays the guess
/// that is optimal for it, and is scored against the true strategies.
pub fn model_vulnerability(
    measure: &VulnerabilityMeasure,
    env: &Hyper,
    a: &AggregationMatrix,
) -> Result<f64> {
    measure.check_space(env.space())?;
    check_dims(env, a)?;
    let model = env.joint_array().dot(a.matrix());
    let mut guesses = Vec::with_capacity(model.ncols());
    for col in model.columns() {
        let mass = col.sum();
        if mass > 0.0 {
            let inner =
                crate::dist::Distribution::new(env.space().clone(), col.iter().map(|v| v / mass).collect())?;
            guesses.push(Some(measure.best_guess(&inner)?));
        } else {
            guesses.push(None);
        }
    }
    let mut total = 0.0;
    for (i, (w, strat)) in env.iter().enumerate() {
        for (j, guess) in guesses.iter().enumerate() {
            let p = a.matrix()[[i, j]];
            if let (Some(g), true) = (guess, p > 0.0) {
                total += w * p * measure.gain_of_guess(*g, strat)?;
            }
        }
    }
    Ok(total)
}

fn abstraction_matrix(model: &Hyper, env: &Hyper) -> Result<AggregationMatrix> {
    let w = check_abstracts(model, env)?;
    match w.matrix {
        Some(a) if w.holds => Ok(a),
        _ => Err(QifError::NotAnAbstraction { residual: w.residual }),
    }
}

/// [`model_vulnerability`] when only the model is known; a witness matrix
/// is recovered first. The value does not depend on which witness.
pub fn model_vulnerability_of(measure: &VulnerabilityMeasure, env: &Hyper, model: &Hyper) -> Result<f64> {
    let a = abstraction_matrix(model, env)?;
    model_vulnerability(measure, env, &a)
}

/// `V_E(M) / V_E(E)`, defined when `M ⊑ E`.
pub fn strategy_vulnerability_given(
    measure: &VulnerabilityMeasure,
    env: &Hyper,
    model: &Hyper,
) -> Result<f64> {
    abstraction_matrix(model, env)?;
    let env_v = environmental_vulnerability(measure, env)?;
    if env_v <= 0.0 {
        return Err(QifError::ZeroEnvironmentalVulnerability);
    }
    Ok(environmental_vulnerability(measure, model)? / env_v)
}

/// `V_S(M'|E) / V_S(M|E)` for `M' ⊑ M ⊑ E`, which equals
/// `V_E(M') / V_E(M)`.
pub fn refinement_ratio(
    measure: &VulnerabilityMeasure,
    env: &Hyper,
    model: &Hyper,
    coarser: &Hyper,
) -> Result<f64> {
    abstraction_matrix(coarser, model)?;
    let sv_model = strategy_vulnerability_given(measure, env, model)?;
    let sv_coarser = strategy_vulnerability_given(measure, env, coarser)?;
    let model_v = environmental_vulnerability(measure, model)?;
    if model_v <= 0.0 || sv_model <= 0.0 {
        return Err(QifError::ZeroEnvironmentalVulnerability);
    }
    let direct = environmental_vulnerability(measure, coarser)? / model_v;
    debug_assert!((sv_coarser / sv_model - direct).abs() <= 1e-9);
    Ok(direct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Distribution;
    use crate::measures::GainFunction;
    use ndarray::array;

    fn x2() -> SecretSpace {
        SecretSpace::new(["x1", "x2"]).unwrap()
    }

    fn hyper(cols: &[[f64; 2]], outer: &[f64]) -> Hyper {
        Hyper::new(
            x2(),
            cols.iter()
                .map(|c| Distribution::new(x2(), c.to_vec()).unwrap())
                .collect(),
            outer.to_vec(),
        )
        .unwrap()
    }

    fn table2_env() -> Hyper {
        hyper(
            &[
                [1.0, 0.0],
                [0.0, 1.0],
                [0.5, 0.5],
                [0.25, 0.75],
                [0.75, 0.25],
                [1.0 / 3.0, 2.0 / 3.0],
            ],
            &[0.1, 0.1, 0.2, 0.3, 0.2, 0.1],
        )
    }

    fn a_state() -> AggregationMatrix {
        AggregationMatrix::deterministic(&[0, 0, 1, 1, 2, 2], 3).unwrap()
    }

    #[test]
    fn aggregation_by_state_gives_model_f() {
        let f = apply_aggregation(&table2_env(), &a_state()).unwrap();
        assert_eq!(f.len(), 3);
        let expect = [
            ([0.5, 0.5], 0.2),
            ([7.0 / 20.0, 13.0 / 20.0], 0.5),
            ([11.0 / 18.0, 7.0 / 18.0], 0.3),
        ];
        for ((p, w), (got_w, got)) in expect.iter().zip(f.iter()) {
            assert!((w - got_w).abs() < 1e-12);
            assert!(
                got.max_distance(&Distribution::new(x2(), p.to_vec()).unwrap())
                    .unwrap()
                    < 1e-12
            );
        }
    }

    #[test]
    fn identity_and_noninterferent_aggregations() {
        let e = table2_env();
        let same = apply_aggregation(&e, &AggregationMatrix::identity(6).unwrap()).unwrap();
        assert!(same.approx_eq(&e, 1e-12));
        let point = apply_aggregation(&e, &AggregationMatrix::noninterferent(6).unwrap()).unwrap();
        assert!(point.approx_eq(&Hyper::point(e.prior()), 1e-12));
    }

    #[test]
    fn aggregation_dimension_errors() {
        let e = table2_env();
        assert!(matches!(
            apply_aggregation(&e, &AggregationMatrix::identity(3).unwrap()),
            Err(QifError::DimensionMismatch(_))
        ));
        assert!(matches!(
            AggregationMatrix::from_matrix(array![[0.5, 0.4]]),
            Err(QifError::NotStochastic { .. })
        ));
        assert!(AggregationMatrix::deterministic(&[0, 3], 2).is_err());
    }

    #[test]
    fn check_abstracts_examples() {
        let e = table2_env();
        let f = apply_aggregation(&e, &a_state()).unwrap();
        let w = check_abstracts(&f, &e).unwrap();
        assert!(w.holds && w.residual <= EPS_FEAS);
        let a = w.matrix.unwrap();
        assert!(apply_aggregation(&e, &a).unwrap().approx_eq(&f, 1e-9));

        let w = check_abstracts(&Hyper::point(e.prior()), &e).unwrap();
        assert!(w.holds);

        let e1 = hyper(&[[1.0, 0.0], [0.0, 1.0]], &[0.5, 0.5]);
        let e2 = hyper(&[[0.5, 0.5]], &[1.0]);
        let w = check_abstracts(&e1, &e2).unwrap();
        assert!(!w.holds && w.matrix.is_none() && w.residual > EPS_FEAS);
        assert!(check_abstracts(&e2, &e1).unwrap().holds);
    }

    #[test]
    fn model_vulnerability_examples() {
        let e = table2_env();
        let b = VulnerabilityMeasure::Bayes;
        let id = model_vulnerability(&b, &e, &AggregationMatrix::identity(6).unwrap()).unwrap();
        assert!((id - environmental_vulnerability(&b, &e).unwrap()).abs() < 1e-12);
        let zero = model_vulnerability(&b, &e, &AggregationMatrix::noninterferent(6).unwrap()).unwrap();
        assert!((zero - 13.0 / 24.0).abs() < 1e-12);
        // 2/10 * 1/2 + 5/10 * 13/20 + 3/10 * 11/18
        let state = model_vulnerability(&b, &e, &a_state()).unwrap();
        assert!((state - 73.0 / 120.0).abs() < 1e-12);
    }

    #[test]
    fn model_vulnerability_is_witness_independent() {
        // duplicated inner: the first two strategies may be split freely
        let e = hyper(&[[0.8, 0.2], [0.8, 0.2], [0.1, 0.9]], &[0.25, 0.25, 0.5]);
        let m = hyper(&[[0.8, 0.2], [0.1, 0.9]], &[0.5, 0.5]);
        let g = VulnerabilityMeasure::Gain(
            GainFunction::new(x2(), x2(), array![[2.0, 0.0], [0.0, 1.0]]).unwrap(),
        );
        let a1 = AggregationMatrix::from_matrix(array![[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let lp = check_abstracts(&m, &e).unwrap().matrix.unwrap();
        let v1 = model_vulnerability(&g, &e, &a1).unwrap();
        let v2 = model_vulnerability(&g, &e, &lp).unwrap();
        let v3 = model_vulnerability_of(&g, &e, &m).unwrap();
        assert!((v1 - v2).abs() < 1e-9 && (v1 - v3).abs() < 1e-9);
    }

    #[test]
    fn strategy_given_examples() {
        let e = table2_env();
        let b = VulnerabilityMeasure::Bayes;
        assert!((strategy_vulnerability_given(&b, &e, &e).unwrap() - 1.0).abs() < 1e-9);
        let p = Hyper::point(e.prior());
        let sv = crate::envanalysis::strategy_vulnerability(&b, &e).unwrap();
        assert!((strategy_vulnerability_given(&b, &e, &p).unwrap() - sv).abs() < 1e-9);
        let f = apply_aggregation(&e, &a_state()).unwrap();
        assert!((strategy_vulnerability_given(&b, &e, &f).unwrap() - 73.0 / 89.0).abs() < 1e-9);

        let e1 = hyper(&[[1.0, 0.0], [0.0, 1.0]], &[0.5, 0.5]);
        let e2 = hyper(&[[0.5, 0.5]], &[1.0]);
        assert!(matches!(
            strategy_vulnerability_given(&b, &e2, &e1),
            Err(QifError::NotAnAbstraction { .. })
        ));
    }

    #[test]
    fn refinement_ratio_examples() {
        let e = table2_env();
        let b = VulnerabilityMeasure::Bayes;
        let f = apply_aggregation(&e, &a_state()).unwrap();
        let p = Hyper::point(e.prior());
        assert!((refinement_ratio(&b, &e, &f, &f).unwrap() - 1.0).abs() < 1e-12);
        let sv = crate::envanalysis::strategy_vulnerability(&b, &e).unwrap();
        assert!((refinement_ratio(&b, &e, &e, &p).unwrap() - sv).abs() < 1e-9);
        assert!((refinement_ratio(&b, &e, &f, &p).unwrap() - 65.0 / 73.0).abs() < 1e-9);
        assert!(matches!(
            refinement_ratio(&b, &e, &p, &f),
            Err(QifError::NotAnAbstraction { .. })
        ));
    }
}
