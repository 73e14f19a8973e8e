//! Gain functions and the vulnerability measures they induce.
//!
//! Only the vulnerability (convex, higher is worse for the defender)
//! orientation is provided. Guess sets are finite.

use ndarray::{Array2, Axis};

use crate::dist::{Channel, Distribution, JointDistribution, SecretSpace};
use crate::error::{QifError, Result};
use crate::hyper::Hyper;

/// Gain `g(w, x)` of guessing `w` when the secret is `x`, stored as a
/// `guesses x secrets` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct GainFunction {
    guesses: SecretSpace,
    space: SecretSpace,
    gain: Array2<f64>,
}

impl GainFunction {
    /// Every column must hold at least one non-negative entry, which keeps
    /// `V_g` non-negative on every prior.
    pub fn new(guesses: SecretSpace, space: SecretSpace, gain: Array2<f64>) -> Result<Self> {
        if gain.dim() != (guesses.len(), space.len()) {
            return Err(QifError::DimensionMismatch(format!(
                "gain matrix is {:?}, labels give {}x{}",
                gain.dim(),
                guesses.len(),
                space.len()
            )));
        }
        if let Some(i) = gain.iter().position(|v| !v.is_finite()) {
            return Err(QifError::NonFinite(i));
        }
        for (x, col) in gain.axis_iter(Axis(1)).enumerate() {
            if col.iter().all(|&v| v < 0.0) {
                return Err(QifError::InvalidGain(format!(
                    "column for secret `{}` has no non-negative entry",
                    space.label(x)
                )));
            }
        }
        Ok(GainFunction { guesses, space, gain })
    }

    /// The identity gain: one for a correct guess, zero otherwise.
    pub fn identity(space: SecretSpace) -> Self {
        let n = space.len();
        GainFunction {
            guesses: space.clone(),
            space,
            gain: Array2::eye(n),
        }
    }

    pub fn guesses(&self) -> &SecretSpace {
        &self.guesses
    }

    pub fn space(&self) -> &SecretSpace {
        &self.space
    }

    pub fn gain(&self) -> &Array2<f64> {
        &self.gain
    }

    pub(crate) fn expected_gain(&self, guess: usize, probs: &[f64]) -> f64 {
        self.gain.row(guess).iter().zip(probs).map(|(g, p)| g * p).sum()
    }

    /// Index and value of the best guess against `probs`; ties go to the
    /// lowest index.
    pub(crate) fn best(&self, probs: &[f64]) -> (usize, f64) {
        let mut best = (0, self.expected_gain(0, probs));
        for w in 1..self.guesses.len() {
            let v = self.expected_gain(w, probs);
            if v > best.1 {
                best = (w, v);
            }
        }
        best
    }

    fn check(&self, dist: &Distribution) -> Result<()> {
        if dist.space() != &self.space {
            return Err(QifError::SpaceMismatch);
        }
        Ok(())
    }
}

/// Index of the largest entry, lowest index on ties.
pub(crate) fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub enum VulnerabilityMeasure {
    Bayes,
    Gain(GainFunction),
}

impl VulnerabilityMeasure {
    pub fn name(&self) -> &'static str {
        match self {
            VulnerabilityMeasure::Bayes => "bayes",
            VulnerabilityMeasure::Gain(_) => "g",
        }
    }

    /// Built-ins selectable by name. `identity` needs the secret space it
    /// ranges over.
    pub fn builtin(name: &str, space: &SecretSpace) -> Option<Self> {
        match name {
            "bayes" => Some(VulnerabilityMeasure::Bayes),
            "identity" => Some(VulnerabilityMeasure::Gain(GainFunction::identity(space.clone()))),
            _ => None,
        }
    }

    pub fn check_space(&self, space: &SecretSpace) -> Result<()> {
        match self {
            VulnerabilityMeasure::Bayes => Ok(()),
            VulnerabilityMeasure::Gain(g) if g.space() == space => Ok(()),
            VulnerabilityMeasure::Gain(_) => Err(QifError::SpaceMismatch),
        }
    }

    pub fn vulnerability(&self, dist: &Distribution) -> Result<f64> {
        match self {
            VulnerabilityMeasure::Bayes => Ok(bayes_vulnerability(dist)),
            VulnerabilityMeasure::Gain(g) => g_vulnerability(g, dist),
        }
    }

    /// Index of the adversary's optimal guess. For Bayes, guesses are the
    /// secrets themselves.
    pub fn best_guess(&self, dist: &Distribution) -> Result<usize> {
        match self {
            VulnerabilityMeasure::Bayes => Ok(argmax(dist.probs()).0),
            VulnerabilityMeasure::Gain(g) => {
                g.check(dist)?;
                Ok(g.best(dist.probs()).0)
            }
        }
    }

    /// Expected gain of a fixed guess when secrets follow `dist`.
    pub fn gain_of_guess(&self, guess: usize, dist: &Distribution) -> Result<f64> {
        match self {
            VulnerabilityMeasure::Bayes => Ok(dist.probs()[guess]),
            VulnerabilityMeasure::Gain(g) => {
                g.check(dist)?;
                Ok(g.expected_gain(guess, dist.probs()))
            }
        }
    }
}

/// `max_w sum_x prior(x) g(w, x)`.
pub fn g_vulnerability(g: &GainFunction, prior: &Distribution) -> Result<f64> {
    g.check(prior)?;
    Ok(g.best(prior.probs()).1)
}

/// Probability of guessing the secret in one try.
pub fn bayes_vulnerability(prior: &Distribution) -> f64 {
    argmax(prior.probs()).1
}

pub fn optimal_guess<'a>(g: &'a GainFunction, prior: &Distribution) -> Result<&'a str> {
    g.check(prior)?;
    Ok(g.guesses.label(g.best(prior.probs()).0))
}

/// Outer-weighted expectation of the measure over the inners.
pub fn hyper_vulnerability(measure: &VulnerabilityMeasure, hyper: &Hyper) -> Result<f64> {
    measure.check_space(hyper.space())?;
    hyper
        .outer()
        .iter()
        .zip(hyper.inners())
        .map(|(w, inner)| Ok(w * measure.vulnerability(inner)?))
        .sum()
}

/// `sum_y max_w sum_x prior(x) C(x, y) g(w, x)`, computed on the joint
/// without building the hyper.
pub fn posterior_g_vulnerability(g: &GainFunction, prior: &Distribution, channel: &Channel) -> Result<f64> {
    g.check(prior)?;
    if prior.space() != channel.inputs() {
        return Err(QifError::SpaceMismatch);
    }
    let c = channel.matrix();
    let mut total = 0.0;
    let mut column = vec![0.0; prior.len()];
    for y in 0..c.ncols() {
        for (x, slot) in column.iter_mut().enumerate() {
            *slot = prior.probs()[x] * c[[x, y]];
        }
        total += g.best(&column).1;
    }
    Ok(total)
}

/// Bayes vulnerability of guessing the pair: the largest joint entry.
pub fn joint_bayes(joint: &JointDistribution) -> f64 {
    joint.matrix().iter().copied().fold(0.0, f64::max)
}
