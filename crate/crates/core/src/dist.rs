//! Labeled finite distributions, channels and joints.
//!
//! Every matrix in the crate is index-aligned with the label order of the
//! [`SecretSpace`] values it carries. Labels are the identity of secrets.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, Array2, Axis};

use crate::error::{QifError, Result};
use crate::hyper::Hyper;

/// Tolerance used when validating that probabilities sum to one.
pub const EPS_NORM: f64 = 1e-9;

/// An ordered set of distinct labels. Cloning is cheap.
#[derive(Clone)]
pub struct SecretSpace {
    labels: Arc<[String]>,
    index: Arc<HashMap<String, usize>>,
}

impl SecretSpace {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(QifError::EmptySpace);
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(QifError::DuplicateLabel(l.clone()));
            }
        }
        Ok(SecretSpace {
            labels: labels.into(),
            index: Arc::new(index),
        })
    }

    /// Labels `{prefix}0 .. {prefix}{n-1}`, used for positional indices such
    /// as the inners of a hyper.
    pub fn indexed(prefix: &str, n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| format!("{prefix}{i}")))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }
}

impl PartialEq for SecretSpace {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.labels, &other.labels) || self.labels == other.labels
    }
}

impl Eq for SecretSpace {}

impl fmt::Debug for SecretSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.labels.iter()).finish()
    }
}

/// Checks non-negativity and normalization, returning the renormalized
/// vector when the deviation from one is within [`EPS_NORM`].
pub(crate) fn normalize_probs(mut probs: Vec<f64>) -> Result<Vec<f64>> {
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() {
            return Err(QifError::NonFinite(i));
        }
        if p < 0.0 {
            return Err(QifError::NegativeProbability { index: i, value: p });
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > EPS_NORM {
        return Err(QifError::NotNormalized { sum });
    }
    if sum != 1.0 {
        probs.iter_mut().for_each(|p| *p /= sum);
    }
    Ok(probs)
}

/// A probability distribution over a [`SecretSpace`]. When used by a
/// defender to generate secrets it is called a strategy.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    space: SecretSpace,
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(space: SecretSpace, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != space.len() {
            return Err(QifError::LengthMismatch {
                expected: space.len(),
                actual: probs.len(),
            });
        }
        let probs = normalize_probs(probs)?;
        Ok(Distribution { space, probs })
    }

    /// All mass on `label`.
    pub fn point(space: SecretSpace, label: &str) -> Result<Self> {
        let i = space
            .index_of(label)
            .ok_or_else(|| QifError::UnknownLabel(label.to_string()))?;
        Ok(Self::point_at(space, i))
    }

    pub(crate) fn point_at(space: SecretSpace, i: usize) -> Self {
        let mut probs = vec![0.0; space.len()];
        probs[i] = 1.0;
        Distribution { space, probs }
    }

    pub fn uniform(space: SecretSpace) -> Self {
        let n = space.len();
        Distribution {
            space,
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn space(&self) -> &SecretSpace {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, label: &str) -> Option<f64> {
        self.space.index_of(label).map(|i| self.probs[i])
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.probs.len()).filter(|&i| self.probs[i] > 0.0).collect()
    }

    /// L-infinity distance; `None` when the spaces differ.
    pub fn max_distance(&self, other: &Distribution) -> Option<f64> {
        if self.space != other.space {
            return None;
        }
        Some(
            self.probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }
}

fn check_row_stochastic(matrix: &mut Array2<f64>) -> Result<()> {
    for (r, mut row) in matrix.axis_iter_mut(Axis(0)).enumerate() {
        let v = normalize_probs(row.to_vec()).map_err(|e| match e {
            QifError::NotNormalized { sum } => QifError::NotStochastic { row: r, sum },
            other => other,
        })?;
        row.assign(&Array1::from(v));
    }
    Ok(())
}

/// A row-stochastic matrix from `inputs` to `outputs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    inputs: SecretSpace,
    outputs: SecretSpace,
    matrix: Array2<f64>,
}

impl Channel {
    pub fn new(inputs: SecretSpace, outputs: SecretSpace, mut matrix: Array2<f64>) -> Result<Self> {
        if matrix.dim() != (inputs.len(), outputs.len()) {
            return Err(QifError::DimensionMismatch(format!(
                "channel matrix is {:?}, labels give {}x{}",
                matrix.dim(),
                inputs.len(),
                outputs.len()
            )));
        }
        check_row_stochastic(&mut matrix)?;
        Ok(Channel {
            inputs,
            outputs,
            matrix,
        })
    }

    pub fn identity(space: SecretSpace) -> Self {
        let n = space.len();
        Channel {
            inputs: space.clone(),
            outputs: space,
            matrix: Array2::eye(n),
        }
    }

    /// The channel with a single output column: it leaks nothing.
    pub fn noninterferent(inputs: SecretSpace) -> Self {
        let n = inputs.len();
        Channel {
            inputs,
            outputs: SecretSpace::new(["*"]).expect("single label"),
            matrix: Array2::ones((n, 1)),
        }
    }

    pub fn inputs(&self) -> &SecretSpace {
        &self.inputs
    }

    pub fn outputs(&self) -> &SecretSpace {
        &self.outputs
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn is_deterministic(&self) -> bool {
        self.matrix.axis_iter(Axis(0)).all(|row| {
            row.iter().filter(|&&v| v == 1.0).count() == 1 && row.iter().all(|&v| v == 0.0 || v == 1.0)
        })
    }
}

/// A joint distribution over `rows x cols`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    rows: SecretSpace,
    cols: SecretSpace,
    matrix: Array2<f64>,
}

/// Marginals and conditionals of a joint. `given_row` maps each row label
/// to a distribution on columns; `given_col` maps each column label to a
/// distribution on rows.
#[derive(Clone, Debug)]
pub struct Marginals {
    pub row: Distribution,
    pub col: Distribution,
    pub given_row: Channel,
    pub given_col: Channel,
}

impl JointDistribution {
    pub fn new(rows: SecretSpace, cols: SecretSpace, matrix: Array2<f64>) -> Result<Self> {
        if matrix.dim() != (rows.len(), cols.len()) {
            return Err(QifError::DimensionMismatch(format!(
                "joint matrix is {:?}, labels give {}x{}",
                matrix.dim(),
                rows.len(),
                cols.len()
            )));
        }
        let flat = normalize_probs(matrix.iter().copied().collect())?;
        let matrix = Array2::from_shape_vec(matrix.dim(), flat).expect("same shape");
        Ok(JointDistribution { rows, cols, matrix })
    }

    /// `p(x, y) = prior(x) * channel(x, y)`.
    pub fn from_prior_and_channel(prior: &Distribution, channel: &Channel) -> Result<Self> {
        if prior.space() != channel.inputs() {
            return Err(QifError::SpaceMismatch);
        }
        let d = Array1::from(prior.probs().to_vec());
        let matrix = &channel.matrix * &d.insert_axis(Axis(1));
        Self::new(channel.inputs.clone(), channel.outputs.clone(), matrix)
    }

    pub fn rows(&self) -> &SecretSpace {
        &self.rows
    }

    pub fn cols(&self) -> &SecretSpace {
        &self.cols
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn transpose(&self) -> Self {
        JointDistribution {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
            matrix: self.matrix.t().to_owned(),
        }
    }

    pub fn row_marginal(&self) -> Distribution {
        let sums = self.matrix.sum_axis(Axis(1)).to_vec();
        Distribution::new(self.rows.clone(), sums).expect("marginal of a valid joint")
    }

    pub fn col_marginal(&self) -> Distribution {
        let sums = self.matrix.sum_axis(Axis(0)).to_vec();
        Distribution::new(self.cols.clone(), sums).expect("marginal of a valid joint")
    }

    /// Zero-mass rows and columns get a uniform conditional.
    pub fn marginals_and_conditionals(&self) -> Marginals {
        let row = self.row_marginal();
        let col = self.col_marginal();
        let given_row = conditional_rows(&self.matrix, row.probs());
        let given_col = conditional_rows(&self.matrix.t().to_owned(), col.probs());
        Marginals {
            given_row: Channel::new(self.rows.clone(), self.cols.clone(), given_row)
                .expect("conditionals are stochastic"),
            given_col: Channel::new(self.cols.clone(), self.rows.clone(), given_col)
                .expect("conditionals are stochastic"),
            row,
            col,
        }
    }
}

/// Divides each row by its marginal, filling zero-marginal rows uniformly.
pub(crate) fn conditional_rows(matrix: &Array2<f64>, marginal: &[f64]) -> Array2<f64> {
    let (n, m) = matrix.dim();
    let mut out = Array2::zeros((n, m));
    for i in 0..n {
        if marginal[i] > 0.0 {
            let s: f64 = matrix.row(i).sum();
            for j in 0..m {
                out[[i, j]] = matrix[[i, j]] / s;
            }
        } else {
            out.row_mut(i).fill(1.0 / m as f64);
        }
    }
    out
}

pub fn make_distribution(space: SecretSpace, probs: Vec<f64>) -> Result<Distribution> {
    Distribution::new(space, probs)
}

pub fn point_distribution(space: SecretSpace, label: &str) -> Result<Distribution> {
    Distribution::point(space, label)
}

pub fn joint_from(prior: &Distribution, channel: &Channel) -> Result<JointDistribution> {
    JointDistribution::from_prior_and_channel(prior, channel)
}

/// The hyper `[prior, channel]`: outer is the output distribution, inners
/// are the posteriors. Outputs with zero probability are dropped.
pub fn push_through(prior: &Distribution, channel: &Channel) -> Result<Hyper> {
    let joint = joint_from(prior, channel)?;
    Ok(Hyper::from_joint(&joint))
}

pub fn marginals_and_conditionals(joint: &JointDistribution) -> Marginals {
    joint.marginals_and_conditionals()
}
