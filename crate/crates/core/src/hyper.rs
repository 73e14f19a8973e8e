//! Hyper-distributions: distributions over distributions on secrets.
//!
//! A [`Hyper`] plays two roles: as an environment it is a distribution over
//! the strategies defenders use, and as a model it is an adversary's
//! knowledge of that environment. Inner order is kept as constructed and
//! inner labels are positional (`s0`, `s1`, ...).

use ndarray::Array2;

use crate::dist::{
    conditional_rows, normalize_probs, Channel, Distribution, JointDistribution, SecretSpace, EPS_NORM,
};
use crate::error::{QifError, Result};
use crate::measures::VulnerabilityMeasure;

#[derive(Clone, Debug, PartialEq)]
pub struct Hyper {
    space: SecretSpace,
    inners: Vec<Distribution>,
    outer: Vec<f64>,
}

impl Hyper {
    /// Validates the outer and that every inner ranges over `space`.
    /// Inners with zero outer mass are kept.
    pub fn new(space: SecretSpace, inners: Vec<Distribution>, outer: Vec<f64>) -> Result<Self> {
        if inners.len() != outer.len() {
            return Err(QifError::LengthMismatch {
                expected: inners.len(),
                actual: outer.len(),
            });
        }
        if inners.is_empty() {
            return Err(QifError::EmptySpace);
        }
        if inners.iter().any(|d| d.space() != &space) {
            return Err(QifError::SpaceMismatch);
        }
        let outer = normalize_probs(outer)?;
        Ok(Hyper { space, inners, outer })
    }

    /// `[prior]`: all outer mass on one inner.
    pub fn point(prior: Distribution) -> Self {
        Hyper {
            space: prior.space().clone(),
            inners: vec![prior],
            outer: vec![1.0],
        }
    }

    /// Outer is the column marginal, inners the normalized columns.
    /// Columns with no mass are dropped.
    pub fn from_joint(joint: &JointDistribution) -> Self {
        Self::from_joint_matrix(joint.rows().clone(), joint.matrix())
    }

    pub(crate) fn from_joint_matrix(space: SecretSpace, m: &Array2<f64>) -> Self {
        let mut inners = Vec::new();
        let mut outer = Vec::new();
        for col in m.columns() {
            let mass: f64 = col.sum();
            if mass > 0.0 {
                let probs = col.iter().map(|v| v / mass).collect();
                inners.push(Distribution::new(space.clone(), probs).expect("normalized column"));
                outer.push(mass);
            }
        }
        Hyper::new(space, inners, outer).expect("joint has unit mass")
    }

    pub fn space(&self) -> &SecretSpace {
        &self.space
    }

    pub fn inners(&self) -> &[Distribution] {
        &self.inners
    }

    pub fn outer(&self) -> &[f64] {
        &self.outer
    }

    pub fn len(&self) -> usize {
        self.inners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inners.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &Distribution)> {
        self.outer.iter().copied().zip(self.inners.iter())
    }

    /// Positional labels for the inners.
    pub fn inner_labels(&self) -> SecretSpace {
        SecretSpace::indexed("s", self.len()).expect("non-empty hyper")
    }

    /// The expected strategy: the prior consistent with this hyper.
    pub fn prior(&self) -> Distribution {
        let mut probs = vec![0.0; self.space.len()];
        for (w, inner) in self.iter() {
            for (p, q) in probs.iter_mut().zip(inner.probs()) {
                *p += w * q;
            }
        }
        Distribution::new(self.space.clone(), probs).expect("mixture of distributions")
    }

    /// `secrets x inners` matrix with entry `outer(j) * inner_j(i)`.
    pub(crate) fn joint_array(&self) -> Array2<f64> {
        let n = self.space.len();
        Array2::from_shape_fn((n, self.len()), |(i, j)| {
            self.outer[j] * self.inners[j].probs()[i]
        })
    }

    pub fn joint_matrix(&self) -> JointDistribution {
        JointDistribution::new(self.space.clone(), self.inner_labels(), self.joint_array())
            .expect("hyper joint has unit mass")
    }

    /// Splits the hyper into its prior and the channel from secrets to
    /// inners, `p(inner | secret)`. Rows for zero-prior secrets are uniform.
    pub fn decompose(&self) -> (Distribution, Channel) {
        let prior = self.prior();
        let delta = conditional_rows(&self.joint_array(), prior.probs());
        let channel = Channel::new(self.space.clone(), self.inner_labels(), delta)
            .expect("conditionals are stochastic");
        (prior, channel)
    }

    /// Canonical form: inners within `EPS_NORM` (L-infinity) of an earlier
    /// inner are merged into it; zero-mass inners are dropped. Inner
    /// positions, and therefore inner labels, are not preserved.
    pub fn reduce(&self) -> Hyper {
        let mut inners: Vec<Distribution> = Vec::new();
        let mut outer: Vec<f64> = Vec::new();
        for (w, inner) in self.iter() {
            if w <= 0.0 {
                continue;
            }
            let hit = inners
                .iter()
                .position(|r| r.max_distance(inner).is_some_and(|d| d <= EPS_NORM));
            match hit {
                Some(k) => outer[k] += w,
                None => {
                    inners.push(inner.clone());
                    outer.push(w);
                }
            }
        }
        Hyper::new(self.space.clone(), inners, outer).expect("merging keeps unit mass")
    }

    /// Multiset equality of `(inner, outer)` pairs within `tol`, after
    /// merging duplicates and dropping zero-mass inners on both sides.
    pub fn approx_eq(&self, other: &Hyper, tol: f64) -> bool {
        if self.space != other.space {
            return false;
        }
        let a = self.reduce();
        let b = other.reduce();
        if a.len() != b.len() {
            return false;
        }
        let mut used = vec![false; b.len()];
        let matched = a.iter().all(|(wa, ia)| {
            let found = b.iter().enumerate().position(|(k, (wb, ib))| {
                !used[k] && (wa - wb).abs() <= tol && ia.max_distance(ib).is_some_and(|d| d <= tol)
            });
            match found {
                Some(k) => {
                    used[k] = true;
                    true
                }
                None => false,
            }
        });
        matched
    }
}

pub fn prior_of(hyper: &Hyper) -> Distribution {
    hyper.prior()
}

pub fn point_hyper(prior: Distribution) -> Hyper {
    Hyper::point(prior)
}

pub fn joint_matrix(hyper: &Hyper) -> JointDistribution {
    hyper.joint_matrix()
}

pub fn from_joint(joint: &JointDistribution) -> Hyper {
    Hyper::from_joint(joint)
}

pub fn decompose(hyper: &Hyper) -> (Distribution, Channel) {
    hyper.decompose()
}

pub fn reduce(hyper: &Hyper) -> Hyper {
    hyper.reduce()
}

/// An object of type `D^n X`: a uniform-depth tree whose leaves are
/// distributions on secrets. A leaf has depth 1.
#[derive(Clone, Debug, PartialEq)]
pub enum HigherHyper {
    Leaf(Distribution),
    Node {
        outer: Vec<f64>,
        children: Vec<HigherHyper>,
    },
}

impl HigherHyper {
    pub fn node(outer: Vec<f64>, children: Vec<HigherHyper>) -> Result<Self> {
        if children.is_empty() {
            return Err(QifError::EmptySpace);
        }
        if outer.len() != children.len() {
            return Err(QifError::LengthMismatch {
                expected: children.len(),
                actual: outer.len(),
            });
        }
        let depth = children[0].depth();
        if children.iter().any(|c| c.depth() != depth) {
            return Err(QifError::RaggedDepth);
        }
        let space = children[0].space();
        if children.iter().any(|c| c.space() != space) {
            return Err(QifError::SpaceMismatch);
        }
        let outer = normalize_probs(outer)?;
        Ok(HigherHyper::Node { outer, children })
    }

    pub fn from_hyper(hyper: &Hyper) -> Self {
        HigherHyper::Node {
            outer: hyper.outer().to_vec(),
            children: hyper.inners().iter().cloned().map(HigherHyper::Leaf).collect(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            HigherHyper::Leaf(_) => 1,
            HigherHyper::Node { children, .. } => 1 + children[0].depth(),
        }
    }

    pub fn space(&self) -> &SecretSpace {
        match self {
            HigherHyper::Leaf(d) => d.space(),
            HigherHyper::Node { children, .. } => children[0].space(),
        }
    }

    fn leaves_into<'a>(&'a self, weight: f64, out: &mut Vec<(f64, &'a Distribution)>) {
        match self {
            HigherHyper::Leaf(d) => out.push((weight, d)),
            HigherHyper::Node { outer, children } => {
                for (w, c) in outer.iter().zip(children) {
                    c.leaves_into(weight * w, out);
                }
            }
        }
    }
}

/// Marginalizes the intermediate levels away: every reachable leaf becomes
/// an inner weighted by the product of outer probabilities on its path.
/// Leaves with zero weight are dropped.
pub fn collapse(h: &HigherHyper) -> Result<Hyper> {
    let depth = h.depth();
    if depth < 2 {
        return Err(QifError::DepthTooSmall(depth));
    }
    let mut leaves = Vec::new();
    h.leaves_into(1.0, &mut leaves);
    let (outer, inners): (Vec<f64>, Vec<Distribution>) = leaves
        .into_iter()
        .filter(|(w, _)| *w > 0.0)
        .map(|(w, d)| (w, d.clone()))
        .unzip();
    Hyper::new(h.space().clone(), inners, outer)
}

/// `V^1 = V` on leaves and `V^n = E V^(n-1)` above them.
pub fn vulnerability_n(measure: &VulnerabilityMeasure, h: &HigherHyper) -> Result<f64> {
    match h {
        HigherHyper::Leaf(d) => measure.vulnerability(d),
        HigherHyper::Node { outer, children } => outer
            .iter()
            .zip(children)
            .map(|(w, c)| Ok(w * vulnerability_n(measure, c)?))
            .sum(),
    }
}
