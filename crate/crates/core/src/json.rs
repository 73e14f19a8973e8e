//! JSON file formats. Every format carries labels; matrices are nested
//! row arrays.
//!
//! ```text
//! Distribution   {"labels": [..], "probs": [..]}
//! Channel        {"inputs": [..], "outputs": [..], "matrix": [[..], ..]}
//! Joint          Channel plus "kind": "joint"
//! GainFunction   {"guesses": [..], "secrets": [..], "gain": [[..], ..]}
//! Hyper          {"secrets": [..], "outer": [..], "inners": [[..], ..]}
//! HigherHyper    {"secrets": [..], "outer": [..], "children": [..]}
//!                with children nested the same way (without "secrets")
//!                and grounding at {"leaf": [..]}
//! ```

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::abstraction::AggregationMatrix;
use crate::dist::{Channel, Distribution, JointDistribution, SecretSpace};
use crate::error::{QifError, Result};
use crate::hyper::{HigherHyper, Hyper};
use crate::measures::GainFunction;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistributionJson {
    pub labels: Vec<String>,
    pub probs: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GainJson {
    pub guesses: Vec<String>,
    pub secrets: Vec<String>,
    pub gain: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HyperJson {
    pub secrets: Vec<String>,
    pub outer: Vec<f64>,
    pub inners: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HigherJson {
    Leaf {
        leaf: Vec<f64>,
    },
    Node {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        secrets: Option<Vec<String>>,
        outer: Vec<f64>,
        children: Vec<HigherJson>,
    },
}

fn to_array(rows: &[Vec<f64>], ncols: usize) -> Result<Array2<f64>> {
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(QifError::DimensionMismatch(format!(
            "row {i} has {} entries, expected {ncols}",
            r.len()
        )));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((rows.len(), ncols), flat).map_err(|e| QifError::DimensionMismatch(e.to_string()))
}

fn from_array(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

impl From<&Distribution> for DistributionJson {
    fn from(d: &Distribution) -> Self {
        DistributionJson {
            labels: d.space().labels().to_vec(),
            probs: d.probs().to_vec(),
        }
    }
}

impl TryFrom<DistributionJson> for Distribution {
    type Error = QifError;
    fn try_from(j: DistributionJson) -> Result<Self> {
        Distribution::new(SecretSpace::new(j.labels)?, j.probs)
    }
}

impl From<&Channel> for ChannelJson {
    fn from(c: &Channel) -> Self {
        ChannelJson {
            kind: None,
            inputs: c.inputs().labels().to_vec(),
            outputs: c.outputs().labels().to_vec(),
            matrix: from_array(c.matrix()),
        }
    }
}

impl TryFrom<ChannelJson> for Channel {
    type Error = QifError;
    fn try_from(j: ChannelJson) -> Result<Self> {
        let m = to_array(&j.matrix, j.outputs.len())?;
        Channel::new(SecretSpace::new(j.inputs)?, SecretSpace::new(j.outputs)?, m)
    }
}

impl From<&AggregationMatrix> for ChannelJson {
    fn from(a: &AggregationMatrix) -> Self {
        ChannelJson::from(a.channel())
    }
}

impl TryFrom<ChannelJson> for AggregationMatrix {
    type Error = QifError;
    fn try_from(j: ChannelJson) -> Result<Self> {
        Ok(AggregationMatrix::new(Channel::try_from(j)?))
    }
}

impl From<&JointDistribution> for ChannelJson {
    fn from(j: &JointDistribution) -> Self {
        ChannelJson {
            kind: Some("joint".into()),
            inputs: j.rows().labels().to_vec(),
            outputs: j.cols().labels().to_vec(),
            matrix: from_array(j.matrix()),
        }
    }
}

impl TryFrom<ChannelJson> for JointDistribution {
    type Error = QifError;
    fn try_from(j: ChannelJson) -> Result<Self> {
        let m = to_array(&j.matrix, j.outputs.len())?;
        JointDistribution::new(SecretSpace::new(j.inputs)?, SecretSpace::new(j.outputs)?, m)
    }
}

impl From<&GainFunction> for GainJson {
    fn from(g: &GainFunction) -> Self {
        GainJson {
            guesses: g.guesses().labels().to_vec(),
            secrets: g.space().labels().to_vec(),
            gain: from_array(g.gain()),
        }
    }
}

impl TryFrom<GainJson> for GainFunction {
    type Error = QifError;
    fn try_from(j: GainJson) -> Result<Self> {
        let m = to_array(&j.gain, j.secrets.len())?;
        GainFunction::new(SecretSpace::new(j.guesses)?, SecretSpace::new(j.secrets)?, m)
    }
}

impl From<&Hyper> for HyperJson {
    fn from(h: &Hyper) -> Self {
        HyperJson {
            secrets: h.space().labels().to_vec(),
            outer: h.outer().to_vec(),
            inners: h.inners().iter().map(|d| d.probs().to_vec()).collect(),
        }
    }
}

impl TryFrom<HyperJson> for Hyper {
    type Error = QifError;
    fn try_from(j: HyperJson) -> Result<Self> {
        let space = SecretSpace::new(j.secrets)?;
        let inners = j
            .inners
            .into_iter()
            .map(|p| Distribution::new(space.clone(), p))
            .collect::<Result<Vec<_>>>()?;
        Hyper::new(space, inners, j.outer)
    }
}

impl From<&HigherHyper> for HigherJson {
    fn from(h: &HigherHyper) -> Self {
        fn go(h: &HigherHyper, root: bool) -> HigherJson {
            match h {
                HigherHyper::Leaf(d) => HigherJson::Leaf {
                    leaf: d.probs().to_vec(),
                },
                HigherHyper::Node { outer, children } => HigherJson::Node {
                    secrets: root.then(|| h.space().labels().to_vec()),
                    outer: outer.clone(),
                    children: children.iter().map(|c| go(c, false)).collect(),
                },
            }
        }
        go(h, true)
    }
}

impl TryFrom<HigherJson> for HigherHyper {
    type Error = QifError;
    fn try_from(j: HigherJson) -> Result<Self> {
        fn go(j: HigherJson, space: &SecretSpace) -> Result<HigherHyper> {
            match j {
                HigherJson::Leaf { leaf } => Ok(HigherHyper::Leaf(Distribution::new(space.clone(), leaf)?)),
                HigherJson::Node { outer, children, .. } => {
                    let children = children
                        .into_iter()
                        .map(|c| go(c, space))
                        .collect::<Result<Vec<_>>>()?;
                    HigherHyper::node(outer, children)
                }
            }
        }
        let space = match &j {
            HigherJson::Node { secrets: Some(s), .. } => SecretSpace::new(s.clone())?,
            _ => {
                return Err(QifError::SchemaMismatch(
                    "higher-order hyper root must be a node carrying \"secrets\"".into(),
                ))
            }
        };
        go(j, &space)
    }
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Reads a JSON file and converts it into a validated domain value.
pub fn load<J, T>(path: impl AsRef<Path>) -> Result<T>
where
    J: DeserializeOwned,
    T: TryFrom<J, Error = QifError>,
{
    T::try_from(read_json::<J>(path)?)
}
