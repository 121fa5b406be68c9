use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::features::{FeatureSchema, FeatureVector};
use super::lambdamart::LtrHyperparams;
use crate::scoring::{sort_scored, ScoredDoc};
use crate::{Error, Result};

/// Regression tree node. A feature value `<= threshold` goes left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        leaf_value: f64,
    },
}

impl Node {
    pub fn leaf(value: f64) -> Self {
        Node::Leaf { leaf_value: value }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { leaf_value } => return *leaf_value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    fn check(&self, num_features: usize) -> Result<()> {
        match self {
            Node::Leaf { leaf_value } if leaf_value.is_finite() => Ok(()),
            Node::Leaf { .. } => Err(Error::invalid("model", "non-finite leaf value")),
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if *feature >= num_features {
                    return Err(Error::invalid(
                        "model",
                        format!("split on feature {feature} but schema has {num_features}"),
                    ));
                }
                if threshold.is_nan() {
                    return Err(Error::invalid("model", "NaN split threshold"));
                }
                left.check(num_features)?;
                right.check(num_features)
            }
        }
    }

    pub fn num_leaves(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => left.num_leaves() + right.num_leaves(),
        }
    }
}

/// A boosted ensemble of regression trees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingModel {
    pub schema: FeatureSchema,
    pub hyperparams: LtrHyperparams,
    pub learning_rate: f64,
    pub trees: Vec<Node>,
}

impl RankingModel {
    pub fn new(schema: FeatureSchema, hyperparams: LtrHyperparams) -> Self {
        RankingModel {
            schema,
            learning_rate: hyperparams.learning_rate,
            hyperparams,
            trees: Vec::new(),
        }
    }

    /// Raw score of a feature slice already known to follow the schema.
    #[inline]
    pub fn score(&self, x: &[f64]) -> f64 {
        self.trees
            .iter()
            .fold(0.0, |acc, t| acc + self.learning_rate * t.eval(x))
    }

    /// The ensemble made of the first `n` trees.
    pub fn prefix(&self, n: usize) -> RankingModel {
        RankingModel {
            trees: self.trees[..n.min(self.trees.len())].to_vec(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() {
            return Err(Error::invalid("model", "non-finite learning rate"));
        }
        self.trees
            .iter()
            .try_for_each(|t| t.check(self.schema.len()))
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_json()?.as_bytes())?;
        Ok(())
    }

    pub fn load<R: Read>(r: R) -> Result<Self> {
        let model: RankingModel = serde_json::from_reader(r)?;
        model.validate()?;
        Ok(model)
    }
}

pub fn predict(model: &RankingModel, fv: &FeatureVector) -> Result<f64> {
    if fv.schema != model.schema || fv.values.len() != model.schema.len() {
        return Err(Error::SchemaMismatch {
            expected: model.schema.describe(),
            found: fv.schema.describe(),
        });
    }
    Ok(model.score(&fv.values))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub doc_id: String,
    pub features: FeatureVector,
}

/// Orders candidates by model score, descending, ties by doc id.
pub fn rerank(model: &RankingModel, candidates: &[Candidate]) -> Result<Vec<ScoredDoc>> {
    let mut out = candidates
        .iter()
        .map(|c| {
            Ok(ScoredDoc::new(
                c.doc_id.clone(),
                predict(model, &c.features)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    sort_scored(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump(threshold: f64, lo: f64, hi: f64) -> Node {
        Node::Split {
            feature: 0,
            threshold,
            left: Box::new(Node::leaf(lo)),
            right: Box::new(Node::leaf(hi)),
        }
    }

    fn model(trees: Vec<Node>) -> RankingModel {
        let mut m = RankingModel::new(FeatureSchema::anonymous(1), LtrHyperparams::default());
        m.trees = trees;
        m
    }

    fn fv(x: f64) -> FeatureVector {
        FeatureVector::new(FeatureSchema::anonymous(1), vec![x]).unwrap()
    }

    #[test]
    fn empty_ensemble_predicts_zero() {
        assert_eq!(predict(&model(vec![]), &fv(3.0)).unwrap(), 0.0);
    }

    #[test]
    fn single_leaf_scaled_by_learning_rate() {
        let m = model(vec![Node::leaf(2.5)]);
        assert_eq!(predict(&m, &fv(0.0)).unwrap(), 0.1 * 2.5);
    }

    #[test]
    fn routing_is_inclusive_left() {
        let m = model(vec![stump(1.0, -1.0, 1.0)]);
        assert_eq!(m.score(&[1.0]), -0.1);
        assert_eq!(m.score(&[1.0000001]), 0.1);
    }

    #[test]
    fn schema_mismatch() {
        let m = model(vec![]);
        let other = FeatureVector::new(FeatureSchema::default(), vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            predict(&m, &other),
            Err(Error::SchemaMismatch { .. })
        ));
        assert!(FeatureVector::new(FeatureSchema::default(), vec![1.0]).is_err());
    }

    #[test]
    fn rerank_orders_and_breaks_ties() {
        let m = model(vec![stump(0.5, 0.2, 0.9)]);
        let c = |id: &str, x: f64| Candidate {
            doc_id: id.into(),
            features: fv(x),
        };
        let out = rerank(&m, &[c("b", 0.0), c("a", 0.0), c("z", 1.0)]).unwrap();
        let ids: Vec<_> = out.iter().map(|d| d.doc_id.as_str()).collect();
        assert_eq!(ids, vec!["z", "a", "b"]);
        assert!(rerank(&m, &[]).unwrap().is_empty());
    }

    #[test]
    fn json_layout_and_validation() {
        let m = model(vec![stump(0.25, -1.0, 1.0)]);
        let json = m.to_json().unwrap();
        assert!(json.contains("\"leaf_value\": -1.0"));
        assert!(json.contains("\"threshold\": 0.25"));
        let back = RankingModel::load(json.as_bytes()).unwrap();
        assert_eq!(back, m);
        let bad = json.replace("\"feature\": 0", "\"feature\": 3");
        assert!(RankingModel::load(bad.as_bytes()).is_err());
    }
}
