//! Capital allocation: cluster weights from a cut tree, and the equal-weight
//! and minimum-variance baselines.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cut_tree::CutTree;
use crate::error::{Error, Result};
use crate::linalg;
use crate::market_graph::CovarianceMatrix;

/// Condition estimates above this make the minimum-variance solve fail.
pub const MAX_CONDITION: f64 = 1e12;

/// Rule that produced a weight vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// `2^-depth` per cluster.
    #[serde(rename = "AS1")]
    As1,
    /// `1 / (K + 1)` per cluster.
    #[serde(rename = "AS2")]
    As2,
    #[serde(rename = "EW")]
    Ew,
    #[serde(rename = "MV")]
    Mv,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::As1 => "AS1",
            Scheme::As2 => "AS2",
            Scheme::Ew => "EW",
            Scheme::Mv => "MV",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "as1" => Ok(Scheme::As1),
            "as2" => Ok(Scheme::As2),
            "ew" => Ok(Scheme::Ew),
            "mv" => Ok(Scheme::Mv),
            other => Err(Error::InvalidInput(format!("unknown allocation scheme `{other}`"))),
        }
    }
}

/// Per-asset weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub scheme: Scheme,
    pub weights: Vec<f64>,
}

impl WeightVector {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Share of capital per leaf of a cut tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterWeights {
    pub scheme: Scheme,
    pub per_leaf: BTreeMap<usize, f64>,
}

/// AS1: a leaf reached after `K_i` cuts receives `1 / 2^K_i`.
pub fn allocate_as1(tree: &CutTree) -> ClusterWeights {
    let per_leaf = tree
        .leaves()
        .map(|leaf| (leaf.id, 0.5f64.powi(leaf.depth as i32)))
        .collect();
    ClusterWeights {
        scheme: Scheme::As1,
        per_leaf,
    }
}

/// AS2: each of the `K + 1` leaves receives `1 / (K + 1)`.
pub fn allocate_as2(tree: &CutTree) -> ClusterWeights {
    let share = 1.0 / (tree.k_performed() + 1) as f64;
    ClusterWeights {
        scheme: Scheme::As2,
        per_leaf: tree.leaf_ids().iter().map(|&id| (id, share)).collect(),
    }
}

/// Cluster weights for a tree-based scheme.
pub fn allocate(tree: &CutTree, scheme: Scheme) -> Result<ClusterWeights> {
    match scheme {
        Scheme::As1 => Ok(allocate_as1(tree)),
        Scheme::As2 => Ok(allocate_as2(tree)),
        other => Err(Error::InvalidInput(format!(
            "{} is not a cluster allocation scheme",
            other.as_str()
        ))),
    }
}

/// Splits each cluster's share equally among its members.
pub fn asset_weights(tree: &CutTree, cluster_weights: &ClusterWeights) -> Result<WeightVector> {
    let leaves: Vec<usize> = {
        let mut ids = tree.leaf_ids().to_vec();
        ids.sort_unstable();
        ids
    };
    let covered: Vec<usize> = cluster_weights.per_leaf.keys().copied().collect();
    if leaves != covered {
        return Err(Error::Inconsistent(format!(
            "cluster weights cover leaves {covered:?} but the tree has leaves {leaves:?}"
        )));
    }
    let mut weights = vec![0.0; tree.num_assets()];
    for leaf in tree.leaves() {
        let share = cluster_weights.per_leaf[&leaf.id] / leaf.members.len() as f64;
        for &asset in &leaf.members {
            weights[asset] = share;
        }
    }
    Ok(WeightVector {
        scheme: cluster_weights.scheme,
        weights,
    })
}

/// `1/n` for every asset.
pub fn equal_weights(n: usize) -> Result<WeightVector> {
    if n == 0 {
        return Err(Error::InvalidInput("equal weights need at least one asset".into()));
    }
    Ok(WeightVector {
        scheme: Scheme::Ew,
        weights: vec![1.0 / n as f64; n],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinVariance {
    pub weights: WeightVector,
    /// `lambda_max / lambda_min` of `Sigma + ridge I`.
    pub condition: f64,
    /// Unnormalized solution of `(Sigma + ridge I) w = 1`.
    pub raw: Vec<f64>,
}

/// Solves `(Sigma + ridge I) w = 1` and rescales so the weights sum to one.
/// Weights are not sign constrained.
pub fn min_variance_weights(sigma: &CovarianceMatrix, ridge: f64) -> Result<MinVariance> {
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::InvalidInput(format!("ridge must be nonnegative, got {ridge}")));
    }
    let n = sigma.num_assets();
    if n == 0 {
        return Err(Error::InvalidInput("empty covariance".into()));
    }
    let a = sigma.sigma() + DMatrix::<f64>::identity(n, n) * ridge;
    let eig = linalg::symmetric_eigen(&a)?;
    let condition = linalg::condition_estimate(&eig.values);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularCovariance { condition });
    }
    let raw = linalg::solve_spd(&a, &DVector::from_element(n, 1.0))
        .map_err(|_| Error::SingularCovariance { condition })?;
    let total: f64 = raw.sum();
    if total.abs() < 1e-12 {
        return Err(Error::DegenerateNormalization { sum: total });
    }
    Ok(MinVariance {
        weights: WeightVector {
            scheme: Scheme::Mv,
            weights: raw.iter().map(|w| w / total).collect(),
        },
        condition,
        raw: raw.iter().copied().collect(),
    })
}
