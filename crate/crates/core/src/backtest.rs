//! In-sample estimation, out-of-sample buy-and-hold evaluation.

use serde::{Deserialize, Serialize};

use crate::allocation::{self, Scheme, WeightVector};
use crate::cut_tree::{build_cut_tree, leaf_edge_budget, CutPolicy, Termination};
use crate::error::{Error, Result};
use crate::market_graph::{market_graph_from_covariance, sample_covariance, simple_returns, PriceMatrix, ReturnsMatrix};
use crate::spectral_cut::CutObjective;

pub const DEFAULT_ANNUALIZATION: f64 = 252.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategySpec {
    EqualWeight,
    MinVariance,
    Cut {
        objective: CutObjective,
        policy: CutPolicy,
        scheme: Scheme,
    },
}

impl StrategySpec {
    /// Short name: `ew`, `mv`, or `<objective>-<scheme>` such as `cutn-as2`.
    pub fn name(&self) -> String {
        match self {
            StrategySpec::EqualWeight => "ew".into(),
            StrategySpec::MinVariance => "mv".into(),
            StrategySpec::Cut { objective, scheme, .. } => {
                format!("{}-{}", objective.as_str(), scheme.as_str().to_ascii_lowercase())
            }
        }
    }

    /// Parses a short name; cut strategies take the given policy.
    pub fn parse(name: &str, policy: CutPolicy) -> Result<Self> {
        let name = name.trim().to_ascii_lowercase();
        match name.as_str() {
            "ew" => Ok(StrategySpec::EqualWeight),
            "mv" => Ok(StrategySpec::MinVariance),
            _ => {
                let (objective, scheme) = name
                    .split_once('-')
                    .ok_or_else(|| Error::InvalidInput(format!("unknown strategy `{name}`")))?;
                let scheme: Scheme = scheme.parse()?;
                if !matches!(scheme, Scheme::As1 | Scheme::As2) {
                    return Err(Error::InvalidInput(format!("unknown strategy `{name}`")));
                }
                Ok(StrategySpec::Cut {
                    objective: objective.parse()?,
                    policy,
                    scheme,
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    /// First out-of-sample return period; periods before it are in-sample.
    pub split_index: usize,
    pub strategies: Vec<StrategySpec>,
    pub annualization_factor: f64,
    pub mv_ridge: f64,
}

impl BacktestConfig {
    pub fn new(split_index: usize, strategies: Vec<StrategySpec>) -> Self {
        Self {
            split_index,
            strategies,
            annualization_factor: DEFAULT_ANNUALIZATION,
            mv_ridge: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutMetadata {
    pub k_performed: usize,
    pub lambda2_trace: Vec<f64>,
    pub edge_budget_trace: Vec<u64>,
    pub edge_budget: u64,
    pub leaves: Vec<Vec<usize>>,
    pub termination: Option<Termination>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub weights: WeightVector,
    /// Starts at 1; one more entry than there are out-of-sample periods.
    pub wealth_curve: Vec<f64>,
    pub mean_return: f64,
    pub std_return: f64,
    /// Absent when the out-of-sample returns have zero spread.
    pub sharpe: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut: Option<CutMetadata>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mv_condition: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyFailure {
    pub kind: String,
    pub message: String,
}

impl From<&Error> for StrategyFailure {
    fn from(e: &Error) -> Self {
        Self {
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

/// Exactly one of `result` and `error` is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyOutcome {
    pub name: String,
    pub spec: StrategySpec,
    pub result: Option<StrategyResult>,
    pub error: Option<StrategyFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub split_index: usize,
    pub in_sample_periods: usize,
    pub out_sample_periods: usize,
    pub annualization_factor: f64,
    pub mv_ridge: f64,
    pub strategies: Vec<StrategyOutcome>,
}

impl BacktestReport {
    pub fn get(&self, name: &str) -> Option<&StrategyOutcome> {
        self.strategies.iter().find(|s| s.name == name)
    }
}

/// `r_p(t) = sum_i w_i r_i(t)`.
pub fn portfolio_returns(weights: &WeightVector, returns: &ReturnsMatrix) -> Result<Vec<f64>> {
    if weights.len() != returns.num_assets() {
        return Err(Error::InvalidInput(format!(
            "{} weights for {} assets",
            weights.len(),
            returns.num_assets()
        )));
    }
    let r = returns.returns();
    Ok((0..r.nrows())
        .map(|t| weights.weights.iter().enumerate().map(|(i, w)| w * r[(t, i)]).sum())
        .collect())
}

fn mean(series: &[f64]) -> f64 {
    series.iter().sum::<f64>() / series.len() as f64
}

/// Sample standard deviation (divisor `T - 1`); exactly zero for a constant
/// series.
fn sample_std(series: &[f64]) -> f64 {
    if series.iter().all(|&x| x == series[0]) {
        return 0.0;
    }
    let m = mean(series);
    let ss: f64 = series.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (series.len() - 1) as f64).sqrt()
}

/// `sqrt(annualization) * mean / std` with zero risk-free rate.
pub fn sharpe_ratio(series: &[f64], annualization: f64) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::InsufficientData {
            what: "Sharpe ratio (observations)",
            needed: 2,
            got: series.len(),
        });
    }
    if !(annualization > 0.0) {
        return Err(Error::InvalidInput(format!("annualization must be positive, got {annualization}")));
    }
    let sd = sample_std(series);
    if !(sd > 0.0) {
        return Err(Error::DegenerateSeries);
    }
    Ok(annualization.sqrt() * mean(series) / sd)
}

/// Compounds portfolio returns from an initial wealth of 1.
pub fn wealth_curve(portfolio_returns: &[f64]) -> Vec<f64> {
    let mut wealth = Vec::with_capacity(portfolio_returns.len() + 1);
    let mut current = 1.0;
    wealth.push(current);
    for r in portfolio_returns {
        current *= 1.0 + r;
        wealth.push(current);
    }
    wealth
}

/// Estimates every strategy on return periods `[0, split)` and holds the
/// weights fixed over `[split, T)`. Strategy failures are recorded in the
/// report without stopping the others.
pub fn run_backtest(prices: &PriceMatrix, config: &BacktestConfig) -> Result<BacktestReport> {
    let returns = simple_returns(prices)?;
    let periods = returns.num_periods();
    let split = config.split_index;
    if split < 2 || split + 2 > periods {
        return Err(Error::InvalidInput(format!(
            "split index {split} must leave at least 2 periods on each side of {periods}"
        )));
    }
    if !(config.annualization_factor > 0.0) {
        return Err(Error::InvalidInput("annualization factor must be positive".into()));
    }
    let in_sample = returns.window(0, split)?;
    let out_sample = returns.window(split, periods)?;
    let sigma = sample_covariance(&in_sample)?;
    let graph = market_graph_from_covariance(&sigma);

    let strategies = config
        .strategies
        .iter()
        .map(|spec| {
            let evaluated = (|| -> Result<StrategyResult> {
                let mut cut = None;
                let mut mv_condition = None;
                let weights = match spec {
                    StrategySpec::EqualWeight => allocation::equal_weights(returns.num_assets())?,
                    StrategySpec::MinVariance => {
                        let mv = allocation::min_variance_weights(&sigma, config.mv_ridge)?;
                        mv_condition = Some(mv.condition);
                        mv.weights
                    }
                    StrategySpec::Cut {
                        objective,
                        policy,
                        scheme,
                    } => {
                        let graph = graph.as_ref().map_err(Clone::clone)?;
                        let tree = build_cut_tree(graph, *objective, policy)?;
                        let cluster = allocation::allocate(&tree, *scheme)?;
                        cut = Some(CutMetadata {
                            k_performed: tree.k_performed(),
                            lambda2_trace: tree.lambda2_trace(),
                            edge_budget_trace: tree.edge_budget_trace(),
                            edge_budget: leaf_edge_budget(&tree),
                            leaves: tree.leaves().map(|l| l.members.clone()).collect(),
                            termination: tree.termination(),
                        });
                        allocation::asset_weights(&tree, &cluster)?
                    }
                };
                let series = portfolio_returns(&weights, &out_sample)?;
                let std_return = sample_std(&series);
                Ok(StrategyResult {
                    wealth_curve: wealth_curve(&series),
                    mean_return: mean(&series),
                    std_return,
                    sharpe: sharpe_ratio(&series, config.annualization_factor).ok(),
                    weights,
                    cut,
                    mv_condition,
                })
            })();
            let (result, error) = match evaluated {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(StrategyFailure::from(&e))),
            };
            StrategyOutcome {
                name: spec.name(),
                spec: spec.clone(),
                result,
                error,
            }
        })
        .collect();

    Ok(BacktestReport {
        split_index: split,
        in_sample_periods: split,
        out_sample_periods: periods - split,
        annualization_factor: config.annualization_factor,
        mv_ridge: config.mv_ridge,
        strategies,
    })
}
