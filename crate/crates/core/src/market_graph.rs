//! Prices to returns, covariance, and the absolute-correlation market graph.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Orders timestamp labels numerically when both parse as numbers,
/// lexicographically otherwise (ISO-8601 dates sort correctly that way).
pub fn compare_labels(a: &str, b: &str) -> Ordering {
    match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        _ => a.cmp(b),
    }
}

fn check_unique_ids(asset_ids: &[String]) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for id in asset_ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::InvalidInput(format!("duplicate asset id `{id}`")));
        }
    }
    Ok(())
}

/// Price history: rows are observations in time order, columns are assets.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceMatrix {
    prices: DMatrix<f64>,
    asset_ids: Vec<String>,
    timestamps: Vec<String>,
}

impl PriceMatrix {
    pub fn new(prices: DMatrix<f64>, asset_ids: Vec<String>, timestamps: Vec<String>) -> Result<Self> {
        if asset_ids.len() != prices.ncols() {
            return Err(Error::InvalidInput(format!(
                "{} asset ids for {} price columns",
                asset_ids.len(),
                prices.ncols()
            )));
        }
        if timestamps.len() != prices.nrows() {
            return Err(Error::InvalidInput(format!(
                "{} timestamps for {} price rows",
                timestamps.len(),
                prices.nrows()
            )));
        }
        check_unique_ids(&asset_ids)?;
        for w in timestamps.windows(2) {
            if compare_labels(&w[0], &w[1]) != Ordering::Less {
                return Err(Error::NonMonotoneDates {
                    previous: w[0].clone(),
                    next: w[1].clone(),
                });
            }
        }
        for c in 0..prices.ncols() {
            for r in 0..prices.nrows() {
                let p = prices[(r, c)];
                if !(p.is_finite() && p > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "price {p} at row {r} for asset `{}` is not strictly positive",
                        asset_ids[c]
                    )));
                }
            }
        }
        Ok(Self {
            prices,
            asset_ids,
            timestamps,
        })
    }

    /// Builds a matrix from row-major values with generated labels
    /// (`A0, A1, ...` and `0, 1, ...`).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::InvalidInput("ragged price rows".into()));
        }
        let prices = DMatrix::from_fn(nrows, ncols, |r, c| rows[r][c]);
        let asset_ids = (0..ncols).map(|i| format!("A{i}")).collect();
        let timestamps = (0..nrows).map(|t| t.to_string()).collect();
        Self::new(prices, asset_ids, timestamps)
    }

    pub fn prices(&self) -> &DMatrix<f64> {
        &self.prices
    }

    pub fn asset_ids(&self) -> &[String] {
        &self.asset_ids
    }

    pub fn timestamps(&self) -> &[String] {
        &self.timestamps
    }

    pub fn num_assets(&self) -> usize {
        self.prices.ncols()
    }

    pub fn num_rows(&self) -> usize {
        self.prices.nrows()
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_assets(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.num_assets()) {
            return Err(Error::InvalidInput(format!("asset column {bad} out of range")));
        }
        let prices = self.prices.select_columns(columns);
        let ids = columns.iter().map(|&c| self.asset_ids[c].clone()).collect();
        Self::new(prices, ids, self.timestamps.clone())
    }

    /// Rows `[start, end)` as a new price matrix.
    pub fn rows(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.num_rows() {
            return Err(Error::InvalidInput(format!(
                "row range {start}..{end} out of bounds for {} rows",
                self.num_rows()
            )));
        }
        let prices = self.prices.rows(start, end - start).into_owned();
        Self::new(
            prices,
            self.asset_ids.clone(),
            self.timestamps[start..end].to_vec(),
        )
    }
}

/// Simple returns, one row per consecutive pair of price rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsMatrix {
    returns: DMatrix<f64>,
    asset_ids: Vec<String>,
}

impl ReturnsMatrix {
    pub fn new(returns: DMatrix<f64>, asset_ids: Vec<String>) -> Result<Self> {
        if asset_ids.len() != returns.ncols() {
            return Err(Error::InvalidInput(format!(
                "{} asset ids for {} return columns",
                asset_ids.len(),
                returns.ncols()
            )));
        }
        check_unique_ids(&asset_ids)?;
        if let Some(bad) = returns.iter().find(|&&r| !(r.is_finite() && r > -1.0)) {
            return Err(Error::InvalidInput(format!("return {bad} is not greater than -1")));
        }
        Ok(Self { returns, asset_ids })
    }

    pub fn returns(&self) -> &DMatrix<f64> {
        &self.returns
    }

    pub fn asset_ids(&self) -> &[String] {
        &self.asset_ids
    }

    pub fn num_periods(&self) -> usize {
        self.returns.nrows()
    }

    pub fn num_assets(&self) -> usize {
        self.returns.ncols()
    }

    /// Periods `[start, end)`.
    pub fn window(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.num_periods() {
            return Err(Error::InvalidInput(format!(
                "period range {start}..{end} out of bounds for {} periods",
                self.num_periods()
            )));
        }
        Ok(Self {
            returns: self.returns.rows(start, end - start).into_owned(),
            asset_ids: self.asset_ids.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    sigma: DMatrix<f64>,
    asset_ids: Vec<String>,
}

impl CovarianceMatrix {
    /// Validates symmetry (1e-12 relative) and positive semi-definiteness
    /// (smallest eigenvalue no lower than -1e-10 of the largest).
    pub fn new(sigma: DMatrix<f64>, asset_ids: Vec<String>) -> Result<Self> {
        let n = sigma.nrows();
        if sigma.ncols() != n {
            return Err(Error::InvalidInput("covariance must be square".into()));
        }
        if asset_ids.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} asset ids for a {n}x{n} covariance",
                asset_ids.len()
            )));
        }
        check_unique_ids(&asset_ids)?;
        let scale = sigma.amax();
        for i in 0..n {
            for j in (i + 1)..n {
                if (sigma[(i, j)] - sigma[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidInput(format!(
                        "covariance is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let eig = linalg::symmetric_eigen(&sigma)?;
        let largest = eig.values.last().copied().unwrap_or(0.0);
        if let Some(&smallest) = eig.values.first() {
            if smallest < -1e-10 * largest.abs() {
                return Err(Error::InvalidInput(format!(
                    "covariance is not positive semi-definite (eigenvalue {smallest:e})"
                )));
            }
        }
        Ok(Self { sigma, asset_ids })
    }

    /// Covariance with generated asset labels.
    pub fn from_matrix(sigma: DMatrix<f64>) -> Result<Self> {
        let ids = (0..sigma.nrows()).map(|i| format!("A{i}")).collect();
        Self::new(sigma, ids)
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn asset_ids(&self) -> &[String] {
        &self.asset_ids
    }

    pub fn num_assets(&self) -> usize {
        self.sigma.nrows()
    }

    /// Indices of assets with zero variance.
    pub fn zero_variance_assets(&self) -> Vec<usize> {
        (0..self.num_assets())
            .filter(|&i| !(self.sigma[(i, i)] > 0.0))
            .collect()
    }
}

/// Absolute-correlation graph over assets with its degree and Laplacian
/// matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketGraph {
    weights: DMatrix<f64>,
    degrees: DVector<f64>,
    laplacian: DMatrix<f64>,
    asset_ids: Vec<String>,
}

impl MarketGraph {
    /// Builds a graph from an explicit weight matrix. The matrix must be
    /// square, symmetric, zero on the diagonal, with entries in `[0, 1]`.
    pub fn from_weights(weights: DMatrix<f64>, asset_ids: Vec<String>) -> Result<Self> {
        let n = weights.nrows();
        if weights.ncols() != n {
            return Err(Error::InvalidInput("weight matrix must be square".into()));
        }
        if asset_ids.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} asset ids for {n} vertices",
                asset_ids.len()
            )));
        }
        check_unique_ids(&asset_ids)?;
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::InvalidInput(format!("self-loop weight at vertex {i}")));
            }
            for j in 0..n {
                let w = weights[(i, j)];
                if !(0.0..=1.0 + 1e-12).contains(&w) {
                    return Err(Error::InvalidInput(format!(
                        "weight {w} at ({i}, {j}) outside [0, 1]"
                    )));
                }
                if w != weights[(j, i)] {
                    return Err(Error::InvalidInput(format!(
                        "weight matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self::assemble(weights, asset_ids))
    }

    /// Same as [`MarketGraph::from_weights`] with labels `0, 1, ...`.
    pub fn from_weight_matrix(weights: DMatrix<f64>) -> Result<Self> {
        let ids = (0..weights.nrows()).map(|i| i.to_string()).collect();
        Self::from_weights(weights, ids)
    }

    fn assemble(weights: DMatrix<f64>, asset_ids: Vec<String>) -> Self {
        let n = weights.nrows();
        let degrees = DVector::from_fn(n, |m, _| weights.row(m).sum());
        let mut laplacian = -weights.clone();
        for m in 0..n {
            laplacian[(m, m)] = degrees[m];
        }
        Self {
            weights,
            degrees,
            laplacian,
            asset_ids,
        }
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn degrees(&self) -> &DVector<f64> {
        &self.degrees
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    pub fn asset_ids(&self) -> &[String] {
        &self.asset_ids
    }

    pub fn num_vertices(&self) -> usize {
        self.weights.nrows()
    }

    /// Sum of all vertex degrees.
    pub fn total_volume(&self) -> f64 {
        self.degrees.sum()
    }

    /// Graph restricted to `members` (in the given order). Degrees and the
    /// Laplacian are recomputed from the retained edges only.
    pub fn induced_subgraph(&self, members: &[usize]) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidInput("induced subgraph needs at least one member".into()));
        }
        let n = self.num_vertices();
        let mut seen = vec![false; n];
        for &m in members {
            if m >= n {
                return Err(Error::InvalidInput(format!("member {m} out of range for {n} vertices")));
            }
            if std::mem::replace(&mut seen[m], true) {
                return Err(Error::InvalidInput(format!("member {m} listed twice")));
            }
        }
        let weights = DMatrix::from_fn(members.len(), members.len(), |i, j| {
            self.weights[(members[i], members[j])]
        });
        let ids = members.iter().map(|&m| self.asset_ids[m].clone()).collect();
        Ok(Self::assemble(weights, ids))
    }
}

/// `r_i(t) = (p_i(t+1) - p_i(t)) / p_i(t)`.
pub fn simple_returns(prices: &PriceMatrix) -> Result<ReturnsMatrix> {
    let rows = prices.num_rows();
    if rows < 2 {
        return Err(Error::InsufficientData {
            what: "returns (price rows)",
            needed: 2,
            got: rows,
        });
    }
    let p = prices.prices();
    let returns = DMatrix::from_fn(rows - 1, p.ncols(), |t, i| (p[(t + 1, i)] - p[(t, i)]) / p[(t, i)]);
    ReturnsMatrix::new(returns, prices.asset_ids().to_vec())
}

/// Unbiased sample covariance (divisor `T - 1`). Columns whose returns are
/// all identical get an exactly zero row and column.
pub fn sample_covariance(returns: &ReturnsMatrix) -> Result<CovarianceMatrix> {
    let t = returns.num_periods();
    if t < 2 {
        return Err(Error::InsufficientData {
            what: "covariance (return periods)",
            needed: 2,
            got: t,
        });
    }
    Ok(CovarianceMatrix {
        sigma: covariance_of_columns(returns.returns()),
        asset_ids: returns.asset_ids().to_vec(),
    })
}

/// Two-pass sample covariance of the columns of `r` (at least two rows).
pub fn covariance_of_columns(r: &DMatrix<f64>) -> DMatrix<f64> {
    let t = r.nrows();
    let n = r.ncols();
    let constant: Vec<bool> = (0..n)
        .map(|i| r.column(i).iter().all(|&v| v == r[(0, i)]))
        .collect();
    let means: Vec<f64> = (0..n).map(|i| r.column(i).sum() / t as f64).collect();
    let mut sigma = DMatrix::zeros(n, n);
    for i in 0..n {
        if constant[i] {
            continue;
        }
        for j in i..n {
            if constant[j] {
                continue;
            }
            let mut acc = 0.0;
            for k in 0..t {
                acc += (r[(k, i)] - means[i]) * (r[(k, j)] - means[j]);
            }
            let c = acc / (t - 1) as f64;
            sigma[(i, j)] = c;
            sigma[(j, i)] = c;
        }
    }
    sigma
}

/// `W_mn = |sigma_mn| / sqrt(sigma_mm sigma_nn)` off the diagonal, zero on it.
pub fn market_graph_from_covariance(sigma: &CovarianceMatrix) -> Result<MarketGraph> {
    let s = sigma.sigma();
    let n = s.nrows();
    if let Some(&index) = sigma.zero_variance_assets().first() {
        return Err(Error::DegenerateAsset {
            asset: sigma.asset_ids()[index].clone(),
            index,
        });
    }
    let mut weights = DMatrix::zeros(n, n);
    for m in 0..n {
        for k in (m + 1)..n {
            let w = (s[(m, k)].abs() / (s[(m, m)] * s[(k, k)]).sqrt()).min(1.0);
            weights[(m, k)] = w;
            weights[(k, m)] = w;
        }
    }
    Ok(MarketGraph::assemble(weights, sigma.asset_ids().to_vec()))
}

/// Prices straight to the market graph.
pub fn market_graph_from_prices(prices: &PriceMatrix) -> Result<MarketGraph> {
    let returns = simple_returns(prices)?;
    let sigma = sample_covariance(&returns)?;
    market_graph_from_covariance(&sigma)
}
