//! Block-factor synthetic markets with known cluster membership.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_graph::PriceMatrix;

/// Returns driven by one market factor, one factor per block and
/// idiosyncratic noise, all standard normal:
///
/// `r_i = drift + vol * (a g + b f_block(i) + c e_i)`
///
/// with `a^2 = across`, `b^2 = within - across`, `c^2 = 1 - within`, so the
/// population correlation is `within` inside a block and `across` between
/// blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockMarket {
    pub block_sizes: Vec<usize>,
    /// Number of return periods; the price path has one more row.
    pub periods: usize,
    pub within_corr: f64,
    pub across_corr: f64,
    pub volatility: f64,
    pub drift: f64,
    pub seed: u64,
}

impl Default for BlockMarket {
    fn default() -> Self {
        Self {
            block_sizes: vec![12, 8],
            periods: 500,
            within_corr: 0.9,
            across_corr: 0.1,
            volatility: 0.01,
            drift: 0.0003,
            seed: 0,
        }
    }
}

/// A generated market and the block index of every asset.
#[derive(Debug, Clone)]
pub struct SyntheticMarket {
    pub prices: PriceMatrix,
    pub blocks: Vec<usize>,
}

impl BlockMarket {
    pub fn num_assets(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn generate(&self) -> Result<SyntheticMarket> {
        let ordered = (0.0..=1.0).contains(&self.across_corr)
            && self.across_corr <= self.within_corr
            && self.within_corr <= 1.0;
        if !ordered {
            return Err(Error::InvalidInput(format!(
                "need 0 <= across ({}) <= within ({}) <= 1",
                self.across_corr, self.within_corr
            )));
        }
        if self.block_sizes.is_empty() || self.block_sizes.contains(&0) {
            return Err(Error::InvalidInput("block sizes must be positive".into()));
        }
        if self.periods == 0 || !(self.volatility > 0.0) {
            return Err(Error::InvalidInput("need at least one period and positive volatility".into()));
        }
        let n = self.num_assets();
        let blocks: Vec<usize> = self
            .block_sizes
            .iter()
            .enumerate()
            .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
            .collect();
        let a = self.across_corr.sqrt();
        let b = (self.within_corr - self.across_corr).sqrt();
        let c = (1.0 - self.within_corr).sqrt();

        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
        let mut prices = DMatrix::zeros(self.periods + 1, n);
        for i in 0..n {
            prices[(0, i)] = 100.0;
        }
        for t in 0..self.periods {
            let market = draw();
            let factors: Vec<f64> = (0..self.block_sizes.len()).map(|_| draw()).collect();
            for i in 0..n {
                let shock = a * market + b * factors[blocks[i]] + c * draw();
                // keep prices positive under extreme draws
                let r = (self.drift + self.volatility * shock).max(-0.99);
                prices[(t + 1, i)] = prices[(t, i)] * (1.0 + r);
            }
        }
        let asset_ids = blocks
            .iter()
            .scan(vec![0usize; self.block_sizes.len()], |count, &blk| {
                count[blk] += 1;
                Some(format!("B{blk}_{}", count[blk] - 1))
            })
            .collect();
        let timestamps = (0..=self.periods).map(|d| iso_date(d as i64)).collect();
        Ok(SyntheticMarket {
            prices: PriceMatrix::new(prices, asset_ids, timestamps)?,
            blocks,
        })
    }
}

/// Calendar date `days` after 2000-01-01 as `YYYY-MM-DD`.
fn iso_date(days: i64) -> String {
    // civil-from-days, proleptic Gregorian
    let z = days + 10957 + 719468;
    let era = z.div_euclid(146097);
    let doe = z - era * 146097;
    let yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let day = doy - (153 * mp + 2) / 5 + 1;
    let month = if mp < 10 { mp + 3 } else { mp - 9 };
    let year = yoe + era * 400 + i64::from(month <= 2);
    format!("{year:04}-{month:02}-{day:02}")
}
