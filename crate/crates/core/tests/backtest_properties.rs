use nalgebra::DMatrix;
use proptest::prelude::*;

use portcut::backtest::{run_backtest, BacktestConfig, StrategySpec};
use portcut::cut_tree::CutPolicy;
use portcut::market_graph::PriceMatrix;
use portcut::synthetic::BlockMarket;

fn all_strategies(policy: CutPolicy) -> Vec<StrategySpec> {
    ["ew", "mv", "cutn-as1", "cutn-as2", "cutv-as1", "cutv-as2"]
        .iter()
        .map(|s| StrategySpec::parse(s, policy).unwrap())
        .collect()
}

#[test]
fn identical_assets_share_one_wealth_curve() {
    let path = [20.0, 20.4, 19.9, 20.8, 21.0, 20.2, 21.5, 22.0, 21.7, 22.3];
    let n = 4;
    let prices = PriceMatrix::from_rows(&path.iter().map(|&p| vec![p; n]).collect::<Vec<_>>()).unwrap();
    let mut config = BacktestConfig::new(5, all_strategies(CutPolicy::with_max_cuts(1)));
    config.mv_ridge = 1e-4;
    let report = run_backtest(&prices, &config).unwrap();
    let reference = &report.get("ew").unwrap().result.as_ref().unwrap().wealth_curve;
    for s in &report.strategies {
        let curve = &s.result.as_ref().unwrap_or_else(|| panic!("{} failed: {:?}", s.name, s.error)).wealth_curve;
        for (a, b) in curve.iter().zip(reference) {
            assert!((a - b).abs() <= 1e-12, "{}", s.name);
        }
    }
}

#[test]
fn two_blocks_recovered_with_half_each() {
    let market = BlockMarket {
        block_sizes: vec![7, 5],
        periods: 400,
        seed: 21,
        ..BlockMarket::default()
    }
    .generate()
    .unwrap();
    let config = BacktestConfig::new(200, vec![StrategySpec::parse("cutn-as2", CutPolicy::with_max_cuts(1)).unwrap()]);
    let report = run_backtest(&market.prices, &config).unwrap();
    let result = report.strategies[0].result.as_ref().unwrap();
    let leaves = &result.cut.as_ref().unwrap().leaves;
    assert_eq!(leaves.len(), 2);
    for leaf in leaves {
        let b = market.blocks[leaf[0]];
        assert!(leaf.iter().all(|&i| market.blocks[i] == b));
        let mass: f64 = leaf.iter().map(|&i| result.weights.weights[i]).sum();
        assert!((mass - 0.5).abs() <= 1e-12);
    }
}

#[test]
fn wealth_follows_compounding_rule() {
    let market = BlockMarket {
        block_sizes: vec![3, 3],
        periods: 60,
        seed: 4,
        ..BlockMarket::default()
    }
    .generate()
    .unwrap();
    let split = 30;
    let report = run_backtest(&market.prices, &BacktestConfig::new(split, all_strategies(CutPolicy::default()))).unwrap();
    let p = market.prices.prices();
    for s in &report.strategies {
        let r = s.result.as_ref().unwrap();
        assert_eq!(r.wealth_curve[0], 1.0);
        assert_eq!(r.wealth_curve.len(), p.nrows() - split);
        for t in 0..r.wealth_curve.len() - 1 {
            let row = split + t;
            let port: f64 = (0..p.ncols()).map(|i| r.weights.weights[i] * (p[(row + 1, i)] / p[(row, i)] - 1.0)).sum();
            let expected = r.wealth_curve[t] * (1.0 + port);
            assert!((r.wealth_curve[t + 1] - expected).abs() <= 1e-12 * expected.abs());
        }
        if let Some(sharpe) = r.sharpe {
            let expected = 252f64.sqrt() * r.mean_return / r.std_return;
            assert!((sharpe - expected).abs() <= 1e-12 * expected.abs().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wealth_stays_positive_for_long_only(
        rows in (8usize..20, 2usize..5).prop_flat_map(|(t, n)| prop::collection::vec(0.5f64..1.5, t * n).prop_map(move |v| (t, n, v)))
    ) {
        let (t, n, factors) = rows;
        let mut prices = DMatrix::zeros(t, n);
        for i in 0..n {
            prices[(0, i)] = 100.0;
            for r in 1..t {
                prices[(r, i)] = prices[(r - 1, i)] * factors[r * n + i];
            }
        }
        let prices = PriceMatrix::new(prices, (0..n).map(|i| format!("A{i}")).collect(), (0..t).map(|r| r.to_string()).collect()).unwrap();
        let strategies = vec![
            StrategySpec::EqualWeight,
            StrategySpec::parse("cutn-as1", CutPolicy { min_leaf_size: 1, ..CutPolicy::default() }).unwrap(),
        ];
        let report = run_backtest(&prices, &BacktestConfig::new(t / 2, strategies)).unwrap();
        for s in &report.strategies {
            if let Some(r) = &s.result {
                prop_assert!(r.wealth_curve.iter().all(|&w| w > 0.0));
            }
        }
    }
}
