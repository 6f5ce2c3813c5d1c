// `!(x > 0.0)` style comparisons are used on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod market_graph;
pub mod spectral_cut;
pub mod cut_tree;
pub mod allocation;
pub mod synthetic;
pub mod backtest;
pub mod cli;
