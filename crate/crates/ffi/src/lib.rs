//! C ABI over `portcut`.
//!
//! Every fallible call returns a [`PortcutStatus`]; on failure the message is
//! available from [`portcut_last_error_message`] on the same thread. Objects
//! are opaque handles released with their `_free` function. Strings returned
//! through `char **` are released with [`portcut_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::DMatrix;
use portcut::allocation::{self, Scheme};
use portcut::backtest::{run_backtest, BacktestConfig, StrategySpec};
use portcut::cli::{ingest_prices, PriceCsvSpec, TreeDocument};
use portcut::cut_tree::{build_cut_tree, leaf_edge_budget, CutPolicy, LeafSelection};
use portcut::error::Error;
use portcut::market_graph::{self, CovarianceMatrix, MarketGraph, PriceMatrix};
use portcut::spectral_cut::{spectral_bisect, CutObjective};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortcutStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InsufficientData = 3,
    DegenerateAsset = 4,
    DegenerateDegree = 5,
    DegenerateVolume = 6,
    InvalidPartition = 7,
    NumericalFailure = 8,
    SizeLimit = 9,
    SingularCovariance = 10,
    DegenerateNormalization = 11,
    DegenerateSeries = 12,
    Inconsistent = 13,
    Parse = 14,
    MissingValue = 15,
    NonMonotoneDates = 16,
    Io = 17,
    BufferTooSmall = 18,
    Panic = 99,
}

impl From<&Error> for PortcutStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InsufficientData { .. } => PortcutStatus::InsufficientData,
            Error::InvalidInput(_) => PortcutStatus::InvalidArgument,
            Error::DegenerateAsset { .. } => PortcutStatus::DegenerateAsset,
            Error::InvalidPartition(_) => PortcutStatus::InvalidPartition,
            Error::DegenerateVolume { .. } => PortcutStatus::DegenerateVolume,
            Error::DegenerateDegree { .. } => PortcutStatus::DegenerateDegree,
            Error::NumericalFailure { .. } => PortcutStatus::NumericalFailure,
            Error::SizeLimit { .. } => PortcutStatus::SizeLimit,
            Error::LeafSplit { source, .. } => PortcutStatus::from(source.as_ref()),
            Error::Inconsistent(_) => PortcutStatus::Inconsistent,
            Error::SingularCovariance { .. } => PortcutStatus::SingularCovariance,
            Error::DegenerateNormalization { .. } => PortcutStatus::DegenerateNormalization,
            Error::DegenerateSeries => PortcutStatus::DegenerateSeries,
            Error::Parse { .. } => PortcutStatus::Parse,
            Error::MissingValue { .. } => PortcutStatus::MissingValue,
            Error::NonMonotoneDates { .. } => PortcutStatus::NonMonotoneDates,
            Error::Io(_) => PortcutStatus::Io,
        }
    }
}

pub const PORTCUT_OBJECTIVE_CUTN: u32 = 0;
pub const PORTCUT_OBJECTIVE_CUTV: u32 = 1;
pub const PORTCUT_SCHEME_AS1: u32 = 0;
pub const PORTCUT_SCHEME_AS2: u32 = 1;
pub const PORTCUT_LEAF_VERTICES: u32 = 0;
pub const PORTCUT_LEAF_VOLUME: u32 = 1;

pub struct PortcutPrices(PriceMatrix);
pub struct PortcutGraph(MarketGraph);
pub struct PortcutTree(TreeDocument);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

enum Failure {
    Status(PortcutStatus, String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn null() -> Failure {
    Failure::Status(PortcutStatus::NullPointer, "null pointer argument".into())
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Status(PortcutStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PortcutStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            PortcutStatus::Ok
        }
        Ok(Err(Failure::Status(status, msg))) => {
            set_last_error(msg);
            status
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(format!("{}: {e}", e.kind()));
            PortcutStatus::from(&e)
        }
        Err(_) => {
            set_last_error("internal panic".into());
            PortcutStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(data: *const T, len: usize) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn slice_mut<'a, T>(data: *mut T, len: usize) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if data.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts_mut(data, len))
}

unsafe fn str_arg<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s).to_str().map_err(|_| invalid("string is not valid UTF-8"))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(null)
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    *out = CString::new(s).map_err(|_| invalid("output contains NUL"))?.into_raw();
    Ok(())
}

fn objective(code: u32) -> Result<CutObjective, Failure> {
    match code {
        PORTCUT_OBJECTIVE_CUTN => Ok(CutObjective::Normalized),
        PORTCUT_OBJECTIVE_CUTV => Ok(CutObjective::VolumeNormalized),
        other => Err(invalid(format!("unknown objective {other}"))),
    }
}

fn scheme(code: u32) -> Result<Scheme, Failure> {
    match code {
        PORTCUT_SCHEME_AS1 => Ok(Scheme::As1),
        PORTCUT_SCHEME_AS2 => Ok(Scheme::As2),
        other => Err(invalid(format!("unknown scheme {other}"))),
    }
}

fn leaf_selection(code: u32) -> Result<LeafSelection, Failure> {
    match code {
        PORTCUT_LEAF_VERTICES => Ok(LeafSelection::MostVertices),
        PORTCUT_LEAF_VOLUME => Ok(LeafSelection::LargestVolume),
        other => Err(invalid(format!("unknown leaf selection {other}"))),
    }
}

/// Message of the most recent fallible call on this thread if it failed,
/// otherwise NULL. Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn portcut_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn portcut_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn portcut_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Prices from a row-major `rows x cols` array; assets are labelled
/// `A0, A1, ...` and timestamps `0, 1, ...`.
#[no_mangle]
pub unsafe extern "C" fn portcut_prices_new(
    data: *const f64,
    rows: usize,
    cols: usize,
    out: *mut *mut PortcutPrices,
) -> PortcutStatus {
    guard(|| {
        let len = rows.checked_mul(cols).ok_or_else(|| invalid("size overflow"))?;
        let values = slice(data, len)?;
        let rows: Vec<Vec<f64>> = values.chunks(cols.max(1)).map(<[f64]>::to_vec).collect();
        put(out, PortcutPrices(PriceMatrix::from_rows(&rows)?))
    })
}

/// Reads a comma-separated price file with a `date` column; any missing
/// cell is an error.
#[no_mangle]
pub unsafe extern "C" fn portcut_prices_from_csv(path: *const c_char, out: *mut *mut PortcutPrices) -> PortcutStatus {
    guard(|| {
        let path = str_arg(path)?;
        let ingested = ingest_prices(&PriceCsvSpec::new(path))?;
        put(out, PortcutPrices(ingested.prices))
    })
}

#[no_mangle]
pub unsafe extern "C" fn portcut_prices_num_assets(prices: *const PortcutPrices) -> usize {
    prices.as_ref().map_or(0, |p| p.0.num_assets())
}

#[no_mangle]
pub unsafe extern "C" fn portcut_prices_num_rows(prices: *const PortcutPrices) -> usize {
    prices.as_ref().map_or(0, |p| p.0.num_rows())
}

#[no_mangle]
pub unsafe extern "C" fn portcut_prices_free(prices: *mut PortcutPrices) {
    if !prices.is_null() {
        drop(Box::from_raw(prices));
    }
}

/// Market graph of absolute return correlations.
#[no_mangle]
pub unsafe extern "C" fn portcut_graph_from_prices(
    prices: *const PortcutPrices,
    out: *mut *mut PortcutGraph,
) -> PortcutStatus {
    guard(|| {
        let prices = handle(prices)?;
        put(out, PortcutGraph(market_graph::market_graph_from_prices(&prices.0)?))
    })
}

/// Graph from a row-major symmetric `n x n` weight matrix with zero
/// diagonal and entries in [0, 1].
#[no_mangle]
pub unsafe extern "C" fn portcut_graph_from_weights(
    weights: *const f64,
    n: usize,
    out: *mut *mut PortcutGraph,
) -> PortcutStatus {
    guard(|| {
        let len = n.checked_mul(n).ok_or_else(|| invalid("size overflow"))?;
        let w = DMatrix::from_row_slice(n, n, slice(weights, len)?);
        put(out, PortcutGraph(MarketGraph::from_weight_matrix(w)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn portcut_graph_num_vertices(graph: *const PortcutGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.num_vertices())
}

#[no_mangle]
pub unsafe extern "C" fn portcut_graph_free(graph: *mut PortcutGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// One spectral bisection. Writes side labels 1 or 2 into `sides` (length
/// `n`) and lambda2 into `lambda2` when it is not NULL.
#[no_mangle]
pub unsafe extern "C" fn portcut_spectral_bisect(
    graph: *const PortcutGraph,
    objective_code: u32,
    sides: *mut u8,
    n: usize,
    lambda2: *mut f64,
) -> PortcutStatus {
    guard(|| {
        let graph = handle(graph)?;
        if n != graph.0.num_vertices() {
            return Err(Failure::Status(PortcutStatus::BufferTooSmall, "sides length must equal vertex count".into()));
        }
        let p = spectral_bisect(&graph.0, objective(objective_code)?)?;
        slice_mut(sides, n)?.copy_from_slice(&p.side_of);
        if let (Some(out), Some(l2)) = (lambda2.as_mut(), p.lambda2) {
            *out = l2;
        }
        Ok(())
    })
}

/// Repeated bisection. A NaN `lambda2_threshold` disables the threshold.
#[no_mangle]
pub unsafe extern "C" fn portcut_tree_build(
    graph: *const PortcutGraph,
    objective_code: u32,
    max_cuts: usize,
    lambda2_threshold: f64,
    leaf_selection_code: u32,
    min_leaf_size: usize,
    out: *mut *mut PortcutTree,
) -> PortcutStatus {
    guard(|| {
        let graph = handle(graph)?;
        let policy = CutPolicy {
            max_cuts,
            lambda2_threshold: (!lambda2_threshold.is_nan()).then_some(lambda2_threshold),
            leaf_selection: leaf_selection(leaf_selection_code)?,
            min_leaf_size,
        };
        let tree = build_cut_tree(&graph.0, objective(objective_code)?, &policy)?;
        put(out, PortcutTree(TreeDocument::new(tree, graph.0.asset_ids().to_vec(), None)?))
    })
}

/// Parses a tree document as written by `portcut cut`.
#[no_mangle]
pub unsafe extern "C" fn portcut_tree_from_json(json: *const c_char, out: *mut *mut PortcutTree) -> PortcutStatus {
    guard(|| put(out, PortcutTree(TreeDocument::from_json(str_arg(json)?)?)))
}

#[no_mangle]
pub unsafe extern "C" fn portcut_tree_to_json(tree: *const PortcutTree, out: *mut *mut c_char) -> PortcutStatus {
    guard(|| {
        let tree = handle(tree)?;
        let text = serde_json::to_string(&tree.0).map_err(|e| invalid(e.to_string()))?;
        put_string(out, text)
    })
}

#[no_mangle]
pub unsafe extern "C" fn portcut_tree_num_assets(tree: *const PortcutTree) -> usize {
    tree.as_ref().map_or(0, |t| t.0.tree.num_assets())
}

#[no_mangle]
pub unsafe extern "C" fn portcut_tree_num_leaves(tree: *const PortcutTree) -> usize {
    tree.as_ref().map_or(0, |t| t.0.tree.leaf_ids().len())
}

#[no_mangle]
pub unsafe extern "C" fn portcut_tree_k_performed(tree: *const PortcutTree) -> usize {
    tree.as_ref().map_or(0, |t| t.0.tree.k_performed())
}

#[no_mangle]
pub unsafe extern "C" fn portcut_tree_leaf_edge_budget(tree: *const PortcutTree) -> u64 {
    tree.as_ref().map_or(0, |t| leaf_edge_budget(&t.0.tree))
}

#[no_mangle]
pub unsafe extern "C" fn portcut_tree_free(tree: *mut PortcutTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Asset weights for `scheme_code` written into `weights` (length `n`, the
/// tree's asset count).
#[no_mangle]
pub unsafe extern "C" fn portcut_tree_weights(
    tree: *const PortcutTree,
    scheme_code: u32,
    weights: *mut f64,
    n: usize,
) -> PortcutStatus {
    guard(|| {
        let tree = &handle(tree)?.0.tree;
        if n != tree.num_assets() {
            return Err(Failure::Status(PortcutStatus::BufferTooSmall, "weights length must equal asset count".into()));
        }
        let cluster = allocation::allocate(tree, scheme(scheme_code)?)?;
        let w = allocation::asset_weights(tree, &cluster)?;
        slice_mut(weights, n)?.copy_from_slice(&w.weights);
        Ok(())
    })
}

/// Minimum-variance weights for a row-major `n x n` covariance matrix.
#[no_mangle]
pub unsafe extern "C" fn portcut_min_variance(
    sigma: *const f64,
    n: usize,
    ridge: f64,
    weights: *mut f64,
) -> PortcutStatus {
    guard(|| {
        let len = n.checked_mul(n).ok_or_else(|| invalid("size overflow"))?;
        let s = CovarianceMatrix::from_matrix(DMatrix::from_row_slice(n, n, slice(sigma, len)?))?;
        let mv = allocation::min_variance_weights(&s, ridge)?;
        slice_mut(weights, n)?.copy_from_slice(&mv.weights.weights);
        Ok(())
    })
}

/// Runs a backtest and returns the report as JSON. `strategies` is a
/// comma-separated list such as `"ew,mv,cutn-as2"`; cut strategies use
/// `max_cuts` with the default policy otherwise.
#[no_mangle]
pub unsafe extern "C" fn portcut_backtest(
    prices: *const PortcutPrices,
    split_index: usize,
    strategies: *const c_char,
    max_cuts: usize,
    mv_ridge: f64,
    out: *mut *mut c_char,
) -> PortcutStatus {
    guard(|| {
        let prices = handle(prices)?;
        let policy = CutPolicy::with_max_cuts(max_cuts);
        let specs = str_arg(strategies)?
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| StrategySpec::parse(s, policy))
            .collect::<Result<Vec<_>, _>>()?;
        let mut config = BacktestConfig::new(split_index, specs);
        config.mv_ridge = mv_ridge;
        let report = run_backtest(&prices.0, &config)?;
        put_string(out, serde_json::to_string(&report).map_err(|e| invalid(e.to_string()))?)
    })
}
