//! Command-line frontend: CSV ingestion, the cut/allocate/backtest pipeline
//! and output documents.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::allocation::{self, ClusterWeights, Scheme, WeightVector};
use crate::backtest::{run_backtest, BacktestConfig, BacktestReport, StrategySpec, DEFAULT_ANNUALIZATION};
use crate::cut_tree::{build_cut_tree, leaf_edge_budget, CutPolicy, CutTree, LeafSelection};
use crate::error::{Error, Result};
use crate::market_graph::{compare_labels, market_graph_from_prices, sample_covariance, simple_returns, PriceMatrix};
use crate::spectral_cut::CutObjective;
use crate::synthetic::BlockMarket;

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    #[default]
    Error,
    DropRows,
    DropAssets,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceCsvSpec {
    pub path: PathBuf,
    pub date_column_name: String,
    pub delimiter: u8,
    pub missing_policy: MissingPolicy,
}

impl PriceCsvSpec {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            date_column_name: "date".into(),
            delimiter: b',',
            missing_policy: MissingPolicy::Error,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestedPrices {
    pub prices: PriceMatrix,
    /// Timestamps of rows removed under `DropRows`.
    pub dropped_rows: Vec<String>,
    /// Columns removed under `DropAssets`.
    pub dropped_assets: Vec<String>,
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || ["na", "nan", "null"].iter().any(|m| cell.eq_ignore_ascii_case(m))
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::from(io),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::InvalidInput(format!(
            "row {} has {len} fields, header has {expected_len}",
            line.unwrap_or(0)
        )),
        other => Error::InvalidInput(format!("malformed csv: {other:?}")),
    }
}

pub fn ingest_prices(spec: &PriceCsvSpec) -> Result<IngestedPrices> {
    let file = File::open(&spec.path).map_err(|e| Error::Io(format!("{}: {e}", spec.path.display())))?;
    parse_prices(file, spec)
}

/// Parses price CSV from any reader. Row numbers in errors are file line
/// numbers, the header being line 1.
pub fn parse_prices<R: Read>(reader: R, spec: &PriceCsvSpec) -> Result<IngestedPrices> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .delimiter(spec.delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers().map_err(csv_error)?.iter().map(str::to_owned).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::InvalidInput("missing header row".into()));
    }
    let date_col = header
        .iter()
        .position(|h| *h == spec.date_column_name)
        .ok_or_else(|| Error::InvalidInput(format!("no `{}` column in header", spec.date_column_name)))?;
    let asset_cols: Vec<usize> = (0..header.len()).filter(|&c| c != date_col).collect();
    if asset_cols.is_empty() {
        return Err(Error::InvalidInput("no asset columns".into()));
    }

    let mut dates = Vec::new();
    let mut lines = Vec::new();
    let mut cells: Vec<Vec<Option<f64>>> = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(k + 2, |p| p.line() as usize);
        let date = record.get(date_col).unwrap_or("");
        if date.is_empty() {
            return Err(Error::MissingValue {
                row: line,
                column: spec.date_column_name.clone(),
            });
        }
        let mut row = Vec::with_capacity(asset_cols.len());
        for &c in &asset_cols {
            let raw = record.get(c).unwrap_or("");
            if is_missing(raw) {
                row.push(None);
                continue;
            }
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(Some(v)),
                _ => {
                    return Err(Error::Parse {
                        row: line,
                        column: header[c].clone(),
                        value: raw.to_owned(),
                    })
                }
            }
        }
        dates.push(date.to_owned());
        lines.push(line);
        cells.push(row);
    }
    for w in dates.windows(2) {
        if compare_labels(&w[0], &w[1]) != std::cmp::Ordering::Less {
            return Err(Error::NonMonotoneDates {
                previous: w[0].clone(),
                next: w[1].clone(),
            });
        }
    }

    let mut keep_rows: Vec<usize> = (0..cells.len()).collect();
    let mut keep_assets: Vec<usize> = (0..asset_cols.len()).collect();
    match spec.missing_policy {
        MissingPolicy::Error => {
            for (r, row) in cells.iter().enumerate() {
                if let Some(a) = row.iter().position(Option::is_none) {
                    return Err(Error::MissingValue {
                        row: lines[r],
                        column: header[asset_cols[a]].clone(),
                    });
                }
            }
        }
        MissingPolicy::DropRows => keep_rows.retain(|&r| cells[r].iter().all(Option::is_some)),
        MissingPolicy::DropAssets => keep_assets.retain(|&a| cells.iter().all(|row| row[a].is_some())),
    }
    if keep_rows.is_empty() || keep_assets.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no data left after applying the missing-value policy ({} rows, {} assets)",
            keep_rows.len(),
            keep_assets.len()
        )));
    }

    let prices = nalgebra::DMatrix::from_fn(keep_rows.len(), keep_assets.len(), |r, a| {
        cells[keep_rows[r]][keep_assets[a]].unwrap_or(f64::NAN)
    });
    let dropped_rows = (0..dates.len())
        .filter(|r| !keep_rows.contains(r))
        .map(|r| dates[r].clone())
        .collect();
    let dropped_assets = (0..asset_cols.len())
        .filter(|a| !keep_assets.contains(a))
        .map(|a| header[asset_cols[a]].clone())
        .collect();
    let asset_ids = keep_assets.iter().map(|&a| header[asset_cols[a]].clone()).collect();
    let timestamps = keep_rows.iter().map(|&r| dates[r].clone()).collect();
    Ok(IngestedPrices {
        prices: PriceMatrix::new(prices, asset_ids, timestamps)?,
        dropped_rows,
        dropped_assets,
    })
}

/// Removes assets whose returns over price rows `[0, price_rows)` have zero
/// variance. Returns the remaining prices and the removed ids.
pub fn drop_degenerate_assets(prices: &PriceMatrix, price_rows: usize) -> Result<(PriceMatrix, Vec<String>)> {
    let window = prices.rows(0, price_rows)?;
    let sigma = sample_covariance(&simple_returns(&window)?)?;
    let degenerate = sigma.zero_variance_assets();
    if degenerate.is_empty() {
        return Ok((prices.clone(), Vec::new()));
    }
    let keep: Vec<usize> = (0..prices.num_assets()).filter(|i| !degenerate.contains(i)).collect();
    if keep.is_empty() {
        return Err(Error::InvalidInput("every asset has zero variance".into()));
    }
    let dropped = degenerate.iter().map(|&i| prices.asset_ids()[i].clone()).collect();
    Ok((prices.select_assets(&keep)?, dropped))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub price_rows: usize,
    pub assets: usize,
    pub first_date: String,
    pub last_date: String,
    pub missing_policy: MissingPolicy,
    pub dropped_rows: Vec<String>,
    pub dropped_assets: Vec<String>,
    pub dropped_degenerate: Vec<String>,
}

impl InputDigest {
    fn new(ingested: &IngestedPrices, prices: &PriceMatrix, policy: MissingPolicy, degenerate: Vec<String>) -> Self {
        let ts = prices.timestamps();
        Self {
            price_rows: prices.num_rows(),
            assets: prices.num_assets(),
            first_date: ts.first().cloned().unwrap_or_default(),
            last_date: ts.last().cloned().unwrap_or_default(),
            missing_policy: policy,
            dropped_rows: ingested.dropped_rows.clone(),
            dropped_assets: ingested.dropped_assets.clone(),
            dropped_degenerate: degenerate,
        }
    }
}

/// Resolved configuration of one invocation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<CutObjective>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<CutPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub strategies: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_date: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mv_ridge: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annualization_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputDigest>,
}

/// Output of `cut`, input of `allocate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDocument {
    pub schema_version: u32,
    pub asset_ids: Vec<String>,
    pub tree: CutTree,
    pub edge_budget_trace: Vec<u64>,
    pub leaf_edge_budget: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
}

impl TreeDocument {
    pub fn new(tree: CutTree, asset_ids: Vec<String>, manifest: Option<RunManifest>) -> Result<Self> {
        if asset_ids.len() != tree.num_assets() {
            return Err(Error::Inconsistent(format!(
                "{} asset ids for a tree over {} assets",
                asset_ids.len(),
                tree.num_assets()
            )));
        }
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            asset_ids,
            edge_budget_trace: tree.edge_budget_trace(),
            leaf_edge_budget: leaf_edge_budget(&tree),
            tree,
            manifest,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TreeDocument =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("tree document: {e}")))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!("unsupported schema_version {}", doc.schema_version)));
        }
        if doc.asset_ids.len() != doc.tree.num_assets() {
            return Err(Error::Inconsistent(format!(
                "{} asset ids for a tree over {} assets",
                doc.asset_ids.len(),
                doc.tree.num_assets()
            )));
        }
        Ok(doc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafWeight {
    pub leaf_id: usize,
    pub depth: usize,
    pub members: Vec<String>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetWeight {
    pub asset_id: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsDocument {
    pub schema_version: u32,
    pub scheme: Scheme,
    pub leaves: Vec<LeafWeight>,
    pub weights: Vec<AssetWeight>,
}

impl WeightsDocument {
    pub fn new(doc: &TreeDocument, cluster: &ClusterWeights, weights: &WeightVector) -> Self {
        let leaves = doc
            .tree
            .leaves()
            .map(|leaf| LeafWeight {
                leaf_id: leaf.id,
                depth: leaf.depth,
                members: leaf.members.iter().map(|&i| doc.asset_ids[i].clone()).collect(),
                weight: cluster.per_leaf[&leaf.id],
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            scheme: weights.scheme,
            leaves,
            weights: doc
                .asset_ids
                .iter()
                .zip(&weights.weights)
                .map(|(id, &w)| AssetWeight {
                    asset_id: id.clone(),
                    weight: w,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestDocument {
    pub schema_version: u32,
    pub manifest: RunManifest,
    pub asset_ids: Vec<String>,
    /// Timestamps of the out-of-sample price rows, aligned with every wealth
    /// curve.
    pub out_sample_dates: Vec<String>,
    pub report: BacktestReport,
}

/// Wealth curves as CSV: one row per out-of-sample date, one column per
/// successful strategy.
pub fn wealth_csv(doc: &BacktestDocument) -> String {
    let ok: Vec<_> = doc.report.strategies.iter().filter_map(|s| Some((&s.name, s.result.as_ref()?))).collect();
    let mut out = String::from("date");
    for (name, _) in &ok {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (t, date) in doc.out_sample_dates.iter().enumerate() {
        out.push_str(date);
        for (_, r) in &ok {
            out.push(',');
            out.push_str(&r.wealth_curve[t].to_string());
        }
        out.push('\n');
    }
    out
}

/// Minimal SVG line chart of the wealth curves.
pub fn wealth_svg(doc: &BacktestDocument) -> String {
    const W: f64 = 800.0;
    const H: f64 = 400.0;
    const PAD: f64 = 40.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];
    let curves: Vec<_> = doc.report.strategies.iter().filter_map(|s| Some((&s.name, &s.result.as_ref()?.wealth_curve))).collect();
    let (lo, hi) = curves
        .iter()
        .flat_map(|(_, c)| c.iter())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let steps = doc.out_sample_dates.len().saturating_sub(1).max(1) as f64;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    );
    for (k, (name, curve)) in curves.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let points: Vec<String> = curve
            .iter()
            .enumerate()
            .map(|(t, &v)| {
                let x = PAD + (W - 2.0 * PAD) * t as f64 / steps;
                let y = H - PAD - (H - 2.0 * PAD) * (v - lo) / span;
                format!("{x:.2},{y:.2}")
            })
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{color}\">{name}</text>\n",
            PAD + 5.0,
            PAD + 14.0 * (k as f64 + 1.0)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{PAD}\" y=\"{}\" font-size=\"11\">{lo:.4}</text>\n<text x=\"{PAD}\" y=\"{}\" font-size=\"11\">{hi:.4}</text>\n</svg>\n",
        H - PAD + 14.0,
        PAD - 4.0
    ));
    svg
}

/// Picks the first price row whose timestamp is not before `date`; that row
/// is the last in-sample price and the first out-of-sample price.
pub fn resolve_split_date(prices: &PriceMatrix, date: &str) -> Result<usize> {
    prices
        .timestamps()
        .iter()
        .position(|t| compare_labels(t, date) != std::cmp::Ordering::Less)
        .ok_or_else(|| Error::InvalidInput(format!("split date {date} is after the last timestamp")))
}

#[derive(Debug, Parser)]
#[command(name = "portcut", version, about = "Spectral portfolio cuts on correlation market graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a cut tree from a price CSV.
    Cut(CutArgs),
    /// Turn a cut tree into asset weights.
    Allocate(AllocateArgs),
    /// Run the in-sample/out-of-sample comparison.
    Backtest(BacktestArgs),
    /// Write a synthetic block-factor price CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Price CSV with a header row.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, default_value = "date")]
    pub date_column: String,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    #[arg(long, value_enum, default_value_t = MissingPolicy::Error)]
    pub missing: MissingPolicy,
    /// Drop zero-variance assets instead of failing.
    #[arg(long)]
    pub drop_degenerate: bool,
}

impl InputArgs {
    fn spec(&self) -> std::result::Result<PriceCsvSpec, CliError> {
        if !self.delimiter.is_ascii() {
            return Err(CliError::Usage("delimiter must be a single ASCII character".into()));
        }
        Ok(PriceCsvSpec {
            path: self.input.clone(),
            date_column_name: self.date_column.clone(),
            delimiter: self.delimiter as u8,
            missing_policy: self.missing,
        })
    }
}

#[derive(Debug, Args)]
pub struct PolicyArgs {
    #[arg(long, default_value_t = 1)]
    pub max_cuts: usize,
    #[arg(long)]
    pub lambda2_threshold: Option<f64>,
    #[arg(long, default_value = "vertices")]
    pub leaf_selection: LeafSelection,
    #[arg(long, default_value_t = 2)]
    pub min_leaf_size: usize,
}

impl PolicyArgs {
    fn policy(&self) -> CutPolicy {
        CutPolicy {
            max_cuts: self.max_cuts,
            lambda2_threshold: self.lambda2_threshold,
            leaf_selection: self.leaf_selection,
            min_leaf_size: self.min_leaf_size,
        }
    }
}

#[derive(Debug, Args)]
pub struct CutArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long, default_value = "cutn")]
    pub objective: CutObjective,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightsFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct AllocateArgs {
    /// Tree JSON written by `cut`.
    #[arg(long, short)]
    pub tree: PathBuf,
    #[arg(long)]
    pub scheme: Scheme,
    #[arg(long, value_enum, default_value_t = WeightsFormat::Csv)]
    pub format: WeightsFormat,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// First out-of-sample return period.
    #[arg(long, conflicts_with = "split_date", required_unless_present = "split_date")]
    pub split_index: Option<usize>,
    /// Last in-sample price date (first timestamp not before it).
    #[arg(long)]
    pub split_date: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "ew,mv,cutn-as1,cutn-as2,cutv-as1,cutv-as2")]
    pub strategies: Vec<String>,
    #[arg(long, default_value_t = 0.0)]
    pub mv_ridge: f64,
    #[arg(long, default_value_t = DEFAULT_ANNUALIZATION)]
    pub annualization: f64,
    /// Report JSON path; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub wealth_csv: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_delimiter = ',', default_value = "12,8")]
    pub blocks: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    pub periods: usize,
    #[arg(long, default_value_t = 0.9)]
    pub within: f64,
    #[arg(long, default_value_t = 0.1)]
    pub across: f64,
    #[arg(long, default_value_t = 0.01)]
    pub volatility: f64,
    #[arg(long, default_value_t = 0.0003)]
    pub drift: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }

    /// `{"error":{"kind":..,"message":..}}`
    pub fn to_json(&self) -> String {
        let (kind, message) = match self {
            CliError::Usage(m) => ("usage", m.clone()),
            CliError::Data(e) => (e.kind(), e.to_string()),
        };
        serde_json::json!({ "error": { "kind": kind, "message": message } }).to_string()
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn emit(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        None => stdout.write_all(text.as_bytes()).map_err(Error::from)?,
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

fn load(input: &InputArgs) -> CliResult<IngestedPrices> {
    Ok(ingest_prices(&input.spec()?)?)
}

pub fn cmd_cut(args: &CutArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let policy = args.policy.policy();
    policy.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let ingested = load(&args.input)?;
    let (prices, degenerate) = if args.input.drop_degenerate {
        drop_degenerate_assets(&ingested.prices, ingested.prices.num_rows())?
    } else {
        (ingested.prices.clone(), Vec::new())
    };
    let graph = market_graph_from_prices(&prices)?;
    let tree = build_cut_tree(&graph, args.objective, &policy)?;
    let manifest = RunManifest {
        command: "cut".into(),
        objective: Some(args.objective),
        policy: Some(policy),
        input: Some(InputDigest::new(&ingested, &prices, args.input.missing, degenerate)),
        ..RunManifest::default()
    };
    let doc = TreeDocument::new(tree, prices.asset_ids().to_vec(), Some(manifest))?;
    emit(args.output.as_deref(), &to_json(&doc), stdout)
}

/// Weights for a tree document; the same path the CLI takes.
pub fn allocate_document(doc: &TreeDocument, scheme: Scheme) -> Result<(ClusterWeights, WeightVector)> {
    let cluster = allocation::allocate(&doc.tree, scheme)?;
    let weights = allocation::asset_weights(&doc.tree, &cluster)?;
    Ok((cluster, weights))
}

pub fn weights_csv(doc: &WeightsDocument) -> String {
    let mut out = String::from("asset_id,weight\n");
    for w in &doc.weights {
        out.push_str(&format!("{},{}\n", w.asset_id, w.weight));
    }
    out
}

pub fn cmd_allocate(args: &AllocateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    if !matches!(args.scheme, Scheme::As1 | Scheme::As2) {
        return Err(CliError::Usage("--scheme must be as1 or as2".into()));
    }
    let text = std::fs::read_to_string(&args.tree).map_err(|e| Error::Io(format!("{}: {e}", args.tree.display())))?;
    let doc = TreeDocument::from_json(&text)?;
    let (cluster, weights) = allocate_document(&doc, args.scheme)?;
    let out = WeightsDocument::new(&doc, &cluster, &weights);
    let text = match args.format {
        WeightsFormat::Csv => weights_csv(&out),
        WeightsFormat::Json => to_json(&out),
    };
    emit(args.output.as_deref(), &text, stdout)
}

pub fn cmd_backtest(args: &BacktestArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let policy = args.policy.policy();
    policy.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let strategies = args
        .strategies
        .iter()
        .map(|s| StrategySpec::parse(s, policy))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if strategies.is_empty() {
        return Err(CliError::Usage("no strategies given".into()));
    }
    if !(args.mv_ridge >= 0.0) || !(args.annualization > 0.0) {
        return Err(CliError::Usage("--mv-ridge must be >= 0 and --annualization > 0".into()));
    }
    let ingested = load(&args.input)?;
    let split = match (&args.split_index, &args.split_date) {
        (Some(i), _) => *i,
        (None, Some(d)) => resolve_split_date(&ingested.prices, d)?,
        (None, None) => return Err(CliError::Usage("need --split-index or --split-date".into())),
    };
    let (prices, degenerate) = if args.input.drop_degenerate {
        // only in-sample information decides what is degenerate
        let rows = (split + 1).min(ingested.prices.num_rows());
        drop_degenerate_assets(&ingested.prices, rows)?
    } else {
        (ingested.prices.clone(), Vec::new())
    };
    let config = BacktestConfig {
        split_index: split,
        strategies,
        annualization_factor: args.annualization,
        mv_ridge: args.mv_ridge,
    };
    let report = run_backtest(&prices, &config)?;
    let manifest = RunManifest {
        command: "backtest".into(),
        policy: Some(policy),
        strategies: report.strategies.iter().map(|s| s.name.clone()).collect(),
        split_index: Some(split),
        split_date: prices.timestamps().get(split).cloned(),
        mv_ridge: Some(args.mv_ridge),
        annualization_factor: Some(args.annualization),
        input: Some(InputDigest::new(&ingested, &prices, args.input.missing, degenerate)),
        ..RunManifest::default()
    };
    let doc = BacktestDocument {
        schema_version: SCHEMA_VERSION,
        manifest,
        asset_ids: prices.asset_ids().to_vec(),
        out_sample_dates: prices.timestamps()[split..].to_vec(),
        report,
    };
    if let Some(p) = &args.wealth_csv {
        emit(Some(p), &wealth_csv(&doc), stdout)?;
    }
    if let Some(p) = &args.svg {
        emit(Some(p), &wealth_svg(&doc), stdout)?;
    }
    emit(args.output.as_deref(), &to_json(&doc), stdout)
}

pub fn prices_csv(prices: &PriceMatrix) -> String {
    let mut out = String::from("date");
    for id in prices.asset_ids() {
        out.push(',');
        out.push_str(id);
    }
    out.push('\n');
    let p = prices.prices();
    for (t, date) in prices.timestamps().iter().enumerate() {
        out.push_str(date);
        for i in 0..prices.num_assets() {
            out.push(',');
            out.push_str(&p[(t, i)].to_string());
        }
        out.push('\n');
    }
    out
}

pub fn cmd_synth(args: &SynthArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let market = BlockMarket {
        block_sizes: args.blocks.clone(),
        periods: args.periods,
        within_corr: args.within,
        across_corr: args.across,
        volatility: args.volatility,
        drift: args.drift,
        seed: args.seed,
    }
    .generate()
    .map_err(|e| CliError::Usage(e.to_string()))?;
    emit(args.output.as_deref(), &prices_csv(&market.prices), stdout)
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code; errors go to `stderr` as JSON.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return EXIT_OK;
            }
            let _ = writeln!(stderr, "{e}");
            let _ = writeln!(stderr, "{}", CliError::Usage(e.kind().to_string()).to_json());
            return EXIT_USAGE;
        }
    };
    let outcome = match &cli.command {
        Command::Cut(a) => cmd_cut(a, stdout),
        Command::Allocate(a) => cmd_allocate(a, stdout),
        Command::Backtest(a) => cmd_backtest(a, stdout),
        Command::Synth(a) => cmd_synth(a, stdout),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.to_json());
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
