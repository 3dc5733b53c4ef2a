//! Command-line front end: market files in JSON, plain-text reports.
//!
//! A market file has the sections `outcomes`, `filtration`, `measures`,
//! `processes` and `claims`:
//!
//! ```json
//! {
//!   "outcomes": { "count": 2, "labels": ["up", "down"] },
//!   "filtration": [[[0, 1]], [[0], [1]]],
//!   "measures": { "martingale_assets": ["S"] },
//!   "processes": { "S": [[100, 100], [120, 80]] },
//!   "claims": { "call": [20, 0] }
//! }
//! ```
//!
//! `measures` holds either `generators` (probability vectors) or
//! `martingale_assets` (names of processes). Report numbers use 12
//! significant digits; magnitudes below 1e-11 print as 0.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::calculus;
use crate::decomposition::{self, Decomposition};
use crate::error::Error;
use crate::hedging::{self, PriceMode, TradingStrategy};
use crate::measure::{self, Measure, MeasureSet};
use crate::pricing::{self, FairPriceResult};
use crate::space::{AdaptedProcess, FilteredSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outcomes {
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Measures {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub martingale_assets: Option<Vec<String>>,
}

/// On-disk market description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketFile {
    pub outcomes: Outcomes,
    /// Cells of `F_t` for `t = 0..=N`.
    pub filtration: Vec<Vec<Vec<usize>>>,
    pub measures: Measures,
    #[serde(default)]
    pub processes: BTreeMap<String, Vec<Vec<f64>>>,
    #[serde(default)]
    pub claims: BTreeMap<String, Vec<f64>>,
}

/// Holdings file written by `hedge --out` and read by `check --strategy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyFile {
    pub assets: Vec<String>,
    pub initial_cash: f64,
    pub initial_risky: Vec<f64>,
    /// `cash[t - 1][ω]`.
    pub cash: Vec<Vec<f64>>,
    /// `risky[t - 1][ω][asset]`.
    pub risky: Vec<Vec<Vec<f64>>>,
}

impl StrategyFile {
    pub fn from_strategy(strategy: &TradingStrategy, assets: Vec<String>) -> Self {
        Self {
            assets,
            initial_cash: strategy.initial_cash(),
            initial_risky: strategy.initial_risky().to_vec(),
            cash: strategy
                .cash()
                .values()
                .iter()
                .map(|row| row.iter().map(|v| v[0]).collect())
                .collect(),
            risky: strategy.risky().values().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionFile {
    pub martingale: Vec<Vec<f64>>,
    pub compensator: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_claims: Option<Vec<Vec<f64>>>,
}

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Parse(String),
    Usage(String),
    Domain { context: String, source: Error },
}

impl CliError {
    /// 2 validation, 3 infeasibility, 4 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Io(_) => 4,
            Self::Parse(_) | Self::Usage(_) => 2,
            Self::Domain { source, .. } if source.is_infeasibility() => 3,
            Self::Domain { .. } => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io(m) => write!(f, "i/o: {m}"),
            Self::Parse(m) => write!(f, "parse: {m}"),
            Self::Usage(m) => write!(f, "usage: {m}"),
            Self::Domain { context, source } => write!(f, "{context}: {source}"),
        }
    }
}

impl std::error::Error for CliError {}

trait Context<T> {
    fn context(self, what: impl Into<String>) -> Result<T, CliError>;
}

impl<T> Context<T> for Result<T, Error> {
    fn context(self, what: impl Into<String>) -> Result<T, CliError> {
        self.map_err(|source| CliError::Domain {
            context: what.into(),
            source,
        })
    }
}

/// Validated market.
#[derive(Debug, Clone)]
pub struct Model {
    pub labels: Option<Vec<String>>,
    pub space: FilteredSpace,
    pub set: MeasureSet,
    pub asset_names: Option<Vec<String>>,
    pub processes: BTreeMap<String, AdaptedProcess>,
    pub claims: BTreeMap<String, Vec<f64>>,
}

impl Model {
    pub fn from_file(file: &MarketFile) -> Result<Self, CliError> {
        if let Some(labels) = &file.outcomes.labels {
            if labels.len() != file.outcomes.count {
                return Err(CliError::Domain {
                    context: "outcomes.labels".into(),
                    source: Error::ShapeMismatch {
                        what: "labels",
                        expected: file.outcomes.count,
                        found: labels.len(),
                    },
                });
            }
        }
        let space = FilteredSpace::new(file.outcomes.count, file.filtration.clone()).context("filtration")?;
        let mut processes = BTreeMap::new();
        for (name, rows) in &file.processes {
            let p = AdaptedProcess::new(&space, rows.clone()).context(format!("processes.{name}"))?;
            processes.insert(name.clone(), p);
        }
        for (name, claim) in &file.claims {
            check_claim_vector(&space, claim).context(format!("claims.{name}"))?;
        }
        let (set, asset_names) = match (&file.measures.generators, &file.measures.martingale_assets) {
            (Some(gens), None) => {
                let measures = gens
                    .iter()
                    .enumerate()
                    .map(|(k, g)| Measure::new(g.clone()).context(format!("measures.generators[{k}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                (MeasureSet::hull(&space, measures).context("measures.generators")?, None)
            }
            (None, Some(names)) => {
                let assets = names
                    .iter()
                    .map(|n| {
                        processes
                            .get(n)
                            .cloned()
                            .ok_or_else(|| CliError::Parse(format!("measures.martingale_assets: unknown process `{n}`")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                (
                    MeasureSet::martingale(&space, assets).context("measures.martingale_assets")?,
                    Some(names.clone()),
                )
            }
            _ => {
                return Err(CliError::Parse(
                    "measures: exactly one of `generators` or `martingale_assets` is required".into(),
                ))
            }
        };
        Ok(Self {
            labels: file.outcomes.labels.clone(),
            space,
            set,
            asset_names,
            processes,
            claims: file.claims.clone(),
        })
    }

    pub fn to_file(&self) -> MarketFile {
        let measures = match &self.asset_names {
            Some(names) => Measures {
                generators: None,
                martingale_assets: Some(names.clone()),
            },
            None => Measures {
                generators: Some(self.set.extreme_points().to_vec()),
                martingale_assets: None,
            },
        };
        MarketFile {
            outcomes: Outcomes {
                count: self.space.outcome_count(),
                labels: self.labels.clone(),
            },
            filtration: self.space.partitions().to_vec(),
            measures,
            processes: self
                .processes
                .iter()
                .map(|(k, v)| (k.clone(), v.rows().to_vec()))
                .collect(),
            claims: self.claims.clone(),
        }
    }

    fn process(&self, name: &str) -> Result<&AdaptedProcess, CliError> {
        self.processes
            .get(name)
            .ok_or_else(|| CliError::Usage(format!("unknown process `{name}`")))
    }

    fn claim(&self, name: &str) -> Result<&[f64], CliError> {
        self.claims
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| CliError::Usage(format!("unknown claim `{name}`")))
    }

    /// Asset named explicitly, or the only asset of a polytope.
    fn asset(&self, name: Option<&str>) -> Result<Option<&AdaptedProcess>, CliError> {
        match (name, &self.asset_names) {
            (Some(n), _) => self.process(n).map(Some),
            (None, Some(names)) if names.len() == 1 => self.process(&names[0]).map(Some),
            _ => Ok(None),
        }
    }
}

fn check_claim_vector(space: &FilteredSpace, claim: &[f64]) -> crate::Result<()> {
    if claim.len() != space.outcome_count() {
        return Err(Error::ShapeMismatch {
            what: "claim",
            expected: space.outcome_count(),
            found: claim.len(),
        });
    }
    if claim.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "claim" });
    }
    Ok(())
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

pub fn load_model(path: &Path) -> Result<Model, CliError> {
    let file: MarketFile = parse(path, &read(path)?)?;
    Model::from_file(&file)
}

/// `%.12g`-style rendering with tiny magnitudes shown as 0.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x.abs() < 1e-11 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        trim_zeros(format!("{:.*}", (11 - exp) as usize, x))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| fmt_num(*x)).collect();
    format!("[{}]", items.join(", "))
}

fn write_rows(out: &mut String, title: &str, rows: &[Vec<f64>], first_time: usize, key: &str) {
    let _ = writeln!(out, "{title}:");
    for (i, row) in rows.iter().enumerate() {
        let _ = writeln!(out, "  {key}={}: {}", i + first_time, fmt_vec(row));
    }
}

#[derive(Debug, Parser)]
#[command(name = "supmart", version, about = "Super-martingale calculus, fair prices and superhedges on finite trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Witness,
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Full,
    Generated,
    Call,
    Put,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HedgeMode {
    Full,
    Generated,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a market file and classify its processes.
    Check {
        market: PathBuf,
        /// Holdings file to verify against the market.
        #[arg(long)]
        strategy: Option<PathBuf>,
    },
    /// Decompose a super-martingale as M - g.
    Decompose {
        market: PathBuf,
        process: String,
        #[arg(long, value_enum, default_value = "witness")]
        method: Method,
        /// Unit claim driving the complete-set construction.
        #[arg(long)]
        xi0: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fair price of a claim.
    Price {
        market: PathBuf,
        claim: Option<String>,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Generating unit claims, by name.
        #[arg(long, value_delimiter = ',')]
        t: Vec<String>,
        /// Generate unit claims S_i / S_0 from this asset.
        #[arg(long)]
        t_asset: Option<String>,
        #[arg(long)]
        strike: Option<f64>,
        #[arg(long)]
        d1: Option<f64>,
        #[arg(long)]
        d2: Option<f64>,
        #[arg(long)]
        s0: Option<f64>,
    },
    /// Build and verify a self-financed superhedge.
    Hedge {
        market: PathBuf,
        claim: String,
        #[arg(long, value_enum)]
        mode: HedgeMode,
        #[arg(long, value_delimiter = ',')]
        t: Vec<String>,
        #[arg(long)]
        t_asset: Option<String>,
        /// Where to write the holdings file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Runs one command and returns its report.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Check { market, strategy } => cmd_check(market, strategy.as_deref()),
        Command::Decompose {
            market,
            process,
            method,
            xi0,
            out,
        } => cmd_decompose(market, process, *method, xi0.as_deref(), out.as_deref()),
        Command::Price {
            market,
            claim,
            mode,
            t,
            t_asset,
            strike,
            d1,
            d2,
            s0,
        } => cmd_price(
            market,
            claim.as_deref(),
            *mode,
            &Generators {
                names: t,
                asset: t_asset.as_deref(),
            },
            &BoxFlags {
                strike: *strike,
                d1: *d1,
                d2: *d2,
                s0: *s0,
            },
        ),
        Command::Hedge {
            market,
            claim,
            mode,
            t,
            t_asset,
            out,
        } => cmd_hedge(
            market,
            claim,
            *mode,
            &Generators {
                names: t,
                asset: t_asset.as_deref(),
            },
            out.as_deref(),
        ),
    }
}

fn header(out: &mut String, model: &Model) {
    let cells: Vec<String> = (0..=model.space.horizon())
        .map(|t| model.space.cells(t).len().to_string())
        .collect();
    let _ = writeln!(
        out,
        "space: {} outcomes, horizon {}, cells per time {}",
        model.space.outcome_count(),
        model.space.horizon(),
        cells.join(",")
    );
    match &model.asset_names {
        Some(names) => {
            let _ = writeln!(
                out,
                "measures: martingale polytope over [{}], vertices {}",
                names.join(", "),
                model.set.extreme_points().len()
            );
        }
        None => {
            let _ = writeln!(out, "measures: generator hull, generators {}", model.set.extreme_points().len());
        }
    }
}

pub fn cmd_check(market: &Path, strategy: Option<&Path>) -> Result<String, CliError> {
    let model = load_model(market)?;
    let mut out = String::new();
    header(&mut out, &model);
    for (name, p) in &model.processes {
        let verdict = if calculus::is_martingale(&model.space, &model.set, p).context(name.clone())?.holds() {
            "martingale"
        } else if calculus::is_supermartingale(&model.space, &model.set, p)
            .context(name.clone())?
            .holds()
        {
            "supermartingale"
        } else {
            "neither"
        };
        let _ = writeln!(out, "process {name}: {verdict}");
    }
    for (name, c) in &model.claims {
        let unit = measure::is_unit_claim(&model.space, &model.set, c).context(name.clone())?;
        let _ = writeln!(out, "claim {name}: {}", if unit { "unit claim" } else { "not a unit claim" });
    }
    if let Some(path) = strategy {
        let file: StrategyFile = parse(path, &read(path)?)?;
        let assets = file
            .assets
            .iter()
            .map(|n| model.process(n).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        let strat = TradingStrategy::new(
            &model.space,
            file.initial_cash,
            file.initial_risky.clone(),
            file.cash.clone(),
            file.risky.clone(),
            assets,
        )
        .context("strategy")?;
        let report = hedging::verify_self_financing(&model.space, &strat);
        let _ = writeln!(out, "strategy self-financing: {}", if report.holds() { "yes" } else { "no" });
        for (m, cell, r) in &report.violations {
            let _ = writeln!(out, "  leak at t={m} cell {cell}: {}", fmt_num(*r));
        }
        let capital = hedging::strategy_capital(&strat);
        write_rows(&mut out, "capital", capital.rows(), 0, "t");
        let same = StrategyFile::from_strategy(&strat, file.assets.clone()) == file;
        let _ = writeln!(out, "strategy round-trip: {}", if same { "identical" } else { "differs" });
    }
    Ok(out)
}

pub fn cmd_decompose(
    market: &Path,
    process: &str,
    method: Method,
    xi0: Option<&str>,
    out_path: Option<&Path>,
) -> Result<String, CliError> {
    let model = load_model(market)?;
    let f = model.process(process)?;
    let dec: Decomposition = match method {
        Method::Witness => {
            decomposition::local_regular_witness(&model.space, &model.set, f).context(format!("decompose {process}"))?
        }
        Method::Complete => {
            let name = xi0.ok_or_else(|| CliError::Usage("--method complete needs --xi0".into()))?;
            let xi = model.claim(name)?;
            decomposition::optional_decomposition_complete(&model.space, &model.set, xi, f)
                .context(format!("decompose {process}"))?
        }
    };
    let check = dec.verify(&model.space, &model.set, f).context("verify")?;
    let mut out = String::new();
    let _ = writeln!(out, "process: {process}");
    let _ = writeln!(
        out,
        "method: {}",
        match method {
            Method::Witness => "witness",
            Method::Complete => "complete",
        }
    );
    write_rows(&mut out, "martingale", dec.martingale().rows(), 0, "t");
    write_rows(&mut out, "compensator", dec.compensator().rows(), 0, "t");
    if let Some(claims) = dec.step_claims() {
        write_rows(&mut out, "step claims", claims, 1, "n");
    }
    let _ = writeln!(
        out,
        "verification: {}",
        if check.is_valid() { "valid" } else { "invalid" }
    );
    if let Some(path) = out_path {
        let file = DecompositionFile {
            martingale: dec.martingale().rows().to_vec(),
            compensator: dec.compensator().rows().to_vec(),
            step_claims: dec.step_claims().map(<[_]>::to_vec),
        };
        write(path, &to_json(&file)?)?;
    }
    Ok(out)
}

struct Generators<'a> {
    names: &'a [String],
    asset: Option<&'a str>,
}

struct BoxFlags {
    strike: Option<f64>,
    d1: Option<f64>,
    d2: Option<f64>,
    s0: Option<f64>,
}

/// `{S_i / S_0 : i = 0..=N}` for one asset.
pub fn asset_ratio_claims(space: &FilteredSpace, asset: &AdaptedProcess) -> Vec<Vec<f64>> {
    (0..=space.horizon())
        .map(|i| {
            (0..space.outcome_count())
                .map(|w| asset.value(i, w) / asset.value(0, w))
                .collect()
        })
        .collect()
}

fn generating_claims(model: &Model, gens: &Generators<'_>) -> Result<Vec<Vec<f64>>, CliError> {
    if !gens.names.is_empty() {
        if gens.asset.is_some() {
            return Err(CliError::Usage("use either --t or --t-asset".into()));
        }
        return gens.names.iter().map(|n| model.claim(n).map(<[f64]>::to_vec)).collect();
    }
    match model.asset(gens.asset)? {
        Some(a) => Ok(asset_ratio_claims(&model.space, a)),
        None => Err(CliError::Usage(
            "generated mode needs --t CLAIMS or --t-asset NAME (or a single-asset polytope)".into(),
        )),
    }
}

fn write_price(out: &mut String, r: &FairPriceResult) {
    let _ = writeln!(out, "price: {}", fmt_num(r.price));
    let _ = writeln!(out, "lower bound: {}", fmt_num(r.lower_bound));
    let _ = writeln!(out, "witness: {}", fmt_vec(&r.witness_claim));
}

fn cmd_price(
    market: &Path,
    claim: Option<&str>,
    mode: Mode,
    gens: &Generators<'_>,
    flags: &BoxFlags,
) -> Result<String, CliError> {
    let model = load_model(market)?;
    let mut out = String::new();
    match mode {
        Mode::Full | Mode::Generated => {
            if flags.strike.is_some() || flags.d1.is_some() || flags.d2.is_some() || flags.s0.is_some() {
                return Err(CliError::Usage("--strike/--d1/--d2/--s0 apply to call and put modes".into()));
            }
            let name = claim.ok_or_else(|| CliError::Usage("a claim name is required".into()))?;
            let f = model.claim(name)?;
            let r = if mode == Mode::Full {
                if !gens.names.is_empty() || gens.asset.is_some() {
                    return Err(CliError::Usage("--t/--t-asset apply to generated mode".into()));
                }
                pricing::fair_price_full(&model.space, &model.set, f)
            } else {
                let t = generating_claims(&model, gens)?;
                pricing::fair_price_generated(&model.space, &model.set, &t, f)
            }
            .context(format!("price {name}"))?;
            let _ = writeln!(out, "claim: {name}");
            let _ = writeln!(out, "mode: {}", if mode == Mode::Full { "full" } else { "generated" });
            write_price(&mut out, &r);
        }
        Mode::Call | Mode::Put => {
            if !gens.names.is_empty() {
                return Err(CliError::Usage("--t applies to generated mode".into()));
            }
            let k = flags
                .strike
                .ok_or_else(|| CliError::Usage("--strike is required in call and put modes".into()))?;
            let asset = model.asset(gens.asset)?;
            let n = model.space.horizon();
            let terminal = |pick: fn(f64, f64) -> f64| asset.map(|a| a.terminal().iter().copied().reduce(pick).unwrap_or(0.0));
            let is_call = mode == Mode::Call;
            let closed = if is_call {
                let s0 = flags.s0.or(asset.map(|a| a.value(0, 0)));
                let d2 = flags.d2.or(terminal(f64::max));
                let (s0, d2) = s0
                    .zip(d2)
                    .ok_or_else(|| CliError::Usage("call mode needs --s0 and --d2 or an asset".into()))?;
                pricing::euro_call_price(s0, d2, k).context("closed form")?
            } else {
                let d1 = flags
                    .d1
                    .or(terminal(f64::min))
                    .ok_or_else(|| CliError::Usage("put mode needs --d1 or an asset".into()))?;
                pricing::euro_put_price(d1, k).context("closed form")?
            };
            let _ = writeln!(out, "mode: {}", if is_call { "call" } else { "put" });
            let _ = writeln!(out, "strike: {}", fmt_num(k));
            let _ = writeln!(out, "closed form: {}", fmt_num(closed));
            if let (Some(a), true) = (asset, model.set.as_polytope().is_some()) {
                let payoff: Vec<f64> = match claim {
                    Some(name) => model.claim(name)?.to_vec(),
                    None => a
                        .row(n)
                        .iter()
                        .map(|s| if is_call { (s - k).max(0.0) } else { (k - s).max(0.0) })
                        .collect(),
                };
                let t = asset_ratio_claims(&model.space, a);
                let r = pricing::fair_price_generated(&model.space, &model.set, &t, &payoff).context("lp price")?;
                let _ = writeln!(out, "lp price (generated, T = S_i/S_0): {}", fmt_num(r.price));
                let _ = writeln!(out, "lower bound: {}", fmt_num(r.lower_bound));
            }
        }
    }
    Ok(out)
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Io(e.to_string()))
}

fn cmd_hedge(
    market: &Path,
    claim: &str,
    mode: HedgeMode,
    gens: &Generators<'_>,
    out_path: Option<&Path>,
) -> Result<String, CliError> {
    let model = load_model(market)?;
    let f = model.claim(claim)?;
    let price_mode = match mode {
        HedgeMode::Full => {
            if !gens.names.is_empty() || gens.asset.is_some() {
                return Err(CliError::Usage("--t/--t-asset apply to generated mode".into()));
            }
            PriceMode::Full
        }
        HedgeMode::Generated => PriceMode::Generated(generating_claims(&model, gens)?),
    };
    let hedge = hedging::superhedge(&model.space, &model.set, f, &price_mode).context(format!("hedge {claim}"))?;
    let names = model.asset_names.clone().unwrap_or_default();
    let strat = &hedge.strategy;
    let mut out = String::new();
    let _ = writeln!(out, "claim: {claim}");
    let _ = writeln!(
        out,
        "mode: {}",
        match mode {
            HedgeMode::Full => "full",
            HedgeMode::Generated => "generated",
        }
    );
    write_price(&mut out, &hedge.price);
    let _ = writeln!(out, "holdings [{}]:", names.join(", "));
    let _ = writeln!(
        out,
        "  t=0: cash {} risky {}",
        fmt_num(strat.initial_cash()),
        fmt_vec(strat.initial_risky())
    );
    for m in 1..=model.space.horizon() {
        for (id, cell) in model.space.cells(m - 1).iter().enumerate() {
            let w = cell[0];
            let _ = writeln!(
                out,
                "  t={m} cell {id}: cash {} risky {}",
                fmt_num(strat.cash_at(m, w)),
                fmt_vec(strat.risky_at(m, w))
            );
        }
    }
    let capital = hedging::strategy_capital(strat);
    write_rows(&mut out, "capital", capital.rows(), 0, "t");
    let report = hedging::verify_self_financing(&model.space, strat);
    let _ = writeln!(out, "self-financing: {}", if report.holds() { "yes" } else { "no" });
    let surplus = capital
        .terminal()
        .iter()
        .zip(f)
        .map(|(x, c)| x - c)
        .fold(f64::INFINITY, f64::min);
    let _ = writeln!(
        out,
        "domination: {} (min surplus {})",
        if surplus >= -crate::tol::EQ { "yes" } else { "no" },
        fmt_num(surplus)
    );
    if let Some(path) = out_path {
        write(path, &to_json(&StrategyFile::from_strategy(strat, names))?)?;
    }
    Ok(out)
}
