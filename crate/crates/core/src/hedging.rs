//! Martingale representation in the traded assets and the self-financed
//! superhedging strategy built from a fair-price witness.

use nalgebra::{DMatrix, DVector};

use crate::calculus::ensure_on_space;
use crate::decomposition::Decomposition;
use crate::error::{Error, Result};
use crate::measure::{self, MartingalePolytope, MeasureSet};
use crate::pricing::{self, FairPriceResult};
use crate::space::{AdaptedProcess, FilteredSpace, PredictableProcess};
use crate::tol;

/// Holdings `(H̄⁰_m, H̄_m)` for `m = 0..=N`; entries for `m >= 1` are
/// predictable, time-0 holdings are plain numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct TradingStrategy {
    initial_cash: f64,
    initial_risky: Vec<f64>,
    cash: PredictableProcess,
    risky: PredictableProcess,
    assets: Vec<AdaptedProcess>,
}

impl TradingStrategy {
    pub fn new(
        space: &FilteredSpace,
        initial_cash: f64,
        initial_risky: Vec<f64>,
        cash: Vec<Vec<f64>>,
        risky: Vec<Vec<Vec<f64>>>,
        assets: Vec<AdaptedProcess>,
    ) -> Result<Self> {
        for a in &assets {
            ensure_on_space(space, a)?;
        }
        if initial_risky.len() != assets.len() {
            return Err(Error::ShapeMismatch {
                what: "initial risky holdings",
                expected: assets.len(),
                found: initial_risky.len(),
            });
        }
        if !initial_cash.is_finite() || initial_risky.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "initial holdings" });
        }
        let cash = cash
            .into_iter()
            .map(|row| row.into_iter().map(|v| vec![v]).collect())
            .collect();
        let cash = PredictableProcess::new(space, cash)?;
        let risky = PredictableProcess::new(space, risky)?;
        if space.horizon() > 0 && risky.width() != assets.len() {
            return Err(Error::ShapeMismatch {
                what: "risky holdings",
                expected: assets.len(),
                found: risky.width(),
            });
        }
        Ok(Self {
            initial_cash,
            initial_risky,
            cash,
            risky,
            assets,
        })
    }

    /// All-zero holdings in the given assets.
    pub fn zero(space: &FilteredSpace, assets: Vec<AdaptedProcess>) -> Result<Self> {
        let n = space.outcome_count();
        let k = assets.len();
        Self::new(
            space,
            0.0,
            vec![0.0; k],
            vec![vec![0.0; n]; space.horizon()],
            vec![vec![vec![0.0; k]; n]; space.horizon()],
            assets,
        )
    }

    pub fn initial_cash(&self) -> f64 {
        self.initial_cash
    }

    pub fn initial_risky(&self) -> &[f64] {
        &self.initial_risky
    }

    /// `H̄⁰_t` on outcome `w`, `t = 0..=N`.
    pub fn cash_at(&self, t: usize, w: usize) -> f64 {
        if t == 0 {
            self.initial_cash
        } else {
            self.cash.at(t, w)[0]
        }
    }

    /// `H̄_t` on outcome `w`, `t = 0..=N`.
    pub fn risky_at(&self, t: usize, w: usize) -> &[f64] {
        if t == 0 {
            &self.initial_risky
        } else {
            self.risky.at(t, w)
        }
    }

    pub fn cash(&self) -> &PredictableProcess {
        &self.cash
    }

    pub fn risky(&self) -> &PredictableProcess {
        &self.risky
    }

    pub fn assets(&self) -> &[AdaptedProcess] {
        &self.assets
    }

    fn horizon(&self) -> usize {
        self.cash.values().len()
    }

    fn outcome_count(&self) -> usize {
        self.assets
            .first()
            .map(|a| a.row(0).len())
            .or_else(|| self.cash.values().first().map(Vec::len))
            .unwrap_or(0)
    }

    fn position(&self, t: usize, w: usize, prices_at: usize) -> f64 {
        let risky = self.risky_at(t, w);
        self.cash_at(t, w) + risky.iter().zip(&self.assets).map(|(h, s)| h * s.value(prices_at, w)).sum::<f64>()
    }
}

/// `X_t = H̄⁰_t + ⟨H̄_t, S_t⟩`.
pub fn strategy_capital(strategy: &TradingStrategy) -> AdaptedProcess {
    let rows = (0..=strategy.horizon())
        .map(|t| (0..strategy.outcome_count()).map(|w| strategy.position(t, w, t)).collect())
        .collect();
    AdaptedProcess::from_rows_unchecked(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfFinancingReport {
    /// `(m, cell of F_{m-1}, residual)` where `|ΔH̄⁰_m + ⟨ΔH̄_m, S_{m-1}⟩|`
    /// exceeds the tolerance.
    pub violations: Vec<(usize, usize, f64)>,
    pub max_residual: f64,
}

impl SelfFinancingReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that rebalancing at every time is funded by the current position.
pub fn verify_self_financing(space: &FilteredSpace, strategy: &TradingStrategy) -> SelfFinancingReport {
    let mut violations = Vec::new();
    let mut max_residual: f64 = 0.0;
    for m in 1..=space.horizon() {
        for (id, cell) in space.cells(m - 1).iter().enumerate() {
            let w = cell[0];
            let before = strategy.position(m - 1, w, m - 1);
            let after = strategy.position(m, w, m - 1);
            let residual = (after - before).abs();
            max_residual = max_residual.max(residual);
            if residual > tol::EQ * (1.0 + before.abs()) {
                violations.push((m, id, residual));
            }
        }
    }
    SelfFinancingReport {
        violations,
        max_residual,
    }
}

/// Predictable `H` with `M_n = M_0 + Σ_{i<=n} ⟨H_i, S_i - S_{i-1}⟩`, solved per
/// node by minimum-norm least squares.
pub fn martingale_representation(
    space: &FilteredSpace,
    polytope: &MartingalePolytope,
    process: &AdaptedProcess,
) -> Result<PredictableProcess> {
    ensure_on_space(space, process)?;
    let assets = polytope.assets();
    let k = assets.len();
    let mut values = vec![vec![vec![0.0; k]; space.outcome_count()]; space.horizon()];
    for m in 1..=space.horizon() {
        for id in 0..space.cells(m - 1).len() {
            let kids = space.children(m - 1, id);
            let parent = space.cell(m - 1, id)[0];
            let ds = DMatrix::from_fn(kids.len(), k, |r, j| {
                let w = space.cell(m, kids[r])[0];
                assets[j].value(m, w) - assets[j].value(m - 1, w)
            });
            let dm = DVector::from_fn(kids.len(), |r, _| {
                let w = space.cell(m, kids[r])[0];
                process.value(m, w) - process.value(m - 1, parent)
            });
            let h = ds
                .clone()
                .svd(true, true)
                .solve(&dm, 1e-12)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let residual = (&ds * &h - &dm).amax();
            if residual > tol::EQ * (1.0 + dm.amax()) {
                return Err(Error::NoRepresentation {
                    time: m,
                    cell: id,
                    residual,
                });
            }
            for &w in space.cell(m - 1, id) {
                values[m - 1][w] = h.iter().copied().collect();
            }
        }
    }
    PredictableProcess::new(space, values)
}

/// How the superhedging price is computed.
#[derive(Debug, Clone, PartialEq)]
pub enum PriceMode {
    Full,
    /// Unit claims spanning the admissible witnesses.
    Generated(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Superhedge {
    pub strategy: TradingStrategy,
    /// `M_m = f_0 E{ζ_0 | F_m}` with `g_N = M_N - f_N` and `g_m = 0` before.
    pub decomposition: Decomposition,
    pub price: FairPriceResult,
}

impl Superhedge {
    /// The process `M_m` for `m < N`, `f_N` at `N`.
    pub fn spliced(&self) -> AdaptedProcess {
        self.decomposition.martingale().axpy(-1.0, self.decomposition.compensator())
    }
}

/// Prices `claim`, then replicates `f_0 E{ζ_0 | F_m}` in the assets of the
/// polytope. The terminal capital dominates the claim by `g_N`.
pub fn superhedge(space: &FilteredSpace, set: &MeasureSet, claim: &[f64], mode: &PriceMode) -> Result<Superhedge> {
    let polytope = set
        .as_polytope()
        .ok_or_else(|| Error::InvalidArgument("superhedging needs a martingale polytope".into()))?;
    let price = match mode {
        PriceMode::Full => pricing::fair_price_full(space, set, claim)?,
        PriceMode::Generated(claims) => pricing::fair_price_generated(space, set, claims, claim)?,
    };
    let f0 = price.price;
    let scaled: Vec<f64> = price.witness_claim.iter().map(|z| f0 * z).collect();
    let mart = measure::measure_independent_martingale(space, set, &scaled)?;
    let h = martingale_representation(space, polytope, &mart)?;

    let n = space.horizon();
    let n_out = space.outcome_count();
    let assets = polytope.assets().to_vec();
    let cash: Vec<Vec<f64>> = (1..=n)
        .map(|m| {
            (0..n_out)
                .map(|w| {
                    let held: f64 = h.at(m, w).iter().zip(&assets).map(|(hj, s)| hj * s.value(m - 1, w)).sum();
                    mart.value(m - 1, w) - held
                })
                .collect()
        })
        .collect();
    let strategy = TradingStrategy::new(space, f0, vec![0.0; assets.len()], cash, h.values().to_vec(), assets)?;

    let mut g = vec![vec![0.0; n_out]; n + 1];
    for w in 0..n_out {
        g[n][w] = mart.value(n, w) - claim[w];
    }
    let decomposition = Decomposition::new(mart, AdaptedProcess::from_rows_unchecked(g), None);
    Ok(Superhedge {
        strategy,
        decomposition,
        price,
    })
}
