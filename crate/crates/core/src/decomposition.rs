//! Optional (local-regular) decomposition `f = M - g` of super-martingales.
//!
//! Two constructions are provided:
//!
//! * [`local_regular_witness`] works for any measure set. For each step `m`
//!   and each cell `A` of `F_{m-1}` it looks for a nonnegative
//!   `F_m`-measurable increment `ḡ` on `A` with
//!   `f_{m-1} - E^Q{f_m | A} = E^Q{ḡ | A}` for every member `Q`. The
//!   condition is linear in `ḡ` and only needs to hold at the extreme points,
//!   so each cell is an independent small LP.
//! * [`optional_decomposition_complete`] follows the ratio construction for
//!   complete measure sets: it bounds `f_n / f_{n-1}` by a one-step unit
//!   claim `1 + α_n d^n` built from the increments of a unit-claim martingale.

use crate::calculus::{self, ensure_on_space};
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation};
use crate::measure::{self, MeasureSet};
use crate::space::{AdaptedProcess, FilteredSpace};
use crate::tol;

/// `f = M - g` with `M` a martingale for the set and `g` nondecreasing,
/// `g_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    martingale: AdaptedProcess,
    compensator: AdaptedProcess,
    step_claims: Option<Vec<Vec<f64>>>,
}

impl Decomposition {
    pub fn new(martingale: AdaptedProcess, compensator: AdaptedProcess, step_claims: Option<Vec<Vec<f64>>>) -> Self {
        Self {
            martingale,
            compensator,
            step_claims,
        }
    }

    pub fn martingale(&self) -> &AdaptedProcess {
        &self.martingale
    }

    /// Cumulative compensator `g`.
    pub fn compensator(&self) -> &AdaptedProcess {
        &self.compensator
    }

    /// One-step unit claims `ξ⁰_n`, `n = 1..=N`, when the ratio construction
    /// produced the decomposition.
    pub fn step_claims(&self) -> Option<&[Vec<f64>]> {
        self.step_claims.as_deref()
    }

    /// Re-checks every invariant of the decomposition against `f`.
    pub fn verify(&self, space: &FilteredSpace, set: &MeasureSet, f: &AdaptedProcess) -> Result<DecompositionCheck> {
        ensure_on_space(space, f)?;
        ensure_on_space(space, &self.martingale)?;
        ensure_on_space(space, &self.compensator)?;

        let reconstruction_error = f.max_abs_diff(&self.martingale.axpy(-1.0, &self.compensator));
        let initial_compensator = self.compensator.row(0).iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let mut min_increment = f64::INFINITY;
        for m in 1..=space.horizon() {
            for w in 0..space.outcome_count() {
                min_increment = min_increment.min(self.compensator.value(m, w) - self.compensator.value(m - 1, w));
            }
        }
        let martingale_violations = calculus::is_martingale(space, set, &self.martingale)?.violations.len();

        // f_{m-1} - E^Q{f_m | A} = E^Q{g_m - g_{m-1} | A} at every extreme point
        let mut witness_residual: f64 = 0.0;
        for m in 1..=space.horizon() {
            let increment: Vec<f64> = (0..space.outcome_count())
                .map(|w| self.compensator.value(m, w) - self.compensator.value(m - 1, w))
                .collect();
            for id in 0..space.cells(m - 1).len() {
                let prev = f.on_cell(space, m - 1, id);
                for v in set.extreme_points() {
                    let (Some(ef), Some(eg)) = (
                        measure::conditional_on_cell(space, v, f.row(m), m - 1, id),
                        measure::conditional_on_cell(space, v, &increment, m - 1, id),
                    ) else {
                        continue;
                    };
                    witness_residual = witness_residual.max((prev - ef - eg).abs());
                }
            }
        }

        let mut step_claim_residual: f64 = 0.0;
        if let Some(claims) = &self.step_claims {
            for (i, claim) in claims.iter().enumerate() {
                let n = i + 1;
                for id in 0..space.cells(n - 1).len() {
                    let hi = set.max_conditional(space, claim, n - 1, id)?.value;
                    let lo = set.min_conditional(space, claim, n - 1, id)?.value;
                    step_claim_residual = step_claim_residual.max((hi - 1.0).abs()).max((lo - 1.0).abs());
                }
            }
        }

        Ok(DecompositionCheck {
            reconstruction_error,
            initial_compensator,
            min_increment: if min_increment.is_finite() { min_increment } else { 0.0 },
            martingale_violations,
            witness_residual,
            step_claim_residual,
        })
    }
}

/// Outcome of [`Decomposition::verify`].
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionCheck {
    /// `max |f - (M - g)|`.
    pub reconstruction_error: f64,
    /// `max |g_0|`.
    pub initial_compensator: f64,
    /// Smallest pathwise increment of `g`.
    pub min_increment: f64,
    /// Cells where `M` fails the martingale check.
    pub martingale_violations: usize,
    /// Largest residual of the one-step witness identity over extreme points.
    pub witness_residual: f64,
    /// Largest `|E^Q{ξ⁰_n | F_{n-1}} - 1|` over step claims, 0 when absent.
    pub step_claim_residual: f64,
}

impl DecompositionCheck {
    pub fn is_valid(&self) -> bool {
        self.reconstruction_error <= tol::EQ
            && self.initial_compensator <= tol::EQ
            && self.min_increment >= -tol::EQ
            && self.martingale_violations == 0
            && self.witness_residual <= tol::EQ
            && self.step_claim_residual <= tol::EQ
    }

    pub fn summary(&self) -> String {
        format!(
            "reconstruction {:.3e}, g0 {:.3e}, min dg {:.3e}, martingale violations {}, witness residual {:.3e}, step claims {:.3e}",
            self.reconstruction_error,
            self.initial_compensator,
            self.min_increment,
            self.martingale_violations,
            self.witness_residual,
            self.step_claim_residual
        )
    }
}

fn require_supermartingale(space: &FilteredSpace, set: &MeasureSet, f: &AdaptedProcess) -> Result<()> {
    let verdict = calculus::is_supermartingale(space, set, f)?;
    match verdict.violations.first() {
        Some(v) => Err(Error::NotSupermartingale {
            time: v.time,
            cell: v.cell,
        }),
        None => Ok(()),
    }
}

fn finish(space: &FilteredSpace, set: &MeasureSet, f: &AdaptedProcess, dec: Decomposition) -> Result<Decomposition> {
    let check = dec.verify(space, set, f)?;
    if !check.is_valid() {
        return Err(Error::InvalidDecomposition(check.summary()));
    }
    Ok(dec)
}

/// Finds a local-regular decomposition by solving the one-step witness
/// system on every cell, or reports the first cell where none exists.
///
/// When every member gives the same conditional drift on a cell the witness
/// is taken constant there, which reproduces the classical Doob compensator
/// for singleton sets.
pub fn local_regular_witness(space: &FilteredSpace, set: &MeasureSet, f: &AdaptedProcess) -> Result<Decomposition> {
    require_supermartingale(space, set, f)?;
    let n = space.outcome_count();
    let mut g = vec![vec![0.0; n]; space.horizon() + 1];

    for m in 1..=space.horizon() {
        let mut step = vec![0.0; n];
        for id in 0..space.cells(m - 1).len() {
            let kids = space.children(m - 1, id);
            let prev = f.on_cell(space, m - 1, id);
            let rows = witness_rows(space, set, f, m, id, prev);
            let witness = solve_cell(&rows, kids.len()).ok_or(Error::Infeasible { time: m, cell: id })?;
            for (slot, &c) in kids.iter().enumerate() {
                for &w in space.cell(m, c) {
                    step[w] = witness[slot];
                }
            }
        }
        for w in 0..n {
            g[m][w] = g[m - 1][w] + step[w];
        }
    }

    let compensator = AdaptedProcess::from_rows_unchecked(g);
    let martingale = f.axpy(1.0, &compensator);
    finish(space, set, f, Decomposition::new(martingale, compensator, None))
}

/// Distinct conditional child laws at a cell, each paired with the drift
/// `f_{m-1} - E^Q{f_m | A}` it induces.
fn witness_rows(
    space: &FilteredSpace,
    set: &MeasureSet,
    f: &AdaptedProcess,
    m: usize,
    id: usize,
    prev: f64,
) -> Vec<(Vec<f64>, f64)> {
    let kids = space.children(m - 1, id);
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for v in set.extreme_points() {
        let mass = space.cell_mass(v, m - 1, id);
        if mass <= 0.0 {
            continue;
        }
        let law: Vec<f64> = kids.iter().map(|&c| space.cell_mass(v, m, c) / mass).collect();
        let expected: f64 = kids
            .iter()
            .zip(&law)
            .map(|(&c, p)| p * f.on_cell(space, m, c))
            .sum();
        let drift = prev - expected;
        let duplicate = rows
            .iter()
            .any(|(l, _)| l.iter().zip(&law).all(|(a, b)| (a - b).abs() <= 1e-12));
        if !duplicate {
            rows.push((law, drift));
        }
    }
    rows
}

fn solve_cell(rows: &[(Vec<f64>, f64)], width: usize) -> Option<Vec<f64>> {
    let first = rows.first()?.1;
    if rows.iter().all(|(_, d)| (d - first).abs() <= tol::EQ) {
        return Some(vec![first.max(0.0); width]);
    }
    let mut lp = LinearProgram::minimize(vec![1.0; width]);
    for (law, drift) in rows {
        lp.add(law.clone(), Relation::Eq, *drift);
    }
    lp.solve().ok().map(|s| s.x)
}

/// `α_n` together with the atom that attains the minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaBound {
    pub alpha: f64,
    /// Smallest atom index attaining the minimum, `None` when no increment is
    /// negative.
    pub argmin: Option<usize>,
}

/// `α = min_{i: d_i < 0} (1 - f_i) / (-d_i)`, verified to give
/// `f_i <= 1 + α d_i` on every atom. Both slices are indexed by atom of `F_n`.
pub fn alpha_from_increments(n: usize, increments: &[f64], ratio: &[f64]) -> Result<AlphaBound> {
    if increments.len() != ratio.len() {
        return Err(Error::ShapeMismatch {
            what: "ratio atoms",
            expected: increments.len(),
            found: ratio.len(),
        });
    }
    let mut best: Option<(f64, usize)> = None;
    for (i, (&d, &f)) in increments.iter().zip(ratio).enumerate() {
        if d < 0.0 {
            let candidate = (1.0 - f) / -d;
            if best.is_none_or(|(b, _)| candidate < b) {
                best = Some((candidate, i));
            }
        }
    }
    let bound = match best {
        Some((alpha, i)) => AlphaBound {
            alpha,
            argmin: Some(i),
        },
        None => AlphaBound {
            alpha: 0.0,
            argmin: None,
        },
    };
    for (i, (&d, &f)) in increments.iter().zip(ratio).enumerate() {
        if f > 1.0 + bound.alpha * d + tol::EQ {
            return Err(Error::IncompletenessDetected { time: n, atom: i });
        }
    }
    Ok(bound)
}

/// `α_n` for an `F_n`-measurable nonnegative ratio (one value per outcome)
/// normalized so that `sup_Q E^Q ratio <= 1`.
pub fn alpha_coefficient(
    space: &FilteredSpace,
    set: &MeasureSet,
    xi0: &[f64],
    n: usize,
    ratio: &[f64],
) -> Result<AlphaBound> {
    if n == 0 || n > space.horizon() {
        return Err(Error::IndexOutOfRange {
            what: "time",
            index: n,
            bound: space.horizon() + 1,
        });
    }
    space.check_vector("ratio", ratio)?;
    if ratio.iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidArgument("ratio must be nonnegative".into()));
    }
    let per_atom = atom_values(space, n, ratio)?;
    let sup = set.sup_expectation(space, ratio)?;
    if sup > 1.0 + tol::EQ {
        return Err(Error::InvalidArgument(format!(
            "ratio is not normalized: sup expectation {sup}"
        )));
    }
    let inc = measure::increment_process(space, set, xi0)?;
    alpha_from_increments(n, inc.at(n), &per_atom)
}

fn atom_values(space: &FilteredSpace, n: usize, row: &[f64]) -> Result<Vec<f64>> {
    space
        .cells(n)
        .iter()
        .enumerate()
        .map(|(id, cell)| {
            let v = row[cell[0]];
            if cell.iter().all(|&w| tol::close(row[w], v)) {
                Ok(v)
            } else {
                Err(Error::NotAdapted { time: n, cell: id })
            }
        })
        .collect()
}

/// Decomposition through the ratio construction on a complete measure set.
///
/// The process is first shifted by `C = 1 - min f` so that its minimum is
/// exactly 1; constants are martingales, so the shift only moves `M`, and
/// `f` and `f + c` produce the same compensator.
pub fn optional_decomposition_complete(
    space: &FilteredSpace,
    set: &MeasureSet,
    xi0: &[f64],
    f: &AdaptedProcess,
) -> Result<Decomposition> {
    require_supermartingale(space, set, f)?;
    let inc = measure::increment_process(space, set, xi0)?;
    let shift = 1.0 - f.min_value();
    let h = f.shifted(shift);
    let n_out = space.outcome_count();

    let mut mart = vec![vec![h.value(0, 0); n_out]; space.horizon() + 1];
    let mut comp = vec![vec![0.0; n_out]; space.horizon() + 1];
    let mut claims = Vec::with_capacity(space.horizon());
    for n in 1..=space.horizon() {
        let ratio: Vec<f64> = (0..n_out).map(|w| h.value(n, w) / h.value(n - 1, w)).collect();
        let scale = set.sup_expectation(space, &ratio)?;
        let normalized: Vec<f64> = ratio.iter().map(|r| r / scale).collect();
        let per_atom = atom_values(space, n, &normalized)?;
        let bound = alpha_from_increments(n, inc.at(n), &per_atom)?;
        let d = inc.row(space, n);
        let claim: Vec<f64> = d.iter().map(|di| 1.0 + bound.alpha * di).collect();
        for w in 0..n_out {
            let prev = h.value(n - 1, w);
            mart[n][w] = mart[n - 1][w] + prev * (claim[w] - 1.0);
            comp[n][w] = comp[n - 1][w] + (prev * claim[w] - h.value(n, w));
        }
        claims.push(claim);
    }
    for row in &mut mart {
        for v in row.iter_mut() {
            *v -= shift;
        }
    }
    let dec = Decomposition::new(
        AdaptedProcess::from_rows_unchecked(mart),
        AdaptedProcess::from_rows_unchecked(comp),
        Some(claims),
    );
    finish(space, set, f, dec)
}
