//! Super-martingale and martingale verdicts relative to a measure set,
//! essential-supremum processes and the constructive class of local-regular
//! super-martingales built from unit claims.

use crate::decomposition::Decomposition;
use crate::error::{Error, Result};
use crate::measure::{self, Attainer, MeasureSet};
use crate::space::{AdaptedProcess, FilteredSpace};
use crate::tol;

/// One failed conditional-expectation inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Step `m`: the check compares `E{f_m | F_{m-1}}` with `f_{m-1}`.
    pub time: usize,
    /// Cell of `F_{m-1}`.
    pub cell: usize,
    /// `E^Q{f_m | F_{m-1}} - f_{m-1}` at the offending measure.
    pub gap: f64,
    pub attainer: Attainer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

pub(crate) fn ensure_on_space(space: &FilteredSpace, f: &AdaptedProcess) -> Result<()> {
    let report = space.check_adapted(f.rows())?;
    match report.violations.first() {
        Some(&(time, cell)) => Err(Error::NotAdapted { time, cell }),
        None => Ok(()),
    }
}

fn scan(space: &FilteredSpace, set: &MeasureSet, f: &AdaptedProcess, both_sides: bool) -> Result<Verdict> {
    ensure_on_space(space, f)?;
    let mut violations = Vec::new();
    for m in 1..=space.horizon() {
        for id in 0..space.cells(m - 1).len() {
            let prev = f.on_cell(space, m - 1, id);
            let hi = set.max_conditional(space, f.row(m), m - 1, id)?;
            if hi.value - prev > tol::EQ {
                violations.push(Violation {
                    time: m,
                    cell: id,
                    gap: hi.value - prev,
                    attainer: hi.attainer,
                });
            }
            if both_sides {
                let lo = set.min_conditional(space, f.row(m), m - 1, id)?;
                if prev - lo.value > tol::EQ {
                    violations.push(Violation {
                        time: m,
                        cell: id,
                        gap: lo.value - prev,
                        attainer: lo.attainer,
                    });
                }
            }
        }
    }
    Ok(Verdict { violations })
}

/// `E^Q{f_m | F_{m-1}} <= f_{m-1} + τ_eq` on every cell for every member.
pub fn is_supermartingale(space: &FilteredSpace, set: &MeasureSet, f: &AdaptedProcess) -> Result<Verdict> {
    scan(space, set, f, false)
}

/// Equality version of [`is_supermartingale`].
pub fn is_martingale(space: &FilteredSpace, set: &MeasureSet, f: &AdaptedProcess) -> Result<Verdict> {
    scan(space, set, f, true)
}

/// `f_m = ess sup_Q E^Q{ξ | F_m}` for `m = 0..=N`.
pub fn ess_sup_process(space: &FilteredSpace, set: &MeasureSet, xi: &[f64]) -> Result<AdaptedProcess> {
    let rows = (0..=space.horizon())
        .map(|t| measure::ess_sup_conditional(space, set, xi, t).map(|e| e.row))
        .collect::<Result<Vec<_>>>()?;
    Ok(AdaptedProcess::from_rows_unchecked(rows))
}

/// `E^Q{ξ0 | F_m}` for a unit claim, verified to be the same for every member.
pub fn unit_claim_martingale(space: &FilteredSpace, set: &MeasureSet, xi0: &[f64]) -> Result<AdaptedProcess> {
    if !measure::is_unit_claim(space, set, xi0)? {
        return Err(Error::NotUnitClaim);
    }
    measure::measure_independent_martingale(space, set, xi0)
}

/// One summand `C · f_m · E{ξ | F_m}` of a class-K process.
#[derive(Debug, Clone, PartialEq)]
pub struct KTerm {
    pub claim: Vec<f64>,
    /// Pathwise nonincreasing adapted weights.
    pub weights: AdaptedProcess,
    pub coefficient: f64,
}

/// `Σ_i C_i · f^i_m · E{ξ_i | F_m}`.
pub fn class_k_supermartingale(space: &FilteredSpace, set: &MeasureSet, terms: &[KTerm]) -> Result<AdaptedProcess> {
    let n = space.outcome_count();
    let mut rows = vec![vec![0.0; n]; space.horizon() + 1];
    for (i, term) in terms.iter().enumerate() {
        if !(term.coefficient.is_finite() && term.coefficient >= 0.0) {
            return Err(Error::InvalidArgument(format!("term {i} has a negative coefficient")));
        }
        ensure_on_space(space, &term.weights)?;
        for m in 1..=space.horizon() {
            for w in 0..n {
                if term.weights.value(m, w) > term.weights.value(m - 1, w) + tol::EQ {
                    return Err(Error::NotNonincreasing { term: i, time: m });
                }
            }
        }
        let mart = unit_claim_martingale(space, set, &term.claim)?;
        for (t, row) in rows.iter_mut().enumerate() {
            for (w, v) in row.iter_mut().enumerate() {
                *v += term.coefficient * term.weights.value(t, w) * mart.value(t, w);
            }
        }
    }
    Ok(AdaptedProcess::from_rows_unchecked(rows))
}

/// Rewrites a decomposed process `f = M - g` as two class-K terms:
/// `(ξ = M_N / f_0, weights ≡ f_0)` and `(ξ ≡ 1, weights = -g)`.
pub fn k_representation(
    space: &FilteredSpace,
    set: &MeasureSet,
    f: &AdaptedProcess,
    dec: &Decomposition,
) -> Result<Vec<KTerm>> {
    let check = dec.verify(space, set, f)?;
    if !check.is_valid() {
        return Err(Error::InvalidDecomposition(check.summary()));
    }
    let f0 = f.value(0, 0);
    if f0.abs() <= tol::EQ {
        return Err(Error::ZeroInitialValue);
    }
    let n = space.outcome_count();
    let claim: Vec<f64> = dec
        .martingale()
        .terminal()
        .iter()
        .map(|v| {
            let x = v / f0;
            // clamp rounding noise so the claim stays nonnegative
            if x < 0.0 && x > -tol::EQ {
                0.0
            } else {
                x
            }
        })
        .collect();
    if !measure::is_unit_claim(space, set, &claim)? {
        return Err(Error::NotUnitClaim);
    }
    let lead = KTerm {
        claim,
        weights: AdaptedProcess::constant(space, f0),
        coefficient: 1.0,
    };
    let drag = KTerm {
        claim: vec![1.0; n],
        weights: AdaptedProcess::from_rows_unchecked(
            dec.compensator()
                .rows()
                .iter()
                .map(|r| r.iter().map(|v| -v).collect())
                .collect(),
        ),
        coefficient: 1.0,
    };
    Ok(vec![lead, drag])
}
