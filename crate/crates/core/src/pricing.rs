//! Fair prices of terminal claims: the full LP over unit claims, the LP over a
//! finite family of unit claims, the sup-expectation lower bound and the
//! closed-form European call and put prices on a price box.

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpError, Relation};
use crate::measure::{self, MeasureSet};
use crate::space::FilteredSpace;
use crate::tol;

#[derive(Debug, Clone, PartialEq)]
pub struct FairPriceResult {
    /// `f_0`.
    pub price: f64,
    /// `ζ_0` with `E^Q ζ_0 = 1` for every member and
    /// `f_N <= f_0 E^Q{ζ_0 | F_N}`.
    pub witness_claim: Vec<f64>,
    /// `min_{Q, A} (f_0 E^Q{ζ_0 | A} - f_N(A))` over cells of `F_N`.
    pub witness_margin: f64,
    /// `sup_Q E^Q f_N`.
    pub lower_bound: f64,
}

impl FairPriceResult {
    /// Witness inequality holds within `τ_eq`.
    pub fn witness_holds(&self) -> bool {
        self.witness_margin >= -tol::EQ * (1.0 + self.price.abs())
    }
}

/// `sup_Q E^Q f_N`.
pub fn sup_expectation(space: &FilteredSpace, set: &MeasureSet, claim: &[f64]) -> Result<f64> {
    space.check_vector("claim", claim)?;
    set.sup_expectation(space, claim)
}

fn check_claim(space: &FilteredSpace, claim: &[f64]) -> Result<()> {
    space.check_vector("claim", claim)?;
    if claim.iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidArgument("claim must be nonnegative".into()));
    }
    let n = space.horizon();
    for (id, cell) in space.cells(n).iter().enumerate() {
        if cell.iter().any(|&w| !tol::close(claim[w], claim[cell[0]])) {
            return Err(Error::NotAdapted { time: n, cell: id });
        }
    }
    Ok(())
}

/// Conditional expectations of `x` on every `F_N` cell charged by every
/// extreme point, as `(cell, Σ_A v x, v(A))`.
fn cell_masses<'a>(
    space: &'a FilteredSpace,
    set: &'a MeasureSet,
) -> impl Iterator<Item = (usize, &'a [f64], f64)> + 'a {
    let n = space.horizon();
    (0..space.cells(n).len()).flat_map(move |id| {
        set.extreme_points().iter().filter_map(move |v| {
            let mass = space.cell_mass(v, n, id);
            (mass > 0.0).then_some((id, v.as_slice(), mass))
        })
    })
}

fn finish(space: &FilteredSpace, set: &MeasureSet, claim: &[f64], price: f64, witness: Vec<f64>) -> Result<FairPriceResult> {
    let n = space.horizon();
    let scaled: Vec<f64> = witness.iter().map(|z| price * z).collect();
    let mut margin = f64::INFINITY;
    for (id, cell) in space.cells(n).iter().enumerate() {
        let lo = set.min_conditional(space, &scaled, n, id)?.value;
        margin = margin.min(lo - claim[cell[0]]);
    }
    let result = FairPriceResult {
        price,
        witness_claim: witness,
        witness_margin: margin,
        lower_bound: set.sup_expectation(space, claim)?,
    };
    if !result.witness_holds() {
        return Err(Error::InfeasiblePricing(format!("witness margin {margin:e}")));
    }
    Ok(result)
}

fn lp_failure(e: LpError) -> Error {
    Error::InfeasiblePricing(format!("pricing LP failed: {e:?}"))
}

/// `inf α` such that `f_N <= α E^Q{ζ | F_N}` for some unit claim `ζ >= 0`,
/// solved in `η = α ζ`.
pub fn fair_price_full(space: &FilteredSpace, set: &MeasureSet, claim: &[f64]) -> Result<FairPriceResult> {
    check_claim(space, claim)?;
    let n_out = space.outcome_count();
    let n = space.horizon();
    // variables: η_0 .. η_{|Ω|-1}, α
    let mut objective = vec![0.0; n_out + 1];
    objective[n_out] = 1.0;
    let mut lp = LinearProgram::minimize(objective);
    for (id, v, mass) in cell_masses(space, set) {
        let mut row = vec![0.0; n_out + 1];
        for &w in space.cell(n, id) {
            row[w] = v[w];
        }
        lp.add(row, Relation::Ge, claim[space.cell(n, id)[0]] * mass);
    }
    for v in set.extreme_points() {
        let mut row = v.clone();
        row.push(-1.0);
        lp.add(row, Relation::Eq, 0.0);
    }
    let sol = lp.solve().map_err(lp_failure)?;
    let price = sol.x[n_out].max(0.0);
    let witness = if price > 0.0 {
        sol.x[..n_out].iter().map(|e| e.max(0.0) / price).collect()
    } else {
        vec![1.0; n_out]
    };
    finish(space, set, claim, price, witness)
}

/// `min Σ β_i` with `β >= 0` and `Σ β_i E^Q{ξ_i | F_N} >= f_N`, i.e. the fair
/// price when unit claims are restricted to the simplex spanned by `claims`.
pub fn fair_price_generated(
    space: &FilteredSpace,
    set: &MeasureSet,
    claims: &[Vec<f64>],
    claim: &[f64],
) -> Result<FairPriceResult> {
    check_claim(space, claim)?;
    if claims.is_empty() {
        return Err(Error::InvalidArgument("at least one generating claim is required".into()));
    }
    for xi in claims {
        if !measure::is_unit_claim(space, set, xi)? {
            return Err(Error::NotUnitClaim);
        }
    }
    let n = space.horizon();
    let mut lp = LinearProgram::minimize(vec![1.0; claims.len()]);
    for (id, v, mass) in cell_masses(space, set) {
        let row = claims
            .iter()
            .map(|xi| space.cell(n, id).iter().map(|&w| v[w] * xi[w]).sum())
            .collect();
        lp.add(row, Relation::Ge, claim[space.cell(n, id)[0]] * mass);
    }
    let sol = lp.solve().map_err(lp_failure)?;
    let beta: Vec<f64> = sol.x.iter().map(|b| b.max(0.0)).collect();
    let price: f64 = beta.iter().sum();
    let witness = if price > 0.0 {
        (0..space.outcome_count())
            .map(|w| claims.iter().zip(&beta).map(|(xi, b)| b * xi[w]).sum::<f64>() / price)
            .collect()
    } else {
        vec![1.0; space.outcome_count()]
    };
    finish(space, set, claim, price, witness)
}

fn positive(what: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} must be positive, got {x}")))
    }
}

fn strike(k: f64) -> Result<()> {
    if k.is_finite() && k >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("strike must be nonnegative, got {k}")))
    }
}

/// Worst-case call price on paths bounded above by `d2` at maturity:
/// `S_0 (1 - K / d2)` for `K <= d2`, else 0.
pub fn euro_call_price(s0: f64, d2: f64, k: f64) -> Result<f64> {
    positive("S0", s0)?;
    positive("upper bound", d2)?;
    strike(k)?;
    Ok(if k <= d2 { s0 * (1.0 - k / d2) } else { 0.0 })
}

/// Worst-case put price on paths bounded below by `d1`: `K - d1` for
/// `K >= d1`, else 0.
pub fn euro_put_price(d1: f64, k: f64) -> Result<f64> {
    positive("lower bound", d1)?;
    strike(k)?;
    Ok(if k >= d1 { k - d1 } else { 0.0 })
}
