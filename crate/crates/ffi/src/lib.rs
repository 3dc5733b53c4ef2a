//! C ABI over `supmart`.
//!
//! Spaces and measure sets cross the boundary as opaque handles created by a
//! `*_new` function and released by the matching `*_free`. Every fallible
//! function returns a [`SupmartStatus`]; on failure the message is available
//! from [`supmart_last_error`] on the same thread until the next call.
//!
//! Matrices are passed row-major: process values as `[t][outcome]`, asset
//! paths as `[asset][t][outcome]`, holdings as `[t - 1][outcome][asset]`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use supmart::decomposition::local_regular_witness;
use supmart::hedging::{superhedge, PriceMode};
use supmart::pricing::{euro_call_price, euro_put_price, fair_price_full, fair_price_generated, sup_expectation};
use supmart::{AdaptedProcess, Error, FilteredSpace, Measure, MeasureSet};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupmartStatus {
    Ok = 0,
    NullPointer = 1,
    /// Malformed input: shapes, partitions, measures, claims.
    InvalidInput = 2,
    /// A well-posed problem with no solution (no witness, no representation, ...).
    Infeasible = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

/// Opaque filtered space.
pub struct SupmartSpace {
    space: FilteredSpace,
}

/// Opaque measure set, bound to a copy of the space it was built on.
pub struct SupmartMeasureSet {
    space: FilteredSpace,
    set: MeasureSet,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Null(&'static str),
    Buffer { what: &'static str, needed: usize, given: usize },
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SupmartStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SupmartStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            SupmartStatus::NullPointer
        }
        Ok(Err(Failure::Buffer { what, needed, given })) => {
            set_error(format!("{what} buffer holds {given} values, {needed} needed"));
            SupmartStatus::BufferTooSmall
        }
        Ok(Err(Failure::Domain(e))) => {
            let status = if e.is_infeasibility() {
                SupmartStatus::Infeasible
            } else {
                SupmartStatus::InvalidInput
            };
            set_error(e.to_string());
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SupmartStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize, needed: usize, what: &'static str) -> Result<&'a mut [f64], Failure> {
    if needed == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    if len < needed {
        return Err(Failure::Buffer { what, needed, given: len });
    }
    Ok(slice::from_raw_parts_mut(p, needed))
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn write<T>(out: *mut T, v: T, what: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    *out = v;
    Ok(())
}

fn rows(flat: &[f64], width: usize) -> Vec<Vec<f64>> {
    flat.chunks(width).map(<[f64]>::to_vec).collect()
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next `supmart_*` call on the same thread.
#[no_mangle]
pub extern "C" fn supmart_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a space from outcome labels: `labels[t * outcomes + w]` names the
/// cell of `w` at time `t`, for `t = 0..=horizon`.
///
/// # Safety
/// `labels` must point to `(horizon + 1) * outcomes` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn supmart_space_new(
    labels: *const usize,
    outcomes: usize,
    horizon: usize,
    out: *mut *mut SupmartSpace,
) -> SupmartStatus {
    guard(|| {
        let flat = input(labels, (horizon + 1) * outcomes, "labels")?;
        let labels: Vec<Vec<usize>> = flat.chunks(outcomes.max(1)).map(<[usize]>::to_vec).collect();
        let space = FilteredSpace::from_labels(&labels)?;
        write(out, Box::into_raw(Box::new(SupmartSpace { space })), "out")
    })
}

/// # Safety
/// `space` must come from [`supmart_space_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn supmart_space_free(space: *mut SupmartSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// # Safety
/// `space` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn supmart_space_outcomes(space: *const SupmartSpace) -> usize {
    space.as_ref().map_or(0, |s| s.space.outcome_count())
}

/// # Safety
/// `space` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn supmart_space_horizon(space: *const SupmartSpace) -> usize {
    space.as_ref().map_or(0, |s| s.space.horizon())
}

/// Convex hull of `count` strictly positive generators, `probabilities[k * outcomes + w]`.
///
/// # Safety
/// `probabilities` must hold `count * outcomes` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn supmart_hull_new(
    space: *const SupmartSpace,
    probabilities: *const f64,
    count: usize,
    out: *mut *mut SupmartMeasureSet,
) -> SupmartStatus {
    guard(|| {
        let space = &handle(space, "space")?.space;
        let n = space.outcome_count();
        let flat = input(probabilities, count * n, "probabilities")?;
        let gens = flat
            .chunks(n)
            .map(|p| Measure::new(p.to_vec()))
            .collect::<Result<Vec<_>, _>>()?;
        let set = MeasureSet::hull(space, gens)?;
        let h = SupmartMeasureSet { space: space.clone(), set };
        write(out, Box::into_raw(Box::new(h)), "out")
    })
}

/// Equivalent martingale measures of `assets` price processes,
/// `values[(j * (horizon + 1) + t) * outcomes + w]`.
///
/// # Safety
/// `values` must hold `assets * (horizon + 1) * outcomes` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn supmart_martingale_set_new(
    space: *const SupmartSpace,
    values: *const f64,
    assets: usize,
    out: *mut *mut SupmartMeasureSet,
) -> SupmartStatus {
    guard(|| {
        let space = &handle(space, "space")?.space;
        let (n, steps) = (space.outcome_count(), space.horizon() + 1);
        let flat = input(values, assets * steps * n, "values")?;
        let procs = flat
            .chunks(steps * n)
            .map(|a| AdaptedProcess::new(space, rows(a, n)))
            .collect::<Result<Vec<_>, _>>()?;
        let set = MeasureSet::martingale(space, procs)?;
        let h = SupmartMeasureSet { space: space.clone(), set };
        write(out, Box::into_raw(Box::new(h)), "out")
    })
}

/// # Safety
/// `set` must come from a `supmart_*_new` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn supmart_set_free(set: *mut SupmartMeasureSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of extreme points (generators or polytope vertices).
///
/// # Safety
/// `set` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn supmart_set_extreme_points(set: *const SupmartMeasureSet) -> usize {
    set.as_ref().map_or(0, |s| s.set.extreme_points().len())
}

/// `sup_Q E^Q claim` over the set.
///
/// # Safety
/// `claim` must hold one value per outcome; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn supmart_sup_expectation(
    set: *const SupmartMeasureSet,
    claim: *const f64,
    len: usize,
    out: *mut f64,
) -> SupmartStatus {
    guard(|| {
        let h = handle(set, "set")?;
        let claim = input(claim, len, "claim")?;
        write(out, sup_expectation(&h.space, &h.set, claim)?, "out")
    })
}

/// Fair price over all unit claims.
///
/// # Safety
/// `claim` must hold one value per outcome; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn supmart_fair_price_full(
    set: *const SupmartMeasureSet,
    claim: *const f64,
    len: usize,
    out: *mut f64,
) -> SupmartStatus {
    guard(|| {
        let h = handle(set, "set")?;
        let claim = input(claim, len, "claim")?;
        write(out, fair_price_full(&h.space, &h.set, claim)?.price, "out")
    })
}

/// Fair price over nonnegative combinations of `count` unit claims,
/// `unit_claims[i * len + w]`.
///
/// # Safety
/// `unit_claims` must hold `count * len` values, `claim` `len`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn supmart_fair_price_generated(
    set: *const SupmartMeasureSet,
    unit_claims: *const f64,
    count: usize,
    claim: *const f64,
    len: usize,
    out: *mut f64,
) -> SupmartStatus {
    guard(|| {
        let h = handle(set, "set")?;
        let t = rows(input(unit_claims, count * len, "unit_claims")?, len.max(1));
        let claim = input(claim, len, "claim")?;
        write(out, fair_price_generated(&h.space, &h.set, &t, claim)?.price, "out")
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn supmart_euro_call_price(s0: f64, d2: f64, strike: f64, out: *mut f64) -> SupmartStatus {
    guard(|| write(out, euro_call_price(s0, d2, strike)?, "out"))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn supmart_euro_put_price(d1: f64, strike: f64, out: *mut f64) -> SupmartStatus {
    guard(|| write(out, euro_put_price(d1, strike)?, "out"))
}

/// Superhedging strategy of a claim on a martingale set. With
/// `unit_claims` null the full price is used, otherwise the generated one.
///
/// Writes the price, the cash holdings (`horizon * outcomes` values) and
/// the risky holdings (`horizon * outcomes * assets` values).
///
/// # Safety
/// Buffers must be valid for the stated lengths; `price` must be writable.
#[no_mangle]
pub unsafe extern "C" fn supmart_superhedge(
    set: *const SupmartMeasureSet,
    claim: *const f64,
    len: usize,
    unit_claims: *const f64,
    count: usize,
    price: *mut f64,
    cash: *mut f64,
    cash_len: usize,
    risky: *mut f64,
    risky_len: usize,
) -> SupmartStatus {
    guard(|| {
        let h = handle(set, "set")?;
        let claim = input(claim, len, "claim")?;
        let mode = if unit_claims.is_null() {
            PriceMode::Full
        } else {
            PriceMode::Generated(rows(input(unit_claims, count * len, "unit_claims")?, len.max(1)))
        };
        let hedge = superhedge(&h.space, &h.set, claim, &mode)?;
        let s = &hedge.strategy;
        let cash_flat: Vec<f64> = s.cash().values().iter().flatten().flatten().copied().collect();
        let risky_flat: Vec<f64> = s.risky().values().iter().flatten().flatten().copied().collect();
        output(cash, cash_len, cash_flat.len(), "cash")?.copy_from_slice(&cash_flat);
        output(risky, risky_len, risky_flat.len(), "risky")?.copy_from_slice(&risky_flat);
        write(price, hedge.price.price, "price")
    })
}

/// Decomposes a super-martingale `f = M - g` by the local-regularity
/// witness. `values`, `martingale` and `compensator` hold
/// `(horizon + 1) * outcomes` values each.
///
/// # Safety
/// Buffers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn supmart_decompose(
    set: *const SupmartMeasureSet,
    values: *const f64,
    len: usize,
    martingale: *mut f64,
    compensator: *mut f64,
) -> SupmartStatus {
    guard(|| {
        let h = handle(set, "set")?;
        let n = h.space.outcome_count();
        let f = AdaptedProcess::new(&h.space, rows(input(values, len, "values")?, n))?;
        let dec = local_regular_witness(&h.space, &h.set, &f)?;
        let m: Vec<f64> = dec.martingale().rows().iter().flatten().copied().collect();
        let g: Vec<f64> = dec.compensator().rows().iter().flatten().copied().collect();
        output(martingale, len, m.len(), "martingale")?.copy_from_slice(&m);
        output(compensator, len, g.len(), "compensator")?.copy_from_slice(&g);
        Ok(())
    })
}
