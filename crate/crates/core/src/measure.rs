//! Convex sets of equivalent probability measures on a finite space.
//!
//! Two flavors are supported:
//!
//! * [`GeneratorHull`]: the convex hull of finitely many strictly positive
//!   measures. Conditional-expectation extremes over the hull are attained at
//!   generators, since a mixture's conditional expectation on a cell is a
//!   mass-weighted average of the generators' ones.
//! * [`MartingalePolytope`]: every strictly positive measure under which the
//!   given asset processes are martingales. Its closure is a bounded
//!   polyhedron; extremes are computed by linear programming, and the vertex
//!   set is enumerated node by node over the tree.
//!
//! Per-cell extremes of `E^Q{X | F_t}` over the closure use the
//! Charnes-Cooper transform: with `y = s·q`, maximize `Σ_{ω∈A} X y` subject to
//! the homogeneous martingale rows and `Σ_{ω∈A} y = 1`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpError, Relation};
use crate::space::{AdaptedProcess, FilteredSpace};
use crate::tol;

/// Upper bound on the number of enumerated polytope vertices.
pub const VERTEX_CAP: usize = 20_000;

/// A strictly positive probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    probabilities: Vec<f64>,
}

impl Measure {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::InvalidMeasure("no outcomes".into()));
        }
        if let Some(w) = probabilities.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidMeasure(format!(
                "outcome {w} has non-positive probability {}",
                probabilities[w]
            )));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > tol::SUM {
            return Err(Error::InvalidMeasure(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { probabilities })
    }

    /// Rescales a positive vector to unit mass before validating it.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidMeasure("weights do not have positive mass".into()));
        }
        for w in &mut weights {
            *w /= total;
        }
        Self::new(weights)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn expectation(&self, x: &[f64]) -> f64 {
        self.probabilities.iter().zip(x).map(|(p, v)| p * v).sum()
    }
}

/// `E^p{x | F_t}` on cell `id`, or `None` when the cell carries no mass.
pub fn conditional_on_cell(
    space: &FilteredSpace,
    p: &[f64],
    x: &[f64],
    t: usize,
    id: usize,
) -> Option<f64> {
    let cell = space.cell(t, id);
    let mass: f64 = cell.iter().map(|&w| p[w]).sum();
    if mass <= 0.0 {
        return None;
    }
    Some(cell.iter().map(|&w| p[w] * x[w]).sum::<f64>() / mass)
}

/// Row of `E^P{X | F_t}` indexed by outcome.
pub fn conditional_expectation(
    space: &FilteredSpace,
    p: &Measure,
    x: &[f64],
    t: usize,
) -> Result<Vec<f64>> {
    check_time(space, t)?;
    space.check_vector("random variable", x)?;
    if p.len() != space.outcome_count() {
        return Err(Error::ShapeMismatch {
            what: "measure",
            expected: space.outcome_count(),
            found: p.len(),
        });
    }
    Ok(cell_row(space, t, |id| {
        conditional_on_cell(space, p.probabilities(), x, t, id).unwrap_or(0.0)
    }))
}

/// `E^{P1}{X | F_t}` computed under `P2` through the normalized density
/// `φ_t = (dP1/dP2) / E^{P2}{dP1/dP2 | F_t}`.
pub fn change_of_measure_conditional(
    space: &FilteredSpace,
    p1: &Measure,
    p2: &Measure,
    x: &[f64],
    t: usize,
) -> Result<Vec<f64>> {
    let density: Vec<f64> = p1
        .probabilities()
        .iter()
        .zip(p2.probabilities())
        .map(|(a, b)| a / b)
        .collect();
    let density_cond = conditional_expectation(space, p2, &density, t)?;
    let weighted: Vec<f64> = x
        .iter()
        .zip(&density)
        .zip(&density_cond)
        .map(|((v, z), zc)| v * z / zc)
        .collect();
    conditional_expectation(space, p2, &weighted, t)
}

/// Sum over the cells at `t` of `|P1(cell) - P2(cell)|`.
///
/// On a finite space the supremum over `F_t`-measurable partitions is reached
/// at the finest one, so this is exact.
pub fn restriction_metric(space: &FilteredSpace, p1: &[f64], p2: &[f64], t: usize) -> Result<f64> {
    check_time(space, t)?;
    for p in [p1, p2] {
        if p.len() != space.outcome_count() {
            return Err(Error::ShapeMismatch {
                what: "measure",
                expected: space.outcome_count(),
                found: p.len(),
            });
        }
    }
    Ok((0..space.cells(t).len())
        .map(|id| (space.cell_mass(p1, t, id) - space.cell_mass(p2, t, id)).abs())
        .sum())
}

pub(crate) fn check_time(space: &FilteredSpace, t: usize) -> Result<()> {
    if t > space.horizon() {
        return Err(Error::IndexOutOfRange {
            what: "time",
            index: t,
            bound: space.horizon() + 1,
        });
    }
    Ok(())
}

pub(crate) fn cell_row(space: &FilteredSpace, t: usize, mut value: impl FnMut(usize) -> f64) -> Vec<f64> {
    let per_cell: Vec<f64> = (0..space.cells(t).len()).map(&mut value).collect();
    (0..space.outcome_count())
        .map(|w| per_cell[space.owner(t, w)])
        .collect()
}

/// Where a per-cell extreme of a conditional expectation is attained.
#[derive(Debug, Clone, PartialEq)]
pub enum Attainer {
    /// Index of a hull generator.
    Generator(usize),
    /// A point of the polytope closure (probability vector, may have zeros).
    Point(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extremum {
    pub value: f64,
    pub attainer: Attainer,
}

/// Convex hull of finitely many strictly positive measures.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorHull {
    generators: Vec<Measure>,
    points: Vec<Vec<f64>>,
}

impl GeneratorHull {
    pub fn new(space: &FilteredSpace, generators: Vec<Measure>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::EmptyMeasureSet("hull has no generators".into()));
        }
        for g in &generators {
            if g.len() != space.outcome_count() {
                return Err(Error::ShapeMismatch {
                    what: "generator",
                    expected: space.outcome_count(),
                    found: g.len(),
                });
            }
        }
        let points = generators.iter().map(|g| g.probabilities().to_vec()).collect();
        Ok(Self { generators, points })
    }

    pub fn generators(&self) -> &[Measure] {
        &self.generators
    }
}

/// All strictly positive measures making every asset a martingale.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingalePolytope {
    assets: Vec<AdaptedProcess>,
    /// Homogeneous martingale rows over outcomes, one per
    /// `(asset, step, parent cell)` with a nonzero increment.
    rows: Vec<Vec<f64>>,
    vertices: Vec<Vec<f64>>,
    interior: Measure,
}

impl MartingalePolytope {
    pub fn new(space: &FilteredSpace, assets: Vec<AdaptedProcess>) -> Result<Self> {
        if assets.is_empty() {
            return Err(Error::InvalidArgument("martingale polytope needs at least one asset".into()));
        }
        for a in &assets {
            if a.horizon() != space.horizon() || a.row(0).len() != space.outcome_count() {
                return Err(Error::ShapeMismatch {
                    what: "asset",
                    expected: space.horizon() + 1,
                    found: a.horizon() + 1,
                });
            }
            space.check_adapted(a.rows())?;
        }
        let rows = martingale_rows(space, &assets);
        let interior = strictly_positive_member(space.outcome_count(), &rows)?;
        let vertices = enumerate_vertices(space, &assets)?;
        Ok(Self {
            assets,
            rows,
            vertices,
            interior,
        })
    }

    pub fn assets(&self) -> &[AdaptedProcess] {
        &self.assets
    }

    /// Vertices of the closure.
    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    /// A strictly positive member maximizing the smallest outcome mass.
    pub fn interior(&self) -> &Measure {
        &self.interior
    }

    /// Homogeneous linear rows `r·q = 0` defining the polytope together with
    /// `Σq = 1, q >= 0`.
    pub fn constraint_rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Whether a nonnegative unit-mass vector lies in the closure.
    pub fn contains(&self, q: &[f64]) -> bool {
        if q.iter().any(|v| *v < -tol::EQ) {
            return false;
        }
        let total: f64 = q.iter().sum();
        (total - 1.0).abs() <= tol::EQ
            && self
                .rows
                .iter()
                .all(|r| r.iter().zip(q).map(|(a, b)| a * b).sum::<f64>().abs() <= tol::EQ)
    }

    fn extreme_conditional(
        &self,
        space: &FilteredSpace,
        x: &[f64],
        t: usize,
        id: usize,
        maximize: bool,
    ) -> Result<Extremum> {
        let n = space.outcome_count();
        let cell = space.cell(t, id);
        let mut objective = vec![0.0; n];
        let mut on_cell = vec![0.0; n];
        for &w in cell {
            objective[w] = x[w];
            on_cell[w] = 1.0;
        }
        let mut lp = if maximize {
            LinearProgram::maximize(objective)
        } else {
            LinearProgram::minimize(objective)
        };
        for r in &self.rows {
            lp.add(r.clone(), Relation::Eq, 0.0);
        }
        lp.add(on_cell, Relation::Eq, 1.0);
        let sol = lp.solve().map_err(|e| match e {
            LpError::Unbounded => Error::UnboundedObjective,
            LpError::Infeasible => {
                Error::EmptyMeasureSet(format!("cell {id} at time {t} is unreachable"))
            }
            LpError::IterationLimit => Error::InvalidArgument("simplex iteration limit".into()),
        })?;
        let total: f64 = sol.x.iter().sum();
        let point = sol.x.iter().map(|v| v / total).collect();
        Ok(Extremum {
            value: sol.objective,
            attainer: Attainer::Point(point),
        })
    }
}

fn martingale_rows(space: &FilteredSpace, assets: &[AdaptedProcess]) -> Vec<Vec<f64>> {
    let n = space.outcome_count();
    let mut rows = Vec::new();
    for asset in assets {
        for m in 1..=space.horizon() {
            for cell in space.cells(m - 1) {
                let mut row = vec![0.0; n];
                for &w in cell {
                    row[w] = asset.value(m, w) - asset.value(m - 1, w);
                }
                if row.iter().any(|v| *v != 0.0) {
                    rows.push(row);
                }
            }
        }
    }
    rows
}

/// Maximizes the smallest outcome mass over the closure; fails when it is 0.
fn strictly_positive_member(n: usize, rows: &[Vec<f64>]) -> Result<Measure> {
    // variables: q (n), s (the floor)
    let mut objective = vec![0.0; n + 1];
    objective[n] = 1.0;
    let mut lp = LinearProgram::maximize(objective);
    let mut total = vec![1.0; n + 1];
    total[n] = 0.0;
    lp.add(total, Relation::Eq, 1.0);
    for r in rows {
        let mut row = r.clone();
        row.push(0.0);
        lp.add(row, Relation::Eq, 0.0);
    }
    for w in 0..n {
        let mut row = vec![0.0; n + 1];
        row[w] = 1.0;
        row[n] = -1.0;
        lp.add(row, Relation::Ge, 0.0);
    }
    let sol = lp.solve().map_err(|_| {
        Error::EmptyMeasureSet("no martingale measure exists for the assets".into())
    })?;
    if sol.objective <= tol::LP {
        return Err(Error::EmptyMeasureSet(
            "no strictly positive martingale measure exists for the assets".into(),
        ));
    }
    Measure::normalized(sol.x[..n].to_vec())
}

/// Vertices of the local polytope `{p >= 0, Σp = 1, Σ_c p_c a_jc = 0}` over
/// the children of one node, found by enumerating supports.
fn local_vertices(increments: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = increments.len();
    let d = increments.first().map_or(0, Vec::len);
    let rows = 1 + d;
    let mut out = Vec::new();
    let max_support = k.min(rows);
    for mask in 1usize..(1 << k) {
        let support: Vec<usize> = (0..k).filter(|&c| mask & (1 << c) != 0).collect();
        if support.len() > max_support {
            continue;
        }
        let a = DMatrix::from_fn(rows, support.len(), |r, c| {
            if r == 0 {
                1.0
            } else {
                increments[support[c]][r - 1]
            }
        });
        let mut b = DVector::zeros(rows);
        b[0] = 1.0;
        let svd = a.clone().svd(true, true);
        let rank = svd.rank(1e-10);
        if rank < support.len() {
            continue;
        }
        let Ok(sol) = svd.solve(&b, 1e-12) else {
            continue;
        };
        let residual = (&a * &sol - &b).amax();
        if residual > 1e-10 || sol.iter().any(|v| *v <= 1e-12) {
            continue;
        }
        let mut p = vec![0.0; k];
        for (c, &s) in support.iter().enumerate() {
            p[s] = sol[c];
        }
        out.push(p);
    }
    out
}

fn enumerate_vertices(space: &FilteredSpace, assets: &[AdaptedProcess]) -> Result<Vec<Vec<f64>>> {
    let n = space.outcome_count();
    let mut count_guard = 0usize;
    let root = node_vertices(space, assets, 0, 0, n, &mut count_guard)?;
    if root.is_empty() {
        return Err(Error::EmptyMeasureSet("no martingale measure exists for the assets".into()));
    }
    Ok(root)
}

fn node_vertices(
    space: &FilteredSpace,
    assets: &[AdaptedProcess],
    t: usize,
    id: usize,
    n: usize,
    guard: &mut usize,
) -> Result<Vec<Vec<f64>>> {
    if t == space.horizon() {
        return Ok(space
            .cell(t, id)
            .iter()
            .map(|&w| {
                let mut v = vec![0.0; n];
                v[w] = 1.0;
                v
            })
            .collect());
    }
    let kids = space.children(t, id);
    let rep = space.cell(t, id)[0];
    let increments: Vec<Vec<f64>> = kids
        .iter()
        .map(|&c| {
            let w = space.cell(t + 1, c)[0];
            assets
                .iter()
                .map(|a| a.value(t + 1, w) - a.value(t, rep))
                .collect()
        })
        .collect();
    let local = local_vertices(&increments);
    let mut child_sets: Vec<Option<Vec<Vec<f64>>>> = vec![None; kids.len()];
    let mut out = Vec::new();
    for p in local {
        let support: Vec<usize> = (0..kids.len()).filter(|&c| p[c] > 0.0).collect();
        for &c in &support {
            if child_sets[c].is_none() {
                child_sets[c] = Some(node_vertices(space, assets, t + 1, kids[c], n, guard)?);
            }
        }
        let lists: Vec<&Vec<Vec<f64>>> = support
            .iter()
            .map(|&c| child_sets[c].as_ref().expect("filled above"))
            .collect();
        if lists.iter().any(|l| l.is_empty()) {
            continue;
        }
        let mut index = vec![0usize; support.len()];
        loop {
            let mut v = vec![0.0; n];
            for (slot, &c) in support.iter().enumerate() {
                let child = &lists[slot][index[slot]];
                for (acc, x) in v.iter_mut().zip(child) {
                    *acc += p[c] * x;
                }
            }
            out.push(v);
            *guard += 1;
            if *guard > VERTEX_CAP {
                return Err(Error::PolytopeTooLarge {
                    count: *guard,
                    cap: VERTEX_CAP,
                });
            }
            // odometer over the children's vertex lists
            let mut slot = 0;
            loop {
                if slot == index.len() {
                    break;
                }
                index[slot] += 1;
                if index[slot] < lists[slot].len() {
                    break;
                }
                index[slot] = 0;
                slot += 1;
            }
            if slot == index.len() {
                break;
            }
        }
    }
    Ok(out)
}

/// A convex set of equivalent measures.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSet {
    GeneratorHull(GeneratorHull),
    MartingalePolytope(MartingalePolytope),
}

impl MeasureSet {
    pub fn hull(space: &FilteredSpace, generators: Vec<Measure>) -> Result<Self> {
        GeneratorHull::new(space, generators).map(Self::GeneratorHull)
    }

    pub fn martingale(space: &FilteredSpace, assets: Vec<AdaptedProcess>) -> Result<Self> {
        MartingalePolytope::new(space, assets).map(Self::MartingalePolytope)
    }

    /// Generators of a hull, or vertices of a polytope's closure. Every
    /// member is a convex combination of these.
    pub fn extreme_points(&self) -> &[Vec<f64>] {
        match self {
            Self::GeneratorHull(h) => &h.points,
            Self::MartingalePolytope(p) => &p.vertices,
        }
    }

    /// A fixed strictly positive member.
    pub fn reference(&self) -> &Measure {
        match self {
            Self::GeneratorHull(h) => &h.generators[0],
            Self::MartingalePolytope(p) => &p.interior,
        }
    }

    pub fn as_polytope(&self) -> Option<&MartingalePolytope> {
        match self {
            Self::MartingalePolytope(p) => Some(p),
            Self::GeneratorHull(_) => None,
        }
    }

    /// Largest `E^Q{X | F_t}` on cell `id` over the set (its closure for
    /// polytopes, restricted to measures charging the cell).
    pub fn max_conditional(&self, space: &FilteredSpace, x: &[f64], t: usize, id: usize) -> Result<Extremum> {
        self.extreme_conditional(space, x, t, id, true)
    }

    pub fn min_conditional(&self, space: &FilteredSpace, x: &[f64], t: usize, id: usize) -> Result<Extremum> {
        self.extreme_conditional(space, x, t, id, false)
    }

    fn extreme_conditional(
        &self,
        space: &FilteredSpace,
        x: &[f64],
        t: usize,
        id: usize,
        maximize: bool,
    ) -> Result<Extremum> {
        check_time(space, t)?;
        space.check_vector("random variable", x)?;
        match self {
            Self::GeneratorHull(h) => {
                let mut best: Option<Extremum> = None;
                for (k, g) in h.generators.iter().enumerate() {
                    let v = conditional_on_cell(space, g.probabilities(), x, t, id)
                        .expect("generators are strictly positive");
                    let better = match &best {
                        None => true,
                        Some(b) => {
                            if maximize {
                                v > b.value
                            } else {
                                v < b.value
                            }
                        }
                    };
                    if better {
                        best = Some(Extremum {
                            value: v,
                            attainer: Attainer::Generator(k),
                        });
                    }
                }
                Ok(best.expect("hull is nonempty"))
            }
            Self::MartingalePolytope(p) => p.extreme_conditional(space, x, t, id, maximize),
        }
    }

    /// `sup_Q E^Q X`.
    pub fn sup_expectation(&self, space: &FilteredSpace, x: &[f64]) -> Result<f64> {
        Ok(self.max_conditional(space, x, 0, 0)?.value)
    }

    pub fn inf_expectation(&self, space: &FilteredSpace, x: &[f64]) -> Result<f64> {
        Ok(self.min_conditional(space, x, 0, 0)?.value)
    }
}

/// Per-cell essential supremum of `E^Q{X | F_t}` over a measure set.
#[derive(Debug, Clone, PartialEq)]
pub struct EssSup {
    /// Value per outcome (constant on cells).
    pub row: Vec<f64>,
    /// Maximizer per cell at time `t`.
    pub attainers: Vec<Attainer>,
}

pub fn ess_sup_conditional(space: &FilteredSpace, set: &MeasureSet, x: &[f64], t: usize) -> Result<EssSup> {
    check_time(space, t)?;
    space.check_vector("random variable", x)?;
    if x.iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidArgument("ess sup requires a nonnegative random variable".into()));
    }
    let mut values = Vec::with_capacity(space.cells(t).len());
    let mut attainers = Vec::with_capacity(space.cells(t).len());
    for id in 0..space.cells(t).len() {
        let e = set.max_conditional(space, x, t, id)?;
        values.push(e.value);
        attainers.push(e.attainer);
    }
    let row = cell_row(space, t, |id| values[id]);
    Ok(EssSup { row, attainers })
}

/// True iff `ξ >= 0` and `E^Q ξ = 1` for every member of the set.
pub fn is_unit_claim(space: &FilteredSpace, set: &MeasureSet, xi: &[f64]) -> Result<bool> {
    space.check_vector("claim", xi)?;
    if xi.iter().any(|v| *v < 0.0) {
        return Ok(false);
    }
    let hi = set.sup_expectation(space, xi)?;
    let lo = set.inf_expectation(space, xi)?;
    Ok((hi - 1.0).abs() <= tol::EQ && (lo - 1.0).abs() <= tol::EQ)
}

/// Rows `E^Q{ξ | F_t}`, `t = 0..=N`, checked to be the same for every member.
pub(crate) fn measure_independent_martingale(
    space: &FilteredSpace,
    set: &MeasureSet,
    xi: &[f64],
) -> Result<AdaptedProcess> {
    let reference = set.reference();
    let mut rows = Vec::with_capacity(space.horizon() + 1);
    for t in 0..=space.horizon() {
        for id in 0..space.cells(t).len() {
            let hi = set.max_conditional(space, xi, t, id)?.value;
            let lo = set.min_conditional(space, xi, t, id)?.value;
            if hi - lo > tol::EQ * (1.0 + hi.abs()) {
                return Err(Error::MeasureDependent { time: t, cell: id });
            }
        }
        rows.push(conditional_expectation(space, reference, xi, t)?);
    }
    Ok(AdaptedProcess::from_rows_unchecked(rows))
}

/// Increments `d^n = m_n - m_{n-1}` of the martingale `m_n = E{ξ0 | F_n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Increments {
    /// `per_cell[n - 1][cell at n]`.
    per_cell: Vec<Vec<f64>>,
}

impl Increments {
    /// Increment on each atom of `F_n`, `n >= 1`. Values within `τ_eq` of
    /// zero are reported as exactly zero.
    pub fn at(&self, n: usize) -> &[f64] {
        &self.per_cell[n - 1]
    }

    /// Increment as a per-outcome row.
    pub fn row(&self, space: &FilteredSpace, n: usize) -> Vec<f64> {
        cell_row(space, n, |id| self.per_cell[n - 1][id])
    }

    pub fn horizon(&self) -> usize {
        self.per_cell.len()
    }
}

pub fn increment_process(space: &FilteredSpace, set: &MeasureSet, xi0: &[f64]) -> Result<Increments> {
    if !is_unit_claim(space, set, xi0)? {
        return Err(Error::NotUnitClaim);
    }
    let m = measure_independent_martingale(space, set, xi0)?;
    let per_cell = (1..=space.horizon())
        .map(|n| {
            (0..space.cells(n).len())
                .map(|id| {
                    let w = space.cell(n, id)[0];
                    let d = m.value(n, w) - m.value(n - 1, w);
                    if d.abs() <= tol::EQ {
                        0.0
                    } else {
                        d
                    }
                })
                .collect()
        })
        .collect();
    Ok(Increments { per_cell })
}

/// Two-point measure on the atoms of `F_n` built from a pair of increments
/// of opposite sign.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionMeasure {
    pub time: usize,
    /// Atom with `d <= 0`.
    pub negative_atom: usize,
    /// Atom with `d > 0`.
    pub positive_atom: usize,
    /// Mass per atom of `F_n`.
    pub masses: Vec<f64>,
}

impl CompletionMeasure {
    pub fn support_size(&self) -> usize {
        self.masses.iter().filter(|m| **m > 0.0).count()
    }
}

/// One completion measure per pair `(i, j)` of `F_n` atoms with
/// `d_i <= 0 < d_j`. Empty when no increment is positive.
pub fn completion_measures(
    space: &FilteredSpace,
    set: &MeasureSet,
    xi0: &[f64],
    n: usize,
) -> Result<Vec<CompletionMeasure>> {
    if n == 0 || n > space.horizon() {
        return Err(Error::IndexOutOfRange {
            what: "time",
            index: n,
            bound: space.horizon() + 1,
        });
    }
    let inc = increment_process(space, set, xi0)?;
    Ok(completion_from_increments(n, inc.at(n)))
}

pub(crate) fn completion_from_increments(n: usize, d: &[f64]) -> Vec<CompletionMeasure> {
    let mut out = Vec::new();
    for (i, &di) in d.iter().enumerate() {
        if di > 0.0 {
            continue;
        }
        for (j, &dj) in d.iter().enumerate() {
            if dj <= 0.0 {
                continue;
            }
            let mut masses = vec![0.0; d.len()];
            let span = -di + dj;
            masses[i] = dj / span;
            masses[j] = -di / span;
            out.push(CompletionMeasure {
                time: n,
                negative_atom: i,
                positive_atom: j,
                masses,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletenessReport {
    /// Completion measures checked per time `n = 1..=N`.
    pub checked: Vec<usize>,
    /// `(n, i, j)` for completion measures outside the closure.
    pub failing: Vec<(usize, usize, usize)>,
}

impl CompletenessReport {
    pub fn is_complete(&self) -> bool {
        self.failing.is_empty()
    }
}

/// Checks that every completion measure lies in the closure of the set
/// restricted to `F_n`, for every `n`.
pub fn is_complete(space: &FilteredSpace, set: &MeasureSet, xi0: &[f64]) -> Result<CompletenessReport> {
    let inc = increment_process(space, set, xi0)?;
    let mut checked = Vec::new();
    let mut failing = Vec::new();
    for n in 1..=space.horizon() {
        let candidates = completion_from_increments(n, inc.at(n));
        checked.push(candidates.len());
        for c in candidates {
            if !restriction_contains(space, set, n, &c.masses)? {
                failing.push((n, c.negative_atom, c.positive_atom));
            }
        }
    }
    Ok(CompletenessReport { checked, failing })
}

/// Whether `masses` (one per atom of `F_n`) is the restriction to `F_n` of a
/// point in the closure of the set.
pub fn restriction_contains(space: &FilteredSpace, set: &MeasureSet, n: usize, masses: &[f64]) -> Result<bool> {
    check_time(space, n)?;
    if masses.len() != space.cells(n).len() {
        return Err(Error::ShapeMismatch {
            what: "atom masses",
            expected: space.cells(n).len(),
            found: masses.len(),
        });
    }
    if masses.iter().any(|m| *m < -tol::EQ) || (masses.iter().sum::<f64>() - 1.0).abs() > tol::EQ {
        return Ok(false);
    }
    match set {
        MeasureSet::GeneratorHull(h) => {
            let k = h.generators.len();
            let mut lp = LinearProgram::feasibility(k);
            lp.add(vec![1.0; k], Relation::Eq, 1.0);
            for (id, &mass) in masses.iter().enumerate() {
                let row = h
                    .generators
                    .iter()
                    .map(|g| space.cell_mass(g.probabilities(), n, id))
                    .collect();
                lp.add(row, Relation::Eq, mass);
            }
            Ok(lp.solve().is_ok())
        }
        MeasureSet::MartingalePolytope(p) => {
            // Martingale equalities up to step n only involve F_n-measurable
            // quantities; any atom can be extended below since the polytope
            // has a strictly positive member.
            for asset in &p.assets {
                for m in 1..=n {
                    for (parent, _) in space.cells(m - 1).iter().enumerate() {
                        let mut s = 0.0;
                        for (id, &mass) in masses.iter().enumerate() {
                            let w = space.cell(n, id)[0];
                            if space.owner(m - 1, w) == parent {
                                s += mass * (asset.value(m, w) - asset.value(m - 1, w));
                            }
                        }
                        if s.abs() > tol::EQ * (1.0 + asset.value(0, 0).abs()) {
                            return Ok(false);
                        }
                    }
                }
            }
            Ok(true)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn binary() -> FilteredSpace {
        FilteredSpace::new(2, vec![vec![vec![0, 1]], vec![vec![0], vec![1]]]).unwrap()
    }

    fn binomial() -> (FilteredSpace, MeasureSet) {
        let s = binary();
        let asset = AdaptedProcess::new(&s, vec![vec![100.0, 100.0], vec![120.0, 80.0]]).unwrap();
        let set = MeasureSet::martingale(&s, vec![asset]).unwrap();
        (s, set)
    }

    fn m(p: &[f64]) -> Measure {
        Measure::new(p.to_vec()).unwrap()
    }

    #[test]
    fn measure_validation() {
        assert!(Measure::new(vec![0.5, 0.5]).is_ok());
        assert!(Measure::new(vec![1.0, 0.0]).is_err());
        assert!(Measure::new(vec![0.6, 0.6]).is_err());
        assert!(Measure::new(vec![]).is_err());
    }

    #[test]
    fn conditional_expectation_examples() {
        let s = binary();
        assert_eq!(conditional_expectation(&s, &m(&[0.3, 0.7]), &[5.0, 5.0], 0).unwrap(), vec![5.0, 5.0]);
        assert_eq!(conditional_expectation(&s, &m(&[0.5, 0.5]), &[2.0, 4.0], 0).unwrap(), vec![3.0, 3.0]);
        // direct summation: 0.8·2 + 0.2·4
        let r = conditional_expectation(&s, &m(&[0.8, 0.2]), &[2.0, 4.0], 0).unwrap();
        assert_abs_diff_eq!(r[0], 0.8 * 2.0 + 0.2 * 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r[0], 2.4, epsilon = 1e-12);
        assert_eq!(conditional_expectation(&s, &m(&[0.8, 0.2]), &[2.0, 4.0], 1).unwrap(), vec![2.0, 4.0]);
    }

    #[test]
    fn change_of_measure_examples() {
        let s = binary();
        let p1 = m(&[0.8, 0.2]);
        let p2 = m(&[0.5, 0.5]);
        let r = change_of_measure_conditional(&s, &p1, &p2, &[2.0, 4.0], 0).unwrap();
        assert_abs_diff_eq!(r[0], 2.4, epsilon = 1e-12);
        let same = change_of_measure_conditional(&s, &p2, &p2, &[2.0, 4.0], 0).unwrap();
        assert_abs_diff_eq!(same[0], 3.0, epsilon = 1e-12);
        let c = change_of_measure_conditional(&s, &p1, &p2, &[7.0, 7.0], 0).unwrap();
        assert_abs_diff_eq!(c[1], 7.0, epsilon = 1e-12);
    }

    #[test]
    fn ess_sup_examples() {
        let s = binary();
        let single = MeasureSet::hull(&s, vec![m(&[0.3, 0.7])]).unwrap();
        let e = ess_sup_conditional(&s, &single, &[2.0, 0.0], 0).unwrap();
        assert_abs_diff_eq!(e.row[0], 0.6, epsilon = 1e-12);

        let two = MeasureSet::hull(&s, vec![m(&[0.5, 0.5]), m(&[0.8, 0.2])]).unwrap();
        let e = ess_sup_conditional(&s, &two, &[2.0, 0.0], 0).unwrap();
        assert_abs_diff_eq!(e.row[0], 1.6, epsilon = 1e-12);
        assert_eq!(e.attainers[0], Attainer::Generator(1));

        let e = ess_sup_conditional(&s, &two, &[3.0, 3.0], 0).unwrap();
        assert_abs_diff_eq!(e.row[1], 3.0, epsilon = 1e-12);
        assert!(ess_sup_conditional(&s, &two, &[-1.0, 0.0], 0).is_err());
    }

    #[test]
    fn restriction_metric_examples() {
        let s = binary();
        assert_eq!(restriction_metric(&s, &[0.5, 0.5], &[0.5, 0.5], 1).unwrap(), 0.0);
        assert_abs_diff_eq!(restriction_metric(&s, &[0.5, 0.5], &[0.8, 0.2], 0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(restriction_metric(&s, &[0.5, 0.5], &[0.8, 0.2], 1).unwrap(), 0.6, epsilon = 1e-12);
    }

    #[test]
    fn binomial_polytope_is_a_single_point() {
        let (_, set) = binomial();
        let p = set.as_polytope().unwrap();
        assert_eq!(p.vertices().len(), 1);
        assert_abs_diff_eq!(p.vertices()[0][0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.interior().probabilities()[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn polytope_without_positive_member_is_rejected() {
        let s = binary();
        let up_only = AdaptedProcess::new(&s, vec![vec![100.0, 100.0], vec![120.0, 100.0]]).unwrap();
        assert!(matches!(
            MeasureSet::martingale(&s, vec![up_only]),
            Err(Error::EmptyMeasureSet(_))
        ));
    }

    #[test]
    fn increments_and_completion_for_binomial() {
        let (s, set) = binomial();
        let xi0 = [1.2, 0.8];
        let inc = increment_process(&s, &set, &xi0).unwrap();
        assert_abs_diff_eq!(inc.at(1)[0], 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(inc.at(1)[1], -0.2, epsilon = 1e-12);

        let cm = completion_measures(&s, &set, &xi0, 1).unwrap();
        assert_eq!(cm.len(), 1);
        assert_eq!((cm[0].negative_atom, cm[0].positive_atom), (1, 0));
        assert_abs_diff_eq!(cm[0].masses[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(cm[0].masses[0], 0.5, epsilon = 1e-12);
        assert!(cm.iter().all(|c| c.support_size() <= 2));

        let report = is_complete(&s, &set, &xi0).unwrap();
        assert!(report.is_complete());
        assert_eq!(report.checked, vec![1]);
    }

    #[test]
    fn trivial_unit_claim_has_no_completion_measures() {
        let (s, set) = binomial();
        let inc = increment_process(&s, &set, &[1.0, 1.0]).unwrap();
        assert_eq!(inc.at(1), &[0.0, 0.0]);
        assert!(completion_measures(&s, &set, &[1.0, 1.0], 1).unwrap().is_empty());
        assert!(is_complete(&s, &set, &[1.0, 1.0]).unwrap().is_complete());
    }

    #[test]
    fn positive_hull_on_three_atoms_is_incomplete() {
        let s = FilteredSpace::new(3, vec![vec![vec![0, 1, 2]], vec![vec![0], vec![1], vec![2]]]).unwrap();
        // generators share the unit claim xi with E xi = 1
        let g1 = m(&[0.25, 0.5, 0.25]);
        let g2 = m(&[0.5, 0.0 + 0.25, 0.25]);
        let set = MeasureSet::hull(&s, vec![g1, g2]).unwrap();
        // xi = (a, b, c) with 0.25a+0.5b+0.25c = 1 = 0.5a+0.25b+0.25c -> a = b
        let xi = [0.8, 0.8, 1.6];
        assert!(is_unit_claim(&s, &set, &xi).unwrap());
        let report = is_complete(&s, &set, &xi).unwrap();
        assert!(!report.is_complete());
    }

    #[test]
    fn unit_claim_examples() {
        let (s, set) = binomial();
        assert!(is_unit_claim(&s, &set, &[1.0, 1.0]).unwrap());
        assert!(is_unit_claim(&s, &set, &[1.2, 0.8]).unwrap());
        assert!(!is_unit_claim(&s, &set, &[2.2, -0.2]).unwrap());
        assert!(matches!(increment_process(&s, &set, &[2.0, 2.0]), Err(Error::NotUnitClaim)));
    }

    #[test]
    fn trinomial_vertices_are_two_point_measures() {
        let s = FilteredSpace::new(3, vec![vec![vec![0, 1, 2]], vec![vec![0], vec![1], vec![2]]]).unwrap();
        let a = AdaptedProcess::new(&s, vec![vec![100.0; 3], vec![120.0, 100.0, 80.0]]).unwrap();
        let set = MeasureSet::martingale(&s, vec![a]).unwrap();
        let v = set.extreme_points();
        assert_eq!(v.len(), 2);
        assert!(v.contains(&vec![0.0, 1.0, 0.0]));
        assert!(v.iter().any(|q| (q[0] - 0.5).abs() < 1e-12 && (q[2] - 0.5).abs() < 1e-12));
        let hi = set.max_conditional(&s, &[1.0, 0.0, 0.0], 0, 0).unwrap();
        assert_abs_diff_eq!(hi.value, 0.5, epsilon = 1e-12);
        let lo = set.min_conditional(&s, &[1.0, 0.0, 0.0], 0, 0).unwrap();
        assert_abs_diff_eq!(lo.value, 0.0, epsilon = 1e-12);
    }
}
