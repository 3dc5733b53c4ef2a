//! Finite sample spaces with a filtration given as a refining sequence of
//! partitions, plus adapted and predictable processes on them.
//!
//! Outcomes are dense indices `0..outcome_count`. Cells at time `t` are
//! identified by their position in `partitions[t]`; cell order is normalized
//! at construction (sorted by smallest member) so that every lookup and
//! report is deterministic.

use crate::error::{Error, Result};
use crate::tol;

/// A validated finite filtered space.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredSpace {
    outcome_count: usize,
    partitions: Vec<Vec<Vec<usize>>>,
    cell_of: Vec<Vec<usize>>,
    children: Vec<Vec<Vec<usize>>>,
}

impl FilteredSpace {
    /// Validates and builds a filtered space.
    ///
    /// `partitions[t]` lists the cells at time `t`. The horizon is
    /// `partitions.len() - 1` and must be at least 1.
    pub fn new(outcome_count: usize, partitions: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        if outcome_count == 0 {
            return Err(Error::InvalidArgument("outcome count must be positive".into()));
        }
        if partitions.len() < 2 {
            return Err(Error::EmptyFiltration);
        }

        let mut normalized = Vec::with_capacity(partitions.len());
        let mut cell_of = Vec::with_capacity(partitions.len());
        for (time, cells) in partitions.into_iter().enumerate() {
            let mut owner = vec![usize::MAX; outcome_count];
            let mut cells: Vec<Vec<usize>> = cells
                .into_iter()
                .map(|mut c| {
                    c.sort_unstable();
                    c
                })
                .collect();
            for cell in &cells {
                if cell.is_empty() {
                    return Err(Error::EmptyCell { time });
                }
                if let Some(w) = cell.windows(2).find(|w| w[0] == w[1]) {
                    return Err(Error::NotPartition {
                        time,
                        detail: format!("outcome {} listed twice in one cell", w[0]),
                    });
                }
            }
            cells.sort_by_key(|c| c[0]);
            for (id, cell) in cells.iter().enumerate() {
                for &w in cell {
                    if w >= outcome_count {
                        return Err(Error::IndexOutOfRange {
                            what: "outcome",
                            index: w,
                            bound: outcome_count,
                        });
                    }
                    if owner[w] != usize::MAX {
                        return Err(Error::NotPartition {
                            time,
                            detail: format!("outcome {w} appears in two cells"),
                        });
                    }
                    owner[w] = id;
                }
            }
            if let Some(w) = owner.iter().position(|&o| o == usize::MAX) {
                return Err(Error::NotPartition {
                    time,
                    detail: format!("outcome {w} is not covered"),
                });
            }
            if time == 0 && cells.len() != 1 {
                return Err(Error::RootNotTrivial);
            }
            normalized.push(cells);
            cell_of.push(owner);
        }

        let mut children = Vec::with_capacity(normalized.len() - 1);
        for time in 1..normalized.len() {
            let mut kids = vec![Vec::new(); normalized[time - 1].len()];
            for (id, cell) in normalized[time].iter().enumerate() {
                let parent = cell_of[time - 1][cell[0]];
                if cell.iter().any(|&w| cell_of[time - 1][w] != parent) {
                    return Err(Error::NotRefining {
                        time,
                        cell: cell.clone(),
                    });
                }
                kids[parent].push(id);
            }
            children.push(kids);
        }

        Ok(Self {
            outcome_count,
            partitions: normalized,
            cell_of,
            children,
        })
    }

    /// Builds a space from per-time cell labels: `labels[t][ω]` is any
    /// integer, and outcomes sharing a label at time `t` share a cell.
    pub fn from_labels(labels: &[Vec<usize>]) -> Result<Self> {
        let outcome_count = labels.first().map_or(0, Vec::len);
        let mut partitions = Vec::with_capacity(labels.len());
        for row in labels {
            if row.len() != outcome_count {
                return Err(Error::ShapeMismatch {
                    what: "label row",
                    expected: outcome_count,
                    found: row.len(),
                });
            }
            let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
            for (w, &l) in row.iter().enumerate() {
                groups.entry(l).or_default().push(w);
            }
            partitions.push(groups.into_values().collect());
        }
        Self::new(outcome_count, partitions)
    }

    pub fn outcome_count(&self) -> usize {
        self.outcome_count
    }

    /// Final time `N`.
    pub fn horizon(&self) -> usize {
        self.partitions.len() - 1
    }

    pub fn partitions(&self) -> &[Vec<Vec<usize>>] {
        &self.partitions
    }

    /// Cells of the partition at time `t`.
    pub fn cells(&self, t: usize) -> &[Vec<usize>] {
        &self.partitions[t]
    }

    pub fn cell(&self, t: usize, id: usize) -> &[usize] {
        &self.partitions[t][id]
    }

    /// Identifier of the cell at time `t` holding outcome `w`.
    pub fn atom_of(&self, t: usize, w: usize) -> Result<usize> {
        if t > self.horizon() {
            return Err(Error::IndexOutOfRange {
                what: "time",
                index: t,
                bound: self.horizon() + 1,
            });
        }
        if w >= self.outcome_count {
            return Err(Error::IndexOutOfRange {
                what: "outcome",
                index: w,
                bound: self.outcome_count,
            });
        }
        Ok(self.cell_of[t][w])
    }

    /// Unchecked variant of [`atom_of`](Self::atom_of) for internal loops.
    pub(crate) fn owner(&self, t: usize, w: usize) -> usize {
        self.cell_of[t][w]
    }

    /// Cells at `t + 1` contained in cell `id` at time `t`.
    pub fn children(&self, t: usize, id: usize) -> &[usize] {
        &self.children[t][id]
    }

    /// Total mass a probability vector puts on a cell.
    pub fn cell_mass(&self, p: &[f64], t: usize, id: usize) -> f64 {
        self.partitions[t][id].iter().map(|&w| p[w]).sum()
    }

    /// Lists `(t, cell)` pairs on which `values[t]` is not constant.
    pub fn check_adapted(&self, values: &[Vec<f64>]) -> Result<AdaptednessReport> {
        self.check_shape(values)?;
        let mut violations = Vec::new();
        for (t, row) in values.iter().enumerate() {
            for (id, cell) in self.partitions[t].iter().enumerate() {
                if !constant_on(row, cell) {
                    violations.push((t, id));
                }
            }
        }
        Ok(AdaptednessReport { violations })
    }

    fn check_shape(&self, values: &[Vec<f64>]) -> Result<()> {
        if values.len() != self.partitions.len() {
            return Err(Error::ShapeMismatch {
                what: "process times",
                expected: self.partitions.len(),
                found: values.len(),
            });
        }
        for row in values {
            if row.len() != self.outcome_count {
                return Err(Error::ShapeMismatch {
                    what: "process outcomes",
                    expected: self.outcome_count,
                    found: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what: "process" });
            }
        }
        Ok(())
    }

    pub(crate) fn check_vector(&self, what: &'static str, x: &[f64]) -> Result<()> {
        if x.len() != self.outcome_count {
            return Err(Error::ShapeMismatch {
                what,
                expected: self.outcome_count,
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what });
        }
        Ok(())
    }
}

fn constant_on(row: &[f64], cell: &[usize]) -> bool {
    let first = row[cell[0]];
    cell.iter().all(|&w| tol::close(row[w], first))
}

/// Result of an adaptedness scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdaptednessReport {
    /// `(time, cell)` pairs where the row is not constant.
    pub violations: Vec<(usize, usize)>,
}

impl AdaptednessReport {
    pub fn is_adapted(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Real-valued process indexed by time `0..=N` and outcome, constant on the
/// cells of the partition at each time.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedProcess {
    rows: Vec<Vec<f64>>,
}

impl AdaptedProcess {
    pub fn new(space: &FilteredSpace, rows: Vec<Vec<f64>>) -> Result<Self> {
        let report = space.check_adapted(&rows)?;
        if let Some(&(time, cell)) = report.violations.first() {
            return Err(Error::NotAdapted { time, cell });
        }
        Ok(Self { rows })
    }

    /// Builds a process from one value per cell at every time.
    pub fn from_cell_values(space: &FilteredSpace, per_cell: &[Vec<f64>]) -> Result<Self> {
        if per_cell.len() != space.horizon() + 1 {
            return Err(Error::ShapeMismatch {
                what: "process times",
                expected: space.horizon() + 1,
                found: per_cell.len(),
            });
        }
        let mut rows = Vec::with_capacity(per_cell.len());
        for (t, vals) in per_cell.iter().enumerate() {
            if vals.len() != space.cells(t).len() {
                return Err(Error::ShapeMismatch {
                    what: "cell values",
                    expected: space.cells(t).len(),
                    found: vals.len(),
                });
            }
            rows.push(
                (0..space.outcome_count())
                    .map(|w| vals[space.owner(t, w)])
                    .collect(),
            );
        }
        Self::new(space, rows)
    }

    /// Constant process.
    pub fn constant(space: &FilteredSpace, c: f64) -> Self {
        Self {
            rows: vec![vec![c; space.outcome_count()]; space.horizon() + 1],
        }
    }

    pub(crate) fn from_rows_unchecked(rows: Vec<Vec<f64>>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.rows[t]
    }

    pub fn value(&self, t: usize, w: usize) -> f64 {
        self.rows[t][w]
    }

    /// Value on cell `id` at time `t`.
    pub fn on_cell(&self, space: &FilteredSpace, t: usize, id: usize) -> f64 {
        self.rows[t][space.cell(t, id)[0]]
    }

    pub fn horizon(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn terminal(&self) -> &[f64] {
        &self.rows[self.rows.len() - 1]
    }

    pub fn into_rows(self) -> Vec<Vec<f64>> {
        self.rows
    }

    /// Pointwise `self + c * other`.
    pub fn axpy(&self, c: f64, other: &AdaptedProcess) -> AdaptedProcess {
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + c * y).collect())
            .collect();
        AdaptedProcess { rows }
    }

    pub fn shifted(&self, c: f64) -> AdaptedProcess {
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|x| x + c).collect())
            .collect();
        AdaptedProcess { rows }
    }

    pub fn min_value(&self) -> f64 {
        self.rows
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest pointwise absolute difference.
    pub fn max_abs_diff(&self, other: &AdaptedProcess) -> f64 {
        self.rows
            .iter()
            .flatten()
            .zip(other.rows.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Vector-valued process indexed by time `1..=N`, outcome and component,
/// constant on the cells of the partition at the previous time.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictableProcess {
    /// `values[t - 1][ω][j]`.
    values: Vec<Vec<Vec<f64>>>,
}

impl PredictableProcess {
    pub fn new(space: &FilteredSpace, values: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if values.len() != space.horizon() {
            return Err(Error::ShapeMismatch {
                what: "predictable times",
                expected: space.horizon(),
                found: values.len(),
            });
        }
        let width = values
            .first()
            .and_then(|r| r.first())
            .map_or(0, Vec::len);
        for (i, row) in values.iter().enumerate() {
            if row.len() != space.outcome_count() {
                return Err(Error::ShapeMismatch {
                    what: "predictable outcomes",
                    expected: space.outcome_count(),
                    found: row.len(),
                });
            }
            if let Some(bad) = row.iter().find(|v| v.len() != width) {
                return Err(Error::ShapeMismatch {
                    what: "predictable components",
                    expected: width,
                    found: bad.len(),
                });
            }
            let t = i + 1;
            for (id, cell) in space.cells(t - 1).iter().enumerate() {
                let first = &row[cell[0]];
                let same = cell.iter().all(|&w| {
                    row[w]
                        .iter()
                        .zip(first)
                        .all(|(a, b)| a.is_finite() && tol::close(*a, *b))
                });
                if !same {
                    return Err(Error::NotPredictable { time: t, cell: id });
                }
            }
        }
        Ok(Self { values })
    }

    /// Holdings at time `t >= 1` on outcome `w`.
    pub fn at(&self, t: usize, w: usize) -> &[f64] {
        &self.values[t - 1][w]
    }

    pub fn width(&self) -> usize {
        self.values
            .first()
            .and_then(|r| r.first())
            .map_or(0, Vec::len)
    }

    pub fn values(&self) -> &[Vec<Vec<f64>>] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary() -> FilteredSpace {
        FilteredSpace::new(2, vec![vec![vec![0, 1]], vec![vec![0], vec![1]]]).unwrap()
    }

    #[test]
    fn builds_smallest_nontrivial_space() {
        let s = binary();
        assert_eq!(s.horizon(), 1);
        assert_eq!(s.cells(1).len(), 2);
    }

    #[test]
    fn constant_filtration_is_allowed() {
        let s = FilteredSpace::new(2, vec![vec![vec![0, 1]], vec![vec![0, 1]]]).unwrap();
        assert_eq!(s.cells(1).len(), 1);
    }

    #[test]
    fn straddling_cell_is_not_refining() {
        let err = FilteredSpace::new(
            3,
            vec![vec![vec![0, 1, 2]], vec![vec![0, 1], vec![2]], vec![vec![0], vec![1, 2]]],
        )
        .unwrap_err();
        assert_eq!(
            err,
            Error::NotRefining {
                time: 2,
                cell: vec![1, 2]
            }
        );
    }

    #[test]
    fn partition_errors() {
        let overlap = FilteredSpace::new(2, vec![vec![vec![0, 1]], vec![vec![0, 1], vec![1]]]);
        assert!(matches!(overlap, Err(Error::NotPartition { time: 1, .. })));
        let gap = FilteredSpace::new(3, vec![vec![vec![0, 1, 2]], vec![vec![0], vec![1]]]);
        assert!(matches!(gap, Err(Error::NotPartition { time: 1, .. })));
        let empty = FilteredSpace::new(2, vec![vec![vec![0, 1]], vec![vec![0, 1], vec![]]]);
        assert_eq!(empty.unwrap_err(), Error::EmptyCell { time: 1 });
        let root = FilteredSpace::new(2, vec![vec![vec![0], vec![1]], vec![vec![0], vec![1]]]);
        assert_eq!(root.unwrap_err(), Error::RootNotTrivial);
        let range = FilteredSpace::new(2, vec![vec![vec![0, 1]], vec![vec![0], vec![1, 2]]]);
        assert!(matches!(range, Err(Error::IndexOutOfRange { .. })));
        assert_eq!(
            FilteredSpace::new(2, vec![vec![vec![0, 1]]]).unwrap_err(),
            Error::EmptyFiltration
        );
    }

    #[test]
    fn atom_lookup() {
        let s = binary();
        assert_eq!(s.cell(1, s.atom_of(1, 1).unwrap()), &[1]);
        assert_eq!(s.cell(0, s.atom_of(0, 1).unwrap()), &[0, 1]);
        let three =
            FilteredSpace::new(3, vec![vec![vec![0, 1, 2]], vec![vec![0, 1], vec![2]], vec![vec![0], vec![1], vec![2]]])
                .unwrap();
        assert_eq!(three.cell(1, three.atom_of(1, 0).unwrap()), &[0, 1]);
        assert!(s.atom_of(2, 0).is_err());
        assert!(s.atom_of(0, 5).is_err());
    }

    #[test]
    fn adaptedness_scan() {
        let s = binary();
        assert!(s.check_adapted(&[vec![3.0, 3.0], vec![3.0, 3.0]]).unwrap().is_adapted());
        let r = s.check_adapted(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(r.violations, vec![(0, 0)]);
        assert!(s.check_adapted(&[vec![1.0, 1.0], vec![3.0, 5.0]]).unwrap().is_adapted());
        assert!(matches!(
            s.check_adapted(&[vec![1.0, 1.0]]),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn from_labels_matches_explicit_cells() {
        let s = FilteredSpace::from_labels(&[vec![0, 0, 0], vec![7, 7, 3], vec![0, 1, 2]]).unwrap();
        assert_eq!(s.cells(1), &[vec![0, 1], vec![2]]);
        assert_eq!(s.children(0, 0), &[0, 1]);
    }

    #[test]
    fn predictable_requires_parent_constancy() {
        let s = binary();
        assert!(PredictableProcess::new(&s, vec![vec![vec![0.5], vec![0.5]]]).is_ok());
        assert_eq!(
            PredictableProcess::new(&s, vec![vec![vec![0.5], vec![0.4]]]).unwrap_err(),
            Error::NotPredictable { time: 1, cell: 0 }
        );
    }
}
