//! Dense two-phase simplex for the small linear programs that arise on
//! desk-scale trees.
//!
//! All variables are nonnegative. Pivoting uses Bland's rule, so degenerate
//! problems (martingale polytopes are highly degenerate) terminate. After the
//! optimal basis is found the basic solution is recomputed from the original
//! data with an LU solve, which removes most of the drift accumulated by the
//! tableau updates.

use nalgebra::{DMatrix, DVector};

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-11;
const MAX_ITERATIONS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpError {
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub objective: f64,
}

/// `optimize objective·x` subject to the constraints and `x >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    sense: Sense,
    constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn minimize(objective: Vec<f64>) -> Self {
        Self {
            objective,
            sense: Sense::Minimize,
            constraints: Vec::new(),
        }
    }

    pub fn maximize(objective: Vec<f64>) -> Self {
        Self {
            objective,
            sense: Sense::Maximize,
            constraints: Vec::new(),
        }
    }

    /// Pure feasibility problem in `n` variables.
    pub fn feasibility(n: usize) -> Self {
        Self::minimize(vec![0.0; n])
    }

    pub fn var_count(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        debug_assert_eq!(coeffs.len(), self.objective.len());
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        self
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn solve(&self) -> Result<Solution, LpError> {
        Tableau::build(self).solve(self)
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n: usize,
    total: usize,
    first_artificial: usize,
    /// Normalized original columns (structural + slack), row-major, kept for
    /// the final LU polish.
    original: Vec<Vec<f64>>,
    original_rhs: Vec<f64>,
    /// Maps current tableau rows to original row indices.
    row_ids: Vec<usize>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.objective.len();
        let m = lp.constraints.len();
        let normalized: Vec<(Vec<f64>, Relation, f64)> = lp
            .constraints
            .iter()
            .map(|c| {
                if c.rhs < 0.0 {
                    let flipped = match c.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (c.coeffs.iter().map(|v| -v).collect(), flipped, -c.rhs)
                } else {
                    (c.coeffs.clone(), c.relation, c.rhs)
                }
            })
            .collect();

        let slack_count = normalized
            .iter()
            .filter(|c| c.1 != Relation::Eq)
            .count();
        let artificial_count = normalized
            .iter()
            .filter(|c| c.1 != Relation::Le)
            .count();
        let first_artificial = n + slack_count;
        let total = first_artificial + artificial_count;

        let mut rows = Vec::with_capacity(m);
        let mut original = Vec::with_capacity(m);
        let mut original_rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let (mut s, mut a) = (n, first_artificial);
        for (coeffs, rel, rhs) in &normalized {
            let mut row = vec![0.0; total + 1];
            row[..n].copy_from_slice(coeffs);
            match rel {
                Relation::Le => {
                    row[s] = 1.0;
                    basis.push(s);
                    s += 1;
                }
                Relation::Ge => {
                    row[s] = -1.0;
                    s += 1;
                    row[a] = 1.0;
                    basis.push(a);
                    a += 1;
                }
                Relation::Eq => {
                    row[a] = 1.0;
                    basis.push(a);
                    a += 1;
                }
            }
            row[total] = *rhs;
            original.push(row[..first_artificial].to_vec());
            original_rhs.push(*rhs);
            rows.push(row);
        }
        Tableau {
            rows,
            basis,
            n,
            total,
            first_artificial,
            original,
            original_rhs,
            row_ids: (0..m).collect(),
        }
    }

    fn solve(mut self, lp: &LinearProgram) -> Result<Solution, LpError> {
        let scale = 1.0
            + self
                .original_rhs
                .iter()
                .fold(0.0_f64, |acc, v| acc.max(v.abs()));

        if self.first_artificial < self.total {
            let mut cost = vec![0.0; self.total];
            for c in cost.iter_mut().skip(self.first_artificial) {
                *c = 1.0;
            }
            let infeasibility = self.run(&cost, self.total)?;
            if infeasibility > crate::tol::LP * scale {
                return Err(LpError::Infeasible);
            }
            self.evict_artificials();
        }

        let mut cost = vec![0.0; self.total];
        for (c, v) in cost.iter_mut().zip(&lp.objective) {
            *c = match lp.sense {
                Sense::Minimize => *v,
                Sense::Maximize => -*v,
            };
        }
        self.run(&cost, self.first_artificial)?;

        let mut x = vec![0.0; self.n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n {
                x[b] = self.rows[i][self.total];
            }
        }
        if let Some(polished) = self.polish() {
            x = polished;
        }
        for v in &mut x {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(Solution { x, objective })
    }

    /// Runs primal simplex with the given costs; columns `>= allowed` never
    /// enter. Returns the final objective value.
    fn run(&mut self, cost: &[f64], allowed: usize) -> Result<f64, LpError> {
        let m = self.rows.len();
        let total = self.total;
        // reduced costs
        let mut reduced = vec![0.0; total + 1];
        reduced[..total].copy_from_slice(cost);
        for i in 0..m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (r, v) in reduced.iter_mut().zip(&self.rows[i]) {
                    *r -= cb * v;
                }
            }
        }

        for _ in 0..MAX_ITERATIONS {
            let entering = (0..allowed).find(|&j| reduced[j] < -COST_EPS);
            let Some(j) = entering else {
                return Ok(-reduced[total]);
            };
            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = self.rows[i][j];
                if a > PIVOT_EPS {
                    let ratio = self.rows[i][total] / a;
                    leaving = match leaving {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            if ratio < best - 1e-13
                                || (ratio <= best + 1e-13 && self.basis[i] < self.basis[k])
                            {
                                Some((i, ratio))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            let Some((i, _)) = leaving else {
                return Err(LpError::Unbounded);
            };
            self.pivot(i, j);
            let f = reduced[j];
            if f != 0.0 {
                for (r, v) in reduced.iter_mut().zip(&self.rows[i]) {
                    *r -= f * v;
                }
            }
        }
        Err(LpError::IterationLimit)
    }

    fn pivot(&mut self, i: usize, j: usize) {
        let p = self.rows[i][j];
        for v in self.rows[i].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[i].clone();
        for (k, row) in self.rows.iter_mut().enumerate() {
            if k == i {
                continue;
            }
            let f = row[j];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[j] = 0.0;
            }
        }
        self.basis[i] = j;
    }

    /// Pivots zero-level artificials out of the basis, dropping rows that
    /// turn out to be redundant.
    fn evict_artificials(&mut self) {
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= self.first_artificial {
                let col = (0..self.first_artificial).find(|&j| self.rows[i][j].abs() > 1e-9);
                match col {
                    Some(j) => {
                        self.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        self.rows.remove(i);
                        self.basis.remove(i);
                        self.row_ids.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }

    fn polish(&self) -> Option<Vec<f64>> {
        let m = self.rows.len();
        if m == 0 {
            return Some(vec![0.0; self.n]);
        }
        let b = DMatrix::from_fn(m, m, |r, c| self.original[self.row_ids[r]][self.basis[c]]);
        let rhs = DVector::from_fn(m, |r, _| self.original_rhs[self.row_ids[r]]);
        let sol = b.lu().solve(&rhs)?;
        let mut x = vec![0.0; self.n];
        for (c, &var) in self.basis.iter().enumerate() {
            let v = sol[c];
            if !v.is_finite() || v < -1e-7 {
                return None;
            }
            let tableau_value = self.rows[c][self.total];
            if (v - tableau_value).abs() > 1e-6 * (1.0 + tableau_value.abs()) {
                return None;
            }
            if var < self.n {
                x[var] = v;
            }
        }
        Some(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut lp = LinearProgram::maximize(vec![3.0, 5.0]);
        lp.add(vec![1.0, 0.0], Relation::Le, 4.0)
            .add(vec![0.0, 2.0], Relation::Le, 12.0)
            .add(vec![3.0, 2.0], Relation::Le, 18.0);
        let s = lp.solve().unwrap();
        assert_abs_diff_eq!(s.objective, 36.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.x[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.x[1], 6.0, epsilon = 1e-12);
    }

    #[test]
    fn two_constraint_minimum() {
        // min b0 + b1, b0 + 1.2 b1 >= 20, b0 + 0.8 b1 >= 0
        let mut lp = LinearProgram::minimize(vec![1.0, 1.0]);
        lp.add(vec![1.0, 1.2], Relation::Ge, 20.0)
            .add(vec![1.0, 0.8], Relation::Ge, 0.0);
        let s = lp.solve().unwrap();
        assert_abs_diff_eq!(s.objective, 50.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::feasibility(1);
        lp.add(vec![1.0], Relation::Ge, 2.0).add(vec![1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve().unwrap_err(), LpError::Infeasible);

        let mut lp = LinearProgram::maximize(vec![1.0, 0.0]);
        lp.add(vec![1.0, -1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve().unwrap_err(), LpError::Unbounded);
    }

    #[test]
    fn redundant_equalities_and_negative_rhs() {
        let mut lp = LinearProgram::minimize(vec![1.0, 2.0]);
        lp.add(vec![1.0, 1.0], Relation::Eq, 1.0)
            .add(vec![2.0, 2.0], Relation::Eq, 2.0)
            .add(vec![-1.0, 0.0], Relation::Le, -0.25);
        let s = lp.solve().unwrap();
        assert_abs_diff_eq!(s.objective, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.x[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_martingale_polytope_extremes() {
        // q over outcomes with increments (20, 0, -20): max q0 subject to
        // sum q = 1 and martingale equality -> 0.5
        let mut lp = LinearProgram::maximize(vec![1.0, 0.0, 0.0]);
        lp.add(vec![1.0, 1.0, 1.0], Relation::Eq, 1.0)
            .add(vec![20.0, 0.0, -20.0], Relation::Eq, 0.0);
        assert_abs_diff_eq!(lp.solve().unwrap().objective, 0.5, epsilon = 1e-12);
        let mut lp = LinearProgram::maximize(vec![0.0, 1.0, 0.0]);
        lp.add(vec![1.0, 1.0, 1.0], Relation::Eq, 1.0)
            .add(vec![20.0, 0.0, -20.0], Relation::Eq, 0.0);
        assert_abs_diff_eq!(lp.solve().unwrap().objective, 1.0, epsilon = 1e-12);
    }
}
