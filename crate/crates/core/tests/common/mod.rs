//! Random instance generators and direct-summation oracles shared by the
//! integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use supmart::{AdaptedProcess, FilteredSpace, Measure, MeasureSet};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn split(rng: &mut ChaCha8Rng, cell: &[usize], parts: usize) -> Vec<Vec<usize>> {
    let mut members = cell.to_vec();
    members.shuffle(rng);
    let mut cuts: Vec<usize> = (1..members.len()).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(parts - 1).collect();
    cuts.sort_unstable();
    let mut out = Vec::new();
    let mut start = 0;
    for c in cuts.into_iter().chain(std::iter::once(members.len())) {
        out.push(members[start..c].to_vec());
        start = c;
    }
    out
}

/// Random filtration with at least two cells at time 1.
pub fn random_space(rng: &mut ChaCha8Rng, max_outcomes: usize, max_horizon: usize) -> FilteredSpace {
    let n = rng.gen_range(3..=max_outcomes);
    let horizon = rng.gen_range(1..=max_horizon);
    let mut partitions = vec![vec![(0..n).collect::<Vec<_>>()]];
    for t in 1..=horizon {
        let mut cells = Vec::new();
        for cell in &partitions[t - 1] {
            let max_parts = cell.len().min(3);
            let parts = if t == 1 {
                rng.gen_range(2..=max_parts)
            } else if max_parts == 1 {
                1
            } else {
                rng.gen_range(1..=max_parts)
            };
            cells.extend(split(rng, cell, parts));
        }
        partitions.push(cells);
    }
    FilteredSpace::new(n, partitions).unwrap()
}

pub fn positive_measure(rng: &mut ChaCha8Rng, n: usize) -> Measure {
    Measure::normalized((0..n).map(|_| rng.gen_range(0.1..1.0)).collect()).unwrap()
}

/// `P_1` plus `k - 1` measures `P_1 z` with `z` positive, `F_1`-measurable and
/// `E^{P_1} z = 1`.
pub fn f1_density_hull(rng: &mut ChaCha8Rng, space: &FilteredSpace, k: usize) -> Vec<Measure> {
    let p1 = positive_measure(rng, space.outcome_count());
    let mut out = vec![p1.clone()];
    for _ in 1..k {
        let c: Vec<f64> = (0..space.cells(1).len()).map(|_| rng.gen_range(0.2..2.0)).collect();
        let norm: f64 = (0..c.len())
            .map(|id| c[id] * space.cell_mass(p1.probabilities(), 1, id))
            .sum();
        let q: Vec<f64> = (0..space.outcome_count())
            .map(|w| p1.probabilities()[w] * c[space.atom_of(1, w).unwrap()] / norm)
            .collect();
        out.push(Measure::normalized(q).unwrap());
    }
    out
}

/// `E{x | F_t}` under `p`, by direct summation over the cells of `F_t`.
pub fn cond_exp(space: &FilteredSpace, p: &[f64], x: &[f64], t: usize) -> Vec<f64> {
    let mut out = vec![0.0; space.outcome_count()];
    for cell in space.cells(t) {
        let mass: f64 = cell.iter().map(|&w| p[w]).sum();
        let v = cell.iter().map(|&w| p[w] * x[w]).sum::<f64>() / mass;
        for &w in cell {
            out[w] = v;
        }
    }
    out
}

/// `u / E^{P_1}{u | F_1}`: a unit claim for every hull built by
/// [`f1_density_hull`] from `P_1`.
pub fn hull_unit_claim(rng: &mut ChaCha8Rng, space: &FilteredSpace, p1: &Measure) -> Vec<f64> {
    let u: Vec<f64> = (0..space.outcome_count()).map(|_| rng.gen_range(0.1..3.0)).collect();
    let e = cond_exp(space, p1.probabilities(), &u, 1);
    u.iter().zip(&e).map(|(a, b)| a / b).collect()
}

/// Rows `E^p{x | F_t}` for `t = 0..=N`.
pub fn martingale_of(space: &FilteredSpace, p: &[f64], x: &[f64]) -> Vec<Vec<f64>> {
    (0..=space.horizon()).map(|t| cond_exp(space, p, x, t)).collect()
}

/// Adapted, pathwise nondecreasing, zero at time 0.
pub fn nondecreasing(rng: &mut ChaCha8Rng, space: &FilteredSpace, scale: f64) -> Vec<Vec<f64>> {
    let n = space.outcome_count();
    let mut rows = vec![vec![0.0; n]];
    for t in 1..=space.horizon() {
        let mut row = rows[t - 1].clone();
        for cell in space.cells(t) {
            let step = if rng.gen_bool(0.5) { rng.gen_range(0.0..scale) } else { 0.0 };
            for &w in cell {
                row[w] += step;
            }
        }
        rows.push(row);
    }
    rows
}

pub fn combine(terms: &[(f64, &[Vec<f64>])]) -> Vec<Vec<f64>> {
    let (_, first) = terms[0];
    let mut out = vec![vec![0.0; first[0].len()]; first.len()];
    for (c, rows) in terms {
        for (o, r) in out.iter_mut().zip(rows.iter()) {
            for (a, b) in o.iter_mut().zip(r) {
                *a += c * b;
            }
        }
    }
    out
}

/// A recombining-free price tree: `values[t][node][asset]`, `parent[t][node]`.
pub struct Tree {
    pub values: Vec<Vec<Vec<f64>>>,
    pub parent: Vec<Vec<usize>>,
}

impl Tree {
    pub fn new(s0: Vec<f64>) -> Self {
        Self {
            values: vec![vec![s0]],
            parent: vec![vec![0]],
        }
    }

    pub fn push_level(&mut self, children: Vec<Vec<Vec<f64>>>) {
        let mut values = Vec::new();
        let mut parent = Vec::new();
        for (p, kids) in children.into_iter().enumerate() {
            for k in kids {
                values.push(k);
                parent.push(p);
            }
        }
        self.values.push(values);
        self.parent.push(parent);
    }

    fn ancestor(&self, leaf: usize, t: usize) -> usize {
        let mut node = leaf;
        for level in (t + 1..self.values.len()).rev() {
            node = self.parent[level][node];
        }
        node
    }

    pub fn space(&self) -> FilteredSpace {
        let horizon = self.values.len() - 1;
        let leaves = self.values[horizon].len();
        let labels: Vec<Vec<usize>> = (0..=horizon)
            .map(|t| (0..leaves).map(|w| self.ancestor(w, t)).collect())
            .collect();
        FilteredSpace::from_labels(&labels).unwrap()
    }

    pub fn asset(&self, space: &FilteredSpace, j: usize) -> AdaptedProcess {
        let horizon = self.values.len() - 1;
        let leaves = self.values[horizon].len();
        let rows = (0..=horizon)
            .map(|t| (0..leaves).map(|w| self.values[t][self.ancestor(w, t)][j]).collect())
            .collect();
        AdaptedProcess::new(space, rows).unwrap()
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Child prices around `parent` with at least one strict up and one strict
/// down move when `count >= 2`.
fn moves(rng: &mut ChaCha8Rng, parent: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![parent];
    }
    let mut out = vec![
        round2(parent * (1.0 + rng.gen_range(0.05..0.4))),
        round2(parent * (1.0 - rng.gen_range(0.05..0.4))),
    ];
    for _ in 2..count {
        out.push(round2(parent * (1.0 + rng.gen_range(-0.4..0.4))));
    }
    out.shuffle(rng);
    out
}

/// Random arbitrage-free market with `assets` assets and at most
/// `max_leaves` outcomes.
pub fn random_market(
    rng: &mut ChaCha8Rng,
    horizon: usize,
    max_leaves: usize,
    assets: usize,
) -> (FilteredSpace, MeasureSet, Vec<AdaptedProcess>) {
    loop {
        let mut tree = Tree::new(vec![100.0; assets]);
        for t in 1..=horizon {
            let nodes = tree.values[t - 1].len();
            let mut budget = max_leaves.saturating_sub(nodes);
            let mut level = Vec::new();
            for node in 0..nodes {
                let lo = if t == 1 { 2 } else { 1 };
                let count = rng.gen_range(lo..=3).min(budget + 1).max(lo);
                budget = budget.saturating_sub(count - 1);
                let per_asset: Vec<Vec<f64>> = (0..assets)
                    .map(|j| moves(rng, tree.values[t - 1][node][j], count))
                    .collect();
                level.push((0..count).map(|c| per_asset.iter().map(|m| m[c]).collect()).collect());
            }
            tree.push_level(level);
        }
        let space = tree.space();
        let procs: Vec<AdaptedProcess> = (0..assets).map(|j| tree.asset(&space, j)).collect();
        if let Ok(set) = MeasureSet::martingale(&space, procs.clone()) {
            return (space, set, procs);
        }
    }
}

/// Single-asset market whose only price move happens below one node at the
/// last step; earlier steps refine information with flat prices. Returns
/// the unit claim `(1 - a) + a S_N / S_0`.
pub fn complete_market(
    rng: &mut ChaCha8Rng,
    horizon: usize,
    max_leaves: usize,
) -> (FilteredSpace, MeasureSet, AdaptedProcess, Vec<f64>) {
    let mut tree = Tree::new(vec![100.0]);
    for t in 1..=horizon {
        let nodes = tree.values[t - 1].len();
        let mover = rng.gen_range(0..nodes);
        let mut level = Vec::new();
        let mut leaves = nodes;
        for node in 0..nodes {
            let count = if t == horizon && node == mover {
                rng.gen_range(2..=4)
            } else if leaves < max_leaves / 2 {
                rng.gen_range(1..=2)
            } else {
                1
            };
            leaves += count - 1;
            let parent = tree.values[t - 1][node][0];
            let kids = if t == horizon && node == mover {
                if count >= 3 && rng.gen_bool(0.3) {
                    let mut m = moves(rng, parent, count - 1);
                    m.push(parent);
                    m
                } else {
                    moves(rng, parent, count)
                }
            } else {
                vec![parent; count]
            };
            level.push(kids.into_iter().map(|v| vec![v]).collect());
        }
        tree.push_level(level);
    }
    let space = tree.space();
    let asset = tree.asset(&space, 0);
    let set = MeasureSet::martingale(&space, vec![asset.clone()]).unwrap();
    let a = rng.gen_range(0.2..=1.0);
    let xi0 = asset.terminal().iter().map(|s| (1.0 - a) + a * s / 100.0).collect();
    (space, set, asset, xi0)
}
