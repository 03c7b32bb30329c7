//! The master problem: choose a feasible attack minimizing the cut envelope
//!
//! ```text
//! g(x) = max(0, max_k cut_k(x)),   x binary,  sum x <= budget
//! ```
//!
//! solved exactly by best-first branch-and-bound over LP relaxations.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::cuts::{evaluate_cut, Cut};
use crate::lp::{self, LinearProgram, LpStatus, Relation, Sense};
use crate::{Error, Result};

/// Nodes whose bound is within this of the incumbent are pruned.
const PRUNE_TOL: f64 = 1e-9;
/// LP values closer than this to 0 or 1 count as integral.
const INT_TOL: f64 = 1e-7;
/// Cut rows violated by more than this are added to a node relaxation.
const LAZY_TOL: f64 = 1e-9;
/// Rows with at most this slack are passed on to child nodes.
const BINDING_TOL: f64 = 1e-7;
const ROWS_PER_ROUND: usize = 8;

pub const DEFAULT_POOL_SIZE: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MasterProblem {
    pub cuts: Vec<Cut>,
    pub n_assets: usize,
    pub budget: usize,
    pub pool_size: usize,
}

impl MasterProblem {
    pub fn new(n_assets: usize, budget: usize, pool_size: usize) -> Result<Self> {
        if budget > n_assets {
            return Err(Error::InvalidConfig(format!(
                "budget {budget} exceeds the number of assets {n_assets}"
            )));
        }
        if pool_size == 0 {
            return Err(Error::InvalidConfig("pool size must be at least 1".into()));
        }
        Ok(MasterProblem {
            cuts: Vec::new(),
            n_assets,
            budget,
            pool_size,
        })
    }

    /// `g(x)`: the master objective of a binary point.
    pub fn value(&self, x: &[bool]) -> f64 {
        self.cuts
            .iter()
            .map(|c| evaluate_cut(c, x))
            .fold(0.0, f64::max)
    }
}

/// A pool entry: a feasible attack and its master objective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub x: Vec<bool>,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MasterSolution {
    pub x_opt: Vec<bool>,
    pub z_opt: f64,
    /// Best distinct feasible points met during the search, best first;
    /// the first entry is `(x_opt, z_opt)`.
    pub pool: Vec<PoolEntry>,
    pub node_count: usize,
    pub lp_count: usize,
    /// Filled only when requested.
    pub node_log: Vec<NodeLogEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeLogEntry {
    pub node: usize,
    pub depth: usize,
    pub bound: f64,
    pub incumbent: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MasterOptions {
    pub log_nodes: bool,
}

/// Dense cut rows `z + coeffs.x >= rhs`, also stored by column.
struct Rows {
    coeffs: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    /// `cols[f][k] = coeffs[k][f]`.
    cols: Vec<Vec<f64>>,
}

impl Rows {
    fn new(mp: &MasterProblem) -> Self {
        let (coeffs, rhs): (Vec<Vec<f64>>, Vec<f64>) = mp.cuts.iter().map(Cut::linear_form).unzip();
        let cols = (0..mp.n_assets)
            .map(|f| coeffs.iter().map(|c| c[f]).collect())
            .collect();
        Rows { coeffs, rhs, cols }
    }

    /// `rhs - sum_{f in ones} coeffs[.][f]` for every row.
    fn folded(&self, ones: impl Iterator<Item = usize>) -> Vec<f64> {
        let mut acc = self.rhs.clone();
        for f in ones {
            for (a, c) in acc.iter_mut().zip(&self.cols[f]) {
                *a -= c;
            }
        }
        acc
    }

    /// Master objective of a binary point in linear form; equals
    /// [`MasterProblem::value`] up to rounding.
    fn value(&self, x: &[bool]) -> f64 {
        let ones = x.iter().enumerate().filter_map(|(f, &b)| b.then_some(f));
        self.folded(ones).into_iter().fold(0.0, f64::max)
    }
}

struct Node {
    bound: f64,
    id: usize,
    depth: usize,
    fixed: Vec<Option<bool>>,
    active: Vec<usize>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: smallest bound first, then oldest node
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Bounded best-k set of distinct points ordered by `(z, x)`.
struct Pool {
    cap: usize,
    entries: BTreeSet<PoolKey>,
}

#[derive(Clone, Debug)]
struct PoolKey {
    z: f64,
    x: Vec<bool>,
}

impl PartialEq for PoolKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for PoolKey {}
impl PartialOrd for PoolKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for PoolKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.z.total_cmp(&other.z).then_with(|| self.x.cmp(&other.x))
    }
}

impl Pool {
    fn offer(&mut self, x: Vec<bool>, z: f64) {
        if self.entries.iter().any(|e| e.x == x) {
            return;
        }
        let key = PoolKey { z, x };
        if self.entries.len() < self.cap {
            self.entries.insert(key);
        } else if let Some(worst) = self.entries.last() {
            if key < *worst {
                self.entries.pop_last();
                self.entries.insert(key);
            }
        }
    }
}

pub fn solve_master(mp: &MasterProblem) -> Result<MasterSolution> {
    solve_master_with(mp, MasterOptions::default())
}

pub fn solve_master_with(mp: &MasterProblem, opts: MasterOptions) -> Result<MasterSolution> {
    let n = mp.n_assets;
    if mp.budget > n {
        return Err(Error::InvalidConfig(format!(
            "budget {} exceeds the number of assets {n}",
            mp.budget
        )));
    }
    if let Some(c) = mp.cuts.iter().find(|c| c.origin.len() != n) {
        return Err(Error::InvalidConfig(format!(
            "cut over {} assets in a master over {n}",
            c.origin.len()
        )));
    }
    let rows = Rows::new(mp);
    // the pool must hold the optimum, so keep at least one slot for it
    let mut pool = Pool {
        cap: mp.pool_size.max(1),
        entries: BTreeSet::new(),
    };
    let mut incumbent = f64::INFINITY;
    let mut log = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut next_id = 0;
    let mut nodes = 0;
    let mut lps = 0;

    let consider = |x: Vec<bool>, pool: &mut Pool, incumbent: &mut f64| {
        let z = rows.value(&x);
        *incumbent = incumbent.min(z);
        pool.offer(x, z);
    };

    heap.push(Node {
        bound: 0.0,
        id: next_id,
        depth: 0,
        fixed: vec![None; n],
        active: Vec::new(),
    });
    next_id += 1;

    while let Some(node) = heap.pop() {
        if node.bound >= incumbent - PRUNE_TOL {
            // best-first: every remaining node is at least as bad
            break;
        }
        nodes += 1;
        let Some(relaxed) = relax(mp, &rows, &node.fixed, &node.active)? else {
            continue;
        };
        lps += relaxed.lps;
        let (bound, xs) = (relaxed.bound, relaxed.x);
        if opts.log_nodes {
            log.push(NodeLogEntry {
                node: node.id,
                depth: node.depth,
                bound,
                incumbent,
            });
        }
        for cand in round_candidates(mp.budget, &node.fixed, &xs) {
            consider(cand, &mut pool, &mut incumbent);
        }
        if bound >= incumbent - PRUNE_TOL {
            continue;
        }
        let branch = xs
            .iter()
            .enumerate()
            .filter(|(f, _)| node.fixed[*f].is_none())
            .map(|(f, v)| (f, (v - 0.5).abs()))
            .filter(|(_, dist)| *dist < 0.5 - INT_TOL)
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let Some((f, _)) = branch else {
            // integral relaxation: its rounding was already considered
            continue;
        };
        for val in [false, true] {
            let mut fixed = node.fixed.clone();
            fixed[f] = Some(val);
            heap.push(Node {
                bound,
                id: next_id,
                depth: node.depth + 1,
                fixed,
                active: relaxed.active.clone(),
            });
            next_id += 1;
        }
    }

    // report exact cut values rather than the linear-form evaluation
    let mut entries: Vec<PoolEntry> = pool
        .entries
        .into_iter()
        .map(|k| PoolEntry { z: mp.value(&k.x), x: k.x })
        .collect();
    entries.sort_by(|a, b| a.z.total_cmp(&b.z).then_with(|| a.x.cmp(&b.x)));
    let best = entries.first().cloned().expect("the root relaxation always yields a candidate");
    Ok(MasterSolution {
        x_opt: best.x,
        z_opt: best.z,
        pool: entries,
        node_count: nodes,
        lp_count: lps,
        node_log: log,
    })
}

/// Relaxation outcome at a node.
struct Relaxation {
    bound: f64,
    /// Full `x` vector, fixed entries included.
    x: Vec<f64>,
    /// Cut rows binding at the solution, handed down to the children.
    active: Vec<usize>,
    lps: usize,
}

/// LP relaxation at a node; `None` when the fixings exceed the budget.
///
/// Cut rows are generated lazily: the LP starts from the parent's binding
/// rows and adds the most violated remaining rows until none is violated,
/// at which point its optimum is that of the full relaxation.
fn relax(
    mp: &MasterProblem,
    rows: &Rows,
    fixed: &[Option<bool>],
    seed_rows: &[usize],
) -> Result<Option<Relaxation>> {
    let n = mp.n_assets;
    let ones = fixed.iter().filter(|v| **v == Some(true)).count();
    if ones > mp.budget {
        return Ok(None);
    }
    let free: Vec<usize> = (0..n).filter(|&f| fixed[f].is_none()).collect();
    let mut full: Vec<f64> = fixed
        .iter()
        .map(|v| if *v == Some(true) { 1.0 } else { 0.0 })
        .collect();
    // fold fixed-at-one variables into the right-hand sides
    let folded = rows.folded((0..n).filter(|&f| fixed[f] == Some(true)));
    if free.is_empty() {
        let bound = folded.iter().copied().fold(0.0, f64::max);
        return Ok(Some(Relaxation { bound, x: full, active: Vec::new(), lps: 0 }));
    }
    let k = free.len();
    let remaining = mp.budget - ones;
    let mut active: Vec<usize> = seed_rows.to_vec();
    let mut lps = 0;
    loop {
        let mut objective = vec![0.0; k + 1];
        objective[0] = 1.0;
        let mut lp = LinearProgram::new(Sense::Minimize, objective);
        for j in 1..=k {
            lp.set_bounds(j, 0.0, 1.0);
        }
        for &r in &active {
            let mut row = Vec::with_capacity(k + 1);
            row.push(1.0);
            row.extend(free.iter().map(|&f| rows.coeffs[r][f]));
            lp.add_constraint(row, Relation::Ge, folded[r]);
        }
        if remaining < k {
            let mut row = vec![1.0; k + 1];
            row[0] = 0.0;
            lp.add_constraint(row, Relation::Le, remaining as f64);
        }
        let sol = lp::solve_lp(&lp)?;
        lps += 1;
        if sol.status != LpStatus::Optimal {
            return Err(Error::InvalidLp(format!(
                "master relaxation returned {:?}",
                sol.status
            )));
        }
        let z = sol.x[0];
        let support: Vec<(usize, f64)> = free
            .iter()
            .enumerate()
            .filter(|(j, _)| sol.x[j + 1] != 0.0)
            .map(|(j, &f)| (f, sol.x[j + 1]))
            .collect();
        let slack = |r: usize| {
            z + support.iter().map(|&(f, v)| rows.coeffs[r][f] * v).sum::<f64>() - folded[r]
        };
        let mut violated: Vec<(usize, f64)> = (0..rows.rhs.len())
            .map(|r| (r, slack(r)))
            .filter(|&(_, s)| s < -LAZY_TOL)
            .collect();
        if violated.is_empty() {
            for (j, &f) in free.iter().enumerate() {
                full[f] = sol.x[j + 1].clamp(0.0, 1.0);
            }
            let binding = active.iter().copied().filter(|&r| slack(r) <= BINDING_TOL).collect();
            return Ok(Some(Relaxation {
                bound: sol.objective.max(0.0),
                x: full,
                active: binding,
                lps,
            }));
        }
        violated.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        active.extend(violated.iter().take(ROWS_PER_ROUND).map(|&(r, _)| r));
    }
}

/// Integer points derived from a relaxation: the fixings alone, nearest
/// rounding, and a budget-filling rounding taking the largest LP values
/// first.
fn round_candidates(budget: usize, fixed: &[Option<bool>], xs: &[f64]) -> Vec<Vec<bool>> {
    let ones = fixed.iter().filter(|v| **v == Some(true)).count();
    if ones > budget {
        return Vec::new();
    }
    let base: Vec<bool> = fixed.iter().map(|v| *v == Some(true)).collect();
    let mut free: Vec<usize> = (0..xs.len()).filter(|&f| fixed[f].is_none()).collect();
    free.sort_by(|&a, &b| xs[b].total_cmp(&xs[a]).then(a.cmp(&b)));
    let slots = budget - ones;

    let mut nearest = base.clone();
    for &f in free.iter().take(slots) {
        if xs[f] > 0.5 {
            nearest[f] = true;
        }
    }
    let mut filled = base.clone();
    for &f in free.iter().take(slots) {
        filled[f] = true;
    }
    let mut out = vec![base];
    for cand in [nearest, filled] {
        if !out.contains(&cand) {
            out.push(cand);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cuts::build_cut;
    use itertools::Itertools;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(mp: &MasterProblem) -> (f64, Vec<bool>) {
        let n = mp.n_assets;
        let mut best = (f64::INFINITY, vec![]);
        for k in 0..=mp.budget {
            for ids in (0..n).combinations(k) {
                let mut x = vec![false; n];
                for i in ids {
                    x[i] = true;
                }
                let z = mp.value(&x);
                if z < best.0 - 1e-12 || (z <= best.0 + 1e-12 && x < best.1) {
                    best = (z, x);
                }
            }
        }
        best
    }

    #[test]
    fn no_cuts_gives_zero_attack() {
        let mp = MasterProblem::new(5, 2, 10).unwrap();
        let sol = solve_master(&mp).unwrap();
        assert_eq!(sol.z_opt, 0.0);
        assert_eq!(sol.x_opt, vec![false; 5]);
        assert_eq!(sol.pool[0].x, sol.x_opt);
    }

    #[test]
    fn single_cut_closed_form() {
        let alpha = [5.0, 30.0, 12.0, 40.0, 7.0];
        let mut mp = MasterProblem::new(5, 2, 10).unwrap();
        mp.cuts.push(build_cut(&[false; 5], 100.0, &alpha));
        let sol = solve_master(&mp).unwrap();
        assert_eq!(sol.x_opt, vec![false, true, false, true, false]);
        assert!((sol.z_opt - 30.0).abs() < 1e-12);
        mp.budget = 4;
        assert!((solve_master(&mp).unwrap().z_opt - 11.0).abs() < 1e-12);
        // the z >= 0 floor takes over once the cut drops below zero
        mp.cuts[0].base = 80.0;
        assert_eq!(solve_master(&mp).unwrap().z_opt, 0.0);
    }

    #[test]
    fn random_cut_sets_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let n = rng.gen_range(3..=10);
            let budget = rng.gen_range(0..=n.min(4));
            let mut mp = MasterProblem::new(n, budget, 5).unwrap();
            for _ in 0..rng.gen_range(0..8) {
                let origin: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.2)).collect();
                let alpha: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..50.0)).collect();
                let mut cut = build_cut(&origin, rng.gen_range(20.0..200.0), &alpha);
                if rng.gen_bool(0.5) {
                    cut.beta_terms = origin
                        .iter()
                        .enumerate()
                        .filter(|(_, &o)| o)
                        .map(|(f, _)| (f, rng.gen_range(0.0..30.0)))
                        .collect();
                }
                mp.cuts.push(cut);
            }
            let sol = solve_master(&mp).unwrap();
            let (z, _) = brute_force(&mp);
            assert!((sol.z_opt - z).abs() < 1e-7, "{} vs {z}", sol.z_opt);
            assert_eq!(sol.z_opt, mp.value(&sol.x_opt));
            assert!(sol.x_opt.iter().filter(|&&b| b).count() <= budget);
            assert!(sol.pool.windows(2).all(|w| w[0].z <= w[1].z));
            assert!(sol.pool.len() <= 5);
        }
    }

    #[test]
    fn node_log_is_optional() {
        let mut mp = MasterProblem::new(6, 3, 10).unwrap();
        mp.cuts.push(build_cut(&[false; 6], 50.0, &[9.0, 8.0, 7.0, 6.0, 5.0, 4.0]));
        mp.cuts.push(build_cut(&[true, true, true, false, false, false], 30.0, &[0.0, 0.0, 0.0, 10.0, 10.0, 10.0]));
        assert!(solve_master(&mp).unwrap().node_log.is_empty());
        let logged = solve_master_with(&mp, MasterOptions { log_nodes: true }).unwrap();
        assert!(!logged.node_log.is_empty());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(MasterProblem::new(3, 4, 10).is_err());
        assert!(MasterProblem::new(3, 1, 0).is_err());
    }
}
