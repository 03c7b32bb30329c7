//! The defender's problem: given an attack, the worst-case multistage
//! cascade of service levels and its weighted total `Q(x)`.
//!
//! Every upper bound on `y[f][i]` is non-decreasing in the previous stage's
//! service levels, so the coordinatewise-largest feasible `y` is optimal and
//! a single forward pass over the stages computes it exactly. An independent
//! validator solves the same problem as a mixed-binary LP by enumerating the
//! binary worst-case multipliers.

use serde::{Deserialize, Serialize};

use crate::lp::{self, LinearProgram, LpStatus, Relation, Sense};
use crate::uncertainty::{worst_case_level, PolytopeSpec};
use crate::{Error, Execution, Instance, Result};

/// Default limit on `assets * stages` for [`solve_follower_mccormick`].
pub const DEFAULT_MCCORMICK_CAP: usize = 24;

/// `[1 - P.d]^+`.
pub fn evaluate_phi(weights: &[f64], disruption: &[f64]) -> f64 {
    let loss: f64 = weights.iter().zip(disruption).map(|(p, d)| p * d).sum();
    (1.0 - loss).max(0.0)
}

/// A set of disabled assets under a cardinality budget.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttackVector {
    x: Vec<bool>,
    budget: usize,
}

impl AttackVector {
    pub fn new(x: Vec<bool>, budget: usize) -> Result<Self> {
        let used = x.iter().filter(|&&b| b).count();
        if used > budget {
            return Err(Error::InvalidAttack(format!(
                "{used} assets disabled with a budget of {budget}"
            )));
        }
        Ok(AttackVector { x, budget })
    }

    /// No asset disabled.
    pub fn none(n: usize, budget: usize) -> Self {
        AttackVector {
            x: vec![false; n],
            budget,
        }
    }

    /// Disables the listed ids out of `n` assets.
    pub fn from_ids(n: usize, ids: &[usize], budget: usize) -> Result<Self> {
        let mut x = vec![false; n];
        for &id in ids {
            if id >= n {
                return Err(Error::InvalidAttack(format!(
                    "asset id {id} out of range (network has {n} assets)"
                )));
            }
            x[id] = true;
        }
        Self::new(x, budget)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.x
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn disabled(&self) -> Vec<usize> {
        disabled_ids(&self.x)
    }
}

pub(crate) fn disabled_ids(x: &[bool]) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect()
}

/// Worst-case cascade for one attack. Matrices are indexed `[asset][stage]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeResult {
    pub y: Vec<Vec<f64>>,
    /// Worst-case multiplier per `(asset, stage)`; `None` for assets without
    /// uncertain upstream dependencies.
    pub lambda: Vec<Vec<Option<f64>>>,
    /// Minimizing weights per `(asset, stage)`, ordered as the asset's
    /// polytope upstream list.
    pub worst_weights: Vec<Vec<Option<Vec<f64>>>>,
    pub objective: f64,
}

impl CascadeResult {
    pub fn n_stages(&self) -> usize {
        self.y.first().map_or(0, Vec::len)
    }
}

struct StageCell {
    y: f64,
    lambda: Option<f64>,
    weights: Option<Vec<f64>>,
}

fn stage_cell(spec: Option<&PolytopeSpec>, cap: f64, disruption: impl Fn(usize) -> f64) -> Result<StageCell> {
    match spec {
        None => Ok(StageCell {
            y: cap,
            lambda: None,
            weights: None,
        }),
        Some(spec) => {
            let d: Vec<f64> = spec.upstream().iter().map(|&s| disruption(s)).collect();
            let wc = worst_case_level(spec, &d)?;
            Ok(StageCell {
                y: cap.min(wc.xi),
                lambda: Some(wc.lambda),
                weights: Some(wc.weights),
            })
        }
    }
}

/// Forward greedy cascade. `exec` controls whether the per-asset solves of
/// a stage run on the thread pool.
pub fn solve_follower(
    instance: &Instance,
    x: &[bool],
    n_stages: usize,
    exec: Execution,
) -> Result<CascadeResult> {
    let n = instance.len();
    if x.len() != n {
        return Err(Error::InvalidAttack(format!(
            "attack has {} entries, network has {n} assets",
            x.len()
        )));
    }
    if n_stages == 0 {
        return Err(Error::InvalidConfig("the cascade needs at least one stage".into()));
    }
    let mut y = vec![Vec::with_capacity(n_stages); n];
    let mut lambda = vec![Vec::with_capacity(n_stages); n];
    let mut worst = vec![Vec::with_capacity(n_stages); n];
    let mut prev: Vec<f64> = Vec::new();
    for stage in 0..n_stages {
        let cells = exec.map_range(n, |f| {
            if stage == 0 {
                let cap = if x[f] { 0.0 } else { 1.0 };
                stage_cell(instance.spec(f), cap, |s| if x[s] { 1.0 } else { 0.0 })
            } else {
                stage_cell(instance.spec(f), prev[f], |s| 1.0 - prev[s])
            }
        });
        let mut current = Vec::with_capacity(n);
        for (f, cell) in cells.into_iter().enumerate() {
            let cell = cell?;
            current.push(cell.y);
            y[f].push(cell.y);
            lambda[f].push(cell.lambda);
            worst[f].push(cell.weights);
        }
        prev = current;
    }
    let objective = weighted_total(instance, &y);
    Ok(CascadeResult {
        y,
        lambda,
        worst_weights: worst,
        objective,
    })
}

/// Convenience wrapper returning only `Q(x)`, sequential inner loop.
pub fn follower_value(instance: &Instance, x: &[bool], n_stages: usize) -> Result<f64> {
    Ok(solve_follower(instance, x, n_stages, Execution::Sequential)?.objective)
}

fn weighted_total(instance: &Instance, y: &[Vec<f64>]) -> f64 {
    instance
        .network()
        .assets()
        .iter()
        .zip(y)
        .map(|(a, row)| a.weight * row.iter().sum::<f64>())
        .sum()
}

/// Stage-wise network service level `sum_f W_f y[f][i] / sum_f W_f`.
///
/// A network with zero total weight reports full service.
pub fn service_level_trajectory(result: &CascadeResult, instance: &Instance) -> Vec<f64> {
    let assets = instance.network().assets();
    let total: f64 = assets.iter().map(|a| a.weight).sum();
    (0..result.n_stages())
        .map(|i| {
            if total <= 0.0 {
                return 1.0;
            }
            let served: f64 = assets.iter().zip(&result.y).map(|(a, row)| a.weight * row[i]).sum();
            (served / total).clamp(0.0, 1.0)
        })
        .collect()
}

/// Per-stage histogram of individual service levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// Bin edges, `bins + 1` values from 0 to 1.
    pub edges: Vec<f64>,
    /// `counts[stage][bin]`.
    pub counts: Vec<Vec<usize>>,
}

/// Bins are `[lo, hi)` except the last, which includes 1.
pub fn service_level_histogram(result: &CascadeResult, bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::InvalidConfig("histogram needs at least one bin".into()));
    }
    let edges = (0..=bins).map(|b| b as f64 / bins as f64).collect();
    let counts = (0..result.n_stages())
        .map(|i| {
            let mut c = vec![0; bins];
            for row in &result.y {
                let b = ((row[i] * bins as f64).floor() as usize).min(bins - 1);
                c[b] += 1;
            }
            c
        })
        .collect();
    Ok(Histogram { edges, counts })
}

/// Change of each worst-case arc weight between consecutive stages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightDelta {
    pub asset: usize,
    pub upstream: usize,
    /// Index `i` of the later stage, i.e. the delta is `P[i] - P[i-1]`
    /// (stages counted from 1).
    pub stage: usize,
    pub delta: f64,
}

pub fn weight_deltas(result: &CascadeResult, instance: &Instance) -> Vec<WeightDelta> {
    let mut out = Vec::new();
    for (f, stages) in result.worst_weights.iter().enumerate() {
        let Some(spec) = instance.spec(f) else { continue };
        for i in 1..stages.len() {
            if let (Some(prev), Some(cur)) = (&stages[i - 1], &stages[i]) {
                for (k, &s) in spec.upstream().iter().enumerate() {
                    out.push(WeightDelta {
                        asset: f,
                        upstream: s,
                        stage: i + 1,
                        delta: cur[k] - prev[k],
                    });
                }
            }
        }
    }
    out
}

/// Validator: solves the follower as an LP for every binary assignment of the
/// worst-case multipliers, with McCormick rows linking them to the previous
/// stage's service levels, and returns the best objective.
pub fn solve_follower_mccormick(
    instance: &Instance,
    x: &[bool],
    n_stages: usize,
    cap: usize,
    exec: Execution,
) -> Result<f64> {
    let n = instance.len();
    if n * n_stages > cap {
        return Err(Error::ValidatorCapExceeded {
            size: n * n_stages,
            cap,
        });
    }
    if x.len() != n {
        return Err(Error::InvalidAttack(format!(
            "attack has {} entries, network has {n} assets",
            x.len()
        )));
    }
    if n_stages == 0 {
        return Err(Error::InvalidConfig("the cascade needs at least one stage".into()));
    }
    let layout = McLayout::new(instance, n_stages);
    let pairs = layout.lambda_pairs.len();
    let values = exec.map_range(1usize << pairs, |mask| {
        let lambda: Vec<bool> = (0..pairs).map(|b| mask >> b & 1 == 1).collect();
        let lp = layout.build(instance, x, &lambda);
        lp::solve_lp(&lp).map(|sol| (sol.status == LpStatus::Optimal).then_some(sol.objective))
    });
    let mut best: Option<f64> = None;
    for v in values {
        if let Some(v) = v? {
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    // lambda = 0 everywhere with v = 0, y = 0 is always feasible
    best.ok_or_else(|| Error::InvalidLp("no feasible multiplier assignment".into()))
}

/// Column layout of the validator LP: `y[f][i]`, then per uncertain
/// `(f, i)` its dual vector `v`, then `zeta[f][s][i]` for stages after the
/// first.
struct McLayout {
    n_stages: usize,
    n_assets: usize,
    /// `(asset, stage)` pairs carrying a multiplier.
    lambda_pairs: Vec<(usize, usize)>,
    v_offset: Vec<usize>,
    zeta_offset: Vec<usize>,
    n_vars: usize,
}

impl McLayout {
    fn new(instance: &Instance, n_stages: usize) -> Self {
        let n = instance.len();
        let mut lambda_pairs = Vec::new();
        let mut next = n * n_stages;
        let mut v_offset = Vec::new();
        for f in 0..n {
            if let Some(spec) = instance.spec(f) {
                let rows = spec.halfspace().0.len();
                for i in 0..n_stages {
                    lambda_pairs.push((f, i));
                    v_offset.push(next);
                    next += rows;
                }
            }
        }
        let mut zeta_offset = Vec::new();
        for &(f, i) in &lambda_pairs {
            zeta_offset.push(next);
            if i > 0 {
                next += instance.spec(f).map_or(0, PolytopeSpec::dim);
            }
        }
        McLayout {
            n_stages,
            n_assets: n,
            lambda_pairs,
            v_offset,
            zeta_offset,
            n_vars: next,
        }
    }

    fn y(&self, f: usize, i: usize) -> usize {
        f * self.n_stages + i
    }

    fn build(&self, instance: &Instance, x: &[bool], lambda: &[bool]) -> LinearProgram {
        let weights = instance.network().weights();
        let mut objective = vec![0.0; self.n_vars];
        for f in 0..self.n_assets {
            for i in 0..self.n_stages {
                objective[self.y(f, i)] = weights[f];
            }
        }
        let mut lp = LinearProgram::new(Sense::Maximize, objective);
        let row = |entries: &[(usize, f64)]| {
            let mut r = vec![0.0; self.n_vars];
            for &(j, c) in entries {
                r[j] += c;
            }
            r
        };
        for f in 0..self.n_assets {
            for i in 0..self.n_stages {
                lp.set_bounds(self.y(f, i), 0.0, 1.0);
            }
            lp.add_constraint(row(&[(self.y(f, 0), 1.0)]), Relation::Le, if x[f] { 0.0 } else { 1.0 });
            for i in 1..self.n_stages {
                lp.add_constraint(
                    row(&[(self.y(f, i), 1.0), (self.y(f, i - 1), -1.0)]),
                    Relation::Le,
                    0.0,
                );
            }
        }
        for (p, &(f, i)) in self.lambda_pairs.iter().enumerate() {
            let spec = instance.spec(f).expect("multiplier pairs only for uncertain assets");
            let (rows, rhs) = spec.halfspace();
            let lam = if lambda[p] { 1.0 } else { 0.0 };
            let v0 = self.v_offset[p];
            // y <= u.v + lambda
            let mut r = vec![(self.y(f, i), 1.0)];
            r.extend(rhs.iter().enumerate().map(|(l, u)| (v0 + l, -u)));
            lp.add_constraint(row(&r), Relation::Le, lam);
            for (k, &s) in spec.upstream().iter().enumerate() {
                let col: Vec<(usize, f64)> =
                    rows.iter().enumerate().map(|(l, rl)| (v0 + l, rl[k])).collect();
                if i == 0 {
                    // U_s.v + lambda x_s <= 0
                    let xs = if x[s] { 1.0 } else { 0.0 };
                    lp.add_constraint(row(&col), Relation::Le, -lam * xs);
                } else {
                    let z = self.zeta_offset[p] + k;
                    let ys = self.y(s, i - 1);
                    // U_s.v + lambda - zeta <= 0
                    let mut r = col.clone();
                    r.push((z, -1.0));
                    lp.add_constraint(row(&r), Relation::Le, -lam);
                    // zeta >= lambda + y_s - 1, zeta <= lambda, zeta <= y_s
                    lp.add_constraint(row(&[(z, 1.0), (ys, -1.0)]), Relation::Ge, lam - 1.0);
                    lp.add_constraint(row(&[(z, 1.0)]), Relation::Le, lam);
                    lp.add_constraint(row(&[(z, 1.0), (ys, -1.0)]), Relation::Le, 0.0);
                }
            }
        }
        lp
    }
}
