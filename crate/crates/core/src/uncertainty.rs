//! Dependency-weight polytopes and the worst-case service oracle.
//!
//! For an asset `f` with upstream assets `s` and an upstream disruption
//! vector `d`, the adversary picks weights `P` in the polytope to minimize
//!
//! ```text
//! xi = [1 - sum_s P_s d_s]^+
//! ```
//!
//! Written as the LP `min xi  s.t.  xi + P.d >= 1 (lambda), xi >= 0 (pi),
//! U P >= u (v), P >= 0`, its dual is `max u.v + lambda` subject to
//! `U_s.v + lambda d_s <= 0` and `0 <= lambda <= 1`. The oracle returns both
//! the primal optimum and a dual certificate with `lambda` in `{0, 1}`.

use serde::{Deserialize, Serialize};

use crate::lp::{self, LinearProgram, LpStatus, Relation, Sense};
use crate::model::{Network, UncertaintyConfig};
use crate::{Error, Result};

const MASS_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolytopeSpec {
    /// `{P >= 0 : sum P = 1, |P_s - base_s| <= delta * base_s}`.
    SimplexBox {
        upstream: Vec<usize>,
        base: Vec<f64>,
        delta: f64,
    },
    /// `{P >= 0 : rows . P >= rhs}`, columns ordered as `upstream`.
    Generic {
        upstream: Vec<usize>,
        rows: Vec<Vec<f64>>,
        rhs: Vec<f64>,
    },
}

impl PolytopeSpec {
    pub fn simplex_box(upstream: Vec<usize>, base: Vec<f64>, delta: f64) -> Result<Self> {
        if upstream.len() != base.len() {
            return Err(Error::InvalidConfig("base weights do not match upstream list".into()));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::InvalidConfig(format!("delta must lie in [0, 1), got {delta}")));
        }
        if base.iter().any(|b| !(*b >= 0.0 && b.is_finite())) {
            return Err(Error::InvalidConfig("base weights must be finite and non-negative".into()));
        }
        Ok(PolytopeSpec::SimplexBox {
            upstream,
            base,
            delta,
        })
    }

    pub fn upstream(&self) -> &[usize] {
        match self {
            PolytopeSpec::SimplexBox { upstream, .. } | PolytopeSpec::Generic { upstream, .. } => {
                upstream
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.upstream().len()
    }

    /// Half-space form `U P >= u` (non-negativity of `P` implicit).
    ///
    /// A box is written as rows `sum P >= 1`, `-sum P >= -1`, then
    /// `P_s >= lo_s` for every `s`, then `-P_s >= -hi_s` for every `s`.
    pub fn halfspace(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        match self {
            PolytopeSpec::Generic { rows, rhs, .. } => (rows.clone(), rhs.clone()),
            PolytopeSpec::SimplexBox { base, delta, .. } => {
                let k = base.len();
                let mut rows = Vec::with_capacity(2 + 2 * k);
                let mut rhs = Vec::with_capacity(2 + 2 * k);
                rows.push(vec![1.0; k]);
                rhs.push(1.0);
                rows.push(vec![-1.0; k]);
                rhs.push(-1.0);
                for (s, b) in base.iter().enumerate() {
                    let mut r = vec![0.0; k];
                    r[s] = 1.0;
                    rows.push(r);
                    rhs.push((1.0 - delta) * b);
                }
                for (s, b) in base.iter().enumerate() {
                    let mut r = vec![0.0; k];
                    r[s] = -1.0;
                    rows.push(r);
                    rhs.push(-(1.0 + delta) * b);
                }
                (rows, rhs)
            }
        }
    }

    /// The same set written in generic form.
    pub fn to_generic(&self) -> PolytopeSpec {
        let (rows, rhs) = self.halfspace();
        PolytopeSpec::Generic {
            upstream: self.upstream().to_vec(),
            rows,
            rhs,
        }
    }
}

/// Primal and dual optimum of the worst-case service problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseSolution {
    /// Worst-case service ceiling in `[0, 1]`.
    pub xi: f64,
    /// Minimizing weights, ordered as the spec's upstream list.
    pub weights: Vec<f64>,
    /// Dual of `xi + P.d >= 1`.
    pub lambda: f64,
    /// Duals of the polytope rows, ordered as [`PolytopeSpec::halfspace`].
    pub v: Vec<f64>,
    /// Dual of `xi >= 0`.
    pub pi: f64,
}

impl WorstCaseSolution {
    /// `u.v + lambda`.
    pub fn dual_objective(&self, spec: &PolytopeSpec) -> f64 {
        let (_, rhs) = spec.halfspace();
        rhs.iter().zip(&self.v).map(|(u, v)| u * v).sum::<f64>() + self.lambda
    }

    /// Largest violation of the dual constraints `U_s.v + lambda d_s <= 0`,
    /// `v >= 0`, `0 <= lambda <= 1`, `lambda + pi = 1`.
    pub fn dual_violation(&self, spec: &PolytopeSpec, disruption: &[f64]) -> f64 {
        let (rows, _) = spec.halfspace();
        let mut worst: f64 = 0.0;
        for (s, d) in disruption.iter().enumerate() {
            let col: f64 = rows.iter().zip(&self.v).map(|(r, v)| r[s] * v).sum();
            worst = worst.max(col + self.lambda * d);
        }
        for v in &self.v {
            worst = worst.max(-v);
        }
        worst
            .max(-self.lambda)
            .max(self.lambda - 1.0)
            .max(-self.pi)
            .max((self.lambda + self.pi - 1.0).abs())
    }
}

/// Per-asset polytopes derived from a network, plus diagnostics.
#[derive(Clone, Debug, Default)]
pub struct BaseWeights {
    pub specs: Vec<Option<PolytopeSpec>>,
    pub warnings: Vec<String>,
}

/// Inverse-square-distance base weights, normalized per target asset.
///
/// Upstream assets farther than `threshold` get weight zero. Assets with no
/// upstream, or whose upstream all lie beyond the threshold, get `None`.
pub fn base_weights(network: &Network, config: &UncertaintyConfig) -> BaseWeights {
    let mut out = BaseWeights::default();
    let assets = network.assets();
    for f in 0..network.len() {
        let ups = network.upstream(f);
        if ups.is_empty() {
            out.specs.push(None);
            continue;
        }
        let raw: Vec<f64> = ups
            .iter()
            .map(|&s| {
                let d = assets[s].distance(&assets[f]);
                if d > config.threshold {
                    return 0.0;
                }
                let clamped = if d < config.min_distance {
                    out.warnings.push(format!(
                        "assets {s} and {f} are {d:.3e} apart; distance clamped to {}",
                        config.min_distance
                    ));
                    config.min_distance
                } else {
                    d
                };
                1.0 / (clamped * clamped)
            })
            .collect();
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            out.warnings
                .push(format!("asset {f}: every upstream asset lies beyond the threshold"));
            out.specs.push(None);
            continue;
        }
        let base = raw.iter().map(|r| r / total).collect();
        out.specs.push(Some(PolytopeSpec::SimplexBox {
            upstream: ups.to_vec(),
            base,
            delta: config.delta,
        }));
    }
    out
}

/// Componentwise maximum of the weights over the polytope.
pub fn upper_bound_weights(spec: &PolytopeSpec) -> Result<Vec<f64>> {
    match spec {
        PolytopeSpec::SimplexBox { base, delta, .. } => {
            Ok(base.iter().map(|b| (1.0 + delta) * b).collect())
        }
        PolytopeSpec::Generic { rows, rhs, .. } => {
            let k = spec.dim();
            (0..k)
                .map(|s| {
                    let mut obj = vec![0.0; k];
                    obj[s] = 1.0;
                    let sol = lp::solve_lp(&generic_lp(Sense::Maximize, obj, rows, rhs))?;
                    match sol.status {
                        LpStatus::Optimal => Ok(sol.objective),
                        LpStatus::Infeasible => Err(Error::EmptyPolytope),
                        LpStatus::Unbounded => Err(Error::UnboundedPolytope),
                    }
                })
                .collect()
        }
    }
}

fn generic_lp(sense: Sense, objective: Vec<f64>, rows: &[Vec<f64>], rhs: &[f64]) -> LinearProgram {
    let mut lp = LinearProgram::new(sense, objective);
    for (r, b) in rows.iter().zip(rhs) {
        lp.add_constraint(r.clone(), Relation::Ge, *b);
    }
    lp
}

/// Greedy fill of the box-simplex: start every coordinate at its lower
/// bound, then hand out the remaining mass in `order` up to each upper
/// bound. Returns the weights and the position in `order` of the marginal
/// coordinate (the first one left below its upper bound, or the last one).
fn greedy_fill(base: &[f64], delta: f64, order: &[usize]) -> Result<(Vec<f64>, usize)> {
    let lo: Vec<f64> = base.iter().map(|b| (1.0 - delta) * b).collect();
    let lower_mass: f64 = lo.iter().sum();
    let upper_mass: f64 = base.iter().map(|b| (1.0 + delta) * b).sum();
    if lower_mass > 1.0 + MASS_TOL || upper_mass < 1.0 - MASS_TOL {
        return Err(Error::InfeasibleBox {
            lower: lower_mass,
            upper: upper_mass,
        });
    }
    let mut weights = lo;
    let mut remaining = (1.0 - lower_mass).max(0.0);
    let mut marginal = None;
    for (pos, &s) in order.iter().enumerate() {
        let room = 2.0 * delta * base[s];
        let add = remaining.min(room);
        weights[s] += add;
        remaining -= add;
        if marginal.is_none() && add < room {
            marginal = Some(pos);
        }
    }
    Ok((weights, marginal.unwrap_or(order.len().saturating_sub(1))))
}

/// Minimizes (or maximizes) `cost . P` over the box-simplex in closed form.
pub fn solve_simplex_box(cost: &[f64], base: &[f64], delta: f64, sense: Sense) -> Result<Vec<f64>> {
    if cost.len() != base.len() {
        return Err(Error::InvalidConfig("cost and base weights differ in length".into()));
    }
    let order = fill_order(cost, sense);
    greedy_fill(base, delta, &order).map(|(w, _)| w)
}

/// Coordinates cheapest-first for `Minimize`, dearest-first for `Maximize`;
/// ties by index.
fn fill_order(cost: &[f64], sense: Sense) -> Vec<usize> {
    let mut order: Vec<usize> = (0..cost.len()).collect();
    match sense {
        Sense::Minimize => order.sort_by(|&a, &b| cost[a].total_cmp(&cost[b]).then(a.cmp(&b))),
        Sense::Maximize => order.sort_by(|&a, &b| cost[b].total_cmp(&cost[a]).then(a.cmp(&b))),
    }
    order
}

/// Largest reachable loss `max P.d` over the polytope, with duals `w >= 0`
/// of the half-space rows satisfying `U^T w <= -d` and `u.w = -max`.
fn max_loss(spec: &PolytopeSpec, disruption: &[f64]) -> Result<(Vec<f64>, f64, Vec<f64>)> {
    match spec {
        PolytopeSpec::SimplexBox { base, delta, .. } => {
            if base.iter().sum::<f64>() <= 0.0 {
                return Err(Error::EmptyPolytope);
            }
            let order = fill_order(disruption, Sense::Maximize);
            let (weights, marginal) = greedy_fill(base, *delta, &order)?;
            let loss = weights.iter().zip(disruption).map(|(p, d)| p * d).sum();
            // theta prices the simplex row; coordinates above it sit at their
            // upper bound, those below at their lower bound
            let theta = disruption[order[marginal]];
            let k = base.len();
            let mut w = vec![0.0; 2 + 2 * k];
            w[1] = theta;
            for s in 0..k {
                let gap = disruption[s] - theta;
                if gap > 0.0 {
                    w[2 + k + s] = gap;
                } else if gap < 0.0 {
                    w[2 + s] = -gap;
                }
            }
            Ok((weights, loss, w))
        }
        PolytopeSpec::Generic { rows, rhs, .. } => {
            let sol = lp::solve_lp(&generic_lp(Sense::Maximize, disruption.to_vec(), rows, rhs))?;
            match sol.status {
                LpStatus::Infeasible => Err(Error::EmptyPolytope),
                LpStatus::Unbounded => Err(Error::UnboundedPolytope),
                LpStatus::Optimal => {
                    let w = sol.duals.iter().map(|y| (-y).max(0.0)).collect();
                    let weights = sol.x.iter().map(|p| p.max(0.0)).collect();
                    Ok((weights, sol.objective, w))
                }
            }
        }
    }
}

/// Worst-case service ceiling of one asset for the given upstream disruption.
pub fn worst_case_level(spec: &PolytopeSpec, disruption: &[f64]) -> Result<WorstCaseSolution> {
    if disruption.len() != spec.dim() {
        return Err(Error::InvalidConfig(format!(
            "disruption has {} entries, polytope has {}",
            disruption.len(),
            spec.dim()
        )));
    }
    if spec.dim() == 0 {
        return Err(Error::EmptyPolytope);
    }
    let (weights, loss, w) = max_loss(spec, disruption)?;
    let slack = 1.0 - loss;
    Ok(if slack > 0.0 {
        WorstCaseSolution {
            xi: slack,
            weights,
            lambda: 1.0,
            v: w,
            pi: 0.0,
        }
    } else {
        let rows = w.len();
        WorstCaseSolution {
            xi: 0.0,
            weights,
            lambda: 0.0,
            v: vec![0.0; rows],
            pi: 1.0,
        }
    })
}
