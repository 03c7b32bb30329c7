//! Cut-generation loop between the master problem and the follower.
//!
//! Each iteration solves the master for a lower bound and a pool of
//! candidate attacks, evaluates the follower on the candidates for an upper
//! bound, and adds one optimality cut per new candidate. The `strengthened`
//! variant replaces the cut at the master optimum by its beta-strengthened
//! form and adds plain cuts at each neighbour used to compute the betas.

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cuts::{build_cut, compute_alpha, strengthen_cut, Cut};
use crate::follower::{disabled_ids, follower_value};
use crate::master::{solve_master, MasterProblem, DEFAULT_POOL_SIZE};
use crate::oracle::feasible_count;
use crate::{Error, Execution, Instance, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[default]
    Plain,
    Strengthened,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "plain" => Ok(Variant::Plain),
            "strengthened" => Ok(Variant::Strengthened),
            other => Err(Error::InvalidConfig(format!(
                "unknown variant {other:?} (expected plain or strengthened)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    GapNotClosed,
    IterationLimit,
}

/// Why an optimal run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    /// Relative gap below the target.
    Gap,
    /// The master returned an attack that already carries a cut.
    Repeat,
    /// Every feasible attack has been evaluated.
    Exhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BendersConfig {
    pub n_stages: usize,
    pub budget: usize,
    pub epsilon: f64,
    pub variant: Variant,
    pub pool_size: usize,
    /// `None` for no limit.
    pub max_iterations: Option<usize>,
    /// Wall-clock seconds, checked between iterations; `None` for no limit.
    pub time_limit: Option<f64>,
    pub exec: Execution,
}

impl Default for BendersConfig {
    fn default() -> Self {
        BendersConfig {
            n_stages: 3,
            budget: 5,
            epsilon: 0.01,
            variant: Variant::Plain,
            pool_size: DEFAULT_POOL_SIZE,
            max_iterations: None,
            time_limit: Some(3600.0),
            exec: Execution::default(),
        }
    }
}

impl BendersConfig {
    pub fn validate(&self, n_assets: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be a non-negative number, got {}", self.epsilon));
        }
        if self.n_stages == 0 {
            return bad("n_stages must be at least 1".into());
        }
        if self.budget > n_assets {
            return bad(format!("budget {} exceeds the {n_assets} assets", self.budget));
        }
        if self.pool_size == 0 {
            return bad("pool_size must be at least 1".into());
        }
        if let Some(t) = self.time_limit {
            if !(t >= 0.0) {
                return bad(format!("time limit must be non-negative, got {t}"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// Disabled assets of the master optimum.
    pub attack: Vec<usize>,
    pub z_master: f64,
    pub q: f64,
    pub ub: f64,
    pub lb: f64,
    pub gap_pct: f64,
    pub master_ms: f64,
    pub sub_ms: f64,
    pub cuts_added: usize,
    pub cuts_total: usize,
    pub master_nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BendersReport {
    pub status: Status,
    pub closure: Option<Closure>,
    pub iterations: Vec<IterationRecord>,
    pub best_x: Vec<bool>,
    pub objective: f64,
    pub lower_bound: f64,
    pub gap_pct: f64,
    /// Distinct attacks whose follower value was computed.
    pub evaluated: usize,
    pub elapsed_s: f64,
    pub cuts: Vec<Cut>,
}

impl BendersReport {
    pub fn disabled_assets(&self) -> Vec<usize> {
        disabled_ids(&self.best_x)
    }
}

/// Relative gap in percent; `+inf` when only the lower bound is zero.
/// Round-off can push the master bound past the incumbent; that counts as 0.
pub fn gap(ub: f64, lb: f64) -> f64 {
    if ub <= lb {
        0.0
    } else if lb <= 0.0 {
        f64::INFINITY
    } else {
        (ub - lb) / lb * 100.0
    }
}

pub fn run(instance: &Instance, config: &BendersConfig) -> Result<BendersReport> {
    run_with_cuts(instance, config, Vec::new())
}

/// Like [`run`], seeding the master with previously generated cuts.
pub fn run_with_cuts(instance: &Instance, config: &BendersConfig, initial: Vec<Cut>) -> Result<BendersReport> {
    let n = instance.len();
    config.validate(n)?;
    let start = Instant::now();
    let alpha = compute_alpha(instance, config.n_stages)?;
    let mut mp = MasterProblem::new(n, config.budget, config.pool_size)?;
    let total_attacks = feasible_count(n, config.budget);

    let mut cache: HashMap<Vec<bool>, f64> = HashMap::new();
    let mut anchored: HashSet<Vec<bool>> = HashSet::new();
    let mut lb: f64 = 0.0;
    let mut ub = f64::INFINITY;
    let mut best_x = vec![false; n];

    let improve = |x: &[bool], q: f64, ub: &mut f64, best_x: &mut Vec<bool>| {
        if q < *ub || (q == *ub && x < best_x.as_slice()) {
            *ub = q;
            *best_x = x.to_vec();
        }
    };

    for cut in initial {
        if cut.origin.len() != n {
            return Err(Error::InvalidConfig(format!(
                "initial cut over {} assets for a network of {n}",
                cut.origin.len()
            )));
        }
        improve(&cut.origin, cut.base, &mut ub, &mut best_x);
        cache.insert(cut.origin.clone(), cut.base);
        anchored.insert(cut.origin.clone());
        mp.cuts.push(cut);
    }

    let mut records = Vec::new();
    let mut closure = None;
    let mut k = 0;
    let status = loop {
        if let Some(max) = config.max_iterations {
            if k >= max {
                break Status::IterationLimit;
            }
        }
        if let Some(limit) = config.time_limit {
            if k > 0 && start.elapsed().as_secs_f64() >= limit {
                break Status::GapNotClosed;
            }
        }
        k += 1;

        let t = Instant::now();
        let sol = solve_master(&mp)?;
        let master_ms = t.elapsed().as_secs_f64() * 1e3;
        lb = lb.max(sol.z_opt);
        let x_k = sol.x_opt.clone();

        let t = Instant::now();
        let mut added = 0;
        let repeat = anchored.contains(&x_k);
        if !repeat {
            // every attack needing a follower value this round
            let mut wanted: Vec<Vec<bool>> = vec![x_k.clone()];
            for e in &sol.pool {
                if !anchored.contains(&e.x) && !wanted.contains(&e.x) {
                    wanted.push(e.x.clone());
                }
            }
            if config.variant == Variant::Strengthened {
                for f in disabled_ids(&x_k) {
                    let mut tilde = x_k.clone();
                    tilde[f] = false;
                    if !wanted.contains(&tilde) {
                        wanted.push(tilde);
                    }
                }
            }
            let missing: Vec<Vec<bool>> = wanted.iter().filter(|x| !cache.contains_key(*x)).cloned().collect();
            let values = config
                .exec
                .map(&missing, |x| follower_value(instance, x, config.n_stages));
            for (x, q) in missing.into_iter().zip(values) {
                cache.insert(x, q?);
            }
            for x in &wanted {
                improve(x, cache[x], &mut ub, &mut best_x);
            }

            let q_k = cache[&x_k];
            let mut new_cuts = Vec::new();
            if config.variant == Variant::Strengthened && x_k.iter().any(|&b| b) {
                let (cut, side) = strengthen_cut(
                    &x_k,
                    q_k,
                    &alpha,
                    |x| Ok(cache[x]),
                    Execution::Sequential,
                )?;
                new_cuts.push(cut);
                new_cuts.extend(side);
            } else {
                new_cuts.push(build_cut(&x_k, q_k, &alpha));
            }
            for e in &sol.pool {
                if e.x != x_k {
                    new_cuts.push(build_cut(&e.x, cache[&e.x], &alpha));
                }
            }
            for cut in new_cuts {
                if anchored.insert(cut.origin.clone()) {
                    mp.cuts.push(cut);
                    added += 1;
                }
            }
        }
        let sub_ms = t.elapsed().as_secs_f64() * 1e3;

        if repeat {
            closure = Some(Closure::Repeat);
        } else if cache.len() as u128 >= total_attacks {
            // the cache holds every feasible attack, so its minimum is exact
            lb = ub;
            closure = Some(Closure::Exhausted);
        } else if ub <= lb || ub < (1.0 + config.epsilon) * lb {
            closure = Some(Closure::Gap);
        }
        if closure.is_some() && lb > ub {
            // lb <= optimum <= ub; any excess is round-off
            lb = ub;
        }
        records.push(IterationRecord {
            iter: k,
            attack: disabled_ids(&x_k),
            z_master: sol.z_opt,
            q: cache.get(&x_k).copied().unwrap_or(f64::NAN),
            ub,
            lb,
            gap_pct: gap(ub, lb),
            master_ms,
            sub_ms,
            cuts_added: added,
            cuts_total: mp.cuts.len(),
            master_nodes: sol.node_count,
        });
        if closure.is_some() {
            break Status::Optimal;
        }
    };

    Ok(BendersReport {
        status,
        closure,
        iterations: records,
        objective: ub,
        lower_bound: lb,
        gap_pct: gap(ub, lb),
        best_x,
        evaluated: cache.len(),
        elapsed_s: start.elapsed().as_secs_f64(),
        cuts: mp.cuts,
    })
}
