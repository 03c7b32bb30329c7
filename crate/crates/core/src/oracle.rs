//! Ground truth by exhaustive enumeration of every feasible attack.

use std::cmp::Ordering;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::follower::follower_value;
use crate::{Error, Execution, Instance, Result};

pub const DEFAULT_GUARD: u128 = 200_000;

/// Number of binary vectors of length `n` with at most `budget` ones.
pub fn feasible_count(n: usize, budget: usize) -> u128 {
    let mut total = 0u128;
    let mut binom = 1u128;
    for k in 0..=budget.min(n) {
        total += binom;
        binom = binom * (n - k) as u128 / (k + 1) as u128;
    }
    total
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumerationResult {
    pub x_opt: Vec<bool>,
    pub objective: f64,
    pub n_evaluated: u128,
    /// Every evaluated `(x, Q(x))`, when requested.
    pub table: Option<Vec<(Vec<bool>, f64)>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationOptions {
    pub guard: u128,
    pub keep_table: bool,
    pub exec: Execution,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            guard: DEFAULT_GUARD,
            keep_table: false,
            exec: Execution::default(),
        }
    }
}

/// Minimizes `Q` over all attacks with at most `budget` disabled assets.
/// Ties go to the lexicographically smallest attack (`false < true`).
pub fn enumerate_optimal(
    instance: &Instance,
    n_stages: usize,
    budget: usize,
    opts: EnumerationOptions,
) -> Result<EnumerationResult> {
    let n = instance.len();
    let count = feasible_count(n, budget);
    if count > opts.guard {
        return Err(Error::EnumerationTooLarge {
            count,
            guard: opts.guard,
        });
    }
    let attacks: Vec<Vec<bool>> = (0..=budget.min(n))
        .flat_map(|k| (0..n).combinations(k))
        .map(|ids| {
            let mut x = vec![false; n];
            for i in ids {
                x[i] = true;
            }
            x
        })
        .collect();
    let values = opts
        .exec
        .map(&attacks, |x| follower_value(instance, x, n_stages))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let best = (0..attacks.len())
        .min_by(|&a, &b| rank(values[a], &attacks[a], values[b], &attacks[b]))
        .expect("the empty attack is always feasible");
    let (x_opt, objective) = (attacks[best].clone(), values[best]);
    Ok(EnumerationResult {
        x_opt,
        objective,
        n_evaluated: attacks.len() as u128,
        table: opts
            .keep_table
            .then(|| attacks.into_iter().zip(values).collect()),
    })
}

fn rank(qa: f64, xa: &[bool], qb: f64, xb: &[bool]) -> Ordering {
    qa.total_cmp(&qb).then_with(|| xa.cmp(xb))
}
