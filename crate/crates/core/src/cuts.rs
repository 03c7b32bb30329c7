//! Optimality cuts for the master problem.
//!
//! A plain cut anchored at an attack `x^k` reads
//!
//! ```text
//! z >= Q(x^k) - sum_{f : x^k_f = 0} alpha_f x_f
//! ```
//!
//! where `alpha_f` over-estimates the total service lost over all stages when
//! `f` is disabled. The strengthened form adds, for each `f` disabled in
//! `x^k`, the service `beta_f = Q(x^k - e_f) - Q(x^k)` released by switching
//! `f` back on:
//!
//! ```text
//! z >= Q(x^k) - sum_{x^k_f = 0} alpha_f x_f + sum_{x^k_f = 1} beta_f (1 - x_f)
//! ```

use serde::{Deserialize, Serialize};

use crate::uncertainty::upper_bound_weights;
use crate::{Execution, Instance, Result};

/// One optimality cut, kept sparse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub base: f64,
    pub origin: Vec<bool>,
    /// `(asset, alpha)` for every asset not disabled in `origin`.
    pub alpha_terms: Vec<(usize, f64)>,
    /// `(asset, beta)` for every asset disabled in `origin`; empty for plain
    /// cuts.
    pub beta_terms: Vec<(usize, f64)>,
}

impl Cut {
    pub fn is_strengthened(&self) -> bool {
        !self.beta_terms.is_empty()
    }

    /// The cut as `z + sum_f coeff_f x_f >= rhs`, dense over assets.
    pub fn linear_form(&self) -> (Vec<f64>, f64) {
        let mut coeffs = vec![0.0; self.origin.len()];
        let mut rhs = self.base;
        for &(f, a) in &self.alpha_terms {
            coeffs[f] += a;
        }
        for &(f, b) in &self.beta_terms {
            coeffs[f] += b;
            rhs += b;
        }
        (coeffs, rhs)
    }
}

/// Multistage damage over-estimates, one per asset.
///
/// With `pbar[f][s]` the largest weight asset `s` can put on `f`:
/// `alpha[f][1] = W_f + sum_s W_s pbar[f][s]`,
/// `alpha[f][i] = W_f + sum_s alpha[s][i-1] pbar[f][s]`, summed over stages.
pub fn compute_alpha(instance: &Instance, n_stages: usize) -> Result<Vec<f64>> {
    let network = instance.network();
    let n = network.len();
    // outgoing[f] = (s, pbar) for arcs f -> s
    let mut outgoing: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for s in 0..n {
        if let Some(spec) = instance.spec(s) {
            let pbar = upper_bound_weights(spec)?;
            for (&f, p) in spec.upstream().iter().zip(pbar) {
                outgoing[f].push((s, p));
            }
        }
    }
    let w = network.weights();
    let mut total = vec![0.0; n];
    let mut prev: Vec<f64> = w.clone();
    for _ in 0..n_stages {
        let stage: Vec<f64> = (0..n)
            .map(|f| w[f] + outgoing[f].iter().map(|&(s, p)| prev[s] * p).sum::<f64>())
            .collect();
        for (t, a) in total.iter_mut().zip(&stage) {
            *t += a;
        }
        prev = stage;
    }
    Ok(total)
}

/// Plain cut anchored at `x_k` with follower value `q_k`.
pub fn build_cut(x_k: &[bool], q_k: f64, alpha: &[f64]) -> Cut {
    Cut {
        base: q_k,
        origin: x_k.to_vec(),
        alpha_terms: x_k
            .iter()
            .enumerate()
            .filter(|(_, &on)| !on)
            .map(|(f, _)| (f, alpha[f]))
            .collect(),
        beta_terms: Vec::new(),
    }
}

/// Strengthened cut at `x_k` plus one plain cut per neighbour `x_k - e_f`.
///
/// `follower` evaluates `Q`; the neighbour solves are independent and run
/// under `exec`. A cut anchored at an attack without disabled assets has no
/// `beta` terms and is returned as a plain cut with no side cuts.
pub fn strengthen_cut<F>(
    x_k: &[bool],
    q_k: f64,
    alpha: &[f64],
    follower: F,
    exec: Execution,
) -> Result<(Cut, Vec<Cut>)>
where
    F: Fn(&[bool]) -> Result<f64> + Sync + Send,
{
    let ones: Vec<usize> = crate::follower::disabled_ids(x_k);
    let released = exec.map(&ones, |&f| {
        let mut tilde = x_k.to_vec();
        tilde[f] = false;
        follower(&tilde).map(|q| (tilde, q))
    });
    let mut cut = build_cut(x_k, q_k, alpha);
    let mut side = Vec::with_capacity(ones.len());
    for (&f, r) in ones.iter().zip(released) {
        let (tilde, q) = r?;
        // restoring an asset never lowers service; clip rounding noise
        cut.beta_terms.push((f, (q - q_k).max(0.0)));
        side.push(build_cut(&tilde, q, alpha));
    }
    Ok((cut, side))
}

/// Value of the cut's right-hand side at `x`.
pub fn evaluate_cut(cut: &Cut, x: &[bool]) -> f64 {
    let on = |f: usize| if x[f] { 1.0 } else { 0.0 };
    cut.base - cut.alpha_terms.iter().map(|&(f, a)| a * on(f)).sum::<f64>()
        + cut.beta_terms.iter().map(|&(f, b)| b * (1.0 - on(f))).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::follower::follower_value;
    use crate::model::{Asset, AssetClass, DependencyArc, Network, UncertaintyConfig};
    use crate::uncertainty::PolytopeSpec;

    fn instance(classes: &[AssetClass], arcs: &[(usize, usize)], specs: Vec<Option<PolytopeSpec>>) -> Instance {
        let assets = classes
            .iter()
            .enumerate()
            .map(|(id, c)| Asset { id, class: *c, pos: [id as f64, 0.0], weight: c.weight() as f64 })
            .collect();
        let arcs = arcs.iter().map(|&(src, dst)| DependencyArc { src, dst }).collect();
        let net = Network::new(assets, arcs, UncertaintyConfig::default()).unwrap();
        Instance::with_specs(net, specs).unwrap()
    }

    #[test]
    fn alpha_chain_by_hand() {
        use AssetClass::*;
        // substation 0 (W=6) feeds cell tower 1 (W=23) with pbar = 0.88
        let spec = PolytopeSpec::simplex_box(vec![0], vec![0.8], 0.1).unwrap();
        let inst = instance(&[Substation, CellTower], &[(0, 1)], vec![None, Some(spec)]);
        let alpha = compute_alpha(&inst, 2).unwrap();
        assert!((alpha[0] - 52.48).abs() < 1e-9, "{alpha:?}");
        assert_eq!(alpha[1], 46.0);
    }

    #[test]
    fn sink_alpha_and_cut_shapes() {
        use AssetClass::*;
        let spec = PolytopeSpec::simplex_box(vec![0], vec![1.0], 0.0).unwrap();
        let inst = instance(&[Substation, CellTower, Water], &[(0, 1)], vec![None, Some(spec), None]);
        let alpha = compute_alpha(&inst, 3).unwrap();
        assert_eq!(alpha[2], 30.0);
        assert_eq!(alpha[1], 69.0);

        let q0 = follower_value(&inst, &[false; 3], 3).unwrap();
        let cut = build_cut(&[false; 3], q0, &alpha);
        assert_eq!(cut.alpha_terms.len(), 3);
        assert_eq!(evaluate_cut(&cut, &[false; 3]), q0);
        assert_eq!(evaluate_cut(&cut, &[false, false, true]), q0 - alpha[2]);
        let all = build_cut(&[true; 3], 0.0, &alpha);
        assert!(all.alpha_terms.is_empty());
        assert_eq!(evaluate_cut(&all, &[false; 3]), 0.0);
    }

    #[test]
    fn strengthened_chain() {
        use AssetClass::*;
        let spec = PolytopeSpec::simplex_box(vec![0], vec![1.0], 0.0).unwrap();
        let inst = instance(&[Substation, CellTower], &[(0, 1)], vec![None, Some(spec)]);
        let alpha = compute_alpha(&inst, 2).unwrap();
        let x = [true, false];
        let q = follower_value(&inst, &x, 2).unwrap();
        assert_eq!(q, 0.0);
        let (cut, side) =
            strengthen_cut(&x, q, &alpha, |x| follower_value(&inst, x, 2), Execution::Sequential).unwrap();
        assert_eq!(cut.beta_terms, vec![(0, 2.0 * (6.0 + 23.0))]);
        assert_eq!(side.len(), 1);
        assert_eq!(side[0].origin, vec![false, false]);
        // at the neighbour the strengthened cut is tight
        assert_eq!(evaluate_cut(&cut, &[false, false]), 58.0);
        let (coeffs, rhs) = cut.linear_form();
        assert_eq!(coeffs, vec![58.0, alpha[1]]);
        assert_eq!(rhs, 58.0);
    }
}
