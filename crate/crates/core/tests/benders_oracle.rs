mod common;

use cascade_core::benders::{run, BendersConfig, Closure, Status, Variant};
use cascade_core::cuts::evaluate_cut;
use cascade_core::follower::follower_value;
use cascade_core::oracle::{enumerate_optimal, EnumerationOptions};
use cascade_core::Execution;

fn exact(variant: Variant, n_stages: usize, budget: usize) -> BendersConfig {
    BendersConfig {
        n_stages,
        budget,
        epsilon: 0.0,
        variant,
        time_limit: None,
        exec: Execution::Sequential,
        ..BendersConfig::default()
    }
}

#[test]
fn both_variants_match_enumeration() {
    for (case, (inst, np, nc)) in common::random_cases(2024, 25).into_iter().enumerate() {
        let truth = enumerate_optimal(&inst, np, nc, EnumerationOptions::default()).unwrap();
        for variant in [Variant::Plain, Variant::Strengthened] {
            let report = run(&inst, &exact(variant, np, nc)).unwrap();
            assert_eq!(report.status, Status::Optimal);
            assert!(
                (report.objective - truth.objective).abs() < 1e-6,
                "case {case} {variant:?}: {} vs {}",
                report.objective,
                truth.objective
            );
        }
    }
}

#[test]
fn generated_cuts_never_overestimate() {
    for (inst, np, nc) in common::random_cases(77, 12) {
        let attacks = common::all_attacks(inst.len(), nc);
        let q: Vec<f64> = attacks.iter().map(|x| follower_value(&inst, x, np).unwrap()).collect();
        for variant in [Variant::Plain, Variant::Strengthened] {
            let report = run(&inst, &exact(variant, np, nc)).unwrap();
            for cut in &report.cuts {
                for (x, qx) in attacks.iter().zip(&q) {
                    assert!(evaluate_cut(cut, x) <= qx + 1e-6, "{variant:?} cut overestimates");
                }
            }
        }
    }
}

#[test]
fn zero_budget_takes_one_iteration() {
    let inst = common::small_instance(5, 8);
    let report = run(&inst, &exact(Variant::Plain, 2, 0)).unwrap();
    assert_eq!(report.iterations.len(), 1);
    assert_eq!(report.closure, Some(Closure::Exhausted));
    assert_eq!(report.objective, 2.0 * inst.network().total_weight());
    assert_eq!(report.gap_pct, 0.0);
    assert!(report.best_x.iter().all(|b| !b));
}

#[test]
fn full_budget_reaches_zero() {
    let inst = common::small_instance(9, 6);
    let report = run(&inst, &exact(Variant::Strengthened, 3, 6)).unwrap();
    assert_eq!(report.objective, 0.0);
    assert_eq!(report.status, Status::Optimal);
}
