//! Invariants over the public API.

use std::collections::BTreeMap;

use proptest::prelude::*;

use task_exposure_core::exposure::{decay_weights, role_exposure, TaskRecord};
use task_exposure_core::raking::{rake, scale_to_population, Dimension, MarginalSet, RakeOptions, SampleRow, WeightedSample};
use task_exposure_core::redesign::{apply_focus, freed_share, proportional_baseline, surviving_tasks};
use task_exposure_core::savings::{savings_roles_for_delta, sweep, theta_grid, RawRole, SavingsRole};

fn scores() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec((0u32..=100).prop_map(|s| s as f64 / 100.0), 1..12)
}

fn tasks(s: &[f64]) -> Vec<TaskRecord> {
    TaskRecord::from_ordered(s.iter().map(|&e| ("t", e))).unwrap()
}

proptest! {
    #[test]
    fn decay_weights_normalise_and_decrease(n in 1usize..40, delta in 0.05f64..=1.0) {
        let w = decay_weights(n, delta).unwrap();
        prop_assert!((w.normalized.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for pair in w.normalized.windows(2) {
            prop_assert!(pair[1] <= pair[0] + 1e-15);
        }
    }

    #[test]
    fn role_shares_stay_in_unit_interval(s in scores(), delta in 0.05f64..=1.0, salary in 1.0f64..2e5) {
        let w = decay_weights(s.len(), delta).unwrap();
        let e = role_exposure(&tasks(&s), &w, Some(salary)).unwrap();
        prop_assert!(e.high_share >= 0.0 && e.high_share + e.medium_share <= 1.0 + 1e-12);
        prop_assert!(e.weighted_mean >= 0.0 && e.weighted_mean <= 1.0 + 1e-12);
        let v: f64 = e.value_per_task.unwrap().iter().sum();
        prop_assert!((v - salary).abs() < 1e-6 * salary);
        prop_assert!((e.hours_per_task.iter().sum::<f64>() - 37.0).abs() < 1e-9);
    }

    #[test]
    fn sweep_is_monotone_in_theta(
        roles in proptest::collection::vec((scores(), proptest::option::of(1e4f64..1e5), 0.1f64..10.0), 1..15),
    ) {
        let raw: Vec<RawRole> = roles
            .iter()
            .enumerate()
            .map(|(i, (s, salary, w))| RawRole { key: i.to_string(), tasks: tasks(s), salary: *salary, weight: *w })
            .collect();
        let sr: Vec<SavingsRole> = savings_roles_for_delta(&raw, 0.75).unwrap();
        let weights: Vec<f64> = raw.iter().map(|r| r.weight).collect();
        let curve = sweep(&sr, &weights, &theta_grid()).unwrap();
        for pair in curve.points.windows(2) {
            prop_assert!(pair[1].cost_reduction <= pair[0].cost_reduction + 1e-9);
            prop_assert!(pair[1].productivity_gain + 1e-9 >= pair[0].productivity_gain);
            prop_assert_eq!(pair[0].total_roles(), raw.len());
        }
    }

    #[test]
    fn redesign_conserves_time(s in scores(), delta in 0.05f64..=1.0, pick in any::<prop::sample::Index>()) {
        let t = tasks(&s);
        let w = decay_weights(s.len(), delta).unwrap().normalized;
        let survivors = surviving_tasks(&t);
        prop_assume!(!survivors.is_empty());
        let focus = survivors[pick.index(survivors.len())];
        let plan = apply_focus(&t, &w, focus).unwrap();
        prop_assert!((plan.iter().map(|p| p.weight).sum::<f64>() - 1.0).abs() < 1e-9);
        let f = plan.iter().find(|p| p.task_number == i64::from(focus)).unwrap();
        let before = w[focus as usize - 1];
        prop_assert!((f.weight - before - freed_share(&t, &w)).abs() < 1e-12);
        let base = proportional_baseline(&t, &w).unwrap();
        prop_assert!((base.iter().map(|p| p.weight).sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn raking_hits_consistent_margins(
        cells in proptest::collection::vec(0.2f64..5.0, 8),
        start in proptest::collection::vec(0.5f64..2.0, 8),
        population in 1e3f64..1e6,
    ) {
        // a full 2x2x2 table, so every margin set derived from it is attainable
        let cats = |i: usize, bit: usize| if i >> bit & 1 == 0 { "a" } else { "b" }.to_string();
        let mut targets: [BTreeMap<String, f64>; 3] = Default::default();
        for (i, &c) in cells.iter().enumerate() {
            for (d, m) in targets.iter_mut().enumerate() {
                *m.entry(cats(i, d)).or_default() += c;
            }
        }
        let [dept, grade, prof] = targets;
        let margins = MarginalSet::from_totals(dept, grade, prof, population).unwrap();
        let rows = (0..8)
            .map(|i| {
                let mut r = SampleRow::new(i.to_string(), cats(i, 0), cats(i, 1), cats(i, 2));
                r.weight = start[i];
                r
            })
            .collect();
        let out = rake(WeightedSample::new(rows), &margins, RakeOptions { tolerance: 1e-10, max_iterations: 1000 }).unwrap();
        prop_assert!(out.converged);
        prop_assert!(out.marginal_residual < 1e-8);
        for dim in Dimension::ORDER {
            let shares = out.sample.shares(dim);
            for (c, t) in margins.targets(dim) {
                prop_assert!((shares[c] - t).abs() < 1e-8);
            }
        }
        let scaled = scale_to_population(out.sample, population).unwrap();
        prop_assert!((scaled.total_weight() - population).abs() < 1e-6 * population);
    }
}
