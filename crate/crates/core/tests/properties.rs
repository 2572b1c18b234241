mod common;

use dr_ate::regression::{build_design_matrix, solve_least_squares, ColumnLabel, DesignMatrix, RegressionForm};
use dr_ate::synthetic::{frozen_spec, generate, generate_indexed, Family, SyntheticModelSpec};
use dr_ate::variance::{delta, delta_roots, delta_sign_region, delta_value, root_condition_negative, DeltaSign};
use dr_ate::{difference_in_means, estimate, regularized_incomplete_beta, Centering, Dataset, MomentSummary};
use proptest::prelude::*;

fn dataset_strategy(d: usize) -> impl Strategy<Value = Dataset> {
    (8usize..40).prop_flat_map(move |n| {
        (
            prop::collection::vec(-10.0..10.0f64, n),
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec(-3.0..3.0f64, n * d),
        )
            .prop_filter("both groups present", |(_, t, _)| {
                t.iter().filter(|&&v| v).count() >= 2 && t.iter().filter(|&&v| !v).count() >= 2
            })
            .prop_map(move |(y, t, x)| Dataset::from_flat(y, t, x, (1..=d).map(|j| format!("x{j}")).collect()).unwrap())
    })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

fn unit_moments(cov_fx: f64, cov_gx: f64) -> MomentSummary {
    MomentSummary { var_f: 1.0, var_g: 1.0, cov_gf: 0.0, cov_fx, cov_gx, var_x: 1.0, mean_x: 0.0, n: 10 }
}

proptest! {
    #[test]
    fn solver_matches_normal_equations(
        rows in 6usize..30,
        q in 1usize..5,
        seed in prop::collection::vec(-5.0..5.0f64, 30 * 5 + 30),
    ) {
        let mut columns: Vec<Vec<f64>> = (0..q - 1).map(|j| seed[j * 30..j * 30 + rows].to_vec()).collect();
        columns.push(vec![1.0; rows]);
        let mut labels: Vec<ColumnLabel> = (0..q - 1).map(ColumnLabel::Covariate).collect();
        labels.push(ColumnLabel::Intercept);
        let y = &seed[150..150 + rows];
        let w = DesignMatrix::from_columns(columns.clone(), labels).unwrap();
        // Random columns are full rank with probability one; skip the rare near-collinear draw.
        if let Ok(fit) = solve_least_squares(&w, y) {
            let oracle = common::normal_equation_solution(&columns, y);
            for (a, b) in fit.beta_hat.iter().zip(&oracle) {
                prop_assert!(close(*a, *b, 1e-8), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn slr_coefficient_is_difference_in_means(ds in dataset_strategy(0)) {
        let w = build_design_matrix(&ds, RegressionForm::Slr).unwrap();
        let fit = solve_least_squares(&w, ds.y()).unwrap();
        let (mut s1, mut n1, mut s0, mut n0) = (0.0, 0.0, 0.0, 0.0);
        for (y, t) in ds.y().iter().zip(ds.t()) {
            if *t { s1 += y; n1 += 1.0 } else { s0 += y; n0 += 1.0 }
        }
        prop_assert!(close(fit.beta_hat[0], s1 / n1 - s0 / n0, 1e-10));
        prop_assert!(close(difference_in_means(&ds).unwrap(), s1 / n1 - s0 / n0, 1e-12));
    }

    #[test]
    fn flipping_labels_negates_every_estimate(ds in dataset_strategy(2)) {
        let flipped = ds.with_flipped_treatment();
        for form in RegressionForm::ALL {
            let (a, b) = match (estimate(&ds, form, Centering::Empirical), estimate(&flipped, form, Centering::Empirical)) {
                (Ok(a), Ok(b)) => (a.ate_hat, b.ate_hat),
                _ => continue,
            };
            prop_assert!(close(a, -b, 1e-8), "{form}: {a} vs {b}");
        }
    }

    #[test]
    fn mlr_is_invariant_to_covariate_shifts(ds in dataset_strategy(2), shift in -50.0..50.0f64) {
        let x: Vec<f64> = ds.covariates().iter().map(|v| v + shift).collect();
        let shifted = ds.with_covariates(x, ds.column_names().to_vec()).unwrap();
        let a = estimate(&ds, RegressionForm::Mlr, Centering::Empirical);
        let b = estimate(&shifted, RegressionForm::Mlr, Centering::Empirical);
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!(close(a.ate_hat, b.ate_hat, 1e-7));
        }
    }

    #[test]
    fn delta_nonnegative_without_treatment_covariance(cov_fx in -5.0..5.0f64, p in 0.001..0.999f64) {
        let r = delta(&unit_moments(cov_fx, 0.0), p).unwrap();
        prop_assert!(r.delta >= 0.0);
        prop_assert!((r.delta - cov_fx * cov_fx).abs() <= 1e-9);
    }

    #[test]
    fn delta_is_a_square_at_half(cov_fx in -5.0..5.0f64, cov_gx in -5.0..5.0f64) {
        let r = delta(&unit_moments(cov_fx, cov_gx), 0.5).unwrap();
        prop_assert!((r.delta - (cov_fx + cov_gx / 2.0).powi(2)).abs() <= 1e-9);
    }

    #[test]
    fn delta_vanishes_at_its_roots(k in -3.0..3.0f64, c_g in prop_oneof![-4.0..-0.1f64, 0.1..4.0f64]) {
        let (r1, r2) = delta_roots(k);
        prop_assert!((r1 + k).abs() < 1e-12 && (r2 - (2.0 + k) / 3.0).abs() < 1e-12);
        for r in [r1, r2] {
            prop_assert!(delta_value(k * c_g, c_g, r).abs() < 1e-9 * c_g * c_g);
        }
    }

    #[test]
    fn delta_second_difference_is_constant(c_f in -3.0..3.0f64, c_g in -3.0..3.0f64, p in 0.1..0.9f64, h in 0.001..0.05f64) {
        let second = delta_value(c_f, c_g, p + h) - 2.0 * delta_value(c_f, c_g, p) + delta_value(c_f, c_g, p - h);
        prop_assert!((second - (-6.0 * c_g * c_g * h * h)).abs() < 1e-10);
    }

    #[test]
    fn incomplete_beta_reflection(x in 0.0..1.0f64, a in 0.2..30.0f64, b in 0.2..30.0f64) {
        let lhs = regularized_incomplete_beta(x, a, b).unwrap();
        let rhs = 1.0 - regularized_incomplete_beta(1.0 - x, b, a).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
        prop_assert!((0.0..=1.0).contains(&lhs));
    }

    #[test]
    fn incomplete_beta_matches_binomial_sum(x in 0.0..1.0f64, a in 1u32..25, b in 1u32..25) {
        let got = regularized_incomplete_beta(x, f64::from(a), f64::from(b)).unwrap();
        prop_assert!((got - common::beta_binomial_sum(x, a, b)).abs() < 1e-10);
    }

    #[test]
    fn generation_is_permutation_invariant(seed in any::<u64>(), perm in Just((0u64..24).collect::<Vec<_>>()).prop_shuffle()) {
        for family in [Family::Model29c, Family::NonlinearF28] {
            let spec: SyntheticModelSpec = frozen_spec(family).unwrap();
            let base = generate(&spec, 24, seed).unwrap();
            let shuffled = generate_indexed(&spec, &perm, seed).unwrap();
            for (j, &i) in perm.iter().enumerate() {
                let i = i as usize;
                prop_assert_eq!(shuffled.g_true[j], base.g_true[i]);
                prop_assert_eq!(shuffled.dataset.y()[j], base.dataset.y()[i]);
                prop_assert_eq!(shuffled.dataset.t()[j], base.dataset.t()[i]);
                prop_assert_eq!(shuffled.dataset.row(j), base.dataset.row(i));
            }
        }
    }
}

#[test]
fn sign_region_matches_root_condition_everywhere() {
    let p: Vec<f64> = (1..=99).map(|i| i as f64 / 100.0).collect();
    let k: Vec<f64> = (0..81).map(|i| -2.0 + 4.0 * i as f64 / 80.0).collect();
    let grid = delta_sign_region(&p, &k).unwrap();
    assert_eq!(grid.signs.len(), 81);
    for (ki, row) in grid.signs.iter().enumerate() {
        assert_eq!(row.len(), 99);
        for (pi, sign) in row.iter().enumerate() {
            // Independent check: Delta / c_g^2 = k^2 + 2(1-p)k + 2p - 3p^2.
            let (kk, pp) = (k[ki], p[pi]);
            let value = kk * kk + 2.0 * (1.0 - pp) * kk + 2.0 * pp - 3.0 * pp * pp;
            let expected = if value.abs() <= 1e-12 {
                DeltaSign::Zero
            } else if value < 0.0 {
                DeltaSign::Negative
            } else {
                DeltaSign::Positive
            };
            assert_eq!(*sign, expected, "k = {kk}, p = {pp}");
            if expected != DeltaSign::Zero {
                assert_eq!(*sign == DeltaSign::Negative, root_condition_negative(pp, kk));
            }
        }
    }
}

#[test]
fn f32_and_f64_estimates_agree() {
    let spec: SyntheticModelSpec = frozen_spec(Family::Model29a).unwrap();
    let data = generate(&spec, 400, 5).unwrap().dataset;
    let narrow = Dataset::<f32>::from_flat(
        data.y().iter().map(|&v| v as f32).collect(),
        data.t().to_vec(),
        data.covariates().iter().map(|&v| v as f32).collect(),
        data.column_names().to_vec(),
    )
    .unwrap();
    for form in RegressionForm::ALL {
        let a = estimate(&data, form, Centering::Empirical).unwrap().ate_hat;
        let b = estimate(&narrow, form, Centering::Empirical).unwrap().ate_hat;
        assert!((a - f64::from(b)).abs() < 1e-3 * a.abs().max(1.0), "{form}: {a} vs {b}");
    }
}
