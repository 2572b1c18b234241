use dr_ate::monte_carlo::{run_monte_carlo, McConfig};
use dr_ate::synthetic::SyntheticModelSpec;
use dr_ate::variance::delta_value;
use dr_ate::RegressionForm::{self, Mcm, Mlr, Slr};

#[test]
fn variance_decays_with_sample_size() {
    let cases: [(SyntheticModelSpec, RegressionForm); 2] = [
        (SyntheticModelSpec::linear_both(6.0, 20.0, 1.0, 0.5), Mlr),
        (SyntheticModelSpec::constant_main(20.0, 20.0, 1.0, 0.25), Mcm),
    ];
    for (spec, form) in cases {
        let report = run_monte_carlo(&McConfig::new(spec, vec![250, 4000], 400, 17)).unwrap();
        for f in [Slr, Mlr, Mcm] {
            let small = report.form_cell(f, 250).unwrap();
            let large = report.form_cell(f, 4000).unwrap();
            // A 16x sample-size ratio leaves a huge margin at 400 replications.
            assert!(large.error_variance < small.error_variance, "{f} (well specified: {form})");
            assert!(small.error_variance / large.error_variance > 8.0, "{f}");
        }
    }
}

#[test]
fn slr_mlr_gap_follows_the_sign_of_delta() {
    // Model 14a: f = 6x, g = 20x, unit-variance x, so cov_fx = 6 and cov_gx = 20.
    let n = 200;
    let mut checked = 0;
    for p in [0.3, 0.5, 0.67, 0.87] {
        let spec = SyntheticModelSpec::linear_both(6.0, 20.0, 1.0, p);
        let report = run_monte_carlo(&McConfig::new(spec, vec![n], 10_000, 23)).unwrap();
        let gap = report.gap(Slr, Mlr, n).unwrap();
        let d = delta_value(6.0, 20.0, p);
        let nominal_gap = d / (p * (1.0 - p) * n as f64);
        if nominal_gap.abs() > 2.0 * gap.standard_error {
            assert_eq!(gap.difference > 0.0, d > 0.0, "p = {p}: gap {gap:?}, delta {d}");
            checked += 1;
        }
    }
    assert!(checked >= 3, "only {checked} resolvable cases");
}
