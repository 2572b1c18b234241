//! Large-sample behaviour: estimators converge to the sample ATE and the
//! generated covariates have the configured moments.

use dr_ate::synthetic::{frozen_spec, generate, Family, SyntheticModelSpec};
use dr_ate::{estimate, Centering, RegressionForm};

#[test]
fn estimators_converge_on_linear_model() {
    let spec: SyntheticModelSpec = SyntheticModelSpec::linear_both(6.0, 20.0, 1.0, 0.5);
    // Nominal SLR standard deviation here is sqrt(1024 / n) = 0.032.
    let data = generate(&spec, 1_000_000, 11).unwrap();
    for form in RegressionForm::ALL {
        let err = (estimate(&data.dataset, form, Centering::Design(0.5)).unwrap().ate_hat - data.ate_true).abs();
        assert!(err < 0.15, "{form} error {err}");
    }
}

#[test]
fn mlr_error_shrinks_with_n() {
    let spec: SyntheticModelSpec = frozen_spec(Family::Model29a).unwrap();
    let rmse = |n: usize| {
        let sq: f64 = (0..200)
            .map(|r| {
                let d = generate(&spec, n, 1000 + r).unwrap();
                let e = estimate(&d.dataset, RegressionForm::Mlr, Centering::Empirical).unwrap().ate_hat - d.ate_true;
                e * e
            })
            .sum();
        (sq / 200.0).sqrt()
    };
    let (small, large) = (rmse(100), rmse(1600));
    // sqrt(n) scaling predicts a factor of 4.
    assert!(small / large > 2.5, "{small} vs {large}");
}

#[test]
fn covariate_moments_converge() {
    let spec: SyntheticModelSpec = frozen_spec(Family::Model29b).unwrap();
    let data = generate(&spec, 200_000, 3).unwrap().dataset;
    for j in 0..spec.d {
        let col = data.column(j);
        let n = col.len() as f64;
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }
    let cross: f64 = (0..data.n()).map(|i| (data.covariate(i, 0) - 1.0) * (data.covariate(i, 1) - 1.0)).sum::<f64>()
        / data.n() as f64;
    assert!(cross.abs() < 0.01, "covariance {cross}");
    let treated = data.treated_fraction();
    assert!((treated - 0.9).abs() < 0.005, "treated fraction {treated}");
}
