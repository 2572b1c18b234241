//! t and F tests for least-squares fits, with the tail probabilities
//! computed from a self-contained regularized incomplete beta function.
//!
//! The tests assume homoskedastic Gaussian noise; nothing here checks that
//! assumption.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::regression::{ColumnLabel, DesignMatrix, LsFit, RegressionForm};
use crate::scalar::{mean, Scalar};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the series in its accurate range.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + LANCZOS_G + 0.5;
    let series = LANCZOS[1..].iter().enumerate().fold(LANCZOS[0], |acc, (i, c)| acc + c / (x + (i + 1) as f64));
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + series.ln()
}

/// Continued fraction for `I_x(a, b)` (modified Lentz), valid for
/// `x < (a + 1) / (a + b + 2)`.
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    const MAX_ITER: usize = 10_000;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::DomainError("x must lie in [0, 1]"));
    }
    if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
        return Err(Error::DomainError("shape parameters must be positive and finite"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    let value = if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    };
    Ok(value.clamp(0.0, 1.0))
}

/// Two-sided tail `P(|T| >= |t|)` of Student's t with `dof` degrees of freedom.
pub fn student_t_two_sided(t: f64, dof: f64) -> Result<f64> {
    if t.is_nan() {
        return Err(Error::DomainError("t statistic is NaN"));
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    regularized_incomplete_beta(dof / (dof + t * t), dof / 2.0, 0.5)
}

/// Upper tail `P(F >= f)` of the F distribution with `(d1, d2)` degrees of freedom.
pub fn f_upper_tail(f: f64, d1: f64, d2: f64) -> Result<f64> {
    if f.is_nan() {
        return Err(Error::DomainError("F statistic is NaN"));
    }
    if f <= 0.0 {
        return Ok(1.0);
    }
    if f.is_infinite() {
        return Ok(0.0);
    }
    regularized_incomplete_beta(d2 / (d2 + d1 * f), d2 / 2.0, d1 / 2.0)
}

/// Result of a t test on one coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTest {
    pub statistic: f64,
    pub p_value: f64,
    pub dof: usize,
    /// Residuals vanished; the p-value is 0 or 1 by convention.
    pub perfect_fit: bool,
}

/// Result of the overall F test against the intercept-only model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FTest {
    pub statistic: f64,
    pub p_value: f64,
    pub dof_model: usize,
    pub dof_residual: usize,
    pub perfect_fit: bool,
}

/// Residual norm at rounding level relative to `sqrt(scale)`.
fn negligible<S: Scalar>(sum_squares: S, n: usize, scale: S) -> bool {
    let tol = S::of(64.0) * S::of_usize(n) * S::epsilon();
    sum_squares <= tol * tol * scale.max(S::min_positive_value())
}

fn is_perfect_fit<S: Scalar>(fit: &LsFit<S>, scale: S) -> bool {
    negligible(fit.residual_sum_squares, fit.residuals.len(), scale)
}

fn reconstruct_outcome<S: Scalar>(fit: &LsFit<S>, w: &DesignMatrix<S>) -> Vec<S> {
    w.mul_vec(&fit.beta_hat).into_iter().zip(&fit.residuals).map(|(a, &r)| a + r).collect()
}

fn check_fit<S: Scalar>(fit: &LsFit<S>, w: &DesignMatrix<S>) -> Result<()> {
    if fit.dof_residual == 0 {
        return Err(Error::DomainError("the test needs at least one residual degree of freedom"));
    }
    if fit.beta_hat.len() != w.cols() || fit.residuals.len() != w.rows() {
        return Err(Error::DomainError("fit does not belong to the design"));
    }
    Ok(())
}

/// Two-sided t test of `H0: beta_j = 0`.
pub fn t_test<S: Scalar>(fit: &LsFit<S>, w: &DesignMatrix<S>, coeff_index: usize) -> Result<TTest> {
    check_fit(fit, w)?;
    if coeff_index >= fit.beta_hat.len() {
        return Err(Error::DomainError("coefficient index out of range"));
    }
    let y = reconstruct_outcome(fit, w);
    let scale: S = y.iter().map(|&v| v * v).sum();
    let beta = fit.beta_hat[coeff_index].as_f64();
    let dof = fit.dof_residual;
    if is_perfect_fit(fit, scale) {
        // A coefficient whose contribution is at rounding level counts as zero.
        let column_norm: f64 = w.column(coeff_index).iter().map(|v| v.as_f64().powi(2)).sum::<f64>().sqrt();
        let noise_floor = y.len() as f64 * S::epsilon().as_f64() * scale.as_f64().sqrt();
        let (statistic, p_value) =
            if (beta * column_norm).abs() <= noise_floor { (0.0, 1.0) } else { (beta.signum() * f64::INFINITY, 0.0) };
        return Ok(TTest { statistic, p_value, dof, perfect_fit: true });
    }
    let se = fit.standard_error(coeff_index).as_f64();
    let statistic = beta / se;
    let p_value = student_t_two_sided(statistic, dof as f64)?;
    Ok(TTest { statistic, p_value, dof, perfect_fit: false })
}

/// F test of `H0`: every non-intercept coefficient is zero.
pub fn f_test<S: Scalar>(fit: &LsFit<S>, w: &DesignMatrix<S>) -> Result<FTest> {
    check_fit(fit, w)?;
    let dof_model = w.labels().iter().filter(|l| **l != ColumnLabel::Intercept).count();
    if dof_model == 0 {
        return Err(Error::DomainError("the F test needs a non-intercept column"));
    }
    let y = reconstruct_outcome(fit, w);
    let y_bar = mean(&y);
    let rss0: S = y.iter().map(|&v| (v - y_bar) * (v - y_bar)).sum();
    let scale: S = y.iter().map(|&v| v * v).sum();
    let dof_residual = fit.dof_residual;
    let explained = (rss0 - fit.residual_sum_squares).max(S::zero());
    // Constant Y, or nothing explained beyond the mean.
    if negligible(rss0, y.len(), scale) {
        return Ok(FTest { statistic: 0.0, p_value: 1.0, dof_model, dof_residual, perfect_fit: false });
    }
    if is_perfect_fit(fit, scale) {
        return Ok(FTest { statistic: f64::INFINITY, p_value: 0.0, dof_model, dof_residual, perfect_fit: true });
    }
    let statistic = (explained.as_f64() / dof_model as f64) / fit.sigma2_hat().as_f64();
    let p_value = f_upper_tail(statistic, dof_model as f64, dof_residual as f64)?;
    Ok(FTest { statistic, p_value, dof_model, dof_residual, perfect_fit: false })
}

/// Both tests on the treatment coefficient of one estimator's fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignificanceReport {
    pub method: RegressionForm,
    pub coefficient: f64,
    pub t_statistic: f64,
    pub t_p_value: f64,
    pub f_statistic: f64,
    pub f_p_value: f64,
    pub dof_model: usize,
    pub dof_residual: usize,
    pub sigma2_hat: f64,
    pub perfect_fit: bool,
}

/// t test on column 0 (the treatment term) plus the overall F test.
pub fn significance_report<S: Scalar>(
    method: RegressionForm,
    fit: &LsFit<S>,
    w: &DesignMatrix<S>,
) -> Result<SignificanceReport> {
    let t = t_test(fit, w, 0)?;
    let f = f_test(fit, w)?;
    Ok(SignificanceReport {
        method,
        coefficient: fit.beta_hat[0].as_f64(),
        t_statistic: t.statistic,
        t_p_value: t.p_value,
        f_statistic: f.statistic,
        f_p_value: f.p_value,
        dof_model: f.dof_model,
        dof_residual: f.dof_residual,
        sigma2_hat: fit.sigma2_hat().as_f64(),
        perfect_fit: t.perfect_fit || f.perfect_fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;
    use crate::regression::{build_design_matrix, solve_least_squares};

    /// `I_x(a, b)` for integer shapes as a binomial tail sum.
    fn binomial_oracle(x: f64, a: u32, b: u32) -> f64 {
        let n = a + b - 1;
        let mut total = 0.0;
        for j in a..=n {
            let mut c = 1.0;
            for i in 0..j {
                c *= f64::from(n - i) / f64::from(i + 1);
            }
            total += c * x.powi(j as i32) * (1.0 - x).powi((n - j) as i32);
        }
        total
    }

    #[test]
    fn boundaries_and_uniform() {
        assert_eq!(regularized_incomplete_beta(0.0, 2.5, 3.0).unwrap(), 0.0);
        assert_eq!(regularized_incomplete_beta(1.0, 2.5, 3.0).unwrap(), 1.0);
        assert!((regularized_incomplete_beta(0.5, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn closed_form_with_unit_first_shape() {
        let v = regularized_incomplete_beta(0.3, 1.0, 4.0).unwrap();
        assert!((v - (1.0 - 0.7f64.powi(4))).abs() < 1e-12);
        assert!((v - 0.7599).abs() < 1e-12);
    }

    #[test]
    fn matches_binomial_sums() {
        for a in 1..12 {
            for b in 1..12 {
                for k in 1..20 {
                    let x = k as f64 / 20.0;
                    let got = regularized_incomplete_beta(x, a as f64, b as f64).unwrap();
                    let want = binomial_oracle(x, a, b);
                    assert!((got - want).abs() < 1e-10, "I_{x}({a},{b}) = {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(regularized_incomplete_beta(-0.1, 1.0, 1.0).is_err());
        assert!(regularized_incomplete_beta(0.5, 0.0, 1.0).is_err());
        assert!(regularized_incomplete_beta(0.5, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn ln_gamma_at_integers_and_half() {
        let mut fact = 1.0f64;
        for n in 1..20 {
            assert!((ln_gamma(n as f64) - fact.ln()).abs() < 1e-12 * fact.ln().max(1.0), "{n}");
            fact *= n as f64;
        }
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn cauchy_tail() {
        // One degree of freedom: P(|T| > t) = 1 - 2 atan(t) / pi.
        for t in [0.1, 1.0, 3.0, 40.0] {
            let want = 1.0 - 2.0 * f64::atan(t) / std::f64::consts::PI;
            assert!((student_t_two_sided(t, 1.0).unwrap() - want).abs() < 1e-12);
        }
    }

    fn fixture() -> Dataset {
        let y = vec![3.1, 2.4, 5.0, 4.2, 6.3, 2.2, 5.9, 3.3];
        let t = vec![false, false, true, false, true, false, true, true];
        let x = vec![0.3, -0.8, 1.1, 0.4, 1.6, -1.2, 0.9, -0.2];
        Dataset::from_flat(y, t, x, vec!["x1".into()]).unwrap()
    }

    #[test]
    fn zero_coefficient_gives_unit_p_value() {
        // Both groups share mean 2, so the SLR treatment coefficient is 0.
        let ds =
            Dataset::without_covariates(vec![1.0, 3.0, 2.0, 0.0, 4.0], vec![false, false, true, true, true]).unwrap();
        let w = build_design_matrix(&ds, RegressionForm::Slr).unwrap();
        let fit = solve_least_squares(&w, ds.y()).unwrap();
        let t = t_test(&fit, &w, 0).unwrap();
        assert!(t.statistic.abs() < 1e-12);
        assert!((t.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sign_flip_preserves_p_value() {
        let ds = fixture();
        let flipped = ds.with_outcomes(ds.y().iter().map(|v| -v).collect()).unwrap();
        for form in RegressionForm::ALL {
            let w = build_design_matrix(&ds, form).unwrap();
            let a = t_test(&solve_least_squares(&w, ds.y()).unwrap(), &w, 0).unwrap();
            let b = t_test(&solve_least_squares(&w, flipped.y()).unwrap(), &w, 0).unwrap();
            assert!((a.p_value - b.p_value).abs() < 1e-14);
            assert!((a.statistic + b.statistic).abs() < 1e-12);
        }
    }

    #[test]
    fn f_equals_t_squared_with_one_regressor() {
        let ds = fixture();
        for form in [RegressionForm::Slr, RegressionForm::Mcm] {
            let w = build_design_matrix(&ds, form).unwrap();
            let fit = solve_least_squares(&w, ds.y()).unwrap();
            let r = significance_report(form, &fit, &w).unwrap();
            assert!((r.f_statistic - r.t_statistic.powi(2)).abs() < 1e-9);
            assert!((r.f_p_value - r.t_p_value).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_outcome_has_no_signal() {
        let ds = fixture().with_outcomes(vec![7.0; 8]).unwrap();
        let w = build_design_matrix(&ds, RegressionForm::Mlr).unwrap();
        let fit = solve_least_squares(&w, ds.y()).unwrap();
        let f = f_test(&fit, &w).unwrap();
        assert_eq!((f.statistic, f.p_value), (0.0, 1.0));
        let t = t_test(&fit, &w, 0).unwrap();
        assert!(t.perfect_fit);
        assert_eq!(t.p_value, 1.0);
    }

    #[test]
    fn exact_fit_is_flagged() {
        let ds = fixture();
        let y: Vec<f64> = (0..8).map(|i| 1.0 + 2.0 * f64::from(u8::from(ds.t()[i])) + 0.5 * ds.row(i)[0]).collect();
        let ds = ds.with_outcomes(y).unwrap();
        let w = build_design_matrix(&ds, RegressionForm::Mlr).unwrap();
        let fit = solve_least_squares(&w, ds.y()).unwrap();
        let t = t_test(&fit, &w, 0).unwrap();
        assert!(t.perfect_fit);
        assert_eq!(t.p_value, 0.0);
        let f = f_test(&fit, &w).unwrap();
        assert!(f.perfect_fit && f.p_value == 0.0);
    }

    #[test]
    fn larger_statistic_smaller_p_value() {
        let mut last = 1.0;
        for k in 1..50 {
            let p = student_t_two_sided(k as f64 * 0.2, 6.0).unwrap();
            assert!(p < last);
            last = p;
        }
    }
}
