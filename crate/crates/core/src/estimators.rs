//! The three linear ATE estimators: difference in means (SLR), regression
//! with raw covariates (MLR) and the modified covariate method (MCM).

use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::regression::{build_design_matrix_with, solve_least_squares, Centering, ColumnLabel, LsFit, RegressionForm};
use crate::scalar::{mean, Scalar};

/// Covariate means below this magnitude (in every column) trigger
/// [`EstimateWarning::NearZeroCovariateMean`] for MCM.
pub const NEAR_ZERO_MEAN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EstimateWarning {
    /// MCM estimates `mean(x)^T gamma`, which degenerates when every
    /// covariate has mean close to zero.
    NearZeroCovariateMean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AteEstimate<S: Scalar = f64> {
    pub method: RegressionForm,
    pub ate_hat: S,
    /// Empirical treated fraction.
    pub p_hat: S,
    /// Probability subtracted from the treatment indicator in the design.
    pub centering_p: S,
    pub n: usize,
    pub coefficients: Vec<(ColumnLabel, S)>,
    pub fit: LsFit<S>,
    pub warnings: Vec<EstimateWarning>,
}

impl<S: Scalar> AteEstimate<S> {
    pub fn coefficient(&self, label: ColumnLabel) -> Option<S> {
        self.coefficients.iter().find(|(l, _)| *l == label).map(|&(_, v)| v)
    }
}

fn fit_form<S: Scalar>(
    dataset: &Dataset<S>,
    form: RegressionForm,
    centering: Centering<S>,
) -> Result<(LsFit<S>, Vec<ColumnLabel>, S)> {
    let w = build_design_matrix_with(dataset, form, centering)?;
    let fit = solve_least_squares(&w, dataset.y())?;
    let p = w.centering().unwrap_or_else(|| dataset.treated_fraction());
    Ok((fit, w.labels().to_vec(), p))
}

fn assemble<S: Scalar>(
    dataset: &Dataset<S>,
    method: RegressionForm,
    ate_hat: S,
    centering_p: S,
    fit: LsFit<S>,
    labels: Vec<ColumnLabel>,
    warnings: Vec<EstimateWarning>,
) -> AteEstimate<S> {
    AteEstimate {
        method,
        ate_hat,
        p_hat: dataset.treated_fraction(),
        centering_p,
        n: dataset.n(),
        coefficients: labels.into_iter().zip(fit.beta_hat.iter().copied()).collect(),
        fit,
        warnings,
    }
}

/// Treated-group mean minus control-group mean.
pub fn difference_in_means<S: Scalar>(dataset: &Dataset<S>) -> Result<S> {
    let (mut treated, mut control) = (Vec::new(), Vec::new());
    for (&y, &t) in dataset.y().iter().zip(dataset.t()) {
        if t {
            treated.push(y);
        } else {
            control.push(y);
        }
    }
    if treated.is_empty() || control.is_empty() {
        return Err(Error::AllTreatedOrNoneTreated);
    }
    Ok(mean(&treated) - mean(&control))
}

/// SLR estimate. The point estimate is the difference in group means; the
/// attached fit is the regression on `[T - p, 1]`, whose treatment
/// coefficient equals it.
pub fn estimate_slr<S: Scalar>(dataset: &Dataset<S>) -> Result<AteEstimate<S>> {
    let ate = difference_in_means(dataset)?;
    let (fit, labels, p) = fit_form(dataset, RegressionForm::Slr, Centering::Empirical)?;
    Ok(assemble(dataset, RegressionForm::Slr, ate, p, fit, labels, Vec::new()))
}

/// MLR estimate: treatment coefficient of the regression on `[T - p, x, 1]`.
pub fn estimate_mlr<S: Scalar>(dataset: &Dataset<S>) -> Result<AteEstimate<S>> {
    let (fit, labels, p) = fit_form(dataset, RegressionForm::Mlr, Centering::Empirical)?;
    let ate = fit.beta_hat[0];
    Ok(assemble(dataset, RegressionForm::Mlr, ate, p, fit, labels, Vec::new()))
}

/// MCM estimate centered on the empirical treated fraction.
pub fn estimate_mcm<S: Scalar>(dataset: &Dataset<S>) -> Result<AteEstimate<S>> {
    estimate_mcm_with(dataset, Centering::Empirical)
}

/// MCM estimate: regress `Y` on `[(T - p) x, 1]` and average `x_i^T gamma`.
pub fn estimate_mcm_with<S: Scalar>(dataset: &Dataset<S>, centering: Centering<S>) -> Result<AteEstimate<S>> {
    let (fit, labels, p) = fit_form(dataset, RegressionForm::Mcm, centering)?;
    let d = dataset.d();
    let gamma = &fit.beta_hat[..d];
    let ate = mcm_average_effect(dataset, gamma);
    let mut warnings = Vec::new();
    if dataset.covariate_means().iter().all(|m| m.abs() < S::of(NEAR_ZERO_MEAN)) {
        warnings.push(EstimateWarning::NearZeroCovariateMean);
    }
    Ok(assemble(dataset, RegressionForm::Mcm, ate, p, fit, labels, warnings))
}

/// `(1/N) sum_i x_i^T gamma`.
pub fn mcm_average_effect<S: Scalar>(dataset: &Dataset<S>, gamma: &[S]) -> S {
    let effects: Vec<S> =
        (0..dataset.n()).map(|i| dataset.row(i).iter().zip(gamma).map(|(&x, &g)| x * g).sum()).collect();
    mean(&effects)
}

/// Dispatches on the method; `centering` only affects MCM because SLR and
/// MLR carry an intercept.
pub fn estimate<S: Scalar>(
    dataset: &Dataset<S>,
    method: RegressionForm,
    centering: Centering<S>,
) -> Result<AteEstimate<S>> {
    match method {
        RegressionForm::Slr => estimate_slr(dataset),
        RegressionForm::Mlr => estimate_mlr(dataset),
        RegressionForm::Mcm => estimate_mcm_with(dataset, centering),
    }
}

/// Anything that maps a dataset to a scalar ATE estimate. The Monte Carlo
/// engine is written against this trait.
pub trait AteEstimator<S: Scalar>: Send + Sync {
    fn name(&self) -> String;

    /// `design_p` is the assignment probability the data was generated with.
    fn estimate_ate(&self, dataset: &Dataset<S>, design_p: S) -> Result<S>;
}

/// How an estimator chooses the centering probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CenteringRule {
    Empirical,
    #[default]
    Design,
}

/// One of the three linear estimators as an [`AteEstimator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinearEstimator {
    pub form: RegressionForm,
    pub centering: CenteringRule,
}

impl LinearEstimator {
    pub fn new(form: RegressionForm, centering: CenteringRule) -> Self {
        Self { form, centering }
    }
}

impl<S: Scalar> AteEstimator<S> for LinearEstimator {
    fn name(&self) -> String {
        self.form.name().to_string()
    }

    fn estimate_ate(&self, dataset: &Dataset<S>, design_p: S) -> Result<S> {
        let centering = match self.centering {
            CenteringRule::Empirical => Centering::Empirical,
            CenteringRule::Design => Centering::Design(design_p),
        };
        match self.form {
            // Cheaper than the full fit and identical to its treatment coefficient.
            RegressionForm::Slr => difference_in_means(dataset),
            RegressionForm::Mlr => {
                let (fit, _, _) = fit_form(dataset, RegressionForm::Mlr, centering)?;
                Ok(fit.beta_hat[0])
            }
            RegressionForm::Mcm => {
                let (fit, _, _) = fit_form(dataset, RegressionForm::Mcm, centering)?;
                Ok(mcm_average_effect(dataset, &fit.beta_hat[..dataset.d()]))
            }
        }
    }
}
