//! Replicated-experiment engine: empirical variances, biases and rankings of
//! ATE estimators on synthetic data.
//!
//! Replication `r` draws its dataset from `replication_seed(master_seed, r)`,
//! so results do not depend on which worker ran it. Per-replication results
//! are collected in index order and folded sequentially, which makes reports
//! bit-identical for any worker count.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{AteEstimator, CenteringRule, LinearEstimator};
use crate::regression::RegressionForm;
use crate::rng::replication_seed;
use crate::scalar::Scalar;
use crate::synthetic::{generate, Family, MainEffect, SyntheticModelSpec};
use crate::variance::{
    compute_moments, mcm_variance_nominal, mlr_variance_nominal, rank_estimators, slr_variance_nominal, Ranking,
};

/// Replications per configuration when none is given.
pub const DEFAULT_REPLICATIONS: usize = 10_000;
/// Sample sizes of the variance-decay curves.
pub const DEFAULT_N_VALUES: [usize; 5] = [250, 500, 1000, 2000, 4000];

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig<S: Scalar = f64> {
    pub spec: SyntheticModelSpec<S>,
    /// Strictly increasing sample sizes, each at least `d + 2`.
    pub n_values: Vec<usize>,
    pub replications: usize,
    pub master_seed: u64,
    pub estimators: Vec<RegressionForm>,
    /// Centering probability of MCM.
    pub mcm_centering: CenteringRule,
    /// Worker threads; 0 lets the thread pool decide. Never affects results.
    pub workers: usize,
}

impl<S: Scalar> McConfig<S> {
    pub fn new(spec: SyntheticModelSpec<S>, n_values: Vec<usize>, replications: usize, master_seed: u64) -> Self {
        Self {
            spec,
            n_values,
            replications,
            master_seed,
            estimators: RegressionForm::ALL.to_vec(),
            mcm_centering: CenteringRule::Design,
            workers: 0,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.replications < 2 {
            return Err(Error::InvalidConfig(format!("replications must be >= 2, got {}", self.replications)));
        }
        if self.n_values.is_empty() {
            return Err(Error::InvalidConfig("n_values is empty".into()));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("n_values must be strictly increasing".into()));
        }
        let min_n = self.spec.d + 2;
        if let Some(&n) = self.n_values.iter().find(|&&n| n < min_n) {
            return Err(Error::InvalidConfig(format!("n = {n} is below d + 2 = {min_n}")));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidConfig("no estimators selected".into()));
        }
        Ok(())
    }

    fn linear_estimators(&self) -> Vec<LinearEstimator> {
        self.estimators
            .iter()
            .map(|&form| {
                let centering = if form == RegressionForm::Mcm { self.mcm_centering } else { CenteringRule::Empirical };
                LinearEstimator::new(form, centering)
            })
            .collect()
    }
}

/// Aggregates of one estimator at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McCell {
    pub estimator: String,
    pub n: usize,
    pub p: f64,
    /// Sample variance of the estimates, `(R - 1)` divisor.
    pub variance: f64,
    /// Sample variance of `ate_hat - ate_true`, `(R - 1)` divisor.
    pub error_variance: f64,
    /// Mean of `ate_hat - ate_true`.
    pub bias: f64,
    pub mean_estimate: f64,
    pub mean_ate_true: f64,
    pub successes: usize,
    pub failure_count: usize,
    /// `ate_hat - ate_true` per replication; `None` where the estimator failed.
    #[serde(skip)]
    pub errors: Vec<Option<f64>>,
}

fn sample_mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_variance(v: &[f64]) -> f64 {
    let m = sample_mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

impl McCell {
    /// Standard error of [`McCell::error_variance`], from the spread of the
    /// squared deviations.
    pub fn error_variance_se(&self) -> f64 {
        let e: Vec<f64> = self.errors.iter().flatten().copied().collect();
        if e.len() < 2 {
            return f64::NAN;
        }
        let m = sample_mean(&e);
        let sq: Vec<f64> = e.iter().map(|x| (x - m) * (x - m)).collect();
        (sample_variance(&sq) / sq.len() as f64).sqrt()
    }
}

/// Difference of two error variances and its paired Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceGap {
    /// `error_variance(a) - error_variance(b)` over replications where both succeeded.
    pub difference: f64,
    pub standard_error: f64,
}

impl VarianceGap {
    /// Gap measured in standard errors.
    pub fn z(&self) -> f64 {
        self.difference / self.standard_error
    }
}

/// Paired comparison of two cells that share replications.
pub fn variance_gap(a: &McCell, b: &McCell) -> Option<VarianceGap> {
    let pairs: Vec<(f64, f64)> = a.errors.iter().zip(&b.errors).filter_map(|(x, y)| Some(((*x)?, (*y)?))).collect();
    if pairs.len() < 3 {
        return None;
    }
    let k = pairs.len() as f64;
    let ma = pairs.iter().map(|p| p.0).sum::<f64>() / k;
    let mb = pairs.iter().map(|p| p.1).sum::<f64>() / k;
    let u: Vec<f64> = pairs.iter().map(|(x, y)| (x - ma).powi(2) - (y - mb).powi(2)).collect();
    Some(VarianceGap {
        difference: u.iter().sum::<f64>() / (k - 1.0),
        standard_error: (sample_variance(&u) / k).sqrt() * k / (k - 1.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub family: Family,
    pub p: f64,
    pub replications: usize,
    pub master_seed: u64,
    pub cells: Vec<McCell>,
}

impl McReport {
    pub fn cell(&self, estimator: &str, n: usize) -> Option<&McCell> {
        self.cells.iter().find(|c| c.estimator == estimator && c.n == n)
    }

    pub fn form_cell(&self, form: RegressionForm, n: usize) -> Option<&McCell> {
        self.cell(form.name(), n)
    }

    /// Paired error-variance gap `a - b` at sample size `n`.
    pub fn gap(&self, a: RegressionForm, b: RegressionForm, n: usize) -> Option<VarianceGap> {
        variance_gap(self.form_cell(a, n)?, self.form_cell(b, n)?)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "estimator,n,p,variance,error_variance,bias,mean_estimate,failures")?;
        for c in &self.cells {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                c.estimator, c.n, c.p, c.variance, c.error_variance, c.bias, c.mean_estimate, c.failure_count
            )?;
        }
        Ok(())
    }
}

struct Replicate {
    ate_true: f64,
    estimates: Vec<Option<f64>>,
    /// Nominal SLR and MLR variances from this replication's moments.
    nominal: Option<(f64, f64)>,
}

fn run_replicate<S: Scalar>(
    spec: &SyntheticModelSpec<S>,
    n: usize,
    seed: u64,
    estimators: &[&dyn AteEstimator<S>],
    with_nominal: bool,
) -> Result<Replicate> {
    let data = generate(spec, n, seed)?;
    let estimates = estimators
        .iter()
        .map(|e| e.estimate_ate(&data.dataset, spec.p).ok().map(Scalar::as_f64).filter(|v| v.is_finite()))
        .collect();
    let nominal = if with_nominal {
        let x = data.dataset.column(0);
        let xs = standardize(&x);
        let m = compute_moments(&data.f_true, &data.g_true, &xs)?;
        Some((slr_variance_nominal(&m, spec.p, n)?.as_f64(), mlr_variance_nominal(&m, spec.p, n)?.as_f64()))
    } else {
        None
    };
    Ok(Replicate { ate_true: data.ate_true.as_f64(), estimates, nominal })
}

fn standardize<S: Scalar>(x: &[S]) -> Vec<S> {
    let n = S::of_usize(x.len());
    let m = x.iter().copied().sum::<S>() / n;
    let sd = (x.iter().map(|&v| (v - m) * (v - m)).sum::<S>() / n).sqrt();
    x.iter().map(|&v| (v - m) / sd).collect()
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

fn replicate_all<S: Scalar>(
    config: &McConfig<S>,
    n: usize,
    estimators: &[&dyn AteEstimator<S>],
    with_nominal: bool,
    pool: &rayon::ThreadPool,
) -> Result<Vec<Replicate>> {
    pool.install(|| {
        (0..config.replications as u64)
            .into_par_iter()
            .map(|r| {
                let seed = replication_seed(config.master_seed, r);
                run_replicate(&config.spec, n, seed, estimators, with_nominal)
            })
            .collect()
    })
}

fn aggregate(name: String, n: usize, p: f64, reps: &[Replicate], k: usize) -> Result<McCell> {
    let errors: Vec<Option<f64>> = reps.iter().map(|r| r.estimates[k].map(|e| e - r.ate_true)).collect();
    let estimates: Vec<f64> = reps.iter().filter_map(|r| r.estimates[k]).collect();
    let truths: Vec<f64> = reps.iter().filter(|r| r.estimates[k].is_some()).map(|r| r.ate_true).collect();
    let successes = estimates.len();
    if successes < 2 {
        return Err(Error::AllReplicationsFailed { estimator: name, n });
    }
    let e: Vec<f64> = errors.iter().flatten().copied().collect();
    Ok(McCell {
        estimator: name,
        n,
        p,
        variance: sample_variance(&estimates),
        error_variance: sample_variance(&e),
        bias: sample_mean(&e),
        mean_estimate: sample_mean(&estimates),
        mean_ate_true: sample_mean(&truths),
        successes,
        failure_count: reps.len() - successes,
        errors,
    })
}

/// Runs the configured linear estimators.
pub fn run_monte_carlo<S: Scalar>(config: &McConfig<S>) -> Result<McReport> {
    let linear = config.linear_estimators();
    let estimators: Vec<&dyn AteEstimator<S>> = linear.iter().map(|e| e as &dyn AteEstimator<S>).collect();
    run_with_estimators(config, &estimators)
}

/// Runs arbitrary estimators; `config.estimators` is ignored.
pub fn run_with_estimators<S: Scalar>(config: &McConfig<S>, estimators: &[&dyn AteEstimator<S>]) -> Result<McReport> {
    config.validate()?;
    if estimators.is_empty() {
        return Err(Error::InvalidConfig("no estimators selected".into()));
    }
    let pool = build_pool(config.workers)?;
    let p = config.spec.p.as_f64();
    let mut cells = Vec::new();
    for &n in &config.n_values {
        let reps = replicate_all(config, n, estimators, false, &pool)?;
        for (k, est) in estimators.iter().enumerate() {
            cells.push(aggregate(est.name(), n, p, &reps, k)?);
        }
    }
    Ok(McReport {
        family: config.spec.family,
        p,
        replications: config.replications,
        master_seed: config.master_seed,
        cells,
    })
}

/// Ordering of the three estimators at one assignment probability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingRow {
    pub p: f64,
    pub ranking: Ranking,
    pub error_variances: Vec<(RegressionForm, f64)>,
    #[serde(skip)]
    pub report: McReport,
}

impl RankingRow {
    /// Paired gaps (medium - best) and (worst - medium).
    pub fn margins(&self, n: usize) -> Option<(VarianceGap, VarianceGap)> {
        let r = &self.ranking;
        Some((self.report.gap(r.medium, r.best, n)?, self.report.gap(r.worst, r.medium, n)?))
    }
}

/// Ranks SLR, MLR and MCM by error variance for each `p`.
pub fn ranking_sweep<S: Scalar>(
    spec: &SyntheticModelSpec<S>,
    p_values: &[S],
    n: usize,
    replications: usize,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<RankingRow>> {
    p_values
        .iter()
        .map(|&p| {
            if !(p > S::zero() && p < S::one()) {
                return Err(Error::POutOfRange(p.as_f64()));
            }
            let config =
                McConfig::new(spec.clone().with_p(p), vec![n], replications, master_seed).with_workers(workers);
            let report = run_monte_carlo(&config)?;
            let labeled =
                RegressionForm::ALL.map(|f| (f, report.form_cell(f, n).expect("all forms run").error_variance));
            Ok(RankingRow {
                p: p.as_f64(),
                ranking: rank_estimators(&labeled)?,
                error_variances: labeled.to_vec(),
                report,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryRow {
    pub estimator: RegressionForm,
    pub nominal: f64,
    pub empirical: f64,
    pub empirical_se: f64,
    /// `|empirical - nominal| / nominal`; absent when the nominal value is 0.
    pub relative_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryComparison {
    pub family: Family,
    pub p: f64,
    pub n: usize,
    pub replications: usize,
    pub rows: Vec<TheoryRow>,
    #[serde(skip)]
    pub report: McReport,
}

impl TheoryComparison {
    pub fn row(&self, form: RegressionForm) -> Option<&TheoryRow> {
        self.rows.iter().find(|r| r.estimator == form)
    }
}

/// `Some((gamma, mu))` when `f` is constant and `g = gamma x` with scalar
/// `x ~ N(mu, 1)`: the only regime with a closed-form MCM variance.
fn mcm_regime<S: Scalar>(spec: &SyntheticModelSpec<S>) -> Option<(S, S)> {
    let constant_f = matches!(&spec.main, MainEffect::Affine { slopes, .. } if slopes.iter().all(|s| *s == S::zero()));
    if spec.d != 1 || !constant_f {
        return None;
    }
    Some((spec.effect.proportional_slope()?, spec.covariate_mean[0]))
}

/// Nominal against empirical error variances at one `(p, n)`.
///
/// SLR and MLR nominal values are evaluated on each replication's own
/// moments (with the covariate standardized) and averaged. MCM is included
/// only for constant `f` with `g = gamma x`.
pub fn theory_vs_empirical<S: Scalar>(
    spec: &SyntheticModelSpec<S>,
    p: S,
    n: usize,
    replications: usize,
    master_seed: u64,
    workers: usize,
) -> Result<TheoryComparison> {
    if spec.d != 1 {
        return Err(Error::RegimeMismatch(format!(
            "closed-form variances need a scalar covariate; family {} has d = {}",
            spec.family, spec.d
        )));
    }
    let mut config = McConfig::new(spec.clone().with_p(p), vec![n], replications, master_seed).with_workers(workers);
    let mcm = mcm_regime(&config.spec);
    if mcm.is_none() {
        config.estimators.retain(|f| *f != RegressionForm::Mcm);
    }
    config.validate()?;
    let pool = build_pool(workers)?;
    let linear = config.linear_estimators();
    let estimators: Vec<&dyn AteEstimator<S>> = linear.iter().map(|e| e as &dyn AteEstimator<S>).collect();
    let reps = replicate_all(&config, n, &estimators, true, &pool)?;
    let cells = estimators
        .iter()
        .enumerate()
        .map(|(k, e)| aggregate(e.name(), n, p.as_f64(), &reps, k))
        .collect::<Result<Vec<_>>>()?;
    let count = reps.len() as f64;
    let slr_nominal = reps.iter().map(|r| r.nominal.expect("requested").0).sum::<f64>() / count;
    let mlr_nominal = reps.iter().map(|r| r.nominal.expect("requested").1).sum::<f64>() / count;

    let mut rows = Vec::new();
    for (form, cell) in config.estimators.iter().zip(&cells) {
        let nominal = match form {
            RegressionForm::Slr => slr_nominal,
            RegressionForm::Mlr => mlr_nominal,
            RegressionForm::Mcm => {
                let (gamma, mu) = mcm.expect("filtered above");
                mcm_variance_nominal(gamma, mu, p, n)?.as_f64()
            }
        };
        let relative_error = (nominal != 0.0).then(|| (cell.error_variance - nominal).abs() / nominal.abs());
        rows.push(TheoryRow {
            estimator: *form,
            nominal,
            empirical: cell.error_variance,
            empirical_se: cell.error_variance_se(),
            relative_error,
        });
    }
    let report = McReport { family: config.spec.family, p: p.as_f64(), replications, master_seed, cells };
    Ok(TheoryComparison { family: spec.family, p: p.as_f64(), n, replications, rows, report })
}
