//! Design-matrix construction for the three regression forms and a dense
//! Householder least-squares solver.

use std::fmt;

use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative threshold on the squared diagonal of `R` (the characteristic
/// scales of `W^T W`) below which a column is treated as collinear.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RegressionForm {
    /// `[T - p, 1]`
    Slr,
    /// `[T - p, x, 1]`
    Mlr,
    /// `[(T - p) x, 1]`
    Mcm,
}

impl RegressionForm {
    pub const ALL: [RegressionForm; 3] = [RegressionForm::Slr, RegressionForm::Mlr, RegressionForm::Mcm];

    pub fn name(self) -> &'static str {
        match self {
            RegressionForm::Slr => "SLR",
            RegressionForm::Mlr => "MLR",
            RegressionForm::Mcm => "MCM",
        }
    }
}

impl fmt::Display for RegressionForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RegressionForm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "slr" => Ok(RegressionForm::Slr),
            "mlr" => Ok(RegressionForm::Mlr),
            "mcm" => Ok(RegressionForm::Mcm),
            other => Err(format!("unknown method `{other}` (expected slr, mlr or mcm)")),
        }
    }
}

/// Which probability is subtracted from the treatment indicator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Centering<S: Scalar = f64> {
    /// Treated fraction of the dataset; keeps `sum(T - p) = 0` exactly.
    Empirical,
    /// Known assignment probability of the experiment.
    Design(S),
}

impl<S: Scalar> Centering<S> {
    pub fn resolve(self, dataset: &Dataset<S>) -> S {
        match self {
            Centering::Empirical => dataset.treated_fraction(),
            Centering::Design(p) => p,
        }
    }
}

/// Role of a design-matrix column. Covariate indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnLabel {
    CenteredTreatment,
    Covariate(usize),
    ModifiedCovariate(usize),
    Intercept,
}

impl fmt::Display for ColumnLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnLabel::CenteredTreatment => f.write_str("treatment"),
            ColumnLabel::Covariate(j) => write!(f, "x{}", j + 1),
            ColumnLabel::ModifiedCovariate(j) => write!(f, "(T-p)x{}", j + 1),
            ColumnLabel::Intercept => f.write_str("intercept"),
        }
    }
}

impl Serialize for ColumnLabel {
    fn serialize<Ser: serde::Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        s.collect_str(self)
    }
}

/// Column-major regressor matrix with labeled columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix<S: Scalar = f64> {
    rows: usize,
    columns: Vec<Vec<S>>,
    labels: Vec<ColumnLabel>,
    centering: Option<S>,
}

impl<S: Scalar> DesignMatrix<S> {
    /// Wraps explicit columns. Requires `rows >= cols`, finite entries and
    /// exactly one `Intercept` label.
    pub fn from_columns(columns: Vec<Vec<S>>, labels: Vec<ColumnLabel>) -> Result<Self> {
        if columns.len() != labels.len() || columns.is_empty() {
            return Err(Error::InvalidDataset(format!("{} columns for {} labels", columns.len(), labels.len())));
        }
        let rows = columns[0].len();
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::InvalidDataset("design columns differ in length".into()));
        }
        if labels.iter().filter(|l| **l == ColumnLabel::Intercept).count() != 1 {
            return Err(Error::InvalidDataset("design needs exactly one intercept column".into()));
        }
        if columns.len() > rows {
            return Err(Error::DimensionOverflow { rows, columns: columns.len() });
        }
        for (label, col) in labels.iter().zip(&columns) {
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue { location: format!("design column {label}, row {i}") });
            }
        }
        Ok(Self { rows, columns, labels, centering: None })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn labels(&self) -> &[ColumnLabel] {
        &self.labels
    }

    pub fn column(&self, j: usize) -> &[S] {
        &self.columns[j]
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.columns[j][i]
    }

    /// Probability subtracted from the treatment indicator, if any.
    pub fn centering(&self) -> Option<S> {
        self.centering
    }

    pub fn index_of(&self, label: ColumnLabel) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// `W * beta`.
    pub fn mul_vec(&self, beta: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.rows];
        for (col, &b) in self.columns.iter().zip(beta) {
            for (o, &w) in out.iter_mut().zip(col) {
                *o = *o + w * b;
            }
        }
        out
    }

    /// `W^T v`.
    pub fn tmul_vec(&self, v: &[S]) -> Vec<S> {
        self.columns.iter().map(|c| c.iter().zip(v).map(|(&a, &b)| a * b).sum()).collect()
    }
}

/// Builds the SLR, MLR or MCM design, centering on the empirical treated
/// fraction.
pub fn build_design_matrix<S: Scalar>(dataset: &Dataset<S>, form: RegressionForm) -> Result<DesignMatrix<S>> {
    build_design_matrix_with(dataset, form, Centering::Empirical)
}

/// Builds a design with an explicit centering choice. Column order is
/// always treatment terms, then covariates, then the intercept.
pub fn build_design_matrix_with<S: Scalar>(
    dataset: &Dataset<S>,
    form: RegressionForm,
    centering: Centering<S>,
) -> Result<DesignMatrix<S>> {
    let n = dataset.n();
    let d = dataset.d();
    let treated = dataset.treated_count();
    if treated == 0 || treated == n {
        return Err(Error::AllTreatedOrNoneTreated);
    }
    let q = match form {
        RegressionForm::Slr => 2,
        RegressionForm::Mlr => d + 2,
        RegressionForm::Mcm => d + 1,
    };
    if q > n {
        return Err(Error::DimensionOverflow { rows: n, columns: q });
    }
    if form == RegressionForm::Mcm && d == 0 {
        return Err(Error::InvalidDataset("MCM needs at least one covariate".into()));
    }
    let p = centering.resolve(dataset);
    let z: Vec<S> = dataset.t().iter().map(|&t| if t { S::one() - p } else { -p }).collect();

    let mut columns = Vec::with_capacity(q);
    let mut labels = Vec::with_capacity(q);
    match form {
        RegressionForm::Slr => {
            columns.push(z);
            labels.push(ColumnLabel::CenteredTreatment);
        }
        RegressionForm::Mlr => {
            columns.push(z);
            labels.push(ColumnLabel::CenteredTreatment);
            for j in 0..d {
                columns.push(dataset.column(j));
                labels.push(ColumnLabel::Covariate(j));
            }
        }
        RegressionForm::Mcm => {
            for j in 0..d {
                columns.push((0..n).map(|i| z[i] * dataset.covariate(i, j)).collect());
                labels.push(ColumnLabel::ModifiedCovariate(j));
            }
        }
    }
    columns.push(vec![S::one(); n]);
    labels.push(ColumnLabel::Intercept);
    let mut w = DesignMatrix::from_columns(columns, labels)?;
    w.centering = Some(p);
    Ok(w)
}

/// Least-squares fit of `Y` on a design.
#[derive(Debug, Clone, PartialEq)]
pub struct LsFit<S: Scalar = f64> {
    pub beta_hat: Vec<S>,
    pub residuals: Vec<S>,
    pub residual_sum_squares: S,
    pub dof_residual: usize,
    /// Upper-triangular factor of `W = QR`, row-major `q x q`.
    r_factor: Vec<S>,
}

impl<S: Scalar> LsFit<S> {
    pub fn q(&self) -> usize {
        self.beta_hat.len()
    }

    /// Residual variance `RSS / (N - q)`; zero when there are no residual
    /// degrees of freedom.
    pub fn sigma2_hat(&self) -> S {
        if self.dof_residual == 0 {
            S::zero()
        } else {
            self.residual_sum_squares / S::of_usize(self.dof_residual)
        }
    }

    /// Diagonal entry `[(W^T W)^-1]_jj`, computed from `R^-1`.
    pub fn unscaled_variance(&self, j: usize) -> S {
        let q = self.q();
        // Column j of R^-T equals row j of R^-1; solve R^T u = e_j.
        let r = |i: usize, k: usize| self.r_factor[i * q + k];
        let mut u = vec![S::zero(); q];
        for i in 0..q {
            let mut s = if i == j { S::one() } else { S::zero() };
            for (k, &uk) in u.iter().enumerate().take(i) {
                s = s - r(k, i) * uk;
            }
            u[i] = s / r(i, i);
        }
        u.iter().map(|&v| v * v).sum()
    }

    /// Standard error of coefficient `j` under homoskedastic noise.
    pub fn standard_error(&self, j: usize) -> S {
        (self.sigma2_hat() * self.unscaled_variance(j)).sqrt()
    }
}

/// Minimizes `||Y - W beta||^2` by Householder QR without forming `W^T W`.
///
/// Fails with [`Error::RankDeficient`] when a squared diagonal entry of `R`
/// falls below [`RANK_TOLERANCE`] times the largest one.
pub fn solve_least_squares<S: Scalar>(w: &DesignMatrix<S>, y: &[S]) -> Result<LsFit<S>> {
    let n = w.rows();
    let q = w.cols();
    if y.len() != n {
        return Err(Error::OutcomeLength { expected: n, got: y.len() });
    }
    let mut a: Vec<Vec<S>> = w.columns.clone();
    let mut qty = y.to_vec();
    let mut v = vec![S::zero(); n];

    for k in 0..q {
        let norm = a[k][k..].iter().map(|&x| x * x).sum::<S>().sqrt();
        if norm == S::zero() {
            continue;
        }
        let alpha = if a[k][k] > S::zero() { -norm } else { norm };
        v[k..n].copy_from_slice(&a[k][k..n]);
        v[k] = v[k] - alpha;
        let vnorm2: S = v[k..n].iter().map(|&x| x * x).sum();
        if vnorm2 == S::zero() {
            continue;
        }
        let two = S::of(2.0);
        for col in a.iter_mut().skip(k + 1) {
            let s: S = (k..n).map(|i| v[i] * col[i]).sum();
            let f = two * s / vnorm2;
            for i in k..n {
                col[i] = col[i] - f * v[i];
            }
        }
        let s: S = (k..n).map(|i| v[i] * qty[i]).sum();
        let f = two * s / vnorm2;
        for i in k..n {
            qty[i] = qty[i] - f * v[i];
        }
        a[k][k] = alpha;
        for x in a[k][k + 1..].iter_mut() {
            *x = S::zero();
        }
    }

    let diag2: Vec<S> = (0..q).map(|k| a[k][k] * a[k][k]).collect();
    let largest = diag2.iter().copied().fold(S::zero(), S::max);
    let threshold = S::of(RANK_TOLERANCE) * largest;
    let collinear: Vec<String> =
        (0..q).filter(|&k| diag2[k].is_nan() || diag2[k] <= threshold).map(|k| w.labels[k].to_string()).collect();
    if !collinear.is_empty() {
        return Err(Error::RankDeficient { columns: collinear });
    }

    let mut r_factor = vec![S::zero(); q * q];
    for i in 0..q {
        for (j, col) in a.iter().enumerate().skip(i) {
            r_factor[i * q + j] = col[i];
        }
    }
    let mut beta = vec![S::zero(); q];
    for i in (0..q).rev() {
        let mut s = qty[i];
        for j in i + 1..q {
            s = s - r_factor[i * q + j] * beta[j];
        }
        beta[i] = s / r_factor[i * q + i];
    }

    let fitted = w.mul_vec(&beta);
    let residuals: Vec<S> = y.iter().zip(&fitted).map(|(&yi, &fi)| yi - fi).collect();
    let residual_sum_squares = residuals.iter().map(|&r| r * r).sum();
    Ok(LsFit { beta_hat: beta, residuals, residual_sum_squares, dof_residual: n - q, r_factor })
}
