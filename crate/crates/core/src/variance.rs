//! Closed-form (second-order) variance comparisons for a one-dimensional
//! covariate: the SLR/MLR gap `Delta`, its sign region in `(p, k)`, the
//! constant-main-effect variances of all three estimators, and the
//! ratio-variance approximation they are built on.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::regression::RegressionForm;
use crate::scalar::{mean, Scalar};

/// `|var_x - 1|` allowed by the unit-variance formulas.
pub const UNIT_VARIANCE_TOLERANCE: f64 = 1e-6;
/// `|Delta|` at or below this is reported as [`DeltaSign::Zero`].
pub const SIGN_TOLERANCE: f64 = 1e-12;

/// Empirical moments of the main effect `f`, treatment effect `g` and a
/// scalar covariate `x`, all with the 1/N divisor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSummary<S: Scalar = f64> {
    pub var_f: S,
    pub var_g: S,
    pub cov_gf: S,
    pub cov_fx: S,
    pub cov_gx: S,
    pub var_x: S,
    pub mean_x: S,
    pub n: usize,
}

fn covariance<S: Scalar>(a: &[S], b: &[S]) -> S {
    let (ma, mb) = (mean(a), mean(b));
    a.iter().zip(b).map(|(&u, &v)| (u - ma) * (v - mb)).sum::<S>() / S::of_usize(a.len())
}

pub fn compute_moments<S: Scalar>(f: &[S], g: &[S], x: &[S]) -> Result<MomentSummary<S>> {
    if f.len() != g.len() {
        return Err(Error::LengthMismatch(f.len(), g.len()));
    }
    if f.len() != x.len() {
        return Err(Error::LengthMismatch(f.len(), x.len()));
    }
    if f.len() < 2 {
        return Err(Error::InvalidDataset(format!("moments need at least 2 samples, got {}", f.len())));
    }
    Ok(MomentSummary {
        var_f: covariance(f, f),
        var_g: covariance(g, g),
        cov_gf: covariance(g, f),
        cov_fx: covariance(f, x),
        cov_gx: covariance(g, x),
        var_x: covariance(x, x),
        mean_x: mean(x),
        n: f.len(),
    })
}

fn check_p<S: Scalar>(p: S) -> Result<()> {
    if p > S::zero() && p < S::one() {
        Ok(())
    } else {
        Err(Error::POutOfRange(p.as_f64()))
    }
}

fn check_standardized<S: Scalar>(m: &MomentSummary<S>) -> Result<()> {
    if (m.var_x - S::one()).abs() <= S::of(UNIT_VARIANCE_TOLERANCE) {
        Ok(())
    } else {
        Err(Error::NotStandardized(m.var_x.as_f64()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum DeltaSign {
    Negative,
    Zero,
    Positive,
}

impl DeltaSign {
    pub fn of<S: Scalar>(v: S) -> Self {
        if v.abs() <= S::of(SIGN_TOLERANCE) {
            DeltaSign::Zero
        } else if v < S::zero() {
            DeltaSign::Negative
        } else {
            DeltaSign::Positive
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            DeltaSign::Negative => -1,
            DeltaSign::Zero => 0,
            DeltaSign::Positive => 1,
        }
    }
}

/// `Delta = Var(SLR) - Var(MLR)` scaled by `p(1-p)N`, with its sign and the
/// two roots of the quadratic in `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaReport<S: Scalar = f64> {
    pub p: S,
    /// `cov_fx / cov_gx`; `None` when `cov_gx = 0`.
    pub k: Option<S>,
    pub delta: S,
    pub sign: DeltaSign,
    /// `(-k, (2 + k) / 3)`; `None` when `k` is undefined.
    pub roots: Option<(S, S)>,
}

/// `cov_fx^2 + 2(1-p) cov_gx cov_fx + (2p - 3p^2) cov_gx^2`.
pub fn delta_value<S: Scalar>(cov_fx: S, cov_gx: S, p: S) -> S {
    let two = S::of(2.0);
    let three = S::of(3.0);
    cov_fx * cov_fx + two * (S::one() - p) * cov_gx * cov_fx + (two * p - three * p * p) * cov_gx * cov_gx
}

/// Roots of `Delta(p) = -3 cov_gx^2 (p + k)(p - (2 + k)/3)`.
pub fn delta_roots<S: Scalar>(k: S) -> (S, S) {
    (-k, (S::of(2.0) + k) / S::of(3.0))
}

/// Evaluates `Delta` for unit-variance covariate moments.
pub fn delta<S: Scalar>(moments: &MomentSummary<S>, p: S) -> Result<DeltaReport<S>> {
    check_p(p)?;
    check_standardized(moments)?;
    let value = delta_value(moments.cov_fx, moments.cov_gx, p);
    let k = (moments.cov_gx != S::zero()).then(|| moments.cov_fx / moments.cov_gx);
    Ok(DeltaReport { p, k, delta: value, sign: DeltaSign::of(value), roots: k.map(delta_roots) })
}

/// Closed-form test for a negative `Delta` (unit `cov_gx`, `cov_fx = k`):
/// `p` lies below both roots or above both.
pub fn root_condition_negative<S: Scalar>(p: S, k: S) -> bool {
    let (a, b) = delta_roots(k);
    p < a.min(b) || p > a.max(b)
}

/// Sign of `Delta` on a `(k, p)` grid. Rows follow `k_grid`, columns `p_grid`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignGrid<S: Scalar = f64> {
    pub p_grid: Vec<S>,
    pub k_grid: Vec<S>,
    pub signs: Vec<Vec<DeltaSign>>,
}

impl<S: Scalar> SignGrid<S> {
    /// CSV with one row per `k` and one column per `p`; cells are -1, 0 or 1.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "k")?;
        for p in &self.p_grid {
            write!(out, ",{p}")?;
        }
        writeln!(out)?;
        for (k, row) in self.k_grid.iter().zip(&self.signs) {
            write!(out, "{k}")?;
            for s in row {
                write!(out, ",{}", s.as_i8())?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn count(&self, sign: DeltaSign) -> usize {
        self.signs.iter().flatten().filter(|&&s| s == sign).count()
    }
}

fn strictly_increasing<S: Scalar>(grid: &[S]) -> bool {
    !grid.is_empty() && grid.windows(2).all(|w| w[0] < w[1]) && grid.iter().all(|v| v.is_finite())
}

/// Evaluates the sign of `Delta` with `cov_gx = 1`, `cov_fx = k` on every
/// grid point. Each cell is checked against [`root_condition_negative`];
/// only cells evaluating to [`DeltaSign::Zero`] (on a root) may disagree.
pub fn delta_sign_region<S: Scalar>(p_grid: &[S], k_grid: &[S]) -> Result<SignGrid<S>> {
    if !strictly_increasing(p_grid) {
        return Err(Error::InvalidGrid("p"));
    }
    if !strictly_increasing(k_grid) {
        return Err(Error::InvalidGrid("k"));
    }
    for &p in p_grid {
        check_p(p)?;
    }
    let signs = k_grid
        .iter()
        .map(|&k| {
            p_grid
                .iter()
                .map(|&p| {
                    let sign = DeltaSign::of(delta_value(k, S::one(), p));
                    debug_assert!(
                        sign == DeltaSign::Zero || (sign == DeltaSign::Negative) == root_condition_negative(p, k),
                        "sign/root mismatch at p={p}, k={k}"
                    );
                    sign
                })
                .collect()
        })
        .collect();
    Ok(SignGrid { p_grid: p_grid.to_vec(), k_grid: k_grid.to_vec(), signs })
}

/// Nominal SLR variance
/// `((1-p)^2 var_g + var_f + 2(1-p) cov_gf) / (p(1-p)n)`.
pub fn slr_variance_nominal<S: Scalar>(moments: &MomentSummary<S>, p: S, n: usize) -> Result<S> {
    check_p(p)?;
    if n == 0 {
        return Err(Error::InvalidDataset("n must be positive".into()));
    }
    let q = S::one() - p;
    let two = S::of(2.0);
    Ok((q * q * moments.var_g + moments.var_f + two * q * moments.cov_gf) / (p * q * S::of_usize(n)))
}

/// Nominal MLR variance, `Var(SLR) - Delta / (p(1-p)n)`. The value is not
/// clamped and can come out negative when the approximation breaks down.
pub fn mlr_variance_nominal<S: Scalar>(moments: &MomentSummary<S>, p: S, n: usize) -> Result<S> {
    let slr = slr_variance_nominal(moments, p, n)?;
    let report = delta(moments, p)?;
    Ok(slr - report.delta / (p * (S::one() - p) * S::of_usize(n)))
}

/// Nominal MCM variance for constant `f`, `g = gamma x`, Gaussian `x` with
/// mean `mu` and unit variance:
/// `gamma^2 mu^2 p^2 (3 + mu^2) / (n p (1-p) (1 + mu^2)^2)`.
///
/// Outside that regime the number has no derivation behind it.
pub fn mcm_variance_nominal<S: Scalar>(gamma: S, mu: S, p: S, n: usize) -> Result<S> {
    check_p(p)?;
    if n == 0 {
        return Err(Error::InvalidDataset("n must be positive".into()));
    }
    let mu2 = mu * mu;
    let one_mu2 = S::one() + mu2;
    Ok(gamma * gamma * mu2 * p * p * (S::of(3.0) + mu2) / (S::of_usize(n) * p * (S::one() - p) * one_mu2 * one_mu2))
}

/// The three nominal variances in the constant-main-effect regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeVariances<S: Scalar = f64> {
    pub slr: S,
    pub mlr: S,
    pub mcm: S,
}

impl<S: Scalar> RegimeVariances<S> {
    pub fn labeled(&self) -> [(RegressionForm, S); 3] {
        [(RegressionForm::Slr, self.slr), (RegressionForm::Mlr, self.mlr), (RegressionForm::Mcm, self.mcm)]
    }
}

/// `f` constant, `g = gamma x`, unit-variance Gaussian `x` with mean `mu`.
pub fn constant_main_effect_variances<S: Scalar>(gamma: S, mu: S, p: S, n: usize) -> Result<RegimeVariances<S>> {
    check_p(p)?;
    let q = S::one() - p;
    let scale = p * q * S::of_usize(n);
    let g2 = gamma * gamma;
    let two_p_minus_one = S::of(2.0) * p - S::one();
    Ok(RegimeVariances {
        slr: q * q * g2 / scale,
        mlr: two_p_minus_one * two_p_minus_one * g2 / scale,
        mcm: mcm_variance_nominal(gamma, mu, p, n)?,
    })
}

/// Second-order approximation of `Var(X / Y)`:
/// `var_x / m_y^2 - 2 m_x cov / m_y^3 + m_x^2 var_y / m_y^4`.
pub fn ratio_variance_approx<S: Scalar>(mean_num: S, var_num: S, mean_den: S, var_den: S, cov_nd: S) -> Result<S> {
    if mean_den == S::zero() {
        return Err(Error::ZeroDenominatorMean);
    }
    let m2 = mean_den * mean_den;
    Ok(var_num / m2 - S::of(2.0) * mean_num * cov_nd / (m2 * mean_den) + mean_num * mean_num * var_den / (m2 * m2))
}

/// Estimators ordered by ascending variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Ranking {
    pub best: RegressionForm,
    pub medium: RegressionForm,
    pub worst: RegressionForm,
    /// Two or more variances were exactly equal; ties resolve SLR < MLR < MCM.
    pub tie: bool,
}

impl Ranking {
    pub fn order(&self) -> [RegressionForm; 3] {
        [self.best, self.medium, self.worst]
    }
}

pub fn rank_estimators<S: Scalar>(variances: &[(RegressionForm, S); 3]) -> Result<Ranking> {
    if variances.iter().any(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite("rank_estimators"));
    }
    let mut sorted = *variances;
    sorted.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite").then(a.0.cmp(&b.0)));
    let tie = sorted.windows(2).any(|w| w[0].1 == w[1].1);
    Ok(Ranking { best: sorted[0].0, medium: sorted[1].0, worst: sorted[2].0, tie })
}
