//! Generators for the synthetic consumption models, with per-sample ground
//! truth for the main effect `f` and the treatment effect `g`.
//!
//! Covariates are Gaussian with the configured mean and identity covariance.
//! Treatments are independent Bernoulli(p) draws. The outcome is
//! `Y = f(x) + g(x) T + noise`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{SampleStreams, StreamPurpose};
use crate::scalar::{mean, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// `Y = alpha1 x + alpha2 x T`, scalar `x`.
    LinearBoth14a,
    /// `Y = alpha0 + alpha2 x T`, scalar `x`.
    ConstantF14b,
    /// `Y = |sum x_j^3 gamma_j|^(1/4) + x^T alpha T`.
    NonlinearF28,
    /// `Y = x^T gamma + x^T theta T`.
    Model29a,
    /// `Y = |sum x_j^3 alpha_j|^(1/4) + q(x) T`, `q` quadratic with interactions.
    Model29b,
    /// `Y = theta0 + q(x) T`.
    Model29c,
    /// `Y = |sum x_j^3 theta_j|^(1/4) + x^T theta T`.
    Model29d,
    /// Any combination of main and treatment effect shapes.
    Custom,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::LinearBoth14a,
        Family::ConstantF14b,
        Family::NonlinearF28,
        Family::Model29a,
        Family::Model29b,
        Family::Model29c,
        Family::Model29d,
        Family::Custom,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Family::LinearBoth14a => "14a",
            Family::ConstantF14b => "14b",
            Family::NonlinearF28 => "28",
            Family::Model29a => "29a",
            Family::Model29b => "29b",
            Family::Model29c => "29c",
            Family::Model29d => "29d",
            Family::Custom => "custom",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Family::ALL
            .into_iter()
            .find(|f| f.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownFamily(s.to_string()))
    }
}

impl Serialize for Family {
    fn serialize<Ser: serde::Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        s.serialize_str(self.code())
    }
}

/// Baseline consumption `f(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum MainEffect<S: Scalar = f64> {
    /// `intercept + x^T slopes`
    Affine { intercept: S, slopes: Vec<S> },
    /// `|sum_j weights_j x_j^3|^(1/4)`
    RootAbsCubic { weights: Vec<S> },
}

impl<S: Scalar> MainEffect<S> {
    pub fn eval(&self, x: &[S]) -> S {
        match self {
            MainEffect::Affine { intercept, slopes } => affine(*intercept, slopes, x),
            MainEffect::RootAbsCubic { weights } => {
                let s: S = weights.iter().zip(x).map(|(&w, &v)| w * v * v * v).sum();
                s.abs().sqrt().sqrt()
            }
        }
    }

    fn is_constant(&self) -> bool {
        matches!(self, MainEffect::Affine { slopes, .. } if slopes.iter().all(|s| *s == S::zero()))
    }

    fn has_zero_intercept(&self) -> bool {
        !matches!(self, MainEffect::Affine { intercept, .. } if *intercept != S::zero())
    }
}

/// Treatment effect `g(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum TreatmentEffect<S: Scalar = f64> {
    /// `intercept + x^T slopes`
    Affine { intercept: S, slopes: Vec<S> },
    /// `sum_j diag_j x_j^2 + sum_{j != k} cross_{jk} x_j x_k`, `cross` row-major
    /// `d x d` with its diagonal ignored.
    Quadratic { diag: Vec<S>, cross: Vec<S> },
}

impl<S: Scalar> TreatmentEffect<S> {
    pub fn eval(&self, x: &[S]) -> S {
        match self {
            TreatmentEffect::Affine { intercept, slopes } => affine(*intercept, slopes, x),
            TreatmentEffect::Quadratic { diag, cross } => {
                let d = x.len();
                let mut s = S::zero();
                for j in 0..d {
                    s = s + diag[j] * x[j] * x[j];
                    for k in 0..d {
                        if k != j {
                            s = s + cross[j * d + k] * x[j] * x[k];
                        }
                    }
                }
                s
            }
        }
    }

    /// `Some(gamma)` when `g = gamma x` with scalar `x` and no intercept.
    pub fn proportional_slope(&self) -> Option<S> {
        match self {
            TreatmentEffect::Affine { intercept, slopes } if *intercept == S::zero() && slopes.len() == 1 => {
                Some(slopes[0])
            }
            _ => None,
        }
    }
}

fn affine<S: Scalar>(intercept: S, slopes: &[S], x: &[S]) -> S {
    intercept + slopes.iter().zip(x).map(|(&b, &v)| b * v).sum::<S>()
}

/// A generative model plus its design parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticModelSpec<S: Scalar = f64> {
    pub family: Family,
    pub d: usize,
    pub main: MainEffect<S>,
    pub effect: TreatmentEffect<S>,
    pub covariate_mean: Vec<S>,
    /// Bernoulli assignment probability.
    pub p: S,
    pub noise_sd: S,
}

impl<S: Scalar> SyntheticModelSpec<S> {
    /// `Y = alpha1 x + alpha2 x T`, `x ~ N(mu, 1)`.
    pub fn linear_both(alpha1: S, alpha2: S, mu: S, p: S) -> Self {
        Self {
            family: Family::LinearBoth14a,
            d: 1,
            main: MainEffect::Affine { intercept: S::zero(), slopes: vec![alpha1] },
            effect: TreatmentEffect::Affine { intercept: S::zero(), slopes: vec![alpha2] },
            covariate_mean: vec![mu],
            p,
            noise_sd: S::zero(),
        }
    }

    /// `Y = alpha0 + alpha2 x T`, `x ~ N(mu, 1)`.
    pub fn constant_main(alpha0: S, alpha2: S, mu: S, p: S) -> Self {
        Self {
            family: Family::ConstantF14b,
            d: 1,
            main: MainEffect::Affine { intercept: alpha0, slopes: vec![S::zero()] },
            effect: TreatmentEffect::Affine { intercept: S::zero(), slopes: vec![alpha2] },
            covariate_mean: vec![mu],
            p,
            noise_sd: S::zero(),
        }
    }

    pub fn with_p(mut self, p: S) -> Self {
        self.p = p;
        self
    }

    pub fn with_noise(mut self, noise_sd: S) -> Self {
        self.noise_sd = noise_sd;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        if d == 0 {
            return Err(Error::InvalidSpec("covariate dimension must be at least 1".into()));
        }
        if !(self.p > S::zero() && self.p < S::one()) {
            return Err(Error::POutOfRange(self.p.as_f64()));
        }
        if !self.noise_sd.is_finite() || self.noise_sd < S::zero() {
            return Err(Error::InvalidSpec(format!("noise_sd must be finite and >= 0, got {}", self.noise_sd)));
        }
        expect_len("mu", &self.covariate_mean, d)?;
        match &self.main {
            MainEffect::Affine { slopes, .. } => expect_len("main_coefficients", slopes, d)?,
            MainEffect::RootAbsCubic { weights } => expect_len("main_coefficients", weights, d)?,
        }
        match &self.effect {
            TreatmentEffect::Affine { slopes, .. } => expect_len("effect_coefficients", slopes, d)?,
            TreatmentEffect::Quadratic { diag, cross } => {
                expect_len("effect_coefficients", diag, d)?;
                expect_len("effect_interactions", cross, d * d)?;
            }
        }
        let all_finite =
            self.covariate_mean.iter().all(|v| v.is_finite()) && self.coefficients().iter().all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::NonFinite("model coefficients"));
        }

        use MainEffect as M;
        use TreatmentEffect as T;
        let main_ok = match self.family {
            Family::LinearBoth14a => matches!(self.main, M::Affine { .. }) && self.main.has_zero_intercept(),
            Family::ConstantF14b | Family::Model29c => self.main.is_constant(),
            Family::Model29a => matches!(self.main, M::Affine { .. }),
            Family::NonlinearF28 | Family::Model29b | Family::Model29d => {
                matches!(self.main, M::RootAbsCubic { .. })
            }
            Family::Custom => true,
        };
        let effect_ok = match self.family {
            Family::LinearBoth14a | Family::ConstantF14b | Family::NonlinearF28 | Family::Model29d => {
                matches!(&self.effect, T::Affine { intercept, .. } if *intercept == S::zero())
            }
            Family::Model29a => matches!(self.effect, T::Affine { .. }),
            Family::Model29b | Family::Model29c => matches!(self.effect, T::Quadratic { .. }),
            Family::Custom => true,
        };
        if matches!(self.family, Family::LinearBoth14a | Family::ConstantF14b) && d != 1 {
            return Err(Error::DimensionMismatch { name: "d", expected: 1, got: d });
        }
        if !main_ok || !effect_ok {
            return Err(Error::InvalidSpec(format!(
                "main/treatment effect shapes do not match family {}",
                self.family
            )));
        }
        Ok(())
    }

    fn coefficients(&self) -> Vec<S> {
        let mut out = Vec::new();
        match &self.main {
            MainEffect::Affine { intercept, slopes } => {
                out.push(*intercept);
                out.extend(slopes);
            }
            MainEffect::RootAbsCubic { weights } => out.extend(weights),
        }
        match &self.effect {
            TreatmentEffect::Affine { intercept, slopes } => {
                out.push(*intercept);
                out.extend(slopes);
            }
            TreatmentEffect::Quadratic { diag, cross } => {
                out.extend(diag);
                out.extend(cross);
            }
        }
        out
    }
}

fn expect_len<S>(name: &'static str, v: &[S], expected: usize) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { name, expected, got: v.len() })
    }
}

/// A generated dataset together with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset<S: Scalar = f64> {
    pub dataset: Dataset<S>,
    pub f_true: Vec<S>,
    pub g_true: Vec<S>,
    pub noise: Vec<S>,
    /// `(1/N) sum g_true`, the sample ATE.
    pub ate_true: S,
    pub seed: u64,
}

fn check_probability<S: Scalar>(p: S) -> Result<()> {
    if p > S::zero() && p < S::one() {
        Ok(())
    } else {
        Err(Error::POutOfRange(p.as_f64()))
    }
}

fn bernoulli<S: Scalar>(rng: &mut ChaCha8Rng, p: S) -> bool {
    S::of(rng.random::<f64>()) < p
}

fn normal<S: Scalar>(rng: &mut ChaCha8Rng) -> S {
    let z: f64 = StandardNormal.sample(rng);
    S::of(z)
}

/// `n` independent Bernoulli(p) treatment indicators.
pub fn assign_treatment<S: Scalar>(n: usize, p: S, seed: u64) -> Result<Vec<bool>> {
    check_probability(p)?;
    if n < 2 {
        return Err(Error::InvalidDataset(format!("need at least 2 samples, got {n}")));
    }
    let streams = SampleStreams::new(seed, StreamPurpose::Treatment);
    Ok((0..n as u64).map(|i| bernoulli(&mut streams.for_sample(i), p)).collect())
}

/// Draws `n` samples from `spec`.
pub fn generate<S: Scalar>(spec: &SyntheticModelSpec<S>, n: usize, seed: u64) -> Result<SyntheticDataset<S>> {
    let indices: Vec<u64> = (0..n as u64).collect();
    generate_indexed(spec, &indices, seed)
}

/// Draws one sample per entry of `indices`; sample `j` uses the random
/// streams of index `indices[j]`, so permuting the indices permutes the
/// samples.
pub fn generate_indexed<S: Scalar>(
    spec: &SyntheticModelSpec<S>,
    indices: &[u64],
    seed: u64,
) -> Result<SyntheticDataset<S>> {
    spec.validate()?;
    let n = indices.len();
    let d = spec.d;
    if n < d + 2 {
        return Err(Error::InvalidSpec(format!("n = {n} is below d + 2 = {}", d + 2)));
    }
    let cov_streams = SampleStreams::new(seed, StreamPurpose::Covariates);
    let treat_streams = SampleStreams::new(seed, StreamPurpose::Treatment);
    let noise_streams = SampleStreams::new(seed, StreamPurpose::Noise);

    let mut x = Vec::with_capacity(n * d);
    let mut t = Vec::with_capacity(n);
    let mut f_true = Vec::with_capacity(n);
    let mut g_true = Vec::with_capacity(n);
    let mut noise = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for &index in indices {
        let mut rng = cov_streams.for_sample(index);
        let start = x.len();
        for mu in &spec.covariate_mean {
            x.push(*mu + normal::<S>(&mut rng));
        }
        let row = &x[start..];
        let treated = bernoulli(&mut treat_streams.for_sample(index), spec.p);
        let eps = if spec.noise_sd > S::zero() {
            spec.noise_sd * normal::<S>(&mut noise_streams.for_sample(index))
        } else {
            S::zero()
        };
        let f = spec.main.eval(row);
        let g = spec.effect.eval(row);
        y.push(f + if treated { g } else { S::zero() } + eps);
        t.push(treated);
        f_true.push(f);
        g_true.push(g);
        noise.push(eps);
    }
    let names = (1..=d).map(|j| format!("x{j}")).collect();
    let dataset = Dataset::from_flat(y, t, x, names)?;
    let ate_true = mean(&g_true);
    Ok(SyntheticDataset { dataset, f_true, g_true, noise, ate_true, seed })
}

/// Flat key-value representation of a model spec (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub family: String,
    pub d: usize,
    pub p: f64,
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub mu: Vec<f64>,
    pub main_kind: String,
    #[serde(default)]
    pub main_intercept: f64,
    pub main_coefficients: Vec<f64>,
    pub effect_kind: String,
    #[serde(default)]
    pub effect_intercept: f64,
    pub effect_coefficients: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub effect_interactions: Vec<f64>,
}

impl SpecFile {
    pub fn from_spec<S: Scalar>(spec: &SyntheticModelSpec<S>, seed: Option<u64>) -> Self {
        let f = |v: &[S]| v.iter().map(|x| x.as_f64()).collect::<Vec<_>>();
        let (main_kind, main_intercept, main_coefficients) = match &spec.main {
            MainEffect::Affine { intercept, slopes } => ("affine", intercept.as_f64(), f(slopes)),
            MainEffect::RootAbsCubic { weights } => ("root_abs_cubic", 0.0, f(weights)),
        };
        let (effect_kind, effect_intercept, effect_coefficients, effect_interactions) = match &spec.effect {
            TreatmentEffect::Affine { intercept, slopes } => ("affine", intercept.as_f64(), f(slopes), Vec::new()),
            TreatmentEffect::Quadratic { diag, cross } => ("quadratic", 0.0, f(diag), f(cross)),
        };
        SpecFile {
            family: spec.family.code().to_string(),
            d: spec.d,
            p: spec.p.as_f64(),
            noise_sd: spec.noise_sd.as_f64(),
            seed,
            mu: f(&spec.covariate_mean),
            main_kind: main_kind.into(),
            main_intercept,
            main_coefficients,
            effect_kind: effect_kind.into(),
            effect_intercept,
            effect_coefficients,
            effect_interactions,
        }
    }

    pub fn to_spec<S: Scalar>(&self) -> Result<SyntheticModelSpec<S>> {
        let c = |v: &[f64]| v.iter().map(|&x| S::of(x)).collect::<Vec<S>>();
        let main = match self.main_kind.as_str() {
            "affine" => {
                MainEffect::Affine { intercept: S::of(self.main_intercept), slopes: c(&self.main_coefficients) }
            }
            "root_abs_cubic" => MainEffect::RootAbsCubic { weights: c(&self.main_coefficients) },
            other => return Err(Error::InvalidSpec(format!("unknown main_kind `{other}`"))),
        };
        let effect = match self.effect_kind.as_str() {
            "affine" => TreatmentEffect::Affine {
                intercept: S::of(self.effect_intercept),
                slopes: c(&self.effect_coefficients),
            },
            "quadratic" => {
                TreatmentEffect::Quadratic { diag: c(&self.effect_coefficients), cross: c(&self.effect_interactions) }
            }
            other => return Err(Error::InvalidSpec(format!("unknown effect_kind `{other}`"))),
        };
        let spec = SyntheticModelSpec {
            family: self.family.parse()?,
            d: self.d,
            main,
            effect,
            covariate_mean: c(&self.mu),
            p: S::of(self.p),
            noise_sd: S::of(self.noise_sd),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec file serializes")
    }
}

/// Seed of the one-time standard-normal draw behind the frozen coefficients
/// of models 28 and 29a-29d.
pub const DEFAULT_COEFFICIENT_SEED: u64 = 20_190_101;
/// Covariate dimension of the frozen multi-dimensional models.
pub const DEFAULT_DIMENSION: usize = 3;

/// Re-derives the default spec of a family from [`DEFAULT_COEFFICIENT_SEED`].
/// The shipped spec files were written from this function and are checked
/// against it in tests.
pub fn derive_default_spec(family: Family) -> Result<SyntheticModelSpec<f64>> {
    let d = DEFAULT_DIMENSION;
    let ones = vec![1.0; d];
    let stream = match family {
        Family::LinearBoth14a => return Ok(SyntheticModelSpec::linear_both(6.0, 20.0, 1.0, 0.9)),
        Family::ConstantF14b => return Ok(SyntheticModelSpec::constant_main(20.0, 20.0, 1.0, 0.25)),
        Family::NonlinearF28 => 0,
        Family::Model29a => 1,
        Family::Model29b => 2,
        Family::Model29c => 3,
        Family::Model29d => 4,
        Family::Custom => return Err(Error::InvalidSpec("custom models have no default".into())),
    };
    let mut rng = SampleStreams::new(DEFAULT_COEFFICIENT_SEED ^ stream, StreamPurpose::Coefficients).sequential();
    let mut draw = |k: usize| (0..k).map(|_| normal::<f64>(&mut rng)).collect::<Vec<f64>>();
    let quadratic = |diag: Vec<f64>, mut cross: Vec<f64>| {
        for j in 0..d {
            cross[j * d + j] = 0.0;
        }
        TreatmentEffect::Quadratic { diag, cross }
    };
    let (main, effect, p) = match family {
        Family::NonlinearF28 => (
            MainEffect::RootAbsCubic { weights: draw(d) },
            TreatmentEffect::Affine { intercept: 0.0, slopes: draw(d) },
            0.5,
        ),
        Family::Model29a => (
            MainEffect::Affine { intercept: 0.0, slopes: draw(d) },
            TreatmentEffect::Affine { intercept: 0.0, slopes: draw(d) },
            0.8,
        ),
        Family::Model29b => {
            let weights = draw(d);
            let diag = draw(d);
            (MainEffect::RootAbsCubic { weights }, quadratic(diag, draw(d * d)), 0.9)
        }
        Family::Model29c => {
            let theta0 = draw(1)[0];
            let diag = draw(d);
            (MainEffect::Affine { intercept: theta0, slopes: vec![0.0; d] }, quadratic(diag, draw(d * d)), 0.75)
        }
        Family::Model29d => {
            let theta = draw(d);
            (
                MainEffect::RootAbsCubic { weights: theta.clone() },
                TreatmentEffect::Affine { intercept: 0.0, slopes: theta },
                0.1,
            )
        }
        _ => unreachable!(),
    };
    Ok(SyntheticModelSpec { family, d, main, effect, covariate_mean: ones, p, noise_sd: 0.0 })
}

const FROZEN_SPECS: [(Family, &str); 7] = [
    (Family::LinearBoth14a, include_str!("../specs/14a.toml")),
    (Family::ConstantF14b, include_str!("../specs/14b.toml")),
    (Family::NonlinearF28, include_str!("../specs/28.toml")),
    (Family::Model29a, include_str!("../specs/29a.toml")),
    (Family::Model29b, include_str!("../specs/29b.toml")),
    (Family::Model29c, include_str!("../specs/29c.toml")),
    (Family::Model29d, include_str!("../specs/29d.toml")),
];

/// The frozen spec shipped for `family`.
pub fn frozen_spec<S: Scalar>(family: Family) -> Result<SyntheticModelSpec<S>> {
    FROZEN_SPECS
        .iter()
        .find(|(f, _)| *f == family)
        .ok_or_else(|| Error::InvalidSpec(format!("no frozen spec for family {family}")))
        .and_then(|(_, text)| SpecFile::parse(text)?.to_spec())
}

/// The canonical configurations with their assignment probabilities:
/// 14a at p = 0.9, 14b at p = 0.25, and 29a-29d at 0.8, 0.9, 0.75, 0.1.
pub fn default_specs<S: Scalar>() -> Vec<(SyntheticModelSpec<S>, S)> {
    [
        Family::LinearBoth14a,
        Family::ConstantF14b,
        Family::Model29a,
        Family::Model29b,
        Family::Model29c,
        Family::Model29d,
    ]
    .into_iter()
    .map(|f| {
        let spec: SyntheticModelSpec<S> = frozen_spec(f).expect("shipped spec files are valid");
        let p = spec.p;
        (spec, p)
    })
    .collect()
}
