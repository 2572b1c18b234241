//! Average-treatment-effect estimation for demand-response experiments.
//!
//! Three least-squares estimators (difference in means, covariate-adjusted
//! regression, modified-covariate regression), their closed-form variance
//! comparisons, synthetic data generators with ground truth, a deterministic
//! Monte Carlo harness, and t/F significance tests.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); every type
//! defaults to `f64`, and `*32`/`*64` aliases are exported below.

pub mod data;
pub mod error;
pub mod estimators;
pub mod monte_carlo;
pub mod regression;
pub mod rng;
pub mod scalar;
pub mod significance;
pub mod synthetic;
pub mod variance;

pub use data::{
    build_event_dataset, csv_columns, load_csv, load_events, load_long_csv, read_csv, standardize_covariates,
    write_csv, ColumnTransform, CsvSchema, Dataset, DropReport, LongRecord,
};
pub use error::{Error, Result};
pub use estimators::{
    difference_in_means, estimate, estimate_mcm, estimate_mcm_with, estimate_mlr, estimate_slr, AteEstimate,
    AteEstimator, CenteringRule, EstimateWarning, LinearEstimator,
};
pub use monte_carlo::{
    ranking_sweep, run_monte_carlo, run_with_estimators, theory_vs_empirical, McCell, McConfig, McReport, RankingRow,
    TheoryComparison,
};
pub use regression::{
    build_design_matrix, build_design_matrix_with, solve_least_squares, Centering, ColumnLabel, DesignMatrix, LsFit,
    RegressionForm,
};
pub use scalar::Scalar;
pub use significance::{f_test, regularized_incomplete_beta, significance_report, t_test, SignificanceReport};
pub use synthetic::{
    assign_treatment, default_specs, frozen_spec, generate, Family, SpecFile, SyntheticDataset, SyntheticModelSpec,
};
pub use variance::{
    delta, delta_sign_region, rank_estimators, DeltaReport, DeltaSign, MomentSummary, Ranking, SignGrid,
};

pub type Dataset32 = Dataset<f32>;
pub type Dataset64 = Dataset<f64>;
pub type DesignMatrix32 = DesignMatrix<f32>;
pub type DesignMatrix64 = DesignMatrix<f64>;
pub type LsFit32 = LsFit<f32>;
pub type LsFit64 = LsFit<f64>;
pub type AteEstimate32 = AteEstimate<f32>;
pub type AteEstimate64 = AteEstimate<f64>;
pub type SyntheticModelSpec32 = SyntheticModelSpec<f32>;
pub type SyntheticModelSpec64 = SyntheticModelSpec<f64>;
pub type McConfig32 = McConfig<f32>;
pub type McConfig64 = McConfig<f64>;
