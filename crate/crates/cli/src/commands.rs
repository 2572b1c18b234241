use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use dr_ate::estimators::EstimateWarning;
use dr_ate::monte_carlo::variance_gap;
use dr_ate::synthetic::Family;
use dr_ate::{
    build_design_matrix, build_event_dataset, csv_columns, delta_sign_region, estimate, frozen_spec, load_csv,
    load_events, load_long_csv, ranking_sweep, run_monte_carlo, significance_report, solve_least_squares,
    standardize_covariates, theory_vs_empirical, Centering, CsvSchema, Dataset, McConfig, RegressionForm,
    SignificanceReport, SpecFile, SyntheticModelSpec,
};
use serde::Serialize;

use crate::args::{
    Cli, Command, EstimateArgs, Format, ModelArgs, RankingArgs, RegionArgs, RunArgs, SignificanceArgs, SimulateArgs,
    TheoryArgs, WideInput,
};
use crate::render::{self, Table};

/// Version of the JSON layout; bumped on incompatible changes.
const SCHEMA: u32 = 1;
const DEFAULT_SEED: u64 = 1;

#[derive(Debug)]
pub enum CliError {
    /// Inconsistent or out-of-range arguments.
    Usage(String),
    /// Bad or unreadable input data.
    Data(String),
    Library(dr_ate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Library(e) if e.is_data_error() => 3,
            CliError::Library(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
            CliError::Library(e) => write!(f, "{e}"),
        }
    }
}

impl From<dr_ate::Error> for CliError {
    fn from(e: dr_ate::Error) -> Self {
        CliError::Library(e)
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Serialize)]
struct Envelope<T: Serialize> {
    schema: u32,
    command: &'static str,
    #[serde(flatten)]
    body: T,
}

fn json<T: Serialize>(command: &'static str, body: T) -> String {
    let mut s = serde_json::to_string_pretty(&Envelope { schema: SCHEMA, command, body }).expect("serializable");
    s.push('\n');
    s
}

fn emit(cli: &Cli, text: &str) -> CliResult<()> {
    match &cli.output {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError::Data(format!("stdout: {e}")))
        }
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let text = match &cli.command {
        Command::Estimate(a) => run_estimate(a, cli.format.unwrap_or(Format::Json))?,
        Command::Significance(a) => run_significance(a, cli.format.unwrap_or(Format::Json))?,
        Command::Simulate(a) => run_simulate(a, cli.format.unwrap_or(Format::Json))?,
        Command::Ranking(a) => run_ranking(a, cli.format.unwrap_or(Format::Json))?,
        Command::Region(a) => run_region(a, cli.format.unwrap_or(Format::Csv))?,
        Command::TheoryCheck(a) => run_theory(a, cli.format.unwrap_or(Format::Json))?,
    };
    emit(cli, &text)
}

fn load_wide(input: &WideInput, path: &Path) -> CliResult<Dataset> {
    let covariates = match &input.covariates {
        Some(c) => c.clone(),
        None => csv_columns(path)?.into_iter().filter(|c| *c != input.y_column && *c != input.t_column).collect(),
    };
    let names: Vec<&str> = covariates.iter().map(String::as_str).collect();
    let schema = CsvSchema::new(&input.y_column, &input.t_column, &names);
    let ds = load_csv(path, &schema)?;
    if input.standardize && ds.d() > 0 {
        Ok(standardize_covariates(&ds)?.0)
    } else {
        Ok(ds)
    }
}

fn require_input(input: &WideInput) -> CliResult<&PathBuf> {
    input.input.as_ref().ok_or_else(|| CliError::Usage("--input is required".into()))
}

fn csv_line(cells: &[String]) -> String {
    let mut s = cells.join(",");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct Coefficient {
    label: String,
    value: f64,
}

#[derive(Serialize)]
struct EstimateRecord {
    method: RegressionForm,
    ate_hat: f64,
    p_hat: f64,
    centering_p: f64,
    n: usize,
    coefficients: Vec<Coefficient>,
    warnings: Vec<EstimateWarning>,
}

#[derive(Serialize)]
struct EstimateOutput {
    input: String,
    n: usize,
    covariates: Vec<String>,
    estimates: Vec<EstimateRecord>,
}

fn run_estimate(a: &EstimateArgs, format: Format) -> CliResult<String> {
    let path = require_input(&a.input)?;
    let ds = load_wide(&a.input, path)?;
    let estimates = a
        .methods
        .method
        .iter()
        .map(|&form| {
            let e = estimate(&ds, form, Centering::Empirical)?;
            Ok(EstimateRecord {
                method: form,
                ate_hat: e.ate_hat,
                p_hat: e.p_hat,
                centering_p: e.centering_p,
                n: e.n,
                coefficients: e
                    .coefficients
                    .iter()
                    .map(|(l, v)| Coefficient { label: l.to_string(), value: *v })
                    .collect(),
                warnings: e.warnings.clone(),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(match format {
        Format::Json => json(
            "estimate",
            EstimateOutput {
                input: path.display().to_string(),
                n: ds.n(),
                covariates: ds.column_names().to_vec(),
                estimates,
            },
        ),
        Format::Csv => {
            let mut s = String::from("method,ate_hat,p_hat,centering_p,n\n");
            for e in &estimates {
                s += &csv_line(&[
                    e.method.to_string(),
                    e.ate_hat.to_string(),
                    e.p_hat.to_string(),
                    e.centering_p.to_string(),
                    e.n.to_string(),
                ]);
            }
            s
        }
        Format::Table => {
            let mut t = Table::new(["method", "ate_hat", "p_hat", "n", "warnings"]);
            for e in &estimates {
                let warnings: Vec<String> = e.warnings.iter().map(|w| format!("{w:?}")).collect();
                t.row(vec![
                    e.method.to_string(),
                    render::num(e.ate_hat),
                    render::num(e.p_hat),
                    e.n.to_string(),
                    warnings.join(";"),
                ]);
            }
            t.to_string()
        }
    })
}

#[derive(Serialize)]
struct SignificanceRecord {
    #[serde(flatten)]
    report: SignificanceReport,
    t_significant_05: bool,
    t_significant_01: bool,
    f_significant_05: bool,
    f_significant_01: bool,
}

#[derive(Serialize)]
struct SignificanceOutput {
    n: usize,
    treated: usize,
    alpha: [f64; 2],
    reports: Vec<SignificanceRecord>,
}

fn run_significance(a: &SignificanceArgs, format: Format) -> CliResult<String> {
    let ds = match (&a.long_input, &a.events) {
        (Some(long), Some(events)) => {
            let events = load_events(events)?;
            let (records, names) = load_long_csv::<f64>(long, a.input.covariates.as_deref())?;
            let (ds, report) = build_event_dataset(&records, &events, &names)?;
            if let Some(path) = &a.drop_report {
                let text = serde_json::to_string_pretty(&report).expect("serializable") + "\n";
                fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            }
            if a.input.standardize && ds.d() > 0 {
                standardize_covariates(&ds)?.0
            } else {
                ds
            }
        }
        (None, None) => load_wide(&a.input, require_input(&a.input)?)?,
        _ => return Err(CliError::Usage("--long-input and --events go together".into())),
    };
    let reports = a
        .methods
        .method
        .iter()
        .map(|&form| {
            let w = build_design_matrix(&ds, form)?;
            let fit = solve_least_squares(&w, ds.y())?;
            let report = significance_report(form, &fit, &w)?;
            Ok(SignificanceRecord {
                t_significant_05: report.t_p_value < 0.05,
                t_significant_01: report.t_p_value < 0.01,
                f_significant_05: report.f_p_value < 0.05,
                f_significant_01: report.f_p_value < 0.01,
                report,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(match format {
        Format::Json => json(
            "significance",
            SignificanceOutput { n: ds.n(), treated: ds.treated_count(), alpha: [0.05, 0.01], reports },
        ),
        Format::Csv => {
            let mut s = String::from(
                "method,coefficient,t_statistic,t_p_value,f_statistic,f_p_value,dof_model,dof_residual,sigma2_hat\n",
            );
            for r in reports.iter().map(|r| &r.report) {
                s += &csv_line(&[
                    r.method.to_string(),
                    r.coefficient.to_string(),
                    r.t_statistic.to_string(),
                    r.t_p_value.to_string(),
                    r.f_statistic.to_string(),
                    r.f_p_value.to_string(),
                    r.dof_model.to_string(),
                    r.dof_residual.to_string(),
                    r.sigma2_hat.to_string(),
                ]);
            }
            s
        }
        Format::Table => {
            let mut t = Table::new(["method", "coefficient", "t", "p(t)", "", "F", "p(F)", ""]);
            for r in reports.iter().map(|r| &r.report) {
                t.row(vec![
                    r.method.to_string(),
                    render::num(r.coefficient),
                    render::num(r.t_statistic),
                    render::p_value(r.t_p_value),
                    render::stars(r.t_p_value).into(),
                    render::num(r.f_statistic),
                    render::p_value(r.f_p_value),
                    render::stars(r.f_p_value).into(),
                ]);
            }
            format!("{t}n = {}; * p < 0.05, ** p < 0.01\n", ds.n())
        }
    })
}

/// The model and the seed stored alongside it, if any.
fn load_model(m: &ModelArgs) -> CliResult<(SyntheticModelSpec, Option<u64>)> {
    let (mut spec, seed) = match (&m.family, &m.spec_file) {
        (Some(family), None) => {
            let family: Family = family.parse()?;
            if family == Family::Custom {
                return Err(CliError::Usage("custom models need --spec-file".into()));
            }
            (frozen_spec(family)?, None)
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let file = SpecFile::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            (file.to_spec()?, file.seed)
        }
        _ => return Err(CliError::Usage("give exactly one of --family and --spec-file".into())),
    };
    if let Some(sd) = m.noise_sd {
        spec = spec.with_noise(sd);
    }
    spec.validate()?;
    Ok((spec, seed))
}

fn resolve_seed(run: &RunArgs, from_spec: Option<u64>) -> u64 {
    run.seed.or(from_spec).unwrap_or(DEFAULT_SEED)
}

fn check_p(p: f64) -> CliResult<f64> {
    if p > 0.0 && p < 1.0 {
        Ok(p)
    } else {
        Err(CliError::Usage(format!("--p {p} is outside (0, 1)")))
    }
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    family: Family,
    d: usize,
    p: f64,
    replications: usize,
    master_seed: u64,
    mcm_centering: dr_ate::CenteringRule,
    cells: &'a [dr_ate::McCell],
}

fn run_simulate(a: &SimulateArgs, format: Format) -> CliResult<String> {
    let (mut spec, spec_seed) = load_model(&a.model)?;
    if let Some(p) = a.p {
        spec = spec.with_p(check_p(p)?);
    }
    let mut n_values = a.n.clone();
    n_values.sort_unstable();
    n_values.dedup();
    let seed = resolve_seed(&a.run, spec_seed);
    let config = McConfig {
        estimators: a.methods.method.clone(),
        mcm_centering: a.mcm_centering.into(),
        ..McConfig::new(spec, n_values, a.run.reps, seed).with_workers(a.run.workers)
    };
    let report = run_monte_carlo(&config)?;
    Ok(match format {
        Format::Json => json(
            "simulate",
            SimulateOutput {
                family: report.family,
                d: config.spec.d,
                p: report.p,
                replications: report.replications,
                master_seed: report.master_seed,
                mcm_centering: config.mcm_centering,
                cells: &report.cells,
            },
        ),
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf).expect("writing to memory");
            String::from_utf8(buf).expect("utf-8")
        }
        Format::Table => {
            let mut t = Table::new(["estimator", "n", "error variance", "se", "variance", "bias", "failures"]);
            for c in &report.cells {
                t.row(vec![
                    c.estimator.clone(),
                    c.n.to_string(),
                    render::num(c.error_variance),
                    render::num(c.error_variance_se()),
                    render::num(c.variance),
                    render::num(c.bias),
                    c.failure_count.to_string(),
                ]);
            }
            format!(
                "{t}family {}, p = {}, {} replications, seed {}\n",
                report.family, report.p, report.replications, seed
            )
        }
    })
}

#[derive(Serialize)]
struct RankingRecord {
    p: f64,
    best: RegressionForm,
    medium: RegressionForm,
    worst: RegressionForm,
    tie: bool,
    error_variance_slr: f64,
    error_variance_mlr: f64,
    error_variance_mcm: f64,
    /// (medium - best) / se and (worst - medium) / se.
    margin_z: [f64; 2],
}

#[derive(Serialize)]
struct RankingOutput {
    family: Family,
    n: usize,
    replications: usize,
    master_seed: u64,
    rows: Vec<RankingRecord>,
}

fn run_ranking(a: &RankingArgs, format: Format) -> CliResult<String> {
    let (spec, spec_seed) = load_model(&a.model)?;
    for &p in &a.p {
        check_p(p)?;
    }
    let seed = resolve_seed(&a.run, spec_seed);
    let rows = ranking_sweep(&spec, &a.p, a.n, a.run.reps, seed, a.run.workers)?;
    let records: Vec<RankingRecord> = rows
        .iter()
        .map(|row| {
            let var = |f: RegressionForm| row.error_variances.iter().find(|(g, _)| *g == f).map_or(f64::NAN, |v| v.1);
            let z = |hi: RegressionForm, lo: RegressionForm| {
                let cell = |f| row.report.form_cell(f, a.n);
                cell(hi).zip(cell(lo)).and_then(|(x, y)| variance_gap(x, y)).map_or(f64::NAN, |g| g.z())
            };
            let r = row.ranking;
            RankingRecord {
                p: row.p,
                best: r.best,
                medium: r.medium,
                worst: r.worst,
                tie: r.tie,
                error_variance_slr: var(RegressionForm::Slr),
                error_variance_mlr: var(RegressionForm::Mlr),
                error_variance_mcm: var(RegressionForm::Mcm),
                margin_z: [z(r.medium, r.best), z(r.worst, r.medium)],
            }
        })
        .collect();
    Ok(match format {
        Format::Json => json(
            "ranking",
            RankingOutput { family: spec.family, n: a.n, replications: a.run.reps, master_seed: seed, rows: records },
        ),
        Format::Csv => {
            let mut s = String::from("p,best,medium,worst,var_slr,var_mlr,var_mcm\n");
            for r in &records {
                s += &csv_line(&[
                    r.p.to_string(),
                    r.best.to_string(),
                    r.medium.to_string(),
                    r.worst.to_string(),
                    r.error_variance_slr.to_string(),
                    r.error_variance_mlr.to_string(),
                    r.error_variance_mcm.to_string(),
                ]);
            }
            s
        }
        Format::Table => {
            let mut t = Table::new(["p", "best", "medium", "worst", "SLR", "MLR", "MCM"]);
            for r in &records {
                t.row(vec![
                    format!("{}", r.p),
                    r.best.to_string(),
                    r.medium.to_string(),
                    r.worst.to_string(),
                    render::num(r.error_variance_slr),
                    render::num(r.error_variance_mlr),
                    render::num(r.error_variance_mcm),
                ]);
            }
            t.to_string()
        }
    })
}

#[derive(Serialize)]
struct RegionOutput<'a> {
    p_grid: &'a [f64],
    k_grid: &'a [f64],
    /// One row per k; -1, 0 or 1 per p.
    signs: Vec<Vec<i8>>,
}

fn run_region(a: &RegionArgs, format: Format) -> CliResult<String> {
    if a.p_steps == 0 {
        return Err(CliError::Usage("--p-steps must be at least 1".into()));
    }
    if a.k_steps < 2 || a.k_min.is_nan() || a.k_max.is_nan() || a.k_min >= a.k_max {
        return Err(CliError::Usage("need --k-steps >= 2 and --k-min < --k-max".into()));
    }
    let p_grid: Vec<f64> = (1..=a.p_steps).map(|i| i as f64 / (a.p_steps + 1) as f64).collect();
    let span = a.k_max - a.k_min;
    let k_grid: Vec<f64> = (0..a.k_steps).map(|i| a.k_min + span * i as f64 / (a.k_steps - 1) as f64).collect();
    let grid = delta_sign_region(&p_grid, &k_grid)?;
    Ok(match format {
        Format::Csv => {
            let mut buf = Vec::new();
            grid.write_csv(&mut buf).expect("writing to memory");
            String::from_utf8(buf).expect("utf-8")
        }
        Format::Json => json(
            "region",
            RegionOutput {
                p_grid: &grid.p_grid,
                k_grid: &grid.k_grid,
                signs: grid.signs.iter().map(|row| row.iter().map(|s| s.as_i8()).collect()).collect(),
            },
        ),
        Format::Table => {
            // k increases upwards, p to the right; '-' marks MLR worse than SLR.
            let mut s = String::new();
            for (k, row) in grid.k_grid.iter().zip(&grid.signs).rev() {
                let cells: String = row
                    .iter()
                    .map(|v| match v.as_i8() {
                        -1 => '-',
                        0 => '0',
                        _ => '+',
                    })
                    .collect();
                s += &format!("{k:>7.3} {cells}\n");
            }
            s
        }
    })
}

#[derive(Serialize)]
struct TheoryOutput<'a> {
    family: Family,
    p: f64,
    n: usize,
    replications: usize,
    master_seed: u64,
    rows: &'a [dr_ate::monte_carlo::TheoryRow],
}

fn run_theory(a: &TheoryArgs, format: Format) -> CliResult<String> {
    let (spec, spec_seed) = load_model(&a.model)?;
    let p = check_p(a.p.unwrap_or(spec.p))?;
    let seed = resolve_seed(&a.run, spec_seed);
    let cmp = theory_vs_empirical(&spec, p, a.n, a.run.reps, seed, a.run.workers)?;
    Ok(match format {
        Format::Json => json(
            "theory-check",
            TheoryOutput {
                family: cmp.family,
                p,
                n: a.n,
                replications: a.run.reps,
                master_seed: seed,
                rows: &cmp.rows,
            },
        ),
        Format::Csv => {
            let mut s = String::from("estimator,nominal,empirical,empirical_se,relative_error\n");
            for r in &cmp.rows {
                s += &csv_line(&[
                    r.estimator.to_string(),
                    r.nominal.to_string(),
                    r.empirical.to_string(),
                    r.empirical_se.to_string(),
                    r.relative_error.map(|v| v.to_string()).unwrap_or_default(),
                ]);
            }
            s
        }
        Format::Table => {
            let mut t = Table::new(["estimator", "nominal", "empirical", "se", "rel. error"]);
            for r in &cmp.rows {
                t.row(vec![
                    r.estimator.to_string(),
                    render::num(r.nominal),
                    render::num(r.empirical),
                    render::num(r.empirical_se),
                    r.relative_error.map(|v| format!("{:.1}%", 100.0 * v)).unwrap_or_else(|| "-".into()),
                ]);
            }
            t.to_string()
        }
    })
}
