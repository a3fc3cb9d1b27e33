//! Convergence studies: time integration, reference solutions, order fits
//! and CSV output.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, SplitError};
use crate::field::{NormKind, State};
use crate::scheme::{step, CoefficientMode, SchemeSpec, SplitProblem};

/// Diagnostics aggregated over a whole trajectory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunDiagnostics {
    pub steps: usize,
    /// Iterates computed over all steps and substeps.
    pub iterations_used: usize,
    /// Largest within-substep increment ratio seen on any step.
    pub max_contraction_ratio: Option<f64>,
    /// Increments of the first step's first substep.
    pub first_increments: Vec<f64>,
    /// Distinct warnings, in order of first appearance.
    pub warnings: Vec<String>,
}

/// Number of steps `T/τ`, which must be an integer up to rounding.
pub fn step_count(tau: f64, t_final: f64) -> Result<usize> {
    if !(tau.is_finite() && tau > 0.0 && t_final.is_finite() && t_final >= 0.0) {
        return Err(SplitError::InvalidConfig(format!(
            "need tau > 0 and T >= 0, got tau = {tau}, T = {t_final}"
        )));
    }
    let ratio = t_final / tau;
    let n = ratio.round();
    if (ratio - n).abs() > 4.0 * f64::EPSILON * ratio.max(1.0) {
        return Err(SplitError::InvalidConfig(format!(
            "tau = {tau} does not divide T = {t_final}"
        )));
    }
    Ok(n as usize)
}

/// Applies `scheme` `T/τ` times; failures carry the index of the failing step.
pub fn integrate(
    problem: &dyn SplitProblem,
    scheme: &SchemeSpec,
    tau: f64,
    t_final: f64,
    u0: &State,
) -> Result<(State, RunDiagnostics)> {
    let n = step_count(tau, t_final)?;
    u0.ensure_finite("initial state")?;
    let mut diag = RunDiagnostics::default();
    let mut u = u0.clone();
    let tau = Complex64::new(tau, 0.0);
    for index in 0..n {
        let (next, d) = step(problem, scheme, tau, &u).map_err(|e| e.at_step(index))?;
        diag.steps += 1;
        diag.iterations_used += d.iterations_used;
        if let Some(r) = d.max_contraction_ratio() {
            diag.max_contraction_ratio = Some(diag.max_contraction_ratio.map_or(r, |m| m.max(r)));
        }
        if index == 0 {
            diag.first_increments = d.increment_groups().next().unwrap_or(&[]).to_vec();
        }
        for w in d.warnings {
            if !diag.warnings.contains(&w) {
                diag.warnings.push(w);
            }
        }
        u = next;
    }
    Ok((u, diag))
}

/// Source of the solution errors are measured against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceSpec {
    /// Closed-form solution supplied by the problem.
    Exact,
    /// Iterated triple jump (base `S^{(4)}`) at `τ_min / factor`.
    SelfReference { factor: usize },
}

/// Reference solution and its estimated accuracy.
#[derive(Debug, Clone)]
pub struct Reference {
    pub state: State,
    /// Estimated error of `state` in the study norm.
    pub floor: f64,
}

/// Iterations of the base scheme used for self-references.
pub const REFERENCE_ITERATIONS: usize = 4;

/// `2^4 - 1` for the fourth-order reference scheme.
const REFERENCE_RICHARDSON: f64 = 15.0;

/// Builds the reference used for a study.
///
/// Exact references are assigned a floor of `inner_tol · ‖u0‖`, the accuracy
/// to which the partial flows themselves are resolved. Self-references run at
/// `τ_ref` and `2τ_ref`; the Richardson estimate `‖u_{τ_ref} - u_{2τ_ref}‖ / 15`
/// of the fourth-order reference scheme is the floor and must not exceed
/// `max_floor`.
#[allow(clippy::too_many_arguments)]
pub fn reference_solution(
    problem: &dyn SplitProblem,
    t_final: f64,
    u0: &State,
    spec: ReferenceSpec,
    tau_min: f64,
    mode: CoefficientMode,
    inner_tol: f64,
    norm: NormKind,
    max_floor: f64,
) -> Result<Reference> {
    match spec {
        ReferenceSpec::Exact => {
            let state = problem.exact_solution(t_final, u0).ok_or_else(|| {
                SplitError::InvalidConfig(format!(
                    "problem {} has no exact solution",
                    problem.name()
                ))
            })??;
            let floor = inner_tol.max(f64::EPSILON) * crate::field::norm(u0, norm)?;
            Ok(Reference { state, floor })
        }
        ReferenceSpec::SelfReference { factor } => {
            if factor < 2 {
                return Err(SplitError::InvalidConfig(format!(
                    "reference factor must be at least 2, got {factor}"
                )));
            }
            let scheme = reference_scheme(mode, inner_tol)?;
            let tau_ref = tau_min / factor as f64;
            let (coarse, fine) = rayon::join(
                || integrate(problem, &scheme, 2.0 * tau_ref, t_final, u0),
                || integrate(problem, &scheme, tau_ref, t_final, u0),
            );
            let (coarse, fine) = (coarse?.0, fine?.0);
            let floor = coarse.distance(&fine, norm)? / REFERENCE_RICHARDSON;
            if floor > max_floor {
                return Err(SplitError::ReferenceMismatch {
                    difference: floor,
                    allowed: max_floor,
                });
            }
            Ok(Reference { state: fine, floor })
        }
    }
}

/// Iterated triple jump with base `S^{(4)}`.
pub fn reference_scheme(mode: CoefficientMode, inner_tol: f64) -> Result<SchemeSpec> {
    let base = SchemeSpec::iterated_strang(REFERENCE_ITERATIONS)?.with_inner_tol(inner_tol);
    SchemeSpec::triple_jump(base, 2, mode)
}

/// Error range admitted into the order fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitWindow {
    /// Lower bound as a multiple of the reference floor.
    pub floor_factor: f64,
    /// Absolute upper bound.
    pub ceiling: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        FitWindow {
            floor_factor: 1e2,
            ceiling: 1e-2,
        }
    }
}

pub const MIN_FIT_ROWS: usize = 3;

/// Least-squares slope of `log(error)` against `log(τ)`.
pub fn fit_order(taus: &[f64], errors: &[f64]) -> Result<f64> {
    if taus.len() != errors.len() {
        return Err(SplitError::ShapeMismatch(format!(
            "{} step sizes but {} errors",
            taus.len(),
            errors.len()
        )));
    }
    let points: Vec<(f64, f64)> = taus
        .iter()
        .zip(errors)
        .filter(|(t, e)| **t > 0.0 && **e > 0.0 && e.is_finite())
        .map(|(t, e)| (t.ln(), e.ln()))
        .collect();
    if points.len() < MIN_FIT_ROWS {
        return Err(SplitError::TooFewRows {
            needed: MIN_FIT_ROWS,
            got: points.len(),
        });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(SplitError::InvalidConfig(
            "order fit needs distinct step sizes".into(),
        ));
    }
    Ok(sxy / sxx)
}

/// Rows whose error lies in `[floor_factor · ref_floor, ceiling]`.
pub fn fit_window(errors: &[f64], ref_floor: f64, window: FitWindow) -> Vec<usize> {
    let lo = window.floor_factor * ref_floor;
    errors
        .iter()
        .enumerate()
        .filter(|(_, &e)| e >= lo && e <= window.ceiling)
        .map(|(j, _)| j)
        .collect()
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub scheme: SchemeSpec,
    pub t_final: f64,
    /// Decreasing step sizes, each dividing `t_final`.
    pub taus: Vec<f64>,
    pub norm: NormKind,
    pub reference: ReferenceSpec,
    /// Coefficient branch of the self-reference scheme.
    pub reference_mode: CoefficientMode,
    /// Largest acceptable disagreement between the two self-reference runs.
    pub max_ref_floor: f64,
    pub window: FitWindow,
    /// Caps concurrent trajectories; `None` uses the global pool.
    pub threads: Option<usize>,
}

/// Dyadic sweep `τ_max, τ_max/2, …` with `count` entries.
pub fn dyadic_taus(tau_max: f64, count: usize) -> Vec<f64> {
    (0..count).map(|j| tau_max / (1u64 << j) as f64).collect()
}

impl StudyConfig {
    pub fn new(scheme: SchemeSpec, t_final: f64, taus: Vec<f64>, norm: NormKind) -> Self {
        StudyConfig {
            scheme,
            t_final,
            taus,
            norm,
            reference: ReferenceSpec::SelfReference { factor: 10 },
            reference_mode: CoefficientMode::Real,
            max_ref_floor: 1e-6,
            window: FitWindow::default(),
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.taus.is_empty() {
            return Err(SplitError::InvalidConfig("empty step-size list".into()));
        }
        if self.taus.windows(2).any(|w| w[1] >= w[0]) {
            return Err(SplitError::InvalidConfig(
                "step sizes must be strictly decreasing".into(),
            ));
        }
        for &tau in &self.taus {
            step_count(tau, self.t_final)?;
        }
        if let ReferenceSpec::SelfReference { factor } = self.reference {
            if factor < 10 {
                return Err(SplitError::InvalidConfig(format!(
                    "self-reference factor must be at least 10, got {factor}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub tau: f64,
    pub error: f64,
    pub wall_time_s: f64,
    pub iterations: usize,
    pub max_contraction_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub scheme: String,
    pub problem: String,
    pub norm: NormKind,
    pub rows: Vec<StudyRow>,
    /// `None` when fewer than three rows fall inside the fit window.
    pub fitted_order: Option<f64>,
    pub fit_window: Vec<usize>,
    pub ref_floor: f64,
}

impl StudyResult {
    pub fn taus(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.tau).collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }

    /// Refits the order over a different window.
    pub fn refit(&mut self, window: FitWindow) {
        let errors = self.errors();
        self.fit_window = fit_window(&errors, self.ref_floor, window);
        let (t, e): (Vec<f64>, Vec<f64>) = self
            .fit_window
            .iter()
            .map(|&j| (self.rows[j].tau, errors[j]))
            .unzip();
        self.fitted_order = fit_order(&t, &e).ok();
    }
}

/// Computes the reference a study configuration asks for.
pub fn study_reference(
    problem: &dyn SplitProblem,
    u0: &State,
    config: &StudyConfig,
) -> Result<Reference> {
    config.validate()?;
    let tau_min = config.taus.iter().copied().fold(f64::INFINITY, f64::min);
    reference_solution(
        problem,
        config.t_final,
        u0,
        config.reference,
        tau_min,
        config.reference_mode,
        config.scheme.inner_tol,
        config.norm,
        config.max_ref_floor,
    )
}

/// Runs a full convergence study against a reference computed up front.
pub fn run_study(
    problem: &dyn SplitProblem,
    u0: &State,
    config: &StudyConfig,
) -> Result<StudyResult> {
    in_pool(config.threads, || {
        let reference = study_reference(problem, u0, config)?;
        run_study_with_reference(problem, u0, config, &reference)
    })
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| SplitError::InvalidConfig(format!("thread pool: {e}")))?
            .install(f),
        None => f(),
    }
}

/// Runs a study against an existing reference, so several schemes can share
/// one expensive self-reference.
pub fn run_study_with_reference(
    problem: &dyn SplitProblem,
    u0: &State,
    config: &StudyConfig,
    reference: &Reference,
) -> Result<StudyResult> {
    config.validate()?;
    in_pool(config.threads, || {
        let rows: Vec<StudyRow> = config
            .taus
            .par_iter()
            .map(|&tau| {
                let start = Instant::now();
                let (u, diag) = integrate(problem, &config.scheme, tau, config.t_final, u0)?;
                let wall_time_s = start.elapsed().as_secs_f64();
                Ok(StudyRow {
                    tau,
                    error: u.distance(&reference.state, config.norm)?,
                    wall_time_s,
                    iterations: diag.iterations_used,
                    max_contraction_ratio: diag.max_contraction_ratio,
                })
            })
            .collect::<Result<_>>()?;
        let mut result = StudyResult {
            scheme: config.scheme.name(),
            problem: problem.name().to_string(),
            norm: config.norm,
            rows,
            fitted_order: None,
            fit_window: Vec::new(),
            ref_floor: reference.floor,
        };
        result.refit(config.window);
        Ok(result)
    })
}

pub const CSV_HEADER: &str = "tau,error,wall_time_s,iterations,scheme,problem,norm";

fn format_optional(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |v| format!("{v:.17e}"))
}

/// Serializes a study; floats are written with 18 significant digits.
pub fn format_csv(result: &StudyResult) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &result.rows {
        let _ = writeln!(
            out,
            "{:.17e},{:.17e},{:.17e},{},{},{},{}",
            r.tau,
            r.error,
            r.wall_time_s,
            r.iterations,
            result.scheme,
            result.problem,
            result.norm.as_str()
        );
    }
    let _ = writeln!(
        out,
        "# fitted_order={}",
        format_optional(result.fitted_order)
    );
    let _ = writeln!(out, "# ref_floor={:.17e}", result.ref_floor);
    out
}

pub fn write_csv(result: &StudyResult, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(format_csv(result).as_bytes())?;
    Ok(())
}

/// Parsed form of a study CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvStudy {
    pub rows: Vec<StudyRow>,
    pub scheme: Option<String>,
    pub problem: Option<String>,
    pub norm: Option<NormKind>,
    pub fitted_order: Option<f64>,
    pub ref_floor: Option<f64>,
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| SplitError::Parse(format!("line {line}: bad number {field:?}")))
}

pub fn read_csv(path: &Path) -> Result<CsvStudy> {
    parse_csv(BufReader::new(std::fs::File::open(path)?))
}

pub fn parse_csv<R: BufRead>(reader: R) -> Result<CsvStudy> {
    let mut study = CsvStudy {
        rows: Vec::new(),
        scheme: None,
        problem: None,
        norm: None,
        fitted_order: None,
        ref_floor: None,
    };
    let mut seen_header = false;
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = index + 1;
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.trim().split_once('=') {
                let value = parse_f64(value, lineno)?;
                let value = (!value.is_nan()).then_some(value);
                match key {
                    "fitted_order" => study.fitted_order = value,
                    "ref_floor" => study.ref_floor = value,
                    _ => {}
                }
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !seen_header {
            if line.trim() != CSV_HEADER {
                return Err(SplitError::Parse(format!("unexpected header {line:?}")));
            }
            seen_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(SplitError::Parse(format!(
                "line {lineno}: expected 7 fields, got {}",
                fields.len()
            )));
        }
        study.rows.push(StudyRow {
            tau: parse_f64(fields[0], lineno)?,
            error: parse_f64(fields[1], lineno)?,
            wall_time_s: parse_f64(fields[2], lineno)?,
            iterations: fields[3].trim().parse().map_err(|_| {
                SplitError::Parse(format!("line {lineno}: bad count {:?}", fields[3]))
            })?,
            max_contraction_ratio: None,
        });
        study.scheme = Some(fields[4].to_string());
        study.problem = Some(fields[5].to_string());
        study.norm = Some(fields[6].parse()?);
    }
    if !seen_header {
        return Err(SplitError::Parse("missing header".into()));
    }
    Ok(study)
}

/// Gnuplot script drawing the given CSV files on log-log axes with guide
/// lines of the given orders.
pub fn gnuplot_script(csv_files: &[(String, String)], orders: &[u32], output: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set terminal pngcairo size 800,600");
    let _ = writeln!(s, "set output '{output}'");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set logscale xy");
    let _ = writeln!(s, "set format xy '10^{{%L}}'");
    let _ = writeln!(s, "set xlabel 'step size'");
    let _ = writeln!(s, "set ylabel 'error'");
    let _ = writeln!(s, "set key left top");
    let mut series: Vec<String> = csv_files
        .iter()
        .map(|(file, title)| {
            format!("'{file}' using 1:2 every ::1 with linespoints title '{title}'")
        })
        .collect();
    for p in orders {
        series.push(format!("x**{p} with lines dashtype 2 title 'order {p}'"));
    }
    let _ = writeln!(s, "plot {}", series.join(", \\\n     "));
    s
}
