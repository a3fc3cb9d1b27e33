//! Built-in self-checks run by `strang-split verify`.
//!
//! Each check is cheap (the toy ODE and a coarse KdV grid) and reports a
//! single pass/fail line.

use num_complex::Complex64;

use crate::error::Result;
use crate::field::{NormKind, State};
use crate::phi::phi_k;
use crate::problems::{KdV, KdVConfig, ToyOde};
use crate::scheme::{
    contraction_ratios, iterated_strang_step, symmetry_defect, triple_jump_coefficients,
    CoefficientMode, SchemeSpec, SplitProblem,
};
use crate::study::fit_order;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Defects below this are treated as round-off and left out of slope fits.
pub const ROUNDOFF_FLOOR: f64 = 1e-13;

/// `2^-lo, …, 2^-hi`.
pub fn dyadic_range(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|m| 2f64.powi(-m)).collect()
}

/// Slope over the rows whose value exceeds [`ROUNDOFF_FLOOR`].
pub fn slope_above_floor(taus: &[f64], values: &[f64]) -> Result<f64> {
    let (t, v): (Vec<f64>, Vec<f64>) = taus
        .iter()
        .zip(values)
        .filter(|(_, v)| **v > ROUNDOFF_FLOOR)
        .map(|(t, v)| (*t, *v))
        .unzip();
    fit_order(&t, &v)
}

/// Largest recursion residual `|φ_k - 1/k! - zφ_{k+1}| / max(1, |φ_k|)` over
/// `k = 0, 1, 2` and `samples` points with `|z|` log-spaced in `[1e-12, 50]`.
pub fn phi_recursion_residual(samples: usize) -> f64 {
    let factorial = [1.0, 1.0, 2.0];
    let mut worst = 0.0_f64;
    for s in 0..samples {
        let frac = s as f64 / (samples - 1).max(1) as f64;
        let radius = 10f64.powf(-12.0 + frac * (50f64.log10() + 12.0));
        // golden-angle spiral covers all directions
        let angle = s as f64 * 2.399_963_229_728_653;
        let z = Complex64::from_polar(radius, angle);
        for (k, fact) in factorial.iter().enumerate() {
            let lhs = phi_k(k, z);
            let rhs = 1.0 / fact + z * phi_k(k + 1, z);
            worst = worst.max((lhs - rhs).norm() / lhs.norm().max(1.0));
        }
    }
    worst
}

fn check_phi() -> Check {
    let r = phi_recursion_residual(10_000);
    Check::new("phi-recursion", r <= 1e-13, format!("max residual {r:.2e}"))
}

fn check_gammas() -> Check {
    let mut worst = 0.0_f64;
    let mut positive = true;
    for p in [2, 4] {
        for mode in [CoefficientMode::Real, CoefficientMode::Complex] {
            let g = match triple_jump_coefficients(p, mode) {
                Ok(g) => g,
                Err(e) => return Check::new("gamma-equations", false, e.to_string()),
            };
            let sum: Complex64 = g.iter().sum();
            let power: Complex64 = g.iter().map(|z| z.powu(p as u32 + 1)).sum();
            worst = worst.max((sum - 1.0).norm()).max(power.norm());
            if mode == CoefficientMode::Complex {
                positive &= g.iter().all(|z| z.re > 0.0);
            }
        }
    }
    Check::new(
        "gamma-equations",
        worst <= 1e-14 && positive,
        format!("max residual {worst:.2e}, complex real parts positive: {positive}"),
    )
}

/// Largest increment ratio of one `S^{(iterations)}` step from `u0`.
///
/// Ratios whose newer increment is below `noise` are round-off and skipped.
pub fn max_ratio(
    problem: &dyn SplitProblem,
    u0: &State,
    tau: f64,
    iterations: usize,
    noise: f64,
) -> Result<f64> {
    let (_, d) = iterated_strang_step(problem, Complex64::new(tau, 0.0), u0, iterations, 0.0, 0.0)?;
    let ratios: Vec<f64> = contraction_ratios(&d.fixed_point_increments)
        .into_iter()
        .zip(d.fixed_point_increments.iter().skip(1))
        .filter(|(_, inc)| **inc > noise)
        .map(|(r, _)| r)
        .collect();
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

fn check_contraction(
    problem: &dyn SplitProblem,
    u0: Result<State>,
    taus: &[f64],
    iterations: usize,
) -> Check {
    let name = format!("contraction-{}", problem.name());
    let qs: Result<Vec<f64>> = u0.and_then(|u0| {
        taus.iter()
            .map(|&t| max_ratio(problem, &u0, t, iterations, 1e-10))
            .collect()
    });
    match qs {
        Ok(qs) => {
            let ok = qs.iter().all(|&q| q < 1.0) && qs.windows(2).all(|w| w[1] < w[0]);
            Check::new(
                &name,
                ok,
                format!(
                    "q per tau {:?}",
                    qs.iter().map(|q| format!("{q:.3e}")).collect::<Vec<_>>()
                ),
            )
        }
        Err(e) => Check::new(&name, false, e.to_string()),
    }
}

/// Round-trip defects of `scheme` on the toy ODE from `u = 1`.
pub fn toy_defects(scheme: &SchemeSpec, taus: &[f64]) -> Result<Vec<f64>> {
    let toy = ToyOde::new();
    let u0 = toy.constant(1.0)?;
    taus.iter()
        .map(|&t| symmetry_defect(&toy, scheme, Complex64::new(t, 0.0), &u0))
        .collect()
}

fn check_symmetry() -> Check {
    let taus = dyadic_range(4, 12);
    let run = || -> Result<(f64, f64)> {
        let strang = slope_above_floor(&taus, &toy_defects(&SchemeSpec::strang(), &taus)?)?;
        let s4 = slope_above_floor(
            &taus,
            &toy_defects(&SchemeSpec::iterated_strang(4)?, &taus)?,
        )?;
        Ok((strang, s4))
    };
    match run() {
        Ok((a, b)) => Check::new(
            "symmetry-defect",
            a >= 1.8 && b >= 3.7,
            format!("slopes: strang {a:.3}, iterated-strang(4) {b:.3}"),
        ),
        Err(e) => Check::new("symmetry-defect", false, e.to_string()),
    }
}

/// `‖S^{(i)} u0 - S^{(limit)} u0‖_∞` for each `τ`.
pub fn iterate_gaps(
    problem: &dyn SplitProblem,
    u0: &State,
    i: usize,
    limit: usize,
    taus: &[f64],
    inner_tol: f64,
) -> Result<Vec<f64>> {
    taus.iter()
        .map(|&t| {
            let tau = Complex64::new(t, 0.0);
            let (a, _) = iterated_strang_step(problem, tau, u0, i, 0.0, inner_tol)?;
            let (b, _) = iterated_strang_step(problem, tau, u0, limit, 0.0, inner_tol)?;
            a.distance(&b, NormKind::DiscreteInfinity)
        })
        .collect()
}

fn check_iterate_limit() -> Check {
    let toy = ToyOde::new();
    let taus = dyadic_range(3, 8);
    let run = || -> Result<Vec<f64>> {
        let u0 = toy.constant(1.0)?;
        (1..=3)
            .map(|i| slope_above_floor(&taus, &iterate_gaps(&toy, &u0, i, 12, &taus, 0.0)?))
            .collect()
    };
    match run() {
        Ok(slopes) => {
            let ok = slopes.iter().enumerate().all(|(j, s)| *s >= j as f64 + 1.7);
            Check::new(
                "iterate-limit",
                ok,
                format!("slopes for i = 1..3: {slopes:.3?}"),
            )
        }
        Err(e) => Check::new("iterate-limit", false, e.to_string()),
    }
}

/// Runs every built-in check.
pub fn run_all() -> Vec<Check> {
    let mut checks = vec![check_phi(), check_gammas()];
    let toy = ToyOde::new();
    checks.push(check_contraction(
        &toy,
        toy.constant(1.0),
        &[0.2, 0.1, 0.05],
        6,
    ));
    match KdV::new(KdVConfig::soliton().with_n(128)) {
        Ok(kdv) => checks.push(check_contraction(
            &kdv,
            kdv.initial(),
            &[4e-3, 2e-3, 1e-3],
            6,
        )),
        Err(e) => checks.push(Check::new("contraction-kdv-soliton", false, e.to_string())),
    }
    checks.push(check_symmetry());
    checks.push(check_iterate_limit());
    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_checks_pass() {
        for c in run_all() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
