//! One-step splitting schemes for `u' = Au + b(u)u + d`.
//!
//! Every scheme is built from two partial flows supplied by a
//! [`SplitProblem`]: the linear propagator `e^{σA}` and the frozen-coefficient
//! flow `φ_σ^{b(u*)}` of `w' = b(u*)w + d`. Time steps are complex so that
//! compositions with complex coefficients need no special treatment.

use num_complex::Complex64;

use crate::error::{Result, SplitError};
use crate::field::{norm, Grid, NormKind, State};

/// A problem split into two exactly (or accurately) solvable partial flows.
pub trait SplitProblem: Send + Sync {
    fn name(&self) -> &str;

    fn grid(&self) -> &Grid;

    fn n_components(&self) -> usize;

    /// `e^{σA} state`.
    fn linear_propagate(&self, sigma: Complex64, state: &State) -> Result<State>;

    /// `φ_σ^{b(frozen)}(state)`, the flow of `w' = b(frozen) w + d` over `σ`.
    /// `tol` bounds the error of inexact implementations.
    fn nonlinear_propagate(
        &self,
        sigma: Complex64,
        frozen: &State,
        state: &State,
        tol: f64,
    ) -> Result<State>;

    /// Advisory Lipschitz-type bound used only for step-size warnings.
    fn lipschitz_hint(&self) -> Option<f64> {
        None
    }

    /// Whether exact solutions are real-valued.
    fn is_real(&self) -> bool {
        true
    }

    /// Exact solution at time `t` started from `u0`, if known in closed form.
    fn exact_solution(&self, _t: f64, _u0: &State) -> Option<Result<State>> {
        None
    }
}

/// Shape of a one-step method.
#[derive(Debug, Clone, PartialEq)]
pub enum SchemeKind {
    /// `φ_τ^{b(u0)} ∘ e^{τA}`.
    Lie,
    /// Classic Strang `M_τ`.
    Strang,
    /// `S_τ^{(i)}`: `i` fixed-point iterates towards the implicit symmetric scheme.
    IteratedStrang { iterations: usize },
    /// `Φ_{γ_m τ} ∘ … ∘ Φ_{γ_1 τ}`.
    Composition {
        base: Box<SchemeKind>,
        gammas: Vec<Complex64>,
    },
}

impl SchemeKind {
    fn label(&self) -> String {
        match self {
            SchemeKind::Lie => "lie".into(),
            SchemeKind::Strang => "strang".into(),
            SchemeKind::IteratedStrang { iterations } => format!("iterated-strang({iterations})"),
            SchemeKind::Composition { base, gammas } => {
                let complex = gammas.iter().any(|g| g.im != 0.0);
                format!(
                    "composition{}[{}]",
                    if complex { "-complex" } else { "" },
                    base.label()
                )
            }
        }
    }

    fn has_complex_coefficients(&self) -> bool {
        match self {
            SchemeKind::Composition { base, gammas } => {
                gammas.iter().any(|g| g.im != 0.0) || base.has_complex_coefficients()
            }
            _ => false,
        }
    }
}

/// A validated scheme together with its iteration and inner tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSpec {
    kind: SchemeKind,
    /// `0` runs exactly the configured number of fixed-point iterations.
    pub fixed_point_tol: f64,
    /// Passed to [`SplitProblem::nonlinear_propagate`].
    pub inner_tol: f64,
}

pub const DEFAULT_INNER_TOL: f64 = 1e-12;

/// Largest admissible deviation of `Σγ` from one.
pub const GAMMA_SUM_TOL: f64 = 1e-14;

impl SchemeSpec {
    fn from_kind(kind: SchemeKind) -> Self {
        SchemeSpec {
            kind,
            fixed_point_tol: 0.0,
            inner_tol: DEFAULT_INNER_TOL,
        }
    }

    pub fn lie() -> Self {
        Self::from_kind(SchemeKind::Lie)
    }

    pub fn strang() -> Self {
        Self::from_kind(SchemeKind::Strang)
    }

    pub fn iterated_strang(iterations: usize) -> Result<Self> {
        if iterations == 0 {
            return Err(SplitError::InvalidScheme(
                "iterated Strang needs at least one iteration".into(),
            ));
        }
        Ok(Self::from_kind(SchemeKind::IteratedStrang { iterations }))
    }

    /// Composes `base` with substeps `γ_j τ`; the coefficients must sum to one.
    pub fn composition(base: SchemeSpec, gammas: Vec<Complex64>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(SplitError::InvalidScheme("empty composition".into()));
        }
        if gammas
            .iter()
            .any(|g| !g.re.is_finite() || !g.im.is_finite())
        {
            return Err(SplitError::InvalidScheme("non-finite coefficient".into()));
        }
        let sum: Complex64 = gammas.iter().sum();
        if (sum - 1.0).norm() > GAMMA_SUM_TOL {
            return Err(SplitError::InvalidScheme(format!(
                "composition coefficients sum to {sum}, expected 1"
            )));
        }
        Ok(SchemeSpec {
            kind: SchemeKind::Composition {
                base: Box::new(base.kind),
                gammas,
            },
            fixed_point_tol: base.fixed_point_tol,
            inner_tol: base.inner_tol,
        })
    }

    /// Triple jump raising an order-`p` base method to order `p + 2`.
    pub fn triple_jump(base: SchemeSpec, p: usize, mode: CoefficientMode) -> Result<Self> {
        let gammas = triple_jump_coefficients(p, mode)?;
        Self::composition(base, gammas.to_vec())
    }

    pub fn with_fixed_point_tol(mut self, tol: f64) -> Self {
        self.fixed_point_tol = tol;
        self
    }

    pub fn with_inner_tol(mut self, tol: f64) -> Self {
        self.inner_tol = tol;
        self
    }

    pub fn kind(&self) -> &SchemeKind {
        &self.kind
    }

    pub fn name(&self) -> String {
        self.kind.label()
    }

    pub fn has_complex_coefficients(&self) -> bool {
        self.kind.has_complex_coefficients()
    }

    fn with_kind(&self, kind: SchemeKind) -> SchemeSpec {
        SchemeSpec {
            kind,
            fixed_point_tol: self.fixed_point_tol,
            inner_tol: self.inner_tol,
        }
    }
}

/// Per-step record of the fixed-point iteration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepDiagnostics {
    /// `‖v^{(k+1)} - v^{(k)}‖_∞` for each iteration performed.
    pub fixed_point_increments: Vec<f64>,
    /// Iterates computed, summed over substeps.
    pub iterations_used: usize,
    /// Base steps aggregated into this record;
    /// `fixed_point_increments.len() == iterations_used - substeps`.
    pub substeps: usize,
    /// Number of increments contributed by each substep, in order.
    pub group_sizes: Vec<usize>,
    pub warnings: Vec<String>,
}

impl StepDiagnostics {
    fn single() -> Self {
        StepDiagnostics {
            iterations_used: 1,
            substeps: 1,
            group_sizes: vec![0],
            ..Default::default()
        }
    }

    fn absorb(&mut self, other: StepDiagnostics) {
        self.fixed_point_increments
            .extend(other.fixed_point_increments);
        self.iterations_used += other.iterations_used;
        self.substeps += other.substeps;
        self.group_sizes.extend(other.group_sizes);
        self.warnings.extend(other.warnings);
    }

    /// Increment sequences of the individual substeps.
    pub fn increment_groups(&self) -> impl Iterator<Item = &[f64]> {
        let mut start = 0;
        self.group_sizes.iter().map(move |&len| {
            let group = &self.fixed_point_increments[start..start + len];
            start += len;
            group
        })
    }

    /// Largest ratio `inc[k+1]/inc[k]` within any substep's sequence.
    pub fn max_contraction_ratio(&self) -> Option<f64> {
        self.increment_groups()
            .flat_map(contraction_ratios)
            .reduce(f64::max)
    }
}

/// Successive ratios of an increment sequence.
pub fn contraction_ratios(increments: &[f64]) -> Vec<f64> {
    increments
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect()
}

fn check_lipschitz(problem: &dyn SplitProblem, tau: Complex64, diag: &mut StepDiagnostics) {
    if let Some(l) = problem.lipschitz_hint() {
        if l * tau.norm() >= 1.0 {
            diag.warnings.push(format!(
                "L|tau| = {:.3} >= 1: fixed-point iteration may not contract",
                l * tau.norm()
            ));
        }
    }
}

/// One Lie step `φ_τ^{b(u0)}(e^{τA} u0)`, frozen at the input state.
pub fn lie_step(
    problem: &dyn SplitProblem,
    tau: Complex64,
    u0: &State,
    inner_tol: f64,
) -> Result<State> {
    let v = problem.linear_propagate(tau, u0)?;
    problem.nonlinear_propagate(tau, u0, &v, inner_tol)
}

/// One classic Strang step `M_τ`.
///
/// The frozen coefficient `u_{1/2}` comes from a half Lie step; the inner
/// flow then runs once over the full step from `e^{τA/2} u0`.
pub fn strang_step(
    problem: &dyn SplitProblem,
    tau: Complex64,
    u0: &State,
    inner_tol: f64,
) -> Result<State> {
    let half = 0.5 * tau;
    let v0 = problem.linear_propagate(half, u0)?;
    let u_half = problem.nonlinear_propagate(half, u0, &v0, inner_tol)?;
    let w = problem.nonlinear_propagate(tau, &u_half, &v0, inner_tol)?;
    problem.linear_propagate(half, &w)
}

/// One step of `S_τ^{(i)}`.
///
/// Starts from `S_τ^{(1)}` and applies `F(v) = e^{τA/2} φ_{τ/2}^{b(v)}(u_{1/2})`
/// `iterations - 1` times, recording increment norms. Aborts with
/// [`SplitError::Divergence`] when increments grow twice in a row above the
/// round-off floor. A positive `fixed_point_tol` stops early once an increment
/// falls below it.
pub fn iterated_strang_step(
    problem: &dyn SplitProblem,
    tau: Complex64,
    u0: &State,
    iterations: usize,
    fixed_point_tol: f64,
    inner_tol: f64,
) -> Result<(State, StepDiagnostics)> {
    if iterations == 0 {
        return Err(SplitError::InvalidScheme(
            "iterated Strang needs at least one iteration".into(),
        ));
    }
    let half = 0.5 * tau;
    let mut diag = StepDiagnostics::single();
    check_lipschitz(problem, tau, &mut diag);

    let v0 = problem.linear_propagate(half, u0)?;
    let u_half = problem.nonlinear_propagate(half, u0, &v0, inner_tol)?;
    let apply_f = |frozen: &State| -> Result<State> {
        let w = problem.nonlinear_propagate(half, frozen, &u_half, inner_tol)?;
        problem.linear_propagate(half, &w)
    };

    let mut v = apply_f(&u_half)?;
    let scale = norm(&v, NormKind::DiscreteInfinity)?.max(1.0);
    let noise_floor = (100.0 * f64::EPSILON).max(10.0 * inner_tol) * scale;
    let mut growths = 0;

    for _ in 1..iterations {
        let next = apply_f(&v)?;
        let increment = next.distance(&v, NormKind::DiscreteInfinity)?;
        let previous = diag.fixed_point_increments.last().copied();
        diag.fixed_point_increments.push(increment);
        diag.group_sizes[0] += 1;
        diag.iterations_used += 1;
        v = next;

        match previous {
            Some(p) if increment > p && increment > noise_floor => growths += 1,
            _ => growths = 0,
        }
        if growths >= 2 {
            return Err(SplitError::Divergence {
                increments: diag.fixed_point_increments,
            });
        }
        if fixed_point_tol > 0.0 && increment <= fixed_point_tol {
            break;
        }
    }
    Ok((v, diag))
}

/// Applies `base` with substeps `γ_j τ` in order; zero coefficients are skipped.
pub fn compose_step(
    problem: &dyn SplitProblem,
    base: &SchemeSpec,
    gammas: &[Complex64],
    tau: Complex64,
    u0: &State,
) -> Result<(State, StepDiagnostics)> {
    let mut u = u0.clone();
    let mut diag = StepDiagnostics::default();
    for &gamma in gammas.iter().filter(|g| **g != Complex64::new(0.0, 0.0)) {
        let (next, d) = raw_step(problem, base, gamma * tau, &u)?;
        diag.absorb(d);
        u = next;
    }
    Ok((u, diag))
}

fn raw_step(
    problem: &dyn SplitProblem,
    scheme: &SchemeSpec,
    tau: Complex64,
    u0: &State,
) -> Result<(State, StepDiagnostics)> {
    match &scheme.kind {
        SchemeKind::Lie => Ok((
            lie_step(problem, tau, u0, scheme.inner_tol)?,
            StepDiagnostics::single(),
        )),
        SchemeKind::Strang => Ok((
            strang_step(problem, tau, u0, scheme.inner_tol)?,
            StepDiagnostics::single(),
        )),
        SchemeKind::IteratedStrang { iterations } => iterated_strang_step(
            problem,
            tau,
            u0,
            *iterations,
            scheme.fixed_point_tol,
            scheme.inner_tol,
        ),
        SchemeKind::Composition { base, gammas } => {
            let base = scheme.with_kind((**base).clone());
            compose_step(problem, &base, gammas, tau, u0)
        }
    }
}

/// One full step of `scheme`.
///
/// For real problems integrated with complex coefficients the imaginary part
/// is dropped once, after the complete composite step.
pub fn step(
    problem: &dyn SplitProblem,
    scheme: &SchemeSpec,
    tau: Complex64,
    u0: &State,
) -> Result<(State, StepDiagnostics)> {
    let (mut u, diag) = raw_step(problem, scheme, tau, u0)?;
    if problem.is_real() && scheme.has_complex_coefficients() {
        u.project_real();
    }
    u.ensure_finite("scheme step output")?;
    Ok((u, diag))
}

/// Round-trip defect `‖Φ_{-τ}(Φ_τ(u0)) - u0‖_∞`.
///
/// Zero for symmetric methods. Parabolic problems reject the backward step
/// with [`SplitError::Unstable`].
pub fn symmetry_defect(
    problem: &dyn SplitProblem,
    scheme: &SchemeSpec,
    tau: Complex64,
    u0: &State,
) -> Result<f64> {
    let (forward, _) = raw_step(problem, scheme, tau, u0)?;
    let (back, _) = raw_step(problem, scheme, -tau, &forward)?;
    back.distance(u0, NormKind::DiscreteInfinity)
}

/// Real or complex branch of the triple-jump coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientMode {
    Real,
    Complex,
}

impl std::str::FromStr for CoefficientMode {
    type Err = SplitError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(CoefficientMode::Real),
            "complex" => Ok(CoefficientMode::Complex),
            other => Err(SplitError::Parse(format!(
                "unknown coefficient mode {other:?}"
            ))),
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Symmetric triple `(γ1, γ2, γ1)` with `Σγ = 1` and `Σγ^{p+1} = 0`.
///
/// The real branch is `γ1 = 1/(2 - 2^{1/(p+1)})`, `γ2 = -2^{1/(p+1)} γ1`. The
/// complex branch replaces `2^{1/(p+1)}` by `2^{1/(p+1)} ω` for the primitive
/// `(p+1)`-th root of unity `ω` of smallest positive argument for which all
/// coefficients have positive real part.
pub fn triple_jump_coefficients(p: usize, mode: CoefficientMode) -> Result<[Complex64; 3]> {
    if p < 2 || !p.is_multiple_of(2) {
        return Err(SplitError::InvalidScheme(format!(
            "triple jump needs an even base order >= 2, got {p}"
        )));
    }
    let q = p + 1;
    let root = 2f64.powf(1.0 / q as f64);
    let triple = |w: Complex64| {
        let g1 = 1.0 / (2.0 - root * w);
        let g2 = -root * w * g1;
        [g1, g2, g1]
    };
    match mode {
        CoefficientMode::Real => Ok(triple(Complex64::new(1.0, 0.0))),
        CoefficientMode::Complex => (1..q)
            .filter(|&j| gcd(j, q) == 1)
            .map(|j| {
                triple(Complex64::from_polar(
                    1.0,
                    2.0 * std::f64::consts::PI * j as f64 / q as f64,
                ))
            })
            .find(|g| g.iter().all(|z| z.re > 0.0))
            .ok_or_else(|| {
                SplitError::InvalidScheme(format!(
                    "no complex triple jump with positive real parts for p = {p}"
                ))
            }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_triple_jump_values() {
        let g = triple_jump_coefficients(2, CoefficientMode::Real).unwrap();
        let c = 2f64.powf(1.0 / 3.0);
        let g1 = 1.0 / (2.0 - c);
        assert!((g[0].re - g1).abs() < 1e-15 && g[0].im == 0.0);
        assert_eq!(g[2], g[0]);
        assert!((g[1].re + c * g1).abs() < 1e-15);
        assert!((g1 - 1.3512).abs() < 1e-4);
        assert!((g[1].re + 1.7024).abs() < 1e-4);
    }

    #[test]
    fn complex_triple_jump_has_positive_real_parts() {
        for p in [2, 4] {
            let g = triple_jump_coefficients(p, CoefficientMode::Complex).unwrap();
            assert!(g.iter().all(|z| z.re > 0.0), "p={p}: {g:?}");
            let sum: Complex64 = g.iter().sum();
            assert!((sum - 1.0).norm() <= 1e-14);
            let power: Complex64 = g.iter().map(|z| z.powu(p as u32 + 1)).sum();
            assert!(power.norm() <= 1e-14);
        }
    }

    #[test]
    fn odd_order_rejected() {
        assert!(triple_jump_coefficients(3, CoefficientMode::Real).is_err());
        assert!(triple_jump_coefficients(0, CoefficientMode::Complex).is_err());
    }

    #[test]
    fn composition_checks_coefficient_sum() {
        let bad = SchemeSpec::composition(
            SchemeSpec::strang(),
            vec![Complex64::new(0.5, 0.0), Complex64::new(0.4, 0.0)],
        );
        assert!(matches!(bad, Err(SplitError::InvalidScheme(_))));
        assert!(SchemeSpec::iterated_strang(0).is_err());
    }

    #[test]
    fn scheme_names() {
        let s = SchemeSpec::triple_jump(
            SchemeSpec::iterated_strang(4).unwrap(),
            2,
            CoefficientMode::Complex,
        )
        .unwrap();
        assert_eq!(s.name(), "composition-complex[iterated-strang(4)]");
        assert!(s.has_complex_coefficients());
        assert_eq!(SchemeSpec::strang().name(), "strang");
    }

    #[test]
    fn ratios_skip_zero_increments() {
        assert_eq!(contraction_ratios(&[1.0, 0.5, 0.125]), vec![0.5, 0.25]);
        assert!(contraction_ratios(&[0.0, 1.0]).is_empty());
    }
}
