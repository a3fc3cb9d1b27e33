//! Korteweg–de Vries equation `u_t + u_xxx + u u_x = 0` on a periodic interval.
//!
//! The dispersive term `A = -∂³ₓ` is a unimodular Fourier multiplier. The
//! transport part is linearized as `b(u*) w = -u*(x) ∂ₓw` with `d = 0`, so
//! `b(u)u` reproduces `-u u_x`. Its flow has no closed form and is computed
//! by an adaptive Dormand–Prince integrator with a spectral derivative; the
//! product `u* ∂ₓw` is formed on a 3/2-padded grid so that it carries no
//! aliasing.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, SplitError};
use crate::field::{apply_symbol_table, eval_on_grid, Grid, State};
use crate::rk::{integrate, Tolerances};
use crate::scheme::SplitProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdVInitial {
    /// `12 sech²x`, a soliton moving right with speed 4.
    Soliton,
    /// `12 x tanh|x| / (|x| cosh²x)`, which sheds dispersive waves.
    Schwartzian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdVConfig {
    pub domain: (f64, f64),
    pub n: usize,
    pub inner_tol: f64,
    pub initial: KdVInitial,
}

impl KdVConfig {
    /// `[-20, 20)` with 2^10 points.
    pub fn soliton() -> Self {
        KdVConfig {
            domain: (-20.0, 20.0),
            n: 1024,
            inner_tol: 1e-12,
            initial: KdVInitial::Soliton,
        }
    }

    /// `[-4π, 4π)` with 2^11 points.
    pub fn schwartzian() -> Self {
        KdVConfig {
            domain: (-4.0 * PI, 4.0 * PI),
            n: 2048,
            inner_tol: 1e-12,
            initial: KdVInitial::Schwartzian,
        }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_inner_tol(mut self, tol: f64) -> Self {
        self.inner_tol = tol;
        self
    }
}

#[derive(Debug, Clone)]
pub struct KdV {
    config: KdVConfig,
    grid: Grid,
    k: Vec<f64>,
    k3: Vec<f64>,
    k_max: f64,
    padded: Padded,
}

/// Transfers between the `n`-point spectrum and values on the `3n/2`-point
/// grid. Quadratic products formed on the fine grid and truncated back are the
/// exact Galerkin products of the trigonometric interpolants.
#[derive(Clone)]
struct Padded {
    n: usize,
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Padded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Padded")
            .field("n", &self.n)
            .field("m", &self.m)
            .finish()
    }
}

impl Padded {
    fn new(n: usize) -> Self {
        let m = 3 * n / 2;
        let mut planner = FftPlanner::new();
        Padded {
            n,
            m,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    }

    /// Unnormalized `n`-point DFT to fine-grid values; the Nyquist bin is dropped.
    fn to_fine(&self, coeffs: &[Complex64], fine: &mut [Complex64]) {
        let (n, h) = (self.n, self.n / 2);
        let scale = 1.0 / n as f64;
        fine.fill(Complex64::default());
        for i in 0..h {
            fine[i] = coeffs[i] * scale;
        }
        for i in h + 1..n {
            fine[self.m - n + i] = coeffs[i] * scale;
        }
        self.inverse.process(fine);
    }

    /// Fine-grid values to the unnormalized `n`-point DFT of their truncation,
    /// with the Nyquist bin zeroed. Overwrites `fine`.
    fn truncate(&self, fine: &mut [Complex64], coeffs: &mut [Complex64]) {
        let (n, h) = (self.n, self.n / 2);
        self.forward.process(fine);
        let scale = n as f64 / self.m as f64;
        for i in 0..h {
            coeffs[i] = fine[i] * scale;
        }
        coeffs[h] = Complex64::default();
        for i in h + 1..n {
            coeffs[i] = fine[self.m - n + i] * scale;
        }
    }
}

/// `|hλ|` up to which the Dormand–Prince pair damps purely imaginary modes.
const STABILITY_LIMIT: f64 = 0.9;

pub const SOLITON_SPEED: f64 = 4.0;

fn soliton_profile(x: f64) -> f64 {
    let c = x.cosh();
    12.0 / (c * c)
}

fn schwartzian_profile(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let c = x.cosh();
    12.0 * x * x.abs().tanh() / (x.abs() * c * c)
}

impl KdV {
    pub fn new(config: KdVConfig) -> Result<Self> {
        if !(config.inner_tol.is_finite() && config.inner_tol > 0.0) {
            return Err(SplitError::InvalidConfig(format!(
                "inner tolerance must be positive, got {}",
                config.inner_tol
            )));
        }
        let grid = Grid::new_1d(config.n, config.domain)?;
        let mut k = grid.wavenumbers(0).to_vec();
        let k_max = k.iter().fold(0.0_f64, |m, k| m.max(k.abs()));
        // The Nyquist mode (-1)^j has zero derivative at the nodes; keeping
        // ik there turns real fields complex and feeds an instability.
        k[config.n / 2] = 0.0;
        let k3 = k.iter().map(|k| k * k * k).collect();
        Ok(KdV {
            config,
            grid,
            k,
            k3,
            k_max,
            padded: Padded::new(config.n),
        })
    }

    pub fn config(&self) -> &KdVConfig {
        &self.config
    }

    pub fn initial(&self) -> Result<State> {
        kdv_initial(&self.config, &self.grid)
    }
}

pub fn kdv_initial(config: &KdVConfig, grid: &Grid) -> Result<State> {
    if grid.dim() != 1 {
        return Err(SplitError::InvalidGrid("KdV needs a 1-D grid".into()));
    }
    let profile = match config.initial {
        KdVInitial::Soliton => soliton_profile,
        KdVInitial::Schwartzian => schwartzian_profile,
    };
    eval_on_grid(grid, 1, |_, x| profile(x[0]))
}

/// `12 sech²(x - 4t)` with the shift wrapped into the grid's period.
pub fn kdv_soliton_exact(t: f64, grid: &Grid) -> Result<State> {
    if grid.dim() != 1 {
        return Err(SplitError::InvalidGrid("KdV needs a 1-D grid".into()));
    }
    let (a, _) = grid.extent(0);
    let len = grid.length(0);
    eval_on_grid(grid, 1, |_, x| {
        let shifted = (x[0] - SOLITON_SPEED * t - a).rem_euclid(len) + a;
        // neighbouring periodic images matter only for narrow domains
        soliton_profile(shifted) + soliton_profile(shifted - len) + soliton_profile(shifted + len)
    })
}

impl SplitProblem for KdV {
    fn name(&self) -> &str {
        match self.config.initial {
            KdVInitial::Soliton => "kdv-soliton",
            KdVInitial::Schwartzian => "kdv-schwartz",
        }
    }

    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn n_components(&self) -> usize {
        1
    }

    fn linear_propagate(&self, sigma: Complex64, state: &State) -> Result<State> {
        if sigma == Complex64::new(0.0, 0.0) {
            return Ok(state.clone());
        }
        let kmax3 = self.k3.iter().fold(0.0_f64, |m, k| m.max(k.abs()));
        let growth = (sigma.im.abs() * kmax3).exp();
        if growth > 1.0 + 1e-9 {
            return Err(SplitError::Unstable(format!(
                "dispersive step with complex sigma = {:.6e}{:+.6e}i amplifies modes by {growth:.3e}", sigma.re, sigma.im
            )));
        }
        let i_sigma = Complex64::new(0.0, 1.0) * sigma;
        let table: Vec<Complex64> = self.k3.iter().map(|&k3| (i_sigma * k3).exp()).collect();
        apply_symbol_table(state, &table)
    }

    fn nonlinear_propagate(
        &self,
        sigma: Complex64,
        frozen: &State,
        state: &State,
        tol: f64,
    ) -> Result<State> {
        state.ensure_same_shape(frozen)?;
        if sigma.im != 0.0 {
            return Err(SplitError::InvalidScheme(format!(
                "KdV transport flow needs a real time step, got {sigma}"
            )));
        }
        if sigma.re == 0.0 {
            return Ok(state.clone());
        }
        let tol = if tol > 0.0 {
            tol
        } else {
            self.config.inner_tol
        };
        let speed = frozen.component(0);
        // The error estimate does not see slow growth of round-off in the
        // highest modes, so the step also obeys the imaginary-axis stability
        // limit of the integrator.
        let max_speed = speed.iter().fold(0.0_f64, |m, u| m.max(u.norm()));
        let lambda = sigma.re.abs() * max_speed * self.k_max;
        let mut tolerances = Tolerances::uniform(tol);
        if lambda > 0.0 {
            tolerances = tolerances.with_max_step(STABILITY_LIMIT / lambda);
        }
        let padded = &self.padded;
        let mut speed_fine = vec![Complex64::default(); padded.m];
        let mut coeffs = speed.to_vec();
        self.grid.forward(&mut coeffs);
        padded.to_fine(&coeffs, &mut speed_fine);
        let mut fine = vec![Complex64::default(); padded.m];
        let (w, _) = integrate(
            |w, out| {
                coeffs.copy_from_slice(w);
                self.grid.forward(&mut coeffs);
                for (z, &k) in coeffs.iter_mut().zip(&self.k) {
                    *z *= Complex64::new(0.0, k);
                }
                padded.to_fine(&coeffs, &mut fine);
                for (f, u) in fine.iter_mut().zip(&speed_fine) {
                    *f *= -u;
                }
                padded.truncate(&mut fine, out);
                self.grid.inverse(out);
            },
            sigma,
            state.data(),
            tolerances,
        )?;
        State::from_data(&self.grid, 1, w)
    }

    fn exact_solution(&self, t: f64, _u0: &State) -> Option<Result<State>> {
        match self.config.initial {
            KdVInitial::Soliton => Some(kdv_soliton_exact(t, &self.grid)),
            KdVInitial::Schwartzian => None,
        }
    }
}
