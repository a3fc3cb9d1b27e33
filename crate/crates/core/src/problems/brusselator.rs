//! Two-dimensional Brusselator reaction–diffusion system
//!
//! ```text
//! u_t = αΔu + (uv - β)u + δ
//! v_t = αΔv - u²v + γu
//! ```
//!
//! on the periodic unit square. Diffusion is the linear part; the reaction is
//! written as `b(u*, v*) [u; v] + d` with the lower-triangular matrix
//! `[[u*v* - β, 0], [γ, -u*²]]` and `d = [δ; 0]`, whose flow has a closed form
//! at every node.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, SplitError};
use crate::field::{apply_symbol_table, eval_on_grid, Grid, State};
use crate::phi::{exp_divided_difference, phi1_divided_difference, phi_k};
use crate::scheme::SplitProblem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrusselatorParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    /// Largest amplification of any Fourier mode a diffusion step may apply.
    /// The default of one rejects every backward (negative real part) step.
    pub max_growth: f64,
}

impl Default for BrusselatorParams {
    fn default() -> Self {
        BrusselatorParams {
            alpha: 1e-2,
            beta: 4.4,
            gamma: 3.4,
            delta: 1.0,
            max_growth: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Brusselator {
    params: BrusselatorParams,
    grid: Grid,
    laplacian: Vec<f64>,
    max_k2: f64,
}

impl Brusselator {
    /// Builds the problem on `[0,1)²` with `n` points per dimension.
    pub fn new(params: BrusselatorParams, n: usize) -> Result<Self> {
        if !(params.alpha.is_finite() && params.alpha > 0.0) {
            return Err(SplitError::InvalidConfig(format!(
                "diffusion coefficient must be positive, got {}",
                params.alpha
            )));
        }
        let grid = Grid::new_2d(n, (0.0, 1.0), (0.0, 1.0))?;
        let laplacian: Vec<f64> = grid
            .symbol_table(|k| Complex64::new(k[0] * k[0] + k[1] * k[1], 0.0))
            .into_iter()
            .map(|z| z.re)
            .collect();
        let max_k2 = laplacian.iter().copied().fold(0.0, f64::max);
        Ok(Brusselator {
            params,
            grid,
            laplacian,
            max_k2,
        })
    }

    pub fn params(&self) -> &BrusselatorParams {
        &self.params
    }

    /// `u0 = 22y(1-y)^{3/2}(1 + cos 10πx)`, `v0 = 27x(1-x)^{3/2}(1 + sin 10πx)`.
    pub fn initial(&self) -> Result<State> {
        brusselator_initial(&self.grid)
    }

    /// Pointwise flow of `w' = [[a,0],[g,c]] w + [δ; 0]` over `sigma`.
    pub fn node_flow(
        sigma: Complex64,
        a: Complex64,
        c: Complex64,
        g: f64,
        delta: f64,
        w: [Complex64; 2],
    ) -> [Complex64; 2] {
        let (x, y) = (sigma * a, sigma * c);
        let div_exp = sigma * exp_divided_difference(x, y);
        let div_phi1 = sigma * phi1_divided_difference(x, y);
        let first = x.exp() * w[0] + sigma * delta * phi_k(1, x);
        let second = g * div_exp * w[0] + y.exp() * w[1] + sigma * g * delta * div_phi1;
        [first, second]
    }
}

pub fn brusselator_initial(grid: &Grid) -> Result<State> {
    use std::f64::consts::PI;
    if grid.dim() != 2 {
        return Err(SplitError::InvalidGrid(
            "Brusselator needs a 2-D grid".into(),
        ));
    }
    eval_on_grid(grid, 2, |c, p| {
        let (x, y) = (p[0], p[1]);
        match c {
            0 => 22.0 * y * (1.0 - y).powf(1.5) * (1.0 + (10.0 * PI * x).cos()),
            _ => 27.0 * x * (1.0 - x).powf(1.5) * (1.0 + (10.0 * PI * x).sin()),
        }
    })
}

impl SplitProblem for Brusselator {
    fn name(&self) -> &str {
        "brusselator"
    }

    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn n_components(&self) -> usize {
        2
    }

    fn linear_propagate(&self, sigma: Complex64, state: &State) -> Result<State> {
        if sigma == Complex64::new(0.0, 0.0) {
            return Ok(state.clone());
        }
        let alpha = self.params.alpha;
        let growth = (-sigma.re * alpha * self.max_k2).exp();
        if sigma.re < 0.0 && growth > self.params.max_growth {
            return Err(SplitError::Unstable(format!(
                "backward diffusion step sigma = {:.6e}{:+.6e}i amplifies the highest mode by {growth:.3e}", sigma.re, sigma.im
            )));
        }
        let table: Vec<Complex64> = self
            .laplacian
            .iter()
            .map(|&k2| (-sigma * alpha * k2).exp())
            .collect();
        apply_symbol_table(state, &table)
    }

    fn nonlinear_propagate(
        &self,
        sigma: Complex64,
        frozen: &State,
        state: &State,
        _tol: f64,
    ) -> Result<State> {
        state.ensure_same_shape(frozen)?;
        if sigma == Complex64::new(0.0, 0.0) {
            return Ok(state.clone());
        }
        let BrusselatorParams {
            beta, gamma, delta, ..
        } = self.params;
        let m = self.grid.total_points();
        let (us, vs) = (frozen.component(0), frozen.component(1));
        let (w1, w2) = (state.component(0), state.component(1));
        let pairs: Vec<[Complex64; 2]> = (0..m)
            .into_par_iter()
            .map(|j| {
                let a = us[j] * vs[j] - beta;
                let c = -us[j] * us[j];
                Self::node_flow(sigma, a, c, gamma, delta, [w1[j], w2[j]])
            })
            .collect();
        let mut data = Vec::with_capacity(2 * m);
        data.extend(pairs.iter().map(|p| p[0]));
        data.extend(pairs.iter().map(|p| p[1]));
        State::from_data(&self.grid, 2, data).map_err(|e| match e {
            SplitError::NonFinite(_) => {
                SplitError::Unstable(format!("reaction flow over sigma = {sigma} overflows"))
            }
            e => e,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{norm, NormKind};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn defaults() {
        let p = BrusselatorParams::default();
        assert_eq!((p.alpha, p.beta, p.gamma, p.delta), (1e-2, 4.4, 3.4, 1.0));
    }

    #[test]
    fn initial_vanishes_on_y_edges() {
        let b = Brusselator::new(BrusselatorParams::default(), 16).unwrap();
        let s = b.initial().unwrap();
        let g = b.grid();
        for ix in 0..16 {
            // iy = 0 is y = 0
            assert_eq!(s.component(0)[ix], c(0.0));
        }
        // y = 1 is not a node of [0,1); evaluate the formula's factor directly
        assert_eq!((1.0f64 - 1.0).powf(1.5), 0.0);
        let j = 3 + 16 * 5;
        let (x, y) = (g.coordinate(0, 3), g.coordinate(1, 5));
        let expect =
            27.0 * x * (1.0 - x).powf(1.5) * (1.0 + (10.0 * std::f64::consts::PI * x).sin());
        assert!((s.component(1)[j].re - expect).abs() < 1e-14);
        assert!(
            (s.component(0)[j].re
                - 22.0 * y * (1.0 - y).powf(1.5) * (1.0 + (10.0 * std::f64::consts::PI * x).cos()))
            .abs()
                < 1e-14
        );
    }

    #[test]
    fn zero_step_is_identity() {
        let b = Brusselator::new(BrusselatorParams::default(), 16).unwrap();
        let s = b.initial().unwrap();
        assert_eq!(b.linear_propagate(c(0.0), &s).unwrap(), s);
        assert_eq!(b.nonlinear_propagate(c(0.0), &s, &s, 0.0).unwrap(), s);
    }

    #[test]
    fn diffusion_keeps_constants_and_damps_modes() {
        let b = Brusselator::new(BrusselatorParams::default(), 16).unwrap();
        let one = eval_on_grid(b.grid(), 2, |_, _| 1.0).unwrap();
        let out = b.linear_propagate(c(0.3), &one).unwrap();
        assert!(out.distance(&one, NormKind::DiscreteInfinity).unwrap() < 1e-14);

        let (kx, ky) = (
            2.0 * std::f64::consts::PI * 2.0,
            2.0 * std::f64::consts::PI * 3.0,
        );
        let mode = eval_on_grid(b.grid(), 2, |_, p| {
            Complex64::new(0.0, kx * p[0] + ky * p[1]).exp()
        })
        .unwrap();
        let sigma = Complex64::new(0.2, 0.1);
        let out = b.linear_propagate(sigma, &mode).unwrap();
        let factor = (-sigma * 1e-2 * (kx * kx + ky * ky)).exp();
        for (o, m) in out.data().iter().zip(mode.data()) {
            assert!((o - factor * m).norm() < 1e-13);
        }
    }

    #[test]
    fn backward_diffusion_is_unstable() {
        let b = Brusselator::new(BrusselatorParams::default(), 16).unwrap();
        let s = b.initial().unwrap();
        let r = b.linear_propagate(c(-0.01), &s);
        assert!(matches!(r, Err(SplitError::Unstable(_))));
    }

    #[test]
    fn decoupled_reaction_matches_scalar_formula() {
        let (sigma, a, cc, delta) = (c(0.05), c(-1.7), c(-3.2), 1.0);
        let w = [c(0.4), c(-0.9)];
        let out = Brusselator::node_flow(sigma, a, cc, 0.0, delta, w);
        let first = (sigma * a).exp() * w[0] + delta * sigma * phi_k(1, sigma * a);
        assert!((out[0] - first).norm() < 1e-15);
        assert!((out[1] - (sigma * cc).exp() * w[1]).norm() < 1e-15);
    }

    #[test]
    fn reaction_flow_semigroup() {
        let b = Brusselator::new(BrusselatorParams::default(), 8).unwrap();
        let frozen = b.initial().unwrap();
        let w = eval_on_grid(b.grid(), 2, |c, p| 0.5 + p[0] - 0.3 * c as f64 * p[1]).unwrap();
        let sigma = Complex64::new(0.02, -0.01);
        let full = b.nonlinear_propagate(sigma, &frozen, &w, 0.0).unwrap();
        let h1 = b
            .nonlinear_propagate(0.5 * sigma, &frozen, &w, 0.0)
            .unwrap();
        let h2 = b
            .nonlinear_propagate(0.5 * sigma, &frozen, &h1, 0.0)
            .unwrap();
        let err = full.distance(&h2, NormKind::DiscreteInfinity).unwrap();
        assert!(err <= 1e-12 * norm(&full, NormKind::DiscreteInfinity).unwrap());
    }
}
