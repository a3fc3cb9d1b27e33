//! Scalar Riccati test problem `u' = u²` split as `A = 0`, `b(u)w = u w`,
//! `d = 0`, evaluated independently at each node of a small grid.
//!
//! Both partial flows are exact and reversible, so backward steps are safe.
//! That makes it the testbed for round-trip defects and iterate limits.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Result, SplitError};
use crate::field::{eval_on_grid, Grid, State};
use crate::scheme::SplitProblem;

#[derive(Debug, Clone)]
pub struct ToyOde {
    grid: Grid,
}

pub const TOY_POINTS: usize = 8;

impl ToyOde {
    pub fn new() -> Self {
        ToyOde {
            grid: Grid::new_1d(TOY_POINTS, (0.0, 2.0 * PI)).expect("fixed toy grid is valid"),
        }
    }

    /// `1/2 + sin(x)/4`, so every node blows up only after `t = 4/3`.
    pub fn initial(&self) -> Result<State> {
        eval_on_grid(&self.grid, 1, |_, x| 0.5 + 0.25 * x[0].sin())
    }

    pub fn constant(&self, value: f64) -> Result<State> {
        eval_on_grid(&self.grid, 1, |_, _| value)
    }
}

impl Default for ToyOde {
    fn default() -> Self {
        Self::new()
    }
}

impl SplitProblem for ToyOde {
    fn name(&self) -> &str {
        "toy-ode"
    }

    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn n_components(&self) -> usize {
        1
    }

    fn linear_propagate(&self, _sigma: Complex64, state: &State) -> Result<State> {
        Ok(state.clone())
    }

    fn nonlinear_propagate(
        &self,
        sigma: Complex64,
        frozen: &State,
        state: &State,
        _tol: f64,
    ) -> Result<State> {
        state.ensure_same_shape(frozen)?;
        let data = state
            .data()
            .iter()
            .zip(frozen.data())
            .map(|(w, u)| w * (sigma * u).exp())
            .collect();
        State::from_data(&self.grid, 1, data)
    }

    /// `u0 / (1 - u0 t)` at every node.
    fn exact_solution(&self, t: f64, u0: &State) -> Option<Result<State>> {
        let data: Vec<Complex64> = u0.data().iter().map(|u| u / (1.0 - u * t)).collect();
        if u0.data().iter().any(|u| (1.0 - u * t).norm() < 1e-12) {
            return Some(Err(SplitError::NonFinite(format!(
                "toy solution blows up before t = {t}"
            ))));
        }
        Some(State::from_data(&self.grid, 1, data))
    }
}
