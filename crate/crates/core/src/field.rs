//! Periodic tensor grids, complex multi-component states, discrete norms and
//! Fourier multipliers.
//!
//! States are stored component-major: all nodes of component 0, then all
//! nodes of component 1, and so on. Within a component of a 2-D grid the
//! x index runs fastest (`j = ix + nx * iy`). Forward transforms are
//! unnormalized; inverse transforms carry the `1/N` factor per dimension.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, SplitError};

/// Smallest admissible number of points per dimension.
pub const MIN_POINTS: usize = 8;

/// Uniform periodic grid in one or two dimensions with the same number of
/// points along every axis.
#[derive(Clone)]
pub struct Grid {
    n: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    wavenumbers: Vec<Vec<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim())
            .field("n", &self.n)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.lower == other.lower && self.upper == other.upper
    }
}

/// FFT mode index `m` of storage slot `i` (standard layout, Nyquist negative).
fn mode_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Builds a `dim`-dimensional periodic grid with `n` points per dimension on
/// the half-open boxes given by `extents`.
pub fn build_grid(dim: usize, n: usize, extents: &[(f64, f64)]) -> Result<Grid> {
    if dim != 1 && dim != 2 {
        return Err(SplitError::InvalidGrid(format!(
            "dimension must be 1 or 2, got {dim}"
        )));
    }
    if extents.len() != dim {
        return Err(SplitError::InvalidGrid(format!(
            "expected {dim} extents, got {}",
            extents.len()
        )));
    }
    if n < MIN_POINTS || !n.is_power_of_two() {
        return Err(SplitError::InvalidGrid(format!(
            "points per dimension must be a power of two >= {MIN_POINTS}, got {n}"
        )));
    }
    for &(a, b) in extents {
        if !a.is_finite() || !b.is_finite() || b <= a {
            return Err(SplitError::InvalidGrid(format!(
                "degenerate extent [{a}, {b})"
            )));
        }
    }

    let wavenumbers = extents
        .iter()
        .map(|&(a, b)| {
            let length = b - a;
            (0..n)
                .map(|i| 2.0 * std::f64::consts::PI * mode_index(i, n) as f64 / length)
                .collect()
        })
        .collect();

    let mut planner = FftPlanner::new();
    Ok(Grid {
        n,
        lower: extents.iter().map(|e| e.0).collect(),
        upper: extents.iter().map(|e| e.1).collect(),
        wavenumbers,
        forward: planner.plan_fft_forward(n),
        inverse: planner.plan_fft_inverse(n),
    })
}

impl Grid {
    pub fn new_1d(n: usize, extent: (f64, f64)) -> Result<Grid> {
        build_grid(1, n, &[extent])
    }

    pub fn new_2d(n: usize, x: (f64, f64), y: (f64, f64)) -> Result<Grid> {
        build_grid(2, n, &[x, y])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn points_per_dim(&self) -> usize {
        self.n
    }

    pub fn total_points(&self) -> usize {
        self.n.pow(self.dim() as u32)
    }

    pub fn extent(&self, axis: usize) -> (f64, f64) {
        (self.lower[axis], self.upper[axis])
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.length(axis) / self.n as f64
    }

    /// Product of the spacings, the quadrature weight of the discrete L² norm.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|d| self.spacing(d)).product()
    }

    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.wavenumbers[axis]
    }

    pub fn coordinate(&self, axis: usize, index: usize) -> f64 {
        self.lower[axis] + index as f64 * self.spacing(axis)
    }

    /// Coordinates of node `j` in storage order.
    pub fn node(&self, j: usize, out: &mut [f64]) {
        match self.dim() {
            1 => out[0] = self.coordinate(0, j),
            _ => {
                out[0] = self.coordinate(0, j % self.n);
                out[1] = self.coordinate(1, j / self.n);
            }
        }
    }

    /// Wavenumber vector of spectral slot `j` in storage order.
    pub fn wavevector(&self, j: usize, out: &mut [f64]) {
        match self.dim() {
            1 => out[0] = self.wavenumbers[0][j],
            _ => {
                out[0] = self.wavenumbers[0][j % self.n];
                out[1] = self.wavenumbers[1][j / self.n];
            }
        }
    }

    /// Evaluates `f` at every spectral slot, in storage order.
    pub fn symbol_table<F>(&self, f: F) -> Vec<Complex64>
    where
        F: Fn(&[f64]) -> Complex64,
    {
        let mut k = [0.0; 2];
        (0..self.total_points())
            .map(|j| {
                self.wavevector(j, &mut k[..self.dim()]);
                f(&k[..self.dim()])
            })
            .collect()
    }

    /// Unnormalized forward transform of one component, in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform of one component including the `1/N` factors.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        debug_assert_eq!(data.len(), self.total_points());
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // rows along x are contiguous and processed as one batch
        plan.process_with_scratch(data, &mut scratch);
        if self.dim() == 2 {
            let n = self.n;
            let mut columns = vec![Complex64::default(); data.len()];
            for iy in 0..n {
                for ix in 0..n {
                    columns[ix * n + iy] = data[iy * n + ix];
                }
            }
            plan.process_with_scratch(&mut columns, &mut scratch);
            for ix in 0..n {
                for iy in 0..n {
                    data[iy * n + ix] = columns[ix * n + iy];
                }
            }
        }
    }
}

/// Complex multi-component field on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    grid: Grid,
    n_components: usize,
    data: Vec<Complex64>,
}

impl State {
    pub fn zeros(grid: &Grid, n_components: usize) -> State {
        State {
            grid: grid.clone(),
            n_components,
            data: vec![Complex64::default(); n_components * grid.total_points()],
        }
    }

    /// Wraps component-major data, rejecting wrong lengths and non-finite entries.
    pub fn from_data(grid: &Grid, n_components: usize, data: Vec<Complex64>) -> Result<State> {
        if n_components == 0 {
            return Err(SplitError::ShapeMismatch(
                "state needs at least one component".into(),
            ));
        }
        let expected = n_components * grid.total_points();
        if data.len() != expected {
            return Err(SplitError::ShapeMismatch(format!(
                "expected {expected} entries, got {}",
                data.len()
            )));
        }
        let state = State {
            grid: grid.clone(),
            n_components,
            data,
        };
        state.ensure_finite("state data")?;
        Ok(state)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let m = self.grid.total_points();
        &self.data[c * m..(c + 1) * m]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let m = self.grid.total_points();
        &mut self.data[c * m..(c + 1) * m]
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn ensure_finite(&self, context: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(SplitError::NonFinite(context.to_string()))
        }
    }

    pub fn same_shape(&self, other: &State) -> bool {
        self.n_components == other.n_components && self.grid == other.grid
    }

    pub fn ensure_same_shape(&self, other: &State) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(SplitError::ShapeMismatch(format!(
                "{} components on {:?} vs {} components on {:?}",
                self.n_components, self.grid, other.n_components, other.grid
            )))
        }
    }

    /// `self - other`.
    pub fn difference(&self, other: &State) -> Result<State> {
        self.ensure_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(State {
            grid: self.grid.clone(),
            n_components: self.n_components,
            data,
        })
    }

    /// `a * self + b * other`.
    pub fn linear_combination(&self, a: Complex64, other: &State, b: Complex64) -> Result<State> {
        self.ensure_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(State {
            grid: self.grid.clone(),
            n_components: self.n_components,
            data,
        })
    }

    /// Drops imaginary parts.
    pub fn project_real(&mut self) {
        self.data.iter_mut().for_each(|z| z.im = 0.0);
    }

    /// Largest imaginary part in magnitude.
    pub fn max_imaginary(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    /// Norm of `self - other`.
    pub fn distance(&self, other: &State, kind: NormKind) -> Result<f64> {
        norm(&self.difference(other)?, kind)
    }
}

/// Discrete norms taken over all components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    DiscreteInfinity,
    DiscreteL2,
}

impl NormKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NormKind::DiscreteInfinity => "inf",
            NormKind::DiscreteL2 => "l2",
        }
    }
}

impl std::str::FromStr for NormKind {
    type Err = SplitError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" => Ok(NormKind::DiscreteInfinity),
            "l2" => Ok(NormKind::DiscreteL2),
            other => Err(SplitError::Parse(format!("unknown norm {other:?}"))),
        }
    }
}

/// Samples `f(component, coordinates)` at every node.
pub fn eval_on_grid<F, T>(grid: &Grid, n_components: usize, f: F) -> Result<State>
where
    F: Fn(usize, &[f64]) -> T,
    T: Into<Complex64>,
{
    let m = grid.total_points();
    let mut data = Vec::with_capacity(n_components * m);
    let mut x = [0.0; 2];
    for c in 0..n_components {
        for j in 0..m {
            grid.node(j, &mut x[..grid.dim()]);
            data.push(f(c, &x[..grid.dim()]).into());
        }
    }
    State::from_data(grid, n_components, data)
}

/// Discrete norm of a state; the L² variant is weighted by the cell volume.
pub fn norm(state: &State, kind: NormKind) -> Result<f64> {
    state.ensure_finite("norm input")?;
    let value = match kind {
        NormKind::DiscreteInfinity => state.data.iter().fold(0.0_f64, |m, z| m.max(z.norm())),
        NormKind::DiscreteL2 => {
            let sum: f64 = state.data.iter().map(|z| z.norm_sqr()).sum();
            (state.grid.cell_volume() * sum).sqrt()
        }
    };
    Ok(value)
}

/// Applies the Fourier multiplier `symbol(component, k)` to every component.
pub fn apply_multiplier<F>(state: &State, symbol: F) -> Result<State>
where
    F: Fn(usize, &[f64]) -> Complex64,
{
    let grid = state.grid();
    let tables: Vec<Vec<Complex64>> = (0..state.n_components)
        .map(|c| grid.symbol_table(|k| symbol(c, k)))
        .collect();
    let refs: Vec<&[Complex64]> = tables.iter().map(Vec::as_slice).collect();
    apply_symbol_tables(state, &refs)
}

/// Applies one precomputed symbol table to every component.
pub fn apply_symbol_table(state: &State, table: &[Complex64]) -> Result<State> {
    let refs = vec![table; state.n_components];
    apply_symbol_tables(state, &refs)
}

fn apply_symbol_tables(state: &State, tables: &[&[Complex64]]) -> Result<State> {
    let grid = state.grid();
    if tables.iter().any(|t| t.len() != grid.total_points()) {
        return Err(SplitError::ShapeMismatch("symbol table length".into()));
    }
    if tables
        .iter()
        .any(|t| t.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()))
    {
        return Err(SplitError::Unstable(
            "Fourier multiplier overflows on the grid's wavenumbers".into(),
        ));
    }
    let mut out = state.clone();
    for (c, table) in tables.iter().enumerate() {
        let buf = out.component_mut(c);
        grid.forward(buf);
        buf.iter_mut().zip(table.iter()).for_each(|(z, s)| *z *= s);
        grid.inverse(buf);
    }
    out.ensure_finite("multiplier output")?;
    Ok(out)
}
