#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use strang_split::error::Result;
use strang_split::field::{apply_multiplier, Grid, State};
use strang_split::scheme::SplitProblem;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_state(grid: &Grid, ncomp: usize, seed: u64) -> State {
    let mut r = rng(seed);
    let data = (0..ncomp * grid.total_points())
        .map(|_| c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
        .collect();
    State::from_data(grid, ncomp, data).unwrap()
}

/// `e^M` by Taylor series with scaling and squaring.
pub fn expm(m: &DMatrix<C>) -> DMatrix<C> {
    let norm: f64 = m.iter().map(|z| z.norm()).sum();
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m / C::new(2f64.powi(squarings as i32), 0.0);
    let n = m.nrows();
    let mut result = DMatrix::<C>::identity(n, n);
    let mut term = DMatrix::<C>::identity(n, n);
    for k in 1..30 {
        term = &term * &scaled / C::new(k as f64, 0.0);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// `u' = Au + Bu` on eight unknowns with dense constant matrices, split as
/// `e^{σA}` and `b(·) ≡ B`, `d = 0`.
pub struct DenseLinear {
    pub grid: Grid,
    pub a: DMatrix<C>,
    pub b: DMatrix<C>,
}

impl DenseLinear {
    pub fn random(seed: u64) -> Self {
        let mut r = rng(seed);
        let mut m = || DMatrix::<C>::from_fn(8, 8, |_, _| c(r.gen_range(-1.0..1.0), 0.0));
        DenseLinear {
            grid: Grid::new_1d(8, (0.0, 1.0)).unwrap(),
            a: m(),
            b: m(),
        }
    }

    pub fn apply(&self, m: &DMatrix<C>, s: &State) -> Result<State> {
        let v = m * DVector::from_column_slice(s.data());
        State::from_data(&self.grid, 1, v.as_slice().to_vec())
    }
}

impl SplitProblem for DenseLinear {
    fn name(&self) -> &str {
        "dense-linear"
    }
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn n_components(&self) -> usize {
        1
    }
    fn linear_propagate(&self, sigma: C, state: &State) -> Result<State> {
        self.apply(&expm(&(&self.a * sigma)), state)
    }
    fn nonlinear_propagate(
        &self,
        sigma: C,
        _frozen: &State,
        state: &State,
        _tol: f64,
    ) -> Result<State> {
        self.apply(&expm(&(&self.b * sigma)), state)
    }
}

/// `u_t = -u_xxx` with `b ≡ 0`, `d = 0`: every scheme reproduces `e^{tA}`.
pub struct LinearOnly {
    pub grid: Grid,
}

impl LinearOnly {
    pub fn new(n: usize) -> Self {
        LinearOnly {
            grid: Grid::new_1d(n, (0.0, 2.0 * std::f64::consts::PI)).unwrap(),
        }
    }

    pub fn exact(&self, t: f64, u0: &State) -> State {
        self.linear_propagate(c(t, 0.0), u0).unwrap()
    }
}

impl SplitProblem for LinearOnly {
    fn name(&self) -> &str {
        "linear-only"
    }
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn n_components(&self) -> usize {
        1
    }
    fn linear_propagate(&self, sigma: C, state: &State) -> Result<State> {
        apply_multiplier(state, |_, k| (c(0.0, 1.0) * sigma * k[0].powi(3)).exp())
    }
    fn nonlinear_propagate(
        &self,
        _sigma: C,
        _frozen: &State,
        state: &State,
        _tol: f64,
    ) -> Result<State> {
        Ok(state.clone())
    }
    fn exact_solution(&self, t: f64, u0: &State) -> Option<Result<State>> {
        Some(Ok(self.exact(t, u0)))
    }
}

/// Least-squares slope of `log y` against `log x`, written out independently
/// of the library's fit.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}

/// Naive `O(n²)` discrete Fourier transform, unnormalized forward.
pub fn dft(x: &[C], inverse: bool) -> Vec<C> {
    let n = x.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut out: Vec<C> = (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(j, v)| {
                    v * C::from_polar(
                        1.0,
                        sign * 2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64,
                    )
                })
                .sum()
        })
        .collect();
    if inverse {
        out.iter_mut().for_each(|v| *v /= n as f64);
    }
    out
}

/// Unevaluated sum `hi + lo` of two doubles.
#[derive(Clone, Copy, Debug)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    Dd {
        hi: s,
        lo: (a - (s - bb)) + (b - bb),
    }
}

fn quick(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd {
        hi: s,
        lo: b - (s - a),
    }
}

impl Dd {
    pub fn new(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }
    pub fn add(self, o: Dd) -> Dd {
        let s = two_sum(self.hi, o.hi);
        quick(s.hi, s.lo + self.lo + o.lo)
    }
    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
    pub fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        quick(p, e + self.hi * o.lo + self.lo * o.hi)
    }
    pub fn div_f64(self, d: f64) -> Dd {
        let q = self.hi / d;
        let r = self.add(Dd::new(q).mul(Dd::new(d)).neg());
        quick(q, r.hi / d)
    }
}

/// `φ_k(z) = Σ_j z^j / (j+k)!` summed in double-double until the terms drop
/// below 1e-32 of the partial sum. Meant for small `|z|`.
pub fn phi_series_dd(k: usize, z: C) -> (Dd, Dd) {
    let (zr, zi) = (Dd::new(z.re), Dd::new(z.im));
    let mut fact = 1.0;
    for j in 2..=k {
        fact *= j as f64;
    }
    let mut term = (Dd::new(1.0).div_f64(fact), Dd::new(0.0));
    let mut sum = term;
    for j in 1..200 {
        let re = term.0.mul(zr).add(term.1.mul(zi).neg());
        let im = term.0.mul(zi).add(term.1.mul(zr));
        let d = (j + k) as f64;
        term = (re.div_f64(d), im.div_f64(d));
        sum = (sum.0.add(term.0), sum.1.add(term.1));
        if term.0.hi.abs() + term.1.hi.abs() < 1e-32 * (sum.0.hi.abs() + sum.1.hi.abs()) {
            break;
        }
    }
    sum
}

/// Cash–Karp embedded 4(5) pair with per-step error control, integrating
/// `y' = f(y)` from 0 to `t_end`.
pub fn cash_karp(f: impl Fn(&[C]) -> Vec<C>, y0: &[C], t_end: f64, tol: f64) -> Vec<C> {
    const A: [[f64; 5]; 5] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0],
        [3.0 / 10.0, -9.0 / 10.0, 6.0 / 5.0, 0.0, 0.0],
        [-11.0 / 54.0, 5.0 / 2.0, -70.0 / 27.0, 35.0 / 27.0, 0.0],
        [
            1631.0 / 55296.0,
            175.0 / 512.0,
            575.0 / 13824.0,
            44275.0 / 110592.0,
            253.0 / 4096.0,
        ],
    ];
    const B5: [f64; 6] = [
        37.0 / 378.0,
        0.0,
        250.0 / 621.0,
        125.0 / 594.0,
        0.0,
        512.0 / 1771.0,
    ];
    const B4: [f64; 6] = [
        2825.0 / 27648.0,
        0.0,
        18575.0 / 48384.0,
        13525.0 / 55296.0,
        277.0 / 14336.0,
        1.0 / 4.0,
    ];
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = 0.0;
    let mut h = t_end / 64.0;
    while t < t_end {
        h = h.min(t_end - t);
        let mut k: Vec<Vec<C>> = vec![f(&y)];
        for row in A.iter() {
            let stage: Vec<C> = (0..n)
                .map(|j| y[j] + h * (0..k.len()).map(|s| row[s] * k[s][j]).sum::<C>())
                .collect();
            k.push(f(&stage));
        }
        let hi: Vec<C> = (0..n)
            .map(|j| y[j] + h * (0..6).map(|s| B5[s] * k[s][j]).sum::<C>())
            .collect();
        let err = (0..n)
            .map(|j| {
                (h * (0..6).map(|s| (B5[s] - B4[s]) * k[s][j]).sum::<C>()).norm()
                    / (1.0 + hi[j].norm())
            })
            .fold(0.0, f64::max);
        if err <= tol {
            t += h;
            y = hi;
        }
        h *= (0.9 * (tol / err.max(1e-300)).powf(0.2)).clamp(0.2, 5.0);
    }
    y
}

pub struct Sample {
    pub sigma: C,
    pub a: C,
    pub cc: C,
    pub w: [C; 2],
}

/// Coefficients in the range the reaction produces for bounded data. One in
/// ten samples has `0 < |a - c| ≤ 1e-9` and one in ten has `a = c`.
pub fn brusselator_samples(count: usize, seed: u64) -> Vec<Sample> {
    let mut r = rng(seed);
    (0..count)
        .map(|i| {
            let sigma = c(r.gen_range(1e-4..0.1), r.gen_range(-0.05..0.05));
            let u: f64 = r.gen_range(0.0..6.0);
            let v: f64 = r.gen_range(0.0..6.0);
            let a = c(u * v - 4.4, 0.0);
            let cc = if i % 10 == 0 {
                a + c(r.gen_range(-1e-9..1e-9), 0.0)
            } else if i % 10 == 1 {
                a
            } else {
                c(-u * u, 0.0)
            };
            let w = [c(r.gen_range(0.0..6.0), 0.0), c(r.gen_range(0.0..6.0), 0.0)];
            Sample { sigma, a, cc, w }
        })
        .collect()
}
