//! The φ-functions of exponential integrators and the divided differences
//! needed for the closed-form flow of triangular 2×2 systems.
//!
//! `φ_0(z) = e^z`, `φ_1(z) = (e^z - 1)/z` and `φ_k(z) = 1/k! + z φ_{k+1}(z)`.

use num_complex::Complex64;

const PHI1_TAYLOR_RADIUS: f64 = 1e-5;
const SERIES_RADIUS: f64 = 1.0;

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * j as f64)
}

/// `e^z - 1` without cancellation for small `|z|`.
pub fn expm1(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    let half_sin = (0.5 * y).sin();
    let re = x.exp_m1() * y.cos() - 2.0 * half_sin * half_sin;
    let im = x.exp() * y.sin();
    Complex64::new(re, im)
}

/// `Σ_{n≥0} z^n / (n+k)!`, used inside the unit disc.
fn phi_series(k: usize, z: Complex64) -> Complex64 {
    let mut term = Complex64::new(1.0 / factorial(k), 0.0);
    let mut sum = term;
    for n in 1..60 {
        term *= z / (n + k) as f64;
        sum += term;
        if term.norm() <= 1e-18 * sum.norm() {
            break;
        }
    }
    sum
}

/// `φ_k(z)` for any `k ≥ 0`.
pub fn phi_k(k: usize, z: Complex64) -> Complex64 {
    match k {
        0 => z.exp(),
        1 => {
            if z.norm() < PHI1_TAYLOR_RADIUS {
                // 1 + z/2 + z²/6 + z³/24 + z⁴/120 + z⁵/720
                let c = [1.0 / 720.0, 1.0 / 120.0, 1.0 / 24.0, 1.0 / 6.0, 0.5, 1.0];
                c.iter()
                    .fold(Complex64::new(0.0, 0.0), |acc, &ci| acc * z + ci)
            } else {
                expm1(z) / z
            }
        }
        _ => {
            if z.norm() < SERIES_RADIUS {
                phi_series(k, z)
            } else {
                let mut value = phi_k(1, z);
                for j in 1..k {
                    value = (value - 1.0 / factorial(j)) / z;
                }
                value
            }
        }
    }
}

/// `sinh(z)/z` with its Taylor expansion near zero.
pub fn sinhc(z: Complex64) -> Complex64 {
    if z.norm() < 1e-3 {
        let z2 = z * z;
        1.0 + z2 / 6.0 * (1.0 + z2 / 20.0 * (1.0 + z2 / 42.0))
    } else {
        z.sinh() / z
    }
}

/// `(e^x - e^y)/(x - y)`, continuous across `x = y`.
///
/// Written as `e^{(x+y)/2} sinhc((x-y)/2)`, which has no cancellation.
pub fn exp_divided_difference(x: Complex64, y: Complex64) -> Complex64 {
    let h = 0.5 * (x - y);
    if h.norm() > 300.0 {
        // far apart: no cancellation, and the product form would overflow
        return (x.exp() - y.exp()) / (x - y);
    }
    (0.5 * (x + y)).exp() * sinhc(h)
}

/// `(φ_1(x) - φ_1(y))/(x - y)`, continuous across `x = y`.
///
/// Close arguments use `e^m Σ_j h^{2j} φ_{2j+2}(-m)` with midpoint `m` and
/// half difference `h`.
pub fn phi1_divided_difference(x: Complex64, y: Complex64) -> Complex64 {
    if x.norm().max(y.norm()) <= SERIES_RADIUS {
        return phi1_divided_difference_series(x, y);
    }
    let h = 0.5 * (x - y);
    let m = 0.5 * (x + y);
    if h.norm() >= 0.5 || m.re.abs() > 300.0 {
        return (phi_k(1, x) - phi_k(1, y)) / (x - y);
    }
    let h2 = h * h;
    let mut power = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..12 {
        let term = power * phi_k(2 * j + 2, -m);
        sum += term;
        if term.norm() <= 1e-18 * sum.norm() {
            break;
        }
        power *= h2;
    }
    m.exp() * sum
}

/// `Σ_{n≥1} (x^n - y^n)/(x - y) / (n+1)!` for `|x|, |y| ≤ 1`; the quotients are
/// the complete symmetric polynomials `p_n = x p_{n-1} + y^{n-1}`.
fn phi1_divided_difference_series(x: Complex64, y: Complex64) -> Complex64 {
    let mut p = Complex64::new(1.0, 0.0);
    let mut y_pow = Complex64::new(1.0, 0.0);
    let mut inv_fact = 0.5;
    let mut sum = p * inv_fact;
    for n in 2..40 {
        y_pow *= y;
        p = x * p + y_pow;
        inv_fact /= (n + 1) as f64;
        let term = p * inv_fact;
        sum += term;
        if term.norm() <= 1e-18 * sum.norm() {
            break;
        }
    }
    sum
}
