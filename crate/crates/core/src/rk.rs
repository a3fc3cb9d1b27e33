//! Adaptive Dormand–Prince 5(4) integrator for complex vector systems.
//!
//! Used to evaluate partial flows that have no closed form. The system
//! `y' = σ f(y)` is integrated over the unit interval, so the sign (or phase)
//! of `σ` never enters the step-size logic.

use num_complex::Complex64;

use crate::error::{Result, SplitError};

// the systems integrated here are autonomous, so the nodes c_i are not needed
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Step-size controller settings.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
    /// Upper bound on the step in the unit time variable, e.g. from a
    /// stability limit the error estimate cannot see.
    pub max_step: f64,
}

impl Tolerances {
    pub fn uniform(tol: f64) -> Self {
        Tolerances {
            atol: tol,
            rtol: tol,
            max_steps: 1_000_000,
            max_step: 1.0,
        }
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step.min(1.0);
        self
    }
}

/// Counters from one integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RkStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

fn error_norm(y: &[Complex64], y_new: &[Complex64], err: &[Complex64], tol: &Tolerances) -> f64 {
    let sum: f64 = y
        .iter()
        .zip(y_new)
        .zip(err)
        .map(|((a, b), e)| {
            let sc = tol.atol + tol.rtol * a.norm().max(b.norm());
            (e.norm() / sc).powi(2)
        })
        .sum();
    (sum / y.len() as f64).sqrt()
}

fn rms_scaled(v: &[Complex64], y: &[Complex64], tol: &Tolerances) -> f64 {
    let sum: f64 = v
        .iter()
        .zip(y)
        .map(|(a, b)| (a.norm() / (tol.atol + tol.rtol * b.norm())).powi(2))
        .sum();
    (sum / v.len() as f64).sqrt()
}

/// Integrates `y' = sigma * f(y)` from `y0` over one unit of time.
///
/// `f(y, out)` writes the right-hand side into `out`.
pub fn integrate<F>(
    mut f: F,
    sigma: Complex64,
    y0: &[Complex64],
    tol: Tolerances,
) -> Result<(Vec<Complex64>, RkStats)>
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    let n = y0.len();
    let mut stats = RkStats::default();
    let mut rhs = |y: &[Complex64], out: &mut [Complex64], stats: &mut RkStats| {
        f(y, out);
        out.iter_mut().for_each(|z| *z *= sigma);
        stats.evaluations += 1;
    };

    let mut y = y0.to_vec();
    let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); n]; 7];
    rhs(&y, &mut k[0], &mut stats);

    // initial step from the first two derivative estimates
    let mut stage = vec![Complex64::default(); n];
    let d0 = rms_scaled(&y, &y, &tol);
    let d1 = rms_scaled(&k[0], &y, &tol);
    let mut h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h = h.min(1.0);
    for (s, (yi, ki)) in stage.iter_mut().zip(y.iter().zip(&k[0])) {
        *s = yi + h * ki;
    }
    rhs(&stage, &mut k[1], &mut stats);
    let diff: Vec<Complex64> = k[1].iter().zip(&k[0]).map(|(a, b)| (a - b) / h).collect();
    let d2 = rms_scaled(&diff, &y, &tol);
    let h1 = if d1.max(d2) <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    h = (100.0 * h).min(h1).min(tol.max_step);

    let mut t = 0.0;
    let mut y_new = vec![Complex64::default(); n];
    let mut err = vec![Complex64::default(); n];
    let mut last_rejected = false;

    while t < 1.0 {
        if stats.accepted + stats.rejected >= tol.max_steps {
            return Err(SplitError::FlowFailure(format!(
                "inner integrator exceeded {} steps",
                tol.max_steps
            )));
        }
        if h < 1e-14 {
            return Err(SplitError::FlowFailure(format!(
                "inner step size underflow at t = {t}"
            )));
        }
        let last = t + h >= 1.0 - 1e-14;
        if last {
            h = 1.0 - t;
        }

        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc += h * a * kj[i];
                    }
                }
                stage[i] = acc;
            }
            if s == 6 {
                y_new.copy_from_slice(&stage);
            }
            rhs(&stage, &mut k[s], &mut stats);
        }
        for i in 0..n {
            let mut e = Complex64::default();
            for (s, ks) in k.iter().enumerate() {
                if E[s] != 0.0 {
                    e += E[s] * ks[i];
                }
            }
            err[i] = h * e;
        }

        let en = error_norm(&y, &y_new, &err, &tol);
        if !en.is_finite() {
            return Err(SplitError::FlowFailure("non-finite inner solution".into()));
        }
        if en <= 1.0 {
            t = if last { 1.0 } else { t + h };
            std::mem::swap(&mut y, &mut y_new);
            // first-same-as-last
            let (first, rest) = k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            stats.accepted += 1;
            let mut factor = 0.9 * en.max(1e-10).powf(-0.2);
            factor = factor.clamp(0.2, 5.0);
            if last_rejected {
                factor = factor.min(1.0);
            }
            h = (h * factor).min(tol.max_step);
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h *= (0.9 * en.powf(-0.2)).max(0.2);
            last_rejected = true;
        }
    }
    Ok((y, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let lambda = Complex64::new(-2.0, 3.0);
        let (y, stats) = integrate(
            |y, out| out[0] = lambda * y[0],
            Complex64::new(0.7, 0.0),
            &[Complex64::new(1.0, 0.0)],
            Tolerances::uniform(1e-12),
        )
        .unwrap();
        let exact = (0.7 * lambda).exp();
        assert!((y[0] - exact).norm() < 1e-11, "{}", (y[0] - exact).norm());
        assert!(stats.accepted > 0);
    }

    #[test]
    fn negative_time_runs_backwards() {
        let (y, _) = integrate(
            |y, out| out[0] = -y[0],
            Complex64::new(-1.0, 0.0),
            &[Complex64::new(1.0, 0.0)],
            Tolerances::uniform(1e-12),
        )
        .unwrap();
        assert!((y[0].re - std::f64::consts::E).abs() < 1e-10);
    }

    #[test]
    fn harmonic_oscillator_order() {
        // y'' = -y as a system
        let run = |tol: f64| {
            integrate(
                |y, out| {
                    out[0] = y[1];
                    out[1] = -y[0];
                },
                Complex64::new(10.0, 0.0),
                &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
                Tolerances::uniform(tol),
            )
            .unwrap()
        };
        let (y, s) = run(1e-12);
        assert!((y[0].re - 10f64.cos()).abs() < 1e-10);
        let (_, s_loose) = run(1e-6);
        assert!(s_loose.accepted < s.accepted);
    }

    #[test]
    fn step_limit_is_reported() {
        let tol = Tolerances {
            max_steps: 3,
            ..Tolerances::uniform(1e-14)
        };
        let r = integrate(
            |y, out| out[0] = Complex64::new(0.0, 50.0) * y[0],
            Complex64::new(1.0, 0.0),
            &[Complex64::new(1.0, 0.0)],
            tol,
        );
        assert!(matches!(r, Err(SplitError::FlowFailure(_))));
    }
}
