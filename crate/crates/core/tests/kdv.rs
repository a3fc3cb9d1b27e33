mod common;

use common::{c, slope};
use strang_split::field::{NormKind, State};
use strang_split::problems::{kdv_soliton_exact, KdV, KdVConfig};
use strang_split::scheme::*;

fn soliton(n: usize, tol: f64) -> (KdV, State) {
    let kdv = KdV::new(KdVConfig::soliton().with_n(n).with_inner_tol(tol)).unwrap();
    let u0 = kdv.initial().unwrap();
    (kdv, u0)
}

#[test]
fn transport_solve_meets_its_tolerance() {
    let (kdv, u0) = soliton(256, 1e-10);
    let sigma = c(2e-3, 0.0);
    let coarse = kdv.nonlinear_propagate(sigma, &u0, &u0, 1e-10).unwrap();
    let fine = kdv.nonlinear_propagate(sigma, &u0, &u0, 5e-13).unwrap();
    let gap = coarse.distance(&fine, NormKind::DiscreteL2).unwrap();
    assert!(
        gap <= 10.0
            * 1e-10
            * u0.distance(&State::zeros(kdv.grid(), 1), NormKind::DiscreteL2)
                .unwrap(),
        "{gap:.3e}"
    );
}

#[test]
fn transport_keeps_values_in_range() {
    let (kdv, u0) = soliton(512, 1e-12);
    let w = kdv
        .nonlinear_propagate(c(5e-3, 0.0), &u0, &u0, 1e-12)
        .unwrap();
    let max0 = u0.data().iter().map(|z| z.re).fold(f64::MIN, f64::max);
    let min0 = u0.data().iter().map(|z| z.re).fold(f64::MAX, f64::min);
    let max = w.data().iter().map(|z| z.re).fold(f64::MIN, f64::max);
    let min = w.data().iter().map(|z| z.re).fold(f64::MAX, f64::min);
    assert!(
        max <= max0 + 1e-6 && min >= min0 - 1e-6,
        "[{min}, {max}] vs [{min0}, {max0}]"
    );
    assert!(w.max_imaginary() <= 1e-12);
}

#[test]
fn strang_local_error_is_third_order() {
    let (kdv, u0) = soliton(512, 1e-13);
    let taus = [8e-3, 4e-3, 2e-3, 1e-3];
    let errs: Vec<f64> = taus
        .iter()
        .map(|&t| {
            let u = strang_step(&kdv, c(t, 0.0), &u0, 1e-13).unwrap();
            let exact = kdv_soliton_exact(t, kdv.grid()).unwrap();
            u.distance(&exact, NormKind::DiscreteL2).unwrap()
        })
        .collect();
    let p = slope(&taus, &errs);
    assert!(p >= 2.8, "local slope {p} from {errs:?}");
}

#[test]
fn exact_soliton_is_periodic_in_the_domain() {
    let kdv = KdV::new(KdVConfig::soliton().with_n(256)).unwrap();
    let a = kdv_soliton_exact(0.0, kdv.grid()).unwrap();
    // one full lap of a length-40 domain at speed 4
    let b = kdv_soliton_exact(10.0, kdv.grid()).unwrap();
    assert!(a.distance(&b, NormKind::DiscreteInfinity).unwrap() < 1e-12);
    assert!(
        a.distance(&kdv.initial().unwrap(), NormKind::DiscreteInfinity)
            .unwrap()
            < 1e-12
    );
}

#[test]
fn names_follow_the_initial_value() {
    assert_eq!(
        KdV::new(KdVConfig::soliton().with_n(64)).unwrap().name(),
        "kdv-soliton"
    );
    assert_eq!(
        KdV::new(KdVConfig::schwartzian().with_n(64))
            .unwrap()
            .name(),
        "kdv-schwartz"
    );
    let s = KdV::new(KdVConfig::schwartzian().with_n(64)).unwrap();
    let u0 = s.initial().unwrap();
    assert!(s.exact_solution(0.1, &u0).is_none());
}

#[test]
fn bad_configs_are_rejected() {
    assert!(KdV::new(KdVConfig::soliton().with_inner_tol(0.0)).is_err());
    assert!(KdV::new(KdVConfig::soliton().with_n(4)).is_err());
}
