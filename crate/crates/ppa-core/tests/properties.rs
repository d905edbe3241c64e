use nalgebra::DVector;
use proptest::prelude::*;

use ppa_core::iteration::{iterate, StopRule};
use ppa_core::operator::{alm_embedding, drs_embedding, soft_threshold, Prox, ProxFunction};
use ppa_core::resolvent::{self, Strategy as Solver};
use ppa_core::splitting::{alm_step, drs_step, AlmState, DrsState};

fn vec_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, n)
}

fn functions() -> impl Strategy<Value = ProxFunction> {
    prop_oneof![
        (0.1..3.0f64).prop_map(ProxFunction::abs),
        (0.1..3.0f64, -5.0..5.0f64).prop_map(|(s, c)| ProxFunction::shifted_square(s, &[c])),
        Just(ProxFunction::Zero { dim: 1 }),
        (-2.0..2.0f64).prop_map(|c| ProxFunction::linear(&[c], 1.0)),
    ]
}

fn run_fixed(a: &ppa_core::operator::SetValuedOp, q: &ppa_core::Metric, x0: &DVector<f64>, strategy: Solver, k: usize) -> Vec<DVector<f64>> {
    let stop = StopRule { max_iters: k, q_res_tol: 0.0, full_res_tol: None };
    iterate(a, q, x0, strategy, stop).unwrap().iterates
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn drs_embedding_matches_direct_steps(f in functions(), g in functions(), tau in 0.2..3.0f64, z0 in -10.0..10.0f64) {
        let (a, q) = drs_embedding(&f, &g, tau).unwrap();
        let generic = run_fixed(&a, &q, &DVector::from_vec(vec![0.0, 0.0, z0]), Solver::Cascade, 100);
        let mut s = DrsState::from_z(DVector::from_vec(vec![z0]));
        for x in generic.iter().skip(1) {
            s = drs_step(&f, &g, tau, &s).unwrap();
            prop_assert!((x - s.stacked()).amax() <= 1e-10, "{x} vs {}", s.stacked());
        }
    }

    #[test]
    fn alm_embedding_matches_direct_steps(f in functions(), tau in 0.2..3.0f64, b in -5.0..5.0f64, p0 in -10.0..10.0f64) {
        let bv = DVector::from_vec(vec![b]);
        let (a, q) = alm_embedding(&f, &bv, tau).unwrap();
        let generic = run_fixed(&a, &q, &DVector::from_vec(vec![0.0, p0]), Solver::Cascade, 100);
        let mut s = AlmState { q: DVector::zeros(1), p: DVector::from_vec(vec![p0]) };
        for x in generic.iter().skip(1) {
            s = alm_step(&f, &bv, tau, &s).unwrap();
            prop_assert!((x - s.stacked()).amax() <= 1e-10, "{x} vs {}", s.stacked());
        }
    }

    #[test]
    fn prox_is_firmly_nonexpansive(w in 0.1..3.0f64, tau in 0.1..5.0f64, x in vec_strategy(3), y in vec_strategy(3)) {
        let (x, y) = (DVector::from_vec(x), DVector::from_vec(y));
        for f in [ProxFunction::OneNorm { weight: w, dim: 3 }, ProxFunction::shifted_square(w, &[1.0, -2.0, 0.5])] {
            let (px, py) = (f.prox(tau, &x).unwrap(), f.prox(tau, &y).unwrap());
            let lhs = (&px - &py).norm_squared() + ((&x - &px) - (&y - &py)).norm_squared();
            prop_assert!(lhs <= (&x - &y).norm_squared() + 1e-9);
        }
    }

    #[test]
    fn abs_prox_is_soft_threshold(w in 0.0..3.0f64, tau in 0.1..5.0f64, z in -10.0..10.0f64) {
        let p = ProxFunction::abs(w).prox(tau, &DVector::from_vec(vec![z])).unwrap();
        prop_assert_eq!(p[0], soft_threshold(z, tau * w));
    }

    #[test]
    fn embedding_resolvent_is_q_firmly_nonexpansive(tau in 0.2..3.0f64, x in vec_strategy(3), y in vec_strategy(3)) {
        let (a, q) = drs_embedding(&ProxFunction::abs(1.0), &ProxFunction::shifted_square(1.0, &[3.0]), tau).unwrap();
        let (x, y) = (DVector::from_vec(x), DVector::from_vec(y));
        let tx = resolvent::solve(&a, &q, &x, Solver::Auto).unwrap().element().unwrap().clone();
        let ty = resolvent::solve(&a, &q, &y, Solver::Auto).unwrap().element().unwrap().clone();
        let lhs = q.seminorm_sq(&(&tx - &ty)).unwrap() + q.seminorm_sq(&((&x - &tx) - (&y - &ty))).unwrap();
        prop_assert!(lhs <= q.seminorm_sq(&(&x - &y)).unwrap() + 1e-9);
    }
}
