use nalgebra::{DMatrix, DVector};

use super::*;
use crate::operator::{
    alm_embedding, drs_embedding, l1_problem_operator, lower_triangular_example, soft_threshold, Builtin2D, RangeDescription,
};

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

fn lasso_drs(tau: f64) -> (SetValuedOp, Metric) {
    drs_embedding(&ProxFunction::abs(1.0), &ProxFunction::shifted_square(1.0, &[3.0]), tau).unwrap()
}

fn alm(tau: f64) -> (SetValuedOp, Metric) {
    alm_embedding(&ProxFunction::half_square(1), &v(&[2.0]), tau).unwrap()
}

fn builtin(b: Builtin2D) -> (SetValuedOp, Metric) {
    (SetValuedOp::Graph2D(b), b.default_metric())
}

#[test]
fn restricted_monotone_on_embeddings() {
    for (a, q) in [lasso_drs(1.0), alm(1.0)] {
        let sampler = GraphSampler::restricted(VectorSampler::cube(q.dim(), 5.0), &q);
        let r = check_restricted_monotonicity(&a, &q, &sampler, 1000, 3).unwrap();
        assert!(r.passes(), "{r:?}");
        assert_eq!(r.n_samples, 1000);
    }
}

#[test]
fn lower_triangular_is_only_restricted_monotone() {
    let f = ProxFunction::half_square(1);
    let (a, q) = lower_triangular_example(&f, &f, &DMatrix::from_element(1, 1, 3.0)).unwrap();
    let region = VectorSampler::cube(2, 5.0);
    let restricted = check_restricted_monotonicity(&a, &q, &GraphSampler::restricted(region.clone(), &q), 1000, 1).unwrap();
    assert!(restricted.passes(), "{restricted:?}");
    let full = check_monotonicity(&a, &region, 1000, 1).unwrap();
    assert!(full.n_violations > 0);
}

#[test]
fn antimonotone_operator_is_caught() {
    let a = SetValuedOp::Affine { matrix: -DMatrix::identity(1, 1), offset: v(&[0.0]) };
    let q = Metric::scaled_identity(1, 1.0).unwrap();
    let sampler = GraphSampler::restricted(VectorSampler::cube(1, 5.0), &q);
    assert_eq!(sampler.mode, GraphSampling::Direct);
    let r = check_restricted_monotonicity(&a, &q, &sampler, 200, 0).unwrap();
    assert!(r.n_violations > 0);
}

#[test]
fn direct_sampling_starves_on_a_thin_range() {
    // values of d|x1| x {0} never have a zero first coordinate off the kink
    let (a, _) = builtin(Builtin2D::L1x);
    let q = Metric::diagonal(&[0.0, 1.0]).unwrap();
    let sampler = GraphSampler::direct(VectorSampler::cube(2, 5.0));
    assert!(matches!(check_restricted_monotonicity(&a, &q, &sampler, 5, 0), Err(Error::SamplerStarved { .. })));
}

#[test]
fn witnesses_replay() {
    let f = ProxFunction::half_square(1);
    let (a, _) = lower_triangular_example(&f, &f, &DMatrix::from_element(1, 1, 3.0)).unwrap();
    let r = check_monotonicity(&a, &VectorSampler::cube(2, 5.0), 500, 9).unwrap();
    assert!(!r.witnesses.is_empty());
    for w in &r.witnesses {
        let p = |i: usize| DVector::from_column_slice(&w.input[2 * i..2 * i + 2]);
        let (x, u, y, vv) = (p(0), p(1), p(2), p(3));
        assert!(a.inclusion_residual(&x, &u).unwrap() <= 1e-12);
        assert!(a.inclusion_residual(&y, &vv).unwrap() <= 1e-12);
        assert_eq!((&x - &y).dot(&(&u - &vv)), w.margin);
    }
}

#[test]
fn reports_are_deterministic() {
    let (a, q) = lasso_drs(1.0);
    let region = VectorSampler::cube(3, 5.0);
    let r1 = check_firm_nonexpansive(&a, &q, &region, 300, 7, Strategy::Auto).unwrap();
    let r2 = check_firm_nonexpansive(&a, &q, &region, 300, 7, Strategy::Auto).unwrap();
    assert_eq!(r1, r2);
}

#[test]
fn firm_nonexpansive_on_embeddings() {
    for (a, q) in [lasso_drs(1.0), lasso_drs(0.5), alm(1.0), alm(2.0)] {
        let r = check_firm_nonexpansive(&a, &q, &VectorSampler::cube(q.dim(), 5.0), 1000, 11, Strategy::Auto).unwrap();
        assert!(r.passes(), "{r:?}");
        assert!(r.worst_margin >= -FNE_SLACK);
    }
}

#[test]
fn fne_margin_vanishes_on_equal_inputs() {
    let (a, q) = lasso_drs(1.0);
    let region = VectorSampler { lo: v(&[1.0, 1.0, 1.0]), hi: v(&[1.0, 1.0, 1.0]) };
    let r = check_firm_nonexpansive(&a, &q, &region, 3, 0, Strategy::Auto).unwrap();
    assert_eq!(r.worst_margin, 0.0);
}

#[test]
fn minty_verdicts() {
    let probes = probe_line(401, 10.0);
    for b in [Builtin2D::Eg1, Builtin2D::Eg3] {
        let r = check_minty_range(b, &b.default_metric(), &probes).unwrap();
        assert!(r.passes(), "{}: {r:?}", b.name());
        assert_eq!(r.n_samples, 401);
    }
    let q = Builtin2D::Eg2.default_metric();
    for &w in &probes {
        assert_eq!(minty_covers(Builtin2D::Eg2, &q, w).unwrap(), w > -1.0, "w = {w}");
    }
    let r = check_minty_range(Builtin2D::Eg2, &q, &probes).unwrap();
    assert!(r.witnesses.iter().all(|w| w.input[0] <= -1.0));
}

#[test]
fn minty_with_scaled_metric() {
    // lambda = 4: covered iff w > -1/2
    let q = Metric::diagonal(&[4.0, 0.0]).unwrap();
    assert!(minty_covers(Builtin2D::Eg2, &q, -0.49).unwrap());
    assert!(!minty_covers(Builtin2D::Eg2, &q, -0.5).unwrap());
    assert!(minty_covers(Builtin2D::L1x, &q, 7.0).unwrap());
}

#[test]
fn minty_agrees_with_full_domain() {
    let probes = probe_line(401, 10.0);
    for b in Builtin2D::ALL {
        let r = check_minty_full_domain_agreement(b, &b.default_metric(), &probes, Strategy::Auto).unwrap();
        assert!(r.passes(), "{}: {r:?}", b.name());
        assert_eq!(r.n_inconclusive, 0);
    }
}

#[test]
fn full_domain_on_eg2() {
    let (a, q) = builtin(Builtin2D::Eg2);
    let empty: Vec<_> = [-10.0, -2.0, -1.5].iter().map(|&x| v(&[x, 0.0])).collect();
    let r = check_full_domain(&a, &q, &empty, Strategy::Auto).unwrap();
    assert_eq!(r.n_violations, 3);
    let r = check_full_domain(&a, &q, &[v(&[0.5, 0.0])], Strategy::Auto).unwrap();
    assert!(r.passes());
}

#[test]
fn sri_verdicts() {
    let verdict = |b: Builtin2D| check_sri_condition(&b.operator_range(), &metric_range(&b.default_metric()).unwrap()).unwrap();
    assert!(verdict(Builtin2D::Eg1));
    assert!(!verdict(Builtin2D::Eg2));
    assert!(!verdict(Builtin2D::Eg3));
}

#[test]
fn sri_rejects_excluded_slabs() {
    let r = RangeDescription::product(vec![Interval::real_line()]).excluding(vec![Interval::closed(0.0, 1.0)]);
    let err = check_sri_condition(&r, &RangeDescription::product(vec![Interval::point(0.0)]));
    assert!(matches!(err, Err(Error::UnsupportedShape(_))));
}

#[test]
fn single_valuedness_dichotomy() {
    let (a, q) = builtin(Builtin2D::L1x);
    let inputs: Vec<_> = [-2.0, 0.0, 3.0].iter().map(|&b| v(&[b, 0.0])).collect();
    let r = check_single_valuedness(&a, &q, &inputs).unwrap();
    assert_eq!(r.n_violations, 3);

    let (a, q) = builtin(Builtin2D::L1y);
    for b in [-2.0, 0.0, 3.0] {
        let r = check_single_valuedness(&a, &q, &[v(&[0.0, b])]).unwrap();
        assert!(r.passes());
        let out = resolvent::solve(&a, &q, &v(&[0.0, b]), Strategy::Auto).unwrap();
        assert_eq!(out.status, ResolventStatus::Unique(v(&[0.0, b])));
    }
}

#[test]
fn single_valuedness_of_embeddings() {
    let (a, q) = lasso_drs(1.0);
    let r = check_single_valuedness(&a, &q, &[v(&[0.3, -1.0, 4.0]), v(&[0.0, 0.0, 0.0])]).unwrap();
    assert!(r.passes(), "{r:?}");
    let (a, q) = alm(0.5);
    assert!(check_single_valuedness(&a, &q, &[v(&[1.0, -3.0])]).unwrap().passes());
}

#[test]
fn kernel_set_unknown_for_cascade_outputs() {
    let a = l1_problem_operator(3.0).unwrap();
    let q = Metric::diagonal(&[1.0, 0.0]).unwrap();
    assert_eq!(check_single_valuedness(&a, &q, &[v(&[3.0, 0.0])]), Err(Error::KernelSetUnknown));
}

#[test]
fn kernel_map_ceilings() {
    for tau in [0.5, 1.0, 2.0] {
        let drs = KernelMap::Drs { g: ProxFunction::shifted_square(1.0, &[3.0]), tau };
        let r = check_kernel_map_lipschitz(&drs, 5.0, 10_000, 5).unwrap();
        assert!(r.passes(), "drs tau {tau}: {r:?}");
        let alm = KernelMap::Alm { b: v(&[2.0]), tau };
        let r = check_kernel_map_lipschitz(&alm, 5.0, 10_000, 5).unwrap();
        assert!(r.passes(), "alm tau {tau}: {r:?}");
        assert!(2.0 / tau + r.worst_margin > 1.0, "coupling should push the ratio near the ceiling");
    }
}

#[test]
fn engine_lipschitz_within_ceiling() {
    for (a, q) in [lasso_drs(1.0), alm(0.5)] {
        let r = check_resolvent_lipschitz(&a, &q, &VectorSampler::cube(q.dim(), 5.0), 500, 2, Strategy::Auto).unwrap();
        assert!(r.passes(), "{r:?}");
    }
}

#[test]
fn equality_chain_examples() {
    let a = SetValuedOp::Subdifferential(ProxFunction::abs(1.0));
    let q = Metric::scaled_identity(1, 1.0).unwrap();
    let chain = eval_equality_chain(&a, &q, &v(&[3.0])).unwrap();
    for f in &chain.forms {
        assert_eq!(f[0], 1.0);
    }
    let (a, q) = builtin(Builtin2D::L1y);
    let chain = eval_equality_chain(&a, &q, &v(&[-4.0, 0.0])).unwrap();
    for f in &chain.forms {
        assert_eq!(f, &v(&[0.0, 0.0]));
    }
    let chain = eval_equality_chain(&a, &q, &v(&[0.0, 2.5])).unwrap();
    assert!(chain.discrepancy <= 1e-9);
}

#[test]
fn moreau_examples() {
    let a = SetValuedOp::Subdifferential(ProxFunction::abs(1.0));
    let q = Metric::scaled_identity(1, 1.0).unwrap();
    assert_eq!(check_moreau_identity(&a, &q, &v(&[0.5]), Strategy::Auto).unwrap(), 0.0);
    // a fixed point has a vanishing complement
    assert_eq!(check_moreau_identity(&a, &q, &v(&[0.0]), Strategy::Auto).unwrap(), 0.0);
}

#[test]
fn identity_suite() {
    let abs = SetValuedOp::Subdifferential(ProxFunction::abs(1.0));
    let cases = [
        (abs.clone(), Metric::scaled_identity(1, 1.0).unwrap()),
        (abs, Metric::scaled_identity(1, 2.0).unwrap()),
        builtin(Builtin2D::L1x),
        builtin(Builtin2D::L1y),
    ];
    for (a, q) in cases {
        let r = check_equality_and_moreau(&a, &q, 100, 21).unwrap();
        assert!(r.passes(), "{r:?}");
    }
}

#[test]
fn identities_need_conjugate_access() {
    let (a, q) = lasso_drs(1.0);
    assert!(matches!(eval_equality_chain(&a, &q, &v(&[0.0, 0.0, 0.0])), Err(Error::InverseUnavailable)));
}

#[test]
fn fejer_on_embeddings() {
    let (a, q) = lasso_drs(1.0);
    let r = check_fejer(&a, &q, &v(&[0.0, 0.0, 0.0]), Strategy::Auto, 200).unwrap();
    assert!(r.passes(), "{r:?}");
    let (a, q) = alm(1.0);
    let r = check_fejer(&a, &q, &v(&[-3.0, 5.0]), Strategy::Auto, 200).unwrap();
    assert!(r.passes(), "{r:?}");
}

#[test]
fn fix_equals_zeros() {
    let probes: Vec<_> = probe_line(9, 4.0).into_iter().map(|t| v(&[t, -t])).collect();
    for b in [-2.0, 0.0, 3.0] {
        let a = l1_problem_operator(b).unwrap();
        let q = Metric::diagonal(&[1.0, 0.0]).unwrap();
        let zeros: Vec<_> = [-5.0, 0.0, 7.0].iter().map(|&t| v(&[soft_threshold(b, 1.0), t])).collect();
        let mut with_zeros = probes.clone();
        with_zeros.extend(zeros.iter().cloned());
        let r = check_fix_equals_zeros(&a, &q, &zeros, &with_zeros, Strategy::Auto).unwrap();
        assert!(r.passes(), "{r:?}");
    }
    let (a, q) = alm(1.0);
    let r = check_fix_equals_zeros(&a, &q, &[v(&[2.0, 2.0])], &[v(&[0.0, 2.0]), v(&[1.0, 1.0])], Strategy::Auto).unwrap();
    assert!(r.passes() && r.n_samples == 2, "{r:?}");
    let (a, q) = lasso_drs(1.0);
    let r = check_fix_equals_zeros(&a, &q, &[v(&[2.0, 2.0, 1.0])], &[v(&[0.0, 0.0, 1.0])], Strategy::Auto).unwrap();
    assert!(r.passes() && r.n_samples == 2, "{r:?}");
}
