//! The equality chain for `Q(I + A^{-1}Q)^{-1}` and the generalized Moreau
//! decomposition `x = Tx + (I + A^{-1}Q)^{-1} x`, for separable `A = df` and
//! diagonal `Q`.
//!
//! Each form is computed along its own path: the resolvent engine, the
//! conjugate prox in closed form, two bisections on inclusions involving
//! `df*`, and the primal prox. Agreement between them is the check.

use nalgebra::DVector;

use super::{CheckReport, IDENTITY_SLACK};
use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::operator::{Interval, ScalarConvex, SetValuedOp};
use crate::resolvent::{self, Strategy};
use crate::sampling::{seeded_rng, VectorSampler};

#[derive(Debug, Clone, PartialEq)]
pub struct EqualityChain {
    /// `Qx - QTx`, `Q(I + A^{-1}Q)^{-1}x`, `(I + QA^{-1})^{-1}Qx`,
    /// `sqrt(Q)(I + sqrt(Q)A^{-1}sqrt(Q))^{-1}sqrt(Q)x`, and the last one
    /// evaluated on `ran Q` only.
    pub forms: [DVector<f64>; 5],
    /// Largest pairwise sup-norm difference.
    pub discrepancy: f64,
}

fn separable_parts(a: &SetValuedOp) -> Result<Vec<ScalarConvex>> {
    match a {
        SetValuedOp::Subdifferential(f) => f.separable().ok_or(Error::InverseUnavailable),
        SetValuedOp::Graph2D(g) => g.separable().map(|p| p.to_vec()).ok_or(Error::InverseUnavailable),
        _ => Err(Error::InverseUnavailable),
    }
}

fn diagonal(q: &Metric) -> Result<Vec<f64>> {
    q.diagonal_entries().ok_or_else(|| Error::UnsupportedShape("identity checks need a diagonal metric".into()))
}

/// Solves `target in v + s df*(k v)` for scalar `v` by bisection, with
/// `k > 0`.
fn solve_conj_inclusion(phi: &ScalarConvex, s: f64, k: f64, target: f64) -> f64 {
    let dom = phi.conj_domain().scale(1.0 / k);
    if dom.is_point() {
        return dom.lo;
    }
    // -1: v too small, 1: too large, 0: solves
    let side = |v: f64| -> i8 {
        if v < dom.lo {
            return -1;
        }
        if v > dom.hi {
            return 1;
        }
        let j = phi.conj_subdifferential(k * v).scale(s).shift(v);
        if j.is_empty() {
            return if v < 0.0 { -1 } else { 1 };
        }
        if j.hi < target {
            -1
        } else if j.lo > target {
            1
        } else {
            0
        }
    };
    let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
    while side(lo) > 0 && lo > -1e300 {
        lo *= 2.0;
    }
    while side(hi) < 0 && hi < 1e300 {
        hi *= 2.0;
    }
    for v in [lo, hi] {
        if side(v) == 0 {
            return v;
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match side(mid) {
            0 => return mid,
            s if s < 0 => lo = mid,
            _ => hi = mid,
        }
    }
    0.5 * (lo + hi)
}

pub fn eval_equality_chain(a: &SetValuedOp, q: &Metric, x: &DVector<f64>) -> Result<EqualityChain> {
    let parts = separable_parts(a)?;
    let d = diagonal(q)?;
    if x.len() != parts.len() || d.len() != parts.len() {
        return Err(Error::DimensionMismatch { expected: parts.len(), found: x.len() });
    }
    let n = x.len();
    let out = resolvent::solve(a, q, x, Strategy::Auto)?;
    let y = out.element().ok_or(Error::InverseUnavailable)?;
    let engine = q.apply(&(x - y))?;

    let coord = |f: &dyn Fn(&ScalarConvex, f64, f64) -> f64| -> DVector<f64> {
        DVector::from_iterator(n, (0..n).map(|i| if d[i] > 0.0 { f(&parts[i], d[i], x[i]) } else { 0.0 }))
    };
    let conj = coord(&|phi, di, xi| phi.conj_prox(di, di * xi));
    // d x in m + d df*(m)
    let bisect_m = coord(&|phi, di, xi| solve_conj_inclusion(phi, di, 1.0, di * xi));
    // r x in v + r df*(r v), reported as r v
    let bisect_v = coord(&|phi, di, xi| {
        let r = di.sqrt();
        r * solve_conj_inclusion(phi, r, r, r * xi)
    });
    let primal = coord(&|phi, di, xi| di * (xi - phi.prox(1.0 / di, xi)));

    let forms = [engine, conj, bisect_m, bisect_v, primal];
    let mut discrepancy: f64 = 0.0;
    for i in 0..5 {
        for j in i + 1..5 {
            discrepancy = discrepancy.max((&forms[i] - &forms[j]).amax());
        }
    }
    Ok(EqualityChain { forms, discrepancy })
}

/// `dist(x - Tx, (I + A^{-1}Q)^{-1} x)`, where the second set is solved
/// from `Qz in A(x - z)` without the resolvent engine.
pub fn check_moreau_identity(a: &SetValuedOp, q: &Metric, x: &DVector<f64>, strategy: Strategy) -> Result<f64> {
    let parts = separable_parts(a)?;
    let d = diagonal(q)?;
    if x.len() != parts.len() {
        return Err(Error::DimensionMismatch { expected: parts.len(), found: x.len() });
    }
    let out = resolvent::solve(a, q, x, strategy)?;
    let Some(y) = out.element() else { return Ok(f64::INFINITY) };
    let mut total = 0.0;
    for i in 0..x.len() {
        let z: Interval = if d[i] > 0.0 {
            Interval::point(parts[i].conj_prox(d[i], d[i] * x[i]) / d[i])
        } else {
            // 0 in d phi(x - z): x - z minimizes phi
            parts[i].conj_subdifferential(0.0).neg().shift(x[i])
        };
        total += z.distance(x[i] - y[i]).powi(2);
    }
    Ok(total.sqrt())
}

/// Both identities on `n` seeded inputs from `[-5, 5]^dim`.
pub fn check_equality_and_moreau(a: &SetValuedOp, q: &Metric, n: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = seeded_rng(seed);
    let region = VectorSampler::cube(q.dim(), 5.0);
    let mut report = CheckReport::new("chain+moreau", IDENTITY_SLACK, Some(seed));
    for _ in 0..n {
        let x = region.sample(&mut rng);
        let chain = eval_equality_chain(a, q, &x)?.discrepancy;
        let moreau = check_moreau_identity(a, q, &x, Strategy::Auto)?;
        report.record(-chain.max(moreau), x.as_slice(), &[chain, moreau]);
    }
    Ok(report)
}
