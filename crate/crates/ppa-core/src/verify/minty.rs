//! Range tests for planar table operators: the restricted Minty condition,
//! its agreement with full domain, and the `sri` regularity condition.

use nalgebra::DVector;

use super::CheckReport;
use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::operator::{Builtin2D, Interval, RangeDescription, SetValuedOp};
use crate::resolvent::{self, Strategy};

/// `n` evenly spaced points on `[-half, half]`.
pub fn probe_line(n: usize, half: f64) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect(),
    }
}

/// The single range axis and its eigenvalue, for a diagonal rank-one `Q`.
fn rank_one_axis(q: &Metric) -> Result<(usize, f64)> {
    let axes = q.range_axes().ok_or_else(|| Error::UnsupportedShape("metric is not axis aligned".into()))?;
    let d = q.diagonal_entries().ok_or_else(|| Error::UnsupportedShape("metric is not diagonal".into()))?;
    match axes.as_slice() {
        [k] => Ok((*k, d[*k])),
        _ => Err(Error::UnsupportedShape(format!("range test needs a rank-one metric, got rank {}", axes.len()))),
    }
}

/// Whether `w e_k` lies in `ran(I + sqrt(Q) A^{-1} sqrt(Q))` restricted to
/// `ran Q = span(e_k)`.
///
/// Writing `u = sqrt(lambda) v`, this asks for `u` and `p` in `A^{-1}(u e_k)`
/// with `p_k = (w - u / sqrt(lambda)) / sqrt(lambda)`. The inverse table is
/// piecewise in `u` between its breakpoints; each piece is solved exactly
/// and every candidate is confirmed against the table before it counts.
pub fn minty_covers(op: Builtin2D, q: &Metric, w: f64) -> Result<bool> {
    let (k, lambda) = rank_one_axis(q)?;
    let r = lambda.sqrt();
    let inverse_k = |u: f64| -> Vec<Interval> {
        let mut e = DVector::zeros(2);
        e[k] = u;
        op.inverse_graph_eval(&e).coordinate(k)
    };
    let hits = |u: f64| inverse_k(u).iter().any(|iv| iv.contains((w - u / r) / r, 0.0));

    let bps = op.inverse_breakpoints();
    let mut candidates: Vec<f64> = bps.to_vec();
    candidates.push(r * w);
    let mut pieces: Vec<Interval> = vec![];
    for (i, &b) in bps.iter().enumerate() {
        let lo = if i == 0 { f64::NEG_INFINITY } else { bps[i - 1] };
        pieces.push(Interval::open(lo, b));
    }
    pieces.push(Interval::open(*bps.last().expect("tables have breakpoints"), f64::INFINITY));
    for piece in &pieces {
        let rep = piece.min_abs_element().expect("pieces are nonempty");
        for iv in inverse_k(rep) {
            // p_k in iv  <=>  u in r w - lambda iv
            let j = piece.intersect(&iv.scale(-lambda).shift(r * w));
            if let Some(u) = j.min_abs_element() {
                candidates.push(u);
            }
        }
    }
    let span = (r * w).abs() + 10.0;
    candidates.extend(probe_line(401, span));
    Ok(candidates.into_iter().any(hits))
}

/// Restricted Minty test on the probes `w e_k`, `w` in `probes`. Uncovered
/// probes are violations.
pub fn check_minty_range(op: Builtin2D, q: &Metric, probes: &[f64]) -> Result<CheckReport> {
    let (k, _) = rank_one_axis(q)?;
    let mut report = CheckReport::new("minty", 0.0, None);
    for &w in probes {
        let mut p = vec![0.0; 2];
        p[k] = w;
        let covered = minty_covers(op, q, w)?;
        report.record(if covered { 0.0 } else { -1.0 }, &p, &[]);
    }
    Ok(report)
}

/// Compares the Minty verdict at `w e_k` with solvability of the resolvent
/// at `(w / sqrt(lambda)) e_k`. The two describe the same inclusion, so any
/// disagreement is a violation; unbounded searches are inconclusive.
pub fn check_minty_full_domain_agreement(op: Builtin2D, q: &Metric, probes: &[f64], strategy: Strategy) -> Result<CheckReport> {
    let (k, lambda) = rank_one_axis(q)?;
    let a = SetValuedOp::Graph2D(op);
    let mut report = CheckReport::new("minty-fulldomain", 0.0, None);
    for &w in probes {
        let mut x = DVector::zeros(2);
        x[k] = w / lambda.sqrt();
        let covered = minty_covers(op, q, w)?;
        let solvable = match resolvent::solve(&a, q, &x, strategy) {
            Ok(out) => !out.is_empty(),
            Err(Error::UnboundedSearch) => {
                report.record_inconclusive();
                continue;
            }
            Err(e) => return Err(e),
        };
        let agree = covered == solvable;
        report.record(if agree { 0.0 } else { -1.0 }, x.as_slice(), &[f64::from(u8::from(covered)), f64::from(u8::from(solvable))]);
    }
    Ok(report)
}

/// `ran Q` for an axis-aligned metric.
pub fn metric_range(q: &Metric) -> Result<RangeDescription> {
    let axes = q.range_axes().ok_or_else(|| Error::UnsupportedShape("metric is not axis aligned".into()))?;
    Ok(RangeDescription::product(
        (0..q.dim()).map(|k| if axes.contains(&k) { Interval::real_line() } else { Interval::point(0.0) }).collect(),
    ))
}

/// `0 in sri(ran Q - ran A)` for interval-product ranges.
pub fn check_sri_condition(range_a: &RangeDescription, range_q: &RangeDescription) -> Result<bool> {
    range_q.minkowski_difference(range_a)?.relative_interior_contains_origin()
}
