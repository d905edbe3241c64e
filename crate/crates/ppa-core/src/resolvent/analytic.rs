//! Exact resolvents of the planar table operators for diagonal metrics.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::operator::{soft_threshold, Interval, SetDescription, SetPiece, SetValuedOp};

pub(super) fn solve(a: &SetValuedOp, q: &Metric, x: &DVector<f64>) -> Result<SetDescription> {
    let SetValuedOp::Graph2D(g) = a else {
        return Err(Error::StrategyMismatch("analytic solver needs a table operator".into()));
    };
    let d = q.diagonal_entries().ok_or_else(|| Error::StrategyMismatch("analytic solver needs a diagonal metric".into()))?;
    let (q1, q2) = (d[0], d[1]);
    let (x1, x2) = (x[0], x[1]);
    if g.is_abs_first_coordinate() {
        Ok(abs_first(q1, q2, x1, x2))
    } else {
        Ok(log_table(q1, q2, x1, x2))
    }
}

/// `q1 (x1 - a) in d|a|`, `q2 (x2 - c) = 0`.
fn abs_first(q1: f64, q2: f64, x1: f64, x2: f64) -> SetDescription {
    let a = if q1 > 0.0 { soft_threshold(x1, 1.0 / q1) } else { 0.0 };
    let c = if q2 > 0.0 { Interval::point(x2) } else { Interval::real_line() };
    SetDescription::from_box(vec![Interval::point(a), c])
}

/// Case analysis of `(q1 (x1 - a), q2 (x2 - c)) in A(a, c)` over the three
/// regions of the table.
fn log_table(q1: f64, q2: f64, x1: f64, x2: f64) -> SetDescription {
    let mut out = SetDescription::empty();

    // off the curve, value (-1, e^c)
    if q1 > 0.0 && q2 > 0.0 {
        let a = x1 + 1.0 / q1;
        let c = increasing_root(|c| c.exp() + q2 * (c - x2), x2);
        if a <= 0.0 || c > a.ln() {
            out = out.union(SetDescription::singleton(&DVector::from_vec(vec![a, c])));
        }
    }

    // strictly below the curve, value zero
    let below = match (q1 > 0.0, q2 > 0.0) {
        (true, true) if x1 > 0.0 && x2 < x1.ln() => SetDescription::singleton(&DVector::from_vec(vec![x1, x2])),
        (true, false) if x1 > 0.0 => {
            SetDescription::from_box(vec![Interval::point(x1), Interval::at_most(x1.ln(), false)])
        }
        (false, true) => SetDescription::from_box(vec![Interval::at_least(x2.exp(), false), Interval::point(x2)]),
        (false, false) => SetDescription::from_piece(SetPiece::BelowLogCurve(Interval::real_line())),
        _ => SetDescription::empty(),
    };
    out = out.union(below);

    // on the curve c = ln a, value [-1, 0] x [0, a]
    let mut a_range = Interval::at_least(0.0, false);
    if q1 > 0.0 {
        a_range = a_range.intersect(&Interval::closed(x1, x1 + 1.0 / q1));
    }
    if q2 > 0.0 {
        // q2 (x2 - ln a) <= a, solved in s = ln a
        let a_star = increasing_root(|s| s.exp() + q2 * (s - x2), x2).exp();
        a_range = a_range.intersect(&Interval::closed(a_star, x2.exp()));
    }
    if a_range.is_point() {
        let a = a_range.lo;
        out = out.union(SetDescription::singleton(&DVector::from_vec(vec![a, a.ln()])));
    } else {
        out = out.union(SetDescription::from_piece(SetPiece::LogCurve(a_range)));
    }
    out
}

/// Root of an increasing function, bracketed outward from `guess` and
/// refined by bisection to machine precision.
fn increasing_root(h: impl Fn(f64) -> f64, guess: f64) -> f64 {
    let guess = if guess.is_finite() { guess } else { 0.0 };
    let mut step = 1.0_f64.max(guess.abs());
    let (mut lo, mut hi) = (guess - step, guess + step);
    while h(lo) > 0.0 {
        step *= 2.0;
        lo = guess - step;
    }
    while h(hi) < 0.0 {
        step *= 2.0;
        hi = guess + step;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
