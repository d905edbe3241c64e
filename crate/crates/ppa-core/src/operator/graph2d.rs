//! Planar operators given by explicit piecewise tables.
//!
//! `Eg1`, `L1x` and `L1y` share the graph of `d|x_1|`, the subdifferential of
//! `f(x_1, x_2) = |x_1|`; they differ only in the metric they are paired
//! with. `Eg2` and `Eg3` share the table of `f(x, y) = max{e^y - x, 0}`, with
//! the value on the curve `y = ln x` taken as the full box
//! `[-1, 0] x [0, e^y]`.

use nalgebra::DVector;
use serde::Serialize;

use super::prox::ScalarConvex;
use super::sets::{Interval, RangeDescription, SetDescription, SetPiece};
use crate::error::Result;
use crate::metric::Metric;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Builtin2D {
    Eg1,
    Eg2,
    Eg3,
    L1x,
    L1y,
}

impl Builtin2D {
    pub const ALL: [Builtin2D; 5] = [Builtin2D::Eg1, Builtin2D::Eg2, Builtin2D::Eg3, Builtin2D::L1x, Builtin2D::L1y];

    pub fn name(&self) -> &'static str {
        match self {
            Builtin2D::Eg1 => "eg1",
            Builtin2D::Eg2 => "eg2",
            Builtin2D::Eg3 => "eg3",
            Builtin2D::L1x => "l1x",
            Builtin2D::L1y => "l1y",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name() == name)
    }

    /// Whether the graph is the one of `d|x_1|`.
    pub fn is_abs_first_coordinate(&self) -> bool {
        matches!(self, Builtin2D::Eg1 | Builtin2D::L1x | Builtin2D::L1y)
    }

    /// Coordinatewise convex pieces when the graph is a separable
    /// subdifferential.
    pub fn separable(&self) -> Option<[ScalarConvex; 2]> {
        self.is_abs_first_coordinate().then_some([ScalarConvex::Abs(1.0), ScalarConvex::Zero])
    }

    /// The metric each example is paired with.
    pub fn default_metric(&self) -> Metric {
        let d = match self {
            Builtin2D::Eg2 | Builtin2D::L1x => [1.0, 0.0],
            Builtin2D::Eg1 | Builtin2D::Eg3 | Builtin2D::L1y => [0.0, 1.0],
        };
        Metric::diagonal(&d).expect("diagonal 0/1 metric is valid")
    }

    /// `A(p)`.
    pub fn graph_eval(&self, p: &DVector<f64>) -> SetDescription {
        let (x, y) = (p[0], p[1]);
        if self.is_abs_first_coordinate() {
            let first = ScalarConvex::Abs(1.0).subdifferential(x);
            return SetDescription::from_box(vec![first, Interval::point(0.0)]);
        }
        if x <= 0.0 || y > x.ln() {
            SetDescription::singleton(&DVector::from_vec(vec![-1.0, y.exp()]))
        } else if y < x.ln() {
            SetDescription::singleton(&DVector::zeros(2))
        } else {
            SetDescription::from_box(vec![Interval::closed(-1.0, 0.0), Interval::closed(0.0, y.exp())])
        }
    }

    /// `A^{-1}(u)`.
    pub fn inverse_graph_eval(&self, u: &DVector<f64>) -> SetDescription {
        let (u1, u2) = (u[0], u[1]);
        if self.is_abs_first_coordinate() {
            if u2 != 0.0 {
                return SetDescription::empty();
            }
            let first = ScalarConvex::Abs(1.0).conj_subdifferential(u1);
            return SetDescription::from_box(vec![first, Interval::real_line()]);
        }
        let mut out = SetDescription::empty();
        // points off the curve with value (-1, e^y)
        if u1 == -1.0 && u2 > 0.0 {
            out = out.union(SetDescription::from_box(vec![
                Interval::at_most(u2, false),
                Interval::point(u2.ln()),
            ]));
        }
        // points strictly below the curve have value zero
        if u1 == 0.0 && u2 == 0.0 {
            out = out.union(SetDescription::from_piece(SetPiece::BelowLogCurve(Interval::real_line())));
        }
        // points on the curve carry the whole box
        if (-1.0..=0.0).contains(&u1) && u2 >= 0.0 {
            out = out.union(SetDescription::from_piece(SetPiece::LogCurve(Interval::at_least(u2, true))));
        }
        out
    }

    /// `ran A` as a product of intervals.
    pub fn operator_range(&self) -> RangeDescription {
        if self.is_abs_first_coordinate() {
            RangeDescription::product(vec![Interval::closed(-1.0, 1.0), Interval::point(0.0)])
        } else {
            RangeDescription::product(vec![Interval::closed(-1.0, 0.0), Interval::at_least(0.0, true)])
        }
    }

    /// Values of `u` where the inverse table changes form, along each axis.
    pub fn inverse_breakpoints(&self) -> &'static [f64] {
        if self.is_abs_first_coordinate() {
            &[-1.0, 0.0, 1.0]
        } else {
            &[-1.0, 0.0]
        }
    }

    /// Residual `dist(u, A(p))`.
    pub fn inclusion_residual(&self, p: &DVector<f64>, u: &DVector<f64>) -> Result<f64> {
        self.graph_eval(p).distance(u)
    }
}
