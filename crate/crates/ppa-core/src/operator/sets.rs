//! Exact descriptions of the subsets of R^n that show up as operator values,
//! inverse images and solution sets.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};

/// A real interval with open or closed ends. Infinite ends are always open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Self {
        Self { lo, hi, lo_closed: lo_closed && lo.is_finite(), hi_closed: hi_closed && hi.is_finite() }
    }

    pub fn point(a: f64) -> Self {
        Self::new(a, a, true, true)
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, true, true)
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, false, false)
    }

    pub fn real_line() -> Self {
        Self::open(f64::NEG_INFINITY, f64::INFINITY)
    }

    /// `[a, inf)` or `(a, inf)`.
    pub fn at_least(a: f64, closed: bool) -> Self {
        Self::new(a, f64::INFINITY, closed, false)
    }

    /// `(-inf, a]` or `(-inf, a)`.
    pub fn at_most(a: f64, closed: bool) -> Self {
        Self::new(f64::NEG_INFINITY, a, false, closed)
    }

    pub fn empty() -> Self {
        Self::open(0.0, 0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi && self.lo_closed && self.hi_closed
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Membership with a slack of `tol` on either side.
    pub fn contains(&self, t: f64, tol: f64) -> bool {
        if self.is_empty() {
            return false;
        }
        let above = if self.lo_closed || tol > 0.0 { t >= self.lo - tol } else { t > self.lo };
        let below = if self.hi_closed || tol > 0.0 { t <= self.hi + tol } else { t < self.hi };
        above && below
    }

    /// Distance from `t` to the closure.
    pub fn distance(&self, t: f64) -> f64 {
        if self.is_empty() {
            return f64::INFINITY;
        }
        if t < self.lo {
            self.lo - t
        } else if t > self.hi {
            t - self.hi
        } else {
            0.0
        }
    }

    /// Element of smallest magnitude, or an interior point when that
    /// infimum sits on an open end.
    pub fn min_abs_element(&self) -> Option<f64> {
        if self.is_empty() {
            return None;
        }
        let t = 0.0_f64.clamp(self.lo, self.hi);
        if self.contains(t, 0.0) {
            return Some(t);
        }
        Some(if self.is_bounded() {
            0.5 * (self.lo + self.hi)
        } else if self.lo.is_finite() {
            self.lo + 1.0
        } else {
            self.hi - 1.0
        })
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let (lo, lo_closed) = if self.lo > other.lo {
            (self.lo, self.lo_closed)
        } else if other.lo > self.lo {
            (other.lo, other.lo_closed)
        } else {
            (self.lo, self.lo_closed && other.lo_closed)
        };
        let (hi, hi_closed) = if self.hi < other.hi {
            (self.hi, self.hi_closed)
        } else if other.hi < self.hi {
            (other.hi, other.hi_closed)
        } else {
            (self.hi, self.hi_closed && other.hi_closed)
        };
        Interval::new(lo, hi, lo_closed, hi_closed)
    }

    /// Minkowski sum.
    pub fn add(&self, other: &Interval) -> Interval {
        Interval::new(
            self.lo + other.lo,
            self.hi + other.hi,
            self.lo_closed && other.lo_closed,
            self.hi_closed && other.hi_closed,
        )
    }

    pub fn neg(&self) -> Interval {
        Interval::new(-self.hi, -self.lo, self.hi_closed, self.lo_closed)
    }

    pub fn shift(&self, c: f64) -> Interval {
        Interval::new(self.lo + c, self.hi + c, self.lo_closed, self.hi_closed)
    }

    /// Image under `t -> c t`.
    pub fn scale(&self, c: f64) -> Interval {
        if c == 0.0 {
            return if self.is_empty() { Interval::empty() } else { Interval::point(0.0) };
        }
        if c > 0.0 {
            Interval::new(c * self.lo, c * self.hi, self.lo_closed, self.hi_closed)
        } else {
            Interval::new(c * self.hi, c * self.lo, self.hi_closed, self.lo_closed)
        }
    }

    /// Relative interior contains `t`: the point itself for a degenerate
    /// interval, the open interior otherwise.
    pub fn relative_interior_contains(&self, t: f64) -> bool {
        if self.is_point() {
            t == self.lo
        } else {
            !self.is_empty() && self.lo < t && t < self.hi
        }
    }

    /// Union when the result is again an interval.
    pub fn try_union(&self, other: &Interval) -> Option<Interval> {
        if self.is_empty() {
            return Some(*other);
        }
        if other.is_empty() {
            return Some(*self);
        }
        let (a, b) = if self.lo <= other.lo { (self, other) } else { (other, self) };
        let touches = b.lo < a.hi || (b.lo == a.hi && (a.hi_closed || b.lo_closed));
        if !touches {
            return None;
        }
        let lo_closed = if a.lo == b.lo { a.lo_closed || b.lo_closed } else { a.lo_closed };
        let (hi, hi_closed) = if a.hi > b.hi {
            (a.hi, a.hi_closed)
        } else if b.hi > a.hi {
            (b.hi, b.hi_closed)
        } else {
            (a.hi, a.hi_closed || b.hi_closed)
        };
        Some(Interval::new(a.lo, hi, lo_closed, hi_closed))
    }
}

/// One piece of a [`SetDescription`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SetPiece {
    /// Product of intervals.
    Box(Vec<Interval>),
    /// `{(a, ln a) : a in I, a > 0}` in the plane.
    LogCurve(Interval),
    /// `{(a, c) : a in I, a > 0, c < ln a}` in the plane.
    BelowLogCurve(Interval),
}

impl SetPiece {
    fn positive_part(iv: &Interval) -> Interval {
        iv.intersect(&Interval::at_least(0.0, false))
    }

    pub fn is_empty(&self) -> bool {
        match self {
            SetPiece::Box(ivs) => ivs.iter().any(Interval::is_empty),
            SetPiece::LogCurve(iv) | SetPiece::BelowLogCurve(iv) => Self::positive_part(iv).is_empty(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SetPiece::Box(ivs) => ivs.len(),
            _ => 2,
        }
    }

    pub fn contains(&self, p: &DVector<f64>, tol: f64) -> bool {
        match self {
            SetPiece::Box(ivs) => ivs.len() == p.len() && ivs.iter().zip(p.iter()).all(|(iv, &t)| iv.contains(t, tol)),
            SetPiece::LogCurve(iv) => {
                p[0] > 0.0 && Self::positive_part(iv).contains(p[0], tol) && (p[1] - p[0].ln()).abs() <= tol
            }
            SetPiece::BelowLogCurve(iv) => {
                p[0] > 0.0 && Self::positive_part(iv).contains(p[0], tol) && p[1] < p[0].ln() + tol
            }
        }
    }

    /// Projection onto coordinate `k`.
    pub fn coordinate(&self, k: usize) -> Interval {
        match self {
            SetPiece::Box(ivs) => ivs[k],
            SetPiece::LogCurve(iv) => {
                let a = Self::positive_part(iv);
                if k == 0 || a.is_empty() {
                    return a;
                }
                let lo = if a.lo > 0.0 { a.lo.ln() } else { f64::NEG_INFINITY };
                Interval::new(lo, a.hi.ln(), a.lo_closed, a.hi_closed)
            }
            SetPiece::BelowLogCurve(iv) => {
                let a = Self::positive_part(iv);
                if k == 0 || a.is_empty() {
                    return a;
                }
                // sup over a of ln a, never attained by the strict inequality
                Interval::at_most(a.hi.ln(), false)
            }
        }
    }

    /// A handful of members, used to illustrate multi-valued outcomes.
    pub fn samples(&self) -> Vec<DVector<f64>> {
        let pick = |iv: &Interval| -> Vec<f64> {
            let Some(m) = iv.min_abs_element() else { return vec![] };
            let mut out = vec![m];
            if iv.is_bounded() && !iv.is_point() {
                let lo = if iv.lo_closed { iv.lo } else { 0.75 * iv.lo + 0.25 * iv.hi };
                let hi = if iv.hi_closed { iv.hi } else { 0.25 * iv.lo + 0.75 * iv.hi };
                out.extend([lo, hi]);
            } else if !iv.is_point() {
                out.push(m + if iv.hi.is_finite() { -1.0 } else { 1.0 });
            }
            out
        };
        match self {
            SetPiece::Box(ivs) => {
                let centre: Vec<f64> = ivs.iter().filter_map(Interval::min_abs_element).collect();
                if centre.len() != ivs.len() {
                    return vec![];
                }
                let mut out = vec![DVector::from_vec(centre.clone())];
                for (k, iv) in ivs.iter().enumerate() {
                    for t in pick(iv).into_iter().skip(1) {
                        let mut p = centre.clone();
                        p[k] = t;
                        out.push(DVector::from_vec(p));
                    }
                }
                out
            }
            SetPiece::LogCurve(iv) => pick(&Self::positive_part(iv))
                .into_iter()
                .filter(|&a| a > 0.0)
                .map(|a| DVector::from_vec(vec![a, a.ln()]))
                .collect(),
            SetPiece::BelowLogCurve(iv) => pick(&Self::positive_part(iv))
                .into_iter()
                .filter(|&a| a > 0.0)
                .map(|a| DVector::from_vec(vec![a, a.ln() - 1.0]))
                .collect(),
        }
    }
}

/// A finite union of [`SetPiece`]s. The empty union is the empty set.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct SetDescription {
    pub pieces: Vec<SetPiece>,
}

impl SetDescription {
    pub fn empty() -> Self {
        Self { pieces: vec![] }
    }

    pub fn from_box(ivs: Vec<Interval>) -> Self {
        Self::from_piece(SetPiece::Box(ivs))
    }

    pub fn singleton(p: &DVector<f64>) -> Self {
        Self::from_box(p.iter().map(|&t| Interval::point(t)).collect())
    }

    pub fn from_piece(piece: SetPiece) -> Self {
        if piece.is_empty() {
            Self::empty()
        } else {
            Self { pieces: vec![piece] }
        }
    }

    pub fn union(mut self, other: SetDescription) -> Self {
        self.pieces.extend(other.pieces.into_iter().filter(|p| !p.is_empty()));
        self.merge_boxes();
        self
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.iter().all(SetPiece::is_empty)
    }

    /// The single point, if the set is one.
    pub fn as_singleton(&self) -> Option<DVector<f64>> {
        match self.pieces.as_slice() {
            [SetPiece::Box(ivs)] if ivs.iter().all(Interval::is_point) => {
                Some(DVector::from_iterator(ivs.len(), ivs.iter().map(|iv| iv.lo)))
            }
            [SetPiece::LogCurve(iv)] if SetPiece::positive_part(iv).is_point() => {
                Some(DVector::from_vec(vec![iv.lo, iv.lo.ln()]))
            }
            _ => None,
        }
    }

    /// The single box, if the set is one.
    pub fn as_box(&self) -> Option<&[Interval]> {
        match self.pieces.as_slice() {
            [SetPiece::Box(ivs)] => Some(ivs),
            _ => None,
        }
    }

    pub fn contains(&self, p: &DVector<f64>, tol: f64) -> bool {
        self.pieces.iter().any(|piece| piece.contains(p, tol))
    }

    /// Euclidean distance from `p` to the closure. Only box pieces are
    /// supported; curves raise `UnsupportedShape`.
    pub fn distance(&self, p: &DVector<f64>) -> Result<f64> {
        let mut best = f64::INFINITY;
        for piece in &self.pieces {
            match piece {
                SetPiece::Box(ivs) => {
                    if ivs.len() != p.len() {
                        return Err(Error::DimensionMismatch { expected: ivs.len(), found: p.len() });
                    }
                    let d2: f64 = ivs.iter().zip(p.iter()).map(|(iv, &t)| iv.distance(t).powi(2)).sum();
                    best = best.min(d2.sqrt());
                }
                _ => return Err(Error::UnsupportedShape("distance to a curved piece".into())),
            }
        }
        Ok(best)
    }

    /// Projection onto coordinate `k` as a union of intervals.
    pub fn coordinate(&self, k: usize) -> Vec<Interval> {
        self.pieces.iter().filter(|p| !p.is_empty()).map(|p| p.coordinate(k)).collect()
    }

    pub fn samples(&self) -> Vec<DVector<f64>> {
        self.pieces.iter().flat_map(SetPiece::samples).collect()
    }

    /// Merges box pieces that differ in at most one coordinate and whose
    /// intervals there overlap or touch.
    fn merge_boxes(&mut self) {
        let mut changed = true;
        while changed {
            changed = false;
            'outer: for i in 0..self.pieces.len() {
                for j in (i + 1)..self.pieces.len() {
                    if let (SetPiece::Box(a), SetPiece::Box(b)) = (&self.pieces[i], &self.pieces[j]) {
                        if let Some(m) = merge_two(a, b) {
                            self.pieces[i] = SetPiece::Box(m);
                            self.pieces.remove(j);
                            changed = true;
                            break 'outer;
                        }
                    }
                }
            }
        }
    }
}

fn merge_two(a: &[Interval], b: &[Interval]) -> Option<Vec<Interval>> {
    if a.len() != b.len() {
        return None;
    }
    let differing: Vec<usize> = (0..a.len()).filter(|&k| a[k] != b[k]).collect();
    match differing.as_slice() {
        [] => Some(a.to_vec()),
        [k] => {
            let u = a[*k].try_union(&b[*k])?;
            let mut out = a.to_vec();
            out[*k] = u;
            Some(out)
        }
        _ => None,
    }
}

/// Convex range of an operator or metric, written as a product of intervals
/// with optional excluded boxes. Exclusions are carried for bookkeeping but
/// make the set non-convex, so convex tests refuse them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeDescription {
    pub factors: Vec<Interval>,
    pub excluded: Vec<Vec<Interval>>,
}

impl RangeDescription {
    pub fn product(factors: Vec<Interval>) -> Self {
        Self { factors, excluded: vec![] }
    }

    pub fn excluding(mut self, slab: Vec<Interval>) -> Self {
        self.excluded.push(slab);
        self
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    /// `self - other` in the Minkowski sense.
    pub fn minkowski_difference(&self, other: &RangeDescription) -> Result<RangeDescription> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        if !self.excluded.is_empty() || !other.excluded.is_empty() {
            return Err(Error::UnsupportedShape("range with excluded slabs is not convex".into()));
        }
        Ok(RangeDescription::product(
            self.factors.iter().zip(&other.factors).map(|(a, b)| a.add(&b.neg())).collect(),
        ))
    }

    /// Whether the origin lies in the relative interior.
    pub fn relative_interior_contains_origin(&self) -> Result<bool> {
        if !self.excluded.is_empty() {
            return Err(Error::UnsupportedShape("range with excluded slabs is not convex".into()));
        }
        Ok(self.factors.iter().all(|iv| iv.relative_interior_contains(0.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_basics() {
        let iv = Interval::new(-1.0, 0.0, true, false);
        assert!(iv.contains(-1.0, 0.0));
        assert!(!iv.contains(0.0, 0.0));
        assert_eq!(iv.neg(), Interval::new(0.0, 1.0, false, true));
        assert!(Interval::open(1.0, 1.0).is_empty());
        assert_eq!(Interval::real_line().min_abs_element(), Some(0.0));
        assert_eq!(Interval::at_least(0.0, false).min_abs_element(), Some(1.0));
    }

    #[test]
    fn merging_touching_boxes() {
        let a = SetDescription::from_box(vec![Interval::point(1.0), Interval::at_most(0.0, false)]);
        let b = SetDescription::from_box(vec![Interval::point(1.0), Interval::point(0.0)]);
        let u = a.union(b);
        assert_eq!(u.as_box().unwrap()[1], Interval::at_most(0.0, true));
    }

    #[test]
    fn log_curve_projection() {
        let p = SetPiece::LogCurve(Interval::closed(1.0, std::f64::consts::E));
        assert_eq!(p.coordinate(1), Interval::closed(0.0, 1.0));
        let below = SetPiece::BelowLogCurve(Interval::real_line());
        assert_eq!(below.coordinate(0), Interval::at_least(0.0, false));
        assert_eq!(below.coordinate(1), Interval::real_line());
    }
}
