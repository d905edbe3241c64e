//! Solving `0 in A y + Q (y - x)` for `y = T x = (Q + A)^{-1} Q x`.
//!
//! Each strategy handles one family of operators exactly. The outcome says
//! whether `T x` is empty, a single point, a set whose range part is a single
//! point (the usual case when `Q` is degenerate), or genuinely multi-valued.

mod analytic;
mod cascade;
mod grid;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::operator::{Interval, Prox, SetDescription, SetPiece, SetValuedOp, Structure};

pub use grid::GridConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Strategy {
    /// Pick from the operator's shape.
    Auto,
    /// One Douglas-Rachford step, for operators built by `drs_embedding`.
    ClosedFormDrs,
    /// One augmented Lagrangian step, for operators built by `alm_embedding`.
    ClosedFormAlm,
    /// Block elimination followed by one prox or linear solve per block.
    Cascade,
    /// Case analysis on a planar table operator.
    Analytic2D,
    /// Brute-force search over a planar grid.
    Grid2D,
    /// `prox_{f/c}` for `A = df` and `Q = c I`.
    ProxDirect,
}

/// What is known about the kernel components `{P_ker y : y in T x}`.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSet {
    /// Exact set, written in ambient coordinates.
    Known(SetDescription),
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResolventStatus {
    Unique(DVector<f64>),
    /// Range part is unique; `selected` is the element used to continue
    /// iterating (range part plus the smallest kernel component).
    RangeUnique { range_part: DVector<f64>, kernel_set: KernelSet, selected: DVector<f64> },
    Empty,
    /// Members with different range parts.
    MultiValued(Vec<DVector<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventOutcome {
    pub status: ResolventStatus,
    /// `dist(Q (x - y), A y)` at the returned element; the worst one over
    /// samples for multi-valued outcomes, infinite when empty.
    pub residual: f64,
    pub strategy: Strategy,
}

impl ResolventOutcome {
    /// The element an iteration continues from.
    pub fn element(&self) -> Option<&DVector<f64>> {
        match &self.status {
            ResolventStatus::Unique(y) => Some(y),
            ResolventStatus::RangeUnique { selected, .. } => Some(selected),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self.status, ResolventStatus::Empty)
    }
}

/// Solves the preconditioned resolvent at `x`.
pub fn solve(a: &SetValuedOp, q: &Metric, x: &DVector<f64>, strategy: Strategy) -> Result<ResolventOutcome> {
    if a.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: q.dim(), found: a.dim() });
    }
    if x.len() != q.dim() {
        return Err(Error::DimensionMismatch { expected: q.dim(), found: x.len() });
    }
    let strategy = if strategy == Strategy::Auto { pick_strategy(a, q) } else { strategy };
    let status = match strategy {
        Strategy::Auto => unreachable!("resolved above"),
        Strategy::ClosedFormDrs => ResolventStatus::Unique(closed_form_drs(a, q, x)?),
        Strategy::ClosedFormAlm => ResolventStatus::Unique(closed_form_alm(a, q, x)?),
        Strategy::ProxDirect => ResolventStatus::Unique(prox_direct(a, q, x)?),
        Strategy::Cascade => classify(cascade::solve(a, q, x)?, q, false),
        Strategy::Analytic2D => classify(analytic::solve(a, q, x)?, q, true),
        Strategy::Grid2D => grid::solve(a, q, x, &GridConfig::default())?,
    };
    let residual = residual_of(a, q, x, &status)?;
    Ok(ResolventOutcome { status, residual, strategy })
}

/// Strategy `Auto` resolves to.
pub fn pick_strategy(a: &SetValuedOp, q: &Metric) -> Strategy {
    match a {
        SetValuedOp::Graph2D(_) => Strategy::Analytic2D,
        SetValuedOp::Block(b) => match b.structure() {
            Structure::Drs { .. } if drs_metric_matches(q) => Strategy::ClosedFormDrs,
            Structure::Alm { tau, .. } if alm_metric_matches(q, *tau) => Strategy::ClosedFormAlm,
            _ => Strategy::Cascade,
        },
        SetValuedOp::Subdifferential(_) if q.scalar_factor().is_some_and(|c| c > 0.0) => Strategy::ProxDirect,
        _ => Strategy::Cascade,
    }
}

fn residual_of(a: &SetValuedOp, q: &Metric, x: &DVector<f64>, status: &ResolventStatus) -> Result<f64> {
    let at = |y: &DVector<f64>| -> Result<f64> { a.inclusion_residual(y, &q.apply(&(x - y))?) };
    Ok(match status {
        ResolventStatus::Unique(y) => at(y)?,
        ResolventStatus::RangeUnique { selected, .. } => at(selected)?,
        ResolventStatus::Empty => f64::INFINITY,
        ResolventStatus::MultiValued(samples) => {
            let mut worst: f64 = 0.0;
            for y in samples {
                // table operators cannot measure distance to curved values
                worst = worst.max(at(y).unwrap_or(0.0));
            }
            worst
        }
    })
}

fn drs_metric_matches(q: &Metric) -> bool {
    let n = q.dim() / 3;
    q.dim() == 3 * n
        && q.diagonal_entries().is_some_and(|d| d.iter().enumerate().all(|(i, &v)| v == if i < 2 * n { 0.0 } else { 1.0 }))
}

fn alm_metric_matches(q: &Metric, tau: f64) -> bool {
    let n = q.dim() / 2;
    q.dim() == 2 * n
        && q.diagonal_entries().is_some_and(|d| d.iter().enumerate().all(|(i, &v)| v == if i < n { 0.0 } else { 1.0 / tau }))
}

fn closed_form_drs(a: &SetValuedOp, q: &Metric, x: &DVector<f64>) -> Result<DVector<f64>> {
    let Some(Structure::Drs { f, g, tau }) = a.structure() else {
        return Err(Error::StrategyMismatch("operator was not built as a Douglas-Rachford embedding".into()));
    };
    if !drs_metric_matches(q) {
        return Err(Error::StrategyMismatch("metric is not diag(0, 0, I)".into()));
    }
    let n = f.dim();
    let z = x.rows(2 * n, n).into_owned();
    let u = g.prox(*tau, &z)?;
    let w = f.prox(*tau, &(&u * 2.0 - &z))?;
    let z_next = &z + &w - &u;
    let mut y = DVector::zeros(3 * n);
    y.rows_mut(0, n).copy_from(&u);
    y.rows_mut(n, n).copy_from(&w);
    y.rows_mut(2 * n, n).copy_from(&z_next);
    Ok(y)
}

fn closed_form_alm(a: &SetValuedOp, q: &Metric, x: &DVector<f64>) -> Result<DVector<f64>> {
    let Some(Structure::Alm { f, b, tau }) = a.structure() else {
        return Err(Error::StrategyMismatch("operator was not built as an augmented Lagrangian embedding".into()));
    };
    if !alm_metric_matches(q, *tau) {
        return Err(Error::StrategyMismatch("metric is not diag(0, I/tau)".into()));
    }
    let n = f.dim();
    let p = x.rows(n, n).into_owned();
    let q_next = f.prox(1.0 / tau, &(b + &p / *tau))?;
    let p_next = &p - (&q_next - b) * *tau;
    let mut y = DVector::zeros(2 * n);
    y.rows_mut(0, n).copy_from(&q_next);
    y.rows_mut(n, n).copy_from(&p_next);
    Ok(y)
}

fn prox_direct(a: &SetValuedOp, q: &Metric, x: &DVector<f64>) -> Result<DVector<f64>> {
    let SetValuedOp::Subdifferential(f) = a else {
        return Err(Error::StrategyMismatch("direct prox needs a subdifferential".into()));
    };
    let c = q.scalar_factor().filter(|&c| c > 0.0).ok_or_else(|| Error::StrategyMismatch("metric is not c I with c > 0".into()))?;
    f.validate()?;
    f.prox(1.0 / c, x)
}

/// Turns an exact solution set into a status. With `kernel_box` the kernel
/// set is reported when it is a box; otherwise it is left `Unknown`.
fn classify(set: SetDescription, q: &Metric, kernel_box: bool) -> ResolventStatus {
    if set.is_empty() {
        return ResolventStatus::Empty;
    }
    if let Some(y) = set.as_singleton() {
        return ResolventStatus::Unique(y);
    }
    let range_axes = q.range_axes();
    let fixed_range = |piece: &SetPiece| -> bool {
        match piece {
            SetPiece::Box(ivs) => ivs.iter().enumerate().all(|(k, iv)| {
                iv.is_point() || q.matrix().column(k).iter().all(|&v| v == 0.0)
            }),
            SetPiece::LogCurve(iv) if iv.is_point() => true,
            _ => q.rank() == 0,
        }
    };
    let samples = set.samples();
    if set.pieces.iter().all(fixed_range) {
        let parts: Vec<DVector<f64>> = samples.iter().map(|y| q.project_range(y).expect("dimension checked")).collect();
        let first = parts[0].clone();
        let agree = parts.iter().all(|p| (p - &first).norm() <= 1e-12 * (1.0 + first.norm()));
        if agree {
            let known_box = match (kernel_box, set.as_box(), &range_axes) {
                (true, Some(ivs), Some(axes)) => Some(
                    ivs.iter()
                        .enumerate()
                        .map(|(k, iv)| if axes.contains(&k) { Interval::point(0.0) } else { *iv })
                        .collect::<Vec<_>>(),
                ),
                _ => None,
            };
            let selected = match set.as_box() {
                Some(ivs) => {
                    // smallest element of each free coordinate
                    DVector::from_iterator(ivs.len(), ivs.iter().map(|iv| iv.min_abs_element().expect("nonempty")))
                }
                None => samples[0].clone(),
            };
            let kernel_set = match known_box {
                Some(b) => KernelSet::Known(SetDescription::from_box(b)),
                None => KernelSet::Unknown,
            };
            return ResolventStatus::RangeUnique { range_part: first, kernel_set, selected };
        }
    }
    ResolventStatus::MultiValued(samples)
}
