//! The iteration `x^{k+1} = T x^k` and the diagnostics that go with it.
//!
//! Convergence is measured on range parts in the `Q`-seminorm. Kernel parts
//! follow from the range parts through the resolvent, so they are reported
//! but never tested against a tolerance on their own.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::operator::SetValuedOp;
use crate::resolvent::{self, ResolventStatus, Strategy};
use crate::sampling::{seeded_rng, VectorSampler};

/// Slack allowed on each Fejer margin.
pub const FEJER_SLACK: f64 = 1e-10;
/// Slack allowed on the summability bound.
pub const SUMMABILITY_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StopRule {
    pub max_iters: usize,
    /// Stop once `||x^k - x^{k+1}||_Q <= q_res_tol * (1 + ||x^0||_Q)`.
    pub q_res_tol: f64,
    /// If set, additionally require `||x^k - x^{k+1}|| <= full_res_tol`.
    pub full_res_tol: Option<f64>,
}

impl Default for StopRule {
    fn default() -> Self {
        Self { max_iters: 10_000, q_res_tol: 1e-10, full_res_tol: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum StopReason {
    Tolerance,
    MaxIters,
    /// The resolvent at `x^iteration` was empty, multi-valued in its range
    /// part, or could not be solved.
    SolverFailure { iteration: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    /// `x^0, ..., x^K`.
    pub iterates: Vec<DVector<f64>>,
    /// `P_r x^k` for every iterate.
    pub range_parts: Vec<DVector<f64>>,
    /// `||x^k - x^{k+1}||_Q`, one per step.
    pub q_residuals: Vec<f64>,
    /// Fejer margins against a reference point, one per step; empty until
    /// [`IterationTrace::attach_reference`] is called.
    pub fejer_gaps: Vec<f64>,
    pub stop: StopReason,
}

impl IterationTrace {
    pub fn steps(&self) -> usize {
        self.q_residuals.len()
    }

    pub fn last(&self) -> &DVector<f64> {
        self.iterates.last().expect("trace holds the starting point")
    }

    /// Fills `fejer_gaps` with the margins of [`fejer_report`].
    pub fn attach_reference(&mut self, q: &Metric, reference: &FixedPointRef) -> Result<()> {
        self.fejer_gaps = fejer_report(self, q, reference)?.margins;
        Ok(())
    }
}

/// Runs the preconditioned proximal point method from `x0`.
pub fn iterate(a: &SetValuedOp, q: &Metric, x0: &DVector<f64>, strategy: Strategy, stop: StopRule) -> Result<IterationTrace> {
    if q.rank() == 0 {
        return Err(Error::ZeroMetric);
    }
    if x0.len() != q.dim() {
        return Err(Error::DimensionMismatch { expected: q.dim(), found: x0.len() });
    }
    let tol = stop.q_res_tol * (1.0 + q.seminorm(x0)?);
    let mut trace = IterationTrace {
        iterates: vec![x0.clone()],
        range_parts: vec![q.project_range(x0)?],
        q_residuals: vec![],
        fejer_gaps: vec![],
        stop: StopReason::MaxIters,
    };
    let mut x = x0.clone();
    for k in 0..stop.max_iters {
        let next = match resolvent::solve(a, q, &x, strategy) {
            Ok(out) => match out.status {
                ResolventStatus::Unique(y) => y,
                ResolventStatus::RangeUnique { selected, .. } => selected,
                ResolventStatus::Empty => return Ok(fail(trace, k, "resolvent is empty")),
                ResolventStatus::MultiValued(_) => return Ok(fail(trace, k, "range part is not unique")),
            },
            Err(e @ (Error::StrategyMismatch(_) | Error::DimensionMismatch { .. })) => return Err(e),
            Err(e) => return Ok(fail(trace, k, &e.to_string())),
        };
        let diff = &x - &next;
        let q_res = q.seminorm(&diff)?;
        trace.q_residuals.push(q_res);
        trace.range_parts.push(q.project_range(&next)?);
        trace.iterates.push(next.clone());
        x = next;
        let full_ok = stop.full_res_tol.is_none_or(|t| diff.norm() <= t);
        if q_res <= tol && full_ok {
            trace.stop = StopReason::Tolerance;
            return Ok(trace);
        }
    }
    Ok(trace)
}

fn fail(mut trace: IterationTrace, iteration: usize, reason: &str) -> IterationTrace {
    trace.stop = StopReason::SolverFailure { iteration, reason: reason.to_string() };
    trace
}

/// A point whose range part is fixed by `P_r T`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointRef {
    pub point: DVector<f64>,
    pub range_part: DVector<f64>,
    /// `||P_r T x* - P_r x*||_Q` measured at construction.
    pub residual: f64,
}

impl FixedPointRef {
    /// Checks that `point` is fixed up to `1e-8` in the `Q`-seminorm.
    pub fn verify(a: &SetValuedOp, q: &Metric, point: &DVector<f64>, strategy: Strategy) -> Result<Self> {
        let out = resolvent::solve(a, q, point, strategy)?;
        let y = out.element().ok_or(Error::NotAFixedPoint { residual: f64::INFINITY })?;
        let residual = q.seminorm(&(y - point))?;
        if residual > 1e-8 {
            return Err(Error::NotAFixedPoint { residual });
        }
        Ok(Self { point: point.clone(), range_part: q.project_range(point)?, residual })
    }

    /// Iterates from `x0` with `budget` steps and keeps the last iterate.
    pub fn by_iteration(a: &SetValuedOp, q: &Metric, x0: &DVector<f64>, strategy: Strategy, budget: usize) -> Result<Self> {
        let stop = StopRule { max_iters: budget, q_res_tol: 1e-14, full_res_tol: None };
        let trace = iterate(a, q, x0, strategy, stop)?;
        if let StopReason::SolverFailure { .. } = trace.stop {
            return Err(Error::NotAFixedPoint { residual: f64::INFINITY });
        }
        Self::verify(a, q, trace.last(), strategy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FejerReport {
    /// `||x^k - x*||_Q^2 - ||x^{k+1} - x*||_Q^2 - ||x^k - x^{k+1}||_Q^2`.
    pub margins: Vec<f64>,
    pub worst: f64,
    pub violations: usize,
}

impl FejerReport {
    pub fn passes(&self) -> bool {
        self.violations == 0
    }
}

pub fn fejer_report(trace: &IterationTrace, q: &Metric, reference: &FixedPointRef) -> Result<FejerReport> {
    let dist = |x: &DVector<f64>| q.seminorm_sq(&(x - &reference.point));
    let mut margins = Vec::with_capacity(trace.steps());
    for w in trace.iterates.windows(2) {
        let step = q.seminorm_sq(&(&w[0] - &w[1]))?;
        margins.push(dist(&w[0])? - dist(&w[1])? - step);
    }
    let worst = margins.iter().copied().fold(f64::INFINITY, f64::min);
    let violations = margins.iter().filter(|&&m| m < -FEJER_SLACK).count();
    Ok(FejerReport { margins, worst, violations })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummabilityReport {
    /// Running sums of `||x^k - x^{k+1}||_Q^2`.
    pub cumulative: Vec<f64>,
    /// `||x^0 - x*||_Q^2`.
    pub bound: f64,
    /// `bound + SUMMABILITY_SLACK - total`; negative means violated.
    pub slack: f64,
}

pub fn summability_report(trace: &IterationTrace, q: &Metric, reference: &FixedPointRef) -> Result<SummabilityReport> {
    let mut total = 0.0;
    let mut cumulative = Vec::with_capacity(trace.steps());
    for w in trace.iterates.windows(2) {
        total += q.seminorm_sq(&(&w[0] - &w[1]))?;
        cumulative.push(total);
    }
    let bound = q.seminorm_sq(&(&trace.iterates[0] - &reference.point))?;
    Ok(SummabilityReport { cumulative, bound, slack: bound + SUMMABILITY_SLACK - total })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixZerReport {
    /// `||P_r T(P_r z) - P_r z||` for each supplied zero `z`.
    pub zero_residuals: Vec<f64>,
    /// Probes found fixed by `P_r T`.
    pub fixed_probes: usize,
    /// For each fixed probe `p`, `dist(0, A y)` at `y in T p`.
    pub probe_zero_residuals: Vec<f64>,
    pub passes: bool,
}

/// Checks `Fix(P_r T) = P_r(zer A)` on supplied zeros and probe points.
///
/// Every supplied zero must satisfy `0 in A z` (else `NotAZero`), and its
/// range part must be fixed within `1e-8`. Every probe fixed within `1e-8`
/// must map to a zero of `A` within `1e-6`.
pub fn fix_equals_projected_zeros(
    a: &SetValuedOp,
    q: &Metric,
    zeros: &[DVector<f64>],
    probes: &[DVector<f64>],
    strategy: Strategy,
) -> Result<FixZerReport> {
    let n = q.dim();
    let mut zero_residuals = Vec::with_capacity(zeros.len());
    for z in zeros {
        let residual = a.inclusion_residual(z, &DVector::zeros(n))?;
        if residual > 1e-8 {
            return Err(Error::NotAZero { residual });
        }
        let zr = q.project_range(z)?;
        let out = resolvent::solve(a, q, &zr, strategy)?;
        let moved = match out.element() {
            Some(y) => (q.project_range(y)? - &zr).norm(),
            None => f64::INFINITY,
        };
        zero_residuals.push(moved);
    }
    let mut fixed_probes = 0;
    let mut probe_zero_residuals = vec![];
    for p in probes {
        let pr = q.project_range(p)?;
        let Ok(out) = resolvent::solve(a, q, &pr, strategy) else { continue };
        let Some(y) = out.element() else { continue };
        if (q.project_range(y)? - &pr).norm() <= 1e-8 {
            fixed_probes += 1;
            probe_zero_residuals.push(a.inclusion_residual(y, &DVector::zeros(n))?);
        }
    }
    let passes = zero_residuals.iter().all(|&r| r <= 1e-8) && probe_zero_residuals.iter().all(|&r| r <= 1e-6);
    Ok(FixZerReport { zero_residuals, fixed_probes, probe_zero_residuals, passes })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzReport {
    /// Largest `||P_k y1 - P_k y2|| / ||P_r x1 - P_r x2||` seen.
    pub kernel_ratio: f64,
    /// Largest `||y1 - y2|| / ||P_r x1 - P_r x2||` seen.
    pub full_ratio: f64,
    pub pairs: usize,
    /// Pairs dropped because a resolvent had no single element.
    pub skipped: usize,
}

/// Empirical Lipschitz constants of `x_r -> y` on sampled pairs.
pub fn lipschitz_probe(
    a: &SetValuedOp,
    q: &Metric,
    sampler: &VectorSampler,
    n_pairs: usize,
    seed: u64,
    strategy: Strategy,
) -> Result<LipschitzReport> {
    let mut rng = seeded_rng(seed);
    let mut report = LipschitzReport { kernel_ratio: 0.0, full_ratio: 0.0, pairs: 0, skipped: 0 };
    for _ in 0..n_pairs {
        let x1 = sampler.sample(&mut rng);
        let x2 = sampler.sample(&mut rng);
        let d = (q.project_range(&x1)? - q.project_range(&x2)?).norm();
        let y1 = resolvent::solve(a, q, &x1, strategy)?;
        let y2 = resolvent::solve(a, q, &x2, strategy)?;
        let (Some(y1), Some(y2)) = (y1.element(), y2.element()) else {
            report.skipped += 1;
            continue;
        };
        if d == 0.0 {
            report.skipped += 1;
            continue;
        }
        let dk = (q.project_kernel(y1)? - q.project_kernel(y2)?).norm();
        report.kernel_ratio = report.kernel_ratio.max(dk / d);
        report.full_ratio = report.full_ratio.max((y1 - y2).norm() / d);
        report.pairs += 1;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{alm_embedding, drs_embedding, Builtin2D, ProxFunction};
    use approx::assert_abs_diff_eq;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn drs_lasso_converges_to_two() {
        let (a, q) = drs_embedding(&ProxFunction::abs(1.0), &ProxFunction::shifted_square(1.0, &[3.0]), 1.0).unwrap();
        let trace = iterate(&a, &q, &v(&[0.0, 0.0, 0.0]), Strategy::Auto, StopRule::default()).unwrap();
        assert_eq!(trace.stop, StopReason::Tolerance);
        assert_abs_diff_eq!(trace.last()[0], 2.0, epsilon = 1e-8);
        let reference = FixedPointRef::verify(&a, &q, &v(&[2.0, 2.0, 1.0]), Strategy::Auto).unwrap();
        let fejer = fejer_report(&trace, &q, &reference).unwrap();
        assert!(fejer.passes(), "worst margin {}", fejer.worst);
        assert!(summability_report(&trace, &q, &reference).unwrap().slack >= 0.0);
    }

    #[test]
    fn fixed_start_stops_after_one_step() {
        let (a, q) = alm_embedding(&ProxFunction::half_square(1), &v(&[2.0]), 1.0).unwrap();
        let trace = iterate(&a, &q, &v(&[2.0, 2.0]), Strategy::Auto, StopRule::default()).unwrap();
        assert_eq!(trace.stop, StopReason::Tolerance);
        assert_eq!(trace.q_residuals, vec![0.0]);
    }

    #[test]
    fn empty_resolvent_fails_at_first_step() {
        let a = SetValuedOp::Graph2D(Builtin2D::Eg2);
        let q = Builtin2D::Eg2.default_metric();
        let trace = iterate(&a, &q, &v(&[-2.0, 0.0]), Strategy::Auto, StopRule::default()).unwrap();
        assert!(matches!(trace.stop, StopReason::SolverFailure { iteration: 0, .. }));
        assert_eq!(trace.steps(), 0);
    }

    #[test]
    fn zero_metric_rejected() {
        let a = SetValuedOp::Subdifferential(ProxFunction::abs(1.0));
        let q = Metric::diagonal(&[0.0]).unwrap();
        assert_eq!(iterate(&a, &q, &v(&[1.0]), Strategy::Auto, StopRule::default()), Err(Error::ZeroMetric));
    }

    #[test]
    fn non_fixed_reference_rejected() {
        let (a, q) = alm_embedding(&ProxFunction::half_square(1), &v(&[2.0]), 1.0).unwrap();
        assert!(matches!(FixedPointRef::verify(&a, &q, &v(&[0.0, 0.0]), Strategy::Auto), Err(Error::NotAFixedPoint { .. })));
    }

    #[test]
    fn fixzer_rejects_non_zero() {
        let (a, q) = alm_embedding(&ProxFunction::half_square(1), &v(&[2.0]), 1.0).unwrap();
        let err = fix_equals_projected_zeros(&a, &q, &[v(&[2.0, 1.0])], &[], Strategy::Auto);
        assert!(matches!(err, Err(Error::NotAZero { .. })));
    }
}
