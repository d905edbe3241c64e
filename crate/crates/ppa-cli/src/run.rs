use std::io::Write;

use anyhow::Result;
use nalgebra::{DMatrix, DVector};

use ppa_core::iteration::{self, FixedPointRef, IterationTrace, StopReason, StopRule};
use ppa_core::splitting::{admm_step, AdmmState};
use ppa_core::Metric;

use crate::spec::{Body, Problem};

/// Runs the problem. Returns the trace and the metric its residuals are
/// measured in.
pub fn run(problem: &Problem) -> Result<(IterationTrace, Metric)> {
    match &problem.body {
        Body::Ppa { a, q, strategy } => {
            let mut trace = iteration::iterate(a, q, &problem.x0, *strategy, problem.stop)?;
            if trace.stop == StopReason::Tolerance {
                if let Ok(reference) = FixedPointRef::verify(a, q, trace.last(), *strategy) {
                    trace.attach_reference(q, &reference)?;
                }
            }
            Ok((trace, q.clone()))
        }
        Body::Admm { f, g, a, b, tau, cfg } => {
            let (ns, nt) = (f.dim(), g.dim());
            let m = admm_metric(b, *tau, ns)?;
            let step = |x: &DVector<f64>| -> ppa_core::Result<DVector<f64>> {
                let s = AdmmState { s: x.rows(0, ns).into(), t: x.rows(ns, nt).into(), u: x.rows(ns + nt, a.nrows()).into() };
                Ok(admm_step(f, g, a, b, *tau, &s, *cfg)?.stacked())
            };
            let mut trace = iterate_map(step, &m, &problem.x0, problem.stop)?;
            if trace.stop == StopReason::Tolerance {
                let point = trace.last().clone();
                let reference = FixedPointRef { range_part: m.project_range(&point)?, residual: 0.0, point };
                trace.attach_reference(&m, &reference)?;
            }
            Ok((trace, m))
        }
    }
}

/// `diag(0, tau B'B, I / tau)` on `(s, t, u)`: the seminorm in which ADMM
/// is a proximal point method.
fn admm_metric(b: &DMatrix<f64>, tau: f64, ns: usize) -> Result<Metric> {
    let (nt, m) = (b.ncols(), b.nrows());
    let n = ns + nt + m;
    let mut mat = DMatrix::zeros(n, n);
    mat.view_mut((ns, ns), (nt, nt)).copy_from(&(b.transpose() * b * tau));
    mat.view_mut((ns + nt, ns + nt), (m, m)).fill_diagonal(1.0 / tau);
    Ok(Metric::new(mat)?)
}

/// The same loop as the proximal point iteration, for a step given as a
/// plain map.
fn iterate_map<F>(step: F, q: &Metric, x0: &DVector<f64>, stop: StopRule) -> Result<IterationTrace>
where
    F: Fn(&DVector<f64>) -> ppa_core::Result<DVector<f64>>,
{
    let tol = stop.q_res_tol * (1.0 + q.seminorm(x0)?);
    let mut trace = IterationTrace {
        iterates: vec![x0.clone()],
        range_parts: vec![q.project_range(x0)?],
        q_residuals: vec![],
        fejer_gaps: vec![],
        stop: StopReason::MaxIters,
    };
    for k in 0..stop.max_iters {
        let x = trace.last().clone();
        let next = match step(&x) {
            Ok(y) => y,
            Err(e) => {
                trace.stop = StopReason::SolverFailure { iteration: k, reason: e.to_string() };
                return Ok(trace);
            }
        };
        let diff = &x - &next;
        let q_res = q.seminorm(&diff)?;
        trace.q_residuals.push(q_res);
        trace.range_parts.push(q.project_range(&next)?);
        trace.iterates.push(next);
        if q_res <= tol && stop.full_res_tol.is_none_or(|t| diff.norm() <= t) {
            trace.stop = StopReason::Tolerance;
            break;
        }
    }
    Ok(trace)
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn header(dim: usize) -> Vec<String> {
    let mut h = vec!["k".to_string()];
    h.extend((0..dim).map(|i| format!("x_{i}")));
    h.extend((0..dim).map(|i| format!("xr_{i}")));
    h.push("q_residual".into());
    h.push("fejer_gap".into());
    h
}

/// One row per step. `fejer_gap` is the Fejer margin against the final
/// iterate, and `NaN` when the run did not stop by tolerance.
pub fn write_csv<W: Write>(out: W, trace: &IterationTrace) -> Result<()> {
    let dim = trace.iterates[0].len();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(dim))?;
    for k in 1..trace.iterates.len() {
        let mut row = vec![k.to_string()];
        row.extend(trace.iterates[k].iter().map(|&v| fmt(v)));
        row.extend(trace.range_parts[k].iter().map(|&v| fmt(v)));
        row.push(fmt(trace.q_residuals[k - 1]));
        row.push(fmt(trace.fejer_gaps.get(k - 1).copied().unwrap_or(f64::NAN)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
