//! Numerical checks of the well-posedness and convergence properties of
//! the preconditioned resolvent.
//!
//! Every check returns a [`CheckReport`]. Sampling is seeded and strictly
//! sequential, so a report is a pure function of its inputs and seed.

mod identities;
mod minty;

use nalgebra::DVector;
use rand::Rng;
use serde::Serialize;

pub use identities::{check_equality_and_moreau, check_moreau_identity, eval_equality_chain, EqualityChain};
pub use minty::{check_minty_full_domain_agreement, check_minty_range, check_sri_condition, metric_range, minty_covers, probe_line};

use crate::error::{Error, Result};
use crate::iteration::{self, FixedPointRef, StopRule};
use crate::metric::Metric;
use crate::operator::{Interval, ProxFunction, SetDescription, SetPiece, SetValuedOp, Structure};
use crate::resolvent::{self, KernelSet, ResolventStatus, Strategy};
use crate::sampling::{seeded_rng, SeededRng, VectorSampler};
use crate::splitting::{alm_kernel_map, drs_kernel_map};

pub const MONOTONE_SLACK: f64 = 1e-10;
pub const FNE_SLACK: f64 = 1e-9;
pub const IDENTITY_SLACK: f64 = 1e-9;
/// Witnesses kept per report, worst first.
pub const MAX_WITNESSES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub input: Vec<f64>,
    pub values: Vec<f64>,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check_name: String,
    pub n_samples: usize,
    pub n_violations: usize,
    /// Samples where the check could not decide, e.g. an unbounded search.
    pub n_inconclusive: usize,
    /// Smallest margin seen; negative beyond `slack` is a violation.
    pub worst_margin: f64,
    pub slack: f64,
    pub seed: Option<u64>,
    pub witnesses: Vec<Witness>,
}

impl CheckReport {
    pub fn new(check_name: &str, slack: f64, seed: Option<u64>) -> Self {
        Self {
            check_name: check_name.to_string(),
            n_samples: 0,
            n_violations: 0,
            n_inconclusive: 0,
            worst_margin: f64::INFINITY,
            slack,
            seed,
            witnesses: vec![],
        }
    }

    pub fn passes(&self) -> bool {
        self.n_violations == 0
    }

    /// Records one sample; `margin < -slack` counts as a violation.
    pub fn record(&mut self, margin: f64, input: &[f64], values: &[f64]) {
        self.n_samples += 1;
        self.worst_margin = self.worst_margin.min(margin);
        if margin < -self.slack || margin.is_nan() {
            self.n_violations += 1;
            self.witnesses.push(Witness { input: input.to_vec(), values: values.to_vec(), margin });
            self.witnesses.sort_by(|a, b| a.margin.total_cmp(&b.margin));
            self.witnesses.truncate(MAX_WITNESSES);
        }
    }

    pub fn record_inconclusive(&mut self) {
        self.n_samples += 1;
        self.n_inconclusive += 1;
    }
}

fn concat(parts: &[&DVector<f64>]) -> Vec<f64> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

/// How graph pairs `(x, u)` with `u in A x` are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphSampling {
    /// Draw `x` from the region and `u` from `A x`.
    Direct,
    /// Draw `x` from the region and a scale `c`, then take `y` in
    /// `(cQ + A)^{-1} cQ x` and `u = cQ (x - y)`. Every pair lands in
    /// `gra A` with `u in ran Q`; only empty resolvents are rejected.
    ResolventImage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphSampler {
    pub region: VectorSampler,
    pub mode: GraphSampling,
}

impl GraphSampler {
    /// Resolvent images when `Q` is degenerate, direct draws otherwise.
    pub fn restricted(region: VectorSampler, q: &Metric) -> Self {
        let mode = if q.is_degenerate() { GraphSampling::ResolventImage } else { GraphSampling::Direct };
        Self { region, mode }
    }

    pub fn direct(region: VectorSampler) -> Self {
        Self { region, mode: GraphSampling::Direct }
    }

    fn draw(&self, a: &SetValuedOp, q: &Metric, rng: &mut SeededRng) -> Result<Option<(DVector<f64>, DVector<f64>)>> {
        let x = self.region.sample(rng);
        match self.mode {
            GraphSampling::Direct => Ok(pick_element(&a.graph_eval(&x)?, rng).map(|u| (x, u))),
            GraphSampling::ResolventImage => {
                let c = 10f64.powf(rng.random_range(-1.0..=1.0));
                let qc = q.scaled(c)?;
                let out = match resolvent::solve(a, &qc, &x, Strategy::Auto) {
                    Ok(out) => out,
                    Err(Error::UnboundedSearch) => return Ok(None),
                    Err(e) => return Err(e),
                };
                // every listed member of a multi-valued outcome is a valid image
                let y = match &out.status {
                    ResolventStatus::MultiValued(ys) if !ys.is_empty() => Some(&ys[rng.random_range(0..ys.len())]),
                    _ => out.element(),
                };
                Ok(y.map(|y| (y.clone(), qc.apply(&(&x - y)).expect("dimension checked by solve"))))
            }
        }
    }
}

/// A random member of `set`, or `None` when it is empty.
fn pick_element(set: &SetDescription, rng: &mut SeededRng) -> Option<DVector<f64>> {
    if set.pieces.is_empty() {
        return None;
    }
    let piece = &set.pieces[rng.random_range(0..set.pieces.len())];
    match piece {
        SetPiece::Box(ivs) => {
            let mut out = DVector::zeros(ivs.len());
            for (k, iv) in ivs.iter().enumerate() {
                out[k] = pick_in_interval(iv, rng)?;
            }
            Some(out)
        }
        _ => piece.samples().into_iter().next(),
    }
}

fn pick_in_interval(iv: &Interval, rng: &mut SeededRng) -> Option<f64> {
    if iv.is_empty() {
        return None;
    }
    if iv.is_point() {
        return Some(iv.lo);
    }
    let t = match (iv.lo.is_finite(), iv.hi.is_finite()) {
        (true, true) => rng.random_range(iv.lo..=iv.hi),
        (true, false) => iv.lo + rng.random_range(0.0..=5.0),
        (false, true) => iv.hi - rng.random_range(0.0..=5.0),
        (false, false) => rng.random_range(-5.0..=5.0),
    };
    // open ends drawn exactly are nudged inside
    Some(if iv.contains(t, 0.0) { t } else { 0.5 * (t + iv.min_abs_element()?) })
}

/// Monotonicity of `A` over the whole graph, from direct draws.
pub fn check_monotonicity(a: &SetValuedOp, region: &VectorSampler, n: usize, seed: u64) -> Result<CheckReport> {
    let q = Metric::scaled_identity(a.dim(), 1.0)?;
    monotone_pairs("monotone", a, &q, &GraphSampler::direct(region.clone()), n, seed, false)
}

/// Monotonicity of `A` on the pairs whose value lies in `ran Q`.
///
/// Direct draws are filtered on `||P_k u|| <= 1e-10 (1 + ||u||)`; if more
/// than 99.9% are rejected the check fails with `SamplerStarved`.
pub fn check_restricted_monotonicity(
    a: &SetValuedOp,
    q: &Metric,
    sampler: &GraphSampler,
    n: usize,
    seed: u64,
) -> Result<CheckReport> {
    monotone_pairs("restricted-monotone", a, q, sampler, n, seed, true)
}

fn monotone_pairs(
    name: &str,
    a: &SetValuedOp,
    q: &Metric,
    sampler: &GraphSampler,
    n: usize,
    seed: u64,
    restricted: bool,
) -> Result<CheckReport> {
    let mut rng = seeded_rng(seed);
    let mut report = CheckReport::new(name, MONOTONE_SLACK, Some(seed));
    let needed = 2 * n;
    let max_attempts = (1000 * needed).max(1000);
    let mut points = Vec::with_capacity(needed);
    let (mut attempted, mut rejected) = (0usize, 0usize);
    while points.len() < needed {
        if attempted >= max_attempts {
            return Err(Error::SamplerStarved { rejected, attempted });
        }
        attempted += 1;
        let Some((x, u)) = sampler.draw(a, q, &mut rng)? else {
            rejected += 1;
            continue;
        };
        if restricted && q.project_kernel(&u)?.norm() > 1e-10 * (1.0 + u.norm()) {
            rejected += 1;
            continue;
        }
        points.push((x, u));
    }
    if attempted >= 1000 && rejected as f64 > 0.999 * attempted as f64 {
        return Err(Error::SamplerStarved { rejected, attempted });
    }
    for pair in points.chunks(2) {
        let ((x, u), (y, v)) = (&pair[0], &pair[1]);
        let margin = (x - y).dot(&(u - v));
        report.record(margin, &concat(&[x, u, y, v]), &[margin]);
    }
    Ok(report)
}

/// `||Tx - Ty||_Q^2 + ||(I-T)x - (I-T)y||_Q^2 <= ||x - y||_Q^2` on sampled
/// pairs. Inputs where either resolvent is empty are inconclusive.
pub fn check_firm_nonexpansive(
    a: &SetValuedOp,
    q: &Metric,
    region: &VectorSampler,
    n: usize,
    seed: u64,
    strategy: Strategy,
) -> Result<CheckReport> {
    let mut rng = seeded_rng(seed);
    let mut report = CheckReport::new("fne", FNE_SLACK, Some(seed));
    for _ in 0..n {
        let x = region.sample(&mut rng);
        let y = region.sample(&mut rng);
        let (Some(tx), Some(ty)) = (solve_element(a, q, &x, strategy)?, solve_element(a, q, &y, strategy)?) else {
            report.record_inconclusive();
            continue;
        };
        let lhs = q.seminorm_sq(&(&tx - &ty))? + q.seminorm_sq(&((&x - &tx) - (&y - &ty)))?;
        let rhs = q.seminorm_sq(&(&x - &y))?;
        report.record(rhs - lhs, &concat(&[&x, &y]), &[lhs, rhs]);
    }
    Ok(report)
}

fn solve_element(a: &SetValuedOp, q: &Metric, x: &DVector<f64>, strategy: Strategy) -> Result<Option<DVector<f64>>> {
    match resolvent::solve(a, q, x, strategy) {
        Ok(out) => Ok(out.element().cloned()),
        Err(Error::UnboundedSearch) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Solves at each probe; an empty resolvent is a violation and an
/// unbounded search is inconclusive.
pub fn check_full_domain(a: &SetValuedOp, q: &Metric, probes: &[DVector<f64>], strategy: Strategy) -> Result<CheckReport> {
    let mut report = CheckReport::new("fulldomain", 0.0, None);
    for x in probes {
        match resolvent::solve(a, q, x, strategy) {
            Ok(out) if out.is_empty() => report.record(-1.0, x.as_slice(), &[]),
            Ok(_) => report.record(0.0, x.as_slice(), &[]),
            Err(Error::UnboundedSearch) => report.record_inconclusive(),
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

/// Whether the kernel part of the resolvent is unique at each input.
///
/// A set-valued kernel part is a violation. For planar table operators the
/// report also records, as witness values, whether the sufficient condition
/// "`P_k A^{-1} Q(x - y)` is a single point" held; it may fail while the
/// resolvent is still unique.
pub fn check_single_valuedness(a: &SetValuedOp, q: &Metric, inputs: &[DVector<f64>]) -> Result<CheckReport> {
    let mut report = CheckReport::new("single", 0.0, None);
    let kernel_axes: Vec<usize> = match q.range_axes() {
        Some(r) => (0..q.dim()).filter(|k| !r.contains(k)).collect(),
        None => vec![],
    };
    for x in inputs {
        let out = resolvent::solve(a, q, x, Strategy::Auto)?;
        let (unique, y) = match &out.status {
            ResolventStatus::Unique(y) => (true, y.clone()),
            ResolventStatus::RangeUnique { kernel_set: KernelSet::Known(set), selected, .. } => {
                let single = kernel_axes.iter().all(|&k| set.coordinate(k).iter().all(Interval::is_point));
                (single, selected.clone())
            }
            ResolventStatus::RangeUnique { kernel_set: KernelSet::Unknown, .. } => return Err(Error::KernelSetUnknown),
            ResolventStatus::Empty => {
                report.record_inconclusive();
                continue;
            }
            ResolventStatus::MultiValued(_) => (false, x.clone()),
        };
        let unique = unique && kernel_map_agrees(a, x, &y)?;
        let sufficient = match a {
            SetValuedOp::Graph2D(g) => {
                let u = q.apply(&(x - &y))?;
                let pre = g.inverse_graph_eval(&u);
                f64::from(u8::from(kernel_axes.iter().all(|&k| pre.coordinate(k).iter().all(Interval::is_point))))
            }
            _ => f64::NAN,
        };
        report.record(if unique { 0.0 } else { -1.0 }, x.as_slice(), &concat(&[&y, &DVector::from_element(1, sufficient)]));
    }
    Ok(report)
}

/// For embeddings, the engine's kernel part must match the closed-form
/// kernel map.
fn kernel_map_agrees(a: &SetValuedOp, x: &DVector<f64>, y: &DVector<f64>) -> Result<bool> {
    let tol = 1e-10 * (1.0 + x.norm() + y.norm());
    match a.structure() {
        Some(Structure::Drs { g, tau, .. }) => {
            let n = g.dim();
            let (b1, b2) = drs_kernel_map(g, *tau, &x.rows(2 * n, n).into(), &y.rows(2 * n, n).into())?;
            Ok((b1 - y.rows(0, n)).norm() <= tol && (b2 - y.rows(n, n)).norm() <= tol)
        }
        Some(Structure::Alm { b, tau, .. }) => {
            let n = b.len();
            let v = alm_kernel_map(*tau, &x.rows(n, n).into(), &y.rows(n, n).into(), b)?;
            Ok((v - y.rows(0, n)).norm() <= tol)
        }
        _ => Ok(true),
    }
}

/// A closed-form kernel map with its Lipschitz ceiling.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelMap {
    /// `(b1, b2)` of the DRS embedding; ceiling 3.
    Drs { g: ProxFunction, tau: f64 },
    /// `v` of the ALM embedding; ceiling `2/tau`.
    Alm { b: DVector<f64>, tau: f64 },
}

impl KernelMap {
    pub fn ceiling(&self) -> f64 {
        match self {
            KernelMap::Drs { .. } => 3.0,
            KernelMap::Alm { tau, .. } => 2.0 / tau,
        }
    }

    fn dim(&self) -> usize {
        match self {
            KernelMap::Drs { g, .. } => g.dim(),
            KernelMap::Alm { b, .. } => b.len(),
        }
    }

    fn eval(&self, a: &DVector<f64>, c: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            KernelMap::Drs { g, tau } => {
                let (b1, b2) = drs_kernel_map(g, *tau, a, c)?;
                Ok(DVector::from_iterator(2 * b1.len(), b1.iter().chain(b2.iter()).copied()))
            }
            KernelMap::Alm { b, tau } => alm_kernel_map(*tau, a, c, b),
        }
    }
}

/// Ratios `||k(a, c) - k(a', c')|| / ||a - a'||` over pairs coupled by
/// `||c - c'|| <= ||a - a'||`, against the map's ceiling.
pub fn check_kernel_map_lipschitz(map: &KernelMap, region_half: f64, n: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = seeded_rng(seed);
    let sampler = VectorSampler::cube(map.dim(), region_half);
    let ceiling = map.ceiling();
    let mut report = CheckReport::new("kernel-lipschitz", 1e-9, Some(seed));
    for _ in 0..n {
        let a1 = sampler.sample(&mut rng);
        let a2 = sampler.sample(&mut rng);
        let c1 = sampler.sample(&mut rng);
        let d = (&a1 - &a2).norm();
        if d == 0.0 {
            report.record_inconclusive();
            continue;
        }
        let dir = sampler.sample(&mut rng);
        let dir_norm = dir.norm();
        let c2 = if dir_norm > 0.0 { &c1 + dir * (d * rng.random_range(0.0..=1.0) / dir_norm) } else { c1.clone() };
        let ratio = (map.eval(&a1, &c1)? - map.eval(&a2, &c2)?).norm() / d;
        report.record(ceiling - ratio, &concat(&[&a1, &c1, &a2, &c2]), &[ratio]);
    }
    Ok(report)
}

/// Empirical Lipschitz constant of the kernel part of the resolvent in the
/// range part of its input. Embeddings are held to their ceilings; other
/// operators only report the largest ratio as `-worst_margin`.
pub fn check_resolvent_lipschitz(
    a: &SetValuedOp,
    q: &Metric,
    region: &VectorSampler,
    n: usize,
    seed: u64,
    strategy: Strategy,
) -> Result<CheckReport> {
    let ceiling = match a.structure() {
        Some(Structure::Drs { .. }) => Some(3.0),
        Some(Structure::Alm { tau, .. }) => Some(2.0 / tau),
        _ => None,
    };
    let mut rng = seeded_rng(seed);
    let mut report = CheckReport::new("lipschitz", if ceiling.is_some() { 1e-9 } else { f64::INFINITY }, Some(seed));
    for _ in 0..n {
        let x1 = region.sample(&mut rng);
        let x2 = region.sample(&mut rng);
        let d = (q.project_range(&x1)? - q.project_range(&x2)?).norm();
        let (Some(y1), Some(y2)) = (solve_element(a, q, &x1, strategy)?, solve_element(a, q, &x2, strategy)?) else {
            report.record_inconclusive();
            continue;
        };
        if d == 0.0 {
            report.record_inconclusive();
            continue;
        }
        let ratio = (q.project_kernel(&y1)? - q.project_kernel(&y2)?).norm() / d;
        report.record(ceiling.unwrap_or(0.0) - ratio, &concat(&[&x1, &x2]), &[ratio]);
    }
    Ok(report)
}

/// Fejer margins and the summability bound along a run from `x0`.
///
/// The reference fixed point comes from a run ten times as long. Each
/// Fejer margin is one sample; the summability slack is one more.
pub fn check_fejer(a: &SetValuedOp, q: &Metric, x0: &DVector<f64>, strategy: Strategy, budget: usize) -> Result<CheckReport> {
    let reference = FixedPointRef::by_iteration(a, q, x0, strategy, 10 * budget)?;
    let stop = StopRule { max_iters: budget, ..StopRule::default() };
    let trace = iteration::iterate(a, q, x0, strategy, stop)?;
    let fejer = iteration::fejer_report(&trace, q, &reference)?;
    let mut report = CheckReport::new("fejer", iteration::FEJER_SLACK, None);
    for (k, m) in fejer.margins.iter().enumerate() {
        report.record(*m, trace.iterates[k].as_slice(), &[*m]);
    }
    let sum = iteration::summability_report(&trace, q, &reference)?;
    let total = sum.cumulative.last().copied().unwrap_or(0.0);
    // `sum.slack` already includes the summability allowance
    let margin = if sum.slack >= 0.0 { 0.0 } else { f64::NEG_INFINITY };
    report.record(margin, x0.as_slice(), &[total, sum.bound, sum.slack]);
    Ok(report)
}

/// `Fix(P_r T) = P_r(zer A)` on supplied zeros and probes.
pub fn check_fix_equals_zeros(
    a: &SetValuedOp,
    q: &Metric,
    zeros: &[DVector<f64>],
    probes: &[DVector<f64>],
    strategy: Strategy,
) -> Result<CheckReport> {
    let fz = iteration::fix_equals_projected_zeros(a, q, zeros, probes, strategy)?;
    let mut report = CheckReport::new("fixzer", 0.0, None);
    for (z, r) in zeros.iter().zip(&fz.zero_residuals) {
        report.record(1e-8 - r, z.as_slice(), &[*r]);
    }
    for r in &fz.probe_zero_residuals {
        report.record(1e-6 - r, &[], &[*r]);
    }
    Ok(report)
}

#[cfg(test)]
mod tests;
