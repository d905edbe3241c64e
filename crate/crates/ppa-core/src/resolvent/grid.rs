//! Brute-force resolvent search for planar operators.
//!
//! The residual `dist(Q (x - y), A y)` is minimised over growing boxes
//! around `x`, refining around the best cell each time. A minimiser stuck on
//! the box boundary while the residual keeps falling means the infimum is
//! approached at infinity, which is reported as `UnboundedSearch` rather than
//! as a solution or as `Empty`.

use nalgebra::DVector;

use super::{KernelSet, ResolventStatus};
use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::operator::SetValuedOp;

#[derive(Debug, Clone)]
pub struct GridConfig {
    /// Half-widths of the successive search boxes.
    pub radii: Vec<f64>,
    /// Points per axis on the coarse grid.
    pub points: usize,
    /// Stop refining once the cell is this small.
    pub min_step: f64,
    /// `Empty` is declared above `floor_factor * (1 + ||x||)`.
    pub floor_factor: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { radii: vec![1.0, 10.0, 100.0, 1000.0], points: 201, min_step: 1e-4, floor_factor: 1e-3 }
    }
}

struct Search {
    best: DVector<f64>,
    residual: f64,
    on_boundary: bool,
}

pub(super) fn solve(a: &SetValuedOp, q: &Metric, x: &DVector<f64>, cfg: &GridConfig) -> Result<ResolventStatus> {
    if x.len() != 2 {
        return Err(Error::StrategyMismatch("grid search is planar".into()));
    }
    let residual = |y: &DVector<f64>| -> f64 {
        let u = q.matrix() * (x - y);
        a.inclusion_residual(y, &u).unwrap_or(f64::INFINITY)
    };
    let floor = cfg.floor_factor * (1.0 + x.norm());
    let mut history: Vec<Search> = vec![];
    for &radius in &cfg.radii {
        let s = search_box(&residual, x, radius, cfg);
        let done = !s.on_boundary && s.residual <= floor;
        history.push(s);
        if done {
            break;
        }
    }
    let last = history.last().expect("at least one radius");
    let k = history.len() - 1;
    let trend = k > 0
        && history[..k].iter().all(|s| s.on_boundary)
        && history.windows(2).all(|w| w[1].residual < w[0].residual);
    // an interior minimum just past a run of falling boundary minima is the
    // same escaping valley, typically with the residual underflowing to zero
    let escaped = trend && (0..2).any(|i| (last.best[i] - x[i]).abs() > cfg.radii[k - 1]);
    if escaped {
        return Err(Error::UnboundedSearch);
    }
    if !last.on_boundary {
        if last.residual <= floor {
            let y = last.best.clone();
            return Ok(if q.is_degenerate() {
                ResolventStatus::RangeUnique { range_part: q.project_range(&y)?, kernel_set: KernelSet::Unknown, selected: y }
            } else {
                ResolventStatus::Unique(y)
            });
        }
        return Ok(ResolventStatus::Empty);
    }
    if trend || last.residual <= floor {
        return Err(Error::UnboundedSearch);
    }
    Ok(ResolventStatus::Empty)
}

fn search_box(residual: &dyn Fn(&DVector<f64>) -> f64, centre: &DVector<f64>, radius: f64, cfg: &GridConfig) -> Search {
    let coarse = 2.0 * radius / (cfg.points.max(3) - 1) as f64;
    let steps = (radius / coarse).round() as i64;
    // lattice anchored at integer multiples of the step, so coordinate
    // kinks at zero are hit exactly
    let base = centre.map(|c| (c / coarse).round());
    let (mut best, mut value) = scan(residual, &base, coarse, steps);
    let edge = |p: &DVector<f64>| (0..2).any(|k| (p[k] - centre[k]).abs() >= radius - 1.5 * coarse);
    let on_boundary = edge(&best);

    let mut step = coarse;
    while step > cfg.min_step {
        // +-2 old cells at a tenth of the step
        step /= 10.0;
        let (b, v) = scan_around(residual, &best, step, 20);
        if v <= value {
            best = b;
            value = v;
        }
    }
    Search { best, residual: value, on_boundary }
}

/// Scans the lattice `(base + k) * h` for `|k_i| <= steps`.
fn scan(residual: &dyn Fn(&DVector<f64>) -> f64, base: &DVector<f64>, h: f64, steps: i64) -> (DVector<f64>, f64) {
    let mut best = base * h;
    let mut best_k = (steps + 1, steps + 1);
    let mut value = f64::INFINITY;
    for i in -steps..=steps {
        for j in -steps..=steps {
            let p = DVector::from_vec(vec![(base[0] + i as f64) * h, (base[1] + j as f64) * h]);
            let r = residual(&p);
            // ties go to the point nearest the centre, so a flat valley
            // through the box is not mistaken for a boundary minimum
            let nearer = (i * i + j * j) < (best_k.0 * best_k.0 + best_k.1 * best_k.1);
            if r < value - 1e-15 || (r <= value + 1e-15 && nearer) {
                value = r;
                best = p;
                best_k = (i, j);
            }
        }
    }
    (best, value)
}

/// Scans `centre + k h` for `|k_i| <= steps`.
fn scan_around(residual: &dyn Fn(&DVector<f64>) -> f64, centre: &DVector<f64>, h: f64, steps: i64) -> (DVector<f64>, f64) {
    let mut best = centre.clone();
    let mut value = f64::INFINITY;
    for i in -steps..=steps {
        for j in -steps..=steps {
            let p = DVector::from_vec(vec![centre[0] + i as f64 * h, centre[1] + j as f64 * h]);
            let r = residual(&p);
            if r < value {
                value = r;
                best = p;
            }
        }
    }
    (best, value)
}
