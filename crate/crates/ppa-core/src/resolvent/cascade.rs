//! Block elimination for `0 in A y + Q (y - x)`.
//!
//! Writing the system as `0 in S_i(y_i) + sum_j C_ij y_j + r_i` with
//! `C = L + Q`, rows without a nonsmooth term and with invertible `C_ii` are
//! eliminated first. What remains must be acyclic; each row is then one prox
//! step, one conjugate subdifferential lookup, or one linear solve.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::operator::{block_starts, Interval, ProxFunction, SetDescription, SetValuedOp};

/// Value of one block of the solution.
#[derive(Debug, Clone)]
enum BlockValue {
    Point(DVector<f64>),
    Box(Vec<Interval>),
}

impl BlockValue {
    fn point(&self) -> Option<&DVector<f64>> {
        match self {
            BlockValue::Point(p) => Some(p),
            BlockValue::Box(_) => None,
        }
    }
}

struct Elimination {
    row: usize,
    /// `y_e = sum_j coef[j] y_j + constant`.
    coef: Vec<DMatrix<f64>>,
    constant: DVector<f64>,
}

pub(super) fn solve(a: &SetValuedOp, q: &Metric, x: &DVector<f64>) -> Result<SetDescription> {
    let canon = a.canonical()?;
    let dims = canon.dims.clone();
    let nb = dims.len();
    let starts = block_starts(&dims);
    let qm = q.matrix();
    let qx = qm * x;

    let mut c: Vec<Vec<DMatrix<f64>>> = (0..nb)
        .map(|i| (0..nb).map(|j| &canon.linear[i][j] + qm.view((starts[i], starts[j]), (dims[i], dims[j]))).collect())
        .collect();
    let mut r: Vec<DVector<f64>> = (0..nb).map(|i| &canon.offsets[i] - qx.rows(starts[i], dims[i])).collect();
    let set_parts: Vec<Option<(f64, ProxFunction)>> = canon.diagonal.iter().map(|d| d.set_part.clone()).collect();

    let scale = c.iter().flatten().fold(1.0_f64, |m, b| m.max(b.amax()));
    let negligible = |m: &DMatrix<f64>| m.amax() <= 1e-13 * scale;

    let mut active = vec![true; nb];
    let mut eliminated: Vec<Elimination> = vec![];
    while let Some(e) = (0..nb).find(|&i| active[i] && set_parts[i].is_none() && invertible(&c[i][i])) {
        let inv = c[e][e].clone().try_inverse().expect("checked invertible");
        let coef: Vec<DMatrix<f64>> =
            (0..nb).map(|j| if j == e || !active[j] { DMatrix::zeros(dims[e], dims[j]) } else { -&inv * &c[e][j] }).collect();
        let constant = -&inv * &r[e];
        for i in (0..nb).filter(|&i| active[i] && i != e) {
            let cie = c[i][e].clone();
            if negligible(&cie) {
                continue;
            }
            for j in (0..nb).filter(|&j| active[j] && j != e) {
                c[i][j] += &cie * &coef[j];
            }
            r[i] += &cie * &constant;
            c[i][e] = DMatrix::zeros(dims[i], dims[e]);
        }
        active[e] = false;
        eliminated.push(Elimination { row: e, coef, constant });
    }

    let order = topological_order(&c, &active, &negligible)?;
    let mut values: Vec<Option<BlockValue>> = vec![None; nb];
    for &i in &order {
        let mut known = r[i].clone();
        for j in (0..nb).filter(|&j| j != i && active[j] && !negligible(&c[i][j])) {
            let yj = values[j]
                .as_ref()
                .and_then(BlockValue::point)
                .ok_or_else(|| Error::StrategyMismatch("row depends on a multi-valued block".into()))?;
            known += &c[i][j] * yj;
        }
        match solve_row(&c[i][i], &known, set_parts[i].as_ref())? {
            Some(v) => values[i] = Some(v),
            None => return Ok(SetDescription::empty()),
        }
    }
    for elim in eliminated.iter().rev() {
        let mut y = elim.constant.clone();
        for (j, coef) in elim.coef.iter().enumerate() {
            if negligible(coef) {
                continue;
            }
            let yj = values[j]
                .as_ref()
                .and_then(BlockValue::point)
                .ok_or_else(|| Error::StrategyMismatch("eliminated block depends on a multi-valued block".into()))?;
            y += coef * yj;
        }
        values[elim.row] = Some(BlockValue::Point(y));
    }

    let mut factors = Vec::with_capacity(x.len());
    for v in values {
        match v.expect("every block solved") {
            BlockValue::Point(p) => factors.extend(p.iter().map(|&t| Interval::point(t))),
            BlockValue::Box(ivs) => factors.extend(ivs),
        }
    }
    Ok(SetDescription::from_box(factors))
}

fn invertible(m: &DMatrix<f64>) -> bool {
    if m.is_empty() {
        return true;
    }
    let sv = m.singular_values();
    sv.min() > 1e-12 * sv.max().max(f64::MIN_POSITIVE)
}

fn topological_order(
    c: &[Vec<DMatrix<f64>>],
    active: &[bool],
    negligible: &dyn Fn(&DMatrix<f64>) -> bool,
) -> Result<Vec<usize>> {
    let nb = c.len();
    let deps = |i: usize| -> Vec<usize> { (0..nb).filter(|&j| j != i && active[j] && !negligible(&c[i][j])).collect() };
    let mut done = vec![false; nb];
    let mut order = vec![];
    let remaining = active.iter().filter(|&&a| a).count();
    while order.len() < remaining {
        let next = (0..nb).find(|&i| active[i] && !done[i] && deps(i).iter().all(|&j| done[j]));
        let i = next.ok_or_else(|| Error::StrategyMismatch("coupled nonsmooth rows form a cycle".into()))?;
        done[i] = true;
        order.push(i);
    }
    Ok(order)
}

/// Solves `0 in s df(y) + C y + known` for one block. `None` means empty.
fn solve_row(cii: &DMatrix<f64>, known: &DVector<f64>, set_part: Option<&(f64, ProxFunction)>) -> Result<Option<BlockValue>> {
    let n = known.len();
    match set_part {
        Some((s, f)) => {
            if let Some(c) = scalar_multiple(cii) {
                if c > 0.0 {
                    let y = crate::operator::Prox::prox(f, s / c, &(-known / c))?;
                    return Ok(Some(BlockValue::Point(y)));
                }
                if c == 0.0 {
                    let set = f.conj_subdifferential(&(-known / *s))?;
                    let ivs = set.as_box().map(<[Interval]>::to_vec);
                    return Ok(match ivs {
                        None => None,
                        Some(ivs) if ivs.iter().all(Interval::is_point) => {
                            Some(BlockValue::Point(DVector::from_iterator(n, ivs.iter().map(|iv| iv.lo))))
                        }
                        Some(ivs) => Some(BlockValue::Box(ivs)),
                    });
                }
            }
            Err(Error::StrategyMismatch("diagonal block is not a nonnegative multiple of the identity".into()))
        }
        None => {
            if invertible(cii) {
                let y = cii.clone().try_inverse().expect("checked invertible") * (-known);
                return Ok(Some(BlockValue::Point(y)));
            }
            // singular: free coordinates must be whole zero columns
            let free: Vec<bool> = (0..n).map(|k| cii.column(k).iter().all(|&v| v == 0.0)).collect();
            let kept: Vec<usize> = (0..n).filter(|&k| !free[k]).collect();
            let reduced = DMatrix::from_fn(n, kept.len(), |i, j| cii[(i, kept[j])]);
            let sol = if kept.is_empty() {
                DVector::zeros(0)
            } else {
                let svd = reduced.clone().svd(true, true);
                if svd.rank(1e-12 * svd.singular_values.max()) < kept.len() {
                    return Err(Error::StrategyMismatch("singular block with a non-axis null space".into()));
                }
                svd.solve(&(-known), 1e-12 * svd.singular_values.max()).map_err(|e| Error::StrategyMismatch(e.into()))?
            };
            let res = (&reduced * &sol + known).norm();
            if res > 1e-10 * (1.0 + known.norm()) {
                return Ok(None);
            }
            let mut ivs = vec![Interval::real_line(); n];
            for (j, &k) in kept.iter().enumerate() {
                ivs[k] = Interval::point(sol[j]);
            }
            Ok(Some(BlockValue::Box(ivs)))
        }
    }
}

fn scalar_multiple(m: &DMatrix<f64>) -> Option<f64> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return None;
    }
    let c = m[(0, 0)];
    let tol = 1e-13 * (1.0 + m.amax());
    let ok = (0..n).all(|i| (0..n).all(|j| (m[(i, j)] - if i == j { c } else { 0.0 }).abs() <= tol));
    ok.then_some(if c.abs() <= tol { 0.0 } else { c })
}
