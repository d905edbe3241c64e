//! Browser bindings for the demo page in `www/`.
//!
//! Every export returns a flat `Float64Array`; the page slices it into
//! tuples. The plain functions below the bindings carry the logic and are
//! tested natively.

use nalgebra::DVector;
use wasm_bindgen::prelude::*;

use ppa_core::operator::{Builtin2D, Prox, ProxFunction, SetValuedOp};
use ppa_core::resolvent::{self, Strategy};
use ppa_core::splitting::{drs_step, DrsState};
use ppa_core::verify::{minty_covers, probe_line};

fn js(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// DRS on `weight |u| + (1/2)(u - shift)^2`: `(u, w, z)` for each step.
#[wasm_bindgen]
pub fn drs_trajectory(weight: f64, shift: f64, tau: f64, z0: f64, steps: usize) -> Result<Vec<f64>, JsValue> {
    trajectory(weight, shift, tau, z0, steps).map_err(js)
}

/// For `eg1`, `eg2`, `eg3`: `(w, covered, nonempty)` along the range axis,
/// where `covered` is the Minty verdict and `nonempty` says whether the
/// resolvent has a value at `w e_k`.
#[wasm_bindgen]
pub fn range_coverage(example: &str, half: f64, n: usize) -> Result<Vec<f64>, JsValue> {
    coverage(example, half, n).map_err(js)
}

/// `(z, prox_{tau f}(z))` on `n` points of `[-half, half]` for
/// `kind` in `abs`, `square`, `zero`.
#[wasm_bindgen]
pub fn prox_curve(kind: &str, weight: f64, tau: f64, half: f64, n: usize) -> Result<Vec<f64>, JsValue> {
    curve(kind, weight, tau, half, n).map_err(js)
}

pub fn trajectory(weight: f64, shift: f64, tau: f64, z0: f64, steps: usize) -> Result<Vec<f64>, String> {
    let f = ProxFunction::abs(weight);
    let g = ProxFunction::shifted_square(1.0, &[shift]);
    f.validate().map_err(|e| e.to_string())?;
    let mut state = DrsState::from_z(DVector::from_element(1, z0));
    let mut out = Vec::with_capacity(3 * steps);
    for _ in 0..steps {
        state = drs_step(&f, &g, tau, &state).map_err(|e| e.to_string())?;
        out.extend([state.u[0], state.w[0], state.z[0]]);
    }
    Ok(out)
}

pub fn coverage(example: &str, half: f64, n: usize) -> Result<Vec<f64>, String> {
    let op = Builtin2D::from_name(example).ok_or_else(|| format!("unknown example `{example}`"))?;
    let q = op.default_metric();
    let axes = q.range_axes().ok_or("metric is not axis aligned")?;
    let k = axes[0];
    let lambda = q.diagonal_entries().ok_or("metric is not diagonal")?[k];
    let a = SetValuedOp::Graph2D(op);
    let mut out = Vec::with_capacity(3 * n);
    for w in probe_line(n, half) {
        let covered = minty_covers(op, &q, w).map_err(|e| e.to_string())?;
        let mut x = DVector::zeros(2);
        x[k] = w / lambda.sqrt();
        let nonempty = match resolvent::solve(&a, &q, &x, Strategy::Auto) {
            Ok(r) => !r.is_empty(),
            Err(e) => return Err(e.to_string()),
        };
        out.extend([w, f64::from(u8::from(covered)), f64::from(u8::from(nonempty))]);
    }
    Ok(out)
}

pub fn curve(kind: &str, weight: f64, tau: f64, half: f64, n: usize) -> Result<Vec<f64>, String> {
    let f = match kind {
        "abs" => ProxFunction::abs(weight),
        "square" => ProxFunction::shifted_square(weight, &[0.0]),
        "zero" => ProxFunction::Zero { dim: 1 },
        other => return Err(format!("unknown function `{other}`")),
    };
    let mut out = Vec::with_capacity(2 * n);
    for z in probe_line(n, half) {
        let p = f.prox(tau, &DVector::from_element(1, z)).map_err(|e| e.to_string())?;
        out.extend([z, p[0]]);
    }
    Ok(out)
}
