//! Douglas-Rachford, ADMM and the augmented Lagrangian method as direct
//! recursions, together with the kernel maps of their block embeddings.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::operator::{Prox, ProxFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct DrsState {
    pub u: DVector<f64>,
    pub w: DVector<f64>,
    pub z: DVector<f64>,
}

impl DrsState {
    /// Starts from `z` with `u = w = 0`.
    pub fn from_z(z: DVector<f64>) -> Self {
        let n = z.len();
        Self { u: DVector::zeros(n), w: DVector::zeros(n), z }
    }

    /// `(u, w, z)` stacked, the layout of the block embedding.
    pub fn stacked(&self) -> DVector<f64> {
        stack(&[&self.u, &self.w, &self.z])
    }

    pub fn from_stacked(x: &DVector<f64>) -> Result<Self> {
        let n = x.len() / 3;
        if 3 * n != x.len() {
            return Err(Error::DimensionMismatch { expected: 3 * n, found: x.len() });
        }
        Ok(Self { u: x.rows(0, n).into(), w: x.rows(n, n).into(), z: x.rows(2 * n, n).into() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub s: DVector<f64>,
    pub t: DVector<f64>,
    pub u: DVector<f64>,
}

impl AdmmState {
    pub fn stacked(&self) -> DVector<f64> {
        stack(&[&self.s, &self.t, &self.u])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlmState {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
}

impl AlmState {
    pub fn stacked(&self) -> DVector<f64> {
        stack(&[&self.q, &self.p])
    }

    pub fn from_stacked(x: &DVector<f64>) -> Result<Self> {
        let n = x.len() / 2;
        if 2 * n != x.len() {
            return Err(Error::DimensionMismatch { expected: 2 * n, found: x.len() });
        }
        Ok(Self { q: x.rows(0, n).into(), p: x.rows(n, n).into() })
    }
}

fn stack(parts: &[&DVector<f64>]) -> DVector<f64> {
    DVector::from_iterator(parts.iter().map(|p| p.len()).sum(), parts.iter().flat_map(|p| p.iter().copied()))
}

fn check_step(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("step size must be positive, got {tau}")))
    }
}

/// One Douglas-Rachford step, `g` first:
/// `u+ = prox_{tau g}(z)`, `w+ = prox_{tau f}(2u+ - z)`, `z+ = z + w+ - u+`.
pub fn drs_step<F, G>(f: &F, g: &G, tau: f64, state: &DrsState) -> Result<DrsState>
where
    F: Prox + ?Sized,
    G: Prox + ?Sized,
{
    check_step(tau)?;
    let u = g.prox(tau, &state.z)?;
    let w = f.prox(tau, &(&u * 2.0 - &state.z))?;
    let z = &state.z + &w - &u;
    Ok(DrsState { u, w, z })
}

/// Kernel part `(b1, b2)` of the DRS embedding's resolvent, given the range
/// input `a` and range output `c`.
pub fn drs_kernel_map<G: Prox + ?Sized>(
    g: &G,
    tau: f64,
    a: &DVector<f64>,
    c: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    check_step(tau)?;
    let b1 = g.prox(tau, a)?;
    let b2 = &b1 - a + c;
    Ok((b1, b2))
}

/// One augmented Lagrangian step for `min F(q) s.t. q = b`:
/// `q+ = prox_{F/tau}(b + p/tau)`, `p+ = p - tau (q+ - b)`.
pub fn alm_step<F: Prox + ?Sized>(f: &F, b: &DVector<f64>, tau: f64, state: &AlmState) -> Result<AlmState> {
    check_step(tau)?;
    let q = f.prox(1.0 / tau, &(b + &state.p / tau))?;
    let p = &state.p - (&q - b) * tau;
    Ok(AlmState { q, p })
}

/// Kernel part `v = (a - c)/tau + b` of the ALM embedding's resolvent.
pub fn alm_kernel_map(tau: f64, a: &DVector<f64>, c: &DVector<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    check_step(tau)?;
    Ok((a - c) / tau + b)
}

/// Budget for iterative subproblem solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerConfig {
    pub budget: usize,
    pub tol: f64,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self { budget: 10_000, tol: 1e-10 }
    }
}

/// Solves `min_t g(t) + (tau/2) ||B t - z/tau||^2` and returns `(B t, t)`.
///
/// Exact when `B'B = beta I` (a scaled prox) or when `g` is quadratic (a
/// linear solve). Otherwise runs proximal gradient, which needs `B` to have
/// full row rank.
pub fn prox_infimal_postcomposition(
    g: &ProxFunction,
    b: &DMatrix<f64>,
    tau: f64,
    z: &DVector<f64>,
    cfg: InnerConfig,
) -> Result<(DVector<f64>, DVector<f64>)> {
    check_step(tau)?;
    g.validate()?;
    if b.ncols() != g.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), found: b.ncols() });
    }
    if z.len() != b.nrows() {
        return Err(Error::DimensionMismatch { expected: b.nrows(), found: z.len() });
    }
    let target = z / tau;
    let btb = b.transpose() * b;
    if let Some(beta) = scalar_gram(&btb) {
        let t = g.prox(1.0 / (tau * beta), &(b.transpose() * &target / beta))?;
        return Ok((b * &t, t));
    }
    let rank = b.rank(1e-12 * b.amax().max(f64::MIN_POSITIVE));
    if rank < b.nrows() {
        return Err(Error::RankDeficient);
    }
    if let Some((p, q)) = g.affine_gradient() {
        // (P + tau B'B) t = B'z - q
        let m = p + &btb * tau;
        let rhs = b.transpose() * z - q;
        let t = m.svd(true, true).solve(&rhs, 1e-13).map_err(|e| Error::InvalidParameter(e.into()))?;
        return Ok((b * &t, t));
    }
    let lip = tau * btb.symmetric_eigen().eigenvalues.amax();
    let mut t = b.clone().pseudo_inverse(1e-12).map_err(|e| Error::InvalidParameter(e.into()))? * &target;
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.budget {
        let grad = b.transpose() * (b * &t - &target) * tau;
        let next = g.prox(1.0 / lip, &(&t - grad / lip))?;
        residual = (&next - &t).norm() * lip;
        t = next;
        if residual <= cfg.tol {
            return Ok((b * &t, t));
        }
    }
    Err(Error::InnerSolverStalled { residual })
}

/// `Some(beta)` when `m = beta I` with `beta > 0`.
fn scalar_gram(m: &DMatrix<f64>) -> Option<f64> {
    let beta = m[(0, 0)];
    let tol = 1e-12 * m.amax();
    let ok = beta > tol && (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| (m[(i, j)] - if i == j { beta } else { 0.0 }).abs() <= tol));
    ok.then_some(beta)
}

/// One ADMM step for `min f(s) + g(t) s.t. A s + B t = 0`.
pub fn admm_step(
    f: &ProxFunction,
    g: &ProxFunction,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    tau: f64,
    state: &AdmmState,
    cfg: InnerConfig,
) -> Result<AdmmState> {
    check_step(tau)?;
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: b.nrows() });
    }
    // min f(s) + (tau/2)||A s - (u/tau - B t)||^2
    let (as_, s) = prox_infimal_postcomposition(f, a, tau, &(&state.u - b * &state.t * tau), cfg)?;
    let (bt, t) = prox_infimal_postcomposition(g, b, tau, &(&state.u - &as_ * tau), cfg)?;
    let u = &state.u - (as_ + bt) * tau;
    Ok(AdmmState { s, t, u })
}

/// `q -> inf { g(t) : B t = q }`, evaluated through its prox.
#[derive(Debug, Clone, PartialEq)]
pub struct InfimalPostcomposition {
    pub g: ProxFunction,
    pub b: DMatrix<f64>,
    pub cfg: InnerConfig,
}

impl Prox for InfimalPostcomposition {
    fn dim(&self) -> usize {
        self.b.nrows()
    }

    fn prox(&self, sigma: f64, w: &DVector<f64>) -> Result<DVector<f64>> {
        check_step(sigma)?;
        Ok(prox_infimal_postcomposition(&self.g, &self.b, 1.0 / sigma, &(w / sigma), self.cfg)?.0)
    }
}

/// `x -> h(-x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reflected<P>(pub P);

impl<P: Prox> Prox for Reflected<P> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn prox(&self, sigma: f64, w: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(-self.0.prox(sigma, &(-w))?)
    }
}

/// ADMM rewritten as Douglas-Rachford with step `1/tau` on
/// `f~(r) = (A |> f)(-r)` and `g~ = B |> g`.
///
/// With `z = u + tau B t`, the shadow variable is `Z = z / tau`, and a DRS
/// step from `Z` yields `U = B t` and `W = -A s+`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmAsDrs {
    pub f: Reflected<InfimalPostcomposition>,
    pub g: InfimalPostcomposition,
    pub step: f64,
    tau: f64,
}

impl AdmmAsDrs {
    pub fn drs_step(&self, state: &DrsState) -> Result<DrsState> {
        drs_step(&self.f, &self.g, self.step, state)
    }

    /// DRS state matching an ADMM state produced by `admm_step`.
    pub fn state_from_admm(&self, s: &AdmmState) -> DrsState {
        let bt = &self.g.b * &s.t;
        DrsState { z: &s.u / self.tau + &bt, u: bt, w: -(&self.f.0.b * &s.s) }
    }
}

pub fn admm_to_drs(
    f: &ProxFunction,
    g: &ProxFunction,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    tau: f64,
    cfg: InnerConfig,
) -> Result<AdmmAsDrs> {
    check_step(tau)?;
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: b.nrows() });
    }
    for (h, m) in [(f, a), (g, b)] {
        h.validate()?;
        if m.ncols() != h.dim() {
            return Err(Error::DimensionMismatch { expected: h.dim(), found: m.ncols() });
        }
        let gram = m.transpose() * m;
        if scalar_gram(&gram).is_none() && m.rank(1e-12 * m.amax().max(f64::MIN_POSITIVE)) < m.nrows() {
            return Err(Error::RankDeficient);
        }
    }
    Ok(AdmmAsDrs {
        f: Reflected(InfimalPostcomposition { g: f.clone(), b: a.clone(), cfg }),
        g: InfimalPostcomposition { g: g.clone(), b: b.clone(), cfg },
        step: 1.0 / tau,
        tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn lasso() -> (ProxFunction, ProxFunction) {
        (ProxFunction::abs(1.0), ProxFunction::shifted_square(1.0, &[3.0]))
    }

    #[test]
    fn drs_first_step() {
        let (f, g) = lasso();
        let s = drs_step(&f, &g, 1.0, &DrsState::from_z(v(&[0.0]))).unwrap();
        assert_eq!((s.u[0], s.w[0], s.z[0]), (1.5, 2.0, 0.5));
    }

    #[test]
    fn drs_zero_functions_keep_z() {
        let zero = ProxFunction::Zero { dim: 2 };
        let s = drs_step(&zero, &zero, 0.7, &DrsState::from_z(v(&[1.0, -2.0]))).unwrap();
        assert_eq!(s.u, v(&[1.0, -2.0]));
        assert_eq!(s.z, v(&[1.0, -2.0]));
    }

    #[test]
    fn drs_fixed_point_is_kept() {
        let (f, g) = lasso();
        // u* = 2 and z* = u* + tau g'(u*) = 1
        let s = drs_step(&f, &g, 1.0, &DrsState::from_z(v(&[1.0]))).unwrap();
        assert_eq!((s.u[0], s.w[0], s.z[0]), (2.0, 2.0, 1.0));
    }

    #[test]
    fn drs_kernel_map_values() {
        let (_, g) = lasso();
        let (b1, b2) = drs_kernel_map(&g, 1.0, &v(&[0.0]), &v(&[4.0])).unwrap();
        assert_eq!((b1[0], b2[0]), (1.5, 5.5));
        let (b1, b2) = drs_kernel_map(&ProxFunction::Zero { dim: 1 }, 1.0, &v(&[0.0]), &v(&[0.0])).unwrap();
        assert_eq!((b1[0], b2[0]), (0.0, 0.0));
    }

    #[test]
    fn alm_steps() {
        let f = ProxFunction::half_square(1);
        let s = alm_step(&f, &v(&[2.0]), 1.0, &AlmState { q: v(&[0.0]), p: v(&[0.0]) }).unwrap();
        assert_eq!((s.q[0], s.p[0]), (1.0, 1.0));

        let zero = ProxFunction::Zero { dim: 1 };
        let s1 = alm_step(&zero, &v(&[2.0]), 0.5, &AlmState { q: v(&[7.0]), p: v(&[3.0]) }).unwrap();
        assert_eq!((s1.q[0], s1.p[0]), (8.0, 0.0));
        let s2 = alm_step(&zero, &v(&[2.0]), 0.5, &s1).unwrap();
        assert_eq!(s2.q[0], 2.0);
    }

    #[test]
    fn alm_fixed_point_is_kept() {
        // stationarity of 1/2 q^2 at q = b = 2 gives p* = 2
        let s = alm_step(&ProxFunction::half_square(1), &v(&[2.0]), 1.0, &AlmState { q: v(&[2.0]), p: v(&[2.0]) }).unwrap();
        assert_eq!((s.q[0], s.p[0]), (2.0, 2.0));
    }

    #[test]
    fn alm_kernel_map_values() {
        assert_eq!(alm_kernel_map(1.0, &v(&[3.0]), &v(&[1.0]), &v(&[2.0])).unwrap()[0], 4.0);
        assert_eq!(alm_kernel_map(0.3, &v(&[1.5]), &v(&[1.5]), &v(&[2.0])).unwrap()[0], 2.0);
    }

    #[test]
    fn postcomposition_scalar_oracle() {
        // t + 2(2t - 3) = 0
        let b = DMatrix::from_element(1, 1, 2.0);
        let (q, t) = prox_infimal_postcomposition(&ProxFunction::half_square(1), &b, 1.0, &v(&[3.0]), InnerConfig::default()).unwrap();
        assert_abs_diff_eq!(t[0], 1.2, epsilon = 1e-15);
        assert_abs_diff_eq!(q[0], 2.4, epsilon = 1e-15);
    }

    #[test]
    fn postcomposition_identity_is_plain_prox() {
        let g = ProxFunction::abs(1.0);
        let (q, t) =
            prox_infimal_postcomposition(&g, &DMatrix::identity(1, 1), 2.0, &v(&[5.0]), InnerConfig::default()).unwrap();
        assert_eq!(q, g.prox(0.5, &v(&[2.5])).unwrap());
        assert_eq!(q, t);
    }

    #[test]
    fn postcomposition_zero_is_projection() {
        let b = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let (q, t) =
            prox_infimal_postcomposition(&ProxFunction::Zero { dim: 2 }, &b, 1.0, &v(&[3.0]), InnerConfig::default()).unwrap();
        assert_abs_diff_eq!(q[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!((&b * t)[0], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn postcomposition_iterative_matches_optimality() {
        // wide B with a nonsmooth g: proximal gradient path
        let b = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let g = ProxFunction::OneNorm { weight: 1.0, dim: 2 };
        let (q, t) = prox_infimal_postcomposition(&g, &b, 1.0, &v(&[5.0]), InnerConfig::default()).unwrap();
        // optimality: 0 in d||t||_1 + B'(B t - 5)
        let r = b.transpose() * (&q - v(&[5.0]));
        let dist = g.subgradient_distance(&t, &(-r)).unwrap();
        assert!(dist < 1e-8, "optimality residual {dist}");
    }

    #[test]
    fn rank_deficient_rejected() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let err = prox_infimal_postcomposition(&ProxFunction::OneNorm { weight: 1.0, dim: 2 }, &b, 1.0, &v(&[1.0, 0.0]), InnerConfig::default());
        assert_eq!(err, Err(Error::RankDeficient));
    }

    #[test]
    fn admm_converges_to_kkt_point() {
        let (f, g) = (ProxFunction::half_square(1), ProxFunction::abs(1.0));
        let i = DMatrix::identity(1, 1);
        let mut st = AdmmState { s: v(&[5.0]), t: v(&[-3.0]), u: v(&[1.0]) };
        for _ in 0..200 {
            st = admm_step(&f, &g, &i, &i, 1.0, &st, InnerConfig::default()).unwrap();
        }
        assert!(st.s[0].abs() < 1e-8 && st.t[0].abs() < 1e-8);
    }

    #[test]
    fn admm_matches_drs_transform() {
        let f = ProxFunction::shifted_square(1.0, &[3.0]);
        let g = ProxFunction::abs(1.0);
        let a = DMatrix::identity(1, 1);
        let b = -DMatrix::identity(1, 1);
        let tau = 0.7;
        let cfg = InnerConfig::default();
        let t = admm_to_drs(&f, &g, &a, &b, tau, cfg).unwrap();
        let mut st = admm_step(&f, &g, &a, &b, tau, &AdmmState { s: v(&[0.0]), t: v(&[0.0]), u: v(&[0.0]) }, cfg).unwrap();
        let mut d = t.state_from_admm(&st);
        for _ in 0..50 {
            let next = admm_step(&f, &g, &a, &b, tau, &st, cfg).unwrap();
            d = t.drs_step(&d).unwrap();
            assert_abs_diff_eq!(d.u, &b * &st.t, epsilon = 1e-9);
            assert_abs_diff_eq!(d.w, -(&a * &next.s), epsilon = 1e-9);
            assert_abs_diff_eq!(d.z, t.state_from_admm(&next).z, epsilon = 1e-9);
            st = next;
        }
        assert_abs_diff_eq!(st.s[0], 2.0, epsilon = 1e-8);
    }
}
