//! Convex functions with closed-form proximal maps.

use nalgebra::{DMatrix, DVector};

use super::sets::{Interval, SetDescription};
use crate::error::{Error, Result};
use crate::metric::Metric;

/// Anything that can evaluate `prox_{tau f}`.
pub trait Prox {
    fn dim(&self) -> usize;

    /// `argmin_u f(u) + (1/(2 tau)) ||u - z||^2`.
    fn prox(&self, tau: f64, z: &DVector<f64>) -> Result<DVector<f64>>;
}

/// Closed proper convex functions used throughout the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum ProxFunction {
    /// `w |x|` on R.
    AbsValue { weight: f64 },
    /// `w ||x||_1` on R^dim.
    OneNorm { weight: f64, dim: usize },
    /// `1/2 x'Px + q'x` with `P` symmetric PSD.
    Quadratic { p: DMatrix<f64>, q: DVector<f64> },
    /// `(scale/2) ||x - shift||^2`.
    AffineShiftSquare { scale: f64, shift: DVector<f64> },
    /// Indicator of `{x : a x = b}`.
    Indicator { a: DMatrix<f64>, b: DVector<f64> },
    /// `<slope, x>`.
    Linear { slope: DVector<f64> },
    /// The zero function on R^dim.
    Zero { dim: usize },
}

/// One-dimensional building blocks of separable functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarConvex {
    /// `w |t|`.
    Abs(f64),
    /// `(scale/2)(t - shift)^2` with `scale > 0`.
    Square { scale: f64, shift: f64 },
    /// `c t`.
    Linear(f64),
    Zero,
}

pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("prox parameter must be positive, got {tau}")))
    }
}

impl ScalarConvex {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            ScalarConvex::Abs(w) => w * t.abs(),
            ScalarConvex::Square { scale, shift } => 0.5 * scale * (t - shift).powi(2),
            ScalarConvex::Linear(c) => c * t,
            ScalarConvex::Zero => 0.0,
        }
    }

    pub fn prox(&self, tau: f64, z: f64) -> f64 {
        match *self {
            ScalarConvex::Abs(w) => soft_threshold(z, tau * w),
            ScalarConvex::Square { scale, shift } => (z + tau * scale * shift) / (1.0 + tau * scale),
            ScalarConvex::Linear(c) => z - tau * c,
            ScalarConvex::Zero => z,
        }
    }

    /// `prox_{tau f*}(z)` from the conjugate directly.
    pub fn conj_prox(&self, tau: f64, z: f64) -> f64 {
        match *self {
            // f* is the indicator of [-w, w]
            ScalarConvex::Abs(w) => z.clamp(-w, w),
            // f*(v) = v^2/(2 scale) + shift v
            ScalarConvex::Square { scale, shift } => (z - tau * shift) * scale / (scale + tau),
            // f* is the indicator of {c}
            ScalarConvex::Linear(c) => c,
            ScalarConvex::Zero => 0.0,
        }
    }

    pub fn subdifferential(&self, t: f64) -> Interval {
        match *self {
            ScalarConvex::Abs(w) if t > 0.0 => Interval::point(w),
            ScalarConvex::Abs(w) if t < 0.0 => Interval::point(-w),
            ScalarConvex::Abs(w) => Interval::closed(-w, w),
            ScalarConvex::Square { scale, shift } => Interval::point(scale * (t - shift)),
            ScalarConvex::Linear(c) => Interval::point(c),
            ScalarConvex::Zero => Interval::point(0.0),
        }
    }

    /// Where `df*` is nonempty, i.e. `ran df`.
    pub fn conj_domain(&self) -> Interval {
        match *self {
            ScalarConvex::Abs(w) => Interval::closed(-w, w),
            ScalarConvex::Square { .. } => Interval::real_line(),
            ScalarConvex::Linear(c) => Interval::point(c),
            ScalarConvex::Zero => Interval::point(0.0),
        }
    }

    /// `(df)^{-1}(v) = df*(v)`.
    pub fn conj_subdifferential(&self, v: f64) -> Interval {
        match *self {
            ScalarConvex::Abs(w) if w == 0.0 => {
                if v == 0.0 {
                    Interval::real_line()
                } else {
                    Interval::empty()
                }
            }
            ScalarConvex::Abs(w) if v == w => Interval::at_least(0.0, true),
            ScalarConvex::Abs(w) if v == -w => Interval::at_most(0.0, true),
            ScalarConvex::Abs(w) if v.abs() < w => Interval::point(0.0),
            ScalarConvex::Abs(_) => Interval::empty(),
            ScalarConvex::Square { scale, shift } => Interval::point(shift + v / scale),
            ScalarConvex::Linear(c) if v == c => Interval::real_line(),
            ScalarConvex::Zero if v == 0.0 => Interval::real_line(),
            ScalarConvex::Linear(_) | ScalarConvex::Zero => Interval::empty(),
        }
    }
}

impl ProxFunction {
    pub fn abs(weight: f64) -> Self {
        ProxFunction::AbsValue { weight }
    }

    /// `(scale/2) ||x - shift||^2`.
    pub fn shifted_square(scale: f64, shift: &[f64]) -> Self {
        ProxFunction::AffineShiftSquare { scale, shift: DVector::from_column_slice(shift) }
    }

    /// `1/2 ||x||^2` on R^dim.
    pub fn half_square(dim: usize) -> Self {
        ProxFunction::AffineShiftSquare { scale: 1.0, shift: DVector::zeros(dim) }
    }

    /// `sign * <b, x>`, with `sign` either `1` or `-1`.
    pub fn linear(b: &[f64], sign: f64) -> Self {
        ProxFunction::Linear { slope: DVector::from_column_slice(b) * sign.signum() }
    }

    /// Checks parameters. Constructors do not validate so that enum literals
    /// stay usable; every consumer in this crate calls this first.
    pub fn validate(&self) -> Result<()> {
        match self {
            ProxFunction::AbsValue { weight } | ProxFunction::OneNorm { weight, .. } => {
                if !(*weight >= 0.0 && weight.is_finite()) {
                    return Err(Error::InvalidParameter(format!("weight must be nonnegative, got {weight}")));
                }
            }
            ProxFunction::Quadratic { p, q } => {
                if p.nrows() != q.len() {
                    return Err(Error::DimensionMismatch { expected: p.nrows(), found: q.len() });
                }
                Metric::new(p.clone())?;
            }
            ProxFunction::AffineShiftSquare { scale, .. } => {
                if !(*scale >= 0.0 && scale.is_finite()) {
                    return Err(Error::InvalidParameter(format!("scale must be nonnegative, got {scale}")));
                }
            }
            ProxFunction::Indicator { a, b } => {
                if a.nrows() != b.len() {
                    return Err(Error::DimensionMismatch { expected: a.nrows(), found: b.len() });
                }
                let x = pinv(a) * b;
                let residual = (a * &x - b).norm();
                if residual > 1e-9 * (1.0 + b.norm()) {
                    return Err(Error::InfeasibleConstraint { residual });
                }
            }
            ProxFunction::Linear { .. } | ProxFunction::Zero { .. } => {}
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            ProxFunction::AbsValue { .. } => 1,
            ProxFunction::OneNorm { dim, .. } | ProxFunction::Zero { dim } => *dim,
            ProxFunction::Quadratic { q, .. } => q.len(),
            ProxFunction::AffineShiftSquare { shift, .. } => shift.len(),
            ProxFunction::Indicator { a, .. } => a.ncols(),
            ProxFunction::Linear { slope } => slope.len(),
        }
    }

    /// Coordinatewise decomposition, when `f` is separable.
    pub fn separable(&self) -> Option<Vec<ScalarConvex>> {
        let n = self.dim();
        match self {
            ProxFunction::AbsValue { weight } | ProxFunction::OneNorm { weight, .. } => {
                Some(vec![ScalarConvex::Abs(*weight); n])
            }
            ProxFunction::Quadratic { p, q } => {
                let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || p[(i, j)] == 0.0));
                diagonal.then(|| {
                    (0..n)
                        .map(|i| {
                            let pi = p[(i, i)];
                            if pi > 0.0 {
                                ScalarConvex::Square { scale: pi, shift: -q[i] / pi }
                            } else {
                                ScalarConvex::Linear(q[i])
                            }
                        })
                        .collect()
                })
            }
            ProxFunction::AffineShiftSquare { scale, shift } => Some(
                shift
                    .iter()
                    .map(|&m| if *scale > 0.0 { ScalarConvex::Square { scale: *scale, shift: m } } else { ScalarConvex::Zero })
                    .collect(),
            ),
            ProxFunction::Linear { slope } => Some(slope.iter().map(|&c| ScalarConvex::Linear(c)).collect()),
            ProxFunction::Zero { .. } => Some(vec![ScalarConvex::Zero; n]),
            ProxFunction::Indicator { .. } => None,
        }
    }

    /// `(P, q)` with `grad f(x) = P x + q` for smooth kinds.
    pub fn affine_gradient(&self) -> Option<(DMatrix<f64>, DVector<f64>)> {
        let n = self.dim();
        match self {
            ProxFunction::Quadratic { p, q } => Some((p.clone(), q.clone())),
            ProxFunction::AffineShiftSquare { scale, shift } => {
                Some((DMatrix::identity(n, n) * *scale, -shift * *scale))
            }
            ProxFunction::Linear { slope } => Some((DMatrix::zeros(n, n), slope.clone())),
            ProxFunction::Zero { .. } => Some((DMatrix::zeros(n, n), DVector::zeros(n))),
            ProxFunction::AbsValue { weight } | ProxFunction::OneNorm { weight, .. } if *weight == 0.0 => {
                Some((DMatrix::zeros(n, n), DVector::zeros(n)))
            }
            _ => None,
        }
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            ProxFunction::Quadratic { p, q } => 0.5 * x.dot(&(p * x)) + q.dot(x),
            ProxFunction::Indicator { a, b } => {
                if (a * x - b).norm() <= 1e-9 * (1.0 + b.norm()) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            _ => {
                let parts = self.separable().expect("non-indicator kinds other than quadratic are separable");
                parts.iter().zip(x.iter()).map(|(f, &t)| f.value(t)).sum()
            }
        }
    }

    /// `prox_{tau f*}(z)`. Separable kinds use the conjugate in closed form;
    /// the rest go through `z - tau prox_{f/tau}(z/tau)`.
    pub fn conj_prox(&self, tau: f64, z: &DVector<f64>) -> Result<DVector<f64>> {
        check_tau(tau)?;
        self.check_dim(z)?;
        if let Some(parts) = self.separable() {
            return Ok(DVector::from_iterator(z.len(), parts.iter().zip(z.iter()).map(|(f, &t)| f.conj_prox(tau, t))));
        }
        Ok(z - self.prox(1.0 / tau, &(z / tau))? * tau)
    }

    /// `df(x)` as an exact set. Indicators return `UnsupportedShape` since
    /// their normal cones are subspaces, not boxes.
    pub fn subdifferential(&self, x: &DVector<f64>) -> Result<SetDescription> {
        self.check_dim(x)?;
        if let Some(parts) = self.separable() {
            return Ok(SetDescription::from_box(parts.iter().zip(x.iter()).map(|(f, &t)| f.subdifferential(t)).collect()));
        }
        match self {
            ProxFunction::Quadratic { p, q } => Ok(SetDescription::singleton(&(p * x + q))),
            _ => Err(Error::UnsupportedShape("normal cone of an affine set".into())),
        }
    }

    /// `df*(v)` as an exact box, for separable kinds.
    pub fn conj_subdifferential(&self, v: &DVector<f64>) -> Result<SetDescription> {
        self.check_dim(v)?;
        let parts = self.separable().ok_or(Error::InverseUnavailable)?;
        Ok(SetDescription::from_box(parts.iter().zip(v.iter()).map(|(f, &t)| f.conj_subdifferential(t)).collect()))
    }

    /// `dist(u, df(x))`, infinite outside the domain.
    pub fn subgradient_distance(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(u)?;
        match self {
            ProxFunction::Indicator { a, b } => {
                if (a * x - b).norm() > 1e-9 * (1.0 + b.norm()) {
                    return Ok(f64::INFINITY);
                }
                // normal cone is ran a'; distance is the part of u in ker a
                let along = a.transpose() * (pinv(&a.transpose()) * u);
                Ok((u - along).norm())
            }
            _ => self.subdifferential(x)?.distance(u),
        }
    }

    /// Lipschitz constant of the gradient for smooth kinds.
    pub fn gradient_lipschitz(&self) -> Option<f64> {
        let (p, _) = self.affine_gradient()?;
        Some(if p.is_empty() { 0.0 } else { p.symmetric_eigen().eigenvalues.amax() })
    }

    fn check_dim(&self, z: &DVector<f64>) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: z.len() });
        }
        Ok(())
    }
}

impl Prox for ProxFunction {
    fn dim(&self) -> usize {
        ProxFunction::dim(self)
    }

    fn prox(&self, tau: f64, z: &DVector<f64>) -> Result<DVector<f64>> {
        check_tau(tau)?;
        self.check_dim(z)?;
        match self {
            ProxFunction::AbsValue { weight } | ProxFunction::OneNorm { weight, .. } => {
                Ok(z.map(|t| soft_threshold(t, tau * weight)))
            }
            ProxFunction::Quadratic { p, q } => {
                let n = z.len();
                let m = DMatrix::identity(n, n) + p * tau;
                let rhs = z - q * tau;
                m.cholesky()
                    .map(|c| c.solve(&rhs))
                    .ok_or_else(|| Error::InvalidParameter("quadratic term is not positive semidefinite".into()))
            }
            ProxFunction::AffineShiftSquare { scale, shift } => Ok((z + shift * (tau * scale)) / (1.0 + tau * scale)),
            ProxFunction::Indicator { a, b } => Ok(z - pinv(a) * (a * z - b)),
            ProxFunction::Linear { slope } => Ok(z - slope * tau),
            ProxFunction::Zero { .. } => Ok(z.clone()),
        }
    }
}

/// `a - prox_{tau g}(a)`.
pub fn moreau_complement<P: Prox + ?Sized>(g: &P, tau: f64, a: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(a - g.prox(tau, a)?)
}

/// Moore-Penrose pseudo-inverse with a relative singular value cutoff.
pub(crate) fn pinv(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.is_empty() {
        return DMatrix::zeros(a.ncols(), a.nrows());
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    svd.pseudo_inverse(1e-12 * smax.max(f64::MIN_POSITIVE)).expect("both factors were computed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn soft_threshold_values() {
        let f = ProxFunction::abs(1.0);
        let p = |z: f64| f.prox(1.0, &v(&[z])).unwrap()[0];
        assert_eq!(p(2.0), 1.0);
        assert_eq!(p(-3.0), -2.0);
        assert_eq!(p(0.5), 0.0);
        assert_eq!(p(1.0), 0.0);
        assert_eq!(p(-1.0), 0.0);
        assert_eq!(f.prox(2.0, &v(&[-5.0])).unwrap()[0], -3.0);
    }

    #[test]
    fn complement_of_abs() {
        let f = ProxFunction::abs(1.0);
        assert_eq!(moreau_complement(&f, 1.0, &v(&[3.0])).unwrap()[0], 1.0);
    }

    #[test]
    fn quadratic_prox_solves_normal_equation() {
        let p = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let q = v(&[1.0, -1.0]);
        let f = ProxFunction::Quadratic { p: p.clone(), q: q.clone() };
        let z = v(&[0.3, 2.0]);
        let u = f.prox(0.7, &z).unwrap();
        assert_abs_diff_eq!(u.clone() - &z + (p * u + q) * 0.7, DVector::zeros(2), epsilon = 1e-13);
    }

    #[test]
    fn indicator_projects_and_rejects_infeasible() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let f = ProxFunction::Indicator { a: a.clone(), b: v(&[1.0]) };
        f.validate().unwrap();
        let u = f.prox(1.0, &v(&[0.0, 0.0])).unwrap();
        assert_abs_diff_eq!(u, v(&[0.5, 0.5]), epsilon = 1e-14);
        let bad = ProxFunction::Indicator {
            a: DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            b: v(&[0.0, 1.0]),
        };
        assert!(matches!(bad.validate(), Err(Error::InfeasibleConstraint { .. })));
    }

    #[test]
    fn linear_and_zero() {
        let f = ProxFunction::linear(&[2.0], -1.0);
        assert_eq!(f.prox(1.0, &v(&[0.0])).unwrap()[0], 2.0);
        let z = ProxFunction::Zero { dim: 2 };
        assert_eq!(z.prox(3.0, &v(&[1.0, 2.0])).unwrap(), v(&[1.0, 2.0]));
        assert!(matches!(z.prox(0.0, &v(&[1.0, 2.0])), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn conjugate_prox_matches_moreau_identity() {
        let fs = [
            ProxFunction::OneNorm { weight: 0.7, dim: 2 },
            ProxFunction::shifted_square(2.0, &[1.0, -3.0]),
            ProxFunction::linear(&[1.0, 2.0], 1.0),
            ProxFunction::Zero { dim: 2 },
        ];
        let z = v(&[0.4, -2.5]);
        for f in &fs {
            for tau in [0.5, 1.0, 3.0] {
                let direct = f.conj_prox(tau, &z).unwrap();
                let via = &z - f.prox(1.0 / tau, &(&z / tau)).unwrap() * tau;
                assert_abs_diff_eq!(direct, via, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn abs_conjugate_subdifferential() {
        let f = ScalarConvex::Abs(1.0);
        assert_eq!(f.conj_subdifferential(1.0), Interval::at_least(0.0, true));
        assert_eq!(f.conj_subdifferential(0.2), Interval::point(0.0));
        assert!(f.conj_subdifferential(1.5).is_empty());
    }
}
