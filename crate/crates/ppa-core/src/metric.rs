//! Positive semidefinite metrics and the range/kernel split they induce.
//!
//! A [`Metric`] stores the eigendecomposition of `Q` once. Everything else
//! (projections, the square root, the seminorm) is read off that basis.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative eigenvalue cutoff used when none is given.
pub const DEFAULT_EIG_TOL: f64 = 1e-10;

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Metric {
    matrix: DMatrix<f64>,
    /// Eigenvalues sorted in decreasing order, kernel ones set to zero.
    eigenvalues: DVector<f64>,
    /// Orthonormal eigenvectors, one per column, same order as `eigenvalues`.
    eigenvectors: DMatrix<f64>,
    rank: usize,
    eig_tol: f64,
    sqrt: DMatrix<f64>,
}

impl Metric {
    /// Builds a metric with the default eigenvalue cutoff.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(matrix, DEFAULT_EIG_TOL)
    }

    pub fn with_tolerance(matrix: DMatrix<f64>, eig_tol: f64) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if !(eig_tol > 0.0 && eig_tol < 1.0) {
            return Err(Error::InvalidParameter(format!("eig_tol must lie in (0,1), got {eig_tol}")));
        }
        let asymmetry = (&matrix - matrix.transpose()).norm();
        if asymmetry > SYMMETRY_TOL * matrix.norm() {
            return Err(Error::NonSymmetric { asymmetry });
        }
        let n = rows;
        let (values, vectors) = if n > 0 && is_diagonal(&matrix) {
            // Diagonal input: keep the exact coordinate basis.
            (matrix.diagonal(), DMatrix::identity(n, n))
        } else {
            let sym = (&matrix + matrix.transpose()) * 0.5;
            let eig = sym.symmetric_eigen();
            (eig.eigenvalues, eig.eigenvectors)
        };

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));

        let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let cutoff = eig_tol * scale;
        let mut eigenvalues = DVector::zeros(n);
        let mut eigenvectors = DMatrix::zeros(n, n);
        let mut rank = 0;
        for (slot, &i) in order.iter().enumerate() {
            let lambda = values[i];
            if lambda < -cutoff {
                return Err(Error::NotPsd { min_eigenvalue: lambda });
            }
            if lambda > cutoff {
                eigenvalues[slot] = lambda;
                rank += 1;
            }
            eigenvectors.set_column(slot, &vectors.column(i));
        }

        let roots = eigenvalues.map(f64::sqrt);
        let sqrt = &eigenvectors * DMatrix::from_diagonal(&roots) * eigenvectors.transpose();

        Ok(Self { matrix, eigenvalues, eigenvectors, rank, eig_tol, sqrt })
    }

    /// Metric `diag(values)`.
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    /// Metric `c * I` of size `n`.
    pub fn scaled_identity(n: usize, c: f64) -> Result<Self> {
        Self::new(DMatrix::identity(n, n) * c)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn eig_tol(&self) -> f64 {
        self.eig_tol
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn is_degenerate(&self) -> bool {
        self.rank < self.dim()
    }

    /// Largest eigenvalue.
    pub fn lambda_sup(&self) -> f64 {
        if self.dim() == 0 {
            0.0
        } else {
            self.eigenvalues[0]
        }
    }

    /// Smallest positive eigenvalue, `None` for the zero metric.
    pub fn lambda_inf(&self) -> Option<f64> {
        (self.rank > 0).then(|| self.eigenvalues[self.rank - 1])
    }

    /// Orthonormal basis of `ran Q`, one vector per column.
    pub fn range_basis(&self) -> DMatrix<f64> {
        self.eigenvectors.columns(0, self.rank).into_owned()
    }

    /// Orthonormal basis of `ker Q`, one vector per column.
    pub fn kernel_basis(&self) -> DMatrix<f64> {
        self.eigenvectors.columns(self.rank, self.dim() - self.rank).into_owned()
    }

    /// Positive eigenvalues, matching the columns of [`Metric::range_basis`].
    pub fn range_eigenvalues(&self) -> DVector<f64> {
        self.eigenvalues.rows(0, self.rank).into_owned()
    }

    pub fn range_projector(&self) -> DMatrix<f64> {
        let v = self.range_basis();
        &v * v.transpose()
    }

    pub fn kernel_projector(&self) -> DMatrix<f64> {
        let v = self.kernel_basis();
        &v * v.transpose()
    }

    /// Symmetric PSD square root of `Q`.
    pub fn sqrt(&self) -> &DMatrix<f64> {
        &self.sqrt
    }

    pub fn project_range(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        let v = self.eigenvectors.columns(0, self.rank);
        Ok(&v * (v.transpose() * x))
    }

    pub fn project_kernel(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        let v = self.eigenvectors.columns(self.rank, self.dim() - self.rank);
        Ok(&v * (v.transpose() * x))
    }

    /// Both parts at once: `(P_r x, P_k x)`.
    pub fn split(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        Ok((self.project_range(x)?, self.project_kernel(x)?))
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        Ok(&self.matrix * x)
    }

    pub fn apply_sqrt(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        Ok(&self.sqrt * x)
    }

    /// `<x, y>_Q = x' Q y`.
    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        Ok(x.dot(&(&self.matrix * y)))
    }

    /// `||x||_Q`, computed as `||sqrt(Q) x||` so it never goes negative.
    pub fn seminorm(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_dim(x)?;
        Ok((&self.sqrt * x).norm())
    }

    /// `||x||_Q^2` through the quadratic form.
    pub fn seminorm_sq(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.inner(x, x)?.max(0.0))
    }

    /// Metric with every eigenvalue multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::InvalidParameter(format!("metric scale must be positive, got {c}")));
        }
        let mut out = self.clone();
        out.matrix *= c;
        out.eigenvalues *= c;
        out.sqrt *= c.sqrt();
        Ok(out)
    }

    /// If `Q` is diagonal, its diagonal entries.
    pub fn diagonal_entries(&self) -> Option<Vec<f64>> {
        is_diagonal(&self.matrix).then(|| self.matrix.diagonal().iter().copied().collect())
    }

    /// If `Q = c I`, the factor `c`.
    pub fn scalar_factor(&self) -> Option<f64> {
        let d = self.diagonal_entries()?;
        let c = *d.first()?;
        d.iter().all(|&v| v == c).then_some(c)
    }

    /// Coordinates spanning `ran Q` when the range is axis aligned.
    pub fn range_axes(&self) -> Option<Vec<usize>> {
        let d = self.diagonal_entries()?;
        let cutoff = self.eig_tol * self.lambda_sup();
        Some((0..d.len()).filter(|&i| d[i] > cutoff).collect())
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(())
    }
}

fn is_diagonal(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn diagonal_projections_are_exact() {
        let q = Metric::diagonal(&[1.0, 0.0]).unwrap();
        assert_eq!(q.project_range(&v(&[3.0, 4.0])).unwrap(), v(&[3.0, 0.0]));
        assert_eq!(q.project_kernel(&v(&[3.0, 4.0])).unwrap(), v(&[0.0, 4.0]));
        assert_eq!(q.rank(), 1);
        assert_eq!(q.lambda_inf(), Some(1.0));
    }

    #[test]
    fn rotated_projection() {
        let s = 0.5_f64.sqrt();
        let u = v(&[s, s]);
        let q = Metric::new(&u * u.transpose()).unwrap();
        let r = q.project_range(&v(&[1.0, 0.0])).unwrap();
        let k = q.project_kernel(&v(&[1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(r, v(&[0.5, 0.5]), epsilon = 1e-14);
        assert_abs_diff_eq!(k, v(&[0.5, -0.5]), epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(Metric::new(m), Err(Error::NonSymmetric { .. })));
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(Metric::new(m), Err(Error::NotPsd { .. })));
        let q = Metric::diagonal(&[1.0, 0.0]).unwrap();
        assert!(matches!(q.project_range(&v(&[1.0])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn sqrt_squares_back() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
        let q = Metric::new(m.clone()).unwrap();
        assert_eq!(q.rank(), 2);
        assert_abs_diff_eq!(q.sqrt() * q.sqrt(), m, epsilon = 1e-10 * q.lambda_sup());
        assert_abs_diff_eq!(q.lambda_inf().unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn scaled_identity_is_scalar() {
        let q = Metric::scaled_identity(3, 2.0).unwrap();
        assert_eq!(q.scalar_factor(), Some(2.0));
        assert_eq!(Metric::diagonal(&[1.0, 0.0]).unwrap().range_axes(), Some(vec![0]));
    }
}
