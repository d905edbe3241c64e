//! Set-valued operators: subdifferentials, affine maps, block operators built
//! from those, and a few planar operators given by tables.

pub mod graph2d;
pub mod prox;
pub mod sets;

use nalgebra::{DMatrix, DVector};

pub use graph2d::Builtin2D;
pub use prox::{moreau_complement, soft_threshold, Prox, ProxFunction, ScalarConvex};
pub use sets::{Interval, RangeDescription, SetDescription, SetPiece};

use crate::error::{Error, Result};
use crate::metric::Metric;

/// A set-valued map on R^n.
#[derive(Debug, Clone)]
pub enum SetValuedOp {
    Subdifferential(ProxFunction),
    /// `x -> M x + c`.
    Affine { matrix: DMatrix<f64>, offset: DVector<f64> },
    Block(BlockOperator),
    Graph2D(Builtin2D),
}

/// One entry of a block operator.
#[derive(Debug, Clone)]
pub enum BlockEntry {
    Zero,
    /// `s I`.
    Scaled(f64),
    Matrix(DMatrix<f64>),
    /// `s df`; only allowed on the diagonal.
    Subdifferential { scale: f64, f: ProxFunction },
    Sum(Vec<BlockEntry>),
}

/// Tags recording that a block operator came from a known splitting method,
/// so the matching closed-form resolvent can be used.
#[derive(Debug, Clone)]
pub enum Structure {
    Generic,
    /// Built by [`drs_embedding`].
    Drs { f: ProxFunction, g: ProxFunction, tau: f64 },
    /// Built by [`alm_embedding`].
    Alm { f: ProxFunction, b: DVector<f64>, tau: f64 },
}

/// A square grid of [`BlockEntry`]s acting on a product space, plus a
/// constant offset per block row.
#[derive(Debug, Clone)]
pub struct BlockOperator {
    dims: Vec<usize>,
    entries: Vec<Vec<BlockEntry>>,
    offsets: Vec<DVector<f64>>,
    structure: Structure,
}

impl BlockEntry {
    fn linear_part(&self, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        Ok(match self {
            BlockEntry::Zero | BlockEntry::Subdifferential { .. } => DMatrix::zeros(rows, cols),
            BlockEntry::Scaled(s) => {
                if rows != cols {
                    return Err(Error::DimensionMismatch { expected: rows, found: cols });
                }
                DMatrix::identity(rows, cols) * *s
            }
            BlockEntry::Matrix(m) => {
                if m.shape() != (rows, cols) {
                    return Err(Error::DimensionMismatch { expected: rows * cols, found: m.len() });
                }
                m.clone()
            }
            BlockEntry::Sum(terms) => {
                let mut acc = DMatrix::zeros(rows, cols);
                for t in terms {
                    acc += t.linear_part(rows, cols)?;
                }
                acc
            }
        })
    }

    fn subdifferential_parts(&self) -> Vec<(f64, &ProxFunction)> {
        match self {
            BlockEntry::Subdifferential { scale, f } => vec![(*scale, f)],
            BlockEntry::Sum(terms) => terms.iter().flat_map(BlockEntry::subdifferential_parts).collect(),
            _ => vec![],
        }
    }
}

/// A diagonal block after folding smooth subdifferentials into the linear
/// part: `x_i -> scale * df(x_i) + linear x_i`.
#[derive(Debug, Clone)]
pub(crate) struct DiagonalTerm {
    pub set_part: Option<(f64, ProxFunction)>,
}

/// Block form `A(x)_i = S_i(x_i) + sum_j L_ij x_j + c_i` with at most one
/// nonsmooth term `S_i = s_i df_i` per row.
#[derive(Debug, Clone)]
pub(crate) struct CanonicalBlocks {
    pub dims: Vec<usize>,
    pub linear: Vec<Vec<DMatrix<f64>>>,
    pub offsets: Vec<DVector<f64>>,
    pub diagonal: Vec<DiagonalTerm>,
}

impl BlockOperator {
    pub fn new(dims: Vec<usize>, entries: Vec<Vec<BlockEntry>>) -> Result<Self> {
        let n = dims.len();
        if entries.len() != n || entries.iter().any(|row| row.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: entries.len() });
        }
        let offsets = dims.iter().map(|&d| DVector::zeros(d)).collect();
        let op = Self { dims, entries, offsets, structure: Structure::Generic };
        op.canonical()?;
        Ok(op)
    }

    pub fn with_offset(mut self, row: usize, offset: DVector<f64>) -> Result<Self> {
        if offset.len() != self.dims[row] {
            return Err(Error::DimensionMismatch { expected: self.dims[row], found: offset.len() });
        }
        self.offsets[row] = offset;
        Ok(self)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    fn starts(&self) -> Vec<usize> {
        block_starts(&self.dims)
    }

    /// Folds the entries into [`CanonicalBlocks`]. Smooth subdifferentials
    /// become linear terms; more than one nonsmooth term in a row, or a
    /// subdifferential off the diagonal, is rejected.
    pub(crate) fn canonical(&self) -> Result<CanonicalBlocks> {
        let n = self.dims.len();
        let mut linear = vec![vec![DMatrix::zeros(0, 0); n]; n];
        let mut offsets = self.offsets.clone();
        let mut diagonal = Vec::with_capacity(n);
        for i in 0..n {
            let mut set_part = None;
            for j in 0..n {
                let entry = &self.entries[i][j];
                let mut l = entry.linear_part(self.dims[i], self.dims[j])?;
                for (scale, f) in entry.subdifferential_parts() {
                    if i != j {
                        return Err(Error::UnsupportedShape("subdifferential off the block diagonal".into()));
                    }
                    f.validate()?;
                    if f.dim() != self.dims[i] {
                        return Err(Error::DimensionMismatch { expected: self.dims[i], found: f.dim() });
                    }
                    if let Some((p, q)) = f.affine_gradient() {
                        l += p * scale;
                        offsets[i] += q * scale;
                    } else if scale != 0.0 {
                        if set_part.is_some() {
                            return Err(Error::UnsupportedShape("two nonsmooth terms in one block row".into()));
                        }
                        set_part = Some((scale, f.clone()));
                    }
                }
                linear[i][j] = l;
            }
            diagonal.push(DiagonalTerm { set_part });
        }
        Ok(CanonicalBlocks { dims: self.dims.clone(), linear, offsets, diagonal })
    }
}

pub(crate) fn block_starts(dims: &[usize]) -> Vec<usize> {
    let mut starts = Vec::with_capacity(dims.len());
    let mut acc = 0;
    for &d in dims {
        starts.push(acc);
        acc += d;
    }
    starts
}

impl CanonicalBlocks {
    /// Row `i` of the single-valued part at `x`: `sum_j L_ij x_j + c_i`.
    pub fn linear_row(&self, i: usize, x: &DVector<f64>) -> DVector<f64> {
        let starts = block_starts(&self.dims);
        let mut acc = self.offsets[i].clone();
        for (j, l) in self.linear[i].iter().enumerate() {
            acc += l * x.rows(starts[j], self.dims[j]);
        }
        acc
    }
}

impl SetValuedOp {
    pub fn dim(&self) -> usize {
        match self {
            SetValuedOp::Subdifferential(f) => f.dim(),
            SetValuedOp::Affine { matrix, .. } => matrix.nrows(),
            SetValuedOp::Block(b) => b.dim(),
            SetValuedOp::Graph2D(_) => 2,
        }
    }

    /// `A(x)` as an exact set.
    pub fn graph_eval(&self, x: &DVector<f64>) -> Result<SetDescription> {
        self.check_dim(x)?;
        match self {
            SetValuedOp::Subdifferential(f) => f.subdifferential(x),
            SetValuedOp::Affine { matrix, offset } => Ok(SetDescription::singleton(&(matrix * x + offset))),
            SetValuedOp::Graph2D(g) => Ok(g.graph_eval(x)),
            SetValuedOp::Block(b) => {
                let canon = b.canonical()?;
                let starts = b.starts();
                let mut factors = Vec::with_capacity(x.len());
                for i in 0..b.dims.len() {
                    let xi = x.rows(starts[i], b.dims[i]).into_owned();
                    let lin = canon.linear_row(i, x);
                    match &canon.diagonal[i].set_part {
                        None => factors.extend(lin.iter().map(|&t| Interval::point(t))),
                        Some((scale, f)) => {
                            let set = f.subdifferential(&xi)?;
                            let ivs = set.as_box().ok_or_else(|| Error::UnsupportedShape("non-box block value".into()))?;
                            factors.extend(ivs.iter().zip(lin.iter()).map(|(iv, &c)| iv.scale(*scale).shift(c)));
                        }
                    }
                }
                Ok(SetDescription::from_box(factors))
            }
        }
    }

    /// `dist(u, A(x))`, infinite when `x` is outside the domain.
    pub fn inclusion_residual(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(u)?;
        match self {
            SetValuedOp::Subdifferential(f) => f.subgradient_distance(x, u),
            SetValuedOp::Affine { matrix, offset } => Ok((u - (matrix * x + offset)).norm()),
            SetValuedOp::Graph2D(g) => g.inclusion_residual(x, u),
            SetValuedOp::Block(b) => {
                let canon = b.canonical()?;
                let starts = b.starts();
                let mut total = 0.0;
                for i in 0..b.dims.len() {
                    let xi = x.rows(starts[i], b.dims[i]).into_owned();
                    let w = u.rows(starts[i], b.dims[i]) - canon.linear_row(i, x);
                    let d = match &canon.diagonal[i].set_part {
                        None => w.norm(),
                        Some((scale, f)) => f.subgradient_distance(&xi, &(&w / *scale))? * scale.abs(),
                    };
                    total += d * d;
                }
                Ok(total.sqrt())
            }
        }
    }

    /// Block form of anything except a table operator.
    pub(crate) fn canonical(&self) -> Result<CanonicalBlocks> {
        match self {
            SetValuedOp::Block(b) => b.canonical(),
            SetValuedOp::Subdifferential(f) => {
                let n = f.dim();
                BlockOperator::new(vec![n], vec![vec![BlockEntry::Subdifferential { scale: 1.0, f: f.clone() }]])?
                    .canonical()
            }
            SetValuedOp::Affine { matrix, offset } => {
                let n = matrix.nrows();
                if matrix.ncols() != n || offset.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: matrix.ncols() });
                }
                BlockOperator::new(vec![n], vec![vec![BlockEntry::Matrix(matrix.clone())]])?
                    .with_offset(0, offset.clone())?
                    .canonical()
            }
            SetValuedOp::Graph2D(_) => Err(Error::StrategyMismatch("table operators have no block form".into())),
        }
    }

    pub fn structure(&self) -> Option<&Structure> {
        match self {
            SetValuedOp::Block(b) => Some(&b.structure),
            _ => None,
        }
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(())
    }
}

/// Block operator whose preconditioned resolvent is one Douglas-Rachford
/// step: on `(u, w, z)`,
/// `A = [tau dg, I, -I; -I, tau df, I; I, -I, 0]` and `Q = diag(0, 0, I)`.
pub fn drs_embedding(f: &ProxFunction, g: &ProxFunction, tau: f64) -> Result<(SetValuedOp, Metric)> {
    check_step(tau)?;
    f.validate()?;
    g.validate()?;
    let n = f.dim();
    if g.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: g.dim() });
    }
    use BlockEntry::*;
    let entries = vec![
        vec![Subdifferential { scale: tau, f: g.clone() }, Scaled(1.0), Scaled(-1.0)],
        vec![Scaled(-1.0), Subdifferential { scale: tau, f: f.clone() }, Scaled(1.0)],
        vec![Scaled(1.0), Scaled(-1.0), Zero],
    ];
    let mut op = BlockOperator::new(vec![n; 3], entries)?;
    op.structure = Structure::Drs { f: f.clone(), g: g.clone(), tau };
    let mut diag = vec![0.0; 2 * n];
    diag.extend(std::iter::repeat_n(1.0, n));
    Ok((SetValuedOp::Block(op), Metric::diagonal(&diag)?))
}

/// Block operator whose preconditioned resolvent is one augmented
/// Lagrangian step for `min F(q) s.t. q = b`: on `(q, p)`,
/// `A = [dF, -I; I, -b]` and `Q = diag(0, I / tau)`.
pub fn alm_embedding(f: &ProxFunction, b: &DVector<f64>, tau: f64) -> Result<(SetValuedOp, Metric)> {
    check_step(tau)?;
    f.validate()?;
    let n = f.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len() });
    }
    use BlockEntry::*;
    let ell = ProxFunction::Linear { slope: -b };
    let entries = vec![
        vec![Subdifferential { scale: 1.0, f: f.clone() }, Scaled(-1.0)],
        vec![Scaled(1.0), Subdifferential { scale: 1.0, f: ell }],
    ];
    let mut op = BlockOperator::new(vec![n; 2], entries)?;
    op.structure = Structure::Alm { f: f.clone(), b: b.clone(), tau };
    let mut diag = vec![0.0; n];
    diag.extend(std::iter::repeat_n(1.0 / tau, n));
    Ok((SetValuedOp::Block(op), Metric::diagonal(&diag)?))
}

/// `A = [df, 0; -B, dg]`. Not monotone once `B != 0`, but monotone on the
/// pairs whose value lies in `ran diag(I, 0)`.
pub fn lower_triangular_example(f: &ProxFunction, g: &ProxFunction, b: &DMatrix<f64>) -> Result<(SetValuedOp, Metric)> {
    let (n, m) = (f.dim(), g.dim());
    if b.shape() != (m, n) {
        return Err(Error::DimensionMismatch { expected: m * n, found: b.len() });
    }
    use BlockEntry::*;
    let entries = vec![
        vec![Subdifferential { scale: 1.0, f: f.clone() }, Zero],
        vec![Matrix(-b), Subdifferential { scale: 1.0, f: g.clone() }],
    ];
    let op = BlockOperator::new(vec![n, m], entries)?;
    let mut diag = vec![1.0; n];
    diag.extend(std::iter::repeat_n(0.0, m));
    Ok((SetValuedOp::Block(op), Metric::diagonal(&diag)?))
}

/// Optimality operator of `min |x_1| + (1/2)(x_1 - b)^2` over `(x_1, x_2)`:
/// `A(x) = (d|x_1| + x_1 - b, 0)`. Its zeros are `{S(b)} x R`.
pub fn l1_problem_operator(b: f64) -> Result<SetValuedOp> {
    use BlockEntry::*;
    let entries = vec![
        vec![Sum(vec![Subdifferential { scale: 1.0, f: ProxFunction::abs(1.0) }, Scaled(1.0)]), Zero],
        vec![Zero, Zero],
    ];
    let op = BlockOperator::new(vec![1, 1], entries)?.with_offset(0, DVector::from_vec(vec![-b]))?;
    Ok(SetValuedOp::Block(op))
}

fn check_step(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("step size must be positive, got {tau}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn subdifferential_of_abs() {
        let a = SetValuedOp::Subdifferential(ProxFunction::abs(1.0));
        assert_eq!(a.graph_eval(&v(&[0.0])).unwrap().as_box().unwrap(), &[Interval::closed(-1.0, 1.0)]);
        assert_eq!(a.graph_eval(&v(&[2.0])).unwrap().as_singleton().unwrap(), v(&[1.0]));
        assert_eq!(a.inclusion_residual(&v(&[0.0]), &v(&[1.5])).unwrap(), 0.5);
    }

    #[test]
    fn drs_block_values() {
        let (a, q) = drs_embedding(&ProxFunction::abs(1.0), &ProxFunction::shifted_square(1.0, &[3.0]), 1.0).unwrap();
        assert_eq!(q.rank(), 1);
        // (u, w, z) = (1, 0, 2): row 1 = (1 - 3) + 0 - 2, row 2 = -1 + [-1,1] + 2, row 3 = 1
        let val = a.graph_eval(&v(&[1.0, 0.0, 2.0])).unwrap();
        let b = val.as_box().unwrap();
        assert_eq!(b[0], Interval::point(-4.0));
        assert_eq!(b[1], Interval::closed(0.0, 2.0));
        assert_eq!(b[2], Interval::point(1.0));
    }

    #[test]
    fn alm_zero_residual() {
        let (a, _) = alm_embedding(&ProxFunction::half_square(1), &v(&[2.0]), 1.0).unwrap();
        assert!(a.inclusion_residual(&v(&[2.0, 2.0]), &v(&[0.0, 0.0])).unwrap() < 1e-15);
        assert!(a.inclusion_residual(&v(&[2.0, 1.0]), &v(&[0.0, 0.0])).unwrap() > 0.5);
    }

    #[test]
    fn rejects_off_diagonal_subdifferential() {
        let e = vec![
            vec![BlockEntry::Zero, BlockEntry::Subdifferential { scale: 1.0, f: ProxFunction::abs(1.0) }],
            vec![BlockEntry::Zero, BlockEntry::Zero],
        ];
        assert!(BlockOperator::new(vec![1, 1], e).is_err());
    }
}
