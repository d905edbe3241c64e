//! Problem files: parsing, validation, and construction of the operator,
//! metric and starting point they describe.

use anyhow::{bail, ensure, Context, Result};
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use ppa_core::iteration::StopRule;
use ppa_core::operator::{self, Builtin2D, ProxFunction, SetValuedOp, Structure};
use ppa_core::resolvent::Strategy;
use ppa_core::splitting::InnerConfig;
use ppa_core::verify::KernelMap;
use ppa_core::Metric;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Ppa,
    Drs,
    Admm,
    Alm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SolverName {
    #[default]
    Auto,
    ClosedFormDrs,
    ClosedFormAlm,
    Cascade,
    Analytic2d,
    Grid2d,
    ProxDirect,
}

impl From<SolverName> for Strategy {
    fn from(s: SolverName) -> Self {
        match s {
            SolverName::Auto => Strategy::Auto,
            SolverName::ClosedFormDrs => Strategy::ClosedFormDrs,
            SolverName::ClosedFormAlm => Strategy::ClosedFormAlm,
            SolverName::Cascade => Strategy::Cascade,
            SolverName::Analytic2d => Strategy::Analytic2D,
            SolverName::Grid2d => Strategy::Grid2D,
            SolverName::ProxDirect => Strategy::ProxDirect,
        }
    }
}

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionSpec {
    Abs {
        #[serde(default = "one")]
        weight: f64,
    },
    OneNorm {
        #[serde(default = "one")]
        weight: f64,
        dim: usize,
    },
    HalfSquare {
        dim: usize,
    },
    ShiftedSquare {
        #[serde(default = "one")]
        scale: f64,
        shift: Vec<f64>,
    },
    Quadratic {
        p: Rows,
        q: Vec<f64>,
    },
    Indicator {
        a: Rows,
        b: Vec<f64>,
    },
    Linear {
        slope: Vec<f64>,
    },
    Zero {
        dim: usize,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorSpec {
    Builtin { name: String },
    Subdifferential { function: FunctionSpec },
    Affine { matrix: Rows, offset: Option<Vec<f64>> },
    /// `d|x_1| + x_1 - b` on the plane, zero in the second coordinate.
    L1Problem { b: f64 },
    /// `[df, 0; -B, dg]`, with the metric `diag(I, 0)`.
    LowerTriangular { f: FunctionSpec, g: FunctionSpec, coupling: Rows },
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub diagonal: Option<Vec<f64>>,
    pub matrix: Option<Rows>,
    /// `c I` in the dimension of `x0`.
    pub identity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    /// Right-hand side `b` of `q = b` for ALM.
    pub rhs: Option<Vec<f64>>,
    /// `A` and `B` of `A s + B t = 0` for ADMM.
    pub a: Option<Rows>,
    pub b: Option<Rows>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct StopSpec {
    pub max_iters: Option<usize>,
    pub q_res_tol: Option<f64>,
    pub full_res_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub name: String,
    pub algorithm: Algorithm,
    pub tau: Option<f64>,
    pub x0: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverName,
    pub operator: Option<OperatorSpec>,
    pub metric: Option<MetricSpec>,
    pub f: Option<FunctionSpec>,
    pub g: Option<FunctionSpec>,
    pub constraint: Option<ConstraintSpec>,
    #[serde(default)]
    pub stop: StopSpec,
    /// Known zeros of the operator, for the `fixzer` check.
    #[serde(default)]
    pub zeros: Vec<Vec<f64>>,
}

/// A validated problem, ready to run or check.
#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub seed: u64,
    pub stop: StopRule,
    pub x0: DVector<f64>,
    pub zeros: Vec<DVector<f64>>,
    pub body: Body,
}

#[derive(Debug, Clone)]
pub enum Body {
    /// Preconditioned proximal point on `(A, Q)`; DRS and ALM land here
    /// through their embeddings.
    Ppa { a: SetValuedOp, q: Metric, strategy: Strategy },
    Admm { f: ProxFunction, g: ProxFunction, a: DMatrix<f64>, b: DMatrix<f64>, tau: f64, cfg: InnerConfig },
}

impl Problem {
    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn builtin(&self) -> Option<Builtin2D> {
        match &self.body {
            Body::Ppa { a: SetValuedOp::Graph2D(b), .. } => Some(*b),
            _ => None,
        }
    }

    pub fn kernel_map(&self) -> Option<KernelMap> {
        let Body::Ppa { a, .. } = &self.body else { return None };
        match a.structure()? {
            Structure::Drs { g, tau, .. } => Some(KernelMap::Drs { g: g.clone(), tau: *tau }),
            Structure::Alm { b, tau, .. } => Some(KernelMap::Alm { b: b.clone(), tau: *tau }),
            Structure::Generic => None,
        }
    }
}

pub fn parse_problem(text: &str) -> Result<ProblemSpec> {
    Ok(toml::from_str(text)?)
}

fn matrix(rows: &Rows, what: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    ensure!(r > 0 && c > 0, "{what}: matrix is empty");
    ensure!(rows.iter().all(|row| row.len() == c), "{what}: rows have different lengths");
    Ok(DMatrix::from_row_iterator(r, c, rows.iter().flatten().copied()))
}

fn vector(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

impl FunctionSpec {
    pub fn build(&self) -> Result<ProxFunction> {
        let f = match self {
            FunctionSpec::Abs { weight } => ProxFunction::abs(*weight),
            FunctionSpec::OneNorm { weight, dim } => ProxFunction::OneNorm { weight: *weight, dim: *dim },
            FunctionSpec::HalfSquare { dim } => ProxFunction::half_square(*dim),
            FunctionSpec::ShiftedSquare { scale, shift } => ProxFunction::shifted_square(*scale, shift),
            FunctionSpec::Quadratic { p, q } => ProxFunction::Quadratic { p: matrix(p, "p")?, q: vector(q) },
            FunctionSpec::Indicator { a, b } => ProxFunction::Indicator { a: matrix(a, "a")?, b: vector(b) },
            FunctionSpec::Linear { slope } => ProxFunction::Linear { slope: vector(slope) },
            FunctionSpec::Zero { dim } => ProxFunction::Zero { dim: *dim },
        };
        f.validate()?;
        Ok(f)
    }
}

impl MetricSpec {
    fn build(&self, dim: usize) -> Result<Metric> {
        let m = match (&self.diagonal, &self.matrix, self.identity) {
            (Some(d), None, None) => Metric::diagonal(d)?,
            (None, Some(m), None) => Metric::new(matrix(m, "metric")?)?,
            (None, None, Some(c)) => Metric::scaled_identity(dim, c)?,
            _ => bail!("metric: give exactly one of `diagonal`, `matrix`, `identity`"),
        };
        Ok(m)
    }
}

fn check_dim(what: &str, expected: usize, found: usize) -> Result<()> {
    ensure!(expected == found, "{what}: expected dimension {expected}, got {found}");
    Ok(())
}

impl ProblemSpec {
    fn tau(&self) -> Result<f64> {
        let tau = self.tau.context("`tau` is required for this algorithm")?;
        Ok(tau)
    }

    fn function(&self, which: &str) -> Result<ProxFunction> {
        let spec = if which == "f" { &self.f } else { &self.g };
        spec.as_ref().with_context(|| format!("`[{which}]` is required for this algorithm"))?.build()
    }

    fn forbid(&self, fields: &[(&str, bool)]) -> Result<()> {
        for (name, present) in fields {
            ensure!(!present, "`{name}` is not used by algorithm {:?}", self.algorithm);
        }
        Ok(())
    }

    /// Checks every constraint and builds the problem.
    pub fn validate(&self) -> Result<Problem> {
        if let Some(tau) = self.tau {
            ensure!(tau > 0.0 && tau.is_finite(), "`tau` must be positive, got {tau}");
        }
        ensure!(!self.x0.is_empty(), "`x0` is empty");
        let mut stop = StopRule::default();
        if let Some(k) = self.stop.max_iters {
            stop.max_iters = k;
        }
        if let Some(t) = self.stop.q_res_tol {
            ensure!(t >= 0.0, "`stop.q_res_tol` must be nonnegative");
            stop.q_res_tol = t;
        }
        stop.full_res_tol = self.stop.full_res_tol;
        let strategy = Strategy::from(self.solver);

        let (body, x0) = match self.algorithm {
            Algorithm::Ppa => {
                self.forbid(&[("f", self.f.is_some()), ("g", self.g.is_some()), ("constraint", self.constraint.is_some())])?;
                let op = self.operator.as_ref().context("`[operator]` is required for algorithm ppa")?;
                let x0 = vector(&self.x0);
                let (a, default_q) = self.build_operator(op)?;
                let q = match (&self.metric, default_q) {
                    (Some(m), _) => m.build(x0.len())?,
                    (None, Some(q)) => q,
                    (None, None) => bail!("`[metric]` is required for this operator"),
                };
                check_dim("metric", a.dim(), q.dim())?;
                check_dim("x0", a.dim(), x0.len())?;
                (Body::Ppa { a, q, strategy }, x0)
            }
            Algorithm::Drs => {
                self.forbid(&[("operator", self.operator.is_some()), ("metric", self.metric.is_some()), ("constraint", self.constraint.is_some())])?;
                let (f, g) = (self.function("f")?, self.function("g")?);
                let (a, q) = operator::drs_embedding(&f, &g, self.tau()?)?;
                let n = f.dim();
                // a shadow-only start is padded with zero u and w
                let x0 = match self.x0.len() {
                    l if l == n => DVector::from_iterator(3 * n, std::iter::repeat_n(0.0, 2 * n).chain(self.x0.iter().copied())),
                    l if l == 3 * n => vector(&self.x0),
                    l => bail!("x0: expected dimension {n} or {}, got {l}", 3 * n),
                };
                (Body::Ppa { a, q, strategy }, x0)
            }
            Algorithm::Alm => {
                self.forbid(&[("operator", self.operator.is_some()), ("metric", self.metric.is_some()), ("g", self.g.is_some())])?;
                let f = self.function("f")?;
                let c = self.constraint.as_ref().context("`[constraint]` with `rhs` is required for algorithm alm")?;
                ensure!(c.a.is_none() && c.b.is_none(), "constraint: alm takes only `rhs`");
                let b = vector(c.rhs.as_ref().context("constraint: `rhs` is required")?);
                let (a, q) = operator::alm_embedding(&f, &b, self.tau()?)?;
                let n = f.dim();
                let x0 = match self.x0.len() {
                    l if l == n => DVector::from_iterator(2 * n, std::iter::repeat_n(0.0, n).chain(self.x0.iter().copied())),
                    l if l == 2 * n => vector(&self.x0),
                    l => bail!("x0: expected dimension {n} or {}, got {l}", 2 * n),
                };
                (Body::Ppa { a, q, strategy }, x0)
            }
            Algorithm::Admm => {
                self.forbid(&[("operator", self.operator.is_some()), ("metric", self.metric.is_some())])?;
                let (f, g) = (self.function("f")?, self.function("g")?);
                let c = self.constraint.as_ref().context("`[constraint]` with `a` and `b` is required for algorithm admm")?;
                ensure!(c.rhs.is_none(), "constraint: admm takes `a` and `b`, not `rhs`");
                let a = matrix(c.a.as_ref().context("constraint: `a` is required")?, "constraint.a")?;
                let b = matrix(c.b.as_ref().context("constraint: `b` is required")?, "constraint.b")?;
                check_dim("constraint.a columns", f.dim(), a.ncols())?;
                check_dim("constraint.b columns", g.dim(), b.ncols())?;
                check_dim("constraint.b rows", a.nrows(), b.nrows())?;
                let tau = self.tau()?;
                let cfg = InnerConfig::default();
                // rejects couplings whose subproblems have no usable solution
                ppa_core::splitting::admm_to_drs(&f, &g, &a, &b, tau, cfg)?;
                check_dim("x0", f.dim() + g.dim() + a.nrows(), self.x0.len())?;
                (Body::Admm { f, g, a, b, tau, cfg }, vector(&self.x0))
            }
        };
        let zeros = self.zeros.iter().map(|z| vector(z)).collect::<Vec<_>>();
        for z in &zeros {
            check_dim("zeros", x0.len(), z.len())?;
        }
        Ok(Problem { name: self.name.clone(), seed: self.seed, stop, x0, zeros, body })
    }

    fn build_operator(&self, op: &OperatorSpec) -> Result<(SetValuedOp, Option<Metric>)> {
        Ok(match op {
            OperatorSpec::Builtin { name } => {
                let b = Builtin2D::from_name(name).with_context(|| format!("unknown builtin operator `{name}`"))?;
                (SetValuedOp::Graph2D(b), Some(b.default_metric()))
            }
            OperatorSpec::Subdifferential { function } => (SetValuedOp::Subdifferential(function.build()?), None),
            OperatorSpec::Affine { matrix: m, offset } => {
                let m = matrix(m, "operator.matrix")?;
                ensure!(m.is_square(), "operator.matrix must be square");
                let offset = offset.as_deref().map_or_else(|| DVector::zeros(m.nrows()), vector);
                check_dim("operator.offset", m.nrows(), offset.len())?;
                (SetValuedOp::Affine { matrix: m, offset }, None)
            }
            OperatorSpec::L1Problem { b } => (operator::l1_problem_operator(*b)?, Some(Metric::diagonal(&[1.0, 0.0])?)),
            OperatorSpec::LowerTriangular { f, g, coupling } => {
                let (a, q) = operator::lower_triangular_example(&f.build()?, &g.build()?, &matrix(coupling, "coupling")?)?;
                (a, Some(q))
            }
        })
    }
}
