//! Conic problem model (linear objective, affine equalities, nonnegative
//! and PSD cone memberships) and the solver adapter.
//!
//! Variables are flattened into one vector of scalars. A symmetric block of
//! size `n` owns `n(n+1)/2` scalars (upper triangle); matrix-shaped free
//! variables are stored row-major. Constraints are written with [`Affine`]
//! scalars or [`MatExpr`] matrices of them.
//!
//! The shipped backend is Clarabel. It is reentrant (every solve owns its
//! workspace), so independent problems may be solved concurrently.

use crate::numerics::DenseMatrix;
use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Strictness shifts and acceptance tolerance shared by every LMI builder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverTolerances {
    /// `X ≺ 0` is posed as `X ⪯ -eps_lmi I`.
    pub eps_lmi: f64,
    /// `P ≻ 0` is posed as `P ⪰ eps_pd I`.
    pub eps_pd: f64,
    /// Acceptance threshold on equality, inequality and LMI residuals.
    pub feas_tol: f64,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        Self {
            eps_lmi: 1e-9,
            eps_pd: 1e-6,
            feas_tol: 1e-8,
        }
    }
}

impl SolverTolerances {
    /// Ratio between the strict-LMI and positivity margins. With `P ⪰ t I`
    /// the Lyapunov side is held to `⪯ -(eps_lmi / eps_pd) t I`; both are
    /// homogeneous in the certificate, so only the ratio matters.
    pub fn normalized_margin(&self) -> f64 {
        self.eps_lmi / self.eps_pd
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("eps_lmi", self.eps_lmi),
            ("eps_pd", self.eps_pd),
            ("feas_tol", self.feas_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be positive and finite, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "size", rename_all = "snake_case")]
pub enum VarKind {
    Symmetric(usize),
    Free(usize),
    Nonnegative(usize),
}

impl VarKind {
    pub fn scalar_count(&self) -> usize {
        match *self {
            VarKind::Symmetric(n) => n * (n + 1) / 2,
            VarKind::Free(len) | VarKind::Nonnegative(len) => len,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub offset: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

/// `constant + Σ coef · x[index]` over the flattened scalar vector.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn scalar(index: usize) -> Self {
        Self {
            constant: 0.0,
            terms: vec![(index, 1.0)],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.is_empty()
    }

    pub fn scale(mut self, k: f64) -> Self {
        if k == 0.0 {
            return Self::default();
        }
        self.constant *= k;
        for t in &mut self.terms {
            t.1 *= k;
        }
        self
    }

    /// Merge duplicate indices and drop zero coefficients.
    fn compact(mut self) -> Self {
        if self.terms.len() > 1 {
            self.terms.sort_unstable_by_key(|t| t.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
            for (i, c) in self.terms {
                match merged.last_mut() {
                    Some(last) if last.0 == i => last.1 += c,
                    _ => merged.push((i, c)),
                }
            }
            self.terms = merged;
        }
        self.terms.retain(|t| t.1 != 0.0);
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>()
    }

    /// `1 + |c| + Σ |a_i x_i|`, the scale used for relative residuals.
    pub fn magnitude(&self, x: &[f64]) -> f64 {
        1.0 + self.constant.abs()
            + self
                .terms
                .iter()
                .map(|&(i, c)| (c * x[i]).abs())
                .sum::<f64>()
    }

    fn accumulate(&mut self, other: &Affine, k: f64) {
        if k == 0.0 {
            return;
        }
        self.constant += k * other.constant;
        self.terms
            .extend(other.terms.iter().map(|&(i, c)| (i, c * k)));
    }
}

impl Add for Affine {
    type Output = Affine;
    fn add(mut self, rhs: Affine) -> Affine {
        self.accumulate(&rhs, 1.0);
        self.compact()
    }
}

impl Sub for Affine {
    type Output = Affine;
    fn sub(mut self, rhs: Affine) -> Affine {
        self.accumulate(&rhs, -1.0);
        self.compact()
    }
}

impl Neg for Affine {
    type Output = Affine;
    fn neg(self) -> Affine {
        self.scale(-1.0)
    }
}

/// Dense matrix of affine scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct MatExpr {
    rows: usize,
    cols: usize,
    entries: Vec<Affine>,
}

impl MatExpr {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Affine::default(); rows * cols],
        }
    }

    pub fn from_constant(m: &DenseMatrix) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.entries[i * m.ncols() + j] = Affine::constant(m[(i, j)]);
            }
        }
        out
    }

    pub fn identity(n: usize) -> Self {
        Self::from_constant(&DenseMatrix::identity(n, n))
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> &Affine {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Affine) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.entries[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        out
    }

    pub fn scale(mut self, k: f64) -> Self {
        self.entries = self.entries.into_iter().map(|e| e.scale(k)).collect();
        self
    }

    /// `k · self` for a constant matrix `k`.
    pub fn left_mul(&self, k: &DenseMatrix) -> Self {
        assert_eq!(k.ncols(), self.rows, "left_mul dimension mismatch");
        let mut out = Self::zeros(k.nrows(), self.cols);
        for i in 0..k.nrows() {
            for j in 0..self.cols {
                let mut acc = Affine::default();
                for l in 0..self.rows {
                    acc.accumulate(self.get(l, j), k[(i, l)]);
                }
                out.entries[i * self.cols + j] = acc.compact();
            }
        }
        out
    }

    /// `self · k` for a constant matrix `k`.
    pub fn right_mul(&self, k: &DenseMatrix) -> Self {
        assert_eq!(self.cols, k.nrows(), "right_mul dimension mismatch");
        let mut out = Self::zeros(self.rows, k.ncols());
        for i in 0..self.rows {
            for j in 0..k.ncols() {
                let mut acc = Affine::default();
                for l in 0..self.cols {
                    acc.accumulate(self.get(i, l), k[(l, j)]);
                }
                out.entries[i * k.ncols() + j] = acc.compact();
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> DenseMatrix {
        DenseMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).eval(x))
    }

    fn zip_with(self, rhs: &MatExpr, k: f64) -> MatExpr {
        assert_eq!(self.shape(), rhs.shape(), "elementwise dimension mismatch");
        let entries = self
            .entries
            .into_iter()
            .zip(&rhs.entries)
            .map(|(mut a, b)| {
                a.accumulate(b, k);
                a.compact()
            })
            .collect();
        MatExpr {
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }
}

impl Add<&MatExpr> for MatExpr {
    type Output = MatExpr;
    fn add(self, rhs: &MatExpr) -> MatExpr {
        self.zip_with(rhs, 1.0)
    }
}

impl Sub<&MatExpr> for MatExpr {
    type Output = MatExpr;
    fn sub(self, rhs: &MatExpr) -> MatExpr {
        self.zip_with(rhs, -1.0)
    }
}

impl Mul<&MatExpr> for &DenseMatrix {
    type Output = MatExpr;
    fn mul(self, rhs: &MatExpr) -> MatExpr {
        rhs.left_mul(self)
    }
}

impl Mul<&DenseMatrix> for &MatExpr {
    type Output = MatExpr;
    fn mul(self, rhs: &DenseMatrix) -> MatExpr {
        self.right_mul(rhs)
    }
}

/// Symmetric affine matrix required to be positive semidefinite. Only the
/// upper triangle is stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmiConstraint {
    pub name: String,
    pub size: usize,
    /// `(row, col, expr)` with `row <= col`; absent entries are zero.
    pub entries: Vec<(usize, usize, Affine)>,
}

impl LmiConstraint {
    /// Takes the symmetric part of `m`.
    pub fn from_matexpr(name: impl Into<String>, m: &MatExpr) -> Self {
        let (r, c) = m.shape();
        assert_eq!(r, c, "LMI must be square");
        let mut entries = Vec::new();
        for j in 0..c {
            for i in 0..=j {
                let e = if i == j {
                    m.get(i, j).clone()
                } else {
                    (m.get(i, j).clone() + m.get(j, i).clone()).scale(0.5)
                };
                if !e.is_zero() {
                    entries.push((i, j, e));
                }
            }
        }
        Self {
            name: name.into(),
            size: r,
            entries,
        }
    }

    pub fn eval(&self, x: &[f64]) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.size, self.size);
        for (i, j, e) in &self.entries {
            let v = e.eval(x);
            m[(*i, *j)] = v;
            m[(*j, *i)] = v;
        }
        m
    }

    /// Constant part of the diagonal, used to inspect strictness shifts.
    pub fn constant_diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.size];
        for (i, j, e) in &self.entries {
            if i == j {
                d[*i] = e.constant;
            }
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedAffine {
    pub name: String,
    pub expr: Affine,
}

/// minimize `objective` subject to `equalities = 0`, `inequalities >= 0`,
/// every nonnegative variable `>= 0` and every LMI `⪰ 0`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConicProblem {
    pub variables: Vec<Variable>,
    pub scalar_count: usize,
    pub objective: Affine,
    pub equalities: Vec<NamedAffine>,
    pub inequalities: Vec<NamedAffine>,
    pub lmis: Vec<LmiConstraint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProblemError {
    UnknownScalar { constraint: String, index: usize },
    NonFinite { constraint: String },
    LmiEntry { constraint: String },
}

impl fmt::Display for ProblemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemError::UnknownScalar { constraint, index } => {
                write!(f, "{constraint} references undeclared scalar {index}")
            }
            ProblemError::NonFinite { constraint } => {
                write!(f, "{constraint} has a non-finite coefficient")
            }
            ProblemError::LmiEntry { constraint } => {
                write!(f, "{constraint} has an entry outside its upper triangle")
            }
        }
    }
}

impl std::error::Error for ProblemError {}

impl ConicProblem {
    pub fn new() -> Self {
        Self::default()
    }

    fn push_var(&mut self, name: &str, kind: VarKind) -> VarId {
        let id = VarId(self.variables.len());
        self.variables.push(Variable {
            name: name.to_string(),
            kind,
            offset: self.scalar_count,
        });
        self.scalar_count += kind.scalar_count();
        id
    }

    pub fn add_symmetric(&mut self, name: &str, n: usize) -> VarId {
        self.push_var(name, VarKind::Symmetric(n))
    }

    pub fn add_free(&mut self, name: &str, len: usize) -> VarId {
        self.push_var(name, VarKind::Free(len))
    }

    pub fn add_nonnegative(&mut self, name: &str, len: usize) -> VarId {
        self.push_var(name, VarKind::Nonnegative(len))
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    /// Scalar index of entry `k` of a vector variable.
    pub fn scalar(&self, id: VarId, k: usize) -> usize {
        let v = self.variable(id);
        assert!(
            k < v.kind.scalar_count(),
            "scalar {k} out of range for {}",
            v.name
        );
        v.offset + k
    }

    /// Scalar index of entry `(i, j)` of a symmetric variable.
    pub fn sym_index(&self, id: VarId, i: usize, j: usize) -> usize {
        let v = self.variable(id);
        let VarKind::Symmetric(n) = v.kind else {
            panic!("{} is not symmetric", v.name);
        };
        assert!(i < n && j < n);
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        v.offset + j * (j + 1) / 2 + i
    }

    /// Symmetric variable as a matrix expression.
    pub fn sym_matrix(&self, id: VarId) -> MatExpr {
        let VarKind::Symmetric(n) = self.variable(id).kind else {
            panic!("{} is not symmetric", self.variable(id).name);
        };
        let mut m = MatExpr::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, Affine::scalar(self.sym_index(id, i, j)));
            }
        }
        m
    }

    /// Vector variable reshaped row-major into `rows x cols`.
    pub fn matrix(&self, id: VarId, rows: usize, cols: usize) -> MatExpr {
        let v = self.variable(id);
        assert_eq!(v.kind.scalar_count(), rows * cols, "reshape of {}", v.name);
        let mut m = MatExpr::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, Affine::scalar(v.offset + i * cols + j));
            }
        }
        m
    }

    pub fn add_equality(&mut self, name: impl Into<String>, expr: Affine) {
        self.equalities.push(NamedAffine {
            name: name.into(),
            expr,
        });
    }

    /// Elementwise `lhs = rhs`; entries that vanish identically are skipped.
    pub fn add_matrix_equality(&mut self, name: &str, lhs: &MatExpr, rhs: &MatExpr) {
        let diff = lhs.clone() - rhs;
        let (r, c) = diff.shape();
        for i in 0..r {
            for j in 0..c {
                let e = diff.get(i, j);
                if !e.is_zero() {
                    self.add_equality(format!("{name}[{i},{j}]"), e.clone());
                }
            }
        }
    }

    /// `expr >= 0`.
    pub fn add_inequality(&mut self, name: impl Into<String>, expr: Affine) {
        self.inequalities.push(NamedAffine {
            name: name.into(),
            expr,
        });
    }

    /// `m ⪰ 0`.
    pub fn add_lmi(&mut self, name: &str, m: &MatExpr) {
        self.lmis.push(LmiConstraint::from_matexpr(name, m));
    }

    pub fn set_objective(&mut self, objective: Affine) {
        self.objective = objective;
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        let check = |name: &str, e: &Affine| -> Result<(), ProblemError> {
            if !e.constant.is_finite() || e.terms.iter().any(|t| !t.1.is_finite()) {
                return Err(ProblemError::NonFinite {
                    constraint: name.to_string(),
                });
            }
            if let Some(&(index, _)) = e.terms.iter().find(|t| t.0 >= self.scalar_count) {
                return Err(ProblemError::UnknownScalar {
                    constraint: name.to_string(),
                    index,
                });
            }
            Ok(())
        };
        check("objective", &self.objective)?;
        for c in self.equalities.iter().chain(&self.inequalities) {
            check(&c.name, &c.expr)?;
        }
        for l in &self.lmis {
            for (i, j, e) in &l.entries {
                if i > j || *j >= l.size {
                    return Err(ProblemError::LmiEntry {
                        constraint: l.name.clone(),
                    });
                }
                check(&l.name, e)?;
            }
        }
        Ok(())
    }

    fn nonnegative_scalars(&self) -> impl Iterator<Item = usize> + '_ {
        self.variables.iter().flat_map(|v| match v.kind {
            VarKind::Nonnegative(len) => v.offset..v.offset + len,
            _ => 0..0,
        })
    }

    /// Worst violations of `x` against every constraint.
    pub fn residuals(&self, x: &[f64]) -> Residuals {
        self.residuals_scaled(x, false)
    }

    /// As [`ConicProblem::residuals`], with every violation divided by the
    /// magnitude of the terms that produced it.
    pub fn relative_residuals(&self, x: &[f64]) -> Residuals {
        self.residuals_scaled(x, true)
    }

    fn residuals_scaled(&self, x: &[f64], relative: bool) -> Residuals {
        let scale = |e: &Affine| if relative { e.magnitude(x) } else { 1.0 };
        let max_equality = self
            .equalities
            .iter()
            .map(|c| c.expr.eval(x).abs() / scale(&c.expr))
            .fold(0.0, f64::max);
        let min_inequality = self
            .inequalities
            .iter()
            .map(|c| c.expr.eval(x) / scale(&c.expr))
            .chain(self.nonnegative_scalars().map(|i| x[i]))
            .fold(f64::INFINITY, f64::min);
        let min_lmi_eigenvalue = self
            .lmis
            .iter()
            .map(|l| {
                if l.size == 0 {
                    return f64::INFINITY;
                }
                let m = l.eval(x);
                let norm = if relative {
                    1.0 + l
                        .entries
                        .iter()
                        .map(|(_, _, e)| e.magnitude(x) - 1.0)
                        .fold(0.0, f64::max)
                } else {
                    1.0
                };
                SymmetricEigen::new(m)
                    .eigenvalues
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min)
                    / norm
            })
            .fold(f64::INFINITY, f64::min);
        Residuals {
            max_equality,
            min_inequality,
            min_lmi_eigenvalue,
        }
    }

    /// Values of one variable in `x`: symmetric blocks are expanded to full
    /// matrices, vectors become `len x 1`.
    pub fn extract(&self, id: VarId, x: &[f64]) -> DenseMatrix {
        let v = self.variable(id);
        match v.kind {
            VarKind::Symmetric(n) => DenseMatrix::from_fn(n, n, |i, j| x[self.sym_index(id, i, j)]),
            VarKind::Free(len) | VarKind::Nonnegative(len) => {
                DenseMatrix::from_fn(len, 1, |i, _| x[v.offset + i])
            }
        }
    }

    /// Vector variable reshaped row-major.
    pub fn extract_matrix(&self, id: VarId, rows: usize, cols: usize, x: &[f64]) -> DenseMatrix {
        let v = self.variable(id);
        assert_eq!(v.kind.scalar_count(), rows * cols);
        DenseMatrix::from_fn(rows, cols, |i, j| x[v.offset + i * cols + j])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("conic problem serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub max_equality: f64,
    /// `+inf` when there are no scalar inequalities.
    pub min_inequality: f64,
    /// `+inf` when there are no LMIs.
    pub min_lmi_eigenvalue: f64,
}

impl Residuals {
    pub fn within(&self, tol: f64) -> bool {
        self.max_equality <= tol && self.min_inequality >= -tol && self.min_lmi_eigenvalue >= -tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConicStatus {
    Feasible,
    Infeasible,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicSolution {
    pub status: ConicStatus,
    /// True when the backend reports an optimal point, so `objective` is
    /// the problem optimum and `dual_objective` a valid lower bound.
    pub optimal: bool,
    pub values: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub residuals: Option<Residuals>,
    pub iterations: u32,
    pub diagnostic: String,
}

impl ConicSolution {
    fn unknown(diagnostic: String) -> Self {
        Self {
            status: ConicStatus::Unknown,
            optimal: false,
            values: Vec::new(),
            objective: f64::NAN,
            dual_objective: f64::NAN,
            residuals: None,
            iterations: 0,
            diagnostic,
        }
    }

    /// Guaranteed lower bound on the optimum of a minimization.
    pub fn lower_bound(&self) -> f64 {
        self.objective.min(self.dual_objective)
    }
}

/// Solver adapter. Every module talks to conic solvers through this trait.
pub trait ConicBackend: Send + Sync {
    fn name(&self) -> &'static str;

    /// Whether independent problems may be solved from several threads.
    fn reentrant(&self) -> bool;

    fn solve(&self, problem: &ConicProblem, tol: &SolverTolerances) -> ConicSolution;
}

/// Interior-point backend backed by Clarabel.
#[derive(Debug, Clone)]
pub struct ClarabelBackend {
    pub max_iter: u32,
    pub tol: f64,
}

impl Default for ClarabelBackend {
    fn default() -> Self {
        Self {
            max_iter: 300,
            tol: 1e-9,
        }
    }
}

/// Names accepted by [`backend_by_name`].
pub const BACKENDS: &[&str] = &["clarabel"];

pub fn backend_by_name(name: &str) -> Option<Box<dyn ConicBackend>> {
    match name {
        "clarabel" => Some(Box::new(ClarabelBackend::default())),
        _ => None,
    }
}

/// Solve with the default backend.
pub fn solve(problem: &ConicProblem, tol: &SolverTolerances) -> ConicSolution {
    ClarabelBackend::default().solve(problem, tol)
}

struct Triplets {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    b: Vec<f64>,
}

impl Triplets {
    fn push_row(&mut self, expr: &Affine, scale: f64) {
        // Cone rows are s = b - A x, so an expression c + a'x maps to
        // A = -a, b = c.
        let r = self.b.len();
        for &(j, c) in &expr.terms {
            self.rows.push(r);
            self.cols.push(j);
            self.vals.push(-c * scale);
        }
        self.b.push(expr.constant * scale);
    }
}

impl ConicBackend for ClarabelBackend {
    fn name(&self) -> &'static str {
        "clarabel"
    }

    fn reentrant(&self) -> bool {
        true
    }

    fn solve(&self, problem: &ConicProblem, tol: &SolverTolerances) -> ConicSolution {
        if let Err(e) = problem.validate() {
            return ConicSolution::unknown(format!("malformed problem: {e}"));
        }
        let n = problem.scalar_count;
        let mut t = Triplets {
            rows: Vec::new(),
            cols: Vec::new(),
            vals: Vec::new(),
            b: Vec::new(),
        };
        let mut cones = Vec::new();

        if !problem.equalities.is_empty() {
            for c in &problem.equalities {
                t.push_row(&c.expr, 1.0);
            }
            cones.push(SupportedConeT::ZeroConeT(problem.equalities.len()));
        }
        let nonneg_vars: Vec<usize> = problem.nonnegative_scalars().collect();
        let nonneg = problem.inequalities.len() + nonneg_vars.len();
        if nonneg > 0 {
            for c in &problem.inequalities {
                t.push_row(&c.expr, 1.0);
            }
            for &i in &nonneg_vars {
                t.push_row(&Affine::scalar(i), 1.0);
            }
            cones.push(SupportedConeT::NonnegativeConeT(nonneg));
        }
        for lmi in &problem.lmis {
            if lmi.size == 0 {
                continue;
            }
            // Upper triangle, column-major, off-diagonals scaled by sqrt(2).
            let by_pos: BTreeMap<(usize, usize), &Affine> =
                lmi.entries.iter().map(|(i, j, e)| ((*j, *i), e)).collect();
            let empty = Affine::default();
            for j in 0..lmi.size {
                for i in 0..=j {
                    let e = by_pos.get(&(j, i)).copied().unwrap_or(&empty);
                    let s = if i == j {
                        1.0
                    } else {
                        std::f64::consts::SQRT_2
                    };
                    t.push_row(e, s);
                }
            }
            cones.push(SupportedConeT::PSDTriangleConeT(lmi.size));
        }

        let m = t.b.len();
        let a = CscMatrix::new_from_triplets(m, n, t.rows, t.cols, t.vals);
        let p = CscMatrix::zeros((n, n));
        let mut q = vec![0.0; n];
        for &(i, c) in &problem.objective.terms {
            q[i] += c;
        }

        let settings = match DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(self.max_iter)
            .tol_feas(self.tol)
            .tol_gap_abs(self.tol)
            .tol_gap_rel(self.tol)
            .build()
        {
            Ok(s) => s,
            Err(e) => return ConicSolution::unknown(format!("settings: {e:?}")),
        };
        let mut solver = match DefaultSolver::new(&p, &q, &a, &t.b, &cones, settings) {
            Ok(s) => s,
            Err(e) => return ConicSolution::unknown(format!("backend setup failed: {e:?}")),
        };
        // A solver panic is reported as an undecided solve, not a crash.
        let solved = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
            solver.solve();
            solver
        }));
        let solver = match solved {
            Ok(s) => s,
            Err(_) => return ConicSolution::unknown("backend panicked".into()),
        };
        let sol = &solver.solution;
        let offset = problem.objective.constant;
        let base = ConicSolution {
            status: ConicStatus::Unknown,
            optimal: false,
            values: sol.x.clone(),
            objective: sol.obj_val + offset,
            dual_objective: sol.obj_val_dual + offset,
            residuals: None,
            iterations: sol.iterations,
            diagnostic: format!("{:?}", sol.status),
        };
        match sol.status {
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                ConicSolution {
                    status: ConicStatus::Infeasible,
                    ..base
                }
            }
            SolverStatus::Solved
            | SolverStatus::AlmostSolved
            | SolverStatus::MaxIterations
            | SolverStatus::InsufficientProgress => {
                let r = problem.relative_residuals(&sol.x);
                let optimal = matches!(
                    sol.status,
                    SolverStatus::Solved | SolverStatus::AlmostSolved
                );
                if r.within(tol.feas_tol) {
                    ConicSolution {
                        status: ConicStatus::Feasible,
                        optimal,
                        residuals: Some(r),
                        ..base
                    }
                } else {
                    ConicSolution {
                        residuals: Some(r),
                        diagnostic: format!(
                            "{:?} but residuals exceed tolerance: {r:?}",
                            sol.status
                        ),
                        ..base
                    }
                }
            }
            _ => base,
        }
    }
}
