//! Dense complex operator algebra.
//!
//! Everything in the crate is carried by [`ComplexOperator`]: Hamiltonians,
//! jump operators, density matrices and superoperators alike. Composite
//! Hilbert spaces are described by a [`SubsystemLayout`], whose factor order
//! fixes the tensor-product (row-major Kronecker) ordering of basis states.

use std::collections::HashSet;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// A pure state in the computational basis of some layout.
pub type Ket = Array1<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Hermiticity bound for operators flagged Hermitian at construction.
pub const OPERATOR_HERMITIAN_TOL: f64 = 1e-12;

/// Validation tolerances for [`DensityMatrix`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityTolerances {
    pub hermitian: f64,
    pub trace: f64,
    pub positivity: f64,
}

impl DensityTolerances {
    /// Bounds that absorb ordinary integrator drift.
    pub const DEFAULT: Self = Self {
        hermitian: 1e-10,
        trace: 1e-8,
        positivity: 1e-8,
    };
    /// Relaxed positivity bound for states sampled from long stiff runs.
    pub const LONG_RUN: Self = Self {
        hermitian: 1e-9,
        trace: 1e-8,
        positivity: 1e-6,
    };
}

impl Default for DensityTolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("tensor product of an empty factor list")]
    EmptyTensor,
    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),
    #[error("duplicate subsystem label `{0}`")]
    DuplicateLabel(String),
    #[error("subsystem `{0}` has zero dimension")]
    ZeroDimension(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operator is not Hermitian (max |M - M^dag| = {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("empty set of subsystems to keep")]
    EmptyKeep,
    #[error("LAPACK failure: {0}")]
    Lapack(String),
}

/// Dense complex square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexOperator {
    entries: Array2<C64>,
}

impl ComplexOperator {
    pub fn from_array(entries: Array2<C64>) -> Result<Self, LinalgError> {
        let (rows, cols) = entries.dim();
        if rows != cols || rows == 0 {
            return Err(LinalgError::NotSquare { rows, cols });
        }
        Ok(Self { entries })
    }

    /// Build from row-major entries; panics if `rows` is ragged.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        let flat: Vec<C64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        if flat.len() != n * n {
            return Err(LinalgError::NotSquare {
                rows: n,
                cols: flat.len() / n.max(1),
            });
        }
        Self::from_array(Array2::from_shape_vec((n, n), flat).expect("shape checked"))
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: Array2::zeros((dim, dim)),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: Array2::eye(dim),
        }
    }

    pub fn from_fn(dim: usize, f: impl FnMut((usize, usize)) -> C64) -> Self {
        Self {
            entries: Array2::from_shape_fn((dim, dim), f),
        }
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (k, v) in values.iter().enumerate() {
            m.entries[[k, k]] = *v;
        }
        m
    }

    /// `|row⟩⟨col|` on a `dim`-dimensional space.
    pub fn transition(dim: usize, row: usize, col: usize) -> Self {
        let mut m = Self::zeros(dim);
        m.entries[[row, col]] = ONE;
        m
    }

    /// `|ket⟩⟨bra|`.
    pub fn outer(ket: &Ket, bra: &Ket) -> Self {
        let n = ket.len();
        Self::from_fn(n, |(i, j)| ket[i] * bra[j].conj())
    }

    pub fn projector(psi: &Ket) -> Self {
        Self::outer(psi, psi)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut Array2<C64> {
        &mut self.entries
    }

    pub fn into_array(self) -> Array2<C64> {
        self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[[row, col]]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.t().mapv(|z| z.conj()),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            entries: self.entries.t().to_owned(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            entries: self.entries.mapv(|z| z.conj()),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        Self {
            entries: self.entries.dot(&rhs.entries),
        }
    }

    pub fn apply(&self, v: &Ket) -> Ket {
        self.entries.dot(v)
    }

    /// `⟨ψ|A|ψ⟩`.
    pub fn expectation(&self, psi: &Ket) -> C64 {
        psi.iter()
            .zip(self.apply(psi).iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn trace(&self) -> C64 {
        self.entries.diag().sum()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            entries: self.entries.mapv(|z| z * c),
        }
    }

    /// `Tr(A B)` without forming the product.
    pub fn trace_product(&self, rhs: &Self) -> C64 {
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.entries[[i, k]] * rhs.entries[[k, i]];
            }
        }
        acc
    }

    pub fn commutator(&self, rhs: &Self) -> Self {
        &self.matmul(rhs) - &rhs.matmul(self)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        self.entries
            .iter()
            .zip(rhs.entries.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|j| (0..n).map(|i| self.entries[[i, j]].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_frobenius(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |M - M†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut d: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                d = d.max((self.entries[[i, j]] - self.entries[[j, i]].conj()).norm());
            }
        }
        d
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        let mut h = self.clone();
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                h.entries[[i, j]] = 0.5 * (self.entries[[i, j]] + self.entries[[j, i]].conj());
            }
        }
        h
    }

    /// Principal submatrix on the given basis indices.
    pub fn submatrix(&self, indices: &[usize]) -> Self {
        let k = indices.len();
        Self::from_fn(k, |(i, j)| self.entries[[indices[i], indices[j]]])
    }
}

impl fmt::Display for ComplexOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.entries.rows() {
            let cells: Vec<String> = row
                .iter()
                .map(|z| format!("{:+.4}{:+.4}i", z.re, z.im))
                .collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

impl Add for &ComplexOperator {
    type Output = ComplexOperator;
    fn add(self, rhs: &ComplexOperator) -> ComplexOperator {
        ComplexOperator {
            entries: &self.entries + &rhs.entries,
        }
    }
}

impl Sub for &ComplexOperator {
    type Output = ComplexOperator;
    fn sub(self, rhs: &ComplexOperator) -> ComplexOperator {
        ComplexOperator {
            entries: &self.entries - &rhs.entries,
        }
    }
}

impl AddAssign<&ComplexOperator> for ComplexOperator {
    fn add_assign(&mut self, rhs: &ComplexOperator) {
        self.entries += &rhs.entries;
    }
}

impl Neg for &ComplexOperator {
    type Output = ComplexOperator;
    fn neg(self) -> ComplexOperator {
        self.scale(-ONE)
    }
}

impl Mul<C64> for &ComplexOperator {
    type Output = ComplexOperator;
    fn mul(self, rhs: C64) -> ComplexOperator {
        self.scale(rhs)
    }
}

impl Mul<f64> for &ComplexOperator {
    type Output = ComplexOperator;
    fn mul(self, rhs: f64) -> ComplexOperator {
        self.scale(C64::new(rhs, 0.0))
    }
}

impl Mul for &ComplexOperator {
    type Output = ComplexOperator;
    fn mul(self, rhs: &ComplexOperator) -> ComplexOperator {
        self.matmul(rhs)
    }
}

/// Ordered tensor factors with unique labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubsystemLayout {
    factors: Vec<(String, usize)>,
}

impl SubsystemLayout {
    pub fn new<S: AsRef<str>>(factors: &[(S, usize)]) -> Result<Self, LinalgError> {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(factors.len());
        for (label, dim) in factors {
            let label = label.as_ref().to_string();
            if *dim == 0 {
                return Err(LinalgError::ZeroDimension(label));
            }
            if !seen.insert(label.clone()) {
                return Err(LinalgError::DuplicateLabel(label));
            }
            out.push((label, *dim));
        }
        if out.is_empty() {
            return Err(LinalgError::EmptyTensor);
        }
        Ok(Self { factors: out })
    }

    /// Two qubits labelled `q1`, `q2`.
    pub fn two_qubits() -> Self {
        Self::new(&[("q1", 2), ("q2", 2)]).expect("static layout")
    }

    pub fn factors(&self) -> &[(String, usize)] {
        &self.factors
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.factors.iter().map(|(l, _)| l.as_str())
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|(_, d)| *d).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.factors.iter().map(|(_, d)| *d).product()
    }

    pub fn position(&self, label: &str) -> Result<usize, LinalgError> {
        self.factors
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| LinalgError::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize, LinalgError> {
        Ok(self.factors[self.position(label)?].1)
    }

    /// Flat basis index of a multi-index (one local index per factor).
    pub fn flat_index(&self, local: &[usize]) -> usize {
        debug_assert_eq!(local.len(), self.factors.len());
        local
            .iter()
            .zip(self.factors.iter())
            .fold(0, |acc, (&i, (_, d))| {
                debug_assert!(i < *d);
                acc * d + i
            })
    }

    /// Inverse of [`flat_index`](Self::flat_index).
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (k, (_, d)) in self.factors.iter().enumerate().rev() {
            out[k] = flat % d;
            flat /= d;
        }
        out
    }

    /// Layout of the kept factors, in layout order.
    pub fn sublayout(&self, keep: &[&str]) -> Result<Self, LinalgError> {
        for l in keep {
            self.position(l)?;
        }
        let factors: Vec<(String, usize)> = self
            .factors
            .iter()
            .filter(|(l, _)| keep.contains(&l.as_str()))
            .cloned()
            .collect();
        if factors.is_empty() {
            return Err(LinalgError::EmptyKeep);
        }
        Ok(Self { factors })
    }
}

impl fmt::Display for SubsystemLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|(l, d)| format!("{l}:{d}"))
            .collect();
        write!(f, "[{}]", parts.join(" ⊗ "))
    }
}

/// A validated density matrix on a layout.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: ComplexOperator,
    layout: SubsystemLayout,
}

impl DensityMatrix {
    pub fn new(op: ComplexOperator, layout: SubsystemLayout) -> Result<Self, LinalgError> {
        Self::with_tolerances(op, layout, DensityTolerances::DEFAULT)
    }

    pub fn with_tolerances(
        op: ComplexOperator,
        layout: SubsystemLayout,
        tol: DensityTolerances,
    ) -> Result<Self, LinalgError> {
        if op.dim() != layout.total_dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: layout.total_dim(),
                found: op.dim(),
            });
        }
        let herm = op.hermiticity_defect();
        if herm > tol.hermitian {
            return Err(LinalgError::InvalidDensity(format!(
                "hermiticity defect {herm:e} exceeds {:e}",
                tol.hermitian
            )));
        }
        let tr = op.trace();
        if (tr - ONE).norm() > tol.trace {
            return Err(LinalgError::InvalidDensity(format!(
                "trace {tr} deviates from 1 by more than {:e}",
                tol.trace
            )));
        }
        let min = herm_eigen(&op.hermitian_part())?.min();
        if min < -tol.positivity {
            return Err(LinalgError::InvalidDensity(format!(
                "minimum eigenvalue {min:e} below -{:e}",
                tol.positivity
            )));
        }
        Ok(Self { op, layout })
    }

    /// Skips validation; callers own the invariants.
    pub(crate) fn new_unchecked(op: ComplexOperator, layout: SubsystemLayout) -> Self {
        debug_assert_eq!(op.dim(), layout.total_dim());
        Self { op, layout }
    }

    pub fn from_pure(psi: &Ket, layout: SubsystemLayout) -> Result<Self, LinalgError> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let psi = psi.mapv(|z| z / norm);
        Self::new(ComplexOperator::projector(&psi), layout)
    }

    /// Convex mixture of pure states; weights must sum to 1.
    pub fn mixture(
        parts: &[(f64, Ket)],
        layout: SubsystemLayout,
    ) -> Result<Self, LinalgError> {
        let dim = layout.total_dim();
        let mut acc = ComplexOperator::zeros(dim);
        for (w, psi) in parts {
            if psi.len() != dim {
                return Err(LinalgError::DimensionMismatch {
                    expected: dim,
                    found: psi.len(),
                });
            }
            acc += &ComplexOperator::projector(psi).scale(C64::new(*w, 0.0));
        }
        Self::new(acc, layout)
    }

    pub fn maximally_mixed(layout: SubsystemLayout) -> Self {
        let d = layout.total_dim();
        Self::new_unchecked(
            ComplexOperator::identity(d).scale(C64::new(1.0 / d as f64, 0.0)),
            layout,
        )
    }

    pub fn op(&self) -> &ComplexOperator {
        &self.op
    }

    pub fn into_op(self) -> ComplexOperator {
        self.op
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.op.get(row, col)
    }

    pub fn purity(&self) -> f64 {
        self.op.trace_product(&self.op).re
    }

    /// Ascending eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        herm_eigen(&self.op.hermitian_part())
            .map(|e| e.values)
            .unwrap_or_default()
    }

    /// Tensor product of two states (layouts concatenated).
    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix, LinalgError> {
        let mut factors = self.layout.factors.clone();
        factors.extend(other.layout.factors.iter().cloned());
        let layout = SubsystemLayout::new(&factors)?;
        Ok(Self::new_unchecked(tensor(&[&self.op, &other.op])?, layout))
    }
}

/// Kronecker product, left factor most significant.
pub fn tensor(factors: &[&ComplexOperator]) -> Result<ComplexOperator, LinalgError> {
    let (first, rest) = factors.split_first().ok_or(LinalgError::EmptyTensor)?;
    Ok(rest
        .iter()
        .fold((*first).clone(), |acc, f| kron2(&acc, f)))
}

fn kron2(a: &ComplexOperator, b: &ComplexOperator) -> ComplexOperator {
    let (na, nb) = (a.dim(), b.dim());
    let mut out = Array2::<C64>::zeros((na * nb, na * nb));
    for i in 0..na {
        for j in 0..na {
            let aij = a.entries[[i, j]];
            if aij == ZERO {
                continue;
            }
            for k in 0..nb {
                for l in 0..nb {
                    out[[i * nb + k, j * nb + l]] = aij * b.entries[[k, l]];
                }
            }
        }
    }
    ComplexOperator { entries: out }
}

/// Kronecker product of kets.
pub fn tensor_kets(kets: &[&Ket]) -> Ket {
    kets.iter().fold(Array1::from_elem(1, ONE), |acc, k| {
        let mut out = Array1::zeros(acc.len() * k.len());
        for (i, a) in acc.iter().enumerate() {
            for (j, b) in k.iter().enumerate() {
                out[i * k.len() + j] = a * b;
            }
        }
        out
    })
}

/// `local` on factor `site`, identity elsewhere.
pub fn embed(
    local: &ComplexOperator,
    layout: &SubsystemLayout,
    site: &str,
) -> Result<ComplexOperator, LinalgError> {
    let pos = layout.position(site)?;
    let dims = layout.dims();
    if local.dim() != dims[pos] {
        return Err(LinalgError::DimensionMismatch {
            expected: dims[pos],
            found: local.dim(),
        });
    }
    let left: usize = dims[..pos].iter().product();
    let right: usize = dims[pos + 1..].iter().product();
    let d = dims[pos];
    let total = left * d * right;
    let mut out = Array2::<C64>::zeros((total, total));
    for l in 0..left {
        for i in 0..d {
            for j in 0..d {
                let v = local.entries[[i, j]];
                if v == ZERO {
                    continue;
                }
                for r in 0..right {
                    out[[(l * d + i) * right + r, (l * d + j) * right + r]] = v;
                }
            }
        }
    }
    Ok(ComplexOperator { entries: out })
}

/// Partial trace of an arbitrary operator; kept factors stay in layout order.
pub fn partial_trace_operator(
    op: &ComplexOperator,
    layout: &SubsystemLayout,
    keep: &[&str],
) -> Result<(ComplexOperator, SubsystemLayout), LinalgError> {
    if op.dim() != layout.total_dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: layout.total_dim(),
            found: op.dim(),
        });
    }
    let sub = layout.sublayout(keep)?;
    let kept_mask: Vec<bool> = layout
        .labels()
        .map(|l| keep.contains(&l))
        .collect();
    let dims = layout.dims();
    let traced_dim: usize = dims
        .iter()
        .zip(&kept_mask)
        .filter(|(_, k)| !**k)
        .map(|(d, _)| *d)
        .product();
    // group full indices by their traced-out multi-index
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::new(); traced_dim];
    for flat in 0..layout.total_dim() {
        let multi = layout.multi_index(flat);
        let (mut kept, mut traced) = (0usize, 0usize);
        for (k, &i) in multi.iter().enumerate() {
            if kept_mask[k] {
                kept = kept * dims[k] + i;
            } else {
                traced = traced * dims[k] + i;
            }
        }
        groups[traced].push((flat, kept));
    }
    let mut out = ComplexOperator::zeros(sub.total_dim());
    for group in &groups {
        for &(fi, ki) in group {
            for &(fj, kj) in group {
                out.entries[[ki, kj]] += op.entries[[fi, fj]];
            }
        }
    }
    Ok((out, sub))
}

pub fn partial_trace(rho: &DensityMatrix, keep: &[&str]) -> Result<DensityMatrix, LinalgError> {
    let (op, layout) = partial_trace_operator(&rho.op, &rho.layout, keep)?;
    Ok(DensityMatrix::new_unchecked(op, layout))
}

/// Eigen-decomposition of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct HermEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: Array2<C64>,
}

impl HermEigen {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn vector(&self, k: usize) -> Ket {
        self.vectors.column(k).to_owned()
    }

    /// `Σ f(λ_k) v_k v_k†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexOperator {
        let n = self.vectors.nrows();
        let mut out = Array2::<C64>::zeros((n, n));
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            let v = self.vectors.column(k);
            for i in 0..n {
                let vi = v[i] * w;
                for j in 0..n {
                    out[[i, j]] += vi * v[j].conj();
                }
            }
        }
        ComplexOperator { entries: out }
    }
}

/// Hermiticity bound (relative to the largest entry) accepted by [`herm_eigen`].
pub const EIGEN_HERMITIAN_TOL: f64 = 1e-9;

pub fn herm_eigen(op: &ComplexOperator) -> Result<HermEigen, LinalgError> {
    let scale = op.max_abs().max(1.0);
    let defect = op.hermiticity_defect();
    if defect > EIGEN_HERMITIAN_TOL * scale {
        return Err(LinalgError::NotHermitian { defect });
    }
    let (values, vectors) = op
        .hermitian_part()
        .entries
        .eigh(UPLO::Upper)
        .map_err(|e| LinalgError::Lapack(e.to_string()))?;
    Ok(HermEigen {
        values: values.to_vec(),
        vectors,
    })
}

/// Computational basis vector `|index⟩`.
pub fn basis_ket(dim: usize, index: usize) -> Ket {
    let mut v = Array1::zeros(dim);
    v[index] = ONE;
    v
}

/// Builds a normalized ket from (index, amplitude) pairs.
pub fn ket_from(dim: usize, amps: &[(usize, C64)]) -> Ket {
    let mut v = Array1::zeros(dim);
    for &(i, a) in amps {
        v[i] += a;
    }
    let n = v.iter().map(|z: &C64| z.norm_sqr()).sum::<f64>().sqrt();
    v.mapv(|z| z / n)
}

pub mod pauli {
    use super::*;

    pub fn identity() -> ComplexOperator {
        ComplexOperator::identity(2)
    }

    pub fn x() -> ComplexOperator {
        ComplexOperator::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]).unwrap()
    }

    pub fn y() -> ComplexOperator {
        ComplexOperator::from_rows(&[vec![ZERO, -I], vec![I, ZERO]]).unwrap()
    }

    pub fn z() -> ComplexOperator {
        ComplexOperator::from_rows(&[vec![ONE, ZERO], vec![ZERO, -ONE]]).unwrap()
    }
}

/// Two-qubit Bell states in the |00⟩,|01⟩,|10⟩,|11⟩ basis.
pub mod bell {
    use super::*;

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    pub fn phi_plus() -> Ket {
        Array1::from(vec![C64::new(H, 0.0), ZERO, ZERO, C64::new(H, 0.0)])
    }

    pub fn phi_minus() -> Ket {
        Array1::from(vec![C64::new(H, 0.0), ZERO, ZERO, C64::new(-H, 0.0)])
    }

    pub fn psi_plus() -> Ket {
        Array1::from(vec![ZERO, C64::new(H, 0.0), C64::new(H, 0.0), ZERO])
    }

    pub fn psi_minus() -> Ket {
        Array1::from(vec![ZERO, C64::new(H, 0.0), C64::new(-H, 0.0), ZERO])
    }

    pub fn ket00() -> Ket {
        basis_ket(4, 0)
    }

    pub fn ket11() -> Ket {
        basis_ket(4, 3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let id = pauli::identity();
        let t = tensor(&[&id, &id]).unwrap();
        assert_eq!(t, ComplexOperator::identity(4));
    }

    #[test]
    fn sigma_x_on_first_qubit_flips_00_to_10() {
        let t = tensor(&[&pauli::x(), &pauli::identity()]).unwrap();
        let out = t.apply(&basis_ket(4, 0));
        assert_eq!(out, basis_ket(4, 2));
    }

    #[test]
    fn tensor_dims_multiply() {
        let a = ComplexOperator::identity(4);
        let b = ComplexOperator::identity(3);
        assert_eq!(tensor(&[&a, &b]).unwrap().dim(), 12);
        assert_eq!(tensor(&[]), Err(LinalgError::EmptyTensor));
    }

    #[test]
    fn embedded_sigma_y_sum_is_collective_sy() {
        let layout = SubsystemLayout::two_qubits();
        let s = &embed(&pauli::y(), &layout, "q1").unwrap() + &embed(&pauli::y(), &layout, "q2").unwrap();
        let expected = &tensor(&[&pauli::y(), &pauli::identity()]).unwrap()
            + &tensor(&[&pauli::identity(), &pauli::y()]).unwrap();
        assert!(s.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn embed_identity_and_annihilator() {
        let layout = SubsystemLayout::new(&[("q1", 4), ("q2", 4), ("cav", 3)]).unwrap();
        for site in ["q1", "q2", "cav"] {
            let d = layout.dim_of(site).unwrap();
            let e = embed(&ComplexOperator::identity(d), &layout, site).unwrap();
            assert_eq!(e, ComplexOperator::identity(48));
        }
        let mut a = ComplexOperator::zeros(3);
        a.entries_mut()[[0, 1]] = ONE;
        a.entries_mut()[[1, 2]] = c(2f64.sqrt());
        let e = embed(&a, &layout, "cav").unwrap();
        let one_photon = basis_ket(48, layout.flat_index(&[0, 0, 1]));
        assert_eq!(e.apply(&one_photon), basis_ket(48, 0));
    }

    #[test]
    fn embed_errors() {
        let layout = SubsystemLayout::two_qubits();
        assert_eq!(
            embed(&pauli::x(), &layout, "cav"),
            Err(LinalgError::UnknownLabel("cav".into()))
        );
        assert!(matches!(
            embed(&ComplexOperator::identity(3), &layout, "q1"),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn layout_rejects_duplicates_and_zero_dims() {
        assert!(matches!(
            SubsystemLayout::new(&[("a", 2), ("a", 2)]),
            Err(LinalgError::DuplicateLabel(_))
        ));
        assert!(matches!(
            SubsystemLayout::new(&[("a", 0)]),
            Err(LinalgError::ZeroDimension(_))
        ));
        let l = SubsystemLayout::new(&[("a", 2), ("b", 3), ("c", 5)]).unwrap();
        assert_eq!(l.total_dim(), 30);
        for flat in 0..30 {
            assert_eq!(l.flat_index(&l.multi_index(flat)), flat);
        }
    }

    #[test]
    fn bell_state_reduces_to_maximally_mixed() {
        let rho = DensityMatrix::from_pure(&bell::phi_plus(), SubsystemLayout::two_qubits()).unwrap();
        let red = partial_trace(&rho, &["q1"]).unwrap();
        let half = ComplexOperator::identity(2).scale(c(0.5));
        assert!(red.op().max_abs_diff(&half) < 1e-15);
    }

    #[test]
    fn product_state_reduction() {
        let a = ComplexOperator::from_rows(&[vec![c(0.7), C64::new(0.1, 0.2)], vec![C64::new(0.1, -0.2), c(0.3)]]).unwrap();
        let b = ComplexOperator::from_rows(&[vec![c(0.4), c(0.0)], vec![c(0.0), c(0.6)]]).unwrap();
        let rho = DensityMatrix::new(tensor(&[&a, &b]).unwrap(), SubsystemLayout::two_qubits()).unwrap();
        let ra = partial_trace(&rho, &["q1"]).unwrap();
        let rb = partial_trace(&rho, &["q2"]).unwrap();
        assert!(ra.op().max_abs_diff(&a) < 1e-15);
        assert!(rb.op().max_abs_diff(&b) < 1e-15);
        assert_eq!(
            partial_trace(&rho, &["x"]),
            Err(LinalgError::UnknownLabel("x".into()))
        );
    }

    #[test]
    fn eigen_of_pauli_z_and_identity() {
        let e = herm_eigen(&pauli::z()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        let e = herm_eigen(&ComplexOperator::identity(4)).unwrap();
        assert!(e.values.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn eigen_rejects_non_hermitian() {
        let m = ComplexOperator::transition(2, 0, 1);
        assert!(matches!(herm_eigen(&m), Err(LinalgError::NotHermitian { .. })));
    }

    #[test]
    fn density_validation() {
        let layout = SubsystemLayout::two_qubits();
        let bad_trace = ComplexOperator::identity(4);
        assert!(DensityMatrix::new(bad_trace, layout.clone()).is_err());
        let negative = ComplexOperator::diagonal(&[c(1.2), c(-0.2), c(0.0), c(0.0)]);
        assert!(DensityMatrix::new(negative, layout.clone()).is_err());
        let wrong_dim = ComplexOperator::identity(2).scale(c(0.5));
        assert!(matches!(
            DensityMatrix::new(wrong_dim, layout),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }
}
