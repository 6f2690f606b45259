//! Finite-dimensional tracial matrix algebra.
//!
//! Everything here lives in `M_d(C)` equipped with the normalized trace
//! `tau(x) = Tr(x) / d` and the induced 2-norm `||x||_2 = sqrt(tau(x* x))`.
//! Hermitian inputs are symmetrized to `(x + x*) / 2` before any spectral
//! calculus is applied.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest dimension accepted by the constructors and file readers.
pub const DEFAULT_DIM_CAP: usize = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("matrix is not hermitian: ||x - x*||_2 = {deviation:.3e}")]
    NotHermitian { deviation: f64 },
    #[error("operator is not >= 1: smallest eigenvalue {min_eigenvalue}")]
    NotAboveOne { min_eigenvalue: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix dimension {dim} is outside 1..={cap}")]
    BadDimension { dim: usize, cap: usize },
    #[error("row {row} has {found} entries, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("empty operator family")]
    EmptyFamily,
}

/// Numerical slack used by validators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub eta: f64,
}

impl Tolerance {
    pub const DEFAULT_ETA: f64 = 1e-9;

    pub fn new(eta: f64) -> Self {
        assert!(eta >= 0.0 && eta.is_finite(), "tolerance must be >= 0");
        Tolerance { eta }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            eta: Self::DEFAULT_ETA,
        }
    }
}

/// A square complex matrix, viewed as an element of the tracial algebra `M_d(C)`.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ComplexMatrix(d={}, {:?})",
            self.dim(),
            self.0.as_slice()
        )
    }
}

impl ComplexMatrix {
    /// Wraps a nalgebra matrix, checking squareness and finiteness.
    pub fn from_dmatrix(m: DMatrix<Complex64>) -> Result<Self, AlgebraError> {
        if m.nrows() != m.ncols() {
            return Err(AlgebraError::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() == 0 || m.nrows() > DEFAULT_DIM_CAP {
            return Err(AlgebraError::BadDimension {
                dim: m.nrows(),
                cap: DEFAULT_DIM_CAP,
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(AlgebraError::NonFinite);
        }
        Ok(ComplexMatrix(m))
    }

    /// Builds a matrix from row-major rows.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self, AlgebraError> {
        let d = rows.len();
        if d == 0 || d > DEFAULT_DIM_CAP {
            return Err(AlgebraError::BadDimension {
                dim: d,
                cap: DEFAULT_DIM_CAP,
            });
        }
        for (row, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(AlgebraError::RaggedRow {
                    row,
                    expected: d,
                    found: r.len(),
                });
            }
        }
        Self::from_dmatrix(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self, AlgebraError> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn identity(d: usize) -> Self {
        ComplexMatrix(DMatrix::identity(d, d))
    }

    pub fn zeros(d: usize) -> Self {
        ComplexMatrix(DMatrix::zeros(d, d))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| Complex64::new(x, 0.0)));
        ComplexMatrix(DMatrix::from_diagonal(&d))
    }

    /// Scalar multiple of the identity.
    pub fn scalar(d: usize, value: f64) -> Self {
        Self::identity(d).scale(value)
    }

    /// Rank-one operator `v v*` for the given vector (not normalized here).
    pub fn outer(v: &[Complex64]) -> Self {
        let d = v.len();
        ComplexMatrix(DMatrix::from_fn(d, d, |i, j| v[i] * v[j].conj()))
    }

    /// Rank-one projector onto the span of `v`.
    pub fn projector(v: &[Complex64]) -> Self {
        let norm_sq: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        Self::outer(v).scale(1.0 / norm_sq)
    }

    pub fn pauli_x() -> Self {
        Self::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).expect("valid 2x2")
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_dmatrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        ComplexMatrix(self.0.adjoint())
    }

    pub fn scale(&self, s: f64) -> Self {
        ComplexMatrix(self.0.map(|z| z * s))
    }

    /// `(x + x*) / 2`.
    pub fn hermitian_part(&self) -> Self {
        ComplexMatrix((&self.0 + self.0.adjoint()).map(|z| z * 0.5))
    }

    /// Row-major `[re, im]` pairs, the file representation.
    pub fn to_pairs(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.dim())
            .map(|i| {
                (0..self.dim())
                    .map(|j| {
                        let z = self.0[(i, j)];
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect()
    }

    pub fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<Self, AlgebraError> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|p| Complex64::new(p[0], p[1])).collect())
            .collect();
        Self::from_rows(&rows)
    }

    fn check_same_dim(&self, other: &Self) -> Result<(), AlgebraError> {
        if self.dim() != other.dim() {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Add for ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(self.0 + rhs.0)
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        self.0 += &rhs.0;
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Sub for ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(self.0 - rhs.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Mul for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(self.0 * rhs.0)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-&self.0)
    }
}

/// Sum of a non-empty family of equally sized matrices.
pub fn sum(family: &[ComplexMatrix]) -> Result<ComplexMatrix, AlgebraError> {
    let first = family.first().ok_or(AlgebraError::EmptyFamily)?;
    let mut acc = ComplexMatrix::zeros(first.dim());
    for x in family {
        first.check_same_dim(x)?;
        acc += x;
    }
    Ok(acc)
}

/// `tau(x) = Tr(x) / d`.
pub fn normalized_trace(x: &ComplexMatrix) -> Complex64 {
    x.0.trace() / x.dim() as f64
}

/// `tau(x y)` without forming the product.
pub fn trace_of_product(x: &ComplexMatrix, y: &ComplexMatrix) -> Complex64 {
    let d = x.dim();
    debug_assert_eq!(d, y.dim());
    let mut acc = Complex64::new(0.0, 0.0);
    // Tr(xy) = sum_ij x_ij y_ji; column-major storage makes y^T contiguous in the inner loop.
    for i in 0..d {
        for j in 0..d {
            acc += x.0[(i, j)] * y.0[(j, i)];
        }
    }
    acc / d as f64
}

/// `||x||_2 = sqrt(tau(x* x))`.
pub fn trace_norm2(x: &ComplexMatrix) -> f64 {
    let s: f64 = x.0.iter().map(|z| z.norm_sqr()).sum();
    (s / x.dim() as f64).sqrt()
}

/// Squared 2-norm of a difference, `||x - y||_2^2`.
pub fn dist2_sq(x: &ComplexMatrix, y: &ComplexMatrix) -> f64 {
    let s: f64 =
        x.0.iter()
            .zip(y.0.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
    s / x.dim() as f64
}

/// `||x - x*||_2`.
pub fn hermitian_deviation(x: &ComplexMatrix) -> f64 {
    let d = x.dim();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += (x.0[(i, j)] - x.0[(j, i)].conj()).norm_sqr();
        }
    }
    (s / d as f64).sqrt()
}

/// Spectral decomposition of a hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the unit eigenvector for `eigenvalues[k]`.
    pub eigenvectors: DMatrix<Complex64>,
}

impl HermitianEigen {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        self.eigenvectors.column(k).iter().copied().collect()
    }

    /// `sum_k f(lambda_k) v_k v_k*`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let d = self.dim();
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for k in 0..d {
            let w = f(self.eigenvalues[k]);
            scaled.column_mut(k).iter_mut().for_each(|z| *z *= w);
        }
        ComplexMatrix(scaled * v.adjoint()).hermitian_part()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply(|x| x)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

/// Eigendecomposition of the hermitian part of `x`, rejecting inputs
/// farther than `100 * tol.eta` from hermitian.
pub fn hermitian_eig(x: &ComplexMatrix, tol: Tolerance) -> Result<HermitianEigen, AlgebraError> {
    let deviation = hermitian_deviation(x);
    if deviation > 100.0 * tol.eta {
        return Err(AlgebraError::NotHermitian { deviation });
    }
    Ok(eig_symmetrized(x))
}

fn eig_symmetrized(x: &ComplexMatrix) -> HermitianEigen {
    let h = x.hermitian_part();
    let eig = SymmetricEigen::new(h.0);
    let d = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = DMatrix::from_fn(d, d, |i, c| eig.eigenvectors[(i, order[c])]);
    HermitianEigen {
        eigenvalues,
        eigenvectors,
    }
}

/// `x_+`: eigenvalues clamped at exactly zero.
pub fn positive_part(x: &ComplexMatrix, tol: Tolerance) -> Result<ComplexMatrix, AlgebraError> {
    Ok(hermitian_eig(x, tol)?.apply(|l| l.max(0.0)))
}

/// `x_-`, so that `x = x_+ - x_-`.
pub fn negative_part(x: &ComplexMatrix, tol: Tolerance) -> Result<ComplexMatrix, AlgebraError> {
    Ok(hermitian_eig(x, tol)?.apply(|l| (-l).max(0.0)))
}

/// `rho^{-1/2}` for hermitian `rho >= 1`.
///
/// Eigenvalues in `[1 - 100 eta, 1)` are treated as 1.
pub fn inv_sqrt(rho: &ComplexMatrix, tol: Tolerance) -> Result<ComplexMatrix, AlgebraError> {
    let eig = hermitian_eig(rho, tol)?;
    let min = eig.min_eigenvalue();
    if min < 1.0 - 100.0 * tol.eta {
        return Err(AlgebraError::NotAboveOne {
            min_eigenvalue: min,
        });
    }
    Ok(eig.apply(|l| 1.0 / l.max(1.0).sqrt()))
}

/// `exp(i theta h)` for hermitian `h`.
pub fn unitary_exp(
    h: &ComplexMatrix,
    theta: f64,
    tol: Tolerance,
) -> Result<ComplexMatrix, AlgebraError> {
    let eig = hermitian_eig(h, tol)?;
    let d = eig.dim();
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for k in 0..d {
        let phase = Complex64::from_polar(1.0, theta * eig.eigenvalues[k]);
        scaled.column_mut(k).iter_mut().for_each(|z| *z *= phase);
    }
    Ok(ComplexMatrix(scaled * v.adjoint()))
}

/// `u x u*`.
pub fn conjugate(u: &ComplexMatrix, x: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix(&u.0 * &x.0 * u.0.adjoint())
}

pub fn is_projection(p: &ComplexMatrix, tol: Tolerance) -> bool {
    if hermitian_deviation(p) > tol.eta {
        return false;
    }
    trace_norm2(&(&(p * p) - p)) <= tol.eta
}

/// `||sum_j x_j - 1||_2` for a non-empty family.
pub fn identity_residual(family: &[ComplexMatrix]) -> Result<f64, AlgebraError> {
    let s = sum(family)?;
    Ok(trace_norm2(&(&s - &ComplexMatrix::identity(s.dim()))))
}

/// Checks that `family` consists of projections summing to the identity.
pub fn is_pvm(family: &[ComplexMatrix], tol: Tolerance) -> Result<bool, AlgebraError> {
    if !family.iter().all(|p| is_projection(p, tol)) {
        // Still surface dimension errors before answering.
        sum(family)?;
        return Ok(false);
    }
    Ok(identity_residual(family)? <= tol.eta)
}

/// Checks that `family` consists of PSD operators (smallest eigenvalue at
/// least `-eta`) summing to the identity.
pub fn is_povm(family: &[ComplexMatrix], tol: Tolerance) -> Result<bool, AlgebraError> {
    for x in family {
        match hermitian_eig(x, tol) {
            Ok(eig) if eig.min_eigenvalue() >= -tol.eta => {}
            Ok(_) | Err(AlgebraError::NotHermitian { .. }) => {
                sum(family)?;
                return Ok(false);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(identity_residual(family)? <= tol.eta)
}
