//! Rounding families of operators that almost form a PVM to an exact PVM.
//!
//! [`round_positive_family`] runs the four-stage pipeline for positive
//! contractions `a_1, .., a_m`:
//!
//! 1. `x = 1 - sum a_j`, `a_0 = x_+` (so `sum_{j>=0} a_j >= 1`),
//! 2. `b_1 = a_0 + a_1`, `b_j = a_j` otherwise, `rho = sum b_j`,
//! 3. `c_j = rho^{-1/2} b_j rho^{-1/2}` (a POVM),
//! 4. `p = povm_to_pvm(c)`.
//!
//! Every intermediate distance is recorded in a [`RoundingReport`] so the
//! estimates relating them can be checked instance by instance.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{self, AlgebraError, ComplexMatrix, Tolerance};

/// Slack added to every deterministic estimate.
pub const PROOF_SLACK: f64 = 1e-9;
/// Iteration cap of the refinement loop in [`povm_to_pvm`].
pub const SEESAW_MAX_ITERATIONS: usize = 50;
/// Minimum improvement that keeps the refinement loop going.
pub const SEESAW_MIN_IMPROVEMENT: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoundingError {
    #[error("empty operator family")]
    Empty,
    #[error("operator {index} is not positive (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { index: usize, min_eigenvalue: f64 },
    #[error("operator {index} exceeds the identity (largest eigenvalue {max_eigenvalue})")]
    AboveOne { index: usize, max_eigenvalue: f64 },
    #[error("operator {index} is not a projection")]
    NotProjection { index: usize },
    #[error("input is not a POVM (||sum - 1||_2 = {residual:.3e})")]
    NotPovm { residual: f64 },
    #[error("reference family is not a PVM")]
    ReferenceNotPvm,
    #[error("operator {index} is not below block projection {block} (deviation {deviation:.3e})")]
    NotSubordinate {
        index: usize,
        block: usize,
        deviation: f64,
    },
    #[error("malformed partition: {0}")]
    Partition(String),
    #[error("estimate {name} violated: {lhs:.6e} > {rhs:.6e}")]
    InequalityViolated {
        name: &'static str,
        lhs: f64,
        rhs: f64,
    },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Measured quantities of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundingReport {
    /// `||1 - sum a_j||_2`.
    pub eps_meas: f64,
    /// `|1 - tau(sum a_j^2)|`.
    pub delta_meas: f64,
    pub norm_a0: f64,
    pub norm_rho_minus_1: f64,
    /// `sum ||a_j - b_j||_2^2`.
    pub dist_a_to_b_sq: f64,
    pub dist_b_to_c_sq: f64,
    /// `sum tau(c_j^2)`.
    pub povm_purity: f64,
    pub dist_c_to_p_sq: f64,
    /// `sum ||a_j - q_j||_2^2` for the returned PVM.
    pub total_dist_sq: f64,
    pub m: usize,
    pub dim: usize,
    pub seesaw_iterations: usize,
}

/// One checked inequality `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl EstimateCheck {
    fn new(name: &'static str, lhs: f64, rhs: f64) -> Self {
        EstimateCheck {
            name,
            lhs,
            rhs,
            holds: lhs <= rhs,
        }
    }
}

impl RoundingReport {
    /// `1 - sum tau(c_j^2)`, the POVM's distance from projectivity.
    pub fn purity_defect(&self) -> f64 {
        1.0 - self.povm_purity
    }

    /// The unconditional estimates, each with [`PROOF_SLACK`].
    pub fn deterministic_checks(&self) -> Vec<EstimateCheck> {
        let eps = self.eps_meas;
        let s = PROOF_SLACK;
        let chain =
            self.dist_a_to_b_sq.sqrt() + self.dist_b_to_c_sq.sqrt() + self.dist_c_to_p_sq.sqrt();
        vec![
            EstimateCheck::new("norm_a0 <= eps", self.norm_a0, eps + s),
            EstimateCheck::new("norm_rho_minus_1 <= eps", self.norm_rho_minus_1, eps + s),
            EstimateCheck::new(
                "dist_b_to_c_sq <= 4 eps",
                self.dist_b_to_c_sq,
                4.0 * eps + s,
            ),
            EstimateCheck::new(
                "1 - delta - 4 eps <= povm_purity",
                1.0 - self.delta_meas - 4.0 * eps,
                self.povm_purity + s,
            ),
            EstimateCheck::new(
                "total_dist_sq <= triangle chain",
                self.total_dist_sq,
                chain * chain + s,
            ),
        ]
    }

    /// `total_dist_sq <= 18 delta + 90 eps`, the squared end-to-end bound
    /// `(3 sqrt(2 delta + 10 eps))^2` (plus slack).
    pub fn end_to_end_check(&self) -> EstimateCheck {
        EstimateCheck::new(
            "total_dist_sq <= 18 delta + 90 eps",
            self.total_dist_sq,
            18.0 * self.delta_meas + 90.0 * self.eps_meas + PROOF_SLACK,
        )
    }

    /// `dist_c_to_p_sq <= 9 (1 - purity)` for the POVM rounding step.
    pub fn povm_contract_check(&self) -> EstimateCheck {
        EstimateCheck::new(
            "dist_c_to_p_sq <= 9 purity_defect",
            self.dist_c_to_p_sq,
            9.0 * self.purity_defect().max(0.0) + PROOF_SLACK,
        )
    }

    /// Flat `key value` lines.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        for (k, v) in [
            ("eps_meas", self.eps_meas),
            ("delta_meas", self.delta_meas),
            ("norm_a0", self.norm_a0),
            ("norm_rho_minus_1", self.norm_rho_minus_1),
            ("dist_a_to_b_sq", self.dist_a_to_b_sq),
            ("dist_b_to_c_sq", self.dist_b_to_c_sq),
            ("povm_purity", self.povm_purity),
            ("dist_c_to_p_sq", self.dist_c_to_p_sq),
            ("total_dist_sq", self.total_dist_sq),
        ] {
            let _ = writeln!(s, "{k} {v:.12e}");
        }
        let _ = writeln!(s, "m {}", self.m);
        let _ = writeln!(s, "dim {}", self.dim);
        let _ = writeln!(s, "seesaw_iterations {}", self.seesaw_iterations);
        s
    }
}

/// Intermediate operators of a pipeline run.
#[derive(Debug, Clone)]
pub struct RoundingTrace {
    /// Inputs after spectral clamping into `[0, 1]`.
    pub a: Vec<ComplexMatrix>,
    pub a0: ComplexMatrix,
    pub b: Vec<ComplexMatrix>,
    pub rho: ComplexMatrix,
    pub c: Vec<ComplexMatrix>,
}

#[derive(Debug, Clone)]
pub struct Rounding {
    pub operators: Vec<ComplexMatrix>,
    pub report: RoundingReport,
    pub trace: RoundingTrace,
}

/// Output of [`povm_to_pvm`].
#[derive(Debug, Clone)]
pub struct PvmRounding {
    pub operators: Vec<ComplexMatrix>,
    /// `sum ||c_j - p_j||_2^2`.
    pub dist_sq: f64,
    /// `1 - sum tau(c_j^2)`.
    pub purity_defect: f64,
    pub iterations: usize,
}

fn check_family(a: &[ComplexMatrix]) -> Result<usize, RoundingError> {
    let d = a.first().ok_or(RoundingError::Empty)?.dim();
    for x in a {
        if x.dim() != d {
            return Err(AlgebraError::DimensionMismatch {
                expected: d,
                found: x.dim(),
            }
            .into());
        }
    }
    Ok(d)
}

/// Validates `0 <= a_j <= 1` up to `100 eta` and clamps the spectrum into
/// `[0, 1]` where it overshoots.
fn clamp_contractions(
    a: &[ComplexMatrix],
    tol: Tolerance,
) -> Result<Vec<ComplexMatrix>, RoundingError> {
    let slack = 100.0 * tol.eta;
    a.iter()
        .enumerate()
        .map(|(index, x)| {
            let eig = algebra::hermitian_eig(x, tol)?;
            let (lo, hi) = (eig.min_eigenvalue(), eig.max_eigenvalue());
            if lo < -slack {
                return Err(RoundingError::NotPositive {
                    index,
                    min_eigenvalue: lo,
                });
            }
            if hi > 1.0 + slack {
                return Err(RoundingError::AboveOne {
                    index,
                    max_eigenvalue: hi,
                });
            }
            if lo < 0.0 || hi > 1.0 {
                Ok(eig.apply(|l| l.clamp(0.0, 1.0)))
            } else {
                Ok(x.clone())
            }
        })
        .collect()
}

fn sum_dist_sq(x: &[ComplexMatrix], y: &[ComplexMatrix]) -> f64 {
    x.iter().zip(y).map(|(a, b)| algebra::dist2_sq(a, b)).sum()
}

fn sum_tau_squares(x: &[ComplexMatrix]) -> f64 {
    x.iter().map(|a| algebra::trace_of_product(a, a).re).sum()
}

/// Runs stages 1-3 and hands the POVM to `round_povm`.
fn pipeline(
    a: &[ComplexMatrix],
    tol: Tolerance,
    round_povm: impl Fn(&[ComplexMatrix]) -> Result<PvmRounding, RoundingError>,
) -> Result<Rounding, RoundingError> {
    let d = check_family(a)?;
    let a = clamp_contractions(a, tol)?;
    let one = ComplexMatrix::identity(d);

    let x = &one - &algebra::sum(&a)?;
    let eps_meas = algebra::trace_norm2(&x);
    let delta_meas = (1.0 - sum_tau_squares(&a)).abs();

    let a0 = algebra::positive_part(&x, tol)?;
    let mut b = a.clone();
    b[0] += &a0;
    let rho = algebra::sum(&b)?;
    let rho_inv_sqrt = algebra::inv_sqrt(&rho, tol)?;
    let c: Vec<ComplexMatrix> = b
        .iter()
        .map(|bj| (&(&rho_inv_sqrt * bj) * &rho_inv_sqrt).hermitian_part())
        .collect();

    let pvm = round_povm(&c)?;
    let report = RoundingReport {
        eps_meas,
        delta_meas,
        norm_a0: algebra::trace_norm2(&a0),
        norm_rho_minus_1: algebra::trace_norm2(&(&rho - &one)),
        dist_a_to_b_sq: sum_dist_sq(&a, &b),
        dist_b_to_c_sq: sum_dist_sq(&b, &c),
        povm_purity: sum_tau_squares(&c),
        dist_c_to_p_sq: pvm.dist_sq,
        total_dist_sq: sum_dist_sq(&a, &pvm.operators),
        m: a.len(),
        dim: d,
        seesaw_iterations: pvm.iterations,
    };
    Ok(Rounding {
        operators: pvm.operators,
        report,
        trace: RoundingTrace { a, a0, b, rho, c },
    })
}

/// Rounds positive contractions `0 <= a_j <= 1` to a PVM.
pub fn round_positive_family(
    a: &[ComplexMatrix],
    tol: Tolerance,
) -> Result<Rounding, RoundingError> {
    pipeline(a, tol, |c| povm_to_pvm(c, tol))
}

/// Rounds a family of projections; additionally checks `delta <= eps`.
pub fn round_projection_family(
    p: &[ComplexMatrix],
    tol: Tolerance,
) -> Result<Rounding, RoundingError> {
    check_family(p)?;
    if let Some(index) = p.iter().position(|x| !algebra::is_projection(x, tol)) {
        return Err(RoundingError::NotProjection { index });
    }
    let out = round_positive_family(p, tol)?;
    let r = &out.report;
    if r.delta_meas > r.eps_meas + PROOF_SLACK {
        return Err(RoundingError::InequalityViolated {
            name: "delta <= eps",
            lhs: r.delta_meas,
            rhs: r.eps_meas,
        });
    }
    Ok(out)
}

/// Unit vectors (as columns) split into blocks, one block per PVM element.
struct Assignment {
    vectors: Vec<Vec<Complex64>>,
    owner: Vec<usize>,
}

fn expectation(c: &ComplexMatrix, v: &[Complex64]) -> f64 {
    let m = c.as_dmatrix();
    let d = v.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..d {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..d {
            row += m[(i, j)] * v[j];
        }
        acc += v[i].conj() * row;
    }
    acc.re
}

/// Each vector goes to the element with the largest expectation, lowest index on ties.
fn assign(c: &[ComplexMatrix], vectors: Vec<Vec<Complex64>>) -> Assignment {
    let owner = vectors
        .iter()
        .map(|v| {
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (j, cj) in c.iter().enumerate() {
                let s = expectation(cj, v);
                if s > best_score {
                    best_score = s;
                    best = j;
                }
            }
            best
        })
        .collect();
    Assignment { vectors, owner }
}

fn assemble(assignment: &Assignment, m: usize, d: usize) -> Vec<ComplexMatrix> {
    let mut p = vec![ComplexMatrix::zeros(d); m];
    for (v, &j) in assignment.vectors.iter().zip(&assignment.owner) {
        p[j] += &ComplexMatrix::outer(v);
    }
    p.into_iter().map(|x| x.hermitian_part()).collect()
}

/// Rotates every block's basis to the eigenbasis of `c_j` compressed to the
/// block. Each block keeps its span, so the objective is unchanged before
/// reassignment.
fn refine_bases(c: &[ComplexMatrix], assignment: &Assignment) -> Vec<Vec<Complex64>> {
    let d = c[0].dim();
    let mut out = Vec::with_capacity(assignment.vectors.len());
    for (j, cj) in c.iter().enumerate() {
        let block: Vec<&Vec<Complex64>> = assignment
            .vectors
            .iter()
            .zip(&assignment.owner)
            .filter(|(_, &o)| o == j)
            .map(|(v, _)| v)
            .collect();
        if block.is_empty() {
            continue;
        }
        let r = block.len();
        let w = DMatrix::from_fn(d, r, |i, k| block[k][i]);
        let compressed = w.adjoint() * cj.as_dmatrix() * &w;
        let compressed = ComplexMatrix::from_dmatrix(compressed).expect("finite compression");
        let eig = algebra::hermitian_eig(&compressed.hermitian_part(), Tolerance::default())
            .expect("hermitian by construction");
        let rotated = w * &eig.eigenvectors;
        for k in 0..r {
            out.push(rotated.column(k).iter().copied().collect());
        }
    }
    out
}

/// Rounds a POVM to a PVM by weighted-sum diagonalization and block
/// assignment, followed by alternating basis refinement and reassignment.
///
/// Deterministic; exact on PVM inputs and on commuting inputs whose
/// weighted sum separates their joint eigenspaces.
pub fn povm_to_pvm(c: &[ComplexMatrix], tol: Tolerance) -> Result<PvmRounding, RoundingError> {
    let d = check_family(c)?;
    let povm_tol = Tolerance::new(100.0 * tol.eta);
    if !algebra::is_povm(c, povm_tol)? {
        return Err(RoundingError::NotPovm {
            residual: algebra::identity_residual(c)?,
        });
    }
    let m = c.len();
    let mut h = ComplexMatrix::zeros(d);
    for (j, cj) in c.iter().enumerate() {
        h += &cj.scale((j + 1) as f64 / m as f64);
    }
    let eig = algebra::hermitian_eig(&h, povm_tol)?;
    let vectors = (0..d).map(|k| eig.eigenvector(k)).collect();
    let mut assignment = assign(c, vectors);
    let mut p = assemble(&assignment, m, d);
    let mut dist = sum_dist_sq(c, &p);
    let mut iterations = 0;
    while iterations < SEESAW_MAX_ITERATIONS {
        iterations += 1;
        let candidate = assign(c, refine_bases(c, &assignment));
        let q = assemble(&candidate, m, d);
        let new_dist = sum_dist_sq(c, &q);
        if new_dist < dist {
            let improvement = dist - new_dist;
            assignment = candidate;
            p = q;
            dist = new_dist;
            if improvement > SEESAW_MIN_IMPROVEMENT {
                continue;
            }
        }
        break;
    }
    Ok(PvmRounding {
        operators: p,
        dist_sq: dist,
        purity_defect: 1.0 - sum_tau_squares(c),
        iterations,
    })
}

/// Output of [`round_subordinate`].
#[derive(Debug, Clone)]
pub struct SubordinateRounding {
    /// PVM with `q_j <= p_{block(j)}`.
    pub operators: Vec<ComplexMatrix>,
    /// Report of the block-diagonal run; `total_dist_sq` refers to `operators`.
    pub report: RoundingReport,
    /// The block-diagonal PVM `r` before the correction step.
    pub block_pvm: Vec<ComplexMatrix>,
    /// `sum ||a_j - r_j||_2^2`.
    pub block_dist_sq: f64,
}

/// Orthonormal basis (as columns) of the range of a projection.
fn range_basis(p: &ComplexMatrix, tol: Tolerance) -> Result<DMatrix<Complex64>, RoundingError> {
    let eig = algebra::hermitian_eig(p, tol)?;
    let cols: Vec<usize> = (0..eig.dim())
        .filter(|&k| eig.eigenvalues[k] > 0.5)
        .collect();
    let d = p.dim();
    Ok(DMatrix::from_fn(d, cols.len(), |i, k| {
        eig.eigenvectors[(i, cols[k])]
    }))
}

fn block_of(partition: &[Vec<usize>], m: usize, n: usize) -> Result<Vec<usize>, RoundingError> {
    if partition.len() != n {
        return Err(RoundingError::Partition(format!(
            "{} blocks for {n} reference projections",
            partition.len()
        )));
    }
    let mut block = vec![usize::MAX; m];
    for (k, part) in partition.iter().enumerate() {
        for &j in part {
            if j >= m {
                return Err(RoundingError::Partition(format!("index {j} out of range")));
            }
            if block[j] != usize::MAX {
                return Err(RoundingError::Partition(format!("index {j} appears twice")));
            }
            block[j] = k;
        }
    }
    if let Some(j) = block.iter().position(|&k| k == usize::MAX) {
        return Err(RoundingError::Partition(format!(
            "index {j} is not covered"
        )));
    }
    Ok(block)
}

/// Rounds `a` subject to `a_j <= p_{block(j)}` so that the output PVM
/// satisfies `q_j <= p_{block(j)}`.
///
/// The pipeline runs inside the block-diagonal algebra `sum_k p_k M p_k`
/// (its POVM step is done block by block), then the part of each `r_l`
/// outside its own block is moved onto the lowest index of the block it
/// lies in.
pub fn round_subordinate(
    a: &[ComplexMatrix],
    p: &[ComplexMatrix],
    partition: &[Vec<usize>],
    tol: Tolerance,
) -> Result<SubordinateRounding, RoundingError> {
    let d = check_family(a)?;
    check_family(p)?;
    if p[0].dim() != d {
        return Err(AlgebraError::DimensionMismatch {
            expected: d,
            found: p[0].dim(),
        }
        .into());
    }
    if !algebra::is_pvm(p, tol)? {
        return Err(RoundingError::ReferenceNotPvm);
    }
    let m = a.len();
    let block = block_of(partition, m, p.len())?;
    let slack = 100.0 * tol.eta;
    for (j, aj) in a.iter().enumerate() {
        let pk = &p[block[j]];
        let deviation = algebra::trace_norm2(&(aj - &(&(pk * aj) * pk)));
        let gap = algebra::hermitian_eig(&(pk - aj), tol)?.min_eigenvalue();
        if deviation > slack || gap < -slack {
            return Err(RoundingError::NotSubordinate {
                index: j,
                block: block[j],
                deviation: deviation.max(-gap),
            });
        }
    }

    let identity = ComplexMatrix::identity(d);
    let bases: Vec<Option<DMatrix<Complex64>>> = p
        .iter()
        .map(|pk| {
            if algebra::dist2_sq(pk, &identity) <= tol.eta * tol.eta {
                // Whole space: no compression needed.
                Ok(None)
            } else {
                range_basis(pk, tol).map(Some)
            }
        })
        .collect::<Result<_, _>>()?;

    let blockwise = |c: &[ComplexMatrix]| -> Result<PvmRounding, RoundingError> {
        let mut r = vec![ComplexMatrix::zeros(d); m];
        let mut iterations = 0;
        for basis in &bases {
            match basis {
                None => {
                    let out = povm_to_pvm(c, tol)?;
                    iterations = iterations.max(out.iterations);
                    for (rj, x) in r.iter_mut().zip(&out.operators) {
                        *rj += x;
                    }
                }
                Some(w) if w.ncols() == 0 => {}
                Some(w) => {
                    let compressed: Vec<ComplexMatrix> = c
                        .iter()
                        .map(|cj| {
                            ComplexMatrix::from_dmatrix(w.adjoint() * cj.as_dmatrix() * w)
                                .map(|x| x.hermitian_part())
                        })
                        .collect::<Result<_, _>>()?;
                    let out = povm_to_pvm(&compressed, tol)?;
                    iterations = iterations.max(out.iterations);
                    for (rj, x) in r.iter_mut().zip(&out.operators) {
                        let expanded =
                            ComplexMatrix::from_dmatrix(w * x.as_dmatrix() * w.adjoint())?;
                        *rj += &expanded;
                    }
                }
            }
        }
        let r: Vec<ComplexMatrix> = r.into_iter().map(|x| x.hermitian_part()).collect();
        Ok(PvmRounding {
            dist_sq: sum_dist_sq(c, &r),
            purity_defect: 1.0 - sum_tau_squares(c),
            operators: r,
            iterations,
        })
    };
    let inner = pipeline(a, tol, blockwise)?;
    let r = inner.operators;

    // kappa(k): lowest index of block k.
    let lowest: Vec<Option<usize>> = partition
        .iter()
        .map(|part| part.iter().copied().min())
        .collect();
    let outside: Vec<ComplexMatrix> = r
        .iter()
        .enumerate()
        .map(|(l, rl)| rl * &(&identity - &p[block[l]]))
        .collect();
    let outside_sum = algebra::sum(&outside)?;
    let q: Vec<ComplexMatrix> = (0..m)
        .map(|j| {
            let pk = &p[block[j]];
            let mut qj = &r[j] * pk;
            if lowest[block[j]] == Some(j) {
                qj += &(&outside_sum * pk);
            }
            qj.hermitian_part()
        })
        .collect();

    let block_dist_sq = sum_dist_sq(&inner.trace.a, &r);
    let mut report = inner.report;
    report.total_dist_sq = sum_dist_sq(&inner.trace.a, &q);
    Ok(SubordinateRounding {
        operators: q,
        report,
        block_pvm: r,
        block_dist_sq,
    })
}
