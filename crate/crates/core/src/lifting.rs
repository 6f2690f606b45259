//! Strategy transport between a synchronous game `G` and `(X(G), |Q|)`.
//!
//! Index `i` of the independent set game is identified with question `i`
//! of `G` (questions in their stored order).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{self, AlgebraError, ComplexMatrix, Tolerance};
use crate::games::{self, GameError, SyncQuantumStrategy, SynchronousGame};
use crate::indepset::{self, IndepSetError, IndepStrategy, IndependentSetGame};
use crate::par::{self, Execution};
use crate::stability::{self, RoundingError, RoundingReport, PROOF_SLACK};

/// Default constant in `value_on_G >= 1 - kappa' sqrt(t delta)`.
pub const DEFAULT_KAPPA_PRIME: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LiftError {
    #[error("backward lift is not a PVM at question {question} (||sum - 1||_2 = {residual:.3e}); use the approximate lift")]
    NotPerfect { question: usize, residual: f64 },
    #[error("rounding failed at question {question}: {source}")]
    Rounding {
        question: usize,
        #[source]
        source: RoundingError,
    },
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    IndepSet(#[from] IndepSetError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftOptions {
    pub kappa_prime: f64,
    pub execution: Execution,
}

impl Default for LiftOptions {
    fn default() -> Self {
        LiftOptions {
            kappa_prime: DEFAULT_KAPPA_PRIME,
            execution: Execution::default(),
        }
    }
}

/// Diagnostics of [`backward_lift_approx`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftReport {
    pub t: usize,
    /// Loss of the input on `(X(G), t)` under `pi_d`.
    pub delta: f64,
    /// `||sum_{i,a} P_i^{(q,a)} - 1||_2` per question.
    pub per_question_residuals: Vec<f64>,
    pub mean_residual: f64,
    /// `sqrt(2 t delta)`.
    pub jensen_bound: f64,
    /// `sum_q ||sum_{i,a} P_i^{(q,a)} - 1||_2^2`.
    pub residual_sq_sum: f64,
    /// `(1/t^2) sum_q sum_{(i,a) != (i',a')} tau(P_i^{(q,a)} P_{i'}^{(q,a')})`.
    pub almost_orthogonality: f64,
    /// `sum_{i,a} ||P_i^{(q,a)} - Q_i^{(q,a)}||_2^2` per question.
    pub rounding_distances: Vec<f64>,
    pub rounding_reports: Vec<RoundingReport>,
    #[serde(rename = "value_on_G")]
    pub value_on_g: f64,
    pub kappa_prime: f64,
    /// `1 - kappa' sqrt(t delta)`.
    pub bound_rhs: f64,
}

/// One checked inequality of a [`LiftReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl LiftReport {
    /// The estimates that hold for every input.
    pub fn deterministic_checks(&self) -> Vec<LiftCheck> {
        let t = self.t as f64;
        let check = |name, lhs: f64, rhs: f64| LiftCheck {
            name,
            lhs,
            rhs,
            holds: lhs <= rhs,
        };
        vec![
            check(
                "mean_residual <= sqrt(2 t delta)",
                self.mean_residual,
                self.jensen_bound + PROOF_SLACK,
            ),
            check(
                "almost_orthogonality <= 2 delta",
                self.almost_orthogonality,
                2.0 * self.delta + PROOF_SLACK,
            ),
            check(
                "residual_sq_sum <= 2 t^2 delta",
                self.residual_sq_sum,
                2.0 * t * t * self.delta + 1e-6,
            ),
        ]
    }

    /// `value_on_G >= bound_rhs`, with the configured constant.
    pub fn value_check(&self) -> LiftCheck {
        LiftCheck {
            name: "value_on_G >= 1 - kappa' sqrt(t delta)",
            lhs: self.bound_rhs,
            rhs: self.value_on_g,
            holds: self.value_on_g >= self.bound_rhs,
        }
    }

    pub fn is_finite(&self) -> bool {
        [
            self.delta,
            self.mean_residual,
            self.jensen_bound,
            self.residual_sq_sum,
            self.almost_orthogonality,
            self.value_on_g,
            self.bound_rhs,
        ]
        .iter()
        .chain(&self.per_question_residuals)
        .chain(&self.rounding_distances)
        .all(|x| x.is_finite())
    }
}

/// `P_i^{(q',a)} = P_i^a` if `q' = i`, else `0`, as a strategy on `(X(G), |Q|)`.
pub fn forward_lift(
    g: &SynchronousGame,
    s: &SyncQuantumStrategy,
    tol: Tolerance,
) -> Result<(IndependentSetGame, IndepStrategy), LiftError> {
    s.validate_for(g, tol)?;
    let game = indepset::reduce(g)?;
    let zero = ComplexMatrix::zeros(s.dim);
    let families = (0..g.n_questions())
        .map(|i| {
            game.graph
                .vertices()
                .iter()
                .map(|&(q, a)| {
                    if q == i {
                        s.pvms[i][a].clone()
                    } else {
                        zero.clone()
                    }
                })
                .collect()
        })
        .collect();
    let lifted = IndepStrategy::new(families)?;
    Ok((game, lifted))
}

/// `P_i^{(q,a)}` for fixed `q`, ordered by `(i, a)`.
fn question_family(
    game: &IndependentSetGame,
    s: &IndepStrategy,
    q: usize,
    na: usize,
) -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(s.t() * na);
    for fam in &s.families {
        for a in 0..na {
            let v = game
                .graph
                .index_of((q, a))
                .expect("reduced graph contains Q x A");
            out.push(fam[v].clone());
        }
    }
    out
}

fn collapse(family: &[ComplexMatrix], t: usize, na: usize, dim: usize) -> Vec<ComplexMatrix> {
    (0..na)
        .map(|a| {
            let mut acc = ComplexMatrix::zeros(dim);
            for i in 0..t {
                acc += &family[i * na + a];
            }
            acc.hermitian_part()
        })
        .collect()
}

fn check_shape(
    g: &SynchronousGame,
    game: &IndependentSetGame,
    s: &IndepStrategy,
    tol: Tolerance,
) -> Result<(), LiftError> {
    s.validate_for(game, tol)?;
    debug_assert_eq!(game.t, g.n_questions());
    Ok(())
}

/// `P_q^a = sum_i P_i^{(q,a)}`; fails unless every family is a PVM within `tol`.
pub fn backward_lift_perfect(
    s: &IndepStrategy,
    g: &SynchronousGame,
    tol: Tolerance,
) -> Result<SyncQuantumStrategy, LiftError> {
    let game = indepset::reduce(g)?;
    check_shape(g, &game, s, tol)?;
    let (t, na) = (s.t(), g.n_answers());
    let mut pvms = Vec::with_capacity(g.n_questions());
    for q in 0..g.n_questions() {
        let family = collapse(&question_family(&game, s, q, na), t, na, s.dim);
        if !algebra::is_pvm(&family, tol)? {
            return Err(LiftError::NotPerfect {
                question: q,
                residual: algebra::identity_residual(&family)?,
            });
        }
        pvms.push(family);
    }
    Ok(SyncQuantumStrategy::new(pvms)?)
}

pub fn backward_lift_approx(
    s: &IndepStrategy,
    g: &SynchronousGame,
    tol: Tolerance,
) -> Result<(SyncQuantumStrategy, LiftReport), LiftError> {
    backward_lift_approx_with(s, g, tol, LiftOptions::default())
}

/// Rounds each `{P_i^{(q,a)}}_{(i,a)}` to a PVM `{Q_i^{(q,a)}}` and returns
/// `Q_q^a = sum_i Q_i^{(q,a)}` with full diagnostics.
pub fn backward_lift_approx_with(
    s: &IndepStrategy,
    g: &SynchronousGame,
    tol: Tolerance,
    options: LiftOptions,
) -> Result<(SyncQuantumStrategy, LiftReport), LiftError> {
    let game = indepset::reduce(g)?;
    check_shape(g, &game, s, tol)?;
    // Nonnegative in exact arithmetic; clamp rounding noise.
    let delta = indepset::sync_loss_indep_with(&game, s, tol, options.execution)?
        .loss
        .max(0.0);
    let (t, na, nq) = (s.t(), g.n_answers(), g.n_questions());
    let tf = t as f64;

    struct PerQuestion {
        residual: f64,
        off_diagonal: f64,
        rounded: Vec<ComplexMatrix>,
        report: RoundingReport,
    }
    let results = par::map_indices(
        options.execution,
        nq,
        |q| -> Result<PerQuestion, LiftError> {
            let family = question_family(&game, s, q, na);
            let residual = algebra::identity_residual(&family)?;
            let mut off_diagonal = 0.0;
            for (x, p) in family.iter().enumerate() {
                for (y, p2) in family.iter().enumerate() {
                    if x != y {
                        off_diagonal += algebra::trace_of_product(p, p2).re;
                    }
                }
            }
            let rounding = stability::round_projection_family(&family, tol).map_err(|source| {
                LiftError::Rounding {
                    question: q,
                    source,
                }
            })?;
            Ok(PerQuestion {
                residual,
                off_diagonal,
                rounded: rounding.operators,
                report: rounding.report,
            })
        },
    );
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let pvms: Vec<Vec<ComplexMatrix>> = results
        .iter()
        .map(|r| collapse(&r.rounded, t, na, s.dim))
        .collect();
    let strategy = SyncQuantumStrategy::new(pvms)?;
    let value_on_g = games::eval_sync_strategy(g, &strategy, Tolerance::new(1e-8))?;

    let per_question_residuals: Vec<f64> = results.iter().map(|r| r.residual).collect();
    let residual_sq_sum = per_question_residuals.iter().map(|r| r * r).sum();
    let mean_residual = per_question_residuals.iter().sum::<f64>() / nq as f64;
    let report = LiftReport {
        t,
        delta,
        mean_residual,
        jensen_bound: (2.0 * tf * delta).sqrt(),
        residual_sq_sum,
        almost_orthogonality: results.iter().map(|r| r.off_diagonal).sum::<f64>() / (tf * tf),
        rounding_distances: results.iter().map(|r| r.report.total_dist_sq).collect(),
        rounding_reports: results.into_iter().map(|r| r.report).collect(),
        per_question_residuals,
        value_on_g,
        kappa_prime: options.kappa_prime,
        bound_rhs: 1.0 - options.kappa_prime * (tf * delta).sqrt(),
    };
    Ok((strategy, report))
}
