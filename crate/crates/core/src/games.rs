//! Synchronous nonlocal games `G = (Q, A, pi, V)`, their classical value
//! and the value of synchronous quantum strategies given as PVM families.

use std::fmt;

use bitvec::prelude::*;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::algebra::{self, AlgebraError, ComplexMatrix, Tolerance};
use crate::par::{self, Execution};
use crate::rational::{self, Rational};

/// Default budget for [`classical_value`], counted in predicate evaluations.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 100_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("malformed game: {0}")]
    Shape(String),
    #[error("enumeration needs {required} predicate evaluations, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },
    #[error("strategy does not match the game: {0}")]
    LabelMismatch(String),
    #[error(
        "strategy family for question {question} is not a PVM (||sum - 1||_2 = {residual:.3e})"
    )]
    NotPvm { question: usize, residual: f64 },
    #[error("weight C = {0} is outside [0, 1/2)")]
    WeightOutOfRange(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Question distribution on `Q x Q`, row-major.
///
/// Library constructors keep exact rationals alongside the floats; values
/// read from decimal files are float-only.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    n: usize,
    probs: Vec<f64>,
    exact: Option<Vec<Rational>>,
}

impl Distribution {
    pub fn from_exact(n: usize, entries: Vec<Rational>) -> Result<Self, GameError> {
        if entries.len() != n * n {
            return Err(GameError::Shape(format!(
                "distribution has {} entries, expected {}",
                entries.len(),
                n * n
            )));
        }
        let probs = entries.iter().map(rational::to_f64).collect();
        Ok(Distribution {
            n,
            probs,
            exact: Some(entries),
        })
    }

    pub fn from_floats(n: usize, entries: Vec<f64>) -> Result<Self, GameError> {
        if entries.len() != n * n {
            return Err(GameError::Shape(format!(
                "distribution has {} entries, expected {}",
                entries.len(),
                n * n
            )));
        }
        if entries.iter().any(|p| !p.is_finite()) {
            return Err(GameError::Shape(
                "distribution has non-finite entries".into(),
            ));
        }
        Ok(Distribution {
            n,
            probs: entries,
            exact: None,
        })
    }

    pub fn uniform(n: usize) -> Self {
        let p = Rational::new(1, (n * n) as i64);
        Self::from_exact(n, vec![p; n * n]).expect("square")
    }

    /// `pi_d(i, j) = delta_ij / (2n) + 1 / (2 n^2)`.
    pub fn diagonally_weighted(n: usize) -> Self {
        let n_i = n as i64;
        let off = Rational::new(1, 2 * n_i * n_i);
        let diag = Rational::new(1, 2 * n_i) + off;
        let entries = (0..n * n)
            .map(|k| if k / n == k % n { diag } else { off })
            .collect();
        Self::from_exact(n, entries).expect("square")
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, q: usize, q2: usize) -> f64 {
        self.probs[q * self.n + q2]
    }

    pub fn exact(&self, q: usize, q2: usize) -> Option<Rational> {
        self.exact.as_ref().map(|e| e[q * self.n + q2])
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn exact_entries(&self) -> Option<&[Rational]> {
        self.exact.as_deref()
    }

    pub fn entries(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn exact_total(&self) -> Option<Rational> {
        self.exact.as_ref().map(rational::sum)
    }

    pub fn row_sum(&self, q: usize) -> f64 {
        (0..self.n).map(|q2| self.get(q, q2)).sum()
    }

    pub fn col_sum(&self, q: usize) -> f64 {
        (0..self.n).map(|q2| self.get(q2, q)).sum()
    }

    /// Total diagonal mass `sum_q pi(q, q)`.
    pub fn diagonal_mass(&self) -> f64 {
        (0..self.n).map(|q| self.get(q, q)).sum()
    }

    pub fn exact_diagonal_mass(&self) -> Option<Rational> {
        let e = self.exact.as_ref()?;
        Some((0..self.n).fold(Rational::zero(), |acc, q| acc + e[q * self.n + q]))
    }

    /// Integer weights `w` and common denominator `L` with `pi = w / L`,
    /// when the distribution is exact.
    pub fn integer_weights(&self) -> Option<(Vec<i128>, i128)> {
        let e = self.exact.as_ref()?;
        let mut lcm: i128 = 1;
        for r in e {
            let d = *r.denom() as i128;
            lcm = lcm / gcd(lcm, d) * d;
        }
        let weights = e
            .iter()
            .map(|r| *r.numer() as i128 * (lcm / *r.denom() as i128))
            .collect();
        Some((weights, lcm))
    }
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.abs()
}

/// Dense bit table for `V(q, q'; a, a')`.
#[derive(Clone, PartialEq, Eq)]
pub struct Predicate {
    questions: usize,
    answers: usize,
    bits: BitVec<u64, Lsb0>,
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Predicate(|Q|={}, |A|={}, winning={})",
            self.questions,
            self.answers,
            self.bits.count_ones()
        )
    }
}

impl Predicate {
    pub fn all_winning(questions: usize, answers: usize) -> Self {
        let len = questions * questions * answers * answers;
        Predicate {
            questions,
            answers,
            bits: bitvec![u64, Lsb0; 1; len],
        }
    }

    pub fn from_fn(
        questions: usize,
        answers: usize,
        f: impl Fn(usize, usize, usize, usize) -> bool,
    ) -> Self {
        let mut p = Self::all_winning(questions, answers);
        for q in 0..questions {
            for q2 in 0..questions {
                for a in 0..answers {
                    for a2 in 0..answers {
                        p.set(q, q2, a, a2, f(q, q2, a, a2));
                    }
                }
            }
        }
        p
    }

    #[inline]
    fn index(&self, q: usize, q2: usize, a: usize, a2: usize) -> usize {
        ((q * self.questions + q2) * self.answers + a) * self.answers + a2
    }

    #[inline]
    pub fn get(&self, q: usize, q2: usize, a: usize, a2: usize) -> bool {
        self.bits[self.index(q, q2, a, a2)]
    }

    pub fn set(&mut self, q: usize, q2: usize, a: usize, a2: usize, value: bool) {
        let i = self.index(q, q2, a, a2);
        self.bits.set(i, value);
    }

    pub fn questions(&self) -> usize {
        self.questions
    }

    pub fn answers(&self) -> usize {
        self.answers
    }

    /// Every `(q, q', a, a')` with `V = 0`, in lexicographic order.
    pub fn losing_tuples(&self) -> Vec<[usize; 4]> {
        let (nq, na) = (self.questions, self.answers);
        let mut out = Vec::new();
        for q in 0..nq {
            for q2 in 0..nq {
                for a in 0..na {
                    for a2 in 0..na {
                        if !self.get(q, q2, a, a2) {
                            out.push([q, q2, a, a2]);
                        }
                    }
                }
            }
        }
        out
    }
}

/// A (not necessarily valid) synchronous game. Use [`validate_game`] to
/// check normalization and synchronicity.
#[derive(Debug, Clone, PartialEq)]
pub struct SynchronousGame {
    pub questions: Vec<String>,
    pub answers: Vec<String>,
    pub distribution: Distribution,
    pub predicate: Predicate,
}

fn index_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

impl SynchronousGame {
    pub fn new(
        questions: Vec<String>,
        answers: Vec<String>,
        distribution: Distribution,
        predicate: Predicate,
    ) -> Result<Self, GameError> {
        if questions.is_empty() || answers.is_empty() {
            return Err(GameError::Shape(
                "question and answer sets must be non-empty".into(),
            ));
        }
        if distribution.size() != questions.len() {
            return Err(GameError::Shape(format!(
                "distribution is {0}x{0} but there are {1} questions",
                distribution.size(),
                questions.len()
            )));
        }
        if predicate.questions() != questions.len() || predicate.answers() != answers.len() {
            return Err(GameError::Shape(
                "predicate shape does not match label sets".into(),
            ));
        }
        Ok(SynchronousGame {
            questions,
            answers,
            distribution,
            predicate,
        })
    }

    /// Game with index labels `0..n` built from a predicate closure.
    pub fn from_fn(
        n_questions: usize,
        n_answers: usize,
        distribution: Distribution,
        f: impl Fn(usize, usize, usize, usize) -> bool,
    ) -> Result<Self, GameError> {
        Self::new(
            index_labels(n_questions),
            index_labels(n_answers),
            distribution,
            Predicate::from_fn(n_questions, n_answers, f),
        )
    }

    /// `V(q, q'; a, a') = [a = a']` with the uniform distribution.
    pub fn agreement(n_questions: usize, n_answers: usize) -> Self {
        Self::from_fn(
            n_questions,
            n_answers,
            Distribution::uniform(n_questions),
            |_, _, a, a2| a == a2,
        )
        .expect("well formed")
    }

    /// Graph coloring game on `n` vertices with the given edge list:
    /// equal answers on equal questions, distinct colors across edges,
    /// anything on non-adjacent distinct vertices. Uniform distribution.
    pub fn coloring(n: usize, edges: &[(usize, usize)], colors: usize) -> Self {
        let mut adj = vec![false; n * n];
        for &(u, v) in edges {
            adj[u * n + v] = true;
            adj[v * n + u] = true;
        }
        Self::from_fn(n, colors, Distribution::uniform(n), |q, q2, a, a2| {
            if q == q2 {
                a == a2
            } else if adj[q * n + q2] {
                a != a2
            } else {
                true
            }
        })
        .expect("well formed")
    }

    pub fn n_questions(&self) -> usize {
        self.questions.len()
    }

    pub fn n_answers(&self) -> usize {
        self.answers.len()
    }

    #[inline]
    pub fn wins(&self, q: usize, q2: usize, a: usize, a2: usize) -> bool {
        self.predicate.get(q, q2, a, a2)
    }

    pub fn with_distribution(&self, distribution: Distribution) -> Result<Self, GameError> {
        Self::new(
            self.questions.clone(),
            self.answers.clone(),
            distribution,
            self.predicate.clone(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValidationIssue {
    Normalization {
        sum: f64,
    },
    NegativeProbability {
        q: usize,
        q2: usize,
        value: f64,
    },
    /// `V(q, q; a, a')` disagrees with `[a = a']`.
    Synchronicity {
        q: usize,
        a: usize,
        a2: usize,
        value: bool,
    },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::Normalization { sum } => {
                write!(f, "distribution sums to {sum}, expected 1")
            }
            ValidationIssue::NegativeProbability { q, q2, value } => {
                write!(f, "pi({q},{q2}) = {value} is negative")
            }
            ValidationIssue::Synchronicity { q, a, a2, value } => write!(
                f,
                "synchronicity violated at ({q},{q},{a},{a2}): V = {}",
                u8::from(*value)
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return writeln!(f, "valid");
        }
        for issue in &self.issues {
            writeln!(f, "{issue}")?;
        }
        Ok(())
    }
}

/// Reports every violated game invariant; an empty report means valid.
pub fn validate_game(g: &SynchronousGame) -> ValidationReport {
    let mut issues = Vec::new();
    let n = g.n_questions();
    let normalized = match g.distribution.exact_total() {
        Some(total) => total.is_one(),
        None => (g.distribution.total() - 1.0).abs() <= 1e-12,
    };
    if !normalized {
        issues.push(ValidationIssue::Normalization {
            sum: g.distribution.total(),
        });
    }
    for q in 0..n {
        for q2 in 0..n {
            let value = g.distribution.get(q, q2);
            if value < 0.0 {
                issues.push(ValidationIssue::NegativeProbability { q, q2, value });
            }
        }
    }
    for q in 0..n {
        for a in 0..g.n_answers() {
            for a2 in 0..g.n_answers() {
                let value = g.wins(q, q, a, a2);
                if value != (a == a2) {
                    issues.push(ValidationIssue::Synchronicity { q, a, a2, value });
                }
            }
        }
    }
    ValidationReport { issues }
}

/// A pair of deterministic answer functions `f, f' : Q -> A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicStrategyPair {
    pub f: Vec<usize>,
    pub f_prime: Vec<usize>,
}

impl DeterministicStrategyPair {
    pub fn synchronous(f: Vec<usize>) -> Self {
        DeterministicStrategyPair {
            f_prime: f.clone(),
            f,
        }
    }

    pub fn is_synchronous(&self) -> bool {
        self.f == self.f_prime
    }
}

/// `sum_{q,q'} pi(q,q') V(q,q'; f(q), f'(q'))`.
pub fn deterministic_value(g: &SynchronousGame, pair: &DeterministicStrategyPair) -> f64 {
    let n = g.n_questions();
    let mut total = 0.0;
    for q in 0..n {
        for q2 in 0..n {
            if g.wins(q, q2, pair.f[q], pair.f_prime[q2]) {
                total += g.distribution.get(q, q2);
            }
        }
    }
    total
}

pub fn deterministic_value_exact(
    g: &SynchronousGame,
    pair: &DeterministicStrategyPair,
) -> Option<Rational> {
    let n = g.n_questions();
    let mut total = Rational::zero();
    for q in 0..n {
        for q2 in 0..n {
            if g.wins(q, q2, pair.f[q], pair.f_prime[q2]) {
                total += g.distribution.exact(q, q2)?;
            }
        }
    }
    Some(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalOptions {
    pub budget: u128,
    /// Restrict to `f = f'`.
    pub synchronous_only: bool,
    pub execution: Execution,
}

impl Default for ClassicalOptions {
    fn default() -> Self {
        ClassicalOptions {
            budget: DEFAULT_ENUMERATION_BUDGET,
            synchronous_only: false,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalValue {
    pub value: f64,
    /// Present when the distribution is exact.
    pub exact: Option<Rational>,
    /// Lexicographically smallest optimal pair.
    pub witness: DeterministicStrategyPair,
}

/// Predicate evaluations needed by [`classical_value`] (saturating).
pub fn enumeration_cost(g: &SynchronousGame, synchronous_only: bool) -> u128 {
    let nq = g.n_questions() as u32;
    let na = g.n_answers() as u128;
    let functions = na.checked_pow(nq).unwrap_or(u128::MAX);
    let per = if synchronous_only {
        (nq as u128) * (nq as u128)
    } else {
        (nq as u128) * (nq as u128) * na
    };
    functions.saturating_mul(per)
}

/// Scores accumulate as exact integers (scaled weights) or as floats.
trait Score: Copy + PartialOrd + Zero + Send + Sync {}
impl Score for i128 {}
impl Score for f64 {}

fn decode(mut idx: u128, nq: usize, na: usize, out: &mut [usize]) {
    for q in (0..nq).rev() {
        out[q] = (idx % na as u128) as usize;
        idx /= na as u128;
    }
}

/// Best `f'` for a fixed `f`: independent per `q'`, smallest answer on ties.
fn best_response<S: Score>(g: &SynchronousGame, w: &[S], f: &[usize], f_prime: &mut [usize]) -> S {
    let (nq, na) = (g.n_questions(), g.n_answers());
    let mut total = S::zero();
    for q2 in 0..nq {
        let mut best = S::zero();
        let mut best_a = 0;
        for a2 in 0..na {
            let mut s = S::zero();
            for (q, &fq) in f.iter().enumerate() {
                if g.wins(q, q2, fq, a2) {
                    s = s + w[q * nq + q2];
                }
            }
            if a2 == 0 || s > best {
                best = s;
                best_a = a2;
            }
        }
        f_prime[q2] = best_a;
        total = total + best;
    }
    total
}

fn synchronous_score<S: Score>(g: &SynchronousGame, w: &[S], f: &[usize]) -> S {
    let nq = g.n_questions();
    let mut total = S::zero();
    for q in 0..nq {
        for q2 in 0..nq {
            if g.wins(q, q2, f[q], f[q2]) {
                total = total + w[q * nq + q2];
            }
        }
    }
    total
}

fn search<S: Score>(g: &SynchronousGame, w: &[S], opts: &ClassicalOptions) -> (S, u128) {
    let (nq, na) = (g.n_questions(), g.n_answers());
    let total = (na as u128).pow(nq as u32);
    let chunks = total.clamp(1, 256) as usize;
    let per_chunk = total.div_ceil(chunks as u128);
    let best_per_chunk = par::map_indices(opts.execution, chunks, |c| {
        let start = c as u128 * per_chunk;
        let end = (start + per_chunk).min(total);
        let mut f = vec![0usize; nq];
        let mut fp = vec![0usize; nq];
        let mut best: Option<(S, u128)> = None;
        for idx in start..end {
            decode(idx, nq, na, &mut f);
            let s = if opts.synchronous_only {
                synchronous_score(g, w, &f)
            } else {
                best_response(g, w, &f, &mut fp)
            };
            if best.is_none_or(|(b, _)| s > b) {
                best = Some((s, idx));
            }
        }
        best
    });
    // Chunks are in index order, so a strict comparison keeps the smallest index on ties.
    let mut best: Option<(S, u128)> = None;
    for (s, idx) in best_per_chunk.into_iter().flatten() {
        if best.is_none_or(|(b, _)| s > b) {
            best = Some((s, idx));
        }
    }
    best.expect("at least one strategy")
}

/// Exact classical value by enumeration over deterministic pairs.
///
/// For each `f` (in lexicographic order) the best `f'` decomposes per
/// question, so the search visits `|A|^|Q|` functions.
pub fn classical_value(
    g: &SynchronousGame,
    opts: &ClassicalOptions,
) -> Result<ClassicalValue, GameError> {
    let required = enumeration_cost(g, opts.synchronous_only);
    if required > opts.budget {
        return Err(GameError::BudgetExceeded {
            required,
            budget: opts.budget,
        });
    }
    let (nq, na) = (g.n_questions(), g.n_answers());
    let best_idx = match g.distribution.integer_weights() {
        Some((w, _)) => search(g, &w, opts).1,
        None => search(g, g.distribution.entries(), opts).1,
    };
    let mut f = vec![0usize; nq];
    decode(best_idx, nq, na, &mut f);
    let witness = if opts.synchronous_only {
        DeterministicStrategyPair::synchronous(f)
    } else {
        let mut fp = vec![0usize; nq];
        best_response(g, g.distribution.entries(), &f, &mut fp);
        // Recompute the response with exact weights when available so the
        // witness is the exact argmax.
        if let Some((w, _)) = g.distribution.integer_weights() {
            best_response(g, &w, &f, &mut fp);
        }
        DeterministicStrategyPair { f, f_prime: fp }
    };
    Ok(ClassicalValue {
        value: deterministic_value(g, &witness),
        exact: deterministic_value_exact(g, &witness),
        witness,
    })
}

/// Synchronous quantum strategy: one PVM `{P_q^a}_a` per question, all in
/// dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncQuantumStrategy {
    pub dim: usize,
    pub pvms: Vec<Vec<ComplexMatrix>>,
}

impl SyncQuantumStrategy {
    /// Checks that the families are non-empty and share one dimension.
    pub fn new(pvms: Vec<Vec<ComplexMatrix>>) -> Result<Self, GameError> {
        let dim = pvms
            .first()
            .and_then(|f| f.first())
            .map(ComplexMatrix::dim)
            .ok_or_else(|| GameError::LabelMismatch("empty strategy".into()))?;
        for (q, family) in pvms.iter().enumerate() {
            if family.is_empty() {
                return Err(GameError::LabelMismatch(format!(
                    "question {q} has no operators"
                )));
            }
            for p in family {
                if p.dim() != dim {
                    return Err(AlgebraError::DimensionMismatch {
                        expected: dim,
                        found: p.dim(),
                    }
                    .into());
                }
            }
        }
        Ok(SyncQuantumStrategy { dim, pvms })
    }

    /// One-dimensional strategy answering `f(q)` with certainty.
    pub fn deterministic(f: &[usize], n_answers: usize) -> Self {
        let pvms = f
            .iter()
            .map(|&fq| {
                (0..n_answers)
                    .map(|a| ComplexMatrix::scalar(1, if a == fq { 1.0 } else { 0.0 }))
                    .collect()
            })
            .collect();
        SyncQuantumStrategy { dim: 1, pvms }
    }

    pub fn n_questions(&self) -> usize {
        self.pvms.len()
    }

    /// Conjugates every operator by `u`.
    pub fn conjugated(&self, u: &ComplexMatrix) -> Self {
        let pvms = self
            .pvms
            .iter()
            .map(|fam| {
                fam.iter()
                    .map(|p| algebra::conjugate(u, p).hermitian_part())
                    .collect()
            })
            .collect();
        SyncQuantumStrategy {
            dim: self.dim,
            pvms,
        }
    }

    /// Checks shape against `g` and the PVM property of every family.
    pub fn validate_for(&self, g: &SynchronousGame, tol: Tolerance) -> Result<(), GameError> {
        if self.pvms.len() != g.n_questions() {
            return Err(GameError::LabelMismatch(format!(
                "strategy has {} questions, game has {}",
                self.pvms.len(),
                g.n_questions()
            )));
        }
        for (q, family) in self.pvms.iter().enumerate() {
            if family.len() != g.n_answers() {
                return Err(GameError::LabelMismatch(format!(
                    "question {q} has {} operators, game has {} answers",
                    family.len(),
                    g.n_answers()
                )));
            }
            if !algebra::is_pvm(family, tol)? {
                return Err(GameError::NotPvm {
                    question: q,
                    residual: algebra::identity_residual(family)?,
                });
            }
        }
        Ok(())
    }
}

/// Winning probability `sum pi(q,q') sum_{V=1} tau(P_q^a P_q'^a')`.
pub fn eval_sync_strategy(
    g: &SynchronousGame,
    s: &SyncQuantumStrategy,
    tol: Tolerance,
) -> Result<f64, GameError> {
    s.validate_for(g, tol)?;
    Ok(eval_unchecked(g, s, Execution::default()))
}

pub(crate) fn eval_unchecked(g: &SynchronousGame, s: &SyncQuantumStrategy, exec: Execution) -> f64 {
    let (nq, na) = (g.n_questions(), g.n_answers());
    let rows = par::map_indices(exec, nq, |q| {
        let mut row = 0.0;
        for q2 in 0..nq {
            let pi = g.distribution.get(q, q2);
            if pi == 0.0 {
                continue;
            }
            let mut acc = 0.0;
            for a in 0..na {
                for a2 in 0..na {
                    if g.wins(q, q2, a, a2) {
                        acc += algebra::trace_of_product(&s.pvms[q][a], &s.pvms[q2][a2]).re;
                    }
                }
            }
            row += pi * acc;
        }
        row
    });
    rows.iter().sum()
}

/// `sum_q pi(q,q) sum_{a != a'} tau(P_q^a P_q^a')`; zero for PVM strategies.
pub fn diagonal_disagreement(g: &SynchronousGame, s: &SyncQuantumStrategy) -> f64 {
    let mut total = 0.0;
    for q in 0..g.n_questions() {
        let fam = &s.pvms[q];
        let mut acc = 0.0;
        for a in 0..fam.len() {
            for a2 in 0..fam.len() {
                if a != a2 {
                    acc += algebra::trace_of_product(&fam[a], &fam[a2]).re;
                }
            }
        }
        total += g.distribution.get(q, q) * acc;
    }
    total
}

/// `C`-diagonally weighted version: `pi'(x,y) = (C/2)(row_x + col_x) delta_xy + (1-C) pi(x,y)`.
pub fn c_diagonal_weighting(
    g: &SynchronousGame,
    c: Rational,
) -> Result<SynchronousGame, GameError> {
    if c < Rational::zero() || c >= Rational::new(1, 2) {
        return Err(GameError::WeightOutOfRange(rational::format_rational(&c)));
    }
    let n = g.n_questions();
    let dist = match g.distribution.exact_entries() {
        Some(e) => {
            let half_c = c / 2;
            let mut out = Vec::with_capacity(n * n);
            for x in 0..n {
                for y in 0..n {
                    let mut v = (Rational::one() - c) * e[x * n + y];
                    if x == y {
                        let marg = (0..n)
                            .fold(Rational::zero(), |acc, z| acc + e[x * n + z] + e[z * n + x]);
                        v += half_c * marg;
                    }
                    out.push(v);
                }
            }
            Distribution::from_exact(n, out)?
        }
        None => {
            let cf = rational::to_f64(&c);
            let d = &g.distribution;
            let mut out = Vec::with_capacity(n * n);
            for x in 0..n {
                for y in 0..n {
                    let mut v = (1.0 - cf) * d.get(x, y);
                    if x == y {
                        v += cf / 2.0 * (d.row_sum(x) + d.col_sum(x));
                    }
                    out.push(v);
                }
            }
            Distribution::from_floats(n, out)?
        }
    };
    g.with_distribution(dist)
}

/// Largest `C` with `pi(q,q) >= C max(row_q, col_q)` for every `q`.
pub fn diagonal_dominance(pi: &Distribution) -> f64 {
    let mut best = f64::INFINITY;
    for q in 0..pi.size() {
        let diag = pi.get(q, q);
        if diag == 0.0 {
            return 0.0;
        }
        let m = pi.row_sum(q).max(pi.col_sum(q));
        best = best.min(diag / m);
    }
    if best.is_finite() {
        best
    } else {
        0.0
    }
}

pub fn diagonal_dominance_exact(pi: &Distribution) -> Option<Rational> {
    let e = pi.exact_entries()?;
    let n = pi.size();
    let mut best: Option<Rational> = None;
    for q in 0..n {
        let diag = e[q * n + q];
        if diag.is_zero() {
            return Some(Rational::zero());
        }
        let row = (0..n).fold(Rational::zero(), |a, k| a + e[q * n + k]);
        let col = (0..n).fold(Rational::zero(), |a, k| a + e[k * n + q]);
        let ratio = diag / row.max(col);
        best = Some(best.map_or(ratio, |b| b.min(ratio)));
    }
    Some(best.unwrap_or_else(Rational::zero))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle_two_coloring() -> SynchronousGame {
        SynchronousGame::coloring(3, &[(0, 1), (1, 2), (0, 2)], 2)
    }

    #[test]
    fn agreement_game_is_valid() {
        assert!(validate_game(&SynchronousGame::agreement(2, 2)).is_valid());
    }

    #[test]
    fn flipped_synchronicity_cell_is_reported() {
        let mut g = SynchronousGame::agreement(2, 2);
        g.predicate.set(0, 0, 0, 1, true);
        let report = validate_game(&g);
        assert_eq!(
            report.issues,
            vec![ValidationIssue::Synchronicity {
                q: 0,
                a: 0,
                a2: 1,
                value: true
            }]
        );
    }

    #[test]
    fn scaled_distribution_is_reported() {
        let g = SynchronousGame::agreement(2, 2);
        let half: Vec<Rational> = g
            .distribution
            .exact_entries()
            .unwrap()
            .iter()
            .map(|r| r / 2)
            .collect();
        let g = g
            .with_distribution(Distribution::from_exact(2, half).unwrap())
            .unwrap();
        let report = validate_game(&g);
        assert_eq!(
            report.issues,
            vec![ValidationIssue::Normalization { sum: 0.5 }]
        );
    }

    #[test]
    fn classical_value_of_agreement_is_one() {
        let v = classical_value(
            &SynchronousGame::agreement(2, 2),
            &ClassicalOptions::default(),
        )
        .unwrap();
        assert_eq!(v.exact, Some(Rational::one()));
        assert_eq!(v.witness.f, vec![0, 0]);
        assert_eq!(v.witness.f_prime, vec![0, 0]);
    }

    #[test]
    fn classical_value_of_triangle_two_coloring() {
        // Frozen from a brute force over all 64 pairs in the integration tests.
        let v = classical_value(&triangle_two_coloring(), &ClassicalOptions::default()).unwrap();
        assert_eq!(v.exact, Some(Rational::new(7, 9)));
        assert!((v.value - 7.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn budget_is_enforced() {
        let opts = ClassicalOptions {
            budget: 10,
            ..Default::default()
        };
        match classical_value(&triangle_two_coloring(), &opts) {
            Err(GameError::BudgetExceeded { required, budget }) => {
                assert_eq!(required, 8 * 9 * 2);
                assert_eq!(budget, 10);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn deterministic_quantum_strategy_matches_classical_formula() {
        let g = triangle_two_coloring();
        let f = vec![0, 1, 1];
        let s = SyncQuantumStrategy::deterministic(&f, 2);
        let quantum = eval_sync_strategy(&g, &s, Tolerance::default()).unwrap();
        let classical = deterministic_value(&g, &DeterministicStrategyPair::synchronous(f));
        assert!((quantum - classical).abs() < 1e-15);
    }

    #[test]
    fn perfect_agreement_strategy() {
        let s = SyncQuantumStrategy::deterministic(&[0, 0], 2);
        let v = eval_sync_strategy(&SynchronousGame::agreement(2, 2), &s, Tolerance::default())
            .unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eval_rejects_non_pvm() {
        let g = SynchronousGame::agreement(2, 2);
        let bad = vec![
            vec![ComplexMatrix::scalar(1, 1.0), ComplexMatrix::scalar(1, 1.0)],
            vec![ComplexMatrix::scalar(1, 1.0), ComplexMatrix::scalar(1, 0.0)],
        ];
        let s = SyncQuantumStrategy::new(bad).unwrap();
        assert!(matches!(
            eval_sync_strategy(&g, &s, Tolerance::default()),
            Err(GameError::NotPvm { question: 0, .. })
        ));
        let short = SyncQuantumStrategy::deterministic(&[0], 2);
        assert!(matches!(
            eval_sync_strategy(&g, &short, Tolerance::default()),
            Err(GameError::LabelMismatch(_))
        ));
    }

    #[test]
    fn weighting_with_zero_is_identity() {
        let g = triangle_two_coloring();
        let w = c_diagonal_weighting(&g, Rational::zero()).unwrap();
        assert_eq!(w.distribution, g.distribution);
    }

    #[test]
    fn weighting_of_uniform_distribution() {
        let g = SynchronousGame::agreement(4, 2);
        let c = Rational::new(1, 3);
        let w = c_diagonal_weighting(&g, c).unwrap();
        let t = Rational::from_integer(4);
        let expected_diag = c / t + (Rational::one() - c) / (t * t);
        for q in 0..4 {
            assert_eq!(w.distribution.exact(q, q), Some(expected_diag));
        }
        assert_eq!(w.distribution.exact_total(), Some(Rational::one()));
        assert!(diagonal_dominance_exact(&w.distribution).unwrap() >= c / 2);
    }

    #[test]
    fn weighting_rejects_out_of_range() {
        let g = SynchronousGame::agreement(2, 2);
        assert!(c_diagonal_weighting(&g, Rational::new(1, 2)).is_err());
        assert!(c_diagonal_weighting(&g, Rational::new(-1, 4)).is_err());
    }

    #[test]
    fn dominance_examples() {
        for t in 1..6 {
            assert_eq!(
                diagonal_dominance_exact(&Distribution::uniform(t)),
                Some(Rational::new(1, t as i64))
            );
            let expected = Rational::new(1, 2) + Rational::new(1, 2 * t as i64);
            assert_eq!(
                diagonal_dominance_exact(&Distribution::diagonally_weighted(t)),
                Some(expected)
            );
            assert!((diagonal_dominance(&Distribution::uniform(t)) - 1.0 / t as f64).abs() < 1e-15);
        }
        let zero_diag = Distribution::from_floats(2, vec![0.0, 0.5, 0.5, 0.0]).unwrap();
        assert_eq!(diagonal_dominance(&zero_diag), 0.0);
    }

    #[test]
    fn float_distribution_weighting_sums_to_one() {
        let d = Distribution::from_floats(2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let g = SynchronousGame::agreement(2, 2)
            .with_distribution(d)
            .unwrap();
        let w = c_diagonal_weighting(&g, Rational::new(1, 4)).unwrap();
        assert!((w.distribution.total() - 1.0).abs() < 1e-12);
        assert!(diagonal_dominance(&w.distribution) >= 0.125 - 1e-12);
    }
}
