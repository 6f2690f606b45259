//! `t`-independent set games `(X, t)`, the reduction verifier that decides
//! their predicate from oracle access to a synchronous game, and the
//! losing-probability formula for synchronous strategies under the
//! diagonally weighted distribution.

use num_traits::Zero;
use thiserror::Error;

use crate::algebra::{self, AlgebraError, ComplexMatrix, Tolerance};
use crate::games::{Distribution, GameError, Predicate, SyncQuantumStrategy, SynchronousGame};
use crate::graph::{build_game_graph, GameGraph, GraphError, Vertex};
use crate::par::{self, Execution};
use crate::rational::{self, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndepSetError {
    #[error("t must be at least 1")]
    ZeroT,
    #[error("question index {index} outside [0, {t})")]
    QuestionOutOfRange { index: usize, t: usize },
    #[error("vertex ({0},{1}) outside Q x A")]
    VertexOutOfRange(usize, usize),
    #[error("the loss formula is stated for the diagonally weighted distribution; evaluate uniform games through the general game path")]
    UniformWeighting,
    #[error("strategy does not match the game: {0}")]
    Mismatch(String),
    #[error("family for index {index} is not a PVM (||sum - 1||_2 = {residual:.3e})")]
    NotPvm { index: usize, residual: f64 },
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    /// `pi_u(i, j) = 1 / t^2`.
    Uniform,
    /// `pi_d(i, j) = delta_ij / (2t) + 1 / (2t^2)`.
    Diagonal,
}

impl Weighting {
    pub fn name(self) -> &'static str {
        match self {
            Weighting::Uniform => "uniform",
            Weighting::Diagonal => "diagonal",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndependentSetGame {
    pub graph: GameGraph,
    pub t: usize,
    pub weighting: Weighting,
    /// Synchronous game the graph was built from, when known. The loss
    /// evaluator reads adjacency from its predicate instead of the graph.
    pub source: Option<SynchronousGame>,
}

pub fn make_indep_set_game(
    graph: GameGraph,
    t: usize,
    weighting: Weighting,
) -> Result<IndependentSetGame, IndepSetError> {
    if t == 0 {
        return Err(IndepSetError::ZeroT);
    }
    Ok(IndependentSetGame {
        graph,
        t,
        weighting,
        source: None,
    })
}

/// `G -> (X(G), |Q|)` with the diagonally weighted distribution.
pub fn reduce(g: &SynchronousGame) -> Result<IndependentSetGame, IndepSetError> {
    reduce_with(g, Weighting::Diagonal)
}

pub fn reduce_with(
    g: &SynchronousGame,
    weighting: Weighting,
) -> Result<IndependentSetGame, IndepSetError> {
    let graph = build_game_graph(g)?;
    let mut game = make_indep_set_game(graph, g.n_questions(), weighting)?;
    game.source = Some(g.clone());
    Ok(game)
}

impl IndependentSetGame {
    pub fn n_vertices(&self) -> usize {
        self.graph.len()
    }

    pub fn distribution(&self) -> Distribution {
        match self.weighting {
            Weighting::Uniform => Distribution::uniform(self.t),
            Weighting::Diagonal => Distribution::diagonally_weighted(self.t),
        }
    }

    /// `V(i, j; u, v)` on vertex indices.
    pub fn predicate(&self, i: usize, j: usize, u: usize, v: usize) -> bool {
        if i == j {
            u == v
        } else {
            u != v && !self.graph.adjacent(u, v)
        }
    }

    /// The same game as a plain nonlocal game with questions `[t]` and
    /// answers the vertices, for the general evaluation path.
    pub fn as_nonlocal_game(&self) -> SynchronousGame {
        let n = self.n_vertices();
        let predicate = Predicate::from_fn(self.t, n, |i, j, u, v| self.predicate(i, j, u, v));
        SynchronousGame::new(
            (0..self.t).map(|i| i.to_string()).collect(),
            self.graph
                .vertices()
                .iter()
                .map(|&(q, a)| format!("{q},{a}"))
                .collect(),
            self.distribution(),
            predicate,
        )
        .expect("consistent shapes")
    }
}

/// Decides the reduced game's predicate from the source predicate alone:
/// accept iff `i = j, q = q', a = a'` or `i != j, q != q'` and both
/// `V(q,q';a,a')` and `V(q',q;a',a)` hold.
pub fn reduction_verifier(
    g: &SynchronousGame,
    i: usize,
    j: usize,
    u: Vertex,
    v: Vertex,
) -> Result<bool, IndepSetError> {
    let t = g.n_questions();
    for index in [i, j] {
        if index >= t {
            return Err(IndepSetError::QuestionOutOfRange { index, t });
        }
    }
    for w in [u, v] {
        if w.0 >= g.n_questions() || w.1 >= g.n_answers() {
            return Err(IndepSetError::VertexOutOfRange(w.0, w.1));
        }
    }
    let ((q, a), (q2, a2)) = (u, v);
    if i == j {
        return Ok(q == q2 && a == a2);
    }
    if q == q2 {
        return Ok(false);
    }
    Ok(g.wins(q, q2, a, a2) && g.wins(q2, q, a2, a))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub tuples_checked: usize,
    /// First `(i, j, u, v)` where the verifier and the predicate disagree.
    pub first_mismatch: Option<(usize, usize, Vertex, Vertex)>,
}

impl EquivalenceReport {
    pub fn equivalent(&self) -> bool {
        self.first_mismatch.is_none()
    }
}

/// Compares [`reduction_verifier`] on `g` with the predicate of `game` on
/// every `(i, j, u, v)`.
pub fn verifier_equivalence(
    g: &SynchronousGame,
    game: &IndependentSetGame,
) -> Result<EquivalenceReport, IndepSetError> {
    if game.t != g.n_questions() {
        return Err(IndepSetError::Mismatch(format!(
            "game has t = {}, source has {} questions",
            game.t,
            g.n_questions()
        )));
    }
    let expected: Vec<Vertex> = (0..g.n_questions())
        .flat_map(|q| (0..g.n_answers()).map(move |a| (q, a)))
        .collect();
    if game.graph.vertices() != expected.as_slice() {
        return Err(IndepSetError::Mismatch(
            "graph vertices are not Q x A".into(),
        ));
    }
    let n = game.n_vertices();
    let mut checked = 0;
    for i in 0..game.t {
        for j in 0..game.t {
            for u in 0..n {
                for v in 0..n {
                    checked += 1;
                    let (uu, vv) = (game.graph.vertex(u), game.graph.vertex(v));
                    if reduction_verifier(g, i, j, uu, vv)? != game.predicate(i, j, u, v) {
                        return Ok(EquivalenceReport {
                            tuples_checked: checked,
                            first_mismatch: Some((i, j, uu, vv)),
                        });
                    }
                }
            }
        }
    }
    Ok(EquivalenceReport {
        tuples_checked: checked,
        first_mismatch: None,
    })
}

/// Synchronous strategy for `(X, t)`: for each `i` a PVM indexed by the
/// graph's vertices (in graph order).
#[derive(Debug, Clone, PartialEq)]
pub struct IndepStrategy {
    pub dim: usize,
    pub families: Vec<Vec<ComplexMatrix>>,
}

impl IndepStrategy {
    pub fn new(families: Vec<Vec<ComplexMatrix>>) -> Result<Self, IndepSetError> {
        let dim = families
            .first()
            .and_then(|f| f.first())
            .map(ComplexMatrix::dim)
            .ok_or_else(|| IndepSetError::Mismatch("empty strategy".into()))?;
        let width = families[0].len();
        for fam in &families {
            if fam.len() != width {
                return Err(IndepSetError::Mismatch(
                    "families have different lengths".into(),
                ));
            }
            if let Some(p) = fam.iter().find(|p| p.dim() != dim) {
                return Err(AlgebraError::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                }
                .into());
            }
        }
        Ok(IndepStrategy { dim, families })
    }

    /// One-dimensional strategy where index `i` answers vertex `answers[i]`.
    pub fn deterministic(answers: &[usize], n_vertices: usize) -> Self {
        let families = answers
            .iter()
            .map(|&u| {
                (0..n_vertices)
                    .map(|v| ComplexMatrix::scalar(1, if u == v { 1.0 } else { 0.0 }))
                    .collect()
            })
            .collect();
        IndepStrategy { dim: 1, families }
    }

    pub fn t(&self) -> usize {
        self.families.len()
    }

    /// Answers of a one-dimensional strategy whose entries are exactly 0 or 1.
    pub fn as_deterministic(&self) -> Option<Vec<usize>> {
        if self.dim != 1 {
            return None;
        }
        self.families
            .iter()
            .map(|fam| {
                let mut answer = None;
                for (v, p) in fam.iter().enumerate() {
                    let z = p.get(0, 0);
                    if z.im != 0.0 {
                        return None;
                    }
                    if z.re == 1.0 {
                        if answer.is_some() {
                            return None;
                        }
                        answer = Some(v);
                    } else if z.re != 0.0 {
                        return None;
                    }
                }
                answer
            })
            .collect()
    }

    /// Relabels indices: the new family `k` is the old family `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        IndepStrategy {
            dim: self.dim,
            families: perm.iter().map(|&k| self.families[k].clone()).collect(),
        }
    }

    /// Conjugates family `i` by `unitaries[i]`.
    pub fn conjugated_per_index(&self, unitaries: &[ComplexMatrix]) -> Self {
        let families = self
            .families
            .iter()
            .zip(unitaries)
            .map(|(fam, u)| {
                fam.iter()
                    .map(|p| algebra::conjugate(u, p).hermitian_part())
                    .collect()
            })
            .collect();
        IndepStrategy {
            dim: self.dim,
            families,
        }
    }

    pub fn to_sync_strategy(&self) -> SyncQuantumStrategy {
        SyncQuantumStrategy {
            dim: self.dim,
            pvms: self.families.clone(),
        }
    }

    pub fn validate_for(
        &self,
        game: &IndependentSetGame,
        tol: Tolerance,
    ) -> Result<(), IndepSetError> {
        if self.t() != game.t {
            return Err(IndepSetError::Mismatch(format!(
                "strategy has {} indices, game has t = {}",
                self.t(),
                game.t
            )));
        }
        for (index, fam) in self.families.iter().enumerate() {
            if fam.len() != game.n_vertices() {
                return Err(IndepSetError::Mismatch(format!(
                    "family {index} has {} operators, graph has {} vertices",
                    fam.len(),
                    game.n_vertices()
                )));
            }
            if !algebra::is_pvm(fam, tol)? {
                return Err(IndepSetError::NotPvm {
                    index,
                    residual: algebra::identity_residual(fam)?,
                });
            }
        }
        Ok(())
    }
}

/// Losing probability of a synchronous strategy on `(X, t)` under `pi_d`,
/// split by the kind of losing event.
#[derive(Debug, Clone, PartialEq)]
pub struct LossBreakdown {
    pub loss: f64,
    /// `(1/2t^2) sum_{i != j, v} tau(P_i^v P_j^v)`.
    pub same_vertex: f64,
    /// `(1/2t^2) sum_{i != j, u ~ v} tau(P_i^u P_j^v)`.
    pub adjacent: f64,
    /// `sum_i pi_d(i,i) sum_{u != v} tau(P_i^u P_i^v)`; zero for PVMs.
    pub diagonal: f64,
    /// Exact loss for one-dimensional 0/1 strategies.
    pub exact: Option<Rational>,
}

/// Ordered-pair adjacency: from the source predicate when the game has
/// one, otherwise from the graph.
fn loses_across(game: &IndependentSetGame, u: usize, v: usize) -> bool {
    match &game.source {
        Some(g) => {
            let ((q, a), (q2, a2)) = (game.graph.vertex(u), game.graph.vertex(v));
            !g.wins(q, q2, a, a2) || !g.wins(q2, q, a2, a)
        }
        None => game.graph.adjacent(u, v),
    }
}

pub fn sync_loss_indep(
    game: &IndependentSetGame,
    s: &IndepStrategy,
    tol: Tolerance,
) -> Result<LossBreakdown, IndepSetError> {
    sync_loss_indep_with(game, s, tol, Execution::default())
}

pub fn sync_loss_indep_with(
    game: &IndependentSetGame,
    s: &IndepStrategy,
    tol: Tolerance,
    exec: Execution,
) -> Result<LossBreakdown, IndepSetError> {
    if game.weighting != Weighting::Diagonal {
        return Err(IndepSetError::UniformWeighting);
    }
    s.validate_for(game, tol)?;
    let t = game.t;
    let n = game.n_vertices();
    let nonzero: Vec<Vec<bool>> = s
        .families
        .iter()
        .map(|fam| fam.iter().map(|p| algebra::trace_norm2(p) > 0.0).collect())
        .collect();
    // Per-index partial sums (same_vertex, adjacent, diagonal), reduced in index order.
    let rows = par::map_indices(exec, t, |i| {
        let (mut same, mut adj, mut diag) = (0.0, 0.0, 0.0);
        for u in (0..n).filter(|&u| nonzero[i][u]) {
            let pu = &s.families[i][u];
            for (j, nz) in nonzero.iter().enumerate() {
                for v in (0..n).filter(|&v| nz[v]) {
                    if i == j {
                        if u != v {
                            diag += algebra::trace_of_product(pu, &s.families[j][v]).re;
                        }
                    } else if u == v {
                        same += algebra::trace_of_product(pu, &s.families[j][v]).re;
                    } else if loses_across(game, u, v) {
                        adj += algebra::trace_of_product(pu, &s.families[j][v]).re;
                    }
                }
            }
        }
        (same, adj, diag)
    });
    let tf = t as f64;
    let off = 1.0 / (2.0 * tf * tf);
    let on = 1.0 / (2.0 * tf) + off;
    let same_vertex = off * rows.iter().map(|r| r.0).sum::<f64>();
    let adjacent = off * rows.iter().map(|r| r.1).sum::<f64>();
    let diagonal = on * rows.iter().map(|r| r.2).sum::<f64>();
    let exact = s
        .as_deterministic()
        .map(|answers| exact_deterministic_loss(game, &answers));
    Ok(LossBreakdown {
        loss: same_vertex + adjacent + diagonal,
        same_vertex,
        adjacent,
        diagonal,
        exact,
    })
}

/// Exact `pi_d` loss of the deterministic strategy `i -> answers[i]`.
pub fn exact_deterministic_loss(game: &IndependentSetGame, answers: &[usize]) -> Rational {
    let t = answers.len() as i64;
    let mut collisions = 0i64;
    for (i, &u) in answers.iter().enumerate() {
        for (j, &v) in answers.iter().enumerate() {
            if i != j && (u == v || loses_across(game, u, v)) {
                collisions += 1;
            }
        }
    }
    Rational::new(collisions, 2 * t * t)
}

/// Exact value of a deterministic strategy under the game's own distribution.
pub fn exact_deterministic_value(game: &IndependentSetGame, answers: &[usize]) -> Rational {
    let pi = game.distribution();
    let mut value = Rational::zero();
    for (i, &u) in answers.iter().enumerate() {
        for (j, &v) in answers.iter().enumerate() {
            if game.predicate(i, j, u, v) {
                value += pi.exact(i, j).expect("library distributions are exact");
            }
        }
    }
    value
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedSetStrategy {
    /// Chosen vertex indices, one per question `i`.
    pub vertices: Vec<usize>,
    pub strategy: IndepStrategy,
    pub value: Rational,
}

/// Greedy minimum-degree selection in the residual graph (ties by vertex
/// order). Missing slots repeat the last chosen vertex.
pub fn greedy_fixed_set(graph: &GameGraph, t: usize) -> Vec<usize> {
    let n = graph.len();
    let mut alive = vec![true; n];
    let mut chosen = Vec::with_capacity(t);
    while chosen.len() < t {
        let pick = (0..n).filter(|&v| alive[v]).min_by_key(|&v| {
            (
                (0..n).filter(|&w| alive[w] && graph.adjacent(v, w)).count(),
                v,
            )
        });
        let Some(v) = pick else { break };
        chosen.push(v);
        alive[v] = false;
        for (w, a) in alive.iter_mut().enumerate() {
            if graph.adjacent(v, w) {
                *a = false;
            }
        }
    }
    if let Some(&last) = chosen.last() {
        chosen.resize(t, last);
    }
    chosen
}

/// Answers every question from one fixed vertex set; wins at least all
/// diagonal questions.
pub fn trivial_fixed_set_strategy(
    game: &IndependentSetGame,
) -> Result<FixedSetStrategy, IndepSetError> {
    if game.graph.is_empty() {
        return Err(IndepSetError::EmptyGraph);
    }
    let vertices = greedy_fixed_set(&game.graph, game.t);
    let strategy = IndepStrategy::deterministic(&vertices, game.n_vertices());
    let value = exact_deterministic_value(game, &vertices);
    Ok(FixedSetStrategy {
        vertices,
        strategy,
        value,
    })
}

/// Diagonal mass of the game's distribution: `1/2 + 1/(2t)` for `pi_d`, `1/t` for `pi_u`.
pub fn diagonal_mass(game: &IndependentSetGame) -> Rational {
    game.distribution()
        .exact_diagonal_mass()
        .expect("library distributions are exact")
}

pub fn format_loss(b: &LossBreakdown) -> String {
    let mut s = format!(
        "loss {:.12}\nsame_vertex {:.12}\nadjacent {:.12}\ndiagonal {:.12}\n",
        b.loss, b.same_vertex, b.adjacent, b.diagonal
    );
    if let Some(e) = &b.exact {
        s.push_str(&format!("exact_loss {}\n", rational::format_rational(e)));
    }
    s
}
