//! JSON file formats for games, graphs, independent set games, strategies
//! and operator families.
//!
//! Matrices are row-major arrays of `[re, im]` pairs; every file that holds
//! matrices has a top-level `"dim"`. Probabilities are `"p/q"` strings
//! (exact) or JSON numbers (float); writers emit strings when exact.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::algebra::{AlgebraError, ComplexMatrix};
use crate::games::{Distribution, GameError, Predicate, SyncQuantumStrategy, SynchronousGame};
use crate::graph::{GameGraph, GraphError, Vertex};
use crate::indepset::{IndepSetError, IndepStrategy, IndependentSetGame, Weighting};
use crate::rational::{self, Rational};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("format error: {0}")]
    Format(String),
}

fn format_err(msg: impl Into<String>) -> IoError {
    IoError::Format(msg.into())
}

impl From<GameError> for IoError {
    fn from(e: GameError) -> Self {
        format_err(e.to_string())
    }
}

impl From<GraphError> for IoError {
    fn from(e: GraphError) -> Self {
        format_err(e.to_string())
    }
}

impl From<IndepSetError> for IoError {
    fn from(e: IndepSetError) -> Self {
        format_err(e.to_string())
    }
}

impl From<AlgebraError> for IoError {
    fn from(e: AlgebraError) -> Self {
        format_err(e.to_string())
    }
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn to_pretty<T: Serialize>(value: &T) -> Result<String, IoError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

type MatrixJson = Vec<Vec<[f64; 2]>>;

fn matrix_from_json(m: &MatrixJson, dim: usize, what: &str) -> Result<ComplexMatrix, IoError> {
    let x = ComplexMatrix::from_pairs(m).map_err(|e| format_err(format!("{what}: {e}")))?;
    if x.dim() != dim {
        return Err(format_err(format!(
            "{what}: dimension {} but \"dim\" is {dim}",
            x.dim()
        )));
    }
    Ok(x)
}

/// A count or an explicit label list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelsJson {
    Count(usize),
    Labels(Vec<String>),
}

impl LabelsJson {
    fn labels(&self) -> Vec<String> {
        match self {
            LabelsJson::Count(n) => (0..*n).map(|i| i.to_string()).collect(),
            LabelsJson::Labels(l) => l.clone(),
        }
    }
}

/// A distribution entry: `"p/q"` string or JSON number.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProbJson {
    Exact(String),
    Float(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistributionJson {
    Named(String),
    Matrix(Vec<Vec<ProbJson>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameJson {
    pub questions: LabelsJson,
    pub answers: LabelsJson,
    pub distribution: DistributionJson,
    /// `[q, q', a, a']` tuples with `V = 0`.
    pub losing_pairs: Vec<[usize; 4]>,
}

fn distribution_from_json(d: &DistributionJson, n: usize) -> Result<Distribution, IoError> {
    match d {
        DistributionJson::Named(name) => match name.as_str() {
            "uniform" => Ok(Distribution::uniform(n)),
            "diag_weighted" => Ok(Distribution::diagonally_weighted(n)),
            other => Err(format_err(format!(
                "distribution: unknown name {other:?} (expected \"uniform\", \"diag_weighted\" or a matrix)"
            ))),
        },
        DistributionJson::Matrix(rows) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(format_err(format!("distribution: expected a {n}x{n} matrix")));
            }
            let cells: Vec<&ProbJson> = rows.iter().flatten().collect();
            if cells.iter().all(|c| matches!(c, ProbJson::Exact(_))) {
                let exact = cells
                    .iter()
                    .map(|c| match c {
                        ProbJson::Exact(s) => rational::parse_rational(s),
                        ProbJson::Float(_) => unreachable!(),
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| format_err(format!("distribution: {e}")))?;
                Ok(Distribution::from_exact(n, exact)?)
            } else {
                let floats = cells
                    .iter()
                    .map(|c| match c {
                        ProbJson::Float(x) => Ok(*x),
                        ProbJson::Exact(s) => rational::parse_rational(s)
                            .map(|r| rational::to_f64(&r))
                            .map_err(|e| format_err(format!("distribution: {e}"))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Distribution::from_floats(n, floats)?)
            }
        }
    }
}

fn distribution_to_json(d: &Distribution) -> DistributionJson {
    let n = d.size();
    if *d == Distribution::uniform(n) {
        return DistributionJson::Named("uniform".into());
    }
    if *d == Distribution::diagonally_weighted(n) {
        return DistributionJson::Named("diag_weighted".into());
    }
    let cell = |k: usize| match d.exact_entries() {
        Some(e) => ProbJson::Exact(rational::format_rational(&e[k])),
        None => ProbJson::Float(d.entries()[k]),
    };
    DistributionJson::Matrix(
        (0..n)
            .map(|q| (0..n).map(|q2| cell(q * n + q2)).collect())
            .collect(),
    )
}

impl GameJson {
    pub fn from_game(g: &SynchronousGame) -> Self {
        GameJson {
            questions: LabelsJson::Labels(g.questions.clone()),
            answers: LabelsJson::Labels(g.answers.clone()),
            distribution: distribution_to_json(&g.distribution),
            losing_pairs: g.predicate.losing_tuples(),
        }
    }

    pub fn to_game(&self) -> Result<SynchronousGame, IoError> {
        let questions = self.questions.labels();
        let answers = self.answers.labels();
        let (nq, na) = (questions.len(), answers.len());
        let mut predicate = Predicate::all_winning(nq, na);
        for (k, &[q, q2, a, a2]) in self.losing_pairs.iter().enumerate() {
            if q >= nq || q2 >= nq || a >= na || a2 >= na {
                return Err(format_err(format!(
                    "losing_pairs[{k}] = [{q},{q2},{a},{a2}] is out of range"
                )));
            }
            predicate.set(q, q2, a, a2, false);
        }
        let distribution = distribution_from_json(&self.distribution, nq)?;
        Ok(SynchronousGame::new(
            questions,
            answers,
            distribution,
            predicate,
        )?)
    }
}

pub fn game_to_json(g: &SynchronousGame) -> Result<String, IoError> {
    to_pretty(&GameJson::from_game(g))
}

pub fn game_from_json(text: &str) -> Result<SynchronousGame, IoError> {
    serde_json::from_str::<GameJson>(text)?.to_game()
}

pub fn read_game(path: &Path) -> Result<SynchronousGame, IoError> {
    game_from_json(&read_text(path)?)
}

/// A vertex: plain index `v` (read as `(v, 0)`) or a `[q, a]` pair.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VertexJson {
    Index(usize),
    Pair([usize; 2]),
}

impl VertexJson {
    fn vertex(self) -> Vertex {
        match self {
            VertexJson::Index(v) => (v, 0),
            VertexJson::Pair([q, a]) => (q, a),
        }
    }

    fn from_vertex(v: Vertex) -> Self {
        VertexJson::Pair([v.0, v.1])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphJson {
    pub vertices: Vec<VertexJson>,
    pub edges: Vec<[VertexJson; 2]>,
}

impl GraphJson {
    pub fn from_graph(x: &GameGraph) -> Self {
        GraphJson {
            vertices: x
                .vertices()
                .iter()
                .map(|&v| VertexJson::from_vertex(v))
                .collect(),
            edges: x
                .edges()
                .into_iter()
                .map(|(i, j)| {
                    [
                        VertexJson::from_vertex(x.vertex(i)),
                        VertexJson::from_vertex(x.vertex(j)),
                    ]
                })
                .collect(),
        }
    }

    pub fn to_graph(&self) -> Result<GameGraph, IoError> {
        let edges: Vec<(Vertex, Vertex)> = self
            .edges
            .iter()
            .map(|[u, v]| (u.vertex(), v.vertex()))
            .collect();
        Ok(GameGraph::from_edges(
            self.vertices.iter().map(|v| v.vertex()).collect(),
            &edges,
        )?)
    }
}

pub fn graph_to_json(x: &GameGraph) -> Result<String, IoError> {
    to_pretty(&GraphJson::from_graph(x))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndepGameJson {
    pub vertices: Vec<VertexJson>,
    pub edges: Vec<[VertexJson; 2]>,
    pub t: usize,
    /// `"uniform"` or `"diagonal"`.
    pub weighting: String,
    /// The synchronous game the graph came from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<GameJson>,
}

pub fn weighting_from_name(name: &str) -> Result<Weighting, IoError> {
    match name {
        "uniform" => Ok(Weighting::Uniform),
        "diagonal" | "diag_weighted" => Ok(Weighting::Diagonal),
        other => Err(format_err(format!(
            "weighting: unknown value {other:?} (expected \"uniform\" or \"diagonal\")"
        ))),
    }
}

pub fn indep_game_to_json(game: &IndependentSetGame) -> Result<String, IoError> {
    let graph = GraphJson::from_graph(&game.graph);
    to_pretty(&IndepGameJson {
        vertices: graph.vertices,
        edges: graph.edges,
        t: game.t,
        weighting: game.weighting.name().to_string(),
        source: game.source.as_ref().map(GameJson::from_game),
    })
}

pub fn indep_game_from_json(text: &str) -> Result<IndependentSetGame, IoError> {
    let j: IndepGameJson = serde_json::from_str(text)?;
    let graph = GraphJson {
        vertices: j.vertices,
        edges: j.edges,
    }
    .to_graph()?;
    let mut game =
        crate::indepset::make_indep_set_game(graph, j.t, weighting_from_name(&j.weighting)?)?;
    if let Some(src) = j.source {
        game.source = Some(src.to_game()?);
    }
    Ok(game)
}

pub fn read_indep_game(path: &Path) -> Result<IndependentSetGame, IoError> {
    indep_game_from_json(&read_text(path)?)
}

/// Strategy file. Synchronous strategies have one family per question
/// (optionally labelled); independent set strategies carry `"t"` and the
/// vertex order of their families.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategyJson {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<VertexJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question_labels: Option<Vec<String>>,
    pub families: Vec<Vec<MatrixJson>>,
}

impl StrategyJson {
    fn families(&self) -> Result<Vec<Vec<ComplexMatrix>>, IoError> {
        self.families
            .iter()
            .enumerate()
            .map(|(i, fam)| {
                fam.iter()
                    .enumerate()
                    .map(|(k, m)| matrix_from_json(m, self.dim, &format!("families[{i}][{k}]")))
                    .collect()
            })
            .collect()
    }

    pub fn is_indep(&self) -> bool {
        self.vertices.is_some()
    }
}

fn families_to_json(families: &[Vec<ComplexMatrix>]) -> Vec<Vec<MatrixJson>> {
    families
        .iter()
        .map(|fam| fam.iter().map(ComplexMatrix::to_pairs).collect())
        .collect()
}

pub fn sync_strategy_to_json(
    s: &SyncQuantumStrategy,
    labels: Option<&[String]>,
) -> Result<String, IoError> {
    to_pretty(&StrategyJson {
        dim: s.dim,
        t: None,
        vertices: None,
        question_labels: labels.map(<[String]>::to_vec),
        families: families_to_json(&s.pvms),
    })
}

pub fn sync_strategy_from_json(text: &str) -> Result<SyncQuantumStrategy, IoError> {
    let j: StrategyJson = serde_json::from_str(text)?;
    if j.is_indep() {
        return Err(format_err(
            "expected a synchronous strategy, found an independent set strategy",
        ));
    }
    if let Some(labels) = &j.question_labels {
        if labels.len() != j.families.len() {
            return Err(format_err("question_labels and families differ in length"));
        }
    }
    Ok(SyncQuantumStrategy::new(j.families()?)?)
}

pub fn read_sync_strategy(path: &Path) -> Result<SyncQuantumStrategy, IoError> {
    sync_strategy_from_json(&read_text(path)?)
}

pub fn indep_strategy_to_json(s: &IndepStrategy, vertices: &[Vertex]) -> Result<String, IoError> {
    to_pretty(&StrategyJson {
        dim: s.dim,
        t: Some(s.t()),
        vertices: Some(
            vertices
                .iter()
                .map(|&v| VertexJson::from_vertex(v))
                .collect(),
        ),
        question_labels: None,
        families: families_to_json(&s.families),
    })
}

/// Reads an independent set strategy and its vertex order.
pub fn indep_strategy_from_json(text: &str) -> Result<(IndepStrategy, Vec<Vertex>), IoError> {
    let j: StrategyJson = serde_json::from_str(text)?;
    let vertices: Vec<Vertex> = j
        .vertices
        .as_ref()
        .ok_or_else(|| format_err("independent set strategy needs \"vertices\""))?
        .iter()
        .map(|v| v.vertex())
        .collect();
    if let Some(t) = j.t {
        if t != j.families.len() {
            return Err(format_err(format!(
                "\"t\" is {t} but there are {} families",
                j.families.len()
            )));
        }
    }
    if let Some(k) = j.families.iter().position(|f| f.len() != vertices.len()) {
        return Err(format_err(format!(
            "families[{k}] has {} matrices for {} vertices",
            j.families[k].len(),
            vertices.len()
        )));
    }
    Ok((IndepStrategy::new(j.families()?)?, vertices))
}

/// Reads an independent set strategy and checks its vertex order against `game`.
pub fn read_indep_strategy_for(
    path: &Path,
    game: &IndependentSetGame,
) -> Result<IndepStrategy, IoError> {
    let (s, vertices) = indep_strategy_from_json(&read_text(path)?)?;
    if vertices != game.graph.vertices() {
        return Err(format_err(
            "strategy vertex order differs from the game's graph",
        ));
    }
    Ok(s)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorsJson {
    pub dim: usize,
    pub operators: Vec<MatrixJson>,
}

pub fn operators_to_json(ops: &[ComplexMatrix]) -> Result<String, IoError> {
    let dim = ops.first().map_or(0, ComplexMatrix::dim);
    to_pretty(&OperatorsJson {
        dim,
        operators: ops.iter().map(ComplexMatrix::to_pairs).collect(),
    })
}

pub fn operators_from_json(text: &str) -> Result<Vec<ComplexMatrix>, IoError> {
    let j: OperatorsJson = serde_json::from_str(text)?;
    j.operators
        .iter()
        .enumerate()
        .map(|(k, m)| matrix_from_json(m, j.dim, &format!("operators[{k}]")))
        .collect()
}

pub fn read_operators(path: &Path) -> Result<Vec<ComplexMatrix>, IoError> {
    operators_from_json(&read_text(path)?)
}

/// A rational as a JSON string `"p/q"`.
pub fn rational_value(r: &Rational) -> Value {
    Value::String(rational::format_rational(r))
}
