//! The game graph `X(G)` on `Q x A` and independence checks.

use std::fmt::Write as _;

use bitvec::prelude::*;
use thiserror::Error;

use crate::games::{validate_game, SynchronousGame, ValidationReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("game is invalid:\n{0}")]
    InvalidGame(ValidationReport),
    #[error("unknown vertex ({0},{1})")]
    UnknownVertex(usize, usize),
    #[error("edge index {0} out of range")]
    EdgeOutOfRange(usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
}

/// A vertex `(q, a)`. Plain graphs use `(v, 0)`.
pub type Vertex = (usize, usize);

/// Simple undirected graph on labelled vertices, adjacency as a dense bit matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameGraph {
    vertices: Vec<Vertex>,
    adjacency: BitVec<u64, Lsb0>,
}

impl GameGraph {
    /// Graph on `vertices` (sorted lexicographically) with the given edges,
    /// given as vertex-index pairs into the sorted order.
    pub fn from_edges(
        mut vertices: Vec<Vertex>,
        edges: &[(Vertex, Vertex)],
    ) -> Result<Self, GraphError> {
        vertices.sort_unstable();
        vertices.dedup();
        let n = vertices.len();
        let mut g = GameGraph {
            vertices,
            adjacency: bitvec![u64, Lsb0; 0; n * n],
        };
        for &(u, v) in edges {
            let i = g.index_of(u)?;
            let j = g.index_of(v)?;
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            g.set_edge(i, j);
        }
        Ok(g)
    }

    /// Plain graph on vertices `(0,0), .., (n-1,0)`.
    pub fn simple(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        for &(u, v) in edges {
            if u >= n {
                return Err(GraphError::EdgeOutOfRange(u));
            }
            if v >= n {
                return Err(GraphError::EdgeOutOfRange(v));
            }
        }
        let edges: Vec<(Vertex, Vertex)> = edges.iter().map(|&(u, v)| ((u, 0), (v, 0))).collect();
        Self::from_edges((0..n).map(|v| (v, 0)).collect(), &edges)
    }

    fn set_edge(&mut self, i: usize, j: usize) {
        let n = self.vertices.len();
        self.adjacency.set(i * n + j, true);
        self.adjacency.set(j * n + i, true);
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Vertex {
        self.vertices[i]
    }

    pub fn index_of(&self, v: Vertex) -> Result<usize, GraphError> {
        self.vertices
            .binary_search(&v)
            .map_err(|_| GraphError::UnknownVertex(v.0, v.1))
    }

    #[inline]
    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.vertices.len() + j]
    }

    pub fn degree(&self, i: usize) -> usize {
        let n = self.vertices.len();
        self.adjacency[i * n..(i + 1) * n].count_ones()
    }

    /// Unordered edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.vertices.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.adjacent(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.count_ones() / 2
    }

    /// Index-level independence check: distinct and pairwise non-adjacent.
    pub fn is_independent_indices(&self, set: &[usize]) -> bool {
        for (k, &i) in set.iter().enumerate() {
            for &j in &set[k + 1..] {
                if i == j || self.adjacent(i, j) {
                    return false;
                }
            }
        }
        true
    }
}

/// `(q,a) ~ (q',a')` iff `V(q,q';a,a') = 0` or `V(q',q;a',a) = 0`; no self-loops.
pub fn build_game_graph(g: &SynchronousGame) -> Result<GameGraph, GraphError> {
    let report = validate_game(g);
    if !report.is_valid() {
        return Err(GraphError::InvalidGame(report));
    }
    let (nq, na) = (g.n_questions(), g.n_answers());
    let vertices: Vec<Vertex> = (0..nq).flat_map(|q| (0..na).map(move |a| (q, a))).collect();
    let n = vertices.len();
    let mut graph = GameGraph {
        vertices,
        adjacency: bitvec![u64, Lsb0; 0; n * n],
    };
    for i in 0..n {
        let (q, a) = graph.vertices[i];
        for j in i + 1..n {
            let (q2, a2) = graph.vertices[j];
            if !g.wins(q, q2, a, a2) || !g.wins(q2, q, a2, a) {
                graph.set_edge(i, j);
            }
        }
    }
    Ok(graph)
}

/// True iff the listed vertices are distinct and pairwise non-adjacent.
pub fn is_independent_set(x: &GameGraph, set: &[Vertex]) -> Result<bool, GraphError> {
    let idx = set
        .iter()
        .map(|&v| x.index_of(v))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(x.is_independent_indices(&idx))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Dot,
    EdgeList,
}

fn label(v: Vertex) -> String {
    format!("{},{}", v.0, v.1)
}

/// Deterministic text export; vertices in `(q, a)` order, each edge once.
pub fn export_graph(x: &GameGraph, format: GraphFormat) -> String {
    let mut out = String::new();
    match format {
        GraphFormat::Dot => {
            out.push_str("graph X {\n");
            for &v in x.vertices() {
                let _ = writeln!(out, "  \"{}\";", label(v));
            }
            for (i, j) in x.edges() {
                let _ = writeln!(
                    out,
                    "  \"{}\" -- \"{}\";",
                    label(x.vertex(i)),
                    label(x.vertex(j))
                );
            }
            out.push_str("}\n");
        }
        GraphFormat::EdgeList => {
            for (i, j) in x.edges() {
                let _ = writeln!(out, "{} {}", label(x.vertex(i)), label(x.vertex(j)));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::Distribution;

    #[test]
    fn agreement_graph() {
        let x = build_game_graph(&SynchronousGame::agreement(2, 2)).unwrap();
        assert_eq!(x.len(), 4);
        assert_eq!(x.edge_count(), 4);
        for (i, j) in x.edges() {
            assert_ne!(x.vertex(i).1, x.vertex(j).1);
        }
    }

    #[test]
    fn independence_examples() {
        let x = build_game_graph(&SynchronousGame::agreement(2, 2)).unwrap();
        assert!(is_independent_set(&x, &[(0, 0), (1, 0)]).unwrap());
        assert!(!is_independent_set(&x, &[(0, 0), (1, 1)]).unwrap());
        assert!(is_independent_set(&x, &[]).unwrap());
        assert!(!is_independent_set(&x, &[(0, 0), (0, 0)]).unwrap());
        assert_eq!(
            is_independent_set(&x, &[(5, 0)]),
            Err(GraphError::UnknownVertex(5, 0))
        );
    }

    #[test]
    fn all_winning_off_diagonal_gives_question_cliques() {
        let g = SynchronousGame::from_fn(3, 3, Distribution::uniform(3), |q, q2, a, a2| {
            q != q2 || a == a2
        })
        .unwrap();
        let x = build_game_graph(&g).unwrap();
        for (i, j) in x.edges() {
            assert_eq!(x.vertex(i).0, x.vertex(j).0);
        }
        assert_eq!(x.edge_count(), 3 * 3);
    }

    #[test]
    fn invalid_game_is_rejected() {
        let mut g = SynchronousGame::agreement(2, 2);
        g.predicate.set(1, 1, 0, 1, true);
        assert!(matches!(
            build_game_graph(&g),
            Err(GraphError::InvalidGame(_))
        ));
    }

    #[test]
    fn exports() {
        let one = GameGraph::simple(1, &[]).unwrap();
        assert_eq!(
            export_graph(&one, GraphFormat::Dot),
            "graph X {\n  \"0,0\";\n}\n"
        );
        assert_eq!(export_graph(&one, GraphFormat::EdgeList), "");
        let x = build_game_graph(&SynchronousGame::agreement(2, 2)).unwrap();
        let dot = export_graph(&x, GraphFormat::Dot);
        assert_eq!(dot.matches(" -- ").count(), 4);
        assert_eq!(
            dot.lines()
                .filter(|l| l.ends_with("\";") && !l.contains("--"))
                .count(),
            4
        );
        assert_eq!(
            export_graph(&x, GraphFormat::EdgeList),
            "0,0 0,1\n0,0 1,1\n0,1 1,0\n1,0 1,1\n"
        );
    }

    #[test]
    fn simple_graph_rejects_bad_edges() {
        assert_eq!(
            GameGraph::simple(2, &[(0, 2)]),
            Err(GraphError::EdgeOutOfRange(2))
        );
        assert_eq!(
            GameGraph::simple(2, &[(1, 1)]),
            Err(GraphError::SelfLoop(1))
        );
    }
}
