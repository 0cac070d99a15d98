use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::sparql::{BlockKey, PathExpr, QueryAst, Term, TriplePattern};

/// Directed hypergraph of a basic graph pattern. Each triple pattern is one
/// hyperedge from its subject to the tail `(predicate, object)`.
///
/// Vertices are identified by label: terms print as in SPARQL (`?x`, `<iri>`,
/// `"lit"`), predicates by the canonical path text, so a variable used as
/// both predicate and subject is a single vertex.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Hypergraph {
    labels: Vec<String>,
    edges: Vec<[usize; 3]>,
    index: HashMap<String, usize>,
}

/// Label of a subject or object term.
pub fn term_label(t: &Term) -> String {
    t.to_string()
}

/// Label of a predicate position: the whole path is one label.
pub fn predicate_label(p: &PathExpr) -> String {
    p.to_string()
}

impl Hypergraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_triples<'a>(triples: impl IntoIterator<Item = &'a TriplePattern>) -> Self {
        let mut g = Hypergraph::new();
        for tp in triples {
            g.add_triple(tp);
        }
        g
    }

    pub fn add_vertex(&mut self, label: &str) -> usize {
        if let Some(&i) = self.index.get(label) {
            return i;
        }
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), self.labels.len() - 1);
        self.labels.len() - 1
    }

    /// Adds the hyperedge `(s, (p, o))`; duplicates are ignored.
    pub fn add_edge(&mut self, s: &str, p: &str, o: &str) -> bool {
        let e = [self.add_vertex(s), self.add_vertex(p), self.add_vertex(o)];
        if self.edges.contains(&e) {
            return false;
        }
        self.edges.push(e);
        true
    }

    pub fn add_triple(&mut self, tp: &TriplePattern) -> bool {
        self.add_edge(
            &term_label(&tp.subject),
            &predicate_label(&tp.predicate),
            &term_label(&tp.object),
        )
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `|V| + |E|`.
    pub fn size(&self) -> usize {
        self.labels.len() + self.edges.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    /// Hyperedges as `[subject, predicate, object]` vertex indices.
    pub fn edges(&self) -> &[[usize; 3]] {
        &self.edges
    }

    pub fn vertex(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e[0] == v).count()
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e[2] == v).count()
    }

    pub fn predicate_occurrences(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e[1] == v).count()
    }

    /// Number of hyperedge endpoints at `v`, any role.
    pub fn incidence(&self, v: usize) -> usize {
        self.edges.iter().map(|e| e.iter().filter(|x| **x == v).count()).sum()
    }

    /// Union of two graphs, merging vertices by label.
    pub fn union(&self, other: &Hypergraph) -> Hypergraph {
        let mut g = self.clone();
        for e in &other.edges {
            g.add_edge(other.label(e[0]), other.label(e[1]), other.label(e[2]));
        }
        g
    }
}

/// One hypergraph per block that has at least one triple pattern, in
/// document order.
pub fn build_hypergraphs(ast: &QueryAst) -> Vec<(BlockKey, Hypergraph)> {
    ast.blocks()
        .into_iter()
        .filter(|(_, b)| !b.triple_patterns.is_empty())
        .map(|(k, b)| (k, Hypergraph::from_triples(&b.triple_patterns)))
        .collect()
}

/// Union of the hypergraphs of the query body (the CONSTRUCT template is
/// output shape, not a pattern, and is left out).
pub fn body_hypergraph(ast: &QueryAst) -> Hypergraph {
    let mut g = Hypergraph::new();
    if let Some(body) = &ast.body {
        body.walk(&mut Vec::new(), &mut |_, b| {
            for tp in &b.triple_patterns {
                g.add_triple(tp);
            }
        });
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum JoinKind {
    Star,
    Sink,
    Path,
    Hybrid,
}

impl JoinKind {
    pub const ALL: [JoinKind; 4] = [JoinKind::Star, JoinKind::Sink, JoinKind::Path, JoinKind::Hybrid];

    pub fn as_str(self) -> &'static str {
        match self {
            JoinKind::Star => "Star",
            JoinKind::Sink => "Sink",
            JoinKind::Path => "Path",
            JoinKind::Hybrid => "Hybrid",
        }
    }

    /// Classifies by in/out degree; `None` below degree 2.
    pub fn classify(in_degree: usize, out_degree: usize) -> Option<JoinKind> {
        match (in_degree, out_degree) {
            (i, o) if i + o < 2 => None,
            (0, _) => Some(JoinKind::Star),
            (_, 0) => Some(JoinKind::Sink),
            (1, 1) => Some(JoinKind::Path),
            _ => Some(JoinKind::Hybrid),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinVertexInfo {
    pub vertex: usize,
    pub label: String,
    pub kind: JoinKind,
    pub in_degree: usize,
    pub out_degree: usize,
    pub degree: usize,
    /// Times the vertex occurs as a predicate; not part of the degree.
    pub predicate_occurrences: usize,
}

/// Join vertices (degree ≥ 2) in vertex order. Outgoing edges are those with
/// the vertex as subject, incoming those with it as object.
pub fn join_vertices(g: &Hypergraph) -> Vec<JoinVertexInfo> {
    (0..g.vertex_count())
        .filter_map(|v| {
            let (i, o) = (g.in_degree(v), g.out_degree(v));
            JoinKind::classify(i, o).map(|kind| JoinVertexInfo {
                vertex: v,
                label: g.label(v).to_string(),
                kind,
                in_degree: i,
                out_degree: o,
                degree: i + o,
                predicate_occurrences: g.predicate_occurrences(v),
            })
        })
        .collect()
}
