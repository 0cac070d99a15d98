//! Graph edit distance between hypergraphs under unit costs.
//!
//! A solution is a partial injective vertex map `f: V1 -> V2 ∪ {ε}`. Its cost
//! is one per relabelled, deleted or inserted vertex plus
//! `max(|E1|, |E2|) - M`, where `M` counts hyperedges of `g1` whose image is a
//! hyperedge of `g2`: unmatched edges pair up as substitutions and the
//! surplus is inserted or deleted.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::graph::{build_hypergraphs, Hypergraph};
use crate::sparql::{BlockKey, QueryAst};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GedResult {
    /// Normalized distance in `[0, 1]`.
    pub value: f64,
    /// Whether the optimum was found by exhaustive search.
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GedOptions {
    /// Exact search is attempted while `max(|V1|, |V2|)` is at most this.
    pub exact_size_limit: usize,
    /// Wall-clock budget for one exact search before falling back.
    pub time_budget: Duration,
}

impl Default for GedOptions {
    fn default() -> Self {
        GedOptions {
            exact_size_limit: 8,
            time_budget: Duration::from_millis(2000),
        }
    }
}

pub const EPSILON: usize = usize::MAX;

/// Edit cost of a complete vertex map (`EPSILON` marks deletion).
pub fn mapping_cost(g1: &Hypergraph, g2: &Hypergraph, map: &[usize]) -> usize {
    let mut used = vec![false; g2.vertex_count()];
    let mut cost = 0;
    for (v, &w) in map.iter().enumerate() {
        if w == EPSILON {
            cost += 1;
        } else {
            used[w] = true;
            if g1.label(v) != g2.label(w) {
                cost += 1;
            }
        }
    }
    cost += used.iter().filter(|u| !**u).count();
    let e2: HashSet<[usize; 3]> = g2.edges().iter().copied().collect();
    let matched = g1
        .edges()
        .iter()
        .filter(|e| {
            let img = [map[e[0]], map[e[1]], map[e[2]]];
            !img.contains(&EPSILON) && e2.contains(&img)
        })
        .count();
    cost + g1.edge_count().max(g2.edge_count()) - matched
}

fn normalize(raw: usize, g1: &Hypergraph, g2: &Hypergraph) -> f64 {
    let norm = g1.size().max(g2.size());
    if norm == 0 {
        0.0
    } else {
        (raw as f64 / norm as f64).clamp(0.0, 1.0)
    }
}

/// Normalized edit distance: exact search for small graphs, otherwise (or
/// once the time budget runs out) a greedy upper bound.
pub fn ged(g1: &Hypergraph, g2: &Hypergraph, opts: &GedOptions) -> GedResult {
    if g1.is_empty() && g2.is_empty() {
        return GedResult {
            value: 0.0,
            exact: true,
        };
    }
    if g1.vertex_count().max(g2.vertex_count()) <= opts.exact_size_limit {
        if let Some(raw) = exact_raw(g1, g2, Some(Instant::now() + opts.time_budget)) {
            return GedResult {
                value: normalize(raw, g1, g2),
                exact: true,
            };
        }
    }
    GedResult {
        value: normalize(approx_raw(g1, g2), g1, g2),
        exact: false,
    }
}

#[derive(Clone, PartialEq, Eq)]
struct Node {
    f: usize,
    map: Vec<usize>,
    used: u64,
    g_vertex: usize,
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on f, deeper first, then lexicographic map for determinism
        Reverse(self.f)
            .cmp(&Reverse(other.f))
            .then(self.map.len().cmp(&other.map.len()))
            .then_with(|| other.map.cmp(&self.map))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Best-first search over vertex maps. Returns `None` past the deadline.
/// Graphs above 64 vertices are not supported here.
pub fn exact_raw(g1: &Hypergraph, g2: &Hypergraph, deadline: Option<Instant>) -> Option<usize> {
    let n1 = g1.vertex_count();
    let n2 = g2.vertex_count();
    if n1 > 64 || n2 > 64 {
        return None;
    }
    let e2: HashSet<[usize; 3]> = g2.edges().iter().copied().collect();
    let max_e = g1.edge_count().max(g2.edge_count());
    let min_e = g1.edge_count().min(g2.edge_count());
    // vertices of g1 in order of decreasing incidence: constrained ones first
    let mut order: Vec<usize> = (0..n1).collect();
    order.sort_by_key(|&v| (Reverse(g1.incidence(v)), v));
    let mut rank = vec![0; n1];
    for (i, &v) in order.iter().enumerate() {
        rank[v] = i;
    }
    // an edge is decided once its last endpoint in `order` is assigned
    let decided_at: Vec<usize> = g1
        .edges()
        .iter()
        .map(|e| e.iter().map(|&v| rank[v]).max().unwrap())
        .collect();
    let label2: BTreeMap<&str, usize> = g2.labels().iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let label_match: Vec<Option<usize>> = order.iter().map(|&v| label2.get(g1.label(v)).copied()).collect();

    let bound = |map: &[usize], used: u64, g_vertex: usize| -> usize {
        let depth = map.len();
        let r1 = n1 - depth;
        let r2 = n2 - used.count_ones() as usize;
        let common = label_match[depth..]
            .iter()
            .filter(|m| m.is_some_and(|w| used & (1 << w) == 0))
            .count();
        let lb_v = r1.max(r2) - common;
        let mut matched = 0;
        let mut undecided = 0;
        for (e, &at) in g1.edges().iter().zip(&decided_at) {
            if at >= depth {
                undecided += 1;
                continue;
            }
            let img = [map[rank[e[0]]], map[rank[e[1]]], map[rank[e[2]]]];
            if !img.contains(&EPSILON) && e2.contains(&img) {
                matched += 1;
            }
        }
        let lb_e = max_e - (matched + undecided).min(min_e);
        g_vertex + lb_v + lb_e
    };

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        f: bound(&[], 0, 0),
        map: Vec::new(),
        used: 0,
        g_vertex: 0,
    });
    let mut pops = 0u64;
    while let Some(node) = heap.pop() {
        pops += 1;
        if pops.is_multiple_of(1024) && deadline.is_some_and(|d| Instant::now() > d) {
            return None;
        }
        let depth = node.map.len();
        if depth == n1 {
            return Some(node.f);
        }
        let v = order[depth];
        for w in (0..n2).filter(|w| node.used & (1 << w) == 0).chain([EPSILON]) {
            let (used, step) = if w == EPSILON {
                (node.used, 1)
            } else {
                (node.used | (1 << w), usize::from(g1.label(v) != g2.label(w)))
            };
            let mut map = node.map.clone();
            map.push(w);
            let g_vertex = node.g_vertex + step;
            let f = bound(&map, used, g_vertex);
            heap.push(Node { f, map, used, g_vertex });
        }
    }
    unreachable!("the empty-to-full search always reaches a complete map")
}

/// Greedy assignment on (label, degree signature) improved by pairwise swaps;
/// the returned cost is that of an actual map, so it never underestimates.
pub fn approx_raw(g1: &Hypergraph, g2: &Hypergraph) -> usize {
    approx_map(g1, g2).1
}

fn signature(g: &Hypergraph, v: usize) -> [usize; 3] {
    [g.out_degree(v), g.predicate_occurrences(v), g.in_degree(v)]
}

fn approx_map(g1: &Hypergraph, g2: &Hypergraph) -> (Vec<usize>, usize) {
    let n1 = g1.vertex_count();
    let n2 = g2.vertex_count();
    let mut order: Vec<usize> = (0..n1).collect();
    order.sort_by_key(|&v| (Reverse(g1.incidence(v)), v));
    let mut map = vec![EPSILON; n1];
    let mut used = vec![false; n2];
    for &v in &order {
        let s1 = signature(g1, v);
        let best = (0..n2).filter(|&w| !used[w]).min_by_key(|&w| {
            let s2 = signature(g2, w);
            let deg: usize = s1.iter().zip(&s2).map(|(a, b)| a.abs_diff(*b)).sum();
            (usize::from(g1.label(v) != g2.label(w)), deg, w)
        });
        if let Some(w) = best {
            map[v] = w;
            used[w] = true;
        }
    }
    let mut cost = mapping_cost(g1, g2, &map);
    // local search: swap images of two vertices or move one to a free slot/ε
    let mut improved = true;
    let mut rounds = 0;
    while improved && rounds < 8 {
        improved = false;
        rounds += 1;
        for a in 0..n1 {
            for b in (a + 1)..n1 {
                map.swap(a, b);
                let c = mapping_cost(g1, g2, &map);
                if c < cost {
                    cost = c;
                    improved = true;
                } else {
                    map.swap(a, b);
                }
            }
            let free: Vec<usize> = (0..n2).filter(|w| !map.contains(w)).chain([EPSILON]).collect();
            for w in free {
                let old = map[a];
                if w == old {
                    continue;
                }
                map[a] = w;
                let c = mapping_cost(g1, g2, &map);
                if c < cost {
                    cost = c;
                    improved = true;
                } else {
                    map[a] = old;
                }
            }
        }
    }
    (map, cost)
}

/// Mean per-block distance over blocks paired by key path. A block present
/// in one query only counts as a complete change.
pub fn query_ged(a1: &QueryAst, a2: &QueryAst, opts: &GedOptions) -> GedResult {
    let b1: BTreeMap<BlockKey, Hypergraph> = build_hypergraphs(a1).into_iter().collect();
    let b2: BTreeMap<BlockKey, Hypergraph> = build_hypergraphs(a2).into_iter().collect();
    let mut keys: Vec<&BlockKey> = b1.keys().chain(b2.keys()).collect();
    keys.sort();
    keys.dedup();
    if keys.is_empty() {
        return GedResult {
            value: 0.0,
            exact: true,
        };
    }
    let empty = Hypergraph::new();
    let mut sum = 0.0;
    let mut exact = true;
    for k in &keys {
        let r = ged(b1.get(*k).unwrap_or(&empty), b2.get(*k).unwrap_or(&empty), opts);
        sum += r.value;
        exact &= r.exact;
    }
    GedResult {
        value: sum / keys.len() as f64,
        exact,
    }
}
