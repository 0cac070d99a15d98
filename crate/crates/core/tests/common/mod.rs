//! Generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use chrono::{DateTime, TimeDelta, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparql_session::hypergraph::Hypergraph;
use sparql_session::intent::{HmmModel, ObservationSymbol, RcState};

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- graphs

const LABELS: [&str; 9] = ["?s", "?o", "?x", "<p>", "<q>", "<r>", "<a>", "\"v\"", "?y"];

/// Up to `max_vertices` vertices with labels from a small shared pool, so
/// that two graphs often agree on some labels. Isolated vertices are kept.
pub fn random_hypergraph(rng: &mut impl Rng, max_vertices: usize) -> Hypergraph {
    let n = rng.gen_range(1..=max_vertices);
    let mut pool: Vec<String> = LABELS.iter().map(|s| s.to_string()).collect();
    for i in 0..max_vertices.saturating_sub(LABELS.len()) {
        pool.push(format!("?v{i}"));
    }
    pool.shuffle(rng);
    let labels = &pool[..n];
    let mut g = Hypergraph::new();
    for l in labels {
        g.add_vertex(l);
    }
    for _ in 0..rng.gen_range(0..=2 * n) {
        let pick = |r: &mut dyn rand::RngCore| labels[r.gen_range(0..n)].clone();
        let (s, p, o) = (pick(rng), pick(rng), pick(rng));
        g.add_edge(&s, &p, &o);
    }
    g
}

/// Cost of one complete assignment, written out from the edit model:
/// relabel, delete and insert vertices at one each; hyperedges whose image is
/// present are free, the rest pair up as substitutions and the excess is
/// inserted or deleted.
fn assignment_cost(g1: &Hypergraph, g2: &Hypergraph, image: &[Option<usize>]) -> usize {
    let mut cost = 0;
    let mut hit = vec![false; g2.vertex_count()];
    for (v, w) in image.iter().enumerate() {
        match w {
            None => cost += 1,
            Some(w) => {
                hit[*w] = true;
                cost += usize::from(g1.label(v) != g2.label(*w));
            }
        }
    }
    cost += hit.iter().filter(|h| !**h).count();
    let preserved = g1
        .edges()
        .iter()
        .filter(|e| match (image[e[0]], image[e[1]], image[e[2]]) {
            (Some(a), Some(b), Some(c)) => g2.edges().contains(&[a, b, c]),
            _ => false,
        })
        .count();
    let (left, right) = (g1.edge_count() - preserved, g2.edge_count() - preserved);
    let substituted = left.min(right);
    cost + substituted + (left - substituted) + (right - substituted)
}

/// Minimum over every injective partial vertex map.
pub fn brute_force_raw_ged(g1: &Hypergraph, g2: &Hypergraph) -> usize {
    fn rec(g1: &Hypergraph, g2: &Hypergraph, image: &mut Vec<Option<usize>>, used: &mut Vec<bool>, best: &mut usize) {
        if image.len() == g1.vertex_count() {
            *best = (*best).min(assignment_cost(g1, g2, image));
            return;
        }
        image.push(None);
        rec(g1, g2, image, used, best);
        image.pop();
        for w in 0..g2.vertex_count() {
            if !used[w] {
                used[w] = true;
                image.push(Some(w));
                rec(g1, g2, image, used, best);
                image.pop();
                used[w] = false;
            }
        }
    }
    let mut best = usize::MAX;
    rec(g1, g2, &mut Vec::new(), &mut vec![false; g2.vertex_count()], &mut best);
    best
}

pub fn normalizer(g1: &Hypergraph, g2: &Hypergraph) -> usize {
    (g1.vertex_count() + g1.edge_count()).max(g2.vertex_count() + g2.edge_count())
}

// ---------------------------------------------------------------- HMMs

/// A random probability vector; with `sparse` some entries are zero.
pub fn random_distribution(rng: &mut impl Rng, n: usize, sparse: bool) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..n)
            .map(|_| {
                if sparse && rng.gen_bool(0.3) {
                    0.0
                } else {
                    -rng.gen_range(1e-6f64..1.0).ln()
                }
            })
            .collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            return raw.iter().map(|x| x / total).collect();
        }
    }
}

pub fn random_model(rng: &mut impl Rng) -> HmmModel {
    let sparse = rng.gen_bool(0.25);
    let symbols = ObservationSymbol::ALL.to_vec();
    let pi = random_distribution(rng, 3, false);
    let a = (0..3).map(|_| random_distribution(rng, 3, sparse)).collect();
    let b = (0..3)
        .map(|_| random_distribution(rng, symbols.len(), sparse))
        .collect();
    HmmModel::new(symbols, pi, a, b).expect("generated parameters are stochastic")
}

pub fn random_observations(rng: &mut impl Rng, len: usize) -> Vec<ObservationSymbol> {
    (0..len)
        .map(|_| ObservationSymbol::ALL[rng.gen_range(0..ObservationSymbol::ALL.len())])
        .collect()
}

/// Every hidden path of length `t` over three states, in lexicographic order.
pub fn all_paths(t: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..t {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..3).map(move |h| {
                    let mut q = p.clone();
                    q.push(h);
                    q
                })
            })
            .collect();
    }
    out
}

pub fn joint_probability(m: &HmmModel, path: &[usize], os: &[ObservationSymbol]) -> f64 {
    let col = |o: ObservationSymbol| m.symbols.iter().position(|&s| s == o).unwrap();
    let mut p = m.pi[path[0]] * m.b[path[0]][col(os[0])];
    for t in 1..os.len() {
        p *= m.a[path[t - 1]][path[t]] * m.b[path[t]][col(os[t])];
    }
    p
}

pub fn enumerated_forward(m: &HmmModel, os: &[ObservationSymbol]) -> f64 {
    all_paths(os.len()).iter().map(|p| joint_probability(m, p, os)).sum()
}

pub fn enumerated_best(m: &HmmModel, os: &[ObservationSymbol]) -> f64 {
    all_paths(os.len())
        .iter()
        .map(|p| joint_probability(m, p, os))
        .fold(0.0, f64::max)
}

pub fn state_index(s: RcState) -> usize {
    match s {
        RcState::Decrease => 0,
        RcState::Unchanged => 1,
        RcState::Increase => 2,
    }
}

// ---------------------------------------------------------------- logs

pub fn log_line(dataset: &str, user: &str, time: DateTime<Utc>, query: &str, size: Option<u64>) -> String {
    serde_json::json!({
        "dataset": dataset,
        "user": user,
        "time": time.to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        "query": query,
        "resultSize": size,
        "runtimeMs": 12,
    })
    .to_string()
}

pub fn base_time() -> DateTime<Utc> {
    DateTime::parse_from_rfc3339("2024-05-01T09:00:00Z")
        .unwrap()
        .with_timezone(&Utc)
}

/// Editable query used by the synthetic log: a star/path BGP around `?s`,
/// an optional filter and a few solution modifiers.
#[derive(Clone)]
struct Draft {
    ask: bool,
    distinct: bool,
    triples: Vec<(String, String, String)>,
    optional: Option<(String, String, String)>,
    filter: Option<(String, String, String)>,
    limit: Option<u32>,
}

impl Draft {
    fn new(rng: &mut impl Rng, topic: usize) -> Self {
        Draft {
            ask: false,
            distinct: false,
            triples: vec![("?s".into(), pred(rng), format!("<http://ex.org/topic{topic}>"))],
            optional: None,
            filter: None,
            limit: None,
        }
    }

    fn text(&self) -> String {
        let mut body: Vec<String> = self.triples.iter().map(|(s, p, o)| format!("{s} {p} {o} .")).collect();
        if let Some((s, p, o)) = &self.optional {
            body.push(format!("OPTIONAL {{ {s} {p} {o} }}"));
        }
        if let Some((v, op, c)) = &self.filter {
            body.push(format!("FILTER({v} {op} {c})"));
        }
        let body = body.join(" ");
        if self.ask {
            return format!("ASK {{ {body} }}");
        }
        let mut q = format!(
            "SELECT {}* WHERE {{ {body} }}",
            if self.distinct { "DISTINCT " } else { "" }
        );
        if let Some(n) = self.limit {
            q.push_str(&format!(" LIMIT {n}"));
        }
        q
    }

    fn vars(&self) -> Vec<String> {
        let mut v: Vec<String> = self
            .triples
            .iter()
            .flat_map(|(s, _, o)| [s.clone(), o.clone()])
            .filter(|t| t.starts_with('?'))
            .collect();
        v.sort();
        v.dedup();
        v
    }

    /// One random edit; returns false when the chosen edit does not apply.
    fn mutate(&mut self, rng: &mut impl Rng, fresh: &mut usize) -> bool {
        match rng.gen_range(0..12) {
            0 | 1 => {
                let vars = self.vars();
                let s = vars.choose(rng).unwrap().clone();
                *fresh += 1;
                let o = if rng.gen_bool(0.5) {
                    format!("?v{fresh}")
                } else {
                    iri(rng)
                };
                self.triples.push((s, pred(rng), o));
            }
            2 => {
                if self.triples.len() < 2 {
                    return false;
                }
                let i = rng.gen_range(1..self.triples.len());
                self.triples.remove(i);
            }
            3 | 4 => {
                let i = rng.gen_range(0..self.triples.len());
                self.triples[i].1 = pred(rng);
            }
            5 => {
                let i = rng.gen_range(0..self.triples.len());
                if self.triples[i].2.starts_with('<') {
                    self.triples[i].2 = iri(rng);
                } else {
                    return false;
                }
            }
            6 => self.distinct = !self.distinct,
            7 => {
                self.filter = match self.filter {
                    Some(_) => None,
                    None => {
                        let v = self.vars().choose(rng).unwrap().clone();
                        Some((v, "!=".into(), iri(rng)))
                    }
                }
            }
            8 => match &mut self.filter {
                Some(f) => {
                    f.2 = if rng.gen_bool(0.5) {
                        rng.gen_range(1..100).to_string()
                    } else {
                        format!("\"{}\"", ["a", "b", "c"].choose(rng).unwrap())
                    };
                    f.1 = if f.2.starts_with('"') { "=".into() } else { ">".into() };
                }
                None => return false,
            },
            9 => {
                self.optional = match self.optional {
                    Some(_) => None,
                    None => Some(("?s".into(), pred(rng), "?opt".into())),
                }
            }
            10 => {
                self.limit = if self.limit.is_some() {
                    None
                } else {
                    Some(rng.gen_range(1..100))
                }
            }
            _ => self.ask = !self.ask,
        }
        true
    }
}

fn pred(rng: &mut impl Rng) -> String {
    format!("<http://ex.org/p{}>", rng.gen_range(0..12))
}

fn iri(rng: &mut impl Rng) -> String {
    format!("<http://ex.org/r{}>", rng.gen_range(0..40))
}

/// Organic-looking NDJSON log with exactly `records` lines: users issue
/// sessions of edited queries a few minutes apart, sessions are separated by
/// long pauses, and some result sizes are unknown.
pub fn synthetic_log(seed: u64, records: usize) -> String {
    let mut rng = rng(seed);
    let mut lines = Vec::with_capacity(records);
    let mut fresh = 0;
    let mut user = 0;
    while lines.len() < records {
        user += 1;
        let dataset = if user % 3 == 0 { "swdf" } else { "dbpedia" };
        let mut t = base_time() + TimeDelta::minutes(rng.gen_range(0..600));
        for _ in 0..rng.gen_range(1..5) {
            let topic = rng.gen_range(0..30);
            let mut d = Draft::new(&mut rng, topic);
            let mut size: u64 = rng.gen_range(0..1000);
            for _ in 0..rng.gen_range(1..12) {
                if lines.len() == records {
                    break;
                }
                let known = rng.gen_bool(0.9).then_some(size);
                lines.push(log_line(dataset, &format!("user{user}"), t, &d.text(), known));
                while !d.mutate(&mut rng, &mut fresh) {}
                size = match rng.gen_range(0..3) {
                    0 => size.saturating_sub(rng.gen_range(1..50)),
                    1 => size,
                    _ => size + rng.gen_range(1..50),
                };
                t += TimeDelta::minutes(rng.gen_range(1..20));
            }
            t += TimeDelta::minutes(rng.gen_range(61..300));
        }
    }
    lines.join("\n") + "\n"
}

/// Sessions whose result sizes follow a Markov chain over RC states with the
/// given rows (Decrease, Unchanged, Increase order). Each session is one user
/// issuing `len` structurally alternating queries two minutes apart around a
/// shared entity, so nothing is filtered and each session survives intact.
pub fn planted_markov_log(seed: u64, planted: [[f64; 3]; 3], sessions: usize, len: usize) -> String {
    let mut rng = rng(seed);
    let mut lines = Vec::with_capacity(sessions * len);
    let draw = |rng: &mut ChaCha8Rng, row: &[f64; 3]| {
        let u: f64 = rng.gen();
        if u < row[0] {
            0
        } else if u < row[0] + row[1] {
            1
        } else {
            2
        }
    };
    let mut serial = 0;
    for s in 0..sessions {
        let user = format!("m{s}");
        let ent = format!("<http://ex.org/entity{s}>");
        let mut t = base_time() + TimeDelta::minutes(rng.gen_range(0..600));
        let mut size: u64 = 1_000_000;
        let mut state = rng.gen_range(0..3);
        for k in 0..len {
            serial += 1;
            let p = format!("<http://ex.org/p{serial}>");
            let q = match k % 3 {
                0 => format!("SELECT ?x WHERE {{ ?x {p} {ent} }}"),
                1 => format!("SELECT DISTINCT ?x WHERE {{ ?x {p} {ent} . ?x {p} ?y }}"),
                _ => format!("ASK {{ {ent} {p} ?z }}"),
            };
            lines.push(log_line("planted", &user, t, &q, Some(size)));
            t += TimeDelta::minutes(2);
            if k > 0 {
                state = draw(&mut rng, &planted[state]);
            }
            size = match state {
                0 => size - rng.gen_range(1..100),
                1 => size,
                _ => size + rng.gen_range(1..100),
            };
        }
    }
    lines.join("\n") + "\n"
}

// ---------------------------------------------------------------- queries

/// Names used to fill a query skeleton: variables by slot, constants drawn
/// per occurrence from a pool.
pub struct Fill {
    vars: Vec<String>,
    iris: Vec<String>,
    rng: ChaCha8Rng,
}

impl Fill {
    pub fn new(seed: u64, vars: &[&str], host: &str, pool: usize) -> Self {
        Fill {
            vars: vars.iter().map(|v| format!("?{v}")).collect(),
            iris: (0..pool).map(|i| format!("<http://{host}/r{i}>")).collect(),
            rng: rng(seed),
        }
    }

    /// A small shared vocabulary, so that independent queries overlap.
    pub fn shared(seed: u64) -> Self {
        Fill::new(seed, &["s", "o", "x", "y", "z"], "ex.org", 4)
    }

    fn var(&self, slot: usize) -> &str {
        &self.vars[slot % self.vars.len()]
    }

    fn iri(&mut self) -> String {
        self.iris.choose(&mut self.rng).unwrap().clone()
    }

    fn num(&mut self) -> String {
        self.rng.gen_range(0..1000).to_string()
    }

    fn string(&mut self) -> String {
        format!("\"w{}\"", self.rng.gen_range(0..1000))
    }
}

/// Random query from the supported grammar. `structure` fixes every
/// syntactic decision; `fill` supplies the names, so one skeleton can be
/// rendered with different variables and constants.
pub fn random_query(structure: u64, fill: &mut Fill) -> String {
    let mut r = rng(structure);
    let body = group(&mut r, fill, 2);
    match r.gen_range(0..8) {
        0 => format!("ASK {{ {body} }}"),
        1 => {
            let (s, o) = (fill.var(0).to_string(), fill.var(1).to_string());
            let p = fill.iri();
            format!("CONSTRUCT {{ {s} {p} {o} }} WHERE {{ {body} }}")
        }
        _ => {
            let mut q = String::from("SELECT ");
            if r.gen_bool(0.3) {
                q.push_str("DISTINCT ");
            }
            if r.gen_bool(0.3) {
                q.push('*');
            } else {
                for slot in 0..r.gen_range(1..3) {
                    q.push_str(fill.var(slot));
                    q.push(' ');
                }
            }
            q.push_str(&format!(" WHERE {{ {body} }}"));
            if r.gen_bool(0.2) {
                q.push_str(&format!(" ORDER BY {}", fill.var(0)));
            }
            if r.gen_bool(0.3) {
                q.push_str(&format!(" LIMIT {}", r.gen_range(1..50)));
            }
            q
        }
    }
}

fn term(r: &mut ChaCha8Rng, fill: &mut Fill, object: bool) -> String {
    match r.gen_range(0..10) {
        0..=5 => fill.var(r.gen_range(0..3)).to_string(),
        6 | 7 => fill.iri(),
        8 if object => fill.num(),
        9 if object => fill.string(),
        _ => fill.iri(),
    }
}

fn predicate(r: &mut ChaCha8Rng, fill: &mut Fill) -> String {
    match r.gen_range(0..12) {
        0 => format!("{}/{}", fill.iri(), fill.iri()),
        1 => format!("({}|{})", fill.iri(), fill.iri()),
        2 => format!("^{}", fill.iri()),
        3 => format!("{}*", fill.iri()),
        4 => fill.var(3).to_string(),
        _ => fill.iri(),
    }
}

fn filter(r: &mut ChaCha8Rng, fill: &mut Fill) -> String {
    let v = fill.var(r.gen_range(0..3)).to_string();
    let w = fill.var(r.gen_range(0..3)).to_string();
    match r.gen_range(0..6) {
        0 => format!("FILTER({v} > {})", fill.num()),
        1 => format!("FILTER({v} != {})", fill.iri()),
        2 => format!("FILTER(regex({v}, {}))", fill.string()),
        3 => format!("FILTER({v} > {} && {w} < {})", fill.num(), fill.num()),
        4 => format!("FILTER({v} > ({w} + {}))", fill.num()),
        _ => format!("FILTER(!bound({v}))"),
    }
}

fn group(r: &mut ChaCha8Rng, fill: &mut Fill, depth: usize) -> String {
    let mut parts = Vec::new();
    for _ in 0..r.gen_range(1..=3) {
        let s = term(r, fill, false);
        let p = predicate(r, fill);
        let o = term(r, fill, true);
        parts.push(format!("{s} {p} {o} ."));
    }
    if depth > 0 {
        if r.gen_bool(0.3) {
            parts.push(format!("OPTIONAL {{ {} }}", group(r, fill, depth - 1)));
        }
        if r.gen_bool(0.2) {
            let (a, b) = (group(r, fill, depth - 1), group(r, fill, depth - 1));
            parts.push(format!("{{ {a} }} UNION {{ {b} }}"));
        }
        if r.gen_bool(0.1) {
            parts.push(format!("MINUS {{ {} }}", group(r, fill, depth - 1)));
        }
    }
    if r.gen_bool(0.4) {
        parts.push(filter(r, fill));
    }
    if r.gen_bool(0.1) {
        let v = fill.var(0).to_string();
        parts.push(format!("VALUES {v} {{ {} {} }}", fill.iri(), fill.iri()));
    }
    parts.join(" ")
}
