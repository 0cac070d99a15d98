use super::{LocusPosition, SubstitutionLocus, TripleElement};
use crate::hypergraph::{term_label, Hypergraph, JoinKind};
use crate::sparql::{Term, TriplePattern};

fn join_kind(g: &Hypergraph, t: &Term) -> Option<JoinKind> {
    let v = g.vertex(&term_label(t))?;
    JoinKind::classify(g.in_degree(v), g.out_degree(v))
}

/// Loci of a substitution on `source`, a triple of `g`, relative to the join
/// vertices at its two ends.
///
/// A changed subject or object that is itself a join vertex is the center.
/// A changed subject or object hanging off a join vertex at the other end is
/// a neighbor node: for a Hybrid vertex an edge leaving it leads to an out
/// node and an edge entering it comes from an in node; Path vertices have no
/// node bucket. A changed predicate is a neighbor edge of each join end
/// (out edge for a Hybrid subject, in edge for a Hybrid object). Predicates
/// never act as centers. Loci are deduplicated in order of discovery.
pub fn localize_substitution(
    source: &TriplePattern,
    elements: &[TripleElement],
    g: &Hypergraph,
) -> Vec<SubstitutionLocus> {
    let s_kind = join_kind(g, &source.subject);
    let o_kind = join_kind(g, &source.object);
    let mut out: Vec<SubstitutionLocus> = Vec::new();
    let mut push = |join_kind: JoinKind, position: LocusPosition| {
        let l = SubstitutionLocus { join_kind, position };
        if !out.contains(&l) {
            out.push(l);
        }
    };
    for e in elements {
        match e {
            TripleElement::Subject => {
                if let Some(k) = s_kind {
                    push(k, LocusPosition::Center);
                }
                match o_kind {
                    Some(JoinKind::Hybrid) => push(JoinKind::Hybrid, LocusPosition::InNode),
                    Some(JoinKind::Path) | None => {}
                    Some(k) => push(k, LocusPosition::NeighborNode),
                }
            }
            TripleElement::Object => {
                if let Some(k) = o_kind {
                    push(k, LocusPosition::Center);
                }
                match s_kind {
                    Some(JoinKind::Hybrid) => push(JoinKind::Hybrid, LocusPosition::OutNode),
                    Some(JoinKind::Path) | None => {}
                    Some(k) => push(k, LocusPosition::NeighborNode),
                }
            }
            TripleElement::Predicate => {
                match s_kind {
                    Some(JoinKind::Hybrid) => push(JoinKind::Hybrid, LocusPosition::OutEdge),
                    Some(k) => push(k, LocusPosition::NeighborEdge),
                    None => {}
                }
                match o_kind {
                    Some(JoinKind::Hybrid) => push(JoinKind::Hybrid, LocusPosition::InEdge),
                    Some(k) => push(k, LocusPosition::NeighborEdge),
                    None => {}
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparql::parse;

    fn setup(q: &str, i: usize) -> (TriplePattern, Hypergraph) {
        let tps = parse(q).unwrap().body.unwrap().triple_patterns;
        let g = Hypergraph::from_triples(&tps);
        (tps[i].clone(), g)
    }

    fn loci(q: &str, i: usize, e: &[TripleElement]) -> Vec<(JoinKind, LocusPosition)> {
        let (tp, g) = setup(q, i);
        localize_substitution(&tp, e, &g)
            .into_iter()
            .map(|l| (l.join_kind, l.position))
            .collect()
    }

    #[test]
    fn star_center() {
        assert_eq!(
            loci("ASK { ?s <p> ?a . ?s <q> ?b }", 0, &[TripleElement::Subject]),
            [(JoinKind::Star, LocusPosition::Center)]
        );
        assert_eq!(
            loci("ASK { ?s <p> ?a . ?s <q> ?b }", 0, &[TripleElement::Object]),
            [(JoinKind::Star, LocusPosition::NeighborNode)]
        );
        assert_eq!(
            loci("ASK { ?s <p> ?a . ?s <q> ?b }", 0, &[TripleElement::Predicate]),
            [(JoinKind::Star, LocusPosition::NeighborEdge)]
        );
    }

    #[test]
    fn hybrid_in_node() {
        // ?h: two incoming, one outgoing
        let q = "ASK { ?x <p> ?h . ?y <p> ?h . ?h <q> ?z }";
        assert_eq!(
            loci(q, 0, &[TripleElement::Subject]),
            [(JoinKind::Hybrid, LocusPosition::InNode)]
        );
        assert_eq!(
            loci(q, 2, &[TripleElement::Object]),
            [(JoinKind::Hybrid, LocusPosition::OutNode)]
        );
        assert_eq!(
            loci(q, 0, &[TripleElement::Predicate]),
            [(JoinKind::Hybrid, LocusPosition::InEdge)]
        );
        assert_eq!(
            loci(q, 2, &[TripleElement::Predicate]),
            [(JoinKind::Hybrid, LocusPosition::OutEdge)]
        );
        assert_eq!(
            loci(q, 0, &[TripleElement::Object]),
            [(JoinKind::Hybrid, LocusPosition::Center)]
        );
    }

    #[test]
    fn path_has_no_node_bucket() {
        let q = "ASK { ?a <p> ?m . ?m <q> ?b }";
        assert!(loci(q, 0, &[TripleElement::Subject]).is_empty());
        assert_eq!(
            loci(q, 0, &[TripleElement::Predicate]),
            [(JoinKind::Path, LocusPosition::NeighborEdge)]
        );
        assert_eq!(
            loci(q, 1, &[TripleElement::Subject]),
            [(JoinKind::Path, LocusPosition::Center)]
        );
    }

    #[test]
    fn no_join_vertex() {
        assert!(loci("ASK { ?s <p> ?o }", 0, &TripleElement::ALL).is_empty());
    }

    #[test]
    fn both_ends_and_dedup() {
        // ?s star (out 2), ?o sink (in 2); the edge ?s <p> ?o touches both
        let q = "ASK { ?s <p> ?o . ?s <q> ?a . ?b <r> ?o }";
        assert_eq!(
            loci(q, 0, &[TripleElement::Subject, TripleElement::Object]),
            [
                (JoinKind::Star, LocusPosition::Center),
                (JoinKind::Sink, LocusPosition::NeighborNode),
                (JoinKind::Sink, LocusPosition::Center),
                (JoinKind::Star, LocusPosition::NeighborNode),
            ]
        );
        assert_eq!(
            loci(q, 0, &[TripleElement::Predicate]),
            [
                (JoinKind::Star, LocusPosition::NeighborEdge),
                (JoinKind::Sink, LocusPosition::NeighborEdge)
            ]
        );
    }
}
