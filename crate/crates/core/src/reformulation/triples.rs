use super::locus::localize_substitution;
use super::{Change, TripleElement};
use crate::hypergraph::Hypergraph;
use crate::sparql::{BlockKey, QueryAst, TriplePattern};

/// Number of equal elements between two triple patterns.
pub fn agreement(a: &TriplePattern, b: &TriplePattern) -> usize {
    usize::from(a.subject == b.subject) + usize::from(a.predicate == b.predicate) + usize::from(a.object == b.object)
}

/// Elements that differ between two triple patterns, in s/p/o order.
pub fn changed_elements(a: &TriplePattern, b: &TriplePattern) -> Vec<TripleElement> {
    let mut out = Vec::new();
    if a.subject != b.subject {
        out.push(TripleElement::Subject);
    }
    if a.predicate != b.predicate {
        out.push(TripleElement::Predicate);
    }
    if a.object != b.object {
        out.push(TripleElement::Object);
    }
    out
}

/// Decides which triple patterns of two paired blocks correspond.
///
/// Returned pairs `(i, j)` index into `a` and `b`; each index appears at
/// most once and every pair agrees on at least one element.
pub trait TripleMatcher {
    fn match_triples(&self, a: &[TriplePattern], b: &[TriplePattern]) -> Vec<(usize, usize)>;
}

/// Highest agreement first, ties broken by document order of `a`, then `b`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GreedyAgreement;

impl TripleMatcher for GreedyAgreement {
    fn match_triples(&self, a: &[TriplePattern], b: &[TriplePattern]) -> Vec<(usize, usize)> {
        let mut candidates: Vec<(usize, usize, usize)> = Vec::new();
        for (i, ta) in a.iter().enumerate() {
            for (j, tb) in b.iter().enumerate() {
                let n = agreement(ta, tb);
                if n > 0 {
                    candidates.push((3 - n, i, j));
                }
            }
        }
        candidates.sort_unstable();
        let (mut used_a, mut used_b) = (vec![false; a.len()], vec![false; b.len()]);
        let mut out = Vec::new();
        for (_, i, j) in candidates {
            if !used_a[i] && !used_b[j] {
                used_a[i] = true;
                used_b[j] = true;
                out.push((i, j));
            }
        }
        out.sort_unstable();
        out
    }
}

/// Triple changes of one paired block: substitutions in `a` order, then
/// removals, then additions. `g1` is the block's hypergraph in the first
/// query, used to localize substitutions.
pub fn diff_block_triples(
    block: &BlockKey,
    a: &[TriplePattern],
    b: &[TriplePattern],
    g1: &Hypergraph,
    matcher: &dyn TripleMatcher,
) -> Vec<Change> {
    let pairs = matcher.match_triples(a, b);
    let mut out = Vec::new();
    let (mut used_a, mut used_b) = (vec![false; a.len()], vec![false; b.len()]);
    for &(i, j) in &pairs {
        used_a[i] = true;
        used_b[j] = true;
        let elements = changed_elements(&a[i], &b[j]);
        if !elements.is_empty() {
            let loci = localize_substitution(&a[i], &elements, g1);
            out.push(Change::TripleSubstituted {
                block: block.clone(),
                elements,
                loci,
            });
        }
    }
    out.extend(
        used_a
            .iter()
            .filter(|u| !**u)
            .map(|_| Change::TripleRemoved { block: block.clone() }),
    );
    out.extend(
        used_b
            .iter()
            .filter(|u| !**u)
            .map(|_| Change::TripleAdded { block: block.clone() }),
    );
    out
}

/// Triple changes over blocks present in both queries, in the first query's
/// block order.
pub fn diff_triples_with(a1: &QueryAst, a2: &QueryAst, matcher: &dyn TripleMatcher) -> Vec<Change> {
    let blocks2 = a2.blocks();
    let mut out = Vec::new();
    for (key, b1) in a1.blocks() {
        let Some((_, b2)) = blocks2.iter().find(|(k, _)| *k == key) else {
            continue;
        };
        if b1.triple_patterns == b2.triple_patterns {
            continue;
        }
        let g1 = Hypergraph::from_triples(&b1.triple_patterns);
        out.extend(diff_block_triples(
            &key,
            &b1.triple_patterns,
            &b2.triple_patterns,
            &g1,
            matcher,
        ));
    }
    out
}

pub fn diff_triples(a1: &QueryAst, a2: &QueryAst) -> Vec<Change> {
    diff_triples_with(a1, a2, &GreedyAgreement)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparql::parse;

    fn diff(a: &str, b: &str) -> Vec<Change> {
        diff_triples(&parse(a).unwrap(), &parse(b).unwrap())
    }

    fn main() -> BlockKey {
        "Main".parse().unwrap()
    }

    #[test]
    fn predicate_substitution() {
        assert_eq!(
            diff("SELECT * { ?s <p1> ?o }", "SELECT * { ?s <p2> ?o }"),
            vec![Change::TripleSubstituted {
                block: main(),
                elements: vec![TripleElement::Predicate],
                loci: vec![],
            }]
        );
    }

    #[test]
    fn addition() {
        assert_eq!(
            diff("SELECT * { ?s <p> ?o }", "SELECT * { ?s <p> ?o . ?o <q> ?z }"),
            vec![Change::TripleAdded { block: main() }]
        );
    }

    #[test]
    fn combined_substitution() {
        let d = diff("SELECT * { ?a <p> ?b }", "SELECT * { ?x <p> ?y }");
        assert_eq!(
            d,
            vec![Change::TripleSubstituted {
                block: main(),
                elements: vec![TripleElement::Subject, TripleElement::Object],
                loci: vec![],
            }]
        );
    }

    #[test]
    fn zero_agreement_is_add_and_remove() {
        assert_eq!(
            diff("SELECT * { ?a <p> ?b }", "SELECT * { ?x <q> ?y }"),
            vec![
                Change::TripleRemoved { block: main() },
                Change::TripleAdded { block: main() }
            ]
        );
    }

    #[test]
    fn higher_agreement_wins_over_document_order() {
        let a = [parse("ASK { ?s <p> ?o }").unwrap().body.unwrap().triple_patterns[0].clone()];
        let b: Vec<_> = parse("ASK { ?s <q> ?z . ?s <p> ?z }")
            .unwrap()
            .body
            .unwrap()
            .triple_patterns;
        assert_eq!(GreedyAgreement.match_triples(&a, &b), vec![(0, 1)]);
    }

    #[test]
    fn unpaired_blocks_are_ignored() {
        assert!(diff(
            "SELECT * { ?s <p> ?o }",
            "SELECT * { ?s <p> ?o OPTIONAL { ?o <q> ?z } }"
        )
        .is_empty());
        let d = diff(
            "SELECT * { ?s <p> ?o OPTIONAL { ?o <q> ?z } }",
            "SELECT * { ?s <p> ?o OPTIONAL { ?o <r> ?z } }",
        );
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].block().unwrap().to_string(), "Main/Optional#0");
    }
}
