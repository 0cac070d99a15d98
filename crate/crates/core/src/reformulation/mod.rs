//! Reformulation events between contiguous queries of a session: query-form
//! changes, operator additions and removals, triple-pattern changes per
//! operator block with join-vertex loci, and FILTER tree substitutions.

mod events;
mod filters;
mod locus;
mod operators;
mod triples;

use rayon::prelude::*;

pub use events::{
    read_events, write_events, Change, ChangeKind, EventRecord, LocusPosition, ReformulationEvent, SubstitutionLocus,
    TripleElement,
};
pub use filters::{diff_block_filters, diff_filters, diff_trees, pair_filters, TreeDiff};
pub use locus::localize_substitution;
pub use operators::diff_operators;
pub use triples::{
    agreement, changed_elements, diff_block_triples, diff_triples, diff_triples_with, GreedyAgreement, TripleMatcher,
};

use crate::corpus::ParsedSession;
use crate::sparql::QueryAst;

/// All changes from `a1` to `a2`: operators, then triples, then filters.
pub fn diff_pair(a1: &QueryAst, a2: &QueryAst) -> Vec<Change> {
    diff_pair_with(a1, a2, &GreedyAgreement)
}

pub fn diff_pair_with(a1: &QueryAst, a2: &QueryAst, matcher: &dyn TripleMatcher) -> Vec<Change> {
    let mut out = diff_operators(a1, a2);
    out.extend(diff_triples_with(a1, a2, matcher));
    out.extend(diff_filters(a1, a2));
    out
}

/// Events of every contiguous pair of one session, tagged `(session, i)`.
pub fn pair_events(session: &str, asts: &[QueryAst]) -> Vec<ReformulationEvent> {
    asts.windows(2)
        .enumerate()
        .flat_map(|(i, w)| {
            diff_pair(&w[0], &w[1])
                .into_iter()
                .map(move |change| ReformulationEvent {
                    session: session.to_string(),
                    pair: i,
                    change,
                })
        })
        .collect()
}

/// Events of many sessions, computed in parallel and kept in session order.
pub fn corpus_events(sessions: &[ParsedSession]) -> Vec<ReformulationEvent> {
    sessions
        .par_iter()
        .map(|s| pair_events(s.id(), &s.asts))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparql::parse;

    fn asts(qs: &[&str]) -> Vec<QueryAst> {
        qs.iter().map(|q| parse(q).unwrap()).collect()
    }

    #[test]
    fn identical_session_has_no_events() {
        assert!(pair_events("s", &asts(&["SELECT * { ?s <p> ?o FILTER(?o > 1) }"; 4])).is_empty());
    }

    #[test]
    fn one_substitution_per_step() {
        let ev = pair_events(
            "d:u:0",
            &asts(&[
                "SELECT * { ?s <p1> ?o }",
                "SELECT * { ?s <p2> ?o }",
                "SELECT * { ?s <p3> ?o }",
            ]),
        );
        assert_eq!(ev.len(), 2);
        assert!(ev.iter().all(|e| e.change.kind() == ChangeKind::TripleSubstituted));
        assert_eq!((ev[0].pair, ev[1].pair), (0, 1));
    }

    #[test]
    fn swapping_reverses_events() {
        let a = parse("SELECT ?s { ?s <p> ?o . ?s <q> ?z FILTER(?z > 3) } LIMIT 5").unwrap();
        let b = parse("SELECT * { ?s <p> ?x OPTIONAL { ?x <r> ?w } FILTER(?z > 4) FILTER(bound(?w)) }").unwrap();
        let mut fwd: Vec<String> = diff_pair(&a, &b)
            .iter()
            .map(|c| format!("{:?}", c.reversed().without_loci()))
            .collect();
        let mut back: Vec<String> = diff_pair(&b, &a)
            .iter()
            .map(|c| format!("{:?}", c.without_loci()))
            .collect();
        fwd.sort();
        back.sort();
        assert_eq!(fwd, back);
    }
}
