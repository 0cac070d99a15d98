use super::Change;
use crate::sparql::{operator_inventory, OperatorTag, QueryAst};

/// Form change first, then presence-based operator removals and additions in
/// tag order. Occurrence counts do not matter, only presence.
pub fn diff_operators(a1: &QueryAst, a2: &QueryAst) -> Vec<Change> {
    let mut out = Vec::new();
    if a1.form != a2.form {
        out.push(Change::FormChange {
            from: a1.form,
            to: a2.form,
        });
    }
    let (i1, i2) = (operator_inventory(a1), operator_inventory(a2));
    for tag in OperatorTag::ALL {
        match (i1.contains_key(&tag), i2.contains_key(&tag)) {
            (true, false) => out.push(Change::OperatorRemoved(tag)),
            (false, true) => out.push(Change::OperatorAdded(tag)),
            _ => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparql::{parse, QueryForm};

    fn diff(a: &str, b: &str) -> Vec<Change> {
        diff_operators(&parse(a).unwrap(), &parse(b).unwrap())
    }

    #[test]
    fn form_change() {
        assert_eq!(
            diff("SELECT * { ?s <p> ?o }", "CONSTRUCT { ?s <p> ?o } WHERE { ?s <p> ?o }"),
            vec![Change::FormChange {
                from: QueryForm::Select,
                to: QueryForm::Construct
            }]
        );
    }

    #[test]
    fn filter_added_and_presence_only() {
        assert_eq!(
            diff("SELECT * { ?s <p> ?o }", "SELECT * { ?s <p> ?o FILTER(?o > 1) }"),
            vec![Change::OperatorAdded(OperatorTag::Filter)]
        );
        assert!(diff(
            "SELECT * { ?s <p> ?o FILTER(?o > 1) }",
            "SELECT * { ?s <p> ?o FILTER(?o > 1) FILTER(?o < 9) }"
        )
        .is_empty());
        let q = "SELECT DISTINCT ?s { ?s <p> ?o } LIMIT 3";
        assert!(diff(q, q).is_empty());
    }

    #[test]
    fn removals_and_additions_in_tag_order() {
        assert_eq!(
            diff(
                "SELECT ?s { ?s <p> ?o OPTIONAL { ?o <q> ?z } } LIMIT 10",
                "SELECT * { { ?s <p> ?o } UNION { ?s <q> ?o } }"
            ),
            vec![
                Change::OperatorAdded(OperatorTag::Union),
                Change::OperatorRemoved(OperatorTag::Optional),
                Change::OperatorRemoved(OperatorTag::Projection),
                Change::OperatorRemoved(OperatorTag::Limit),
            ]
        );
    }
}
