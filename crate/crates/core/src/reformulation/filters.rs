use super::Change;
use crate::sparql::{BlockKey, FilterNode, FilterTree, LeafType, QueryAst};

/// Aligned differences between two FILTER trees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeDiff {
    Block,
    Specific(LeafType),
}

/// Walks both trees in parallel and reports each aligned position where they
/// differ. Leaves with the same type tag give a specific substitution; any
/// other mismatch (leaf vs operator, different operator name or arity,
/// different EXISTS group) is a block substitution and is not descended.
pub fn diff_trees(a: &FilterNode, b: &FilterNode, out: &mut Vec<TreeDiff>) {
    match (a, b) {
        (FilterNode::Leaf(x), FilterNode::Leaf(y)) => {
            if x != y {
                let (tx, ty) = (LeafType::of(x), LeafType::of(y));
                out.push(if tx == ty {
                    TreeDiff::Specific(tx)
                } else {
                    TreeDiff::Block
                });
            }
        }
        (FilterNode::Operator { name: n1, args: a1 }, FilterNode::Operator { name: n2, args: a2 })
            if n1 == n2 && a1.len() == a2.len() =>
        {
            for (x, y) in a1.iter().zip(a2) {
                diff_trees(x, y, out);
            }
        }
        _ => {
            if a != b {
                out.push(TreeDiff::Block);
            }
        }
    }
}

/// Pairs filters by root operator name, then document order. Returns the
/// index pairs plus the unpaired indices on each side.
pub fn pair_filters(a: &[FilterTree], b: &[FilterTree]) -> (Vec<(usize, usize)>, Vec<usize>, Vec<usize>) {
    let mut used = vec![false; b.len()];
    let mut pairs = Vec::new();
    let mut removed = Vec::new();
    for (i, fa) in a.iter().enumerate() {
        let head = fa.root.head_name();
        match (0..b.len()).find(|&j| !used[j] && b[j].root.head_name() == head) {
            Some(j) => {
                used[j] = true;
                pairs.push((i, j));
            }
            None => removed.push(i),
        }
    }
    let added = (0..b.len()).filter(|&j| !used[j]).collect();
    (pairs, removed, added)
}

pub fn diff_block_filters(block: &BlockKey, a: &[FilterTree], b: &[FilterTree]) -> Vec<Change> {
    let (pairs, removed, added) = pair_filters(a, b);
    let mut out = Vec::new();
    for (i, j) in pairs {
        let mut diffs = Vec::new();
        diff_trees(&a[i].root, &b[j].root, &mut diffs);
        out.extend(diffs.into_iter().map(|d| match d {
            TreeDiff::Block => Change::FilterBlockSubstitution { block: block.clone() },
            TreeDiff::Specific(type_tag) => Change::FilterSpecificSubstitution {
                block: block.clone(),
                type_tag,
            },
        }));
    }
    out.extend(removed.iter().map(|_| Change::FilterRemoved { block: block.clone() }));
    out.extend(added.iter().map(|_| Change::FilterAdded { block: block.clone() }));
    out
}

/// FILTER changes over blocks present in both queries. Filters never pair
/// across blocks.
pub fn diff_filters(a1: &QueryAst, a2: &QueryAst) -> Vec<Change> {
    let blocks2 = a2.blocks();
    let mut out = Vec::new();
    for (key, b1) in a1.blocks() {
        if let Some((_, b2)) = blocks2.iter().find(|(k, _)| *k == key) {
            if b1.filters != b2.filters {
                out.extend(diff_block_filters(&key, &b1.filters, &b2.filters));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparql::parse;

    fn diff(a: &str, b: &str) -> Vec<Change> {
        diff_filters(&parse(a).unwrap(), &parse(b).unwrap())
    }

    fn main() -> BlockKey {
        "Main".parse().unwrap()
    }

    #[test]
    fn specific_number() {
        assert_eq!(
            diff(
                "SELECT * { ?s <p> ?x FILTER(?x > 5) }",
                "SELECT * { ?s <p> ?x FILTER(?x > 10) }"
            ),
            vec![Change::FilterSpecificSubstitution {
                block: main(),
                type_tag: LeafType::Number
            }]
        );
    }

    #[test]
    fn value_vs_subexpression_is_block() {
        assert_eq!(
            diff(
                "SELECT * { ?s <p> ?x FILTER(?x > 5) }",
                "SELECT * { ?s <p> ?x FILTER(?x > (?y + 1)) }"
            ),
            vec![Change::FilterBlockSubstitution { block: main() }]
        );
    }

    #[test]
    fn specific_string() {
        assert_eq!(
            diff(
                r#"SELECT * { ?s <p> ?n FILTER(regex(?n, "foo")) }"#,
                r#"SELECT * { ?s <p> ?n FILTER(regex(?n, "bar")) }"#
            ),
            vec![Change::FilterSpecificSubstitution {
                block: main(),
                type_tag: LeafType::String
            }]
        );
    }

    #[test]
    fn different_leaf_types_and_arity() {
        assert_eq!(
            diff(
                "SELECT * { ?s <p> ?x FILTER(?x = 5) }",
                "SELECT * { ?s <p> ?x FILTER(?x = ?y) }"
            ),
            vec![Change::FilterBlockSubstitution { block: main() }]
        );
        assert_eq!(
            diff(
                r#"SELECT * { ?s <p> ?n FILTER(regex(?n, "a")) }"#,
                r#"SELECT * { ?s <p> ?n FILTER(regex(?n, "a", "i")) }"#
            ),
            vec![Change::FilterBlockSubstitution { block: main() }]
        );
    }

    #[test]
    fn pairing_by_root_then_order() {
        let d = diff(
            "SELECT * { ?s <p> ?x FILTER(?x > 1) FILTER(isIRI(?s)) }",
            "SELECT * { ?s <p> ?x FILTER(isIRI(?s)) FILTER(?x > 2) FILTER(?x < 9) }",
        );
        assert_eq!(
            d,
            vec![
                Change::FilterSpecificSubstitution {
                    block: main(),
                    type_tag: LeafType::Number
                },
                Change::FilterAdded { block: main() },
            ]
        );
        assert_eq!(
            diff(
                "SELECT * { ?s <p> ?x FILTER(?x > 1) }",
                "SELECT * { ?s <p> ?x FILTER(?x < 1) }"
            ),
            vec![
                Change::FilterRemoved { block: main() },
                Change::FilterAdded { block: main() }
            ]
        );
    }

    #[test]
    fn several_aligned_positions() {
        let d = diff(
            "SELECT * { ?s <p> ?x FILTER(?x > 1 && ?s != <a>) }",
            "SELECT * { ?s <p> ?x FILTER(?x > 2 && ?s != <b>) }",
        );
        assert_eq!(d.len(), 2);
        assert!(matches!(
            d[1],
            Change::FilterSpecificSubstitution {
                type_tag: LeafType::Iri,
                ..
            }
        ));
    }
}
