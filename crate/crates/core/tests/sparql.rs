mod common;

use std::collections::BTreeMap;

use common::{fixture, random_query, synthetic_log, Fill};
use proptest::prelude::*;
use sparql_session::sparql::{operator_inventory, parse, serialize, template_of};

#[derive(serde::Deserialize)]
struct Census {
    query: String,
    operators: BTreeMap<String, usize>,
}

#[test]
fn inventory_matches_hand_census() {
    let text = std::fs::read_to_string(fixture("inventory.json")).unwrap();
    let cases: Vec<Census> = serde_json::from_str(&text).unwrap();
    assert_eq!(cases.len(), 20);
    for c in cases {
        let ast = parse(&c.query).unwrap_or_else(|e| panic!("{}: {e}", c.query));
        let got: BTreeMap<String, usize> = operator_inventory(&ast)
            .into_iter()
            .map(|(t, n)| (t.to_string(), n))
            .collect();
        assert_eq!(got, c.operators, "{}", c.query);
    }
}

fn assert_round_trip(text: &str) {
    let a = parse(text).unwrap_or_else(|e| panic!("{text}: {e}"));
    let printed = serialize(&a);
    let b = parse(&printed).unwrap_or_else(|e| panic!("{printed}: {e}"));
    assert!(a.same_structure(&b), "{text}\n{printed}");
}

#[test]
fn fixture_and_log_queries_round_trip() {
    let census: Vec<Census> =
        serde_json::from_str(&std::fs::read_to_string(fixture("inventory.json")).unwrap()).unwrap();
    for c in &census {
        assert_round_trip(&c.query);
    }
    for line in synthetic_log(3, 300).lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_round_trip(v["query"].as_str().unwrap());
    }
}

#[test]
fn update_requests_are_rejected() {
    assert!(parse("INSERT DATA { <http://e/a> <http://e/b> <http://e/c> }").is_err());
    assert!(parse("DELETE WHERE { ?s ?p ?o }").is_err());
}

proptest! {
    #[test]
    fn generated_queries_round_trip(structure in any::<u64>(), names in any::<u64>()) {
        let q = random_query(structure, &mut Fill::shared(names));
        let a = parse(&q).map_err(|e| TestCaseError::fail(format!("{q}: {e}")))?;
        let b = parse(&serialize(&a)).map_err(|e| TestCaseError::fail(format!("{}: {e}", serialize(&a))))?;
        prop_assert!(a.same_structure(&b), "{}", q);
        prop_assert_eq!(serialize(&a), serialize(&b));
    }

    #[test]
    fn template_ignores_names_and_constants(structure in any::<u64>(), n1 in any::<u64>(), n2 in any::<u64>()) {
        let q1 = random_query(structure, &mut Fill::new(n1, &["a", "b", "c", "d"], "one.org", 6));
        let q2 = random_query(structure, &mut Fill::new(n2, &["w", "x", "y", "z"], "two.net", 3));
        let t1 = template_of(&parse(&q1).unwrap());
        let t2 = template_of(&parse(&q2).unwrap());
        prop_assert_eq!(t1, t2, "{}\n{}", q1, q2);
    }

    #[test]
    fn extra_triple_changes_template(structure in any::<u64>(), names in any::<u64>()) {
        let q = random_query(structure, &mut Fill::shared(names));
        let a = parse(&q).unwrap();
        let open = q.find('{').unwrap();
        let longer = format!("{}{{ ?extra <http://e/p> ?s . {}", &q[..open], &q[open + 1..]);
        let b = parse(&longer).unwrap();
        prop_assert_ne!(template_of(&a), template_of(&b));
    }
}
