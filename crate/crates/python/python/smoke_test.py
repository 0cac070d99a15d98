"""Smoke test for the compiled extension.

Build it first, e.g. `pip install --no-build-isolation -e crates/python`.
"""

import json
import math
import os
import sys
import tempfile

import sparql_session as ss

Q1 = "SELECT ?s WHERE { ?s <http://x/p> ?o . ?o <http://x/q> 3 }"
Q2 = "SELECT DISTINCT ?s WHERE { ?s <http://x/p> ?o . ?o <http://x/r> 3 FILTER(?o != 1) }"


def check_parsing():
    ss.check_query(Q1)
    try:
        ss.check_query("SELECT WHERE {")
    except ValueError as e:
        assert "offset" in str(e), e
    else:
        raise AssertionError("malformed query accepted")
    inv = dict(ss.operator_inventory(Q2))
    assert inv["Distinct"] == 1 and inv["Filter"] == 1, inv
    assert ss.query_template(Q1) == ss.query_template(Q1.replace("3", "4"))


def check_metrics():
    assert ss.query_ged(Q1, Q1) == (0.0, True)
    d, exact = ss.query_ged(Q1, Q2)
    assert 0.0 < d <= 1.0 and exact
    v = ss.feature_vector(Q1)
    assert math.isclose(ss.cosine(v, v), 1.0)
    assert ss.kl_divergence(v, v) == 0.0


def check_events():
    kinds = [e["kind"] for e in ss.diff_queries(Q1, Q2)]
    assert "OperatorAdded" in kinds and "TripleSubstituted" in kinds, kinds
    events = ss.pair_events("s1", [Q1, Q2, Q1])
    assert {e["pair"] for e in events} == {0, 1}


def check_pipeline():
    rows = []
    sizes = [5, 9, 2, 2, 7, 1, 4, 4]
    shapes = [
        "?s <http://x/p> ?o",
        "?s <http://x/p> ?o . ?o <http://x/q> ?z",
        "?s <http://x/p> ?o FILTER(?o > 2)",
        "?s <http://x/r> ?o",
    ] * 2
    for i, (n, body) in enumerate(zip(sizes, shapes)):
        rows.append({
            "dataset": "d",
            "user": "u%d" % (i // 4),
            "time": "2024-01-01T10:%02d:00Z" % i,
            "query": "SELECT * WHERE { %s }" % body,
            "resultSize": n,
        })
    with tempfile.TemporaryDirectory() as tmp:
        log = os.path.join(tmp, "log.ndjson")
        with open(log, "w") as f:
            f.writelines(json.dumps(r) + "\n" for r in rows)
        out = os.path.join(tmp, "out")
        report = ss.run_pipeline(json.dumps({"input": log, "output": out}))
        assert report["filterReport"]["sessionCount"] == 2, report["filterReport"]
        with open(os.path.join(out, "model.json")) as f:
            model = ss.HmmModel.from_json(f.read())
    obs = ["SubPredicate", "NoTripleChange"]
    ranked = ss.HmmModel.suggest(model, obs)
    assert math.isclose(sum(s for _, s in ranked), 1.0)
    path, p = model.decode(obs)
    assert len(path) == 2 and p <= model.forward(obs) + 1e-12


def main():
    for check in (check_parsing, check_metrics, check_events, check_pipeline):
        check()
        print("ok", check.__name__)
    return 0


if __name__ == "__main__":
    sys.exit(main())
