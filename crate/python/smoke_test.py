"""Smoke test for the bvqo extension module.

Build and place the module next to this script first:

    cargo build --release -p bvqo-py --features extension-module
    cp target/release/libbvqo.so python/bvqo.so
    python3 python/smoke_test.py
"""

import pathlib
import sys
import tempfile

HERE = pathlib.Path(__file__).resolve().parent
sys.path.insert(0, str(HERE))

import bvqo  # noqa: E402

WORKLOADS = HERE.parent / "workloads"


def main():
    graph = bvqo.JoinGraph.from_file(str(WORKLOADS / "snowflake3.json"))
    assert graph.shape() == "snowflake", graph.shape()
    assert len(graph) == 6
    assert graph.fact_tables() == ["F"]

    data = bvqo.Dataset.generate(graph, 7)
    assert data.row_count("F") > 0

    candidates = bvqo.candidates(graph)
    assert len(candidates) == len(graph)
    assert all(p.is_right_deep() and not p.has_cross_product() for p in candidates)

    report = bvqo.verify(graph, data, seed=7)
    assert report["verdict"] == "TheoremHolds", report
    assert report["candidate_min"] == report["global_min"]
    assert bvqo.plan_space_size(graph) == report["plan_space_size"]

    aware = bvqo.optimize(graph, data)
    base = bvqo.baseline(graph)
    assert aware.cout(data) <= base.cout(data)
    aware_run = bvqo.execute(aware, data)
    base_run = bvqo.execute(base, data)
    assert aware_run["result_rows"] == base_run["result_rows"]
    assert aware_run["output_counts"][0] == aware_run["result_rows"]

    gated = aware.gated(data, threshold=0.99)
    assert gated.filter_count() <= aware.filter_count()

    cyclic = bvqo.JoinGraph.from_file(str(WORKLOADS / "cyclic4.json"))
    plan = bvqo.Plan.right_deep(cyclic, ["B", "A", "C", "D"])
    assert "F1: HJ#2 -> SCAN B" in plan.explain()
    assert plan.right_deep_order() == ["B", "A", "C", "D"]

    with tempfile.TemporaryDirectory() as tmp:
        data.write(tmp)
        again = bvqo.Dataset.load(graph, tmp)
        assert bvqo.execute(aware, again) == aware_run

    assert bvqo.lambda_threshold() == 0.9
    bench = bvqo.breakeven(fact_size=10_000, dim_size=200)
    assert 0.0 < bench["break_even"] < 0.3
    assert len(bench["rows"]) == 20

    try:
        bvqo.JoinGraph.from_json("{not json")
    except ValueError:
        pass
    else:
        raise AssertionError("malformed workload accepted")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
