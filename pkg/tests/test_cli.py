import json

import pytest

from mlqls.cli import cmd_bench, main, parse_device_spec


def test_parse_device_specs():
    assert parse_device_spec("grid:3").num_physical == 9
    assert parse_device_spec("path:5").num_physical == 5
    assert parse_device_spec("sycamore").num_physical == 54
    assert parse_device_spec("eagle").num_physical == 127
    with pytest.raises(ValueError):
        parse_device_spec("hexagon:3")


def test_compile_gen_writes_reverifiable_bundle(tmp_path):
    out = tmp_path / "sol.json"
    rc = main(
        [
            "compile",
            "--device", "grid:3",
            "--gen", "chain:n=6",
            "--mode", "srefine",
            "--seed", "1",
            "--budget-scale", "0.001",
            "--out", str(out),
        ]
    )
    assert rc == 0
    bundle = json.loads(out.read_text())
    assert bundle["meta"]["swaps"] == bundle["solution"]["swap_count"]
    rc = main(["compile", "--mode", "verify", "--solution", str(out)])
    assert rc == 0


def test_verify_rejects_mutated_solution(tmp_path):
    out = tmp_path / "sol.json"
    main(
        [
            "compile",
            "--device", "path:4",
            "--gen", "chain:n=4",
            "--mode", "exact",
            "--budget-scale", "0.01",
            "--out", str(out),
        ]
    )
    bundle = json.loads(out.read_text())
    # permute the first block's mapping
    blocks = bundle["solution"]["blocks"]
    blocks[0]["mapping"][0], blocks[0]["mapping"][1] = (
        blocks[0]["mapping"][1],
        blocks[0]["mapping"][0],
    )
    mutated = tmp_path / "mutated.json"
    mutated.write_text(json.dumps(bundle))
    assert main(["compile", "--mode", "verify", "--solution", str(mutated)]) == 1


def test_compile_qasm_file(tmp_path):
    qasm = tmp_path / "c.qasm"
    qasm.write_text("OPENQASM 2.0;\nqreg q[3];\nh q[0];\ncx q[0],q[1];\ncx q[1],q[2];\n")
    out = tmp_path / "sol.json"
    rc = main(
        [
            "compile",
            "--device", "path:4",
            "--circuit", str(qasm),
            "--mode", "vcycle",
            "--budget-scale", "0.001",
            "--out", str(out),
        ]
    )
    assert rc == 0
    bundle = json.loads(out.read_text())
    assert bundle["meta"]["swaps"] == 0


def test_compile_requires_exactly_one_source(tmp_path):
    rc = main(["compile", "--device", "path:4", "--mode", "srefine"])
    assert rc == 2


def test_bench_chain_suite(tmp_path, capsys):
    out = tmp_path / "results.csv"
    rc = cmd_bench(
        "chain",
        devices=[],
        depths=[],
        sizes=[4, 6],
        seeds=2,
        modes=["srefine", "vcycle"],
        out=str(out),
        budget_scale=0.001,
    )
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 1 + 2 * 2 * 2  # header + sizes x seeds x modes
    md = (tmp_path / "results.md").read_text()
    assert "Geo. ratio" in md
    # every chain instance embeds; both modes report zero swaps
    for line in lines[1:]:
        assert line.split(",")[7] == "0"


def test_bench_deterministic(tmp_path):
    kwargs = dict(
        devices=[], depths=[], sizes=[4], seeds=2,
        modes=["srefine"], budget_scale=0.001,
    )
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    cmd_bench("qaoa", out=str(a), **kwargs)
    cmd_bench("qaoa", out=str(b), **kwargs)
    strip = lambda text: [
        ",".join(col for i, col in enumerate(line.split(",")) if i != 9)  # drop seconds
        for line in text.strip().splitlines()
    ]
    assert strip(a.read_text()) == strip(b.read_text())


def test_bench_geo_ratio_of_mode_against_itself(tmp_path):
    out = tmp_path / "r.csv"
    cmd_bench(
        "chain", devices=[], depths=[], sizes=[5], seeds=1,
        modes=["srefine"], out=str(out), budget_scale=0.001,
    )
    md = (tmp_path / "r.md").read_text()
    assert "srefine=1.00" in md


def test_device_file_loading(tmp_path):
    dev = tmp_path / "dev.json"
    dev.write_text(
        json.dumps({"name": "toy", "num_qubits": 3, "edges": [[0, 1], [1, 2]]})
    )
    g = parse_device_spec(f"file:{dev}")
    assert g.num_physical == 3 and g.name == "toy"


def test_verify_bare_solution_with_flags(tmp_path):
    from mlqls import Circuit, Mapping, make_device, to_qasm
    from mlqls.srefine import astar_insert
    from mlqls.verify import solution_to_json
    import random as _random

    c = Circuit.from_pairs(3, [(0, 1), (1, 2)])
    dev = make_device("path", 3)
    sol = astar_insert(c, dev, Mapping((0, 1, 2)), rng=_random.Random(0))
    sol_file = tmp_path / "bare.json"
    sol_file.write_text(json.dumps(solution_to_json(sol)))
    qasm = tmp_path / "c.qasm"
    qasm.write_text(to_qasm(c))
    rc = main(
        [
            "compile", "--mode", "verify",
            "--solution", str(sol_file),
            "--circuit", str(qasm),
            "--device", "path:3",
        ]
    )
    assert rc == 0


def test_dump_levels_embeds_hierarchy(tmp_path):
    out = tmp_path / "sol.json"
    rc = main(
        [
            "compile",
            "--device", "grid:3",
            "--gen", "qaoa:n=8",
            "--mode", "vcycle",
            "--budget-scale", "0.001",
            "--dump-levels",
            "--out", str(out),
        ]
    )
    assert rc == 0
    bundle = json.loads(out.read_text())
    assert "levels" in bundle["meta"]
    assert bundle["meta"]["levels"]["levels"][0]["qubits"] == 8


def test_bench_parallel_workers(tmp_path, monkeypatch):
    monkeypatch.setenv("MLQLS_THREADS", "2")
    out = tmp_path / "p.csv"
    rc = cmd_bench(
        "chain", devices=[], depths=[], sizes=[4, 5], seeds=1,
        modes=["srefine"], out=str(out), budget_scale=0.001,
    )
    assert rc == 0
    assert len(out.read_text().strip().splitlines()) == 3


def test_queko_bench_counts_rows(tmp_path):
    out = tmp_path / "q.csv"
    cmd_bench(
        "queko", devices=["grid:3"], depths=[2, 3], sizes=[], seeds=2,
        modes=["srefine"], out=str(out), budget_scale=0.001,
    )
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 1 + 2 * 2
