import json

import pytest

from walk_oracle.cli import bench_expander, main, parse_gens, parse_sizes, read_queries, UsageError
from walk_oracle.graph_core import GraphInputError, read_graph


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_gen_writes_header_and_meta(tmp_path):
    out = str(tmp_path / "g.txt")
    assert main(["gen", "--family", "regular", "--n", "8", "--d", "2", "--seed", "1",
                 "--out", out]) == 0
    assert open(out).readline().strip() == "8 2 undirected"
    meta = json.loads(open(out + ".meta.json").read())
    assert meta["seed"] == 1 and meta["graph"]["n"] == 8
    assert read_graph(out).is_simple()


def test_gen_cayley_labels(tmp_path):
    out = str(tmp_path / "c.txt")
    assert main(["gen", "--family", "cayley", "--moduli", "6", "--gens", "1,-1",
                 "--out", out]) == 0
    assert read_graph(out, out + ".labels").labels is not None


def test_walk_is_deterministic(tmp_path, capsys):
    g = str(tmp_path / "k.txt")
    main(["gen", "--family", "complete", "--n", "4", "--out", g])
    q = write(tmp_path, "q.txt", "# times\n5\n1000000\n3\n")
    args = ["walk", "--graph", g, "--queries", q, "--lambda", "0.34", "--seed", "3"]
    capsys.readouterr()
    assert main(args) == 0
    first = capsys.readouterr().out
    assert main(args) == 0
    assert capsys.readouterr().out == first
    lines = first.splitlines()
    assert lines[0].startswith("# ") and json.loads(lines[0][2:])["seed"] == 3
    assert [ln.split()[0] for ln in lines[1:]] == ["5", "1000000", "3"]


def test_walk_abelian_without_graph(tmp_path, capsys):
    q = write(tmp_path, "q.txt", "1000000000000\n7\n")
    assert main(["walk", "--algo", "abelian", "--moduli", "2,2,2", "--gens", "1,0,0;0,1,0;0,0,1",
                 "--queries", q, "--seed", "1"]) == 0
    body = capsys.readouterr().out.splitlines()[1:]
    assert all(0 <= int(ln.split()[1]) < 8 for ln in body)


def test_verify_passes_on_dense(tmp_path, capsys):
    g = str(tmp_path / "k.txt")
    main(["gen", "--family", "complete", "--n", "4", "--out", g])
    q = write(tmp_path, "q.txt", "3\n1\n")
    rep = str(tmp_path / "r.jsonl")
    assert main(["verify", "--graph", g, "--algo", "dense", "--queries", q, "--samples", "20000",
                 "--seed", "2", "--report", rep]) == 0
    rows = [json.loads(x) for x in open(rep)]
    assert rows[0]["kind"] == "verify" and rows[1]["passed"]


def test_verify_fails_with_tight_threshold(tmp_path, capsys):
    g = str(tmp_path / "k.txt")
    main(["gen", "--family", "complete", "--n", "4", "--out", g])
    q = write(tmp_path, "q.txt", "3\n1\n")
    assert main(["verify", "--graph", g, "--algo", "dense", "--queries", q, "--samples", "200",
                 "--threshold", "0.0001", "--seed", "2"]) == 1


def test_attack_report(tmp_path, capsys):
    rep = str(tmp_path / "a.jsonl")
    assert main(["attack", "--target", "cheater", "--n", "256", "--trials", "3", "--seed", "0",
                 "--report", rep]) == 0
    rows = [json.loads(x) for x in open(rep)]
    assert rows[-1]["summary"] and rows[-1]["verdict_rate"] == 1.0
    assert "F=1 in 1.000" in capsys.readouterr().out


def test_bench_small():
    res = bench_expander([64, 128], 3, 3, 0.9, 0.1, seed=0)
    assert len(res["rows"]) == 2 and res["rows"][0]["n"] == 64
    assert res["rows"][0]["mean_probes_per_query"] > 0


def test_selftest_small(capsys, tmp_path):
    # the timing ratio is load dependent, so only the distribution cases are pinned here
    rep = str(tmp_path / "s.jsonl")
    main(["sample-selftest", "--draws", "20000", "--seed", "1", "--report", rep])
    assert "ratio" in capsys.readouterr().out
    rows = [json.loads(x) for x in open(rep)]
    cases = [r for r in rows[1:] if "sampler" in r]
    assert len(cases) == 8 and all(c["passed"] for c in cases)


@pytest.mark.parametrize("argv", [
    ["walk", "--graph", "x"],                                   # missing --queries
    ["gen", "--family", "regular", "--out", "x", "--n", "nope"],
    ["bench", "--algo", "abelian"],
    ["attack", "--target", "cheater"],                           # no --n and no graph
    ["walk", "--algo", "abelian", "--queries", "-"],           # no moduli
    [],
])
def test_usage_errors_exit_2(argv, monkeypatch):
    import io

    monkeypatch.setattr("sys.stdin", io.StringIO("1\n"))
    assert main(argv) == 2


def test_runtime_errors_exit_1(tmp_path):
    bad = write(tmp_path, "bad.txt", "3 2 undirected\n1 2\n")
    q = write(tmp_path, "q.txt", "1\n")
    assert main(["walk", "--graph", bad, "--queries", q]) == 1
    assert main(["walk", "--graph", str(tmp_path / "missing"), "--queries", q]) == 1
    g = str(tmp_path / "c.txt")
    main(["gen", "--family", "cycle", "--n", "4", "--out", g])
    # a bipartite cycle has lambda = 1, so no spectral bound can be estimated
    assert main(["walk", "--graph", g, "--queries", q]) == 1


def test_helpers(tmp_path):
    assert parse_sizes("256..2048") == [256, 512, 1024, 2048]
    assert parse_sizes("10,20") == [10, 20]
    with pytest.raises(UsageError):
        parse_sizes("5..2")
    assert parse_gens("1,0;0,-1", (3, 4)) == ((1, 0), (0, 3))
    with pytest.raises(UsageError):
        parse_gens("1,0,2", (3, 4))
    assert read_queries(write(tmp_path, "q", "1 # one\n\n2\n")) == [1, 2]
    with pytest.raises(GraphInputError):
        read_queries(write(tmp_path, "q2", "-4\n"))
