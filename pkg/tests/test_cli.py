import json

import pytest

from mstsim.cli import main, parse_faults, summarize
from mstsim.errors import SimError
from mstsim.graph import generate_graph, parse_graph, format_graph


def _construct(tmp_path, spec="random:n=24:seed=7"):
    out = tmp_path / "c"
    assert main(["run", "--mode", "construct", "--graph", spec, "--out", str(out)]) == 0
    return out


def test_construct_writes_artifacts(tmp_path, capsys):
    out = _construct(tmp_path, "random:n=64:seed=7")
    row = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert row["oracle_match"] is True and row["rounds"] <= 44 * 64
    assert {p.name for p in out.iterdir()} >= {"metrics.csv", "graph.txt", "tree.txt", "labels.txt"}


def test_graph_file_round_trip(tmp_path):
    out = _construct(tmp_path)
    g = parse_graph((out / "graph.txt").read_text())
    assert format_graph(g) == (out / "graph.txt").read_text()
    assert g == generate_graph("random-connected", 24, seed=7)


def test_verify_only_accepts_marker_output(tmp_path, capsys):
    out = _construct(tmp_path)
    rc = main(["run", "--mode", "verify-only", "--graph", str(out / "graph.txt"), "--labels", str(out / "labels.txt"),
               "--horizon", "300"])
    assert rc == 0
    assert "alarm node=" not in capsys.readouterr().out


def test_verify_only_lists_alarms(tmp_path, capsys):
    out = _construct(tmp_path)
    text = (out / "labels.txt").read_text().replace("ROOTS=10", "ROOTS=11", 1)
    bad = tmp_path / "bad.txt"
    bad.write_text(text)
    rc = main(["run", "--mode", "verify-only", "--graph", str(out / "graph.txt"), "--labels", str(bad),
               "--horizon", "50"])
    assert rc == 1
    assert "alarm node=" in capsys.readouterr().out


def test_check_labels_clean_and_corrupted(tmp_path, capsys):
    out = _construct(tmp_path)
    assert main(["check-labels", "--graph", str(out / "graph.txt"), "--labels", str(out / "labels.txt")]) == 0
    assert "0 violations" in capsys.readouterr().out
    lines = (out / "labels.txt").read_text().splitlines()
    # a second endpoint in some level: turn an 'n' below the tree root into 'u'
    for i, ln in enumerate(lines):
        if ln.startswith("label") and "ENDP=" in ln:
            endp = ln.split("ENDP=")[1].split()[0]
            if "n" in endp[:-1] and "SP=" in ln and not ln.split("SP=")[1].split()[0].endswith(",0"):
                j = endp.index("n")
                lines[i] = ln.replace(f"ENDP={endp}", f"ENDP={endp[:j]}u{endp[j + 1:]}")
                break
    bad = tmp_path / "bad.txt"
    bad.write_text("\n".join(lines) + "\n")
    assert main(["check-labels", "--graph", str(out / "graph.txt"), "--labels", str(bad)]) == 1
    report = capsys.readouterr().out
    assert "EPS" in report and "node=" in report


def test_parse_errors_exit_2(tmp_path):
    assert main(["run", "--mode", "construct", "--graph", "nonsense"]) == 2
    f = tmp_path / "f.txt"
    f.write_text("t=x node=1 kind=set-register\n")
    assert main(["run", "--mode", "verify-only", "--graph", "random:n=8", "--faults", str(f)]) == 2
    g = tmp_path / "g.txt"
    g.write_text("3 1\nnode 1\n")
    assert main(["run", "--graph", str(g)]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["run", "--mode", "bogus"])
    assert exc.value.code == 2


def test_empty_sweep_exits_2():
    assert main(["campaign", "--template", "detection"]) == 2


def test_campaign_csv(tmp_path, capsys):
    rc = main(["campaign", "--template", "construct", "--n", "8", "16", "--seeds", "2", "--jobs", "1",
               "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "runs.csv").exists() and (tmp_path / "summary.csv").exists()
    head = capsys.readouterr().out.splitlines()[0]
    assert head.split(",")[:4] == ["template", "scheduler", "n", "runs"] and "ratio" in head


def test_summarize_medians_and_ratio():
    rows = [{"template": "detection", "scheduler": "sync", "n": n, "value": v}
            for n, v in ((32, 4), (32, 6), (64, 6), (64, 8))]
    s = summarize(rows)
    assert [r["median"] for r in s] == [5, 7]
    assert s[1]["ratio"] == 1.4 and s[0]["fitted_c"] == round(5 / 25, 4)


def test_fault_file_parse():
    fs = parse_faults("# comment\nt=5 node=3 kind=set-register register=T.perm value=(1, 2)\n"
                      "t=7 node=4 kind=flip-bits count=3\n")
    assert fs[0].value == (1, 2) and fs[0].register == "T.perm"
    assert fs[1].count == 3
    with pytest.raises(SimError):
        parse_faults("t=1 node=2 kind=melt\n")


def test_selfstab_verdict_json(tmp_path, capsys):
    f = tmp_path / "f.txt"
    g = generate_graph("random-connected", 8, seed=1)
    f.write_text(f"t=400 node={g.nodes[0]} kind=randomize-registers\n")
    rc = main(["run", "--mode", "selfstab", "--graph", "random:n=8:seed=1", "--faults", str(f),
               "--out", str(tmp_path / "o")])
    v = json.loads((tmp_path / "o" / "verdict.json").read_text())
    assert rc == 0 and v["converged"]
    assert set(v) == {"converged", "convergence_time", "resets", "detection_times", "detection_distances",
                      "peak_bits"}


def test_trains_bench(capsys):
    assert main(["run", "--mode", "trains-bench", "--graph", "random:n=32:seed=2"]) == 0
    m = json.loads(capsys.readouterr().out.strip())
    assert m["parts_without_cycle"] == 0 and m["max_latency"] > 0


def test_reproducible_metrics(tmp_path):
    for d in ("a", "b"):
        main(["run", "--mode", "verify-only", "--graph", "random:n=16:seed=3", "--scheduler", "async",
              "--seed", "4", "--horizon", "200", "--out", str(tmp_path / d)])
    assert (tmp_path / "a" / "metrics.json").read_bytes() == (tmp_path / "b" / "metrics.json").read_bytes()


def test_trace_env(tmp_path, monkeypatch):
    monkeypatch.setenv("MSTSIM_TRACE", "full")
    main(["run", "--mode", "construct", "--graph", "random:n=8:seed=1", "--out", str(tmp_path)])
    assert "event=" in (tmp_path / "trace.txt").read_text()
    monkeypatch.setenv("MSTSIM_TRACE", "loud")
    assert main(["run", "--mode", "construct", "--graph", "random:n=8:seed=1"]) == 2
