import csv
import io
import json

import pytest

from gaugelat.cli import CSV_COLUMNS, RunConfig, main, run
from gaugelat.corpus import default_corpus
from gaugelat.order import certify
from gaugelat.functions import linear

LINEAR = {"family": "piecewise_linear", "knots": ["0", "1"], "values": [[0.0], [1.0]]}


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def test_linear_config_passes(tmp_path):
    cfg = {"corpus": [{"id": "t", "fn": LINEAR}], "methods": ["H", "oM-build", "parallelo"],
           "K": 16, "seed": 1, "tol": 1e-3,
           "output": {"csv": str(tmp_path / "m.csv"), "json": str(tmp_path / "r.json")}}
    code = main(["compare", "--config", write(tmp_path, "c.json", cfg)])
    assert code == 0
    got = {r["method"]: r for r in rows((tmp_path / "m.csv").read_text())}
    assert abs(float(got["H"]["value"]) - 0.5) <= 1e-3
    assert got["oM-build"]["verdict"] == "pass" and float(got["oM-build"]["value"]) == 0.5
    assert got["parallelo"]["verdict"] == "pass" and float(got["parallelo"]["spread"]) <= 1e-6
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["passed"] and report["config"]["seed"] == 1


def test_falsified_certificate_fails(tmp_path):
    cert = certify(linear(1), 16).to_dict()
    cert["J"] = [0.4]
    cfg = {"corpus": [{"id": "t", "fn": LINEAR, "certificate": cert}], "methods": ["oH-check"],
           "K": 16, "seed": 0, "output": {"csv": str(tmp_path / "m.csv")}}
    assert main(["compare", "--config", write(tmp_path, "c.json", cfg)]) == 1
    (row,) = rows((tmp_path / "m.csv").read_text())
    assert row["verdict"] == "fail" and row["method"] == "oH-check"


def test_empty_corpus():
    code, text, report = run(RunConfig.from_dict({"corpus": [], "K": 4, "seed": 0}))
    assert code == 0 and text.strip() == ",".join(CSV_COLUMNS) and report["passed"]


def test_config_errors_exit_2(tmp_path, capsys):
    assert main(["compare", "--config", str(tmp_path / "missing.json")]) == 2
    assert "cannot read" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["compare", "--config", str(bad)]) == 2
    assert main(["compare", "--config", write(tmp_path, "m.json", {"methods": ["Riemann"]})]) == 2
    assert main(["compare", "--config", write(tmp_path, "u.json", {"colour": "blue"})]) == 2


def test_unknown_subcommand_exit_2(capsys):
    assert main(["plot"]) == 2


def test_integrate_prints_half(tmp_path, capsys):
    fn = write(tmp_path, "linear.json", LINEAR)
    code = main(["integrate", "--fn", fn, "--method", "MS", "--tol", "1e-6", "--k", "8"])
    out = capsys.readouterr()
    assert out.out.strip() == "0.5"
    # sixteen constant-gauge levels leave a spread near 1e-5, above this tolerance
    assert code == 1 and "not converged" in out.err
    assert main(["integrate", "--fn", fn, "--tol", "1e-2"]) == 0


def test_certify_build_then_check(tmp_path, capsys):
    fn = write(tmp_path, "fn.json", LINEAR)
    cert_path = str(tmp_path / "cert.json")
    assert main(["certify", "--fn", fn, "--out", cert_path]) == 0
    assert main(["certify", "--check", cert_path, "--fn", fn, "--seed", "1", "--k", "64"]) == 0
    assert capsys.readouterr().out.startswith("pass worst_margin=")
    cert = json.loads(open(cert_path).read())
    cert["J"] = [0.4]
    bad = write(tmp_path, "bad.json", cert)
    assert main(["certify", "--check", bad, "--fn", fn, "--seed", "1", "--k", "64"]) == 1
    assert capsys.readouterr().out.startswith("fail worst_margin=-")


def test_phillips_table(capsys):
    assert main(["phillips"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 4 and lines[1].split()[:2] == ["8", "2"]
    assert main(["phillips", "--pairs", "5,1"]) == 1


def test_gordon_and_selftest(capsys):
    assert main(["gordon", "--count", "40", "--seed", "3"]) == 0
    assert "violations=0" in capsys.readouterr().out
    assert main(["selftest", "--seed", "2", "--k", "8"]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("GAUGE_LATTICE_SEED", "5")
    cfg = {"corpus": [{"id": "t", "fn": LINEAR}], "methods": ["H"], "K": 4}
    out = tmp_path / "o"
    assert main(["compare", "--config", write(tmp_path, "c.json", cfg), "--out", str(out)]) == 0
    assert json.loads((out / "report.json").read_text())["config"]["seed"] == 5
    monkeypatch.setenv("GAUGE_LATTICE_SEED", "x")
    assert main(["compare", "--config", write(tmp_path, "c.json", cfg)]) == 2


def test_parallel_run_matches_serial():
    base = {"corpus": default_corpus()[:3], "methods": ["H", "oM-build"], "K": 4, "seed": 2}
    _, serial, _ = run(RunConfig.from_dict(base))
    _, parallel, _ = run(RunConfig.from_dict(dict(base, jobs=2)))
    assert serial == parallel


def test_all_methods_on_step_function(tmp_path):
    step = {"family": "step", "breakpoints": ["0", "1/3", "1"], "values": [[0.0], [1.0]]}
    cfg = RunConfig.from_dict({"corpus": [{"id": "s", "fn": step}], "spaces": ["M", "L"],
                               "methods": ["H", "MS", "oH-check", "oM-build", "oB-build", "vH", "parallelo",
                                           "gordon"], "K": 8, "seed": 0, "tol": 1e-3})
    code, text, _ = run(cfg)
    verdicts = {(r["space"], r["method"]): r["verdict"] for r in rows(text)}
    assert code == 0
    assert verdicts[("M", "vH")] == "n/a" and verdicts[("L", "vH")] == "pass"
    assert all(v in ("pass", "n/a") for v in verdicts.values())
