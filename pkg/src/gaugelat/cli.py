"""Command-line runner: comparison matrix, certificate files and demo tables.

Exit codes: 0 when every requested check passes, 1 when any check fails,
2 on a configuration or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .corpus import contrast_table, default_corpus, load_entry, make_weighted_L_space
from .errors import GaugeLatticeError, InvalidInput, NonConvergence, PreconditionViolation, Unsupported
from .functions import CosetModel, IntegrandFn, PiecewiseLinear, StepFunction, from_spec
from .integrate import format_vector, integrate_norm
from .lattice import SpaceSpec
from .order import (OrderCertificate, build_oB_certificate, certify, check_certificate,
                    extract_riemann_witness, gordon_check, gordon_sweep, o_riemann_check_all,
                    order_to_variational, parallelo_check)
from .sets_measure import IntervalSet

CSV_COLUMNS = ("function_id", "space", "method", "value", "spread", "levels", "verdict")
METHODS = ("H", "MS", "oH-check", "oM-build", "oB-build", "vH", "parallelo", "gordon", "phillips-demo")
DEFAULT_METHODS = ("H", "MS", "oM-build", "parallelo")
SEED_ENV = "GAUGE_LATTICE_SEED"
MAX_VARIATIONAL_LEVELS = 1 << 15


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    corpus: list = field(default_factory=list)
    spaces: list = field(default_factory=lambda: ["M"])
    methods: list = field(default_factory=lambda: list(DEFAULT_METHODS))
    tol: float = 1e-3
    K: int = 16
    seed: int = 0
    max_levels: int = 16
    levels: int = 16
    eps: float = 0.1
    gordon_delta: float = 1e-3
    gordon_trials: int = 16
    phillips_pairs: list = field(default_factory=lambda: [[8, 2], [10, 2], [12, 3]])
    json_out: str | None = None
    csv_out: str | None = None
    jobs: int = 1

    def validate(self) -> None:
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods: {', '.join(bad)}")
        if self.K < 1 or self.levels < 1 or self.max_levels < 1 or self.jobs < 1:
            raise ConfigError("K, levels, max_levels and jobs must be >= 1")
        if not (self.tol > 0 and self.eps > 0 and self.gordon_delta > 0):
            raise ConfigError("tol, eps and gordon_delta must be positive")
        ids = [e.get("id") if isinstance(e, dict) else None for e in self.corpus]
        if any(i is None for i in ids) or len(set(ids)) != len(ids):
            raise ConfigError("every corpus entry needs a unique id")
        for e in self.corpus:
            if "fn" not in e:
                raise ConfigError(f"corpus entry {e['id']!r} has no function")
        for s in self.spaces:
            _space_label(s)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known - {"output"}
        if extra:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(extra))}")
        d = dict(d)
        out = d.pop("output", {}) or {}
        corpus = d.get("corpus", [])
        if corpus == "default":
            d["corpus"] = default_corpus()
        try:
            cfg = cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        cfg.json_out = out.get("json", cfg.json_out)
        cfg.csv_out = out.get("csv", cfg.csv_out)
        cfg.validate()
        return cfg

    def resolved(self) -> dict:
        return asdict(self)


def _space_label(s) -> str:
    if isinstance(s, str) and s in ("M", "L"):
        return s
    if isinstance(s, dict) and "name" in s:
        return str(s["name"])
    if isinstance(s, str) and s.startswith("Ldyadic"):
        return s
    raise ConfigError(f"unknown space {s!r}; use 'M', 'L', 'Ldyadic' or a named spec")


def _space_for(s, f: IntegrandFn) -> SpaceSpec:
    if s == "M":
        return SpaceSpec.M(f.dim)
    if s == "L":
        return SpaceSpec.L(np.ones(f.dim))
    if isinstance(s, str) and s.startswith("Ldyadic"):
        if not isinstance(f, CosetModel):
            raise Unsupported("dyadic weights apply to coset models only")
        return make_weighted_L_space(f.k)
    spec = SpaceSpec.from_dict(s)
    if spec.dim != f.dim:
        raise InvalidInput(f"space {s['name']!r} has dimension {spec.dim}, function has {f.dim}")
    return spec


def _row(fid, space, method, value, spread, levels, verdict) -> list[str]:
    sp = "" if spread is None else f"{float(spread):.12g}"
    return [fid, space, method, value, sp, "" if levels is None else str(levels), verdict]


def _final_dev(v) -> float:
    """Largest ``|sigma - J|`` component seen at the last certificate level."""
    return float(np.max(v.levels[-1].worst))


def _needs_certificate(methods) -> bool:
    return any(m in methods for m in ("oM-build", "oB-build", "vH", "parallelo"))


def run_entry(entry: dict, cfg: RunConfig) -> tuple[list[list[str]], dict]:
    """Rows and report section for one corpus entry (pure in ``entry`` and ``cfg``)."""
    fid, f = load_entry(entry)
    rows, rep = [], {"id": fid, "fn": f.to_spec(), "results": []}

    def record(space, method, value, spread, levels, verdict, detail):
        rows.append(_row(fid, space, method, value, spread, levels, verdict))
        rep["results"].append({"space": space, "method": method, "verdict": verdict, "detail": detail})

    cert = None
    if _needs_certificate(cfg.methods):
        try:
            cert = certify(f, cfg.levels)
        except (Unsupported, InvalidInput) as exc:
            cert = exc
    for s in cfg.spaces:
        label = _space_label(s)
        try:
            spec = _space_for(s, f)
        except (Unsupported, InvalidInput) as exc:
            record(label, "space", "", None, None, "n/a", {"reason": str(exc)})
            continue
        for kind in ("H", "MS"):
            if kind in cfg.methods:
                r = integrate_norm(f, spec, kind, cfg.tol, cfg.K, cfg.seed, cfg.max_levels)
                rows.append(r.csv_row(fid, label))
                rep["results"].append({"space": label, "method": kind, "verdict": rows[-1][-1],
                                       "detail": r.to_dict()})
        if "vH" in cfg.methods:
            if spec.norm_kind != "L":
                record(label, "vH", "", None, None, "n/a", {"reason": "variational bridge needs an L-space"})
            elif isinstance(cert, Exception):
                record(label, "vH", "", None, None, "n/a", {"reason": str(cert)})
            else:
                N = max(cfg.levels, math.ceil(spec.norm(cert.b[1]) / cfg.eps) + 1)
                if N > MAX_VARIATIONAL_LEVELS:
                    record(label, "vH", "", None, None, "fail",
                           {"reason": f"needs {N} certificate levels for eps={cfg.eps:g}"})
                else:
                    vr = order_to_variational(f, certify(f, N), spec, cfg.eps, cfg.K, cfg.seed)
                    record(label, "vH", f"{vr.variational:.12g}", vr.norm_sum, vr.N,
                           "pass" if vr.passed else "fail", vr.to_dict())

    cert_space = "order"
    if "oH-check" in cfg.methods:
        try:
            given = entry.get("certificate")
            if given is None:
                c = certify(f, cfg.levels).relabel("oH")
            else:
                c = OrderCertificate.from_dict(_load_json(given) if isinstance(given, str) else given)
            v = check_certificate(f, c, cfg.K, cfg.seed)
            record(cert_space, "oH-check", format_vector(c.J), _final_dev(v), len(c),
                   "pass" if v.passed else "fail", {"certificate": c.to_dict(), "verdict": v.to_dict()})
        except (Unsupported, InvalidInput) as exc:
            record(cert_space, "oH-check", "", None, None, "fail", {"reason": str(exc)})
    if "oM-build" in cfg.methods:
        if isinstance(cert, Exception):
            record(cert_space, "oM-build", "", None, None, "n/a", {"reason": str(cert)})
        else:
            v = check_certificate(f, cert, cfg.K, cfg.seed)
            record(cert_space, "oM-build", format_vector(cert.J), _final_dev(v), len(cert),
                   "pass" if v.passed else "fail", {"certificate": cert.to_dict(), "verdict": v.to_dict()})
    if "oB-build" in cfg.methods:
        if isinstance(cert, Exception):
            record(cert_space, "oB-build", "", None, None, "n/a", {"reason": str(cert)})
        else:
            try:
                w = extract_riemann_witness(f, cert.relabel("oBH"))
                wv = o_riemann_check_all(f, IntervalSet.unit(), w, cfg.K, cfg.seed)
                ob = build_oB_certificate(f, w, K=cfg.K, seed=cfg.seed)
                v = check_certificate(f, ob, cfg.K, cfg.seed)
                ok = wv.passed and v.passed
                record(cert_space, "oB-build", format_vector(ob.J), _final_dev(v), len(ob),
                       "pass" if ok else "fail",
                       {"witness": w.to_dict(), "witness_verdict": wv.to_dict(), "verdict": v.to_dict()})
            except (Unsupported, InvalidInput, PreconditionViolation) as exc:
                record(cert_space, "oB-build", "", None, None, "fail", {"reason": str(exc)})
    if "parallelo" in cfg.methods:
        if isinstance(cert, Exception):
            record(cert_space, "parallelo", "", None, None, "n/a", {"reason": str(cert)})
        else:
            try:
                pr = parallelo_check(f, cert)
                record(cert_space, "parallelo", format_vector(pr.lhs), float(np.max(np.abs(pr.gap))), pr.depth,
                       "pass" if pr.passed else "fail", pr.to_dict())
            except (NonConvergence, Unsupported) as exc:
                record(cert_space, "parallelo", "", None, None, "fail", {"reason": str(exc)})
    if "gordon" in cfg.methods:
        if isinstance(f, (StepFunction, PiecewiseLinear)):
            o = gordon_check(f, IntervalSet.unit(), np.ones(f.dim), cfg.gordon_delta, cfg.gordon_trials, cfg.seed)
            verdict = "pass" if o.consistent else "fail"
            record(cert_space, "gordon", format_vector(o.conclusion_lhs), None, None, verdict, o.to_dict())
        else:
            record(cert_space, "gordon", "", None, None, "n/a", {"reason": "step or piecewise-linear maps only"})
    return rows, rep


def phillips_rows(pairs) -> tuple[list[list[str]], list[dict]]:
    rows = []
    table = contrast_table([tuple(p) for p in pairs])
    for r in table:
        fid = f"coset_{r['k']}_{r['m']}"
        okm = r["V_M"] >= r["M_bound"] - 1e-9
        okl = r["V_L"] <= r["L_bound"] + 1e-9
        r["M_pass"], r["L_pass"] = okm, okl
        rows.append(_row(fid, "M", "phillips-demo", f"{r['V_M']:.12g}", r["M_bound"], r["k"], "pass" if okm else "fail"))
        rows.append(_row(fid, "Ldyadic", "phillips-demo", f"{r['V_L']:.12g}", r["L_bound"], r["k"],
                         "pass" if okl else "fail"))
    return rows, table


def run(cfg: RunConfig) -> tuple[int, str, dict]:
    """Run a validated config; returns ``(exit code, csv text, report)``."""
    entries = list(cfg.corpus)
    if cfg.jobs > 1 and len(entries) > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            results = list(pool.map(run_entry, entries, [cfg] * len(entries)))
    else:
        results = [run_entry(e, cfg) for e in entries]
    rows = [r for rs, _ in results for r in rs]
    report = {"config": cfg.resolved(), "functions": [rep for _, rep in results]}
    if "phillips-demo" in cfg.methods:
        prow, table = phillips_rows(cfg.phillips_pairs)
        rows += prow
        report["phillips"] = table
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    writer.writerows(rows)
    failed = [r for r in rows if r[-1] == "fail"]
    report["failures"] = [dict(zip(CSV_COLUMNS, r)) for r in failed]
    report["passed"] = not failed
    return (1 if failed else 0), buf.getvalue(), report


# --------------------------------------------------------------------------
# argument handling


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer") from None


def _load_fn(path: str) -> IntegrandFn:
    d = _load_json(path)
    return from_spec(d["fn"] if isinstance(d, dict) and "fn" in d else d)


def _write(path: str | None, text: str) -> None:
    if path is None:
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text, encoding="utf-8")


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    raise TypeError(f"not serializable: {type(x).__name__}")


def cmd_compare(args) -> int:
    d = _load_json(args.config) if args.config else {"corpus": "default"}
    for key, val in (("K", args.k), ("tol", args.tol), ("max_levels", args.max_levels), ("jobs", args.jobs)):
        if val is not None:
            d[key] = val
    if args.seed is not None or "seed" not in d:
        d["seed"] = _seed(args)
    cfg = RunConfig.from_dict(d)
    if args.out:
        cfg.csv_out = str(Path(args.out) / "matrix.csv")
        cfg.json_out = str(Path(args.out) / "report.json")
    code, text, report = run(cfg)
    _write(cfg.csv_out, text)
    _write(cfg.json_out, _json_text(report))
    if not cfg.csv_out:
        sys.stdout.write(text)
    return code


def cmd_integrate(args) -> int:
    f = _load_fn(args.fn)
    spec = SpaceSpec.M(f.dim) if args.space == "M" else SpaceSpec.L(np.ones(f.dim))
    r = integrate_norm(f, spec, args.method, args.tol or 1e-6, args.k or 64, _seed(args), args.max_levels or 16)
    # digits beyond the observed spread are noise
    decimals = max(1, math.floor(-math.log10(max(2 * r.spread, r.tol))))
    print(format_vector(np.round(r.value, decimals) + 0.0))
    status = "converged" if r.converged else "not converged"
    print(f"# {status}: spread {r.spread:.3g} at level {r.levels} (tol {r.tol:g})", file=sys.stderr)
    if args.out:
        _write(args.out, _json_text(r.to_dict()))
    return 0 if r.converged else 1


def cmd_certify(args) -> int:
    f = _load_fn(args.fn)
    seed, K = _seed(args), args.k or 64
    if args.check:
        cert = OrderCertificate.from_dict(_load_json(args.check))
        v = check_certificate(f, cert, K, seed)
        print(f"{'pass' if v.passed else 'fail'} worst_margin={v.worst_margin:.6g}"
              + ("" if v.passed else f" first_failure={v.first_failure}"))
        if args.out:
            _write(args.out, _json_text(v.to_dict()))
        return 0 if v.passed else 1
    cert = certify(f, args.levels)
    text = _json_text(cert.to_dict())
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_gordon(args) -> int:
    r = gordon_sweep(args.count, _seed(args), args.trials)
    print(f"instances={r.instances} hypothesis_exact={r.hypothesis_exact} "
          f"conclusion_held={r.conclusion_held} violations={len(r.violations)}")
    if args.out:
        _write(args.out, _json_text(r.to_dict()))
    return 0 if r.passed else 1


def _pair(text: str) -> tuple[int, int]:
    try:
        k, m = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected k,m but got {text!r}") from None
    return k, m


def cmd_phillips(args) -> int:
    pairs = args.pairs or [(8, 2), (10, 2), (12, 3)]
    rows, table = phillips_rows(pairs)
    print(f"{'k':>3} {'m':>3} {'V_M':>14} {'1-2^(m-k)':>14} {'V_L':>14} {'2^(m-k+1)':>14} {'2^(m-k)':>12}")
    for r in table:
        print(f"{r['k']:>3} {r['m']:>3} {r['V_M']:>14.10f} {r['M_bound']:>14.10f} {r['V_L']:>14.10g} "
              f"{r['L_bound']:>14.10g} {r['integral_M']:>12.6g}")
    if args.out:
        _write(args.out, _json_text(table))
    return 0 if all(row[-1] == "pass" for row in rows) else 1


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    return 0 if run_selftest(_seed(args), args.k or 16) else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help=f"random seed (fallback: ${SEED_ENV}, then 0)")
    common.add_argument("--k", type=int, help="sampled partitions per level")
    common.add_argument("--tol", type=float, help="spread tolerance for norm integrals")
    common.add_argument("--out", help="output file (directory for compare)")
    common.add_argument("--max-levels", type=int, dest="max_levels", help="gauge levels before giving up")

    p = argparse.ArgumentParser(prog="gaugelat", description="Gauge integrals in finite-dimensional lattices.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("integrate", parents=[common], help="norm integral of one function")
    s.add_argument("--fn", required=True, help="function JSON file")
    s.add_argument("--method", choices=("H", "MS"), default="H")
    s.add_argument("--space", choices=("M", "L"), default="M")
    s.set_defaults(run=cmd_integrate)

    s = sub.add_parser("certify", parents=[common], help="build or check an order certificate")
    s.add_argument("--fn", required=True, help="function JSON file")
    s.add_argument("--check", metavar="CERT", help="certificate JSON file to check")
    s.add_argument("--levels", type=int, default=16)
    s.set_defaults(run=cmd_certify)

    s = sub.add_parser("compare", parents=[common], help="integrability comparison matrix")
    s.add_argument("--jobs", type=int, help="worker processes for corpus entries")
    s.set_defaults(run=cmd_compare)

    s = sub.add_parser("gordon", parents=[common], help="oscillation lemma sweep")
    s.add_argument("--count", type=int, default=1000)
    s.add_argument("--trials", type=int, default=4)
    s.set_defaults(run=cmd_gordon)

    s = sub.add_parser("phillips", parents=[common], help="coset-model contrast table")
    s.add_argument("--pairs", type=_pair, nargs="+", metavar="K,M")
    s.set_defaults(run=cmd_phillips)

    s = sub.add_parser("selftest", parents=[common], help="quick invariant checks")
    s.set_defaults(run=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.run(args)
    except (ConfigError, GaugeLatticeError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"gaugelat: error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
