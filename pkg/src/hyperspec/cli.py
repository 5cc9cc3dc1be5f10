"""Command-line front end: ``hyperspec solve | check | validate | oracle``.

Exit status: 0 all hard checks pass, 1 a hard check failed, 2 bad
configuration or arguments, 3 numerical failure, 4 unwritable output.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import logging
import sys
from pathlib import Path

from threadpoolctl import threadpool_limits

from . import __version__, oracles
from .errors import DegenerateProblemError, HyperspecError, NumericalError
from .geometry import domain_from_dict, geometric_profile
from .inequalities import CSV_COLUMNS, InequalityKind, csv_row, evaluate_all
from .report import csv_text, dumps
from .scenario import (
    ScenarioConfig,
    apply_overrides,
    emit_report,
    parse_override_value,
    run_scenario,
    thread_limit,
)
from .validation import run_validation, summary_lines

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3, 4

log = logging.getLogger("hyperspec")


class ConfigError(HyperspecError):
    pass


class OutputError(HyperspecError):
    pass


def parse_k_range(text: str) -> list[int]:
    """"1..10" -> [1..10], "3" -> [3], "1,4,7" -> [1, 4, 7]."""
    out = []
    try:
        for part in text.split(","):
            if ".." in part:
                lo, hi = part.split("..")
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise ConfigError(f"cannot parse k range {text!r}") from None
    if not out or min(out) < 1:
        raise ConfigError(f"k range {text!r} must name positive integers")
    return out


def _overrides(extra: list[str]) -> dict:
    """Turn ['--domain.radius', '2', '--k_max=5'] into {'domain.radius': 2, 'k_max': 5}."""
    out = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or len(tok) == 2:
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, raw = key.split("=", 1)
        else:
            if i + 1 >= len(extra):
                raise ConfigError(f"override {tok} needs a value")
            i += 1
            raw = extra[i]
        out[key.replace("-", "_")] = parse_override_value(raw)
        i += 1
    return out


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None


def cmd_solve(args, extra) -> int:
    doc = _load_json(args.config) if args.config else {}
    doc = apply_overrides(doc, _overrides(extra))
    cfg = ScenarioConfig.from_dict(doc)
    result = run_scenario(cfg)
    try:
        paths = emit_report(result, cfg)
    except OSError as exc:
        raise OutputError(f"cannot write report: {exc}") from None
    for p in paths:
        print(p)
    mono = result.report["monotone"]
    if not mono["ok"]:
        v = mono["violations"][0]
        raise NumericalError(
            f"eigenvalue {v['index'] + 1} increased under refinement at level {v['level']}: "
            f"{v['previous']!r} -> {v['current']!r}"
        )
    s = result.report["summary"]
    print(f"hard failures: {s['hard_failures']}, conjecture violations: {s['conjecture_violations']}")
    return EXIT_OK if result.passed else EXIT_CHECK


def cmd_check(args, extra) -> int:
    if extra:
        raise ConfigError(f"unexpected arguments: {' '.join(extra)}")
    doc = _load_json(args.spectrum)
    if "eigenvalues" not in doc:
        raise ConfigError(f"{args.spectrum} has no 'eigenvalues' list")
    eigs = [float(x) for x in doc["eigenvalues"]]
    n = int(doc.get("n", 2))
    metric = doc.get("metric")
    kinds = [InequalityKind.parse(k) for k in args.kinds.split(",") if k]
    ks = parse_k_range(args.k)
    if max(ks) >= len(eigs):
        raise ConfigError(f"k={max(ks)} needs {max(ks) + 1} eigenvalues, the file has {len(eigs)}")
    profile = None
    if "domain" in doc and doc["domain"] is not None:
        d = domain_from_dict(doc["domain"])
        if d.hyperbolic:
            profile = geometric_profile(d)
    reps = evaluate_all(eigs, kinds, ks, n, profile, metric, args.eps, doc.get("h"), doc.get("dof"))
    hard_fail = sum(1 for r in reps if r.hard and not r.satisfied)
    report = {
        "spectrum": args.spectrum,
        "n": n,
        "metric": metric,
        "profile": None if profile is None else profile.to_dict(),
        "inequalities": [r.to_dict() for r in reps],
        "hard_failures": hard_fail,
    }
    if args.csv:
        _write(Path(args.csv), csv_text(CSV_COLUMNS, [csv_row(r) for r in reps]))
    if args.output:
        _write(Path(args.output), dumps(report))
    else:
        sys.stdout.write(dumps(report))
    return EXIT_OK if hard_fail == 0 else EXIT_CHECK


def cmd_validate(args, extra) -> int:
    if extra:
        raise ConfigError(f"unexpected arguments: {' '.join(extra)}")
    # single-threaded BLAS keeps the report byte-for-byte reproducible
    with threadpool_limits(limits=1):
        report = run_validation()
    _write(Path(args.output), dumps(report))
    for line in summary_lines(report):
        print(line)
    print(args.output)
    return EXIT_OK if report["passed"] else EXIT_CHECK


def cmd_oracle(args, extra) -> int:
    if extra:
        raise ConfigError(f"unexpected arguments: {' '.join(extra)}")
    ref = oracles.reference_spectrum(args.shape, args.count, args.radius, args.n)
    text = dumps(ref.to_dict())
    if args.output:
        _write(Path(args.output), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hyperspec", description="Dirichlet spectra of hyperbolic and Euclidean domains.")
    p.add_argument("--version", action="version", version=f"hyperspec {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run a refinement ladder from a JSON config; extra --a.b value flags override fields")
    s.add_argument("--config", help="scenario JSON file")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("check", help="evaluate inequalities on a spectrum JSON file")
    c.add_argument("--spectrum", required=True)
    c.add_argument("--kinds", required=True, help="comma-separated inequality kinds")
    c.add_argument("--k", default="1", help="e.g. 1..10 or 1,5,9")
    c.add_argument("--eps", type=float, default=None, help="eps for slope_eps (default: minimal admissible)")
    c.add_argument("--output", help="JSON report path (default: stdout)")
    c.add_argument("--csv", help="also write the CSV table here")
    c.set_defaults(func=cmd_check)

    v = sub.add_parser("validate", help="run the built-in oracle and inequality suite")
    v.add_argument("--output", default="hyperspec-validate.json")
    v.set_defaults(func=cmd_validate)

    o = sub.add_parser("oracle", help="print a reference spectrum")
    o.add_argument("--shape", required=True, choices=["square", "unit_square", "disk", "ball"])
    o.add_argument("--radius", type=float, default=1.0)
    o.add_argument("--count", type=int, default=10)
    o.add_argument("--n", type=int, default=2)
    o.add_argument("--output")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        limit = thread_limit()
        ctx = threadpool_limits(limits=limit) if limit else contextlib.nullcontext()
        with ctx:
            return args.func(args, extra)
    except OutputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalError, DegenerateProblemError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (HyperspecError, ValueError, KeyError, TypeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
