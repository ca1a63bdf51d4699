"""Command line: ``lfortho {compute,verify,lf}``.

Exit codes: 0 success, 1 verification failures, 2 invalid input, 3 singular
Hankel minor, 4 non-convergent series, 5 step equations requested for the
3F2 family, 6 any other computational failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from datetime import datetime, timezone

import mpmath

from . import __version__
from .exceptions import InvalidSpec, LFOrthoError, NonConvergent, SingularMinor
from .hankel import spectral_pipeline
from .laguerre_freud import lf_forward_run
from .precision import PrecisionContext
from .validation import check_bits, check_order, make_spec, parse_rational
from .verification import FORWARD_STEPS, SUITES, VerificationReport, run_suites

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_SINGULAR, EXIT_NONCONVERGENT, EXIT_NO_STEP, EXIT_COMPUTE = range(7)

CONFIG_KEYS = ("family", "a", "b", "eta", "order", "bits", "tol", "format", "out", "suites", "steps", "seed")
DEFAULTS = {"family": "f12", "order": "16", "format": "json", "seed": "0"}
COMPUTE_COLUMNS = ("n", "rho_n", "H_n", "beta_n", "gamma_n", "p1_n")
LF_COLUMNS = ("n", "beta_lf", "beta_chol", "gamma_lf", "gamma_chol", "dev_beta", "dev_gamma")
RECORD_COLUMNS = ("suite", "identity", "n", "residual", "budget", "pass")


class UsageError(InvalidSpec):
    pass


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        text = open(path, encoding="utf-8").read()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_").lower()
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def resolve(args) -> dict:
    """Merge defaults < config file < flags (``bits`` also falls back to the environment)."""
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(read_config(args.config))
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = str(value)
    cfg["bits"] = str(check_bits(cfg.get("bits")))
    if cfg["format"] not in ("json", "csv"):
        raise UsageError(f"format must be json or csv, got {cfg['format']!r}")
    return cfg


def _int(cfg, key, minimum=0):
    try:
        v = int(cfg[key])
    except ValueError as exc:
        raise UsageError(f"{key} must be an integer, got {cfg[key]!r}") from exc
    if v < minimum:
        raise UsageError(f"{key} must be >= {minimum}, got {v}")
    return v


def build(cfg, min_order=1):
    spec = make_spec(cfg["family"], cfg.get("a"), cfg.get("b"), cfg.get("eta"))
    K = check_order(cfg["order"], min_order)
    ctx = PrecisionContext(int(cfg["bits"]))
    return spec, K, ctx


def dec(x, digits):
    return mpmath.nstr(x, digits)


def manifest(command, cfg, spec, ctx, started):
    with ctx:
        precision = {"bits": ctx.bits, "digits": ctx.digits,
                     "eps_verify": dec(ctx.eps_verify, 6), "eps_pivot": dec(ctx.eps_pivot, 6)}
    return {
        "tool": "lfortho",
        "version": __version__,
        "command": command,
        "config": {k: cfg[k] for k in sorted(cfg) if k != "out"},
        "spec": {"family": spec.family, "a": [str(x) for x in spec.a], "b": [str(x) for x in spec.b],
                 "eta": str(spec.eta)},
        "precision": precision,
        "started": started,
        "finished": _now(),
    }


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def dumps_json(doc) -> str:
    """Canonical rendering: sorted keys, two-space indent, trailing newline."""
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def dumps_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(["" if r[c] is None else r[c] for c in columns])
    return buf.getvalue()


def emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def report_document(report: VerificationReport, digits) -> dict:
    recs = [{"suite": r.suite, "identity": r.identity, "n": r.n, "residual": dec(r.residual, digits),
             "budget": dec(r.budget, digits), "pass": r.passed} for r in report.records]
    return {
        "manifest": report.manifest,
        "records": recs,
        "errata": [{"identity": e.identity, "detail": e.detail} for e in report.errata],
        "summary": report.summary(),
    }


def cmd_compute(cfg):
    started = _now()
    spec, K, ctx = build(cfg)
    data = spectral_pipeline(spec, K, ctx)
    D = ctx.digits
    rows = []
    with ctx:
        for n in range(K):
            rows.append({"n": n, "rho_n": dec(data.table.rho[n], D), "H_n": dec(data.H[n], D),
                         "beta_n": dec(data.beta[n], D), "gamma_n": dec(data.gamma[n], D) if n else None,
                         "p1_n": dec(data.p1[n], D)})
    if cfg["format"] == "csv":
        emit(dumps_csv(COMPUTE_COLUMNS, rows), cfg.get("out"))
    else:
        emit(dumps_json({"manifest": manifest("compute", cfg, spec, ctx, started), "rows": rows}), cfg.get("out"))
    return EXIT_OK


def _suites(cfg):
    if not cfg.get("suites"):
        return None
    names = [s.strip() for s in cfg["suites"].split(",") if s.strip()]
    bad = [s for s in names if s not in SUITES]
    if bad:
        raise UsageError(f"unknown suite(s) {', '.join(bad)}; choose from {', '.join(SUITES)}")
    return names


def cmd_verify(cfg):
    started = _now()
    spec, K, ctx = build(cfg, min_order=12)
    suites = _suites(cfg)
    tol = parse_rational(cfg["tol"], "tol") if cfg.get("tol") else None
    if tol is not None and not tol > 0:
        raise UsageError("tol must be positive")
    steps = _int(cfg, "steps") if cfg.get("steps") else None
    seed = _int(cfg, "seed")
    report = VerificationReport({})
    code = None
    try:
        with ctx:
            tol_mp = None if tol is None else mpmath.mpf(tol.numerator) / tol.denominator
        run_suites(spec, K, ctx, suites, tol_mp, steps, seed, report=report)
    except LFOrthoError as exc:
        report.failure = f"{type(exc).__name__}: {exc}"
        code = exit_code(exc)
    report.manifest = manifest("verify", cfg, spec, ctx, started)
    report.manifest["failure"] = report.failure
    doc = report_document(report, ctx.digits)
    if cfg["format"] == "csv":
        rows = [dict(r) for r in doc["records"]]
        emit(dumps_csv(RECORD_COLUMNS, rows), cfg.get("out"))
    else:
        emit(dumps_json(doc), cfg.get("out"))
    if code is not None:
        print(f"error: {report.failure} (partial report written)", file=sys.stderr)
        return code
    return EXIT_OK if report.ok() else EXIT_FAIL


def cmd_lf(cfg):
    started = _now()
    spec, K, ctx = build(cfg)
    if spec.family == "F32":
        print("error: the 3F2 family has no explicit Laguerre-Freud step equations, only constraint "
              "relations; use `verify --suites lf32-constraints`", file=sys.stderr)
        return EXIT_NO_STEP
    steps = _int(cfg, "steps") if cfg.get("steps") else FORWARD_STEPS[spec.family]
    rep = lf_forward_run(spec, steps, K, ctx)
    D = ctx.digits
    rows = []
    with ctx:
        for r in rep.forward:
            rows.append({"n": r.n, "beta_lf": dec(r.beta_lf, D), "beta_chol": dec(r.beta_chol, D),
                         "gamma_lf": dec(r.gamma_lf, D) if r.n else None,
                         "gamma_chol": dec(r.gamma_chol, D) if r.n else None,
                         "dev_beta": dec(r.rel_beta, 6), "dev_gamma": dec(r.rel_gamma, 6) if r.n else None})
    if cfg["format"] == "csv":
        emit(dumps_csv(LF_COLUMNS, rows), cfg.get("out"))
    else:
        doc = {"manifest": manifest("lf", cfg, spec, ctx, started), "rows": rows, "stopped": rep.stopped}
        emit(dumps_json(doc), cfg.get("out"))
    return EXIT_OK


def exit_code(exc) -> int:
    if isinstance(exc, SingularMinor):
        return EXIT_SINGULAR
    if isinstance(exc, NonConvergent):
        return EXIT_NONCONVERGENT
    if isinstance(exc, (InvalidSpec, ValueError)):
        return EXIT_INVALID
    return EXIT_COMPUTE


def parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value file; flags override it")
    common.add_argument("--family", type=str.lower, choices=("f12", "f22", "f32"))
    common.add_argument("--a", help="comma-separated numerator parameters")
    common.add_argument("--b", help="comma-separated denominator shifts")
    common.add_argument("--eta")
    common.add_argument("--order", help="number of polynomials K")
    common.add_argument("--bits", help="working precision (default $LFORTHO_BITS or 384)")
    common.add_argument("--tol", help="verification tolerance (default 2^-(bits/2))")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--suites", help=f"comma-separated subset of {','.join(SUITES)}")
    common.add_argument("--steps", help="forward steps for step-equation runs")
    common.add_argument("--seed", help="seed for randomized-parameter checks")
    p = argparse.ArgumentParser(prog="lfortho", description="Hypergeometric discrete orthogonal polynomials.")
    p.add_argument("--version", action="version", version=f"lfortho {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("compute", parents=[common], help="moments, norms and recurrence coefficients")
    sub.add_parser("verify", parents=[common], help="run residual suites and write a report")
    sub.add_parser("lf", parents=[common], help="forward run of the step equations")
    return p


COMMANDS = {"compute": cmd_compute, "verify": cmd_verify, "lf": cmd_lf}


def main(argv=None) -> int:
    args = parser().parse_args(argv)
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except LFOrthoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code(exc)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
