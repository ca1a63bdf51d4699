"""Acceptance criteria for the primary components, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL ...`` line to the terminal.
Reports are computed once per family at 384 bits (K = 16, K_int = 24) and
reused; criterion 11 repeats the criteria 3-8 records at 768 bits. A residual
that rounds to exactly zero at 384 bits counts as one rounding unit, 2^-384.
"""
import re
import time
from collections import defaultdict

import mpmath
import pytest

from lfortho.hankel import BUFFER
from lfortho.laguerre_freud import FORWARD_START
from lfortho.operators import STRUCTURE_METHODS, compatibility_residual
from lfortho.precision import PrecisionContext
from lfortho.verification import (INDEPENDENCE_DRAWS, Record, _Run, suite_lf_identities, suite_lf_step,
                                  suite_pascal, suite_structure, run_suites)

from conftest import FAMILIES, reference_spec

BITS, K = 384, 16
HIGH_BITS = 768
TWO = mpmath.mpf(2)
DIAGONALS = {"F12": 5, "F22": 6, "F32": 7}
STEP_FAMILIES = ("F12", "F22")
T0 = time.time()


@pytest.fixture(scope="module")
def reports():
    ctx = PrecisionContext(BITS)
    return {f: run_suites(reference_spec(f), K, ctx) for f in FAMILIES}


@pytest.fixture(scope="module")
def high_records():
    """Criteria 3-8 records at 768 bits, keyed like the 384-bit ones."""
    ctx = PrecisionContext(HIGH_BITS)
    out = {}
    for f in FAMILIES:
        run = _Run(reference_spec(f), K, ctx)
        recs = []
        for suite in (suite_structure, suite_pascal, suite_lf_identities):
            recs.extend(suite(run)[0])
        if f in STEP_FAMILIES:
            recs.extend(suite_lf_step(run)[0])
        main = run.psi[STRUCTURE_METHODS[0]]
        with ctx:
            recs.append(Record("compat", "compat.jacobi", main.valid, compatibility_residual(run.data, main), run.tol))
            recs.append(Record("compat", "compat.jacobi_transposed", main.valid,
                               compatibility_residual(run.data, main, transposed=True), run.tol))
        out[f] = recs
    return out


def report_line(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} {detail}")


def worst(recs):
    return max((r.residual for r in recs), default=mpmath.mpf(0))


def log2(x):
    return "-inf" if x == 0 else f"{float(mpmath.log(x, 2)):.1f}"


def failing(recs):
    return [(r.identity, r.n, mpmath.nstr(r.residual, 5)) for r in recs if not r.passed]


def test_criterion_01_pearson(reports, capsys):
    recs = [r for f in FAMILIES for r in reports[f].select("structure", "pearson")]
    ok = len(recs) == 3 and all(r.n == 200 and r.residual < TWO ** -192 for r in recs)
    report_line(capsys, 1, ok, f"max Pearson residual 2^{log2(worst(recs))} for k <= 200")
    assert ok, failing(recs)


def test_criterion_02_factorization(reports, capsys):
    recs = [r for f in FAMILIES for r in reports[f].select("structure", "factor.")]
    recon = [r for r in recs if r.identity == "factor.reconstruction"]
    dets = [r for r in recs if r.identity != "factor.reconstruction"]
    ok = (all(r.n == K + BUFFER for r in recon) and {r.n for r in dets} == set(range(15))
          and all(r.residual < TWO ** -192 for r in recs))
    report_line(capsys, 2, ok, f"reconstruction 2^{log2(worst(recon))}, determinant routes 2^{log2(worst(dets))}")
    assert ok, failing(recs)


def _band_records(report):
    return [r for r in report.select("structure", "psi.")
            if not r.identity.startswith("psi.agreement")]


def test_criterion_03_bandedness(reports, capsys):
    bad, details = [], []
    for f in FAMILIES:
        recs = _band_records(reports[f])
        counts = {r.n for r in recs if r.identity.startswith("psi.diagonal_count")}
        if counts != {DIAGONALS[f]} or not all(r.passed for r in recs):
            bad.append((f, counts, failing(recs)))
        off = [r for r in recs if r.identity.startswith("psi.off_band")]
        ext = [r for r in recs if r.identity in ("psi.lowest_diagonal", "psi.highest_diagonal")]
        details.append(f"{f}: {sorted(counts)} diagonals, off-band 2^{log2(worst(off))}, "
                       f"extremes 2^{log2(worst(ext))}")
        assert all(r.residual < TWO ** -192 for r in off + ext)
    report_line(capsys, 3, not bad, "; ".join(details))
    assert not bad, bad


def test_criterion_04_six_way_agreement(reports, capsys):
    recs = [r for f in FAMILIES for r in reports[f].select("structure", "psi.agreement")]
    ok = len(recs) == 3 * 15 and all(r.residual < TWO ** -192 for r in recs)
    report_line(capsys, 4, ok, f"{len(recs)} pairwise comparisons, max 2^{log2(worst(recs))}")
    assert ok, failing(recs)


def test_criterion_05_structure_equations(reports, capsys):
    recs = [r for f in FAMILIES for r in reports[f].select("structure", "shift.")]
    zs = {r.identity.split("@")[1] for r in recs}
    ok = zs == {"1/2", "1/3", "3"} and all(r.passed for r in recs)
    report_line(capsys, 5, ok, f"z in {sorted(zs)}, max 2^{log2(worst(recs))}")
    assert ok, failing(recs)


def test_criterion_06_compatibility(reports, capsys):
    recs = [r for f in FAMILIES for r in reports[f].select("compat", "compat.jacobi")]
    ok = len(recs) == 6 and all(r.passed for r in recs)
    report_line(capsys, 6, ok, f"[Psi H^-1, J] = Psi H^-1 max 2^{log2(worst(recs))}")
    assert ok, failing(recs)


def _identity_groups(report, suites):
    groups = defaultdict(lambda: defaultdict(list))
    for s in suites:
        for r in report.select(s):
            groups[r.identity.split("[")[0]][r.identity].append(r)
    return groups


def test_criterion_07_family_closed_forms(reports, capsys):
    """Every closed form validates as printed, or is flagged and has a validating variant."""
    bad, flagged = [], []
    for f in FAMILIES:
        rep = reports[f]
        ex = rep.excused
        for base, forms in _identity_groups(rep, ("lf-identities", "pascal")).items():
            good = [k for k, rs in forms.items() if all(r.passed for r in rs)]
            if base in forms and all(r.passed for r in forms[base]):
                continue
            if not good or base not in ex:
                bad.append((f, base, sorted(forms)))
            else:
                flagged.append(f"{base}->{good[0].split('[')[-1].rstrip(']')}")
        if not rep.ok():
            bad.append((f, "report", rep.summary()))
    report_line(capsys, 7, not bad, f"{len(flagged)} systematic errata with validating variants")
    assert not bad, bad


def test_criterion_08_step_equations(reports, capsys):
    bad, details = [], []
    for f in STEP_FAMILIES:
        rep = reports[f]
        ex = rep.excused
        step = [r for r in rep.select("lf-identities") if ".lf_" in r.identity and 2 <= r.n <= 10
                and r.identity not in ex]
        names = {r.identity for r in step}
        ns = {r.n for r in step}
        if len(names) < 2 or not set(range(3 if f == "F22" else 2, 11)) <= ns or not all(r.passed for r in step):
            bad.append((f, sorted(names), sorted(ns), failing(step)))
        fwd = rep.select("lf-step")
        # rows up to n0 + 1 are Cholesky seeds
        steps = len({r.n for r in fwd if r.n > FORWARD_START[f] + 1})
        if not all(r.passed for r in fwd) or steps < {"F12": 8, "F22": 6}[f]:
            bad.append((f, "forward", steps, failing(fwd)))
        details.append(f"{f}: residual forms 2^{log2(worst(step))} over {sorted(names)}, "
                       f"{steps} forward steps dev {mpmath.nstr(worst(fwd), 3)}")
    report_line(capsys, 8, not bad, "; ".join(details))
    assert not bad, bad


def test_criterion_09_compatibility_relations(reports, capsys):
    bad, details = [], []
    for f in FAMILIES:
        rep = reports[f]
        suite = "lf32-constraints" if f == "F32" else "compat"
        exact = [r for r in rep.select(suite) if re.fullmatch(r"compat\.comp[12]", r.identity)]
        fd = [r for r in rep.select(suite) if r.identity.startswith(("compat.comp3", "compat.comp4"))]
        fd_ok = all(any(all(r.passed for r in rs) for rs in forms.values())
                    for base, forms in _group(fd).items())
        draws = [r for r in rep.select("compat") if "@draw" in r.identity]
        n_draws = len({r.identity.split("@")[1] for r in draws})
        ok = (exact and all(r.residual < TWO ** -192 for r in exact) and fd_ok and len(_group(fd)) == 2
              and n_draws == INDEPENDENCE_DRAWS and all(r.residual < TWO ** -192 for r in draws))
        if not ok:
            bad.append((f, failing(exact + fd + draws)))
        details.append(f"{f}: comp1/2 2^{log2(worst(exact))}, {n_draws} draws 2^{log2(worst(draws))}")
    report_line(capsys, 9, not bad, "; ".join(details))
    assert not bad, bad


def _group(recs):
    g = defaultdict(lambda: defaultdict(list))
    for r in recs:
        g[r.identity.split("[")[0]][r.identity].append(r)
    return g


def test_criterion_10_toda(reports, capsys):
    bad, n_fd = [], 0
    for f in FAMILIES:
        recs = reports[f].select("toda")
        fd = [r for r in recs if r.identity == "toda.fd_order"]
        shift = [r for r in recs if r.identity == "toda.moment_shift"]
        first = {r.identity for r in recs}
        needed = {"toda.beta", "toda.log_gamma", "toda.log_H", "toda.second_order", "toda.moment_shift"}
        if not needed <= first or {r.n for r in shift} != set(range(7)) or len(fd) != 3:
            bad.append((f, "coverage", sorted(first)))
        if not all(r.passed for r in recs):
            bad.append((f, failing(recs)))
        n_fd += len(fd)
    report_line(capsys, 10, not bad, f"Toda relations within FD budgets; {n_fd} FD order checks in [3.5, 4.5]")
    assert not bad, bad


def _criteria_3_to_8(rec):
    ident = rec.identity
    if ident.startswith("psi.diagonal_count"):
        return False
    return (ident.startswith(("psi.", "shift.", "pascal.", "compat.jacobi", "lf.forward"))
            or rec.suite == "lf-identities")


def test_criterion_11_precision_doubling(reports, high_records, capsys):
    bad, shrink = [], []
    for f in FAMILIES:
        ex = reports[f].excused
        low = {(r.identity, r.n): r for r in reports[f].records if _criteria_3_to_8(r)}
        high = {(r.identity, r.n): r for r in high_records[f] if _criteria_3_to_8(r)}
        for key, r in low.items():
            if r.identity in ex or not r.passed:
                continue
            h = high.get(key)
            if h is None:
                bad.append((f, key, "missing at 768 bits"))
            elif h.residual == 0:
                shrink.append(mpmath.inf)
            else:
                # an exact zero is known only to one rounding unit of the working precision
                s = max(r.residual, TWO ** -BITS) / h.residual
                shrink.append(s)
                if s < TWO ** 100:
                    bad.append((f, key, log2(r.residual), log2(h.residual)))
    least = min(shrink) if shrink else mpmath.mpf(0)
    report_line(capsys, 11, not bad, f"{len(shrink)} residuals compared, least shrink 2^{log2(least)}; "
                                     f"elapsed {time.time() - T0:.0f}s")
    assert not bad, bad[:10]
