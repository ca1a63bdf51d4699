"""Residual suites for one family spec, collected into a serializable report.

Each suite yields :class:`Record` rows ``(suite, identity, n, residual, budget)``.
Alternative readings of a closed form are labelled ``identity[variant]``; a
failing form is listed in the errata when another reading of the same identity
validates, and errata-listed identities do not count against the overall verdict.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from .hankel import build_moment_matrix, hankel_determinants, reconstruction_residual, spectral_pipeline
from .laguerre_freud import f32, identity_report, lf_forward_run
from .laguerre_freud.common import PRINTED, ErrataFlag, IdentityRecord, LFReport, classify_errata
from .operators import (STRUCTURE_METHODS, all_structure_matrices, compatibility_residual, dressed_pascal,
                        jacobi_by_conjugation, jacobi_matrix, jacobi_symmetry_residual, pascal_inverse_residual,
                        pascal_shift_residual, pi_diagonal_residuals, psi_extreme_diagonals, relative_disagreement,
                        shift_structure_residual)
from .precision import PrecisionContext
from .toda import (EtaFamily, convergence_order, gauge_residual, moment_shift_residual, sato_wilson_residual,
                   toda_residuals)
from .weights import FamilySpec, pearson_residual

SUITES = ("structure", "pascal", "lf-identities", "lf-step", "compat", "lf32-constraints", "toda")
SAMPLE_POINTS = (Fraction(1, 2), Fraction(1, 3), Fraction(3))
PEARSON_RANGE = 200
DETERMINANT_RANGE = 14
FORWARD_STEPS = {"F12": 8, "F22": 6}
FORWARD_BUDGET = {"F12": "1e-20", "F22": "1e-15"}
INDEPENDENCE_DRAWS = 10


def suites_for(family: str):
    """Suites that apply to ``family`` (the 3F2 family has constraints instead of step equations)."""
    if family == "F32":
        return tuple(s for s in SUITES if s != "lf-step")
    return tuple(s for s in SUITES if s != "lf32-constraints")


def label(identity: str, variant: str = PRINTED) -> str:
    return identity if variant == PRINTED else f"{identity}[{variant}]"


@dataclass(frozen=True)
class Record:
    suite: str
    identity: str
    n: int
    residual: mpmath.mpf
    budget: mpmath.mpf

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.budget)


@dataclass(frozen=True)
class Erratum:
    identity: str
    detail: str


@dataclass
class VerificationReport:
    manifest: dict
    records: list = field(default_factory=list)
    errata: list = field(default_factory=list)
    failure: str | None = None

    def sort(self):
        self.records.sort(key=lambda r: (r.suite, r.identity, r.n))
        self.errata.sort(key=lambda e: e.identity)

    @property
    def excused(self):
        return {e.identity for e in self.errata}

    def summary(self):
        """Counts of passing records, failures, failures of erratum identities, and errata."""
        ex = self.excused
        passed = sum(r.passed for r in self.records)
        excused = sum(not r.passed and r.identity in ex for r in self.records)
        return {"pass": passed, "fail": len(self.records) - passed - excused, "excused": excused,
                "errata": len(self.errata)}

    def ok(self) -> bool:
        """True iff every record passes, ignoring identities listed in the errata."""
        ex = self.excused
        return self.failure is None and all(r.passed or r.identity in ex for r in self.records)

    def select(self, suite=None, prefix=""):
        return [r for r in self.records if (suite is None or r.suite == suite) and r.identity.startswith(prefix)]


class _Run:
    """Shared state for one spec: pipeline data, structure matrices and the eta family."""

    def __init__(self, spec: FamilySpec, K: int, ctx: PrecisionContext, tol=None, steps=None, seed=0):
        self.spec, self.K, self.ctx = spec, K, ctx
        self.tol = ctx.eps_verify if tol is None else mpmath.mpf(tol)
        self.steps = FORWARD_STEPS.get(spec.family) if steps is None else steps
        self.seed = seed
        self._flow = None
        self._psi = None
        self.data = spectral_pipeline(spec, K, ctx)

    @property
    def flow(self) -> EtaFamily:
        if self._flow is None:
            self._flow = EtaFamily(self.spec, self.K, self.ctx, data=self.data)
        return self._flow

    @property
    def psi(self):
        if self._psi is None:
            self._psi = all_structure_matrices(self.spec, self.data)
        return self._psi

    def rec(self, out, suite, identity, n, residual, budget=None):
        out.append(Record(suite, identity, n, residual, self.tol if budget is None else budget))


def _variant_records(run: _Run, suite, items):
    """Records plus errata for ``(identity, variant, n, residual)`` items with competing readings."""
    rep = LFReport(run.spec.family)
    rep.records = [IdentityRecord(i, n, r, v) for i, v, n, r in items]
    return _from_lf(run, suite, rep)


def _from_lf(run: _Run, suite, rep: LFReport):
    flags = classify_errata(rep, run.tol)
    out = [Record(suite, label(r.identity, r.variant), r.n, r.residual, run.tol)
           for r in rep.records if r.residual is not None]
    errata = [Erratum(f.identity, f.detail) for f in flags if f.validating_variant is not None or f.systematic]
    for ident in rep.identities():
        ok = rep.accepted_variant(ident, run.tol)
        if ok is None:
            continue
        for v in rep.variants(ident):
            if v in (ok, PRINTED):
                continue
            bad = [r for r in rep.residuals(ident, v) if r.residual > run.tol]
            if bad:
                errata.append(Erratum(label(ident, v), f"alternative reading '{v}' fails at {len(bad)} indices; "
                                                       f"'{ok}' validates"))
    return out, errata


def suite_structure(run: _Run):
    """Pearson equation, factorization, the structure matrix and the Jacobi matrix."""
    S, out = "structure", []
    spec, d, ctx, K = run.spec, run.data, run.ctx, run.K
    with ctx:
        run.rec(out, S, "pearson", PEARSON_RANGE, pearson_residual(spec, PEARSON_RANGE, ctx))
        K_int = len(d.H)
        G = build_moment_matrix(d.table, K_int)
        run.rec(out, S, "factor.reconstruction", K_int, reconstruction_residual(G, d.S, d.H, ctx))
        top = min(DETERMINANT_RANGE, K_int - 2)
        dets, dets_t = hankel_determinants(d.table, top + 1, ctx)
        for k in range(top + 1):
            h = dets[k] / dets[k - 1] if k else dets[0]
            run.rec(out, S, "factor.H_det", k, abs(d.H[k] - h) / abs(d.H[k]))
            if k:
                p1 = -dets_t[k - 1] / dets[k - 1]
                run.rec(out, S, "factor.p1_det", k, abs(d.p1[k] - p1) / max(abs(d.p1[k]), abs(p1)))

        M, N1 = spec.M, spec.N + 1
        psi = run.psi
        block = min(min(p.valid for p in psi.values()), K)
        for m, P in psi.items():
            scale = P.max_abs(block)
            run.rec(out, S, f"psi.off_band:{m}", block, P.off_band_max(-M, N1, block) / scale)
            found = P.nonzero_offsets(run.tol, block)
            run.rec(out, S, f"psi.diagonal_count:{m}", len(found),
                    mpmath.mpf(0 if found == list(range(-M, N1 + 1)) else 1), mpmath.mpf(0))
        main = psi[STRUCTURE_METHODS[0]]
        low, high = psi_extreme_diagonals(spec, d, block)
        for n in range(block - M):
            run.rec(out, S, "psi.lowest_diagonal", n, _rel(main[n + M, n], low[n]))
        for n in range(block - N1):
            run.rec(out, S, "psi.highest_diagonal", n, _rel(main[n, n + N1], high[n]))
            run.rec(out, S, "psi.highest_over_H", n, abs(main[n, n + N1] / d.H[n + N1] - 1))
        for m1, m2 in itertools.combinations(STRUCTURE_METHODS, 2):
            run.rec(out, S, f"psi.agreement:{m1}|{m2}", block, relative_disagreement(psi[m1], psi[m2], block))
        for z in SAMPLE_POINTS:
            r_minus, r_plus = shift_structure_residual(spec, d, main, z)
            run.rec(out, S, f"shift.theta_side@{z}", len(r_minus), max(r_minus))
            run.rec(out, S, f"shift.sigma_side@{z}", len(r_plus), max(r_plus))
        run.rec(out, S, "jacobi.symmetry", len(d.beta), jacobi_symmetry_residual(d))
        J = jacobi_matrix(d)
        run.rec(out, S, "jacobi.conjugation", block, relative_disagreement(J, jacobi_by_conjugation(d), block))
    return out, []


def _rel(lhs, rhs):
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs))


def suite_pascal(run: _Run):
    """Dressed Pascal matrices: diagonal closed forms, shifts and inverse."""
    S, out = "pascal", []
    d = run.data
    with run.ctx:
        Pi, PiInv = dressed_pascal(d, 1), dressed_pascal(d, -1)
        items = []
        for n in range(run.K - 3):
            for (name, v), r in pi_diagonal_residuals(d, n, Pi, PiInv).items():
                items.append((f"pascal.{name}", v, n, r))
        recs, errata = _variant_records(run, S, items)
        out.extend(recs)
        for z in SAMPLE_POINTS:
            run.rec(out, S, f"pascal.shift_up@{z}", len(d.beta), pascal_shift_residual(d, z, 1, Pi))
            run.rec(out, S, f"pascal.shift_down@{z}", len(d.beta), pascal_shift_residual(d, z, -1, PiInv))
        run.rec(out, S, "pascal.inverse", len(d.H), pascal_inverse_residual(d, Pi, PiInv))
    return out, errata


def suite_lf_identities(run: _Run):
    """Per-family closed forms for p^1, pi and psi diagonals and the step equations in residual form."""
    rep = identity_report(run.spec, run.data, ctx=run.ctx)
    return _from_lf(run, "lf-identities", rep)


def suite_lf_step(run: _Run):
    """Forward iteration of the step equations from a Cholesky seed, compared with Cholesky values."""
    S, out = "lf-step", []
    budget = mpmath.mpf(FORWARD_BUDGET[run.spec.family])
    rep = lf_forward_run(run.spec, run.steps, run.K, run.ctx, data=run.data)
    for row in rep.forward:
        run.rec(out, S, "lf.forward.beta", row.n, row.rel_beta, budget)
        run.rec(out, S, "lf.forward.gamma", row.n, row.rel_gamma, budget)
    if rep.stopped:
        run.rec(out, S, "lf.forward.stopped", len(rep.forward), mpmath.mpf(1), mpmath.mpf(0))
    return out, []


def _compat_records(run: _Run, suite):
    flow = run.flow
    items, budgets = [], {}
    for n in range(3, run.K - 4 + 1):
        recs, flows = f32.compat(run.spec, run.data, n, flow)
        items.extend((r.identity, r.variant, r.n, r.residual) for r in recs)
        for v, f in flows:
            items.append((f.identity, v, f.n, f.residual))
            budgets[(label(f.identity, v), f.n)] = f.budget
    recs, errata = _variant_records(run, suite, items)
    recs = [Record(r.suite, r.identity, r.n, r.residual, budgets.get((r.identity, r.n), r.budget)) for r in recs]
    errata = _fd_errata(recs, errata)
    return recs, errata


def _fd_errata(recs, errata):
    """Errata for FD-budgeted forms, where a single tolerance cannot decide the reading."""
    by_ident = {}
    for r in recs:
        base = r.identity.split("[")[0]
        by_ident.setdefault(base, {}).setdefault(r.identity, []).append(r)
    out = [e for e in errata if not _fd_identity(e.identity)]
    for base, forms in by_ident.items():
        if not _fd_identity(base):
            continue
        good = [k for k, rs in forms.items() if all(r.passed for r in rs)]
        if not good:
            continue
        for k, rs in forms.items():
            bad = [r for r in rs if not r.passed]
            if bad:
                out.append(Erratum(k, f"form fails at {len(bad)}/{len(rs)} indices; '{good[0]}' validates"))
    return out


def _fd_identity(name):
    return name.split("[")[0] in ("compat.comp3", "compat.comp4", "compat.theta_p1")


def suite_compat(run: _Run):
    """Compatibility of the structure and Jacobi matrices, plus comp1/comp2 under random parameters."""
    S, out, errata = "compat", [], []
    d, main = run.data, run.psi[STRUCTURE_METHODS[0]]
    with run.ctx:
        run.rec(out, S, "compat.jacobi", main.valid, compatibility_residual(d, main))
        run.rec(out, S, "compat.jacobi_transposed", main.valid, compatibility_residual(d, main, transposed=True))
    if run.spec.family != "F32":
        recs, errata = _compat_records(run, S)
        out.extend(recs)
    ns = range(3, run.K - 4 + 1)
    draws = f32.parameter_independence(run.spec, run.K, run.ctx, ns, INDEPENDENCE_DRAWS, run.seed)
    for i, (a, b, recs) in enumerate(draws):
        for r in recs:
            run.rec(out, S, f"{r.identity}@draw{i}", r.n, r.residual)
    return out, errata


def suite_lf32_constraints(run: _Run):
    """The 3F2 constraint relations comp1..comp4 and bis forms at the given spec."""
    return _compat_records(run, "lf32-constraints")


def suite_toda(run: _Run):
    """Toda relations, moment shift, polynomial flow, gauge check and finite-difference order."""
    S, out = "toda", []
    fam, ctx = run.flow, run.ctx
    for n in range(1, run.K - 3 + 1):
        for r in toda_residuals(fam, n):
            run.rec(out, S, r.identity, r.n, r.residual, r.budget)
    for n in range(7):
        r = moment_shift_residual(fam, n)
        run.rec(out, S, r.identity, n, r.residual, r.budget)
    for z in SAMPLE_POINTS:
        for n in range(1, 7):
            r = sato_wilson_residual(fam, z, n)
            run.rec(out, S, f"{r.identity}@{z}", n, r.residual, r.budget)
    r = gauge_residual(fam)
    run.rec(out, S, r.identity, r.n, r.residual, r.budget)
    with ctx:
        d = fam.data
        for n in (1, 2, 3):
            ratio = convergence_order(lambda e: fam.data_at(e).beta[n], fam.eta, ctx, d.gamma[n + 1] - d.gamma[n])
            run.rec(out, S, "toda.fd_order", n, abs(ratio - 4), mpmath.mpf("0.5"))
    return out, []


_SUITE_FUNCS = {
    "structure": suite_structure,
    "pascal": suite_pascal,
    "lf-identities": suite_lf_identities,
    "lf-step": suite_lf_step,
    "compat": suite_compat,
    "lf32-constraints": suite_lf32_constraints,
    "toda": suite_toda,
}


def run_suites(spec: FamilySpec, K: int = 16, ctx: PrecisionContext | None = None, suites=None, tol=None,
               steps=None, seed: int = 0, manifest=None, report: VerificationReport | None = None):
    """Run ``suites`` (default: all applicable) and return a sorted :class:`VerificationReport`.

    Suites not applicable to the family are skipped. Exceptions propagate after the
    records gathered so far have been stored in ``report`` (pass one in to keep them).
    """
    ctx = ctx or PrecisionContext()
    report = report if report is not None else VerificationReport(manifest or {})
    wanted = suites_for(spec.family) if suites is None else [s for s in suites if s in suites_for(spec.family)]
    unknown = [s for s in (suites or ()) if s not in SUITES]
    if unknown:
        raise ValueError(f"unknown suite(s) {unknown}; choose from {list(SUITES)}")
    if K < 12:
        raise ValueError(f"verification needs order >= 12, got {K}")
    try:
        run = _Run(spec, K, ctx, tol, steps, seed)
        for name in wanted:
            recs, errata = _SUITE_FUNCS[name](run)
            report.records.extend(recs)
            report.errata.extend(errata)
    finally:
        report.sort()
    return report


__all__ = ["SUITES", "Record", "Erratum", "VerificationReport", "run_suites", "suites_for", "label"]
