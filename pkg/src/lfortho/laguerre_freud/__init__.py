"""Family closed forms, Laguerre-Freud step equations and the forward recursion driver.

Every closed form is a hypothesis checked against the Cholesky ground truth.
Where a printed expression fails, a corrected variant is evaluated next to it
and the report records which one holds.
"""
from __future__ import annotations

import mpmath

from ..exceptions import DenominatorUnderflow
from ..hankel import BUFFER, SpectralData, spectral_pipeline
from ..precision import PrecisionContext
from ..weights import FamilySpec
from . import f12, f22, f32
from .common import (PRINTED, ErrataFlag, ForwardRow, Ground, IdentityRecord, LFReport, Params, Seq,
                     classify_errata, rel)

__all__ = [
    "LFReport", "IdentityRecord", "ForwardRow", "ErrataFlag", "Ground", "Params",
    "lf12_identities", "lf12_step", "lf22_helpers", "lf22_p1", "lf22_step",
    "lf32_identities", "lf32_compat", "lf_forward_run", "identity_report", "valid_range",
    "classify_errata", "PRINTED", "FORWARD_START",
]

# first index each family's closed forms can be evaluated at
_FIRST = {"F12": 1, "F22": 2, "F32": 3}
# first step of a forward run; the F22 gamma quotient is 0/0 at n = 2 when the
# weight collapses to a Poisson one (a_i = b_i + 1), so runs start one later
FORWARD_START = {"F12": 1, "F22": 3}


def _seq(values, name, first):
    return values if callable(values) else Seq(list(values), name, first)


def valid_range(family: str, K: int):
    """Indices ``n`` at which the family's closed forms are checked (public order ``K``)."""
    return range(_FIRST[family], K - 4 + 1)


def lf12_identities(spec: FamilySpec, data: SpectralData, n, ground=None):
    return f12.identities(spec, data, n, ground)


def lf12_step(spec: FamilySpec, n, beta, gamma, ctx: PrecisionContext, variant="corrected"):
    """``(gamma_{n+2}, beta_{n+2})`` from ``beta_{n-1..n+1}``, ``gamma_{n-1..n+1}``.

    ``beta``/``gamma`` are indexed absolutely (``gamma[0]`` is ignored).
    """
    return f12.step(spec, n, _seq(beta, "beta", 0), _seq(gamma, "gamma", 1), ctx, variant)


def lf22_helpers(spec: FamilySpec, n, beta, gamma, ctx: PrecisionContext, with_fg=True):
    """Printed ``A_n, Â_n, B_n, C_n, D_n, E_n, F_n, G_n`` as a :class:`f22.Helpers`."""
    p = Params.of(spec, ctx)
    with ctx:
        return f22.helpers_printed(p, n, _seq(beta, "beta", 0), _seq(gamma, "gamma", 1), ctx, with_fg)


def lf22_p1(spec: FamilySpec, data: SpectralData, n, variant=PRINTED):
    """``p^1_{n-1}`` three ways: ``(A/B route, first compatibility, second compatibility)``."""
    g = Ground(spec, data)
    g.check_range(n, 2, 4)
    with g.ctx:
        return f22.p1_routes(g.prm, n, g.B, g.G, variant, g.ctx)


def lf22_step(spec: FamilySpec, n, beta, gamma, ctx: PrecisionContext, variant="corrected"):
    """``(beta_{n+2}, gamma_{n+2})``: ``gamma`` from the ``F/G`` quotient, then ``beta``."""
    return f22.step(spec, n, _seq(beta, "beta", 0), _seq(gamma, "gamma", 1), ctx, variant)


def lf32_identities(spec: FamilySpec, data: SpectralData, n, ground=None):
    return f32.identities(spec, data, n, ground)


def lf32_compat(spec: FamilySpec, data: SpectralData, n, flow=None, ground=None):
    return f32.compat(spec, data, n, flow, ground)


_IDENTITIES = {"F12": f12.identities, "F22": f22.identities, "F32": f32.identities}


def identity_report(spec: FamilySpec, data: SpectralData, ns=None, ctx: PrecisionContext | None = None) -> LFReport:
    """Closed-form residuals over ``ns`` (default: the whole valid range) with errata flags."""
    K = data.K - BUFFER
    ns = valid_range(spec.family, K) if ns is None else ns
    g = Ground(spec, data)
    report = LFReport(spec.family)
    for n in ns:
        report.records.extend(_IDENTITIES[spec.family](spec, data, n, g))
    classify_errata(report, (ctx or data.ctx).eps_verify)
    return report


def lf_forward_run(spec: FamilySpec, steps: int, K: int = 16, ctx: PrecisionContext | None = None,
                   data: SpectralData | None = None, variant="corrected") -> LFReport:
    """Seed the minimal window from Cholesky values and iterate the step equations.

    Each step produces ``beta_{n+2}, gamma_{n+2}``; a denominator underflow ends
    the run and is recorded in ``report.stopped``.
    """
    if spec.family not in ("F12", "F22"):
        raise ValueError(f"no explicit step equations for {spec.family}")
    if steps < 0:
        raise ValueError("steps must be non-negative")
    if spec.family == "F22" and variant == PRINTED:
        raise ValueError("the printed F22 gamma equation needs gamma_{n+2} on its right-hand side")
    ctx = ctx or PrecisionContext()
    n0 = FORWARD_START[spec.family]
    top = n0 + 1 + steps
    if data is None:
        data = spectral_pipeline(spec, max(K, top + 1), ctx)
    if top >= len(data.beta):
        raise ValueError(f"{steps} steps need beta up to index {top}; order too small")
    beta = list(data.beta[: n0 + 2])
    gamma = list(data.gamma[: n0 + 2])
    report = LFReport(spec.family)
    p = Params.of(spec, ctx)
    for k in range(n0 + 2):
        report.forward.append(ForwardRow(k, beta[k], data.beta[k], gamma[k], data.gamma[k]))
    B, G = Seq(beta, "beta"), Seq(gamma, "gamma", 1)
    for n in range(n0, n0 + steps):
        try:
            if spec.family == "F12":
                gam, bet = f12.step(p, n, B, G, ctx, variant)
            else:
                bet, gam = f22.step(p, n, B, G, ctx, variant)
        except DenominatorUnderflow as exc:
            report.stopped = str(exc)
            break
        beta.append(bet)
        gamma.append(gam)
        report.forward.append(ForwardRow(n + 2, bet, data.beta[n + 2], gam, data.gamma[n + 2]))
    return report


def max_forward_deviation(report: LFReport):
    """Largest relative deviation of beta or gamma over the forward rows."""
    vals = [max(r.rel_beta, r.rel_gamma) for r in report.forward]
    return max(vals) if vals else mpmath.mpf(0)
