"""Closed forms and constraint relations for the family with sigma and theta both cubic."""
from __future__ import annotations

import random
from fractions import Fraction

import mpmath

from ..hankel import SpectralData
from ..weights import FamilySpec
from .common import PRINTED, Ground, IdentityRecord, Params, Tracked, attempt, guard, half, rel

# readings of the nested G_n display
NESTED = "printed"
GROUPED = "grouped"


def a_helper(p: Params, n, B, G):
    return (n * (n + 1) + n * (B(n - 1) + B(n) + B(n + 1)) + p.e1 * (n + B(n) + B(n + 1)) + p.e2
            + G(n) + G(n + 1) + G(n + 2) + B(n) ** 2 + B(n + 1) ** 2 + B(n) * B(n + 1))


def b_helper(p: Params, n, B, G, variant=PRINTED):
    """``B_n``; the corrected variant flips the sign of ``beta_{n-1}`` in ``n(b_1 + b_2 - beta_{n-1})``."""
    s, q = p.bsum, p.bprod
    bm = -B(n - 1) if variant == PRINTED else B(n - 1)
    return (-n * (B(n) ** 2 - B(n + 1) ** 2 + B(n + 1) + B(n) - G(n + 2))
            + (B(n + 1) - B(n) - 1) * (n * (s + bm) - q)
            - s * (B(n + 1) ** 2 - B(n) ** 2 - B(n) - B(n + 1))
            - G(n + 2) * (B(n + 2) + 2 * B(n + 1) + s - 1) - G(n + 1) * (B(n + 1) - B(n) - 1)
            + G(n) * (B(n - 1) + 2 * B(n) + s - (n - 2))
            - B(n + 1) ** 3 + B(n) ** 3 + B(n) ** 2 + B(n + 1) ** 2 + B(n) * B(n + 1))


def c_helper(p: Params, n, B):
    return p.eta + B(n + 1) - B(n - 2)


def d_helper(p: Params, n, B, G):
    s, q = p.bsum, p.bprod
    return (B(n) ** 3 + s * (B(n) ** 2 - B(n - 1) - B(n - 2) + half(n * (n - 1))) + q * B(n)
            - n * (B(n) ** 2 - B(n - 1) * B(n - 2) + s * B(n) + G(n - 1))
            - B(n) * (B(n - 1) + B(n - 2)) - 2 * B(n - 1) * B(n - 2) - B(n - 1) ** 2 - B(n - 2) ** 2
            + G(n) * (q + s * (B(n) + B(n - 1) - n + 1) - n + B(n - 1) + 2 * B(n) + s)
            - G(n + 1) * (s * (B(n) + B(n + 1) - n) + q + n - (B(n + 1) + 2 * B(n) + s)))


def e_helper(p: Params, n, B, G):
    return (n * G(n + 1) * (B(n) + B(n + 1)) + G(n + 1) * (B(n - 1) + B(n - 2)) - G(n) * B(n - 2)
            - (n - 1) * G(n) * (B(n - 1) + B(n)))


def f_helper(p: Params, n, B, G):
    return (G(n + 1) * (half(n * (n - 1)) + G(n + 1) + G(n + 2) + B(n) ** 2 + B(n + 1) ** 2 + B(n) * B(n + 1))
            - G(n) * (half((n - 1) * (n - 2)) + G(n - 1) + G(n) + B(n) ** 2 + B(n - 1) ** 2 + B(n) * B(n - 1)))


def g_helper(p: Params, n, B, G, reading=NESTED):
    """``G_n``: ``nested`` keeps the gamma terms inside the ``(gamma_{n+1} - gamma_n)`` factor."""
    tail = G(n + 1) * B(n + 1) - G(n) * (B(n - 1) - 1)
    if reading == NESTED:
        return (G(n + 1) - G(n)) * (p.e2 + p.e1 * (B(n) + n + tail))
    return (G(n + 1) - G(n)) * (p.e2 + p.e1 * (B(n) + n)) + p.e1 * tail


def pi2_formula(p: Params, n, B, G, variant=PRINTED, ctx=None):
    """``pi^{[-2]}_{n-2}``; printed ``(eta A + B)/C`` or the re-derived quotient."""
    A = a_helper(p, n, B, G)
    eta = p.eta
    if variant == PRINTED:
        C = c_helper(p, n, B)
        if ctx is not None:
            guard("C_n", C, max(abs(eta), abs(B(n + 1)), abs(B(n - 2))), ctx, n)
        return (eta * A + b_helper(p, n, B, G)) / C
    u = 1 + B(n + 1) - B(n)
    R = (G(n) * (p.e1 + B(n - 1) + B(n) + B(n + 1) + n - 1)
         - G(n + 2) * (p.e1 + B(n) + B(n + 1) + B(n + 2) + n) - 2 * n * (B(n) - B(n + 1) - 1))
    den = eta * u + B(n + 1) - B(n) - 1
    if ctx is not None:
        guard("eta(1+beta_{n+1}-beta_n)+beta_{n+1}-beta_n-1", den, max(abs(eta * u), abs(u), 1), ctx, n)
    return (eta * (u * A - R) + b_helper(p, n, B, G, "corrected")) / den


def p1_formula(p: Params, n, B, G, variant=PRINTED, ctx=None):
    """``p^1_{n-2}`` from the ``pi^{[-2]}_{n-2}`` quotient."""
    pi2 = pi2_formula(p, n, B, G, variant, ctx)
    if variant == PRINTED:
        return pi2 + B(n - 2) - (n - 1) * B(n - 1) - half((n - 3) * (n - 4))
    return pi2 - half(n * (n - 1)) - (n - 1) * B(n - 1) + B(n - 2)


def pi3_formula(p: Params, n, B, G, p1_nm2, variant=PRINTED, reading=NESTED):
    """``pi^{[-3]}_{n-3}`` given ``p^1_{n-2}``.

    The corrected variant negates the printed bracket and adds
    ``n b_1 b_2 - n(n-1)/2 (beta_{n-2} + beta_{n-1} + beta_n)``.
    """
    eta = p.eta
    body = (p1_nm2 * ((eta + 1) * (G(n) - G(n + 1)) + B(n) + B(n - 1) + B(n - 2) + p.bsum)
            + d_helper(p, n, B, G) + (eta + 1) * e_helper(p, n, B, G) + (eta - 1) * f_helper(p, n, B, G)
            + eta * g_helper(p, n, B, G, reading))
    if variant == PRINTED:
        return body
    return -body + n * p.bprod - half(n * (n - 1)) * (B(n - 2) + B(n - 1) + B(n))


def psi_formulas(p: Params, n, B, G, H, pi):
    """All seven diagonal closed forms; ``pi(k, m)`` supplies dressed Pascal entries.

    Keys carry the reading: ``psi-2`` reads the printed ``beta_+`` as ``beta_n``
    (``psi-2:beta_{n-1}`` is the other candidate), ``psi0_b`` is the theta-route
    form as printed and ``psi0_b:corrected`` has ``+b_1 b_2`` and ``+pi^{[-3]}``.
    """
    eta, e1, e2, s, q = p.eta, p.e1, p.e2, p.bsum, p.bprod
    out = {}
    for key, bp in (("psi-2", B(n)), ("psi-2:beta_{n-1}", B(n - 1))):
        out[key] = eta * H(n + 2) * (bp + B(n + 1) + B(n + 2) + e1 + n)
    out["psi-1"] = eta * H(n + 1) * (pi(2, n - 2) + n * (B(n - 1) + B(n) + B(n + 1) + e1) + G(n) + G(n + 1)
                                     + G(n + 2) + B(n + 1) ** 2 + B(n) ** 2 + B(n + 1) * B(n)
                                     + (B(n) + B(n + 1)) * e1 + e2)
    out["psi0_eta"] = eta * H(n) * (
        pi(3, n - 3) + pi(2, n - 2) * (B(n - 2) + B(n - 1) + B(n) + e1)
        + n * (B(n - 1) ** 2 + B(n) ** 2 + B(n) * B(n - 1) + e2 + (B(n) + B(n - 1)) * e1 + G(n - 1) + G(n) + G(n + 1))
        + G(n) * (B(n - 1) + 2 * B(n) + e1) + G(n + 1) * (B(n + 1) + 2 * B(n) + e1)
        + (B(n) + p.a[0]) * (B(n) + p.a[1]) * (B(n) + p.a[2]))
    head = B(n) * (B(n) + p.b[0]) * (B(n) + p.b[1]) + G(n) * (B(n - 1) + 2 * B(n) + s) + G(n + 1) * (B(n + 1) + 2 * B(n) + s)
    sq = B(n) ** 2 + B(n - 1) ** 2 + B(n) * B(n - 1) + G(n - 1) + G(n) + G(n + 1)
    tail = pi(-2, n - 2) * (B(n) + B(n - 1) + B(n - 2) + s)
    out["psi0_b"] = H(n) * (head - n * (sq + (B(n) + B(n - 1)) * s * q) + tail - pi(-3, n - 3))
    out["psi0_b:corrected"] = H(n) * (head - n * (sq + (B(n) + B(n - 1)) * s + q) + tail + pi(-3, n - 3))
    out["psi1"] = H(n + 1) * (B(n + 1) ** 2 + B(n) ** 2 + B(n) * B(n + 1) + (B(n) + B(n + 1)) * s + q
                              + G(n + 2) + G(n + 1) + G(n) - n * (B(n + 1) + B(n) + B(n - 1) + s) + pi(-2, n - 2))
    out["psi2"] = H(n + 2) * (B(n) + B(n + 1) + B(n + 2) + s - n)
    return out


_PSI_TRUTH = {"psi-2": -2, "psi-1": -1, "psi0_eta": 0, "psi0_b": 0, "psi1": 1, "psi2": 2}


def identities(spec: FamilySpec, data: SpectralData, n, ground: Ground | None = None):
    """Residuals of every F32 closed form at index ``n`` (all variants and readings)."""
    g = ground or Ground(spec, data)
    g.check_range(n, 3, 4)
    p, B, G, H = g.tracked()
    out = []
    with g.ctx:
        psi = psi_formulas(p, n, B, G, H, lambda k, m: Tracked(g.pi(k, m)))
        for key, value in psi.items():
            base, _, variant = key.partition(":")
            out.append(IdentityRecord(f"f32.{base}", n, rel(value, g.psi(_PSI_TRUTH[base], n)), variant or PRINTED))
        out.append(IdentityRecord("f32.psi0_routes", n, rel(psi["psi0_eta"], psi["psi0_b:corrected"])))
        true_pi2, true_pi3, true_p1 = (Tracked(x) for x in (g.pi(-2, n - 2), g.pi(-3, n - 3), g.p1(n - 2)))
        for v in (PRINTED, "corrected"):
            attempt(out, "f32.pi2", n, lambda: rel(pi2_formula(p, n, B, G, v, g.ctx), true_pi2), v)
            attempt(out, "f32.p1", n, lambda: rel(p1_formula(p, n, B, G, v, g.ctx), true_p1), v)
        for v, reading, tag in ((PRINTED, NESTED, PRINTED), (PRINTED, GROUPED, "grouped"),
                                ("corrected", NESTED, "corrected_nested"), ("corrected", GROUPED, "corrected")):
            out.append(IdentityRecord("f32.pi3", n, rel(pi3_formula(p, n, B, G, true_p1, v, reading), true_pi3), tag))
    return out


def _comp_algebraic(g: Ground, n):
    _, B, G, _ = g.tracked()
    pi = lambda k, m: Tracked(g.pi(k, m))
    return {
        "comp1": (pi(2, n - 1) - pi(2, n - 2), n * (1 - B(n) + B(n - 1))),
        "comp2": (pi(3, n - 2) - pi(3, n - 3),
                  pi(2, n - 2) * (B(n - 2) - B(n) + 1) + n * G(n - 1) - (n - 1) * G(n)),
        "comp1_bis": (pi(-2, n - 2) - pi(-2, n - 1), n * (B(n - 1) - B(n) - 1)),
        "comp2_bis": (pi(-3, n - 2) - pi(-3, n - 3),
                      pi(-2, n - 2) * (1 + B(n) - B(n - 2)) - (n - 1) * G(n) + n * G(n - 1)),
    }


def compat(spec: FamilySpec, data: SpectralData, n, flow=None, ground: Ground | None = None):
    """Compatibility relations at ``n``.

    Returns ``(records, flow_records)``: algebraic relations as
    :class:`IdentityRecord`, derivative relations as ``FlowResidual`` with a
    finite-difference budget (only when ``flow``, an ``EtaFamily``, is given).
    """
    from ..toda import FlowResidual, budget

    g = ground or Ground(spec, data)
    g.check_range(n, 3, 4)
    out, flows = [], []
    with g.ctx:
        for name, (lhs, rhs) in _comp_algebraic(g, n).items():
            out.append(IdentityRecord(f"compat.{name}", n, rel(lhs, rhs)))
            if name == "comp2_bis":
                out.append(IdentityRecord(f"compat.{name}", n, rel(lhs, -rhs), "negated"))
        if flow is None:
            return out, flows
        B, G = g.B, g.G

        def fd(name, quantity, target, variant=PRINTED):
            est = flow.theta(quantity)
            scale = max(abs(est.value), abs(target), 1)
            flows.append((variant, FlowResidual(name, n, abs(est.value - target) / scale,
                                                budget(est.error_estimate / scale, 1, g.ctx))))

        pi2 = lambda f, e: f.pascal_at(e, -1)[n, n - 2]
        pi3 = lambda f, e: f.pascal_at(e, -1)[n, n - 3]
        fd("compat.comp3", pi2, (n - 1) * G(n) - n * G(n - 1))
        rhs4 = (G(n) - G(n - 2)) * g.pi(-2, n - 2) + (n - 1) * (B(n - 2) - B(n - 1) - 1) * G(n)
        fd("compat.comp4", pi3, rhs4)
        fd("compat.comp4", pi3, -rhs4, "negated")
        fd("compat.theta_p1", lambda f, e: f.data_at(e).p1[n - 1], -G(n - 1))
    return out, flows


def random_parameters(family: str, rng: random.Random):
    """Positive rational ``(a, b)`` of the family's shape, away from integers."""
    from ..weights import FAMILY_SHAPES

    M, N = FAMILY_SHAPES[family]
    draw = lambda: Fraction(rng.randint(1, 40), rng.choice((7, 11, 13))) + Fraction(1, 17)
    return tuple(draw() for _ in range(M)), tuple(draw() for _ in range(N))


def parameter_independence(spec: FamilySpec, K, ctx, n_values, draws=10, seed=0):
    """comp1/comp2 residuals under ``draws`` random ``(a, b)`` at fixed ``eta``.

    Returns ``[(a, b, records)]``.
    """
    from ..hankel import spectral_pipeline

    rng = random.Random(seed)
    out = []
    for _ in range(draws):
        a, b = random_parameters(spec.family, rng)
        s = spec.with_params(a, b)
        d = spectral_pipeline(s, K, ctx)
        g = Ground(s, d)
        recs = []
        with ctx:
            for n in n_values:
                for name in ("comp1", "comp2"):
                    lhs, rhs = _comp_algebraic(g, n)[name]
                    recs.append(IdentityRecord(f"compat.{name}", n, rel(lhs, rhs)))
        out.append((a, b, recs))
    return out
