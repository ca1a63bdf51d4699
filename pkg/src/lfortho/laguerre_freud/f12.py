"""Closed forms for the family with sigma of degree 1 and theta of degree 3."""
from __future__ import annotations

import mpmath

from ..hankel import SpectralData
from ..weights import FamilySpec
from .common import PRINTED, Ground, IdentityRecord, Params, Tracked, attempt, guard, half, rel


def _bracket(p: Params, n, B, G, c=1):
    """Common bracket of the p^1 and pi^{[2]} expressions; ``c`` scales the ``n^2`` term."""
    b1, b2 = p.b
    return (G(n) + G(n + 1) + G(n + 2) + (B(n + 1) + b1) * (B(n + 1) + b2)
            + B(n) * (B(n + 1) + B(n) + b1 + b2)
            - n * (2 * B(n) + B(n + 1) + b1 + b2 - c * n) - p.eta)


def p1_formula(p: Params, n, B, G, ctx=None):
    """Subleading coefficient ``p^1_n`` from neighbouring recurrence coefficients."""
    a1 = p.a[0]
    den = p.eta + G(n + 1)
    if ctx is not None:
        guard("eta+gamma_{n+1}", den, max(abs(p.eta), abs(G(n + 1))), ctx, n)
    return half(n * (n + 1)) - n * B(n) - (G(n + 1) * _bracket(p, n, B, G) - p.eta * (n + 1) * (B(n) + a1)) / den


def pi2_formula(p: Params, n, B, G, variant=PRINTED, ctx=None):
    """``pi^{[2]}_{n-1}``.

    ``printed`` keeps ``-2n`` inside the bracket and the parameter sum ``a_1 + a_2``
    (read with ``a_2 = 0``); ``a_term`` only swaps that sum for ``beta_n + a_1``;
    ``corrected`` also restores ``-n``, i.e. the same bracket as in :func:`p1_formula`.
    """
    a1 = p.a[0]
    c, tail = {PRINTED: (2, a1), "a_term": (2, B(n) + a1), "corrected": (1, B(n) + a1)}[variant]
    if ctx is not None:
        guard("eta+gamma_{n+1}", p.eta + G(n + 1), max(abs(p.eta), abs(G(n + 1))), ctx, n)
    return (G(n + 1) * _bracket(p, n, B, G, c) - p.eta * (n + 1) * tail) / (p.eta + G(n + 1))


def psi0_formula(p: Params, n, B, H):
    return p.eta * H(n) * (n + B(n) + p.a[0])


def psi1_formula(p: Params, n, B, H, pi2_nm1):
    return p.eta * (H(n + 1) + H(n) * (pi2_nm1 + (n + 1) * (B(n) + p.a[0])))


def psi2_formula(p: Params, n, B, H):
    b1, b2 = p.b
    return H(n + 2) * (B(n) + B(n + 1) + B(n + 2) + b1 + b2 - n)


def _cubic_block(p: Params, n, B):
    b1, b2 = p.b
    s = b1 + b2
    return (B(n) ** 3 - B(n + 1) ** 3 + B(n + 1) ** 2 + B(n) ** 2 + B(n) * B(n + 1)
            + s * (B(n) ** 2 - B(n + 1) ** 2 + B(n + 1) + B(n))
            - n * (2 * B(n) ** 2 - B(n) * B(n + 1) - B(n + 1) ** 2 + 3 * B(n)))


def superdiagonal_sides(p: Params, n, B, G, pi2_nm1, variant=PRINTED):
    """Both sides of the first-superdiagonal compatibility relation.

    The corrected form flips ``beta_{n+1}`` in the ``eta`` term and ``b_1 + b_2``
    in the ``gamma_{n+2}`` coefficient, and subtracts ``n`` on the right.
    """
    b1, b2 = p.b
    s = b1 + b2
    u = B(n) + 1 - B(n + 1)
    if variant == PRINTED:
        lhs = p.eta * (B(n) + B(n + 1) - 1)
        g2c = n - 2 * B(n + 1) - B(n + 2) + s + 1
        extra = 0
    else:
        lhs = p.eta * (B(n) - B(n + 1) - 1)
        g2c = n - 2 * B(n + 1) - B(n + 2) - s + 1
        extra = -n
    rhs = (G(n + 2) * g2c + G(n + 1) * u + G(n) * (B(n - 1) + 2 * B(n) + s - n + 2)
           + _cubic_block(p, n, B) + u * (n * (n + 1) - n * s + b1 * b2 - pi2_nm1) + extra)
    return lhs, rhs


def step(spec_or_params, n, B, G, ctx, variant="corrected"):
    """One forward step: ``(gamma_{n+2}, beta_{n+2})`` from indices ``n-1 .. n+1``.

    ``beta_{n+2}`` is evaluated with the ``gamma_{n+2}`` just produced. ``variant``
    selects the printed or corrected ``beta`` equation (the ``gamma`` one validates
    as printed).
    """
    p = spec_or_params if isinstance(spec_or_params, Params) else Params.of(spec_or_params, ctx)
    if n < 1:
        raise ValueError(f"step needs n >= 1, got {n}")
    with ctx:
        eta, a1 = p.eta, p.a[0]
        b1, b2 = p.b
        s = b1 + b2
        g_m1, g0, g1 = G(n - 1), G(n), G(n + 1)
        guard("gamma_{n+1}", g1, g1, ctx, n)
        guard("eta+gamma_n", eta + g0, max(abs(eta), abs(g0)), ctx, n)
        guard("eta+gamma_{n+1}", eta + g1, max(abs(eta), abs(g1)), ctx, n)
        inner_prev = (g_m1 + g0 + g1 + (B(n) + b1) * (B(n) + b2) + B(n - 1) * (B(n) + B(n - 1) + s)
                      - (n - 1) * (2 * B(n - 1) + B(n) + s - n + 1) - eta)
        gamma_next = ((eta + g1) / g1 * n * (B(n - 1) - B(n) + 1)
                      - (g0 + g1 + (B(n + 1) + b1) * (B(n + 1) + b2) + B(n) * (B(n + 1) + B(n) + s)
                         - n * (2 * B(n) + B(n + 1) + s - n) - eta)
                      + eta / g1 * (n + 1) * (B(n) + a1)
                      + (eta + g1) / ((eta + g0) * g1) * (g0 * inner_prev - eta * n * (B(n - 1) + a1)))
        guard("gamma_{n+2}", gamma_next, max(abs(g1), 1), ctx, n)
        beta_next = beta_from_gamma(p, n, B, G, gamma_next, variant)
    return gamma_next, beta_next


def beta_from_gamma(p: Params, n, B, G, gamma_next, variant="corrected"):
    """``beta_{n+2}`` given ``gamma_{n+2}`` (explicit form of the superdiagonal relation)."""
    eta, a1 = p.eta, p.a[0]
    b1, b2 = p.b
    s = b1 + b2
    u = B(n) - B(n + 1) + 1
    gG = lambda k: gamma_next if k == n + 2 else G(k)
    p1_like = (G(n + 1) * _bracket(p, n, B, gG) - eta * (n + 1) * (B(n) + a1)) / (eta + G(n + 1))
    if variant == PRINTED:
        head = n - 2 * B(n + 1) + s + 1
        eta_term = eta * (1 - B(n) - B(n + 1))
        extra = 0
    else:
        head = n - 2 * B(n + 1) - s + 1
        eta_term = eta * (1 - B(n) + B(n + 1))
        extra = -n
    body = (eta_term + G(n + 1) * u + G(n) * (B(n - 1) + 2 * B(n) + s - n + 2) + _cubic_block(p, n, B)
            + u * (n * (n + 1) - n * s + b1 * b2 - p1_like) + extra)
    return head + body / gamma_next


def identities(spec: FamilySpec, data: SpectralData, n, ground: Ground | None = None):
    """Residuals of every F12 closed form at index ``n`` (all variants)."""
    g = ground or Ground(spec, data)
    g.check_range(n, 1, 4)
    p, B, G, H = g.tracked()
    out = []
    with g.ctx:
        attempt(out, "f12.p1", n, lambda: rel(p1_formula(p, n, B, G, g.ctx), Tracked(g.p1(n))))
        true_pi2 = Tracked(g.pi(2, n - 1))
        for v in (PRINTED, "a_term", "corrected"):
            attempt(out, "f12.pi2", n, lambda: rel(pi2_formula(p, n, B, G, v, g.ctx), true_pi2), v)
        out.append(IdentityRecord("f12.psi0", n, rel(psi0_formula(p, n, B, H), g.psi(0, n))))
        out.append(IdentityRecord("f12.psi1", n, rel(psi1_formula(p, n, B, H, true_pi2), g.psi(1, n))))
        out.append(IdentityRecord("f12.psi2", n, rel(psi2_formula(p, n, B, H), g.psi(2, n))))
        for v in (PRINTED, "corrected"):
            lhs, rhs = superdiagonal_sides(p, n, B, G, true_pi2, v)
            out.append(IdentityRecord("f12.superdiagonal", n, rel(lhs, rhs), v))
        attempt(out, "f12.lf_gamma", n, lambda: rel(step(p, n, B, G, g.ctx, PRINTED)[0], G(n + 2)))
        for v in (PRINTED, "corrected"):
            attempt(out, "f12.lf_beta", n,
                    lambda: rel(beta_from_gamma(p, n, B, G, guard("gamma_{n+2}", G(n + 2), 1, g.ctx, n), v),
                                B(n + 2)), v)
    return out
