"""Closed forms for the family with sigma of degree 2 and theta of degree 3."""
from __future__ import annotations

from dataclasses import dataclass

import mpmath

from ..hankel import SpectralData
from ..weights import FamilySpec
from .common import PRINTED, Ground, IdentityRecord, Params, Tracked, attempt, guard, half, rel


@dataclass(frozen=True)
class Helpers:
    A: mpmath.mpf
    A_hat: mpmath.mpf
    B: mpmath.mpf
    C: mpmath.mpf
    D: mpmath.mpf
    E: mpmath.mpf
    F: mpmath.mpf | None
    G: mpmath.mpf | None


def _a_gamma_free(p: Params, n, B, G):
    """Polynomial part of the p^1 numerator that does not involve gamma_{n+2}."""
    eta, (a1, a2), (b1, b2) = p.eta, p.a, p.b
    sa, sb = a1 + a2, b1 + b2
    t2 = -eta ** 2 * (half(n * (n + 1)) + B(n - 1) + B(n) + G(n + 1) + (n + 1) * (B(n + 1) + sa)
                      + (B(n + 1) + a1) * (B(n + 1) + a2))
    t1 = eta * (4 * G(n) + G(n + 1) * (sa - sb + 2 * (n + 1) + B(n - 1) - B(n + 1))
                + half(n * (n + 1)) * (sa - sb - B(n + 1)) + (B(n + 1) + sb + sa - n ** 2) * (B(n) + B(n - 1))
                + 2 * (B(n) ** 2 + B(n - 1) ** 2) - (B(n + 1) + b1) * (B(n + 1) + b2) * (B(n + 1) - n - 1))
    t0 = -G(n + 1) * (half(n * (n - 1)) + G(n + 1) + G(n) + B(n - 1) + (B(n + 1) + b1) * (B(n + 1) + b2)
                      + (B(n) - n) * (B(n + 1) + B(n) + sb))
    return t2 + t1 + t0


def helpers_printed(p: Params, n, B, G, ctx=None, with_fg=True):
    """``A_n, Â_n, B_n, C_n, D_n, E_n, F_n, G_n`` evaluated as printed.

    ``F_n``/``G_n`` need the denominators ``gamma_n - gamma_{n+1} - eta`` and
    ``1 + beta_n - beta_{n+1}``; they are skipped with ``with_fg=False``.
    """
    eta, (a1, a2), (b1, b2) = p.eta, p.a, p.b
    sa, sb = a1 + a2, b1 + b2
    A_hat = _a_gamma_free(p, n, B, G)
    A = (A_hat - eta ** 2 * G(n + 2) + eta * G(n + 2) * (n - 1 - 2 * B(n + 1) - B(n + 2) - sb)
         - G(n + 1) * G(n + 2))
    Bn = eta ** 2 + eta * (2 * B(n - 1) + 2 * B(n) + B(n + 1) + sa + sb + 2 * n) + G(n + 1)
    C = (eta * ((n + B(n) + B(n + 1) + sa) * (B(n) - B(n + 1) - 1) - B(n) - B(n + 1) + G(n))
         - n * (B(n + 1) - B(n) - 1) * (B(n + 1) + B(n) + B(n - 1)) - B(n) * (B(n + 1) + B(n) + sb)
         - G(n) * (B(n - 1) + 2 * B(n) + sb - n + 2) + G(n + 2) * (2 * B(n + 1) + sb - n - 1))
    D = d_helper(p, n, B, G)
    E = e_helper(p, n, B, G)
    F = Gn = None
    if with_fg:
        d1 = G(n) - G(n + 1) - eta
        d2 = 1 + B(n) - B(n + 1)
        if ctx is not None:
            guard("gamma_n-gamma_{n+1}-eta", d1, max(abs(G(n)), abs(G(n + 1)), abs(eta)), ctx, n)
            guard("1+beta_n-beta_{n+1}", d2, max(1, abs(B(n)), abs(B(n + 1))), ctx, n)
        k = eta ** 2 - eta * (n - 1 - 2 * B(n + 1) - sb) + G(n + 1)
        F = -E / d1 + C / d2 - D + (A_hat - E / d1 * Bn) / (eta * d2)
        Gn = G(n + 1) / d1 + eta / d2 + (k + G(n + 1) * Bn / d1) / (eta * d2)
    return Helpers(A, A_hat, Bn, C, D, E, F, Gn)


def d_helper(p: Params, n, B, G):
    b1, b2 = p.b
    return half(n * (n - 1)) + B(n + 1) ** 2 + (B(n + 1) - n) * (b1 + b2) + b1 * b2 + (n - 1) * B(n - 1) + G(n + 1)


def e_helper(p: Params, n, B, G):
    eta, (a1, a2), (b1, b2) = p.eta, p.a, p.b
    sa, sb = a1 + a2, b1 + b2
    return (-eta * (half(n * (n - 1)) + B(n - 1) + n * (B(n) + sa) + (B(n) + a1) * (B(n) + a2)
                    - G(n) * (n - 2 + B(n - 1) + B(n) + sa) + G(n + 1) * (n + 1 + B(n) + B(n + 1) + sa))
            + G(n + 1) * (half(n * (n - 1)) + G(n + 1) - B(n - 1) + (B(n) - n) * (B(n + 1) + B(n) + sb)
                          + (B(n + 1) + b1) * (B(n + 1) + b2))
            - G(n) * (half((n - 1) * (n - 2)) + G(n) + G(n - 1) + (B(n) + b1) * (B(n) + b2)
                      + (B(n - 1) - n + 1) * (B(n) + B(n - 1) + sb)))


def helpers_corrected(p: Params, n, B, G):
    """Re-derived ``(Â, B, K, C)``: ``p^1_{n-1} B = Â - (K - eta beta_{n+2}) gamma_{n+2}``.

    ``C`` belongs to ``p^1_{n-1} = (C + gamma_{n+2}(beta_{n+2} - eta)) / (1 + beta_n - beta_{n+1}) - D``.
    """
    eta, (a1, a2), (b1, b2) = p.eta, p.a, p.b
    sa, sb = a1 + a2, b1 + b2
    t = half(n * (n + 1))
    x2 = -(t + B(n - 1) + B(n) + G(n + 1) + (n + 1) * (B(n + 1) + sa) + (B(n + 1) + a1) * (B(n + 1) + a2))
    x1 = ((B(n + 1) + b1) * (B(n + 1) + b2) * (B(n + 1) - n - 1) + (n + 1) * a1 * a2
          + (sa + sb) * (t + G(n + 1)) + (sa - sb) * (B(n - 1) + B(n))
          + G(n + 1) * (2 * B(n) + 3 * B(n + 1)) + t * B(n + 1) + (2 * n - B(n + 1)) * (B(n - 1) + B(n)))
    x0 = -G(n + 1) * (half(n * (n - 1)) + G(n + 1) + G(n) - B(n - 1) + (B(n + 1) + b1) * (B(n + 1) + b2)
                      + (B(n) - n) * (B(n + 1) + B(n) + sb))
    A_hat = eta ** 2 * x2 + eta * x1 + x0
    Bn = G(n + 1) - eta ** 2 + eta * (2 * n + sa - sb - B(n + 1))
    K = eta ** 2 - eta * (2 * B(n + 1) + sb - n - 1) + G(n + 1)
    C = (eta * ((n + B(n) + B(n + 1) + sa) * (B(n) - B(n + 1) - 1) + G(n))
         - n * (B(n + 1) - B(n) - 1) * (B(n + 1) + B(n) + B(n - 1))
         - B(n) * (1 + B(n) - B(n + 1)) * (B(n + 1) + B(n) + sb)
         - G(n) * (B(n - 1) + 2 * B(n) + sb - n + 2) + G(n + 2) * (2 * B(n + 1) + sb - n - 1))
    return A_hat, Bn, K, C


def p1_routes(p: Params, n, B, G, variant=PRINTED, ctx=None):
    """Three expressions for ``p^1_{n-1}``: ``(ratio, compat_first, compat_main)``."""
    eta = p.eta
    d_main = G(n) - G(n + 1) - eta
    u = 1 + B(n) - B(n + 1)
    if ctx is not None:
        guard("gamma_n-gamma_{n+1}-eta", d_main, max(abs(G(n)), abs(G(n + 1)), abs(eta)), ctx, n)
        guard("1+beta_n-beta_{n+1}", u, max(1, abs(B(n)), abs(B(n + 1))), ctx, n)
    D, E = d_helper(p, n, B, G), e_helper(p, n, B, G)
    main = (E + G(n + 1) * G(n + 2)) / d_main
    if variant == PRINTED:
        h = helpers_printed(p, n, B, G, with_fg=False)
        ratio = h.A / h.B
        first = (h.C + G(n + 2) * (B(n + 2) - eta)) / u - D
    else:
        A_hat, Bn, K, C = helpers_corrected(p, n, B, G)
        if ctx is not None:
            guard("B_n", Bn, max(abs(eta) ** 2, abs(G(n + 1)), 1), ctx, n)
        ratio = (A_hat - (K - eta * B(n + 2)) * G(n + 2)) / Bn
        first = (C + G(n + 2) * (B(n + 2) - eta)) / u - D
    return ratio, first, main


def step(spec_or_params, n, B, G, ctx, variant="corrected"):
    """One forward step: ``(beta_{n+2}, gamma_{n+2})``; ``gamma`` first, then ``beta``.

    The printed ``F_n`` contains ``C_n``, which itself carries a ``gamma_{n+2}``
    term, so the printed variant can only be evaluated when ``G`` already supplies
    ``gamma_{n+2}`` (residual mode). The corrected variant solves for it.
    """
    p = spec_or_params if isinstance(spec_or_params, Params) else Params.of(spec_or_params, ctx)
    if n < 2:
        raise ValueError(f"step needs n >= 2, got {n}")
    with ctx:
        eta = p.eta
        d_main = guard("gamma_n-gamma_{n+1}-eta", G(n) - G(n + 1) - eta,
                       max(abs(G(n)), abs(G(n + 1)), abs(eta)), ctx, n)
        guard("eta", eta, 1, ctx, n)
        E = e_helper(p, n, B, G)
        if variant == PRINTED:
            guard("1+beta_n-beta_{n+1}", 1 + B(n) - B(n + 1), max(1, abs(B(n)), abs(B(n + 1))), ctx, n)
            h = helpers_printed(p, n, B, G, ctx)
            guard("G_n", h.G, max(abs(h.F), 1), ctx, n)
            gamma_next = h.F / h.G
            guard("gamma_{n+2}", gamma_next, 1, ctx, n)
            return _beta_printed(p, n, B, G, gamma_next), gamma_next
        num, den = gamma_quotient(p, n, B, G)
        guard("G_n", den, max(abs(eta), 1), ctx, n)
        gamma_next = num / den
        guard("gamma_{n+2}", gamma_next, 1, ctx, n)
        beta_next = _beta_corrected(p, n, B, G, gamma_next)
    return beta_next, gamma_next


def gamma_quotient(p: Params, n, B, G):
    """Corrected ``gamma_{n+2} = num / den`` with the factor ``1 + beta_n - beta_{n+1}`` cleared.

    Only ``gamma_n - gamma_{n+1} - eta`` and ``eta`` are divided by, so the quotient
    stays defined when ``beta_{n+1} = beta_n + 1``.
    """
    eta = p.eta
    d_main = G(n) - G(n + 1) - eta
    u = 1 + B(n) - B(n + 1)
    # C is affine in gamma_{n+2}: C = C0 + c_g gamma_{n+2}; evaluate it with gamma_{n+2} = 0
    Gx = lambda k: G(k) if k != n + 2 else mpmath.mpf(0)
    A_hat, Bn, K, C0 = helpers_corrected(p, n, B, Gx)
    c_g = 2 * B(n + 1) + p.bsum - n - 1
    E, D = e_helper(p, n, B, G), d_helper(p, n, B, G)
    num = (Bn * E / d_main - A_hat) / eta - u * (E / d_main + D) + C0
    den = u * G(n + 1) / d_main + eta - (K + Bn * G(n + 1) / d_main) / eta - c_g
    return num, den


def psi_formulas(p: Params, n, B, G, H, p1_nm1):
    """``psi^{(2)}, psi^{(0)}, psi^{(1)}, psi^{(-1)}`` at index ``n``."""
    eta, (a1, a2), (b1, b2) = p.eta, p.a, p.b
    sa, sb = a1 + a2, b1 + b2
    psi2 = (B(n) + B(n + 1) + B(n + 2) + sb - n) * H(n + 2)
    psi0 = eta * (half(n * (n - 1)) + B(n - 1) + n * (B(n) + sa) + G(n) + G(n + 1)
                  + (B(n) + a1) * (B(n) + a2) - p1_nm1) * H(n)
    psi1 = (half(n * (n - 1)) + G(n) + G(n + 1) + G(n + 2) + (B(n + 1) + b1) * (B(n + 1) + b2)
            + (B(n) - n) * (B(n) + B(n + 1) + sb) - B(n - 1) + p1_nm1) * H(n + 1)
    psim1 = eta * (B(n) + B(n + 1) + sa + n) * H(n + 1)
    return {"psi2": psi2, "psi0": psi0, "psi1": psi1, "psi-1": psim1}


def _beta_printed(p: Params, n, B, G, gamma_next):
    h = helpers_printed(p, n, B, G, with_fg=False)
    k = p.eta ** 2 - p.eta * (n - 1 - 2 * B(n + 1) - p.bsum) + G(n + 1)
    d_main = G(n) - G(n + 1) - p.eta
    return ((h.A_hat - k * gamma_next) / (p.eta * gamma_next)
            - (e_helper(p, n, B, G) + G(n + 1) * gamma_next) / d_main * h.B / (p.eta * gamma_next))


def _beta_corrected(p: Params, n, B, G, gamma_next):
    Gx = lambda k: G(k) if k != n + 2 else gamma_next
    A_hat, Bn, K, _ = helpers_corrected(p, n, B, Gx)
    p1 = (e_helper(p, n, B, G) + G(n + 1) * gamma_next) / (G(n) - G(n + 1) - p.eta)
    return (p1 * Bn - A_hat + K * gamma_next) / (p.eta * gamma_next)


def identities(spec: FamilySpec, data: SpectralData, n, ground: Ground | None = None):
    """Residuals of every F22 closed form at index ``n`` (all variants)."""
    g = ground or Ground(spec, data)
    g.check_range(n, 2, 4)
    p, B, G, H = g.tracked()
    c = g.ctx
    out = []
    with c:
        truth = Tracked(g.p1(n - 1))
        u_scale = max(1, abs(B(n)), abs(B(n + 1)))
        d_scale = max(abs(G(n)), abs(G(n + 1)), abs(p.eta))
        main = lambda: (e_helper(p, n, B, G) + G(n + 1) * G(n + 2)) / guard(
            "gamma_n-gamma_{n+1}-eta", G(n) - G(n + 1) - p.eta, d_scale, c, n)
        attempt(out, "f22.p1_compat_main", n, lambda: rel(main(), truth))
        printed_h = helpers_printed(p, n, B, G, with_fg=False)
        attempt(out, "f22.p1_ratio", n,
                lambda: rel(printed_h.A / guard("B_n", printed_h.B, max(p.eta ** 2, 1), c, n), truth))
        A_hat, Bn, K, C = helpers_corrected(p, n, B, G)
        attempt(out, "f22.p1_ratio", n,
                lambda: rel((A_hat - (K - p.eta * B(n + 2)) * G(n + 2)) / guard("B_n", Bn, max(p.eta ** 2, 1), c, n),
                            truth), "corrected")
        D = d_helper(p, n, B, G)
        u = 1 + B(n) - B(n + 1)
        for v, Cv in ((PRINTED, printed_h.C), ("corrected", C)):
            # (1 + beta_n - beta_{n+1}) (p^1_{n-1} + D_n) = C_n + gamma_{n+2}(beta_{n+2} - eta)
            out.append(IdentityRecord("f22.p1_compat_first", n,
                                      rel(u * (truth + D), Cv + G(n + 2) * (B(n + 2) - p.eta)), v))
        hat_gap = printed_h.A_hat - (p.eta ** 2 - p.eta * (n - 1 - 2 * B(n + 1) - B(n + 2) - p.bsum)
                                     + G(n + 1)) * G(n + 2)
        out.append(IdentityRecord("f22.A_hat_consistency", n, rel(hat_gap, printed_h.A)))
        psi = psi_formulas(p, n, B, G, H, truth)
        for key, k in (("psi2", 2), ("psi0", 0), ("psi1", 1), ("psi-1", -1)):
            out.append(IdentityRecord(f"f22.{key}", n, rel(psi[key], g.psi(k, n))))
        def printed_gamma():
            guard("1+beta_n-beta_{n+1}", u, u_scale, c, n)
            h = helpers_printed(p, n, B, G, c)
            return rel(G(n + 2) * h.G, h.F)

        attempt(out, "f22.lf_gamma", n, printed_gamma)
        num, den = gamma_quotient(p, n, B, G)
        attempt(out, "f22.lf_gamma", n, lambda: rel(G(n + 2) * den, num), "corrected")
        gn = lambda: guard("gamma_{n+2}", G(n + 2), 1, c, n)
        attempt(out, "f22.lf_beta", n, lambda: rel(_beta_printed(p, n, B, G, gn()), B(n + 2)))
        attempt(out, "f22.lf_beta", n, lambda: rel(_beta_corrected(p, n, B, G, gn()), B(n + 2)), "corrected")
    return out
