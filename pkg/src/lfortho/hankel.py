"""Hankel moment matrices, LDL^T factorization and recurrence-coefficient extraction."""
from __future__ import annotations

from dataclasses import dataclass

import mpmath

from .exceptions import InsufficientMoments, SingularMinor
from .precision import PrecisionContext
from .weights import FamilySpec, MomentTable, as_mpf, moment_table

BUFFER = 8


def build_moment_matrix(table: MomentTable, K: int):
    """Leading ``K x K`` Hankel block ``G[i][j] = rho[i + j]``.

    Entries are shared references into ``table.rho``, so anti-diagonals are
    bit-identical by construction.
    """
    if len(table.rho) < 2 * K - 1:
        raise InsufficientMoments(f"need {2 * K - 1} moments for K={K}, have {len(table.rho)}")
    rho = table.rho
    return [[rho[i + j] for j in range(K)] for i in range(K)]


def cholesky_ldlt(G, ctx: PrecisionContext):
    """Factor ``G = S^{-1} H S^{-T}`` with ``S`` lower unitriangular.

    Returns ``(S, H)`` where ``S`` is a dense list-of-rows and ``H`` the pivot list.
    Raises :class:`SingularMinor` when cancellation leaves a pivot with fewer than
    ``log2(1/eps_pivot)`` significant bits relative to the entries it came from.
    """
    K = len(G)
    with ctx:
        L = [[mpmath.mpf(0)] * K for _ in range(K)]
        H = []
        for j in range(K):
            s = G[j][j] - mpmath.fsum(L[j][k] ** 2 * H[k] for k in range(j))
            scale = max(abs(x) for x in G[j][: j + 1])
            if abs(s) <= mpmath.ldexp(scale, -ctx.bits) / ctx.eps_pivot:
                raise SingularMinor(j, s)
            H.append(s)
            L[j][j] = mpmath.mpf(1)
            for i in range(j + 1, K):
                L[i][j] = (G[i][j] - mpmath.fsum(L[i][k] * L[j][k] * H[k] for k in range(j))) / s
        S = unit_lower_inverse(L)
    return S, H


def unit_lower_inverse(L):
    """Inverse of a unit lower-triangular matrix by forward substitution."""
    K = len(L)
    inv = [[mpmath.mpf(0)] * K for _ in range(K)]
    for i in range(K):
        inv[i][i] = mpmath.mpf(1)
        for j in range(i):
            inv[i][j] = -mpmath.fsum(L[i][k] * inv[k][j] for k in range(j, i))
    return inv


def _det(M):
    """Determinant by partial-pivoting Gaussian elimination (current precision)."""
    A = [list(r) for r in M]
    n = len(A)
    det = mpmath.mpf(1)
    for c in range(n):
        p = max(range(c, n), key=lambda r: abs(A[r][c]))
        if A[p][c] == 0:
            return mpmath.mpf(0)
        if p != c:
            A[c], A[p] = A[p], A[c]
            det = -det
        det *= A[c][c]
        for r in range(c + 1, n):
            f = A[r][c] / A[c][c]
            if f:
                for k in range(c + 1, n):
                    A[r][k] -= f * A[c][k]
    return det


def hankel_determinants(table: MomentTable, K: int, ctx: PrecisionContext):
    """``(Delta_1..Delta_K, tilde Delta_1..tilde Delta_K)`` computed independently.

    ``tilde Delta_k`` replaces the last column of the k-th Hankel block by
    ``rho_k .. rho_{2k-1}``.
    """
    if len(table.rho) < 2 * K:
        raise InsufficientMoments(f"need {2 * K} moments for K={K}")
    rho = table.rho
    with ctx:
        d, dt = [], []
        for k in range(1, K + 1):
            block = [[rho[i + j] for j in range(k)] for i in range(k)]
            d.append(_det(block))
            for i in range(k):
                block[i][k - 1] = rho[i + k]
            dt.append(_det(block))
    return d, dt


@dataclass(frozen=True)
class SpectralData:
    """Per-index output of the factorization.

    ``beta[n]`` and ``gamma[n]`` are indexed by ``n`` directly; ``gamma[0]`` is
    stored as 0 (there is no ``gamma_0``). ``p1[0] = p2[0] = p2[1] = 0``.
    """

    K: int
    H: tuple
    beta: tuple
    gamma: tuple
    p1: tuple
    p2: tuple
    s_bands: tuple
    S: tuple = ()
    ctx: PrecisionContext | None = None
    spec: FamilySpec | None = None
    table: MomentTable | None = None

    def truncated(self, K: int) -> "SpectralData":
        """Public view limited to order ``K``."""
        return SpectralData(
            K=K, H=self.H[:K], beta=self.beta[: K - 1], gamma=self.gamma[:K],
            p1=self.p1[:K], p2=self.p2[:K], s_bands=tuple(b[:K] for b in self.s_bands),
            S=tuple(tuple(r[:K]) for r in self.S[:K]), ctx=self.ctx, spec=self.spec, table=self.table,
        )


def extract_spectral(S, H, ctx: PrecisionContext, **provenance) -> SpectralData:
    """Read recurrence coefficients and subleading coefficients off the factors."""
    K = len(H)
    with ctx:
        zero = mpmath.mpf(0)
        p1 = [zero] + [S[n][n - 1] for n in range(1, K)]
        p2 = [zero, zero] + [S[n][n - 2] for n in range(2, K)]
        beta = [p1[n] - p1[n + 1] for n in range(K - 1)]
        gamma = [zero] + [H[n] / H[n - 1] for n in range(1, K)]
        bands = tuple(tuple(S[n + k][n] for n in range(K - k)) for k in (1, 2, 3))
    return SpectralData(
        K=K, H=tuple(H), beta=tuple(beta), gamma=tuple(gamma), p1=tuple(p1), p2=tuple(p2),
        s_bands=bands, S=tuple(tuple(r) for r in S), ctx=ctx, **provenance,
    )


def spectral_pipeline(spec: FamilySpec, K: int, ctx: PrecisionContext, buffer: int = BUFFER) -> SpectralData:
    """Moments -> Hankel block -> factorization -> spectral data at order ``K + buffer``."""
    K_int = K + buffer
    table = moment_table(spec, 2 * K_int + 2, ctx)
    S, H = cholesky_ldlt(build_moment_matrix(table, K_int), ctx)
    return extract_spectral(S, H, ctx, spec=spec, table=table)


def eval_polynomials(data: SpectralData, z, n_max: int):
    """Monic ``P_0(z) .. P_{n_max}(z)`` from the three-term recursion."""
    if n_max > len(data.beta):
        raise ValueError(f"n_max={n_max} exceeds available recurrence coefficients")
    with data.ctx:
        z = as_mpf(z)
        vals = [mpmath.mpf(1)]
        prev = mpmath.mpf(0)
        for n in range(n_max):
            nxt = (z - data.beta[n]) * vals[-1] - (data.gamma[n] * prev if n else 0)
            prev = vals[-1]
            vals.append(nxt)
    return vals


def reconstruction_residual(G, S, H, ctx: PrecisionContext):
    """``max|G - S^{-1} H S^{-T}| / max|G|``."""
    with ctx:
        L = unit_lower_inverse(S)
        K = len(G)
        worst = mpmath.mpf(0)
        gmax = max(abs(x) for r in G for x in r)
        for i in range(K):
            for j in range(i + 1):
                v = mpmath.fsum(L[i][k] * H[k] * L[j][k] for k in range(j + 1))
                worst = max(worst, abs(G[i][j] - v))
        return worst / gmax
