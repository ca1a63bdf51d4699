"""Truncated banded operators: Jacobi, (dressed) Pascal and Laguerre-Freud structure matrices."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import mpmath

from .exceptions import BufferExhausted
from .hankel import SpectralData, eval_polynomials, unit_lower_inverse
from .weights import FamilySpec, as_mpf, make_pearson

_ZERO = mpmath.mpf(0)


@dataclass(frozen=True)
class BandedOperator:
    """Leading ``size x size`` block of a semi-infinite matrix, stored by diagonals.

    ``diagonals[d][n]`` is the entry at ``(n, n + d)`` for ``d >= 0`` and at
    ``(n - d, n)`` for ``d < 0``, i.e. the same indexing as ``psi^{(d)}_n``.
    Offsets without an entry are exactly zero. ``valid`` is the size of the
    leading block that agrees with the untruncated operator, and ``band`` the
    predicted ``(lowest, highest)`` offset.
    """

    size: int
    diagonals: dict
    valid: int
    band: tuple = field(default=None)

    def __post_init__(self):
        if self.band is None:
            offs = [d for d in self.diagonals] or [0]
            object.__setattr__(self, "band", (min(offs), max(offs)))

    @classmethod
    def from_dense(cls, A, valid=None, band=None):
        n = len(A)
        diags = {}
        for d in range(-(n - 1), n):
            if d >= 0:
                v = [A[i][i + d] for i in range(n - d)]
            else:
                v = [A[i - d][i] for i in range(n + d)]
            if any(x != 0 for x in v):
                diags[d] = v
        return cls(n, diags, n if valid is None else valid, band)

    @classmethod
    def diagonal(cls, values, valid=None):
        values = list(values)
        return cls(len(values), {0: values}, len(values) if valid is None else valid, (0, 0))

    def to_dense(self):
        n = self.size
        A = [[_ZERO] * n for _ in range(n)]
        for d, v in self.diagonals.items():
            for k, x in enumerate(v):
                if d >= 0:
                    A[k][k + d] = x
                else:
                    A[k - d][k] = x
        return A

    def __getitem__(self, ij):
        i, j = ij
        v = self.diagonals.get(j - i)
        if v is None:
            return _ZERO
        return v[min(i, j)]

    def diag(self, d):
        """``psi^{(d)}`` as a list (zeros if the offset is not stored)."""
        return list(self.diagonals.get(d, [_ZERO] * (self.size - abs(d))))

    @property
    def T(self):
        return BandedOperator(self.size, {-d: list(v) for d, v in self.diagonals.items()},
                              self.valid, (-self.band[1], -self.band[0]))

    def _upper(self):
        return max(self.band[1], 0)

    def _lower(self):
        return max(-self.band[0], 0)

    def __matmul__(self, other: "BandedOperator") -> "BandedOperator":
        if self.size != other.size:
            raise ValueError("size mismatch")
        n = self.size
        A, B = self.to_dense(), other.to_dense()
        lo_a, hi_a = self.band
        lo_b, hi_b = other.band
        C = [[_ZERO] * n for _ in range(n)]
        for i in range(n):
            for j in range(max(0, i + lo_a + lo_b), min(n, i + hi_a + hi_b + 1)):
                ks = range(max(0, i + lo_a, j - hi_b), min(n, i + hi_a + 1, j - lo_b + 1))
                if len(ks):
                    C[i][j] = mpmath.fdot((A[i][k], B[k][j]) for k in ks)
        valid = min(self.valid, other.valid) - min(self._upper(), other._lower())
        return BandedOperator.from_dense(C, valid, (lo_a + lo_b, hi_a + hi_b))

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def _combine(self, other, sign):
        diags = {d: list(v) for d, v in self.diagonals.items()}
        for d, v in other.diagonals.items():
            cur = diags.setdefault(d, [_ZERO] * len(v))
            diags[d] = [x + sign * y for x, y in zip(cur, v)]
        band = (min(self.band[0], other.band[0]), max(self.band[1], other.band[1]))
        return BandedOperator(self.size, diags, min(self.valid, other.valid), band)

    def scale(self, c) -> "BandedOperator":
        return BandedOperator(self.size, {d: [c * x for x in v] for d, v in self.diagonals.items()},
                              self.valid, self.band)

    def shift_identity(self, c) -> "BandedOperator":
        """``self + c * I``."""
        return self + identity(self.size).scale(c)

    def max_abs(self, block=None):
        block = self.valid if block is None else block
        return max((abs(self[i, j]) for i in range(block) for j in range(block)), default=_ZERO)

    def off_band_max(self, lo, hi, block=None):
        """Largest entry of the valid block outside offsets ``lo..hi``."""
        block = self.valid if block is None else block
        worst = _ZERO
        for d, v in self.diagonals.items():
            if lo <= d <= hi:
                continue
            for k in range(block - abs(d)):
                worst = max(worst, abs(v[k]))
        return worst

    def nonzero_offsets(self, rel_tol, block=None):
        """Offsets holding an entry above ``rel_tol * max_abs`` on the valid block."""
        block = self.valid if block is None else block
        thresh = rel_tol * self.max_abs(block)
        return sorted(d for d, v in self.diagonals.items()
                      if any(abs(x) > thresh for x in v[: max(block - abs(d), 0)]))


def identity(size):
    return BandedOperator.diagonal([mpmath.mpf(1)] * size)


def shift_matrix(size):
    """The shift ``Lambda`` (ones on the first superdiagonal)."""
    return BandedOperator(size, {1: [mpmath.mpf(1)] * (size - 1)}, size - 1, (1, 1))


def jacobi_matrix(data: SpectralData) -> BandedOperator:
    """Tridiagonal Jacobi matrix: ``gamma`` below, ``beta`` on, ones above the diagonal."""
    K = len(data.beta)
    with data.ctx:
        return BandedOperator(K, {
            -1: list(data.gamma[1:K]),
            0: list(data.beta[:K]),
            1: [mpmath.mpf(1)] * (K - 1),
        }, K, (-1, 1))


def jacobi_by_conjugation(data: SpectralData) -> BandedOperator:
    """``S Lambda S^{-1}`` from the stored factor (independent of beta/gamma)."""
    with data.ctx:
        S = BandedOperator.from_dense([list(r) for r in data.S])
        Sinv = BandedOperator.from_dense(unit_lower_inverse(data.S))
        return S @ shift_matrix(S.size) @ Sinv


def pascal_matrix(K: int, sign: int = 1) -> BandedOperator:
    """Lower Pascal matrix ``B`` (``sign=+1``) or its inverse (``sign=-1``); exact integers."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    rows = [[(sign ** (n - m)) * comb(n, m) if n >= m else 0 for m in range(K)] for n in range(K)]
    return BandedOperator.from_dense([[mpmath.mpf(x) for x in r] for r in rows], band=(-(K - 1), 0))


def dressed_pascal(data: SpectralData, sign: int = 1) -> BandedOperator:
    """``Pi^{sign} = S B^{sign} S^{-1}``; lower triangular, so truncation is exact."""
    with data.ctx:
        K = len(data.H)
        S = BandedOperator.from_dense([list(r) for r in data.S], band=(-(K - 1), 0))
        Sinv = BandedOperator.from_dense(unit_lower_inverse(data.S), band=(-(K - 1), 0))
        return S @ pascal_matrix(K, sign) @ Sinv


def pi_diagonal(Pi: BandedOperator, k: int):
    """``pi^{[k]}_n = Pi[n + k, n]``."""
    return Pi.diag(-k)


def _poly_of(coeffs, X: BandedOperator) -> BandedOperator:
    """Horner evaluation of ``sum coeffs[i] X^i``."""
    out = identity(X.size).scale(coeffs[-1])
    for c in reversed(coeffs[:-1]):
        out = (out @ X).shift_identity(c)
    return out


STRUCTURE_METHODS = (
    "sigmaJ_H_PiT",
    "PiInv_H_thetaJT",
    "PiInv_thetaJ_H",
    "H_sigmaJT_PiT",
    "thetaJplus_PiInv_H",
    "H_PiT_sigmaJTminus",
)


def structure_matrix(spec: FamilySpec, data: SpectralData, method: str = "sigmaJ_H_PiT",
                     Pi=None, PiInv=None) -> BandedOperator:
    """Laguerre-Freud structure matrix ``Psi`` by one of six equivalent products."""
    if method not in STRUCTURE_METHODS:
        raise ValueError(f"unknown method {method!r}")
    with data.ctx:
        pp = make_pearson(spec)
        J = jacobi_matrix(data)
        K = J.size
        H = BandedOperator.diagonal(data.H[:K])
        sig, th = pp.sigma_coeffs(), pp.theta_coeffs()
        if method in ("sigmaJ_H_PiT", "H_sigmaJT_PiT", "H_PiT_sigmaJTminus"):
            PiT = (Pi if Pi is not None else dressed_pascal(data, 1))
            PiT = _resize(PiT, K).T
        else:
            PiInv = _resize(PiInv if PiInv is not None else dressed_pascal(data, -1), K)
        if method == "sigmaJ_H_PiT":
            out = _poly_of(sig, J) @ H @ PiT
        elif method == "PiInv_H_thetaJT":
            out = PiInv @ H @ _poly_of(th, J.T)
        elif method == "PiInv_thetaJ_H":
            out = PiInv @ _poly_of(th, J) @ H
        elif method == "H_sigmaJT_PiT":
            out = H @ _poly_of(sig, J.T) @ PiT
        elif method == "thetaJplus_PiInv_H":
            out = _poly_of(th, J.shift_identity(1)) @ PiInv @ H
        else:
            out = H @ PiT @ _poly_of(sig, J.T.shift_identity(-1))
    if out.valid <= 0:
        raise BufferExhausted(f"structure matrix via {method} has no valid rows")
    M, N1 = len(spec.a), len(spec.b) + 1
    return BandedOperator(out.size, out.diagonals, out.valid, (-M, N1))


def _resize(op: BandedOperator, K: int) -> BandedOperator:
    if op.size == K:
        return op
    diags = {d: v[: K - abs(d)] for d, v in op.diagonals.items() if abs(d) < K}
    return BandedOperator(K, diags, min(op.valid, K), op.band)


def all_structure_matrices(spec, data):
    with data.ctx:
        Pi, PiInv = dressed_pascal(data, 1), dressed_pascal(data, -1)
        return {m: structure_matrix(spec, data, m, Pi=Pi, PiInv=PiInv) for m in STRUCTURE_METHODS}


def psi_extreme_diagonals(spec: FamilySpec, data: SpectralData, count: int):
    """Closed forms for the lowest and highest diagonals of ``Psi``.

    ``psi^{(-M)}_n = eta H_n gamma_{n+1} ... gamma_{n+M}`` and
    ``psi^{(N+1)}_n = H_n gamma_{n+1} ... gamma_{n+N+1}``.
    """
    M, N1 = len(spec.a), len(spec.b) + 1
    with data.ctx:
        eta = spec.mp_params()[2]
        g, H = data.gamma, data.H
        low = [eta * H[n] * mpmath.fprod(g[n + 1: n + M + 1]) for n in range(count)]
        high = [H[n] * mpmath.fprod(g[n + 1: n + N1 + 1]) for n in range(count)]
    return low, high


def shift_structure_residual(spec: FamilySpec, data: SpectralData, Psi: BandedOperator, z):
    """Residuals of ``theta(z) P(z-1) = Psi H^{-1} P(z)`` and ``sigma(z) P(z+1) = Psi^T H^{-1} P(z)``.

    Each component is normalized by ``max(|lhs_n|, 1)``; returns two lists over the
    rows whose right-hand side only touches valid entries.
    """
    with data.ctx:
        z = as_mpf(z)
        pp = make_pearson(spec)
        M, N1 = len(spec.a), len(spec.b) + 1
        nmax = min(Psi.valid, len(data.beta))
        P0 = eval_polynomials(data, z, nmax)
        Pm = eval_polynomials(data, z - 1, nmax)
        Pp = eval_polynomials(data, z + 1, nmax)
        Q = [P0[j] / data.H[j] for j in range(nmax + 1)]
        r_minus, r_plus = [], []
        for n in range(Psi.valid - N1):
            lhs = pp.theta(z) * Pm[n]
            rhs = mpmath.fsum(Psi[n, j] * Q[j] for j in range(max(0, n - M), n + N1 + 1))
            r_minus.append(abs(lhs - rhs) / max(abs(lhs), 1))
        for n in range(Psi.valid - M):
            lhs = pp.sigma(z) * Pp[n]
            rhs = mpmath.fsum(Psi[j, n] * Q[j] for j in range(max(0, n - N1), n + M + 1))
            r_plus.append(abs(lhs - rhs) / max(abs(lhs), 1))
    return r_minus, r_plus


def psi_h_inverse(data: SpectralData, Psi: BandedOperator) -> BandedOperator:
    with data.ctx:
        Hinv = BandedOperator.diagonal([1 / h for h in data.H[: Psi.size]])
        return Psi @ Hinv


def compatibility_residual(data: SpectralData, Psi: BandedOperator, transposed: bool = False):
    """``max|[Psi H^{-1}, J] - Psi H^{-1}| / max|Psi H^{-1}|`` on the valid block.

    With ``transposed=True`` checks ``[J, Psi^T H^{-1}] = Psi^T H^{-1}`` instead.
    """
    with data.ctx:
        J = _resize(jacobi_matrix(data), Psi.size)
        Hinv = BandedOperator.diagonal([1 / h for h in data.H[: Psi.size]])
        if transposed:
            X = Psi.T @ Hinv
            R = (J @ X) - (X @ J) - X
        else:
            X = Psi @ Hinv
            R = (X @ J) - (J @ X) - X
        block = min(R.valid, Psi.valid - 1)
        if block <= 0:
            from .exceptions import BufferExhausted
            raise BufferExhausted("compatibility check has no valid rows")
        return R.max_abs(block) / X.max_abs(block)


def relative_disagreement(A: BandedOperator, B: BandedOperator, block=None):
    """Entrywise ``|A - B|`` scaled by the largest entry of the same row, maximized."""
    block = min(A.valid, B.valid) if block is None else block
    worst = _ZERO
    for i in range(block):
        row_scale = max(max(abs(A[i, j]), abs(B[i, j])) for j in range(block))
        if row_scale == 0:
            continue
        for j in range(block):
            worst = max(worst, abs(A[i, j] - B[i, j]) / row_scale)
    return worst


def _rel(lhs, rhs):
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1)


def pi_diagonal_residuals(data: SpectralData, n: int, Pi=None, PiInv=None):
    """Closed forms for the first three diagonals of ``Pi^{+-1}`` at column ``n``.

    Returns ``{(name, variant): residual}``. The cubic coefficient of
    ``pi^{[+-3]}`` is tested both as ``(n+3)(n+2)(n+1)/3`` (variant ``printed``)
    and as the binomial ``/6`` (variant ``binomial``); only the latter matches
    ``Pi = S B S^{-1}`` with binomial ``B``.
    """
    if not 0 <= n <= len(data.H) - 4:
        raise ValueError(f"n={n} needs p^1, p^2 up to index n+3")
    with data.ctx:
        Pi = Pi if Pi is not None else dressed_pascal(data, 1)
        PiInv = PiInv if PiInv is not None else dressed_pascal(data, -1)
        mats = {1: Pi, -1: PiInv}
        pi = lambda k, m: mats[1 if k > 0 else -1][m + abs(k), m]
        p1, p2, B = data.p1, data.p2, data.beta
        mp = mpmath.mpf
        out = {}
        for sg, tag in ((1, "+"), (-1, "-")):
            out[(f"pi{tag}1", "printed")] = _rel(pi(sg, n), sg * (n + 1))
            out[(f"pi{tag}2", "printed")] = _rel(
                pi(2 * sg, n), mp((n + 2) * (n + 1)) / 2 + sg * (p1[n + 2] * (n + 1) - (n + 2) * p1[n + 1]))
            out[(f"pi{tag}2:beta_form", "printed")] = _rel(
                pi(2 * sg, n), mp((n + 2) * (n + 1)) / 2 - sg * ((n + 1) * B[n + 1] + p1[n + 1]))
            rest = (mp((n + 2) * (n + 1)) / 2 * p1[n + 3] - mp((n + 3) * (n + 2)) / 2 * p1[n + 1]
                    + sg * ((n + 1) * p2[n + 3] - (n + 3) * p2[n + 2]
                            + (n + 3) * p1[n + 2] * p1[n + 1] - (n + 2) * p1[n + 3] * p1[n + 1]))
            cubic = mp((n + 3) * (n + 2) * (n + 1))
            out[(f"pi{tag}3", "printed")] = _rel(pi(3 * sg, n), sg * cubic / 3 + rest)
            out[(f"pi{tag}3", "binomial")] = _rel(pi(3 * sg, n), sg * cubic / 6 + rest)
        # sums of opposite diagonals; D2 = (n+2)(n+1)/2 and S1_m = S[m+1, m] = p^1_{m+1}
        D2 = lambda m: mp((m + 2) * (m + 1)) / 2
        out[("pi_sum1", "printed")] = _rel(pi(1, n) + pi(-1, n), 0)
        out[("pi_sum2", "printed")] = _rel(pi(2, n) + pi(-2, n), 2 * D2(n))
        out[("pi_sum3", "printed")] = _rel(pi(3, n) + pi(-3, n),
                                           2 * (p1[n + 3] * D2(n) - D2(n + 1) * p1[n + 1]))
    return out


def pascal_shift_residual(data: SpectralData, z, sign: int = 1, Pi=None):
    """``max_n |P_n(z + sign) - (Pi^{sign} P(z))_n|``, relative to the row's term magnitudes."""
    with data.ctx:
        z = as_mpf(z)
        Pi = Pi if Pi is not None else dressed_pascal(data, sign)
        nmax = len(data.beta)
        P = eval_polynomials(data, z, nmax)
        Ps = eval_polynomials(data, z + sign, nmax)
        worst = _ZERO
        for n in range(nmax + 1):
            terms = [Pi[n, j] * P[j] for j in range(n + 1)]
            scale = max(abs(Ps[n]), mpmath.fsum(abs(t) for t in terms), 1)
            worst = max(worst, abs(Ps[n] - mpmath.fsum(terms)) / scale)
        return worst


def pascal_inverse_residual(data: SpectralData, Pi=None, PiInv=None):
    """``max|Pi^{-1} Pi - I| / (max|Pi^{-1}| max|Pi|)`` over the stored block."""
    with data.ctx:
        Pi = Pi if Pi is not None else dressed_pascal(data, 1)
        PiInv = PiInv if PiInv is not None else dressed_pascal(data, -1)
        R = (PiInv @ Pi).shift_identity(-1)
        return R.max_abs(R.valid) / (PiInv.max_abs(R.valid) * Pi.max_abs(R.valid))


def jacobi_symmetry_residual(data: SpectralData):
    """``max|JH - (JH)^T| / max|JH|``."""
    with data.ctx:
        J = jacobi_matrix(data)
        JH = J @ BandedOperator.diagonal(data.H[: J.size])
        R = JH - JH.T
        return R.max_abs(R.valid) / JH.max_abs(R.valid)
