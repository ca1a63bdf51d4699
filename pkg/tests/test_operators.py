import itertools

import mpmath
import pytest

from lfortho.hankel import eval_polynomials
from lfortho.operators import (STRUCTURE_METHODS, BandedOperator, all_structure_matrices, compatibility_residual,
                               dressed_pascal, jacobi_by_conjugation, jacobi_matrix, jacobi_symmetry_residual,
                               pascal_inverse_residual, pascal_matrix, pascal_shift_residual, pi_diagonal,
                               pi_diagonal_residuals, psi_extreme_diagonals, relative_disagreement,
                               shift_matrix, shift_structure_residual, structure_matrix)
from lfortho.precision import PrecisionContext

from conftest import FAMILIES

EXPECTED_OFFSETS = {"F12": list(range(-1, 4)), "F22": list(range(-2, 4)), "F32": list(range(-3, 4))}


@pytest.fixture(scope="module")
def psi_all(ref_data):
    cache = {}

    def get(family):
        if family not in cache:
            d = ref_data(family)
            cache[family] = all_structure_matrices(d.spec, d)
        return cache[family]

    return get


def test_banded_storage_round_trip():
    with PrecisionContext(128):
        A = [[mpmath.mpf(i * 3 + j) if abs(i - j) <= 1 else mpmath.mpf(0) for j in range(4)] for i in range(4)]
        op = BandedOperator.from_dense(A)
        assert sorted(op.diagonals) == [-1, 0, 1]
        assert op.to_dense() == A
        assert op[2, 1] == 7 and op[0, 3] == 0
        assert (op @ BandedOperator.diagonal([1] * 4)).to_dense() == A


def test_product_band_bookkeeping():
    with PrecisionContext(128):
        L = shift_matrix(6)
        P = L @ L
        assert P.band == (2, 2)
        assert P[0, 2] == 1 and P.off_band_max(2, 2) == 0


def test_jacobi_entries(ref_data, ctx):
    d = ref_data("F12")
    J = jacobi_matrix(d)
    assert J[0, 1] == 1 and J[1, 0] == d.gamma[1] and J[0, 0] == d.beta[0]


@pytest.mark.parametrize("family", FAMILIES)
def test_jacobi_symmetry_and_conjugation(ref_data, ctx, family):
    d = ref_data(family)
    assert jacobi_symmetry_residual(d) < ctx.eps_verify
    with ctx:
        for n in range(10):
            assert abs(d.H[n + 1] - d.gamma[n + 1] * d.H[n]) < ctx.eps_verify * d.H[n + 1]
    J, Jc = jacobi_matrix(d), jacobi_by_conjugation(d)
    assert relative_disagreement(J, Jc, 16) < ctx.eps_verify


def test_pascal_small():
    with PrecisionContext(128):
        B = pascal_matrix(3).to_dense()
        Bi = pascal_matrix(3, -1).to_dense()
    assert B == [[1, 0, 0], [1, 1, 0], [1, 2, 1]]
    assert Bi == [[1, 0, 0], [-1, 1, 0], [1, -2, 1]]


def test_pascal_shifts_monomials():
    with PrecisionContext(128):
        B = pascal_matrix(6)
        chi = [mpmath.mpf(2) ** k for k in range(6)]
        out = [sum(B[n, m] * chi[m] for m in range(6)) for n in range(6)]
        assert out == [1, 3, 9, 27, 81, 243]
        I = pascal_matrix(6, -1) @ B
        assert all(I[i, j] == (1 if i == j else 0) for i in range(6) for j in range(6))


@pytest.mark.parametrize("family", FAMILIES)
def test_dressed_pascal_diagonals(ref_data, ctx, family):
    d = ref_data(family)
    Pi = dressed_pascal(d, 1)
    with ctx:
        for n in range(13):
            assert abs(pi_diagonal(Pi, 1)[n] - (n + 1)) < ctx.eps_verify * (n + 1)
            assert Pi[n, n] == 1
            res = pi_diagonal_residuals(d, n)
            assert res[("pi_sum2", "printed")] < ctx.eps_verify
            assert res[("pi+3", "binomial")] < ctx.eps_verify
            assert res[("pi-3", "binomial")] < ctx.eps_verify
            assert res[("pi_sum3", "printed")] < ctx.eps_verify


def test_cubic_diagonal_needs_binomial_coefficient(ref_data):
    d = ref_data("F22")
    assert all(pi_diagonal_residuals(d, n)[("pi+3", "printed")] > mpmath.mpf("1e-3") for n in range(5))


def test_pascal_shift_of_polynomials(ref_data, ctx):
    d = ref_data("F32")
    with ctx:
        z = mpmath.mpf(1) / 3
        Pi = dressed_pascal(d, 1)
        P = eval_polynomials(d, z, 3)
        P_up = eval_polynomials(d, z + 1, 3)
        assert abs(P_up[3] - sum(Pi[3, j] * P[j] for j in range(4))) < ctx.eps_verify * abs(P_up[3])
    for z in ("1/2", "1/3", 3):
        assert pascal_shift_residual(d, z, 1) < ctx.eps_verify
        assert pascal_shift_residual(d, z, -1) < ctx.eps_verify
    assert pascal_inverse_residual(d) < ctx.eps_verify


@pytest.mark.parametrize("family", FAMILIES)
def test_structure_matrix_band(psi_all, ctx, family):
    psi = psi_all(family)[STRUCTURE_METHODS[0]]
    assert psi.nonzero_offsets(ctx.eps_verify, 16) == EXPECTED_OFFSETS[family]
    lo, hi = EXPECTED_OFFSETS[family][0], EXPECTED_OFFSETS[family][-1]
    assert psi.off_band_max(lo, hi, 16) < ctx.eps_verify * psi.max_abs(16)


@pytest.mark.parametrize("family", FAMILIES)
def test_six_structure_matrices_agree(psi_all, ctx, family):
    mats = psi_all(family)
    for m1, m2 in itertools.combinations(STRUCTURE_METHODS, 2):
        assert relative_disagreement(mats[m1], mats[m2], 16) < ctx.eps_verify, (m1, m2)


@pytest.mark.parametrize("family", FAMILIES)
def test_extreme_diagonals(ref_data, psi_all, ctx, family):
    d = ref_data(family)
    psi = psi_all(family)[STRUCTURE_METHODS[0]]
    M, N1 = d.spec.M, d.spec.N + 1
    low, high = psi_extreme_diagonals(d.spec, d, 14)
    with ctx:
        for n in range(12):
            assert abs(psi[n + M, n] - low[n]) < ctx.eps_verify * abs(low[n])
            assert abs(psi[n, n + N1] - high[n]) < ctx.eps_verify * abs(high[n])
            assert abs(psi[n, n + N1] / d.H[n + N1] - 1) < ctx.eps_verify


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("z", ["1/2", "1/3", 3])
def test_structure_equations(ref_data, psi_all, ctx, family, z):
    d = ref_data(family)
    r_minus, r_plus = shift_structure_residual(d.spec, d, psi_all(family)[STRUCTURE_METHODS[0]], z)
    assert max(r_minus) < ctx.eps_verify and max(r_plus) < ctx.eps_verify


def test_structure_equation_at_zero(ref_data, psi_all, ctx):
    d = ref_data("F12")
    psi = psi_all("F12")[STRUCTURE_METHODS[0]]
    with ctx:
        P = eval_polynomials(d, 0, 16)
        for n in range(12):
            rhs = sum(psi[n, j] * P[j] / d.H[j] for j in range(max(0, n - 1), n + 4))
            assert abs(rhs) < ctx.eps_verify * max(abs(psi[n, j] / d.H[j]) for j in range(max(0, n - 1), n + 4))


@pytest.mark.parametrize("family", FAMILIES)
def test_compatibility_with_jacobi(ref_data, psi_all, ctx, family):
    d = ref_data(family)
    psi = psi_all(family)[STRUCTURE_METHODS[0]]
    r = compatibility_residual(d, psi)
    rt = compatibility_residual(d, psi, transposed=True)
    assert r < ctx.eps_verify and rt < ctx.eps_verify


def test_unknown_structure_method(ref_data):
    d = ref_data("F12")
    with pytest.raises(ValueError):
        structure_matrix(d.spec, d, "nope")
