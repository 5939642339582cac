import numpy as np
import pytest

from swallowtail_qbd.polynomials import (eigenvalue, gram_schmidt_table, inner_products,
                                         moment_blocks, pde_residual, random_interior_points)
from swallowtail_qbd.quadrature import build_quadrature, in_omega
from swallowtail_qbd.recurrence import OperatorKind, build_operator, pi_norm, sigma, u_blocks, v_blocks
from swallowtail_qbd.special import DomainError, ModelParameters

P1 = ModelParameters(0.3, 1.4, 0.2)


@pytest.fixture(scope="module")
def table():
    return gram_schmidt_table(6, P1)


@pytest.fixture(scope="module")
def rule():
    return build_quadrature(20, P1)


def test_normalized_at_corner(table):
    for n, k in table.indices():
        assert table.evaluate(n, k, 1.0, 1.0) == pytest.approx(1, abs=1e-10)


def test_orthogonality_and_norms(table, rule):
    idx, G = inner_products(table, rule)
    pis = np.array([float(pi_norm(n, k, P1)) for n, k in idx])
    assert np.abs(G * pis[None, :] - np.eye(len(idx))).max() < 1e-9


def test_monic_leading_terms(table):
    for n, k in table.indices():
        c = table.monic[(n, k)]
        assert c[n - k, k] == 1
        for j in range(k + 1, n + 1):
            assert c[n - j, j] == 0


def test_sigma_matches_monic(table):
    for n, k in table.indices():
        val = table.evaluate(n, k, 1.0, 1.0, monic=True)
        assert val == pytest.approx(float(sigma(n, k, P1)), rel=1e-9)


@pytest.mark.parametrize("n", range(5))
def test_moment_blocks_match_closed_forms(table, rule, n):
    for var, ref in (("u", u_blocks(n, P1)), ("v", v_blocks(n, P1))):
        A, B, C = moment_blocks(table, rule, n, var)
        assert np.abs(A - ref.A).max() < 1e-10
        assert np.abs(B - ref.B).max() < 1e-10
        if n:
            assert np.abs(C - ref.C).max() < 1e-10


def test_tilde_blocks_from_reflection(table, rule):
    # renormalize at (0, 1); the u-recurrence is then written for -u
    J1 = build_operator(OperatorKind.J1_TILDE, 4, P1)
    J2 = build_operator(OperatorKind.J2_TILDE, 4, P1)
    s = lambda m: np.array([table.evaluate(m, j, 0.0, 1.0) for j in range(m + 1)])
    for n in range(4):
        for sign, var, J in ((-1, "u", J1), (1, "v", J2)):
            A, B, C = (sign * M for M in moment_blocks(table, rule, n, var))
            L = J.levels[n]
            sn = s(n)
            assert np.abs(A * s(n + 1)[None, :] / sn[:, None] - L.A).max() < 1e-10
            assert np.abs(B * sn[None, :] / sn[:, None] - L.B).max() < 1e-10
            if n:
                assert np.abs(C * s(n - 1)[None, :] / sn[:, None] - L.C).max() < 1e-10


def test_moment_blocks_need_higher_degree(table, rule):
    with pytest.raises(DomainError):
        moment_blocks(table, rule, 6, "u")


def test_table_needs_enough_nodes():
    with pytest.raises(DomainError):
        gram_schmidt_table(10, P1, build_quadrature(5, P1))


@pytest.mark.parametrize("p", [ModelParameters(0, 0, 0), P1, ModelParameters(-0.8, 2.5, -0.5),
                               ModelParameters(2.0, -0.6, 0.5)])
def test_pde_eigenfunctions(p):
    t = gram_schmidt_table(6, p)
    pts = random_interior_points(50, np.random.default_rng(3))
    for n, k in t.indices():
        scale = max(1.0, eigenvalue(n, k, p))
        assert pde_residual(n, k, p, t, pts) / scale < 1e-9


def test_eigenvalue_examples():
    assert eigenvalue(0, 0, P1) == 0
    assert eigenvalue(1, 0, ModelParameters(0, 0, 0)) == 3
    assert eigenvalue(1, 1, ModelParameters(0, 0, 0)) == 5


def test_random_points_inside():
    u, v = random_interior_points(1000, np.random.default_rng(0))
    assert np.all(in_omega(u, v))


def test_to_dict(table):
    d = table.to_dict()
    assert d["N"] == 6 and "3,1" in d["Q"]
