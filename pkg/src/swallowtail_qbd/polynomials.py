"""Orthogonal polynomials on the swallow tail built numerically from a quadrature rule.

This is the independent route to the closed-form coefficients: the
polynomials are produced by Gram-Schmidt against W, the recurrence blocks
are then read off from moments.

Within degree n the basis follows the order u^n, u^(n-1) v, ..., v^n, so
P_{n,k} has leading part u^(n-k) v^k plus terms u^(n-j) v^j with j < k.
Rather than orthogonalizing raw monomials (whose Gram matrix is badly
conditioned), the candidate for slot (n, k) is u*P_{n-1,k} (or v*P_{n-1,n-1}
for k = n), which spans the same flag of subspaces; this is the Arnoldi /
Stieltjes form of the same Gram-Schmidt process. Values and monomial
coefficients are carried along in extended precision.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly

from .quadrature import QuadratureRule, build_quadrature
from .special import DomainError, ModelParameters


@dataclass
class PolynomialTable:
    """Coefficients of Q_{n,k} (normalized to 1 at (1,1)) and monic P_{n,k}.

    ``coef[(n, k)][i, j]`` multiplies u^i v^j. Coefficients grow like 10^n, so
    they are kept in extended precision and evaluated that way; the values are
    returned as ordinary floats.
    """
    N: int
    params: ModelParameters
    coef: Dict[Tuple[int, int], np.ndarray] = field(default_factory=dict)
    monic: Dict[Tuple[int, int], np.ndarray] = field(default_factory=dict)
    values: Dict[Tuple[int, int], np.ndarray] = field(default_factory=dict)

    def indices(self):
        return [(n, k) for n in range(self.N + 1) for k in range(n + 1)]

    def evaluate(self, n: int, k: int, u, v, monic: bool = False):
        c = (self.monic if monic else self.coef)[(n, k)]
        out = npoly.polyval2d(np.asarray(u, dtype=c.dtype), np.asarray(v, dtype=c.dtype), c)
        return np.asarray(out, dtype=float) if np.ndim(out) else float(out)

    def vector(self, n: int, u, v) -> np.ndarray:
        """Stacked values of Q_{n,0..n} at the given points."""
        return np.array([self.evaluate(n, k, u, v) for k in range(n + 1)])

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "params": self.params.as_dict(),
            "order": "coef[i][j] multiplies u^i v^j",
            "Q": {f"{n},{k}": self.coef[(n, k)].astype(float).tolist()
                  for n, k in self.indices()},
            "P_monic": {f"{n},{k}": self.monic[(n, k)].astype(float).tolist()
                        for n, k in self.indices()},
        }


def _shift(c: np.ndarray, var: str) -> np.ndarray:
    out = np.zeros_like(c)
    if var == "u":
        out[1:, :] = c[:-1, :]
    else:
        out[:, 1:] = c[:, :-1]
    return out


def gram_schmidt_table(N: int, p: ModelParameters, rule: QuadratureRule = None,
                       reorth: int = 2, dtype=np.longdouble) -> PolynomialTable:
    """Orthogonal polynomials of degree <= N under W, indexed like the closed forms."""
    if N < 0:
        raise DomainError("degree cap must be >= 0")
    if rule is None:
        rule = build_quadrature(max(24, N + 8), p)
    if rule.order < N + 2:
        raise DomainError(f"rule order {rule.order} too small for degree {N}")
    w = rule.weights.astype(dtype)
    uu = rule.u.astype(dtype)
    vv = rule.v.astype(dtype)
    size = N + 2  # room for the shift into degree N+1 when building the next degree
    basis_vals: List[np.ndarray] = []   # orthonormal values at nodes
    basis_coef: List[np.ndarray] = []   # matching monomial coefficients
    basis_one: List[float] = []         # matching values at (1,1)

    table = PolynomialTable(N, p)
    raw_vals, raw_coef, raw_one = {}, {}, {}

    def add(vals, coef, one, key):
        for _ in range(reorth):
            for bv, bc, b1 in zip(basis_vals, basis_coef, basis_one):
                h = np.sum(w * vals * bv)
                vals = vals - h * bv
                coef = coef - h * bc
                one = one - h * b1
        nrm = np.sqrt(np.sum(w * vals * vals))
        raw_vals[key], raw_coef[key], raw_one[key] = vals, coef, one
        basis_vals.append(vals / nrm)
        basis_coef.append(coef / nrm)
        basis_one.append(one / nrm)

    c0 = np.zeros((size, size), dtype=dtype)
    c0[0, 0] = 1
    add(np.ones(rule.size, dtype=dtype), c0, dtype(1), (0, 0))
    for n in range(1, N + 1):
        for k in range(n + 1):
            src = (n - 1, min(k, n - 1))
            var, mult = ("u", uu) if k < n else ("v", vv)
            add(raw_vals[src] * mult, _shift(raw_coef[src], var), raw_one[src], (n, k))

    for n, k in table.indices():
        coef = raw_coef[(n, k)][: N + 1, : N + 1]
        one = raw_one[(n, k)]
        lead = coef[n - k, k]
        table.coef[(n, k)] = coef / one
        table.monic[(n, k)] = coef / lead
        table.values[(n, k)] = (raw_vals[(n, k)] / one).astype(float)
    table.rule = rule
    return table


def inner_products(table: PolynomialTable, rule: QuadratureRule, f=None):
    """Matrix of <f Q_a, Q_b> over all indices a, b of the table (f defaults to 1)."""
    idx = table.indices()
    V = np.array([table.evaluate(n, k, rule.u, rule.v) for n, k in idx])
    wf = rule.weights if f is None else rule.weights * f(rule.u, rule.v)
    return idx, (V * wf) @ V.T


def moment_blocks(table: PolynomialTable, rule: QuadratureRule, n: int, var: str):
    """(A_n, B_n, C_n) for multiplication by u or v, read off from moments.

    Entry [k, j] of a block is <x Q_{n,k}, Q_{m,j}> / <Q_{m,j}, Q_{m,j}>, with the
    norms taken from the same quadrature so the route never touches the closed forms.
    """
    if n + 1 > table.N:
        raise DomainError(f"table degree {table.N} too small to extract level {n}")
    x = rule.u if var == "u" else rule.v
    w = rule.weights

    def vals(m):
        return np.array([table.evaluate(m, j, rule.u, rule.v) for j in range(m + 1)])

    Qn = vals(n)
    out = []
    for m in (n + 1, n, n - 1):
        if m < 0:
            out.append(np.zeros((n + 1, 0)))
            continue
        Qm = vals(m)
        norms = (Qm * Qm) @ w
        G = (Qn * x * w) @ Qm.T
        out.append(G / norms[None, :])
    return tuple(out)


# --------------------------------------------------------------------------
# second-order operator


def apply_pde_operator(coef: np.ndarray, p: ModelParameters, u, v):
    """The second-order operator D_{alpha,beta,gamma} applied to a polynomial,
    evaluated at the points (u, v) by exact differentiation of its coefficients."""
    a, b, g = p.alpha, p.beta, p.gamma
    u = np.asarray(u, dtype=coef.dtype)
    v = np.asarray(v, dtype=coef.dtype)
    ev = lambda c: npoly.polyval2d(u, v, c)
    cu = npoly.polyder(coef, 1, axis=0)
    cv = npoly.polyder(coef, 1, axis=1)
    cuu = npoly.polyder(coef, 2, axis=0)
    cvv = npoly.polyder(coef, 2, axis=1)
    cuv = npoly.polyder(cu, 1, axis=1)
    return ((u * (1 - u) - (1 - v) / 4) * ev(cuu)
            + (1 - v) * (2 * u - 1) * ev(cuv)
            + ((2 * u - 1) ** 2 + v * (1 - 2 * v)) * ev(cvv)
            + (b + g + 1.5 - (a + b + 2 * g + 3) * u) * ev(cu)
            + 2 * ((b - a) * u - (a + b + g + 2.5) * v + a + 1) * ev(cv))


def eigenvalue(n: int, k: int, p: ModelParameters):
    return n * (n + p.alpha + p.beta + 2 * p.gamma + 2) + k * (k + p.alpha + p.beta + 1)


def pde_residual(n: int, k: int, p: ModelParameters, table: PolynomialTable, points) -> float:
    """max |D Q_{n,k} + lambda_{n,k} Q_{n,k}| over the given interior points."""
    c = table.coef[(n, k)]
    u = np.asarray(points[0], dtype=c.dtype)
    v = np.asarray(points[1], dtype=c.dtype)
    res = apply_pde_operator(c, p, u, v) + eigenvalue(n, k, p) * npoly.polyval2d(u, v, c)
    return float(np.max(np.abs(res)))


def random_interior_points(count: int, rng) -> Tuple[np.ndarray, np.ndarray]:
    """Points drawn through the square parametrization (always strictly inside)."""
    x = rng.uniform(0.02, 0.98, count)
    y = rng.uniform(0.02, 0.98, count)
    bad = np.abs(x - y) < 0.02
    y[bad] = np.where(x[bad] > 0.5, x[bad] - 0.3, x[bad] + 0.3)
    return 0.5 * (x + y), 2 * x * y - x - y + 1
