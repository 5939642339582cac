"""Spectral side of the chain: Karlin-McGregor integrals and the norm matrices."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from math import comb
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .polynomials import PolynomialTable, gram_schmidt_table
from .quadrature import QuadratureRule, build_quadrature
from .recurrence import coeff_u, coeff_v, pi_norm, sigma, u_blocks, v_blocks
from .special import DomainError, ModelParameters, normalizing_constant

State = Tuple[int, int]


@dataclass
class SpectralContext:
    """A polynomial table plus the rule used to integrate against it."""
    params: ModelParameters
    table: PolynomialTable
    rule: QuadratureRule
    check_rule: Optional[QuadratureRule] = None

    @classmethod
    def build(cls, p: ModelParameters, max_level: int, max_steps: int,
              check: bool = True) -> "SpectralContext":
        degree = 2 * max_level + max_steps
        order = max(16, degree // 2 + 4)
        table = gram_schmidt_table(max_level, p, build_quadrature(max(order, max_level + 8), p))
        rule = build_quadrature(order, p)
        check_rule = build_quadrature(2 * order, p) if check else None
        return cls(p, table, rule, check_rule)


def _km_integral(ctx: SpectralContext, rule: QuadratureRule, i: State, j: State, steps: int):
    tau = ctx.params.tau
    x = (1 - tau) * rule.u + tau * rule.v
    qi = ctx.table.evaluate(*i, rule.u, rule.v)
    qj = ctx.table.evaluate(*j, rule.u, rule.v)
    return float(np.dot(rule.weights, x ** steps * qi * qj))


def km_transition(i: State, j: State, steps: int, ctx: SpectralContext,
                  tol: float = 1e-7) -> float:
    """n-step transition probability from state i to state j via the spectral integral."""
    p = ctx.params
    if p.tau is None:
        raise DomainError("the spectral formula needs tau")
    if steps < 0:
        raise DomainError("steps must be >= 0")
    for s in (i, j):
        if not (0 <= s[1] <= s[0] <= ctx.table.N):
            raise DomainError(f"state {s} outside the polynomial table")
    val = _km_integral(ctx, ctx.rule, i, j, steps)
    if ctx.check_rule is not None:
        val2 = _km_integral(ctx, ctx.check_rule, i, j, steps)
        if abs(val - val2) > tol:
            raise DomainError(f"quadrature orders disagree by {abs(val - val2):.3g}")
    return val * float(pi_norm(*j, p))


def km_transition_entrywise(i: State, j: State, steps: int, ctx: SpectralContext) -> float:
    """The same probability from monic polynomials, the unnormalized weight and sigma."""
    p = ctx.params
    tau = p.tau
    rule = ctx.rule
    # rule weights carry 1/C already; undo it to integrate the bare weight
    C = float(normalizing_constant(p))
    pi_ = ctx.table.evaluate(*i, rule.u, rule.v, monic=True)
    pj = ctx.table.evaluate(*j, rule.u, rule.v, monic=True)
    w = rule.weights * C
    total = 0.0
    for k in range(steps + 1):
        mom = float(np.dot(w, rule.u ** (steps - k) * rule.v ** k * pi_ * pj))
        total += comb(steps, k) * (1 - tau) ** (steps - k) * tau ** k * mom
    return float(pi_norm(*j, p)) / (C * float(sigma(*i, p)) * float(sigma(*j, p))) * total


def state_index(s: State) -> int:
    n, k = s
    return n * (n + 1) // 2 + k


def km_matrix(states: Sequence[State], steps: int, ctx: SpectralContext,
              tol: float = 1e-7) -> np.ndarray:
    """km_transition for all pairs of the given states at once."""
    p = ctx.params
    pis = np.array([float(pi_norm(*s, p)) for s in states])
    out = []
    for rule in filter(None, (ctx.rule, ctx.check_rule)):
        x = ((1 - p.tau) * rule.u + p.tau * rule.v) ** steps
        V = np.array([ctx.table.evaluate(*s, rule.u, rule.v) for s in states])
        out.append((V * (rule.weights * x)) @ V.T)
    if len(out) == 2 and np.max(np.abs(out[0] - out[1])) > tol:
        raise DomainError("quadrature orders disagree")
    return out[0] * pis[None, :]


def km_report(p: ModelParameters, max_level: int, max_steps: int, N: int = 12,
              ctx: Optional[SpectralContext] = None) -> List[dict]:
    """Compare the spectral formula with powers of the truncated matrix.

    Entries (i, j) with levels <= max_level after at most max_steps steps only
    reach levels <= max_level + max_steps, so a truncation N above that is exact.
    """
    from .stochastic import build_P

    if N < max_level + max_steps:
        raise DomainError("truncation too small for an exact comparison")
    ctx = ctx or SpectralContext.build(p, max_level, max_steps)
    M = build_P(p, N).dense()
    states = [(n, k) for n in range(max_level + 1) for k in range(n + 1)]
    rows = []
    Mp = np.eye(M.shape[0])
    for steps in range(max_steps + 1):
        K = km_matrix(states, steps, ctx)
        for a, i in enumerate(states):
            for b, j in enumerate(states):
                km = float(K[a, b])
                mp = float(Mp[state_index(i), state_index(j)])
                rows.append({"i": f"{i[0]},{i[1]}", "j": f"{j[0]},{j[1]}", "n": steps,
                             "km_value": km, "matrix_power_value": mp,
                             "abs_diff": abs(km - mp)})
        Mp = Mp @ M
    return rows


def km_report_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ["i", "j", "n", "km_value", "matrix_power_value", "abs_diff"]
    w.writerow(cols)
    for r in rows:
        w.writerow([r["i"], r["j"], r["n"]]
                   + [f"{r[c]:.17g}" for c in cols[3:]])
    return buf.getvalue()


# --------------------------------------------------------------------------
# norm matrices


def generalized_inverse(n: int, p: ModelParameters) -> np.ndarray:
    """The (n+1) x 2n left inverse of the stacked transposed down-blocks at level n."""
    if n < 1:
        raise DomainError("the generalized inverse needs n >= 1")
    G = np.zeros((n + 1, 2 * n))
    for k in range(n):
        G[k, k] = 1.0 / coeff_u(n, k, "c", p)
    c1 = coeff_v(n, n, "c1", p)
    if n >= 2:
        G[n, n - 2] = -coeff_v(n, n - 2, "c3", p) / (c1 * coeff_u(n, n - 2, "c", p))
    G[n, n - 1] = -coeff_v(n, n - 1, "c2", p) / (c1 * coeff_u(n, n - 1, "c", p))
    G[n, 2 * n - 1] = 1.0 / c1
    return G


def generalized_inverse_check(n: int, p: ModelParameters, tol: float = 1e-12) -> bool:
    """G_n [C_{n,1}^T; C_{n,2}^T] equals the identity of size n+1."""
    stacked = np.vstack([u_blocks(n, p).C.T, v_blocks(n, p).C.T])
    prod = generalized_inverse(n, p) @ stacked
    return bool(np.max(np.abs(prod - np.eye(n + 1))) <= tol)


def norm_matrix_from_inverse(n: int, p: ModelParameters) -> np.ndarray:
    """Pi_n built level by level with the generalized inverse.

    Orthogonality gives A_{n-1,i} Pi_n^{-1} = Pi_{n-1}^{-1} C_{n,i}^T, so
    Pi_n = G_n [Pi_{n-1} A_{n-1,1}; Pi_{n-1} A_{n-1,2}].
    """
    Pi = np.ones((1, 1))
    for m in range(1, n + 1):
        stacked = np.vstack([Pi @ u_blocks(m - 1, p).A, Pi @ v_blocks(m - 1, p).A])
        Pi = generalized_inverse(m, p) @ stacked
    return Pi


def orthogonality_defect(ctx: SpectralContext) -> float:
    """max over table indices of |<Q_a, Q_b> Pi_b - delta_ab|."""
    idx = ctx.table.indices()
    rule = ctx.rule
    V = np.array([ctx.table.evaluate(n, k, rule.u, rule.v) for n, k in idx])
    G = (V * rule.weights) @ V.T
    pis = np.array([float(pi_norm(n, k, ctx.params)) for n, k in idx])
    return float(np.max(np.abs(G * pis[None, :] - np.eye(len(idx)))))
