"""Closed-form three-term recurrence coefficients and the block Jacobi operators.

Notation used in the cancelled forms below, for a level ``n`` and phase ``k``::

    s  = gamma + 1/2        x  = n + s         (shifted Jacobi index)
    m  = n - k              q  = n + k
    ab = alpha + beta + 1

Every delta-ratio is written with its shared linear factors divided out, so
the k = n edge (a 0/0 form in the raw quotients) and the k = 0 corner (where
the Jacobi factor (x + ab) cancels) evaluate to their finite limits.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum
from typing import List

import numpy as np

from .special import (DomainError, ModelParameters, PoleError, _div, delta,
                      jacobi_a, jacobi_b, jacobi_c, jacobi_norm_sq, pochhammer)

U_FAMILIES = ("a", "b", "c", "d", "e")
V_FAMILIES = ("a1", "a2", "a3", "b1", "b2", "b3", "c1", "c2", "c3")


def _u_range(which: str, n: int):
    return {
        "a": (0, n), "b": (0, n), "c": (0, n - 1), "e": (0, n - 1), "d": (1, n),
    }[which]


def _v_range(which: str, n: int):
    return {
        "a1": (1, n), "a2": (0, n), "a3": (0, n),
        "b1": (1, n), "b2": (0, n), "b3": (0, n - 1),
        "c1": (1, n), "c2": (0, n - 1), "c3": (0, n - 2),
    }[which]


def in_range(which: str, n: int, k: int) -> bool:
    lo, hi = _u_range(which, n) if which in U_FAMILIES else _v_range(which, n)
    return n >= 0 and lo <= k <= hi


def _check(which, n, k):
    if not in_range(which, n, k):
        raise DomainError(f"coefficient {which}_{{{n},{k}}} is outside its index range")


def _edge_ratio(m, s):
    """(m + 2s)/(m + s), whose limit at m = 0 is 2 for every s."""
    if m == 0:
        return 2 + 0 * s
    return _div(m + 2 * s, m + s, "(m+2s)/(m+s)")


class _Ctx:
    __slots__ = ("a", "b", "s", "x", "m", "q", "ab")

    def __init__(self, n, k, p: ModelParameters):
        self.a, self.b = p.alpha, p.beta
        self.s = p.gamma + 0.5
        self.x = n + self.s
        self.m = n - k
        self.q = n + k
        self.ab = p.alpha + p.beta + 1


def _a_nk(c: _Ctx):
    # 1/2 a_x * (m+2s)/(m+s) * (q+2s+ab)/(q+s+ab), a_x = (x+al+1)(x+ab)/((2x+ab)(2x+ab+1))
    f1 = 1 if c.m == c.q else _div(c.x + c.ab, c.q + c.s + c.ab, "a_{n,k}")  # k = 0
    f2 = 1 if c.m == 0 else _div(c.q + 2 * c.s + c.ab, 2 * c.x + c.ab, "a_{n,k}")  # k = n
    return 0.5 * (c.x + c.a + 1) * _edge_ratio(c.m, c.s) * f1 * f2 / (2 * c.x + c.ab + 1)


def _c_nk(c: _Ctx, p):
    return 0.5 * jacobi_c(c.x, p) * _div(c.m, c.m + c.s, "c_{n,k}") * _div(
        c.q + c.ab, c.q + c.s + c.ab, "c_{n,k}")


def _e_nk(c: _Ctx, k, p):
    return 0.5 * jacobi_a(k, p) * _div(c.m, c.m + c.s, "e_{n,k}") * _div(
        c.q + 2 * c.s + c.ab, c.q + c.s + c.ab, "e_{n,k}")


def _d_nk(c: _Ctx, k, p):
    return 0.5 * jacobi_c(k, p) * _edge_ratio(c.m, c.s) * _div(
        c.q + c.ab, c.q + c.s + c.ab, "d_{n,k}")


def coeff_u(n: int, k: int, which: str, p: ModelParameters):
    """Entries of A_{n,1}, B_{n,1}, C_{n,1} (the u-recurrence).

    ``d`` is also defined at k = n, where it appears in the last row of B_{n,1}.
    """
    _check(which, n, k)
    c = _Ctx(n, k, p)
    if which == "a":
        return _a_nk(c)
    if which == "c":
        return _c_nk(c, p)
    if which == "e":
        return _e_nk(c, k, p)
    if which == "d":
        return _d_nk(c, k, p)
    total = _a_nk(c)
    if in_range("c", n, k):
        total = total + _c_nk(c, p)
    if in_range("e", n, k):
        total = total + _e_nk(c, k, p)
    if in_range("d", n, k):
        total = total + _d_nk(c, k, p)
    return 1 - total


def _v_raw(n, k, which, p: ModelParameters):
    c = _Ctx(n, k, p)
    if which == "a1":
        return (2 * jacobi_c(k, p) * jacobi_a(c.x, p) * _edge_ratio(c.m, c.s)
                * _div(c.m + 2 * c.s + 1, c.m + c.s + 1, "a1"))
    if which == "a2":
        return 2 * (2 * jacobi_b(k, p) - 1) * _a_nk(c)
    if which == "a3":
        # 2 a_k a_x (q+2s+ab)(q+2s+ab+1)/((q+s+ab)(q+s+ab+1)) with the a_x factors cancelled
        g1 = 1 if c.m == c.q else _div(c.x + c.ab, c.q + c.s + c.ab, "a3")
        g2 = 1 if c.m == 0 else _div((c.q + 2 * c.s + c.ab) * (c.q + 2 * c.s + c.ab + 1),
                                     (2 * c.x + c.ab) * (2 * c.x + c.ab + 1), "a3")
        return (2 * jacobi_a(k, p) * (c.x + c.a + 1) * g1 * g2
                / (c.q + c.s + c.ab + 1))
    if which == "b1":
        return 2 * (2 * jacobi_b(c.x, p) - 1) * _d_nk(c, k, p)
    if which == "b3":
        return 2 * (2 * jacobi_b(c.x, p) - 1) * _e_nk(c, k, p)
    if which == "c1":
        return (2 * jacobi_c(k, p) * jacobi_c(c.x, p)
                * _div((c.q + c.ab) * (c.q + c.ab - 1),
                       (c.q + c.s + c.ab - 1) * (c.q + c.s + c.ab), "c1"))
    if which == "c2":
        return 2 * (2 * jacobi_b(k, p) - 1) * _c_nk(c, p)
    if which == "c3":
        return (2 * jacobi_a(k, p) * jacobi_c(c.x, p)
                * _div(c.m * (c.m - 1), (c.m + c.s - 1) * (c.m + c.s), "c3"))
    raise DomainError(f"unknown family {which}")


def coeff_v(n: int, k: int, which: str, p: ModelParameters):
    """Entries of A_{n,2}, B_{n,2}, C_{n,2} (the v-recurrence); b2 by complement."""
    _check(which, n, k)
    if which != "b2":
        return _v_raw(n, k, which, p)
    total = 0
    for fam in V_FAMILIES:
        if fam != "b2" and in_range(fam, n, k):
            total = total + _v_raw(n, k, fam, p)
    return 1 - total


def coeff_special_gamma(n: int, k: int, which: str, p: ModelParameters):
    """The simplified closed forms at gamma = -1/2 and gamma = +1/2.

    At gamma = -1/2 the short forms for a, d, a1 and b1 come from cancelling
    delta_{n,k}/delta_{n,k}, which is 0/0 on the edge k = n; there the limit
    of the general formula carries an extra factor 2, applied here.
    The short b2 assumes a full row of neighbours; on the phase where one
    family drops out (k = n-1 at gamma = -1/2, k = n at gamma = +1/2) b2 is
    taken as the complement instead.
    """
    g = p.gamma
    if g not in (-0.5, 0.5):
        raise DomainError(f"special forms need gamma = +-1/2, got {g}")
    _check(which, n, k)
    if which == "b2" and k == (n - 1 if g == -0.5 else n):
        return 1 - sum(coeff_special_gamma(n, k, f, p) for f in V_FAMILIES
                       if f != "b2" and in_range(f, n, k))
    A = lambda i: jacobi_a(i, p)
    B = lambda i: jacobi_b(i, p)
    C = lambda i: jacobi_c(i, p)
    if g == -0.5:
        edge = 2 if k == n else 1
        table = {
            "a": lambda: 0.5 * A(n) * edge,
            "c": lambda: 0.5 * C(n),
            "e": lambda: 0.5 * A(k),
            "d": lambda: 0.5 * C(k) * edge,
            "b": lambda: 0.5 * (B(n) + B(k)),
            "a1": lambda: 2 * A(n) * C(k) * edge,
            "a2": lambda: A(n) * (2 * B(k) - 1) * edge,
            "a3": lambda: 2 * A(n) * A(k),
            "b1": lambda: (2 * B(n) - 1) * C(k) * edge,
            "b2": lambda: 0.5 * (1 + (2 * B(n) - 1) * (2 * B(k) - 1)),
            "b3": lambda: (2 * B(n) - 1) * A(k),
            "c1": lambda: 2 * C(n) * C(k),
            "c2": lambda: C(n) * (2 * B(k) - 1),
            "c3": lambda: 2 * C(n) * A(k),
        }
        return table[which]()
    r = lambda x1, y1, x2, y2: delta_ratio(x1, y1, x2, y2, p)
    table = {
        "a": lambda: 0.5 * A(n + 1) * r(n + 2, k, n + 1, k),
        "c": lambda: 0.5 * C(n + 1) * r(n, k, n + 1, k),
        "e": lambda: 0.5 * A(k) * r(n + 1, k + 1, n + 1, k),
        "d": lambda: 0.5 * C(k) * r(n + 1, k - 1, n + 1, k),
        "b": lambda: 0.5 * (B(n + 1) + B(k)),
        "a1": lambda: 2 * A(n + 1) * C(k) * r(n + 1.5, k - 1.5, n + 0.5, k - 0.5),
        "a2": lambda: A(n + 1) * (2 * B(k) - 1) * r(n + 2, k, n + 1, k),
        "a3": lambda: 2 * A(n + 1) * A(k) * r(n + 1.5, k + 1.5, n + 0.5, k + 0.5),
        "b1": lambda: (2 * B(n + 1) - 1) * C(k) * r(n + 1, k - 1, n + 1, k),
        "b2": lambda: 0.5 * (1 + (2 * B(n + 1) - 1) * (2 * B(k) - 1)),
        "b3": lambda: (2 * B(n + 1) - 1) * A(k) * r(n + 1, k + 1, n + 1, k),
        "c1": lambda: 2 * C(n + 1) * C(k) * r(n - 0.5, k - 0.5, n + 0.5, k + 0.5),
        "c2": lambda: C(n + 1) * (2 * B(k) - 1) * r(n, k, n + 1, k),
        "c3": lambda: 2 * C(n + 1) * A(k) * r(n - 0.5, k + 0.5, n + 0.5, k - 0.5),
    }
    return table[which]()


def delta_ratio(x1, y1, x2, y2, p: ModelParameters):
    """delta_{x1,y1} / delta_{x2,y2}, dropping a linear factor shared by both."""
    ab = p.alpha + p.beta + 1
    d1, s1 = x1 - y1, x1 + y1 + ab
    d2, s2 = x2 - y2, x2 + y2 + ab
    if d1 == d2:
        return _div(s1, s2, "delta ratio")
    if s1 == s2:
        return _div(d1, d2, "delta ratio")
    return _div(d1 * s1, d2 * s2, "delta ratio")


def b_u_alternative(n: int, k: int, p: ModelParameters):
    """b_{n,k} through its alternative closed form (singular at beta = +-alpha)."""
    a, b, g = p.alpha, p.beta, p.gamma
    if b * b == a * a:
        raise DomainError("alternative b_{n,k} form divides by beta^2 - alpha^2")
    _check("b", n, k)
    bx = jacobi_b(n + g + 0.5, p)
    bk = jacobi_b(k, p)
    return 0.5 * (bx + bk) + (1 - 4 * g * g) / (4 * (b * b - a * a)) * (2 * bx - 1) * (2 * bk - 1)


def delta_ratio_identity(n: int, k: int, p: ModelParameters):
    """Sum of the four delta ratios entering a, c, d, e; equals 4."""
    s = p.gamma + 0.5
    den = delta(n + s, k, p)
    if den == 0:
        raise PoleError(f"delta_{{n+gamma+1/2,k}} vanishes at n={n}, k={k}")
    num = (delta(n + 2 * s, k, p) + delta(n, k, p)
           + delta(n + s, k - s, p) + delta(n + s, k + s, p))
    return num / den


def sigma(n: int, k: int, p: ModelParameters):
    """Value at (1,1) of the monic polynomial P_{n,k}."""
    if not 0 <= k <= n:
        raise DomainError(f"sigma needs 0 <= k <= n, got ({n},{k})")
    a, b, g = p.alpha, p.beta, p.gamma
    m = n - k
    if m == 0:
        # (2g+2)_{-1}/(g+3/2)_{-1} = (g+1/2)/(2g+1) = 1/2, also as g -> -1/2
        head = 0.5
    else:
        head = pochhammer(2 * g + 2, m - 1) / pochhammer(g + 1.5, m - 1)
    num = 2.0 ** (2 * k - n + 1) * head * pochhammer(a + 1, k) * pochhammer(a + g + 1.5, n)
    den = (pochhammer(k + a + b + 1, k) * pochhammer(n + k + a + b + 2 * g + 2, m)
           * pochhammer(n + a + b + g + 1.5, k))
    return _div(num, den, "sigma")


def _factorial(j):
    out = 1
    for i in range(2, j + 1):
        out *= i
    return out


def pi_norm(n: int, k: int, p: ModelParameters):
    """Diagonal entry Pi_{n,k} of the inverse norm matrix (Pochhammer form).

    Each (.)_{-1} in the product is paired with the linear factor
    that cancels its pole, so the result stays finite for every admissible
    parameter triple.
    """
    if not 0 <= k <= n:
        raise DomainError(f"pi_norm needs 0 <= k <= n, got ({n},{k})")
    a, b, g = p.alpha, p.beta, p.gamma
    m = n - k
    pair1 = 1 if n == 0 else pochhammer(a + b + g + 2.5, n - 1) * (n + k + a + b + g + 1.5)
    pair2 = 1 if n + k == 0 else pochhammer(a + b + 2 * g + 3, n + k - 1) * (2 * n + a + b + 2 * g + 2)
    pair3 = 1 if m == 0 else pochhammer(2 * g + 2, m - 1) * (2 * m + 2 * g + 1)
    pair4 = 1 if k == 0 else pochhammer(a + b + 2, k - 1) * (2 * k + a + b + 1)
    num = pochhammer(a + 1, k) * pochhammer(a + g + 1.5, n) * pair1 * pair2 * pair3 * pair4
    den = (pochhammer(b + 1, k) * pochhammer(b + g + 1.5, n) * pochhammer(a + b + 2, n + k)
           * pochhammer(g + 1.5, n) * _factorial(k) * _factorial(m))
    return _div(num, den, "Pi_{n,k}")


def pi_norm_alt(n: int, k: int, p: ModelParameters):
    """Pi_{n,k} written through classical Jacobi norms (needs positive Gamma arguments)."""
    if not 0 <= k <= n:
        raise DomainError(f"pi_norm needs 0 <= k <= n, got ({n},{k})")
    a, b, g = p.alpha, p.beta, p.gamma
    s = g + 0.5
    m = n - k
    norms = jacobi_norm_sq(s, p) / (jacobi_norm_sq(n + s, p) * jacobi_norm_sq(k, p))
    pair = 1 if m == 0 else pochhammer(2 * g + 2, m - 1) * (2 * m + 2 * g + 1)
    rest = _div(pochhammer(a + b + 2 * g + 2, n + k) * pair * (n + k + a + b + g + 1.5),
                pochhammer(a + b + 2, n + k) * _factorial(m) * (a + b + g + 1.5), "Pi alt")
    return norms * rest


def tau_bound_constant(shift, p: ModelParameters):
    """C_shift = 1/(3 - 4 b_{shift + 1/2}) in its expanded rational form."""
    a, b = p.alpha, p.beta
    if shift == -0.5:
        # the factor alpha + beta is common to both parts
        return _div(a + b + 2, 3 * a - b + 2, "C_-1/2")
    t = (a + b + 2 * shift + 1) * (a + b + 2 * shift + 3)
    return _div(t, t + 2 * (a * a - b * b), f"C_{shift}")


# --------------------------------------------------------------------------
# block operators


class OperatorKind(str, Enum):
    J1 = "J1"
    J2 = "J2"
    P = "P"
    J1_TILDE = "J1_TILDE"
    J2_TILDE = "J2_TILDE"
    GENERATOR_CANDIDATE = "GENERATOR_CANDIDATE"


@dataclass
class LevelBlockTriple:
    level: int
    variable: str
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def row_sums(self) -> np.ndarray:
        return self.A.sum(axis=1) + self.B.sum(axis=1) + self.C.sum(axis=1)


def u_blocks(n: int, p: ModelParameters) -> LevelBlockTriple:
    A = np.zeros((n + 1, n + 2))
    B = np.zeros((n + 1, n + 1))
    C = np.zeros((n + 1, n))
    for k in range(n + 1):
        A[k, k] = coeff_u(n, k, "a", p)
        B[k, k] = coeff_u(n, k, "b", p)
        if k >= 1:
            B[k, k - 1] = coeff_u(n, k, "d", p)
        if k <= n - 1:
            B[k, k + 1] = coeff_u(n, k, "e", p)
            C[k, k] = coeff_u(n, k, "c", p)
    return LevelBlockTriple(n, "U", A, B, C)


def v_blocks(n: int, p: ModelParameters) -> LevelBlockTriple:
    A = np.zeros((n + 1, n + 2))
    B = np.zeros((n + 1, n + 1))
    C = np.zeros((n + 1, n))
    for k in range(n + 1):
        A[k, k + 1] = coeff_v(n, k, "a3", p)
        A[k, k] = coeff_v(n, k, "a2", p)
        B[k, k] = coeff_v(n, k, "b2", p)
        if k >= 1:
            A[k, k - 1] = coeff_v(n, k, "a1", p)
            B[k, k - 1] = coeff_v(n, k, "b1", p)
            C[k, k - 1] = coeff_v(n, k, "c1", p)
        if k <= n - 1:
            B[k, k + 1] = coeff_v(n, k, "b3", p)
            C[k, k] = coeff_v(n, k, "c2", p)
        if k <= n - 2:
            C[k, k + 1] = coeff_v(n, k, "c3", p)
    return LevelBlockTriple(n, "V", A, B, C)


@dataclass
class BlockTridiagonalOperator:
    """Levels 0..N of a block tridiagonal operator; level n holds (A_n, B_n, C_n).

    The operator is never materialized as a whole unless :meth:`dense` is called.
    """
    params: ModelParameters
    kind: OperatorKind
    levels: List[LevelBlockTriple] = field(default_factory=list)

    @property
    def N(self) -> int:
        return len(self.levels) - 1

    def offsets(self) -> np.ndarray:
        return np.cumsum([0] + [n + 1 for n in range(self.N + 2)])

    def combine(self, other: "BlockTridiagonalOperator", w_self, w_other,
                kind: OperatorKind) -> "BlockTridiagonalOperator":
        lv = []
        for L1, L2 in zip(self.levels, other.levels):
            lv.append(LevelBlockTriple(L1.level, "P", w_self * L1.A + w_other * L2.A,
                                       w_self * L1.B + w_other * L2.B,
                                       w_self * L1.C + w_other * L2.C))
        return BlockTridiagonalOperator(self.params, kind, lv)

    def apply(self, x: List[np.ndarray]) -> List[np.ndarray]:
        """Blockwise product with a vector given per level (levels 0..N+1)."""
        out = []
        for n, L in enumerate(self.levels):
            y = L.B @ x[n] + L.A @ x[n + 1]
            if n > 0:
                y = y + L.C @ x[n - 1]
            out.append(y)
        return out

    def left_apply(self, x: List[np.ndarray]) -> List[np.ndarray]:
        """Row vector times operator, restricted to levels 0..N."""
        out = [np.zeros(n + 1) for n in range(self.N + 1)]
        for n, L in enumerate(self.levels):
            out[n] = out[n] + x[n] @ L.B
            if n + 1 <= self.N:
                out[n + 1] = out[n + 1] + x[n] @ L.A
            if n > 0:
                out[n - 1] = out[n - 1] + x[n] @ L.C
        return out

    def dense(self) -> np.ndarray:
        """Square truncation over the states of levels 0..N."""
        off = self.offsets()
        size = off[self.N + 1]
        M = np.zeros((size, size))
        for n, L in enumerate(self.levels):
            r = slice(off[n], off[n + 1])
            M[r, off[n]:off[n + 1]] = L.B
            if n < self.N:
                M[r, off[n + 1]:off[n + 2]] = L.A
            if n > 0:
                M[r, off[n - 1]:off[n]] = L.C
        return M

    def row(self, n: int, k: int):
        """Nonzero transitions out of state (n, k) as a list of ((n', k'), weight)."""
        L = self.levels[n]
        out = []
        if n > 0:
            for j in np.nonzero(L.C[k])[0]:
                out.append(((n - 1, int(j)), float(L.C[k, j])))
        for j in np.nonzero(L.B[k])[0]:
            out.append(((n, int(j)), float(L.B[k, j])))
        for j in np.nonzero(L.A[k])[0]:
            out.append(((n + 1, int(j)), float(L.A[k, j])))
        return out

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "params": self.params.as_dict(),
            "levels": [{"n": L.level, "A": L.A.tolist(), "B": L.B.tolist(), "C": L.C.tolist()}
                       for L in self.levels],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BlockTridiagonalOperator":
        pr = d["params"]
        p = ModelParameters(pr["alpha"], pr["beta"], pr["gamma"], pr.get("tau"))
        levels = []
        for L in d["levels"]:
            n = L["n"]
            C = np.array(L["C"], dtype=float).reshape(n + 1, n)
            levels.append(LevelBlockTriple(n, "?", np.array(L["A"], dtype=float),
                                           np.array(L["B"], dtype=float), C))
        return cls(p, OperatorKind(d["kind"]), levels)


def build_operator(kind, N: int, p: ModelParameters) -> BlockTridiagonalOperator:
    """Assemble levels 0..N of J1, J2, P, or the (0,1)-normalized tilde operators."""
    kind = OperatorKind(kind)
    if N < 0:
        raise DomainError("truncation level must be >= 0")
    if kind == OperatorKind.J1:
        return BlockTridiagonalOperator(p, kind, [u_blocks(n, p) for n in range(N + 1)])
    if kind == OperatorKind.J2:
        return BlockTridiagonalOperator(p, kind, [v_blocks(n, p) for n in range(N + 1)])
    if kind == OperatorKind.J1_TILDE:
        q = p.swapped()
        levels = []
        for n in range(N + 1):
            L = u_blocks(n, q)
            levels.append(LevelBlockTriple(n, "U", L.A, L.B - np.eye(n + 1), L.C))
        return BlockTridiagonalOperator(p, kind, levels)
    if kind == OperatorKind.J2_TILDE:
        q = p.swapped()
        return BlockTridiagonalOperator(p, kind, [v_blocks(n, q) for n in range(N + 1)])
    if kind == OperatorKind.P:
        if p.tau is None:
            raise DomainError("building P needs tau")
        J1 = build_operator(OperatorKind.J1, N, p)
        J2 = build_operator(OperatorKind.J2, N, p)
        return J1.combine(J2, 1 - p.tau, p.tau, OperatorKind.P)
    if kind == OperatorKind.GENERATOR_CANDIDATE:
        J1 = build_operator(OperatorKind.J1, N, p)
        J2 = build_operator(OperatorKind.J2, N, p)
        return J2.combine(J1, 1.0, -1.0, OperatorKind.GENERATOR_CANDIDATE)
    raise DomainError(f"unknown operator kind {kind}")


def coefficient_grid(which: str, N: int, p: ModelParameters):
    """All (n, k, value) of one family for n <= N, in its index range."""
    f = coeff_u if which in U_FAMILIES else coeff_v
    rows = []
    for n in range(N + 1):
        for k in range(n + 1):
            if in_range(which, n, k):
                rows.append((n, k, f(n, k, which, p)))
    return rows


def coefficient_csv(which: str, N: int, p: ModelParameters) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "k", which])
    for n, k, val in coefficient_grid(which, N, p):
        w.writerow([n, k, f"{float(val):.17g}"])
    return buf.getvalue()
