"""Stochastic operator P = (1-tau) J1 + tau J2: admissible tau, validation,
invariant measure, recurrence and two feasibility checks."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .quadrature import corner_excluded_integral
from .recurrence import (BlockTridiagonalOperator, OperatorKind, build_operator,
                         pi_norm, tau_bound_constant)
from .special import DomainError, ModelParameters

TOL = 1e-14


class Region(str, Enum):
    A = "A"
    B = "B"
    C = "C"
    BOUNDARY = "BOUNDARY"


class Recurrence(str, Enum):
    NULL_RECURRENT = "NULL_RECURRENT"
    TRANSIENT = "TRANSIENT"


@dataclass
class RegionReport:
    region: Region
    gamma_constraint: str
    gamma_constraint_holds: bool
    tau_max: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["region"] = self.region.value
        return d


def classify_region(p: ModelParameters) -> RegionReport:
    """Region of the (alpha, beta) plane and the largest tau keeping P stochastic."""
    a, b, g = p.alpha, p.beta, p.gamma
    if b == a or b == -a:
        region, tau_max = Region.BOUNDARY, 1.0
    elif b > a and b > -a:
        region, tau_max = Region.A, 1.0
    elif a > b:
        region, tau_max = Region.B, float(tau_bound_constant(-0.5, p))
    else:
        region = Region.C
        tau_max = float(min(tau_bound_constant(0.5, p), tau_bound_constant(g + 1, p)))
    # the binding edge parameter is alpha except in region B
    lead, name = (b, "beta") if region == Region.B else (a, "alpha")
    if lead >= -0.5:
        constraint, ok = "gamma > -1", g > -1
    else:
        constraint, ok = f"gamma + {name} + 3/2 > 0", g + lead + 1.5 > 0
    return RegionReport(region, constraint, bool(ok), tau_max)


def build_P(p: ModelParameters, N: int) -> BlockTridiagonalOperator:
    if p.tau is None:
        raise DomainError("P needs tau")
    return build_operator(OperatorKind.P, N, p)


# --------------------------------------------------------------------------
# entrywise conditions


@dataclass
class StochasticityViolation:
    level: int
    block: str
    row: int
    column: int
    value: float
    inequality: str

    def to_dict(self) -> dict:
        return asdict(self)


# (label, block, column offset, phase range); phase ranges are (lo, hi)
# offsets relative to (0, n).
_FAMILIES = [
    ("tau*a1 > 0", "A", -1, (1, 0)),
    ("(1-tau)*a + tau*a2 > 0", "A", 0, (0, 0)),
    ("tau*a3 > 0", "A", 1, (0, 0)),
    ("(1-tau)*d + tau*b1 >= 0", "B", -1, (1, 0)),
    ("(1-tau)*b + tau*b2 >= 0", "B", 0, (0, 0)),
    ("(1-tau)*e + tau*b3 >= 0", "B", 1, (0, -1)),
    ("tau*c1 > 0", "C", -1, (1, 0)),
    ("(1-tau)*c + tau*c2 > 0", "C", 0, (0, -1)),
    ("tau*c3 > 0", "C", 1, (0, -2)),
]

_TILDE_LABELS = [
    "a1 > 0", "tau*a + a2 > 0", "a3 > 0",
    "tau*d + b1 >= 0", "tau*(b-1) + b2 >= 0", "tau*e + b3 >= 0",
    "c1 > 0", "tau*c + c2 > 0", "c3 > 0",
]


def family_entries(M: BlockTridiagonalOperator, labels=None):
    """Yield (label, block, level, row, column, value) over the nine entry families."""
    labels = labels or [f[0] for f in _FAMILIES]
    for label, (_, block, off, (lo, hi)) in zip(labels, _FAMILIES):
        for n in range(M.N + 1):
            if block == "C" and n == 0:
                continue
            mat = getattr(M.levels[n], block)
            for k in range(lo, n + hi + 1):
                yield label, block, n, k, k + off, float(mat[k, k + off])


def validate_stochastic(P: BlockTridiagonalOperator, tol: float = TOL) -> List[StochasticityViolation]:
    """Entries of P failing their sign condition.

    An entry counts as a violation only when it is below -tol: at tau = tau_max
    some entries vanish identically and rounding may leave -1e-17 behind.
    Entries tau*x vanish at tau = 0, so zeros are never reported.
    """
    if P.params.tau is None:
        raise DomainError("P carries no tau")
    return [StochasticityViolation(n, block, k, j, val, label)
            for label, block, n, k, j, val in family_entries(P) if val < -tol]


def minimal_margin(P: BlockTridiagonalOperator) -> Tuple[float, Optional[dict]]:
    """Smallest entry over the nine families and where it sits."""
    tau = P.params.tau
    best, where = math.inf, None
    for label, block, n, k, j, val in family_entries(P):
        if label.startswith("tau*") and tau == 0:
            continue
        if val < best:
            best, where = val, {"level": n, "block": block, "row": k, "column": j,
                                "inequality": label}
    return best, where


def tilde_combination(p: ModelParameters, tau1: float, N: int) -> BlockTridiagonalOperator:
    J1 = build_operator(OperatorKind.J1_TILDE, N, p)
    J2 = build_operator(OperatorKind.J2_TILDE, N, p)
    return J1.combine(J2, tau1, 1.0, OperatorKind.P)


def check_tilde_combination(p: ModelParameters, tau1: float, N: int,
                            tol: float = TOL) -> List[StochasticityViolation]:
    """Entrywise signs of tau1*J1~ + J2~ (the model normalized at (0,1))."""
    M = tilde_combination(p, tau1, N)
    return [StochasticityViolation(n, block, k, j, val, label)
            for label, block, n, k, j, val in family_entries(M, _TILDE_LABELS) if val < -tol]


@dataclass
class FeasibilityResult:
    feasible: bool
    witness: Optional[dict]

    def __bool__(self) -> bool:
        return self.feasible

    def to_dict(self) -> dict:
        return {"feasible": self.feasible, "witness": self.witness}


def continuous_time_feasibility(p: ModelParameters, N: int) -> FeasibilityResult:
    """Whether tau*(J2 - J1) can be a generator on levels 0..N for some tau > 0.

    The scale tau does not change signs, so it suffices to look at J2 - J1:
    off-diagonal entries must be >= 0 and diagonal ones <= 0. The witness is
    the most negative off-diagonal entry (or a positive diagonal one).
    """
    G = build_operator(OperatorKind.GENERATOR_CANDIDATE, N, p)
    off_worst, diag_bad = None, None
    for n in range(N + 1):
        for k in range(n + 1):
            for (m, j), val in G.row(n, k):
                entry = {"from": [n, k], "to": [m, j], "value": val}
                if (m, j) == (n, k):
                    if val > TOL and diag_bad is None:
                        diag_bad = dict(entry, kind="diagonal")
                elif val < -TOL and (off_worst is None or val < off_worst["value"]):
                    off_worst = dict(entry, kind="off-diagonal")
    worst = off_worst or diag_bad
    return FeasibilityResult(worst is None, worst)


# --------------------------------------------------------------------------
# invariant measure and recurrence


def invariant_measure(p: ModelParameters, N: int) -> np.ndarray:
    """pi_{(n,k)} = Pi_{n,k}, flattened in (level, phase) order."""
    return np.array([float(pi_norm(n, k, p)) for n in range(N + 1) for k in range(n + 1)])


def invariance_residual(p: ModelParameters, N: int) -> float:
    """max |(pi P)_s - pi_s| over states s whose neighbourhood lies inside the truncation."""
    P = build_P(p, N)
    pi = invariant_measure(p, N)
    off = P.offsets()
    blocks = [pi[off[n]:off[n + 1]] for n in range(N + 1)]
    left = P.left_apply(blocks)
    err = 0.0
    for n in range(N):  # level N misses the inflow from level N+1
        rel = np.abs(left[n] - blocks[n]) / np.maximum(1.0, np.abs(blocks[n]))
        err = max(err, float(rel.max()))
    return err


def classify_recurrence(p: ModelParameters) -> Recurrence:
    s = p.alpha + p.gamma
    return Recurrence.NULL_RECURRENT if -1.5 < s <= -1 else Recurrence.TRANSIENT


def _one_minus_u(lam):
    return lam[1] + 0.5 * lam[2]


def _one_minus_v(lam):
    # x + y - 2xy = x(1-y) + y(1-x), written without cancellation
    return (lam[0] + lam[2]) * (lam[1] + lam[2]) + lam[0] * lam[1]


def divergence_probe(p: ModelParameters, refinements: int = 4, first_radius: float = 0.1,
                     order: int = 40) -> np.ndarray:
    """Partial integrals of W/(1 - tau v - (1-tau) u) excluding shrinking corner discs.

    The exclusion radii are first_radius * 10^-j, j = 0..refinements-1. The
    sequence is nondecreasing; it settles when the integral converges.
    """
    if p.tau is None:
        raise DomainError("the probe needs tau")
    if refinements < 1:
        raise DomainError("need at least one refinement")
    tau = float(p.tau)
    radii = [first_radius * 10.0 ** (-j) for j in range(refinements)]

    def g(lam):
        return 1.0 / (tau * _one_minus_v(lam) + (1 - tau) * _one_minus_u(lam))

    return corner_excluded_integral(p, g, radii, order=order)


@dataclass
class ProbeTrend:
    verdict: str       # "growing" or "cauchy"
    decay: float       # estimated per-decade decay exponent of the increments

    def to_dict(self) -> dict:
        return asdict(self)


def probe_trend(seq: Sequence[float], threshold: float = 0.1) -> ProbeTrend:
    """Read growth off the per-decade increments of a probe sequence.

    For a corner behaviour r^kappa the increments shrink by 10^-kappa per decade;
    kappa <= 0 means divergence. Increments are compared at the two ends.
    """
    seq = np.asarray(seq, dtype=float)
    if seq.size < 3:
        raise DomainError("need at least three probe values")
    inc = np.diff(seq)
    if inc[-1] <= 0:
        return ProbeTrend("cauchy", math.inf)
    kappa = math.log10(inc[0] / inc[-1]) / (inc.size - 1)
    return ProbeTrend("growing" if kappa < threshold else "cauchy", kappa)
