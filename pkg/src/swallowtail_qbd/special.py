"""Scalar building blocks: parameters, Pochhammer symbols, classical Jacobi data.

Every function here is written with plain arithmetic so it also accepts
``mpmath.mpf`` inputs; build a :class:`ModelParameters` from ``mpf`` values
to evaluate in extended precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import mpmath


class ParameterError(ValueError):
    """Raised when (alpha, beta, gamma, tau) violate the admissibility rules."""


class DomainError(ValueError):
    """Raised when a function is evaluated outside its domain."""


class PoleError(ZeroDivisionError):
    """Raised when a rational expression hits a vanishing denominator."""


@dataclass(frozen=True)
class ModelParameters:
    alpha: float
    beta: float
    gamma: float
    tau: Optional[float] = None

    def __post_init__(self):
        a, b, g = self.alpha, self.beta, self.gamma
        if not (a > -1 and b > -1 and g > -1):
            raise ParameterError(f"need alpha, beta, gamma > -1, got {a}, {b}, {g}")
        if not (a + g + 1.5 > 0 and b + g + 1.5 > 0):
            raise ParameterError(
                f"need alpha+gamma+3/2 > 0 and beta+gamma+3/2 > 0, got {a}, {b}, {g}")
        if self.tau is not None and not (0 <= self.tau <= 1):
            raise ParameterError(f"tau must lie in [0, 1], got {self.tau}")

    def with_tau(self, tau: float) -> "ModelParameters":
        return replace(self, tau=tau)

    def swapped(self) -> "ModelParameters":
        """Parameters with alpha and beta exchanged (the (0,1)-normalized model)."""
        return replace(self, alpha=self.beta, beta=self.alpha)

    def to_mp(self) -> "ModelParameters":
        tau = None if self.tau is None else mpmath.mpf(self.tau)
        return ModelParameters(mpmath.mpf(self.alpha), mpmath.mpf(self.beta),
                               mpmath.mpf(self.gamma), tau)

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma, "tau": self.tau}


def _is_mp(*xs) -> bool:
    return any(isinstance(x, mpmath.mpf) for x in xs)


def _div(num, den, what="expression"):
    if den == 0:
        raise PoleError(f"vanishing denominator in {what}")
    return num / den


def pochhammer(a, m: int):
    """Rising factorial (a)_m for integer m >= -1, with (a)_{-1} = 1/(a-1)."""
    if m < -1 or int(m) != m:
        raise DomainError(f"pochhammer needs an integer m >= -1, got {m}")
    if m == -1:
        return _div(1, a - 1, "(a)_{-1}")
    out = 1
    for i in range(int(m)):
        out = out * (a + i)
    return out


def loggamma(x):
    """log Gamma(x) for x > 0."""
    if not x > 0:
        raise DomainError(f"Gamma argument must be positive, got {x}")
    if _is_mp(x):
        return mpmath.loggamma(x)
    return math.lgamma(x)


def _exp(x):
    return mpmath.exp(x) if _is_mp(x) else math.exp(x)


def jacobi_a(x, p: ModelParameters):
    a, b = p.alpha, p.beta
    if x == 0:
        return _div(a + 1, a + b + 2, "a_0")
    return _div((x + a + 1) * (x + a + b + 1),
                (2 * x + a + b + 1) * (2 * x + a + b + 2), f"a_x at x={x}")


def jacobi_b(x, p: ModelParameters):
    a, b = p.alpha, p.beta
    if x == 0:
        # (x+a+b)/(2x+a+b) -> 1 at x = 0, including the a+b = 0 limit
        return _div(b + 1, a + b + 2, "b_0")
    t1 = _div((x + a + 1) * (x + 1), (2 * x + a + b + 1) * (2 * x + a + b + 2), f"b_x at x={x}")
    t2 = _div((x + b) * (x + a + b), (2 * x + a + b) * (2 * x + a + b + 1), f"b_x at x={x}")
    return t1 + t2


def jacobi_c(x, p: ModelParameters):
    a, b = p.alpha, p.beta
    if x == 0:
        return 0 * a
    return _div(x * (x + b), (2 * x + a + b) * (2 * x + a + b + 1), f"c_x at x={x}")


def jacobi_norm_sq(x, p: ModelParameters):
    """Squared norm of the [0,1] Jacobi polynomial Q_x^{(beta,alpha)} under the
    normalized weight, at real index x."""
    a, b = p.alpha, p.beta
    lin = 2 * x + a + b + 1
    if x == 0:
        return 1 + 0 * a
    if not lin > 0:
        raise DomainError(f"norm factor 2x+alpha+beta+1 must be positive, got {lin}")
    lg = (loggamma(a + 1) + loggamma(a + b + 2) + loggamma(x + 1) + loggamma(x + b + 1)
          - loggamma(b + 1) - loggamma(x + a + 1) - loggamma(x + a + b + 1))
    return _exp(lg) / lin


def delta(x, y, p: ModelParameters):
    return (x - y) * (x + y + p.alpha + p.beta + 1)


def normalizing_constant(p: ModelParameters):
    """The constant C making W integrate to one over the swallow tail.

    The ratios Gamma(2a+2g+2)/Gamma(a+g+1) are rewritten with the duplication
    formula so every Gamma argument is positive on the admissible set
    (a+g+1 may be zero or negative there).
    """
    a, b, g = p.alpha, p.beta, p.gamma
    mp = _is_mp(a, b, g)
    log2 = mpmath.log(2) if mp else math.log(2)
    logsqrtpi = mpmath.log(mpmath.pi) / 2 if mp else 0.5 * math.log(math.pi)
    lg = ((a + b - g + 2) * log2
          + loggamma(a + 1) + loggamma(b + 1) + loggamma(g + 1)
          + (2 * a + 2 * g + 1) * log2 + loggamma(a + g + 1.5) - logsqrtpi
          + (2 * b + 2 * g + 1) * log2 + loggamma(b + g + 1.5) - logsqrtpi
          + loggamma(a + b + g + 3)
          - loggamma(a + b + 2 * g + 3) - loggamma(2 * a + 2 * b + 2 * g + 5))
    return _exp(lg)
