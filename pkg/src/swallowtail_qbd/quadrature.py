"""Weight, geometry and quadrature over the swallow-tail region.

The region is the image of the unit square under

    u = (x + y)/2,    v = 2xy - x - y + 1,

a 2-to-1 map with Jacobian |x - y|. The three boundary factors pull back to
2(1-x)(1-y), 2xy and (x-y)^2/2, so on the half-square T = {0 < y < x < 1}
with barycentric coordinates l1 = y, l2 = 1 - x, l3 = x - y the weighted
measure W du dv becomes (up to a constant)

    l1^b l2^a l3^(2g+1) (1 - l2)^b (1 - l1)^a  dl.

The edge factors are Jacobi-type, but (1-l2)^b and (1-l1)^a are point
singularities at two vertices. T is split into the three cells where one
barycentric coordinate dominates; in each cell collapsed coordinates
centred at that vertex turn every singular factor into a product of
one-dimensional Jacobi weights, so tensor Gauss-Jacobi rules converge
exponentially.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .special import DomainError, ModelParameters, normalizing_constant

_OTHERS = {0: (1, 2), 1: (0, 2), 2: (0, 1)}


def in_omega(u, v, strict: bool = True):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    f1 = 2 * u + v - 1
    f2 = 1 - 2 * u + v
    f3 = 2 * u * u - 2 * u - v + 1
    if strict:
        return (f1 > 0) & (f2 > 0) & (f3 > 0)
    return (f1 >= 0) & (f2 >= 0) & (f3 >= 0)


def weight_eval(u, v, p: ModelParameters):
    """Normalized weight W(u, v); the point must be interior to the region."""
    if not np.all(in_omega(u, v)):
        raise DomainError("weight evaluated outside the open swallow-tail region")
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    w = ((1 - 2 * u + v) ** p.alpha * (2 * u + v - 1) ** p.beta
         * (2 * u * u - 2 * u - v + 1) ** p.gamma) / float(normalizing_constant(p))
    return w if w.ndim else float(w)


def uv_from_lambda(lam: np.ndarray):
    x = 1 - lam[1]
    y = lam[0]
    return 0.5 * (x + y), 2 * x * y - x - y + 1


def gauss_jacobi01(m: int, p: float, q: float = 0.0):
    """Nodes and weights on [0, 1] for the weight s^p (1-s)^q."""
    if m < 1:
        raise DomainError("rule order must be >= 1")
    t, w = roots_jacobi(m, q, p)
    return 0.5 * (t + 1), w / 2.0 ** (p + q + 1)


def _exponents(p: ModelParameters):
    edge = np.array([p.beta, p.alpha, 2 * p.gamma + 1], dtype=float)
    vertex = np.array([p.alpha, p.beta, 0.0], dtype=float)
    return edge, vertex


def _theta_halves(m: int, ej: float, ek: float):
    """theta nodes on [0,1/2] and [1/2,1] with the Jacobi weights folded in."""
    out = []
    phi, w = gauss_jacobi01(m, ej)
    th = 0.5 * phi
    out.append((th, w * 2.0 ** (-ej - 1) * (1 - th) ** ek))
    phi, w = gauss_jacobi01(m, ek)
    th = 1 - 0.5 * phi
    out.append((th, w * 2.0 ** (-ek - 1) * th ** ej))
    return out


def _cell_max_radius(theta):
    return 1.0 / (1.0 + np.maximum(theta, 1 - theta))


def _lam_from_polar(i, r, theta):
    j, k = _OTHERS[i]
    lam = np.empty((3,) + np.shape(r))
    lam[i] = 1 - r
    lam[j] = r * theta
    lam[k] = r * (1 - theta)
    return lam


def _smooth_factor(i, lam, edge, vertex):
    """Factors left over once the cell's Jacobi weights are taken out."""
    j, k = _OTHERS[i]
    return (lam[i] ** edge[i]) * (1 - lam[j]) ** vertex[j] * (1 - lam[k]) ** vertex[k]


def _cell_rule(i, m, edge, vertex):
    j, k = _OTHERS[i]
    P = edge[j] + edge[k] + vertex[i]
    s, ws = gauss_jacobi01(m, P + 1)
    lams, wts = [], []
    for th, wt in _theta_halves(m, edge[j], edge[k]):
        R = _cell_max_radius(th)
        S, TH = np.meshgrid(s, th, indexing="ij")
        W = np.outer(ws, wt * R ** (P + 2))
        r = _cell_max_radius(TH) * S
        lam = _lam_from_polar(i, r, TH)
        W = W * _smooth_factor(i, lam, edge, vertex)
        lams.append(lam.reshape(3, -1))
        wts.append(W.ravel())
    return np.concatenate(lams, axis=1), np.concatenate(wts)


@dataclass
class QuadratureRule:
    """Nodes in (u, v) with positive weights that already include W.

    ``lam`` keeps the barycentric coordinates of each node on the half-square,
    from which boundary factors can be evaluated without cancellation.
    """
    u: np.ndarray
    v: np.ndarray
    weights: np.ndarray
    order: int
    lam: np.ndarray
    params: ModelParameters
    normalized: bool = True

    @property
    def size(self) -> int:
        return self.weights.size

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def integrate_fn(self, f: Callable) -> float:
        return self.integrate(f(self.u, self.v))

    def to_dict(self) -> dict:
        return {"order": self.order, "params": self.params.as_dict(),
                "normalized": self.normalized,
                "nodes": np.column_stack([self.u, self.v]).tolist(),
                "weights": self.weights.tolist()}


def build_quadrature(order: int, p: ModelParameters, normalized: bool = True) -> QuadratureRule:
    """Rule with 6*order^2 nodes integrating f*W over the region.

    With ``normalized=False`` the constant 1/C is omitted, so for zero exponents
    the weights sum to the area of the region.
    """
    if order < 1:
        raise DomainError("quadrature order must be >= 1")
    edge, vertex = _exponents(p)
    scale = 2.0 ** (p.alpha + p.beta - p.gamma)
    if normalized:
        scale /= float(normalizing_constant(p))
    lams, wts = [], []
    for i in range(3):
        lam, w = _cell_rule(i, order, edge, vertex)
        lams.append(lam)
        wts.append(w)
    lam = np.concatenate(lams, axis=1)
    w = np.concatenate(wts) * scale
    u, v = uv_from_lambda(lam)
    return QuadratureRule(u, v, w, order, lam, p, normalized)


def corner_excluded_integral(p: ModelParameters, g: Callable, radii: Sequence[float],
                             order: int = 40, cells: Sequence[int] = (0, 1)):
    """Integrals of g*W over the region minus shrinking neighbourhoods of cell vertices.

    ``g`` receives the barycentric coordinates (l1, l2, l3) and may be singular
    like 1/r at the vertices of ``cells`` (cell 0 is the corner (u,v) = (1,1),
    cell 1 is (0,1)). For each radius eps in ``radii`` (decreasing) the part of
    those cells with collapsed radius r < eps is left out. The radial variable
    is integrated in log r, so the rule stays accurate however small eps is.
    Returns the cumulative sequence of partial integrals, one per radius.
    """
    radii = list(radii)
    if any(b >= a for a, b in zip(radii, radii[1:])) or radii[0] >= 0.5:
        raise DomainError("radii must decrease and start below 1/2")
    edge, vertex = _exponents(p)
    scale = 2.0 ** (p.alpha + p.beta - p.gamma) / float(normalizing_constant(p))
    xi, wxi = roots_legendre(order)

    base = 0.0
    for i in range(3):
        if i in cells:
            continue
        lam, w = _cell_rule(i, order, edge, vertex)
        base += float(np.dot(w, g(lam)))

    pieces = []
    bounds = [None] + radii
    for lo_idx in range(1, len(bounds)):
        hi, lo = bounds[lo_idx - 1], bounds[lo_idx]
        total = 0.0
        for i in cells:
            j, k = _OTHERS[i]
            P = edge[j] + edge[k] + vertex[i]
            for th, wt in _theta_halves(order, edge[j], edge[k]):
                top = np.log(_cell_max_radius(th)) if hi is None else np.full_like(th, np.log(hi))
                a = np.log(lo)
                T = a + (top[None, :] - a) * (xi[:, None] + 1) / 2
                Wt = wxi[:, None] * (top[None, :] - a) / 2 * wt[None, :]
                r = np.exp(T)
                TH = np.broadcast_to(th[None, :], r.shape)
                lam = _lam_from_polar(i, r, TH)
                vals = Wt * r ** (P + 2) * _smooth_factor(i, lam, edge, vertex) * g(lam)
                total += float(vals.sum())
        pieces.append(total)
    return scale * (base + np.cumsum(pieces))
