"""Directions on the unit sphere, quadrature rules and subsets of the sphere.

The quadrature family is a hemisphere-split Gauss product rule. Level ``L``
places ``2L`` Gauss-Legendre nodes in ``mu = cos(theta)`` on each of
``[0, 1]`` and ``[-1, 0]`` and ``4L`` equispaced azimuths (offset by half a
step), so

    level   nodes   exact degree
    -----   -----   ------------
      1       16         3
      2       64         7
      4      256        15
      8     1024        31
     16     4096        63
      L     16 L^2     4L - 1

Splitting at the equator means integrands that are polynomial on each
hemisphere separately (``max(u3, 0)`` and friends) are also integrated
exactly. The lower hemisphere is the exact antipode of the upper one,
stored in the same order, so odd integrands cancel pair by pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import EvaluationError, InvalidArgumentError

DIRECTION_TOL = 1e-12
DEFAULT_LEVEL = 8

E3 = np.array([0.0, 0.0, 1.0])


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.flags.writeable = False
    return a


def as_direction(v) -> np.ndarray:
    """Return ``v`` as a read-only unit 3-vector.

    Vectors with norm in [0.5, 2] are normalized; anything else is almost
    certainly a bug upstream and is rejected.
    """
    a = np.asarray(v, dtype=float)
    if a.shape != (3,) or not np.all(np.isfinite(a)):
        raise InvalidArgumentError(f"direction must be 3 finite numbers, got {v!r}")
    norm = math.sqrt(float(a @ a))
    if not 0.5 <= norm <= 2.0:
        raise InvalidArgumentError(f"direction norm {norm} outside [0.5, 2]")
    if abs(norm - 1.0) > DIRECTION_TOL:
        a = a / norm
    return _frozen(a)


def rotation_to(axis) -> np.ndarray:
    """Rotation matrix taking e3 to ``axis`` (identity when axis is e3)."""
    a = as_direction(axis)
    c = float(a[2])
    if np.array_equal(a, E3):
        return np.eye(3)
    if c <= -1.0 + 1e-15:
        # half turn about e1
        return np.diag([1.0, -1.0, -1.0])
    k = np.cross(E3, a)
    s = math.sqrt(float(k @ k))
    k = k / s
    K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + s * K + (1.0 - c) * (K @ K)


def cap_rule(level: int, axis=E3, half_angle: float = math.pi / 2):
    """Product Gauss rule on the cap ``{u : u.axis >= cos(half_angle)}``.

    Returns ``(nodes, weights)``; the weights sum to the cap's solid angle.
    For ``axis = e3`` and a right half-angle the nodes are exactly the
    upper half of ``build_quadrature(level)``.
    """
    if level < 1:
        raise InvalidArgumentError(f"level must be >= 1, got {level}")
    n_mu, n_phi = 2 * level, 4 * level
    lo = 0.0 if half_angle == math.pi / 2 else math.cos(half_angle)
    x, w = np.polynomial.legendre.leggauss(n_mu)
    mu = lo + (1.0 - lo) * (x + 1.0) / 2.0
    wmu = w * (1.0 - lo) / 2.0
    phi = (np.arange(n_phi) + 0.5) * (2.0 * math.pi / n_phi)
    sin_t = np.sqrt(np.clip(1.0 - mu * mu, 0.0, None))
    nodes = np.stack(
        [
            np.outer(sin_t, np.cos(phi)).ravel(),
            np.outer(sin_t, np.sin(phi)).ravel(),
            np.repeat(mu, n_phi),
        ],
        axis=1,
    )
    weights = np.repeat(wmu, n_phi) * (2.0 * math.pi / n_phi)
    R = rotation_to(axis)
    if not np.array_equal(R, np.eye(3)):
        nodes = nodes @ R.T
    return nodes, weights


@dataclass(frozen=True, eq=False)
class SphericalQuadrature:
    nodes: np.ndarray
    weights: np.ndarray
    level: int

    def __post_init__(self):
        object.__setattr__(self, "nodes", _frozen(self.nodes))
        object.__setattr__(self, "weights", _frozen(self.weights))

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def degree(self) -> int:
        """Highest polynomial degree integrated exactly."""
        return 4 * self.level - 1

    def __repr__(self):
        return f"SphericalQuadrature(level={self.level}, size={self.size})"


_CACHE: dict[int, SphericalQuadrature] = {}


def build_quadrature(level: int = DEFAULT_LEVEL) -> SphericalQuadrature:
    if not isinstance(level, (int, np.integer)) or level < 1:
        raise InvalidArgumentError(f"level must be an integer >= 1, got {level!r}")
    level = int(level)
    if level not in _CACHE:
        upper, w = cap_rule(level)
        nodes = np.concatenate([upper, -upper])
        weights = np.concatenate([w, w])
        _CACHE[level] = SphericalQuadrature(nodes, weights, level)
    return _CACHE[level]


def check_finite(values: np.ndarray, points: np.ndarray, what: str = "integrand"):
    bad = ~np.isfinite(values)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise EvaluationError(
            f"{what} is not finite at {points[i].tolist()}", where=points[i].copy()
        )


def paired_sum(quad: SphericalQuadrature, values: np.ndarray):
    """Fixed-order weighted sum over the nodes, antipodal pairs first.

    ``values`` may carry trailing axes (shape ``(N, ...)``).
    """
    h = quad.size // 2
    w = quad.weights[:h].reshape((h,) + (1,) * (values.ndim - 1))
    return np.sum(w * (values[:h] + values[h:]), axis=0)


def integrate_sphere(f: Callable[[np.ndarray], np.ndarray], quad: SphericalQuadrature) -> float:
    """Sum of ``w_k f(u_k)``; ``f`` maps an ``(N, 3)`` array to ``(N,)``."""
    values = np.broadcast_to(np.asarray(f(quad.nodes), dtype=float), (quad.size,))
    check_finite(values, quad.nodes)
    return float(paired_sum(quad, values))


@dataclass(frozen=True, eq=False)
class SphereSubset:
    """A Borel subset of the sphere: the whole sphere, a cap, or a predicate.

    A hemisphere is the cap with half-angle pi/2. Predicate subsets are
    resolved only at node resolution.
    """

    kind: str
    axis: np.ndarray | None = None
    half_angle: float = math.pi
    predicate: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    @classmethod
    def full(cls) -> SphereSubset:
        return cls("full")

    @classmethod
    def hemisphere(cls, axis) -> SphereSubset:
        return cls("hemisphere", as_direction(axis), math.pi / 2)

    @classmethod
    def cap(cls, axis, half_angle: float) -> SphereSubset:
        if not 0.0 <= half_angle <= math.pi:
            raise InvalidArgumentError(f"cap half-angle {half_angle} outside [0, pi]")
        if half_angle == math.pi / 2:
            return cls.hemisphere(axis)
        return cls("cap", as_direction(axis), float(half_angle))

    @classmethod
    def where(cls, predicate) -> SphereSubset:
        return cls("predicate", predicate=predicate)

    @property
    def cos_half_angle(self) -> float:
        if self.kind == "hemisphere":
            return 0.0
        if self.half_angle == math.pi:
            return -1.0
        return math.cos(self.half_angle)

    def contains(self, dirs: np.ndarray) -> np.ndarray:
        """Membership mask for an ``(N, 3)`` array of directions.

        Cap boundaries are closed, with a 1e-12 allowance on the dot product.
        """
        dirs = np.atleast_2d(dirs)
        if self.kind == "full":
            return np.ones(len(dirs), dtype=bool)
        if self.kind == "predicate":
            return np.asarray(self.predicate(dirs), dtype=bool).reshape(len(dirs))
        return dirs @ self.axis >= self.cos_half_angle - DIRECTION_TOL


def solid_angle(D: SphereSubset, quad: SphericalQuadrature) -> float:
    if D.kind == "full":
        return 4.0 * math.pi
    if D.kind == "predicate":
        return float(paired_sum(quad, np.where(D.contains(quad.nodes), 1.0, 0.0)))
    return 2.0 * math.pi * (1.0 - D.cos_half_angle)


def integrate_subset(f, quad: SphericalQuadrature, D: SphereSubset) -> float:
    """Integral of ``f`` over ``D``.

    Caps use a cap-adapted rule of the same level, so the cap boundary costs
    no accuracy; predicate subsets mask the nodes of ``quad``.
    """
    if D.kind == "full":
        return integrate_sphere(f, quad)
    if D.kind == "predicate":
        mask = D.contains(quad.nodes)
        values = np.broadcast_to(np.asarray(f(quad.nodes), dtype=float), (quad.size,))
        check_finite(values[mask], quad.nodes[mask])
        return float(paired_sum(quad, np.where(mask, values, 0.0)))
    if D.half_angle == 0.0:
        return 0.0
    if D.half_angle == math.pi:
        return integrate_sphere(f, quad)
    nodes, weights = cap_rule(quad.level, D.axis, D.half_angle)
    values = np.broadcast_to(np.asarray(f(nodes), dtype=float), (len(weights),))
    check_finite(values, nodes)
    return float(np.sum(weights * values))
