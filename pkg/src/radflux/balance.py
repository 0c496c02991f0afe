"""Numerical checks of the flux laws: Cauchy linearity, boundedness, balance.

Everything here compares two routes to the same quantity (boundary vs
volume, frozen vs sampled, strong vs weak form) and returns the size of
the disagreement. Derivatives are central differences, so the fields are
expected to be twice continuously differentiable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import InvalidArgumentError
from .measure_radiance import RadianceTensor, apply_to_normal
from .measures import SphereMeasure, combine, multiply, norm, scale
from .radiance import FD_STEP, ScalarRadianceField, directional_power, fd_gradient, irradiance
from .regions import Region, make_tetrahedron, volume_integrate
from .sphere import SphericalQuadrature, as_direction

BOUNDEDNESS_SLACK = 1e-9


@dataclass(frozen=True)
class CauchyMap:
    """Flux density as a function of point and unit normal.

    ``eval`` gives a scalar density, ``eval_measure`` a sphere measure; a
    map may carry either or both.
    """

    eval: Callable | None = None
    eval_measure: Callable | None = None

    @classmethod
    def linear(cls, F: Callable[[np.ndarray], np.ndarray]):
        """``(x, n) -> F(x) . n`` for a vector field ``F``."""
        return cls(eval=lambda x, n: float(np.asarray(F(x)) @ n))

    @classmethod
    def directional(cls, field: ScalarRadianceField, u):
        """Flux of the radiation travelling in direction ``u``: ``i_u(x) (u . n)``."""
        u = as_direction(u)
        return cls(eval=lambda x, n: float(field.eval(x, u) * (u @ n)))

    @classmethod
    def from_irradiance(cls, field: ScalarRadianceField, quad: SphericalQuadrature):
        return cls(eval=lambda x, n: irradiance(field, x, n, quad))

    @classmethod
    def from_tensor(cls, T: RadianceTensor):
        return cls(eval_measure=lambda x, n: apply_to_normal(T, x, n))

    @classmethod
    def conforming(cls, mu: SphereMeasure):
        """``(x, n) -> (u . n) . mu`` with a fixed measure ``mu``."""
        return cls(eval_measure=lambda x, n: multiply(lambda u: u @ n, mu))


@dataclass(frozen=True)
class BalanceData:
    """Rate of change ``rho_dot(x, u)`` and source ``s(x, u)``; both vectorized over points."""

    rho_dot: Callable
    source: Callable

    @classmethod
    def zero(cls):
        z = lambda x, u: np.zeros(np.shape(x)[:-1])
        return cls(z, z)

    @classmethod
    def consistent(cls, field: ScalarRadianceField):
        """Static data whose source is exactly ``grad i_u . u``.

        Uses the field's analytic gradient when it has one.
        """
        return cls(
            lambda x, u: np.zeros(np.shape(x)[:-1]),
            lambda x, u: field.gradient(x, u) @ np.asarray(u, float),
        )

    @classmethod
    def affine(cls, rho_c=0.0, rho_a=(0.0, 0.0, 0.0), src_c=0.0, src_a=(0.0, 0.0, 0.0)):
        """Direction-independent affine data: ``c + a . x`` for both fields."""
        ra, sa = np.asarray(rho_a, float), np.asarray(src_a, float)
        return cls(lambda x, u: rho_c + np.asarray(x) @ ra, lambda x, u: src_c + np.asarray(x) @ sa)


class Boundedness(NamedTuple):
    constant: float
    verified: bool


class RayCheck(NamedTuple):
    residual: float
    endpoint_difference: float


def _check_h(h):
    if not (np.isfinite(h) and h > 0):
        raise InvalidArgumentError(f"tetrahedron size must be positive, got {h!r}")


def tetrahedron_residual(map: CauchyMap, x, normal, h: float, mode: str = "frozen") -> float:
    """Flux imbalance over a shrinking Cauchy tetrahedron, divided by the slant area.

    ``mode="frozen"`` evaluates every face at ``x`` (zero for maps linear in
    the normal, at any size); ``mode="centroid"`` evaluates each face at its
    centroid, which for a smooth flux field decays like O(h).
    """
    _check_h(h)
    if mode not in ("frozen", "centroid"):
        raise InvalidArgumentError(f"unknown evaluation mode {mode!r}")
    tet = make_tetrahedron(x, h, normal)
    x = np.asarray(x, dtype=float)
    where = [x] * 4 if mode == "frozen" else list(tet.face_centroids())
    areas, normals = tet.face_areas(), tet.face_normals()
    a0 = areas[0]
    if map.eval_measure is not None:
        total = scale(areas[0], map.eval_measure(where[0], normals[0]))
        for p, n, a in zip(where[1:], normals[1:], areas[1:]):
            total = combine(1.0, total, a, map.eval_measure(p, n))
        return norm(total) / float(a0)
    if map.eval is None:
        raise InvalidArgumentError("Cauchy map has neither a scalar nor a measure evaluator")
    vals = [map.eval(p, n) * a for p, n, a in zip(where, normals, areas)]
    return abs(float(np.sum(vals))) / float(a0)


def _directional_derivative(field, pts, u, h):
    return fd_gradient(lambda p: field.eval(p, u), pts, h) @ u


def boundedness_constant(
    field: ScalarRadianceField, u, region: Region, slack: float = BOUNDEDNESS_SLACK
) -> Boundedness:
    """Largest ``|grad i_u . u|`` over the volume sample points, and whether
    ``|P_{R,u}| <= C |R| + slack`` holds with it."""
    u = as_direction(u)
    pts, _ = region.volume_rule()
    C = float(np.max(np.abs(_directional_derivative(field, pts, u, region.fd_step))))
    P = directional_power(field, region, u)
    return Boundedness(C, bool(abs(P) <= C * region.volume() + slack))


def differential_balance_residual(
    field: ScalarRadianceField, data: BalanceData, x, u, h: float = FD_STEP
) -> float:
    """``|grad i_u . u + rho_dot - s|`` at ``x``."""
    u = as_direction(u)
    x = np.asarray(x, dtype=float)
    lhs = _directional_derivative(field, x[None, :], u, h)[0]
    rd = float(np.asarray(data.rho_dot(x[None, :], u)).reshape(-1)[0])
    s = float(np.asarray(data.source(x[None, :], u)).reshape(-1)[0])
    return abs(lhs + rd - s)


def ray_conservation_residual(
    field: ScalarRadianceField, u, segment, samples: int, h: float = FD_STEP
) -> RayCheck:
    """Largest ``|grad i_u . u|`` along a segment parallel to ``u``, plus the
    largest change of ``i_u`` from the segment start."""
    u = as_direction(u)
    a, b = (np.asarray(p, dtype=float) for p in segment)
    d = b - a
    length = float(np.linalg.norm(d))
    if length == 0 or np.linalg.norm(np.cross(d / length, u)) > 1e-9:
        raise InvalidArgumentError("segment is not parallel to the direction")
    if samples < 2:
        raise InvalidArgumentError("need at least 2 samples along the segment")
    pts = a + np.linspace(0.0, 1.0, samples)[:, None] * d
    res = float(np.max(np.abs(_directional_derivative(field, pts, u, h))))
    vals = field.eval(pts, u)
    return RayCheck(res, float(np.max(np.abs(vals - vals[0]))))


def _data_on(fn, pts, u):
    return np.broadcast_to(np.asarray(fn(pts, u), dtype=float), (len(pts),))


def integral_balance_residual(field: ScalarRadianceField, data: BalanceData, region: Region, u) -> float:
    """``|int_R rho_dot dV + P_{R,u} - int_R s dV|``."""
    u = as_direction(u)
    rho = volume_integrate(region, lambda p: _data_on(data.rho_dot, p, u))
    src = volume_integrate(region, lambda p: _data_on(data.source, p, u))
    return abs(rho + directional_power(field, region, u) - src)


def virtual_power_sides(field, data, region: Region, u, w, h: float | None = None):
    """Both sides of the weak balance for a meter variation ``w``.

    Left: ``int_dR i_u (u . n) w dA + int_R w (rho_dot - s) dV``.
    Right: ``int_R i_u (grad w . u) dV``.
    """
    u = as_direction(u)
    h = region.fd_step if h is None else h
    s = region.boundary_samples()
    wb = np.broadcast_to(np.asarray(w(s.points), float), (len(s),))
    surface = float(np.sum(s.weights * field.eval(s.points, u) * (s.normals @ u) * wb))
    volume_term = volume_integrate(
        region,
        lambda p: np.asarray(w(p), float) * (_data_on(data.rho_dot, p, u) - _data_on(data.source, p, u)),
    )
    rhs = volume_integrate(region, lambda p: field.eval(p, u) * (fd_gradient(w, p, h) @ u))
    return surface + volume_term, rhs


def virtual_power_residual(field, data, region: Region, u, w, h: float | None = None) -> float:
    lhs, rhs = virtual_power_sides(field, data, region, u, w, h)
    return abs(lhs - rhs)
