"""Function-valued radiance: Lambert's cosine rule, irradiance and powers.

A ``ScalarRadianceField`` is a vectorized map ``(x, u) -> i_u(x)``: both
arguments are arrays with a trailing axis of length 3 that broadcast
against each other. The flux density through a surface element of normal
``n`` contributed by direction ``u`` is ``i_u(x) (u . n)``, positive when
the radiation leaves through the element and negative when it enters.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import EvaluationError, GeometryError, InvalidArgumentError
from .regions import Region, volume_integrate
from .sphere import (
    SphereSubset,
    SphericalQuadrature,
    as_direction,
    check_finite,
    integrate_subset,
    paired_sum,
)

FD_STEP = 1e-4


class ScalarRadianceField:
    """Radiance ``i_u(x)``.

    Build one with the class methods. The constructor itself is the escape
    hatch for arbitrary vectorized functions; their nonnegativity is only
    asserted in debug runs, and ``signed=True`` switches even that off for
    test perturbations.
    ``gradient`` (spatial, same call signature, trailing axis 3) is optional;
    central differences are used without it.
    """

    def __init__(self, func, gradient=None, *, kind="custom", params=None, signed=False):
        self._func = func
        self.signed = signed
        self._grad = gradient
        self.kind = kind
        self.params = dict(params or {})

    def __repr__(self):
        return f"ScalarRadianceField({self.kind}, {self.params})"

    def eval(self, x, u) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        shape = np.broadcast_shapes(x.shape, u.shape)[:-1]
        vals = np.broadcast_to(np.asarray(self._func(x, u), dtype=float), shape)
        if not np.all(np.isfinite(vals)):
            raise EvaluationError(f"radiance field {self.kind} returned a non-finite value")
        if self.kind == "custom" and not self.signed:
            assert np.all(vals >= 0), "radiance must be nonnegative (pass signed=True to allow)"
        return vals

    __call__ = eval

    @property
    def has_analytic_gradient(self) -> bool:
        return self._grad is not None

    def gradient(self, x, u, h: float = FD_STEP) -> np.ndarray:
        """Spatial gradient of ``i_u`` at ``x``."""
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        if self._grad is not None:
            shape = np.broadcast_shapes(x.shape, u.shape)
            return np.broadcast_to(np.asarray(self._grad(x, u), dtype=float), shape)
        return fd_gradient(lambda p: self.eval(p, u), x, h)

    # builders -----------------------------------------------------------

    @classmethod
    def zero(cls):
        return cls.isotropic(0.0)

    @classmethod
    def isotropic(cls, i0: float):
        _nonneg(i0, "isotropic radiance")
        return cls(
            lambda x, u: np.full(np.broadcast_shapes(x.shape, u.shape)[:-1], float(i0)),
            lambda x, u: np.zeros(np.broadcast_shapes(x.shape, u.shape)),
            kind="isotropic",
            params={"i0": float(i0)},
        )

    @classmethod
    def linear(cls, c: float, a):
        """``i_u(x) = c + a . x`` for every ``u``.

        An affine field cannot be nonnegative everywhere unless ``a = 0``;
        keeping it nonnegative on the region of interest is up to the caller.
        """
        a = np.asarray(a, dtype=float)
        if a.shape != (3,) or not np.all(np.isfinite(a)) or not np.isfinite(c):
            raise InvalidArgumentError("linear field needs finite c and a 3-vector a")
        return cls(
            lambda x, u: np.broadcast_to(c + x @ a, np.broadcast_shapes(x.shape, u.shape)[:-1]),
            lambda x, u: np.broadcast_to(a, np.broadcast_shapes(x.shape, u.shape)),
            kind="linear",
            params={"c": float(c), "a": a.tolist()},
        )

    @classmethod
    def transported(cls, direction, profile, profile_gradient=None, params=None):
        """Radiance constant along lines parallel to ``direction``.

        ``i(x) = profile(x - (x . d) d)``; the profile must be nonnegative.
        """
        d = as_direction(direction)
        P = np.eye(3) - np.outer(d, d)

        def func(x, u):
            vals = np.asarray(profile(x @ P), dtype=float)
            if np.any(vals < 0):
                raise EvaluationError("transported profile returned negative radiance")
            return np.broadcast_to(vals, np.broadcast_shapes(x.shape, u.shape)[:-1])

        grad = None
        if profile_gradient is not None:

            def grad(x, u):
                g = np.asarray(profile_gradient(x @ P), dtype=float) @ P
                return np.broadcast_to(g, np.broadcast_shapes(x.shape, u.shape))

        p = {"direction": d.tolist()}
        p.update(params or {})
        return cls(func, grad, kind="transported", params=p)

    @classmethod
    def lambert_surface(cls, i0: float, axis):
        """Uniform radiance ``i0`` on the open hemisphere ``u . axis > 0``, zero elsewhere."""
        _nonneg(i0, "Lambert radiance")
        n = as_direction(axis)
        return cls(
            lambda x, u: np.broadcast_to(
                np.where(u @ n > 0.0, float(i0), 0.0), np.broadcast_shapes(x.shape, u.shape)[:-1]
            ),
            lambda x, u: np.zeros(np.broadcast_shapes(x.shape, u.shape)),
            kind="lambert_surface",
            params={"i0": float(i0), "axis": n.tolist()},
        )


def _nonneg(v, what):
    if not (np.isfinite(v) and v >= 0):
        raise InvalidArgumentError(f"{what} must be finite and >= 0, got {v!r}")


def exp_profile(amplitude: float, rate):
    """``amplitude * exp(-rate . y)`` with its gradient, for transported fields."""
    rate = np.asarray(rate, dtype=float)
    _nonneg(amplitude, "profile amplitude")

    def f(y):
        return amplitude * np.exp(-(y @ rate))

    def g(y):
        return -f(y)[..., None] * rate

    return f, g


def gaussian_profile(amplitude: float, center, sigma: float):
    center = np.asarray(center, dtype=float)
    _nonneg(amplitude, "profile amplitude")
    if not sigma > 0:
        raise InvalidArgumentError(f"gaussian width must be positive, got {sigma}")

    def f(y):
        d = y - center
        return amplitude * np.exp(-np.sum(d * d, axis=-1) / (2.0 * sigma**2))

    def g(y):
        return -f(y)[..., None] * (y - center) / sigma**2

    return f, g


def combine_fields(a: float, f: ScalarRadianceField, b: float, g: ScalarRadianceField):
    """The field ``a f + b g`` (signed in general)."""
    grad = None
    if f.has_analytic_gradient and g.has_analytic_gradient:
        grad = lambda x, u: a * f.gradient(x, u) + b * g.gradient(x, u)
    return ScalarRadianceField(
        lambda x, u: a * f.eval(x, u) + b * g.eval(x, u),
        grad,
        kind="combination",
        params={"a": a, "b": b},
        signed=True,
    )


def fd_gradient(scalar: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float) -> np.ndarray:
    """Central-difference gradient of a vectorized scalar function of points."""
    x = np.asarray(x, dtype=float)
    cols = []
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        cols.append((np.asarray(scalar(x + e)) - np.asarray(scalar(x - e))) / (2.0 * h))
    return np.stack(np.broadcast_arrays(*cols), axis=-1)


# operations -------------------------------------------------------------


def lambert_density(field: ScalarRadianceField, x, u, n) -> float:
    """Signed flux density ``i_u(x) (u . n)`` through an element of normal ``n``."""
    u, n = as_direction(u), as_direction(n)
    return float(field.eval(np.asarray(x, float), u) * (u @ n))


def irradiance(
    field: ScalarRadianceField,
    x,
    n,
    quad: SphericalQuadrature,
    subset: SphereSubset | None = None,
) -> float:
    """``int_D i_u(x) (u . n) dw``; ``D`` is the full sphere by default."""
    n = as_direction(n)
    x = np.asarray(x, dtype=float)
    return integrate_subset(
        lambda u: field.eval(x, u) * (u @ n), quad, subset or SphereSubset.full()
    )


def energy_flux_vector(field: ScalarRadianceField, x, quad: SphericalQuadrature) -> np.ndarray:
    """``q(x) = int i_u(x) u dw``."""
    vals = field.eval(np.asarray(x, float), quad.nodes)
    check_finite(vals, quad.nodes)
    return paired_sum(quad, vals[:, None] * quad.nodes)


def integrand_scale(field: ScalarRadianceField, x, quad: SphericalQuadrature) -> float:
    """``int |i_u(x)| dw``, the natural magnitude for relative comparisons."""
    return float(paired_sum(quad, np.abs(field.eval(np.asarray(x, float), quad.nodes))))


def _samples(region):
    if not isinstance(region, Region):
        raise GeometryError(f"expected a closed Region, got {type(region).__name__}")
    return region.boundary_samples()


def directional_power(field: ScalarRadianceField, region: Region, u) -> float:
    """Power leaving ``region`` in direction ``u``: ``int_dR i_u (u . n) dA``."""
    u = as_direction(u)
    s = _samples(region)
    vals = field.eval(s.points, u)
    return float(np.sum(s.weights * vals * (s.normals @ u)))


def directional_powers(field: ScalarRadianceField, region: Region, quad: SphericalQuadrature):
    """Directional power at every node of ``quad``, shape ``(N,)``."""
    s = _samples(region)
    vals = field.eval(s.points[:, None, :], quad.nodes[None, :, :])
    cos = s.normals @ quad.nodes.T
    return np.sum(s.weights[:, None] * vals * cos, axis=0)


def total_power(field: ScalarRadianceField, region: Region, quad: SphericalQuadrature) -> float:
    """Total power out of ``region``, integrating irradiance over the boundary."""
    s = _samples(region)
    vals = field.eval(s.points[:, None, :], quad.nodes[None, :, :])
    cos = s.normals @ quad.nodes.T
    irr = paired_sum(quad, (vals * cos).T)
    return float(np.sum(s.weights * irr))


def radiant_intensity(field: ScalarRadianceField, region: Region, u) -> np.ndarray:
    """``S_u = int_dR i_u n dA``."""
    u = as_direction(u)
    s = _samples(region)
    vals = field.eval(s.points, u)
    return np.sum((s.weights * vals)[:, None] * s.normals, axis=0)


def radiant_intensity_volume(field: ScalarRadianceField, region: Region, u) -> np.ndarray:
    """The volume form ``int_R grad i_u dV`` of the radiant intensity."""
    u = as_direction(u)
    h = FD_STEP * region.characteristic_length
    return np.array(
        [volume_integrate(region, lambda p, k=k: field.gradient(p, u, h)[..., k]) for k in range(3)]
    )
