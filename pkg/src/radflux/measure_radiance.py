"""Measure-valued radiance tensors.

At each point ``x`` a ``RadianceTensor`` yields three sphere measures
``I_1(x), I_2(x), I_3(x)`` and the flux measure through a surface element
of normal ``n`` is ``J(x, n) = sum_j n_j I_j(x)``. A tensor built by the
``conforming*`` constructors has the form ``I_j = u_j . mu_x`` for a
nonnegative scalar measure ``mu_x``, which is the radiation assumption:
the polar decomposition of ``I(x)`` has unit field ``u -> u``.

One tensor lives on one quadrature grid, and its atoms are declared up
front with weights that may depend on ``x``; surface integrals of flux
measures are then plain support-pointwise sums.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._parallel import map_ordered
from .errors import EvaluationError, GridMismatchError, InvalidArgumentError
from .measures import (
    SphereMeasure,
    VectorSphereMeasure,
    angle_between,
    decompose,
    measure_of,
    pair,
)
from .regions import Region
from .sphere import SphereSubset, SphericalQuadrature, as_direction, paired_sum

DEFAULT_ASSUMPTION_TOL = 1e-9


class RadianceTensor:
    """``x -> (I_1(x), I_2(x), I_3(x))`` on a fixed grid."""

    def __init__(self, quad: SphericalQuadrature, func, *, kind="general", params=None):
        self.quad = quad
        self._func = func
        self.kind = kind
        self.params = dict(params or {})

    def __repr__(self):
        return f"RadianceTensor({self.kind}, level={self.quad.level})"

    def eval(self, x) -> VectorSphereMeasure:
        V = self._func(np.asarray(x, dtype=float))
        if V.quad is not self.quad:
            raise GridMismatchError("tensor returned a measure on a foreign grid")
        return V

    __call__ = eval

    @classmethod
    def zero(cls, quad):
        empty = VectorSphereMeasure(quad, np.zeros((quad.size, 3)), np.zeros((0, 3)), np.zeros((0, 3)))
        return cls(quad, lambda x: empty, kind="zero")

    @classmethod
    def conforming(cls, quad, mu: Callable[[np.ndarray], SphereMeasure], *, kind="conforming", params=None):
        """``I_j(x) = u_j . mu(x)``; ``mu(x)`` must be a nonnegative measure."""

        def func(x):
            m = mu(x)
            if np.any(m.density < 0) or np.any(m.atom_weights < 0):
                raise EvaluationError(f"conforming tensor needs a nonnegative measure at {x.tolist()}")
            return VectorSphereMeasure(
                quad,
                m.density[:, None] * quad.nodes,
                m.atom_dirs,
                m.atom_weights[:, None] * m.atom_dirs,
            )

        return cls(quad, func, kind=kind, params=params)

    @classmethod
    def conforming_from_density(cls, quad, density, atoms: Sequence = ()):
        """Density part ``density(x, u)`` (e.g. a ScalarRadianceField) and
        atoms given as ``(direction, weight_fn)`` with ``weight_fn(x) -> float``."""
        atoms = [(as_direction(d), w) for d, w in atoms]

        def mu(x):
            rho = np.asarray(density(x, quad.nodes), dtype=float)
            return SphereMeasure(
                quad,
                np.broadcast_to(rho, (quad.size,)),
                np.reshape([d for d, _ in atoms], (-1, 3)),
                [float(w(x)) for _, w in atoms],
            )

        return cls.conforming(quad, mu, kind="conforming_density")

    @classmethod
    def conforming_from_atoms(cls, quad, directions, weights: Callable[[np.ndarray], np.ndarray]):
        """Purely atomic radiance: ``weights(x)`` gives one weight per direction."""
        dirs = np.array([as_direction(d) for d in directions]).reshape(-1, 3)
        zero = np.zeros(quad.size)

        def mu(x):
            return SphereMeasure(quad, zero, dirs, np.asarray(weights(x), dtype=float).reshape(len(dirs)))

        return cls.conforming(quad, mu, kind="conforming_atoms")

    @classmethod
    def from_components(cls, quad, components: Callable[[np.ndarray], tuple]):
        """General tensor from ``x -> (I_1, I_2, I_3)`` scalar measures."""
        return cls(quad, lambda x: VectorSphereMeasure.from_components(*components(x)), kind="general")

    @classmethod
    def mapped(cls, quad, mu: Callable[[np.ndarray], SphereMeasure], matrix):
        """``I_j = (M u)_j . mu(x)``; conforming only when ``M`` is the identity."""
        M = np.asarray(matrix, dtype=float)
        if M.shape != (3, 3):
            raise InvalidArgumentError("direction map must be a 3x3 matrix")

        def func(x):
            m = mu(x)
            return VectorSphereMeasure(
                quad,
                m.density[:, None] * (quad.nodes @ M.T),
                m.atom_dirs,
                m.atom_weights[:, None] * (m.atom_dirs @ M.T),
            )

        return cls(quad, func, kind="mapped", params={"matrix": M.tolist()})


@dataclass(frozen=True, eq=False)
class TotalDistribution:
    """Directional distribution of the power leaving a region."""

    measure: SphereMeasure


@dataclass(frozen=True)
class AssumptionReport:
    max_angular_deviation: float
    unit_norm_residual: float
    passed: bool
    checked_points: int

    def as_dict(self):
        return {
            "max_angular_deviation": self.max_angular_deviation,
            "unit_norm_residual": self.unit_norm_residual,
            "pass": self.passed,
            "checked_points": self.checked_points,
        }


def _contract(V: VectorSphereMeasure, n: np.ndarray) -> SphereMeasure:
    return SphereMeasure(V.quad, V.density @ n, V.atom_dirs, V.atom_weights @ n)


def apply_to_vector(T: RadianceTensor, x, v) -> SphereMeasure:
    """``I(x)(v) = sum_j v_j I_j(x)`` for an arbitrary 3-vector ``v``."""
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise InvalidArgumentError("expected a 3-vector")
    return _contract(T.eval(x), v)


def apply_to_normal(T: RadianceTensor, x, n) -> SphereMeasure:
    """Flux measure ``J(x, n)`` through an element of unit normal ``n``."""
    return _contract(T.eval(x), as_direction(n))


def radiance_measure_of(T: RadianceTensor, x, n, D: SphereSubset) -> float:
    return measure_of(apply_to_normal(T, x, n), D)


def total_distribution(T: RadianceTensor, region: Region) -> TotalDistribution:
    """``Phi_R = int_dR J(x, n(x)) dA``, accumulated support point by support point."""
    s = region.boundary_samples()
    evals = map_ordered(T.eval, list(s.points))
    density = np.zeros(T.quad.size)
    atoms: dict[tuple, list] = {}
    for V, n, w in zip(evals, s.normals, s.weights):
        density += w * (V.density @ n)
        for d, a in zip(V.atom_dirs, V.atom_weights @ n):
            key = tuple(d)
            if key in atoms:
                atoms[key][1] += w * a
            else:
                atoms[key] = [d, w * a]
    dirs = np.array([d for d, _ in atoms.values()]).reshape(-1, 3)
    weights = np.array([a for _, a in atoms.values()])
    return TotalDistribution(SphereMeasure(T.quad, density, dirs, weights))


def total_power_from_distribution(phi: TotalDistribution) -> float:
    return pair(phi.measure, lambda u: np.ones(len(u)))


def direct_total_power(T: RadianceTensor, region: Region) -> float:
    """Boundary integral of the total flux ``J(x, n)(S^2)``, evaluated sample by sample."""
    s = region.boundary_samples()
    total = 0.0
    for p, n, w in zip(s.points, s.normals, s.weights):
        total += w * pair(apply_to_normal(T, p, n), lambda u: np.ones(len(u)))
    return total


def energy_flux_vector_measure(T: RadianceTensor, x) -> np.ndarray:
    """``q(x) = I(x)(S^2)``: total mass of each component measure."""
    V = T.eval(x)
    return paired_sum(V.quad, V.density) + np.sum(V.atom_weights, axis=0)


def verify_radiation_assumption(T: RadianceTensor, x, tol: float = DEFAULT_ASSUMPTION_TOL) -> AssumptionReport:
    """Check that the unit field of ``I(x)`` is the identity on its support.

    Support points where ``|I(x)|`` vanishes are skipped.
    """
    dec = decompose(T.eval(x))
    units = np.concatenate([dec.node_units[~dec.node_zero], dec.atom_units[~dec.atom_zero]])
    dirs = np.concatenate([T.quad.nodes[~dec.node_zero], dec.atom_dirs[~dec.atom_zero]])
    if len(units) == 0:
        return AssumptionReport(0.0, 0.0, True, 0)
    ang = float(np.max(angle_between(units, dirs)))
    res = float(np.max(np.abs(np.linalg.norm(units, axis=1) - 1.0)))
    return AssumptionReport(ang, res, ang <= tol and res <= tol, len(units))


__all__ = [
    "RadianceTensor",
    "TotalDistribution",
    "AssumptionReport",
    "apply_to_normal",
    "apply_to_vector",
    "radiance_measure_of",
    "total_distribution",
    "total_power_from_distribution",
    "direct_total_power",
    "energy_flux_vector_measure",
    "verify_radiation_assumption",
]
