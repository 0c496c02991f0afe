"""Finite Borel measures on the sphere: a density on quadrature nodes plus atoms.

A measure pairs with a continuous test function ``v`` as

    mu(v) = sum_k w_k rho_k v(u_k) + sum_i a_i v(d_i)

where ``(u_k, w_k)`` is the quadrature grid, ``rho_k`` the density and
``(d_i, a_i)`` the atoms. This is closed under every operation used here:
linear combination, multiplication by a function and the pointwise polar
decomposition of a vector measure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, InvalidArgumentError
from .sphere import (
    DIRECTION_TOL,
    SphereSubset,
    SphericalQuadrature,
    _frozen,
    as_direction,
    check_finite,
    paired_sum,
)


def _eval_on(v, dirs: np.ndarray, what="test function") -> np.ndarray:
    if len(dirs) == 0:
        return np.zeros(0)
    values = np.broadcast_to(np.asarray(v(dirs), dtype=float), (len(dirs),))
    check_finite(values, dirs, what)
    return values


def merge_atoms(dirs, weights):
    """Merge atoms whose directions coincide within 1e-12, summing weights.

    ``weights`` is ``(K,)`` or ``(K, 3)``. First-seen order is kept.
    """
    dirs = np.asarray(dirs, dtype=float).reshape(-1, 3)
    weights = np.asarray(weights, dtype=float)
    out_d: list[np.ndarray] = []
    out_w: list[np.ndarray] = []
    for d, w in zip(dirs, weights):
        d = as_direction(d)
        for j, e in enumerate(out_d):
            if np.max(np.abs(e - d)) <= DIRECTION_TOL:
                out_w[j] = out_w[j] + w
                break
        else:
            out_d.append(d)
            out_w.append(np.array(w, dtype=float))
    shape = (0,) + weights.shape[1:]
    if not out_d:
        return np.zeros((0, 3)), np.zeros(shape)
    return np.array(out_d), np.array(out_w)


@dataclass(frozen=True, eq=False)
class SphereMeasure:
    quad: SphericalQuadrature
    density: np.ndarray
    atom_dirs: np.ndarray
    atom_weights: np.ndarray

    def __post_init__(self):
        density = np.asarray(self.density, dtype=float)
        if density.shape != (self.quad.size,):
            raise InvalidArgumentError(
                f"density needs {self.quad.size} node values, got shape {density.shape}"
            )
        dirs, weights = merge_atoms(self.atom_dirs, self.atom_weights)
        keep = weights != 0.0
        dirs, weights = dirs[keep], weights[keep]
        if not (np.all(np.isfinite(density)) and np.all(np.isfinite(weights))):
            raise InvalidArgumentError("measure densities and atom weights must be finite")
        object.__setattr__(self, "density", _frozen(density))
        object.__setattr__(self, "atom_dirs", _frozen(dirs.reshape(-1, 3)))
        object.__setattr__(self, "atom_weights", _frozen(weights))

    @classmethod
    def zero(cls, quad):
        return cls(quad, np.zeros(quad.size), np.zeros((0, 3)), np.zeros(0))

    @classmethod
    def from_density(cls, quad, density, atoms=()):
        """``density`` is an array of node values or a function of directions."""
        if callable(density):
            density = _eval_on(density, quad.nodes, "density")
        dirs = [d for d, _ in atoms]
        weights = [a for _, a in atoms]
        return cls(quad, np.broadcast_to(density, (quad.size,)), np.reshape(dirs, (-1, 3)), weights)

    @classmethod
    def atom(cls, quad, direction, weight: float):
        return cls(quad, np.zeros(quad.size), [direction], [weight])

    def support_size(self) -> int:
        return self.quad.size + len(self.atom_weights)

    def __repr__(self):
        return (
            f"SphereMeasure(level={self.quad.level}, "
            f"density_norm={float(np.sum(self.quad.weights * np.abs(self.density))):.6g}, "
            f"atoms={len(self.atom_weights)})"
        )


def pair(mu: SphereMeasure, v) -> float:
    """Integrate the test function ``v`` against ``mu``."""
    dens = paired_sum(mu.quad, mu.density * _eval_on(v, mu.quad.nodes))
    atoms = np.sum(mu.atom_weights * _eval_on(v, mu.atom_dirs))
    return float(dens + atoms)


def measure_of(mu: SphereMeasure, D: SphereSubset) -> float:
    """``mu(D)``; the density part is resolved at node resolution."""
    inside = D.contains(mu.quad.nodes)
    dens = paired_sum(mu.quad, np.where(inside, mu.density, 0.0))
    atoms = 0.0
    if len(mu.atom_weights):
        atoms = np.sum(np.where(D.contains(mu.atom_dirs), mu.atom_weights, 0.0))
    return float(dens + atoms)


def norm(mu: SphereMeasure) -> float:
    """Total variation. For this representation the sup over unit test
    functions is attained and equals the sum of absolute masses."""
    return float(paired_sum(mu.quad, np.abs(mu.density)) + np.sum(np.abs(mu.atom_weights)))


def _check_grid(mu, nu):
    if mu.quad is not nu.quad and not (
        mu.quad.level == nu.quad.level and np.array_equal(mu.quad.nodes, nu.quad.nodes)
    ):
        raise GridMismatchError(f"measures live on different grids: {mu.quad} vs {nu.quad}")


def combine(a: float, mu: SphereMeasure, b: float, nu: SphereMeasure) -> SphereMeasure:
    """The measure ``a mu + b nu``."""
    _check_grid(mu, nu)
    return SphereMeasure(
        mu.quad,
        a * mu.density + b * nu.density,
        np.concatenate([mu.atom_dirs, nu.atom_dirs]),
        np.concatenate([a * mu.atom_weights, b * nu.atom_weights]),
    )


def scale(a: float, mu: SphereMeasure) -> SphereMeasure:
    return SphereMeasure(mu.quad, a * mu.density, mu.atom_dirs, a * mu.atom_weights)


def multiply(phi, mu: SphereMeasure) -> SphereMeasure:
    """The measure ``phi . mu`` with ``(phi . mu)(f) = mu(phi f)``.

    ``phi`` is a function of directions, or a number for a constant function.
    """
    if not callable(phi):
        c = float(phi)
        phi = lambda u: np.full(len(u), c)
    return SphereMeasure(
        mu.quad,
        _eval_on(phi, mu.quad.nodes) * mu.density,
        mu.atom_dirs,
        _eval_on(phi, mu.atom_dirs) * mu.atom_weights,
    )


def measures_equal(mu: SphereMeasure, nu: SphereMeasure, atol: float = 0.0) -> bool:
    """Equality up to ``atol`` in total variation of the difference."""
    return norm(combine(1.0, mu, -1.0, nu)) <= atol


@dataclass(frozen=True, eq=False)
class VectorSphereMeasure:
    """Three sphere measures on one grid with one shared atom list.

    ``density`` is ``(N, 3)`` and ``atom_weights`` is ``(K, 3)``; zero
    atom rows are kept so the support stays shared.
    """

    quad: SphericalQuadrature
    density: np.ndarray
    atom_dirs: np.ndarray
    atom_weights: np.ndarray

    def __post_init__(self):
        density = np.asarray(self.density, dtype=float)
        if density.shape != (self.quad.size, 3):
            raise InvalidArgumentError(f"vector density must have shape ({self.quad.size}, 3)")
        dirs, weights = merge_atoms(self.atom_dirs, np.asarray(self.atom_weights).reshape(-1, 3))
        if not (np.all(np.isfinite(density)) and np.all(np.isfinite(weights))):
            raise InvalidArgumentError("measure densities and atom weights must be finite")
        object.__setattr__(self, "density", _frozen(density))
        object.__setattr__(self, "atom_dirs", _frozen(dirs.reshape(-1, 3)))
        object.__setattr__(self, "atom_weights", _frozen(weights.reshape(-1, 3)))

    @classmethod
    def from_components(cls, m1: SphereMeasure, m2: SphereMeasure, m3: SphereMeasure):
        _check_grid(m1, m2)
        _check_grid(m1, m3)
        dirs = np.concatenate([m.atom_dirs for m in (m1, m2, m3)])
        weights = np.zeros((len(dirs), 3))
        start = 0
        for j, m in enumerate((m1, m2, m3)):
            weights[start : start + len(m.atom_weights), j] = m.atom_weights
            start += len(m.atom_weights)
        return cls(m1.quad, np.stack([m1.density, m2.density, m3.density], axis=1), dirs, weights)

    def component(self, j: int) -> SphereMeasure:
        return SphereMeasure(self.quad, self.density[:, j], self.atom_dirs, self.atom_weights[:, j])

    @property
    def components(self) -> tuple[SphereMeasure, SphereMeasure, SphereMeasure]:
        return tuple(self.component(j) for j in range(3))


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Polar decomposition ``V = unit . magnitude`` on the discrete support.

    ``node_units``/``atom_units`` hold the unit vector at each support point
    (rows of zeros where the magnitude vanishes, flagged by the ``*_zero``
    masks). Atom rows follow ``atom_dirs``, i.e. the atom list of ``V``.
    """

    magnitude: SphereMeasure
    node_units: np.ndarray
    atom_units: np.ndarray
    atom_dirs: np.ndarray
    atom_magnitudes: np.ndarray
    node_zero: np.ndarray
    atom_zero: np.ndarray


def _polar(rows: np.ndarray):
    mag = np.sqrt(np.sum(rows * rows, axis=1))
    zero = mag == 0.0
    units = np.zeros_like(rows)
    units[~zero] = rows[~zero] / mag[~zero, None]
    return mag, units, zero


def decompose(V: VectorSphereMeasure) -> Decomposition:
    node_mag, node_units, node_zero = _polar(V.density)
    atom_mag, atom_units, atom_zero = _polar(V.atom_weights)
    magnitude = SphereMeasure(V.quad, node_mag, V.atom_dirs, atom_mag)
    return Decomposition(
        magnitude=magnitude,
        node_units=_frozen(node_units),
        atom_units=_frozen(atom_units),
        atom_dirs=V.atom_dirs,
        atom_magnitudes=_frozen(atom_mag),
        node_zero=_frozen(node_zero, bool),
        atom_zero=_frozen(atom_zero, bool),
    )


def recompose(dec: Decomposition) -> VectorSphereMeasure:
    """Multiply the magnitude back by each coordinate of the unit field."""
    return VectorSphereMeasure(
        dec.magnitude.quad,
        dec.magnitude.density[:, None] * dec.node_units,
        dec.atom_dirs,
        dec.atom_magnitudes[:, None] * dec.atom_units,
    )


def angle_between(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise angle between vectors, accurate near 0 and pi/2."""
    cross = np.linalg.norm(np.cross(a, b), axis=-1)
    return np.arctan2(cross, np.sum(a * b, axis=-1))


def sup_norm(v, mu: SphereMeasure) -> float:
    vals = np.abs(_eval_on(v, np.concatenate([mu.quad.nodes, mu.atom_dirs])))
    return float(vals.max()) if len(vals) else 0.0


__all__ = [
    "SphereMeasure",
    "VectorSphereMeasure",
    "Decomposition",
    "pair",
    "measure_of",
    "norm",
    "combine",
    "scale",
    "multiply",
    "decompose",
    "recompose",
    "measures_equal",
    "merge_atoms",
    "angle_between",
]
