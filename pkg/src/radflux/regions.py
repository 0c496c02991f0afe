"""Bounded regions of R^3 with oriented boundary samplers and volume rules.

Every region exposes a deterministic boundary rule (points, outward unit
normals, area weights) and a volume rule (points, weights). Rules:

* ``Box``: each face is cut into ``r x r`` cells with a 4x4 Gauss rule per
  cell; the volume uses ``r^3`` cells with 4x4x4 Gauss points. Exact for
  polynomials of degree <= 7 per cell, error O(r^-8) for smooth integrands.
* ``Ball``: the boundary reuses the spherical quadrature of level ``r``
  (exact degree 4r-1); the volume is that rule times a ``2r``-point radial
  Gauss rule.
* ``Tetrahedron`` and ``TriangleMesh``: collapsed (Duffy) Gauss product rules
  with ``r + 1`` points per direction on every triangle and tetrahedron,
  exact for degree <= 2r. Mesh volume integrals use signed cones from the
  vertex centroid, which is exact for any closed oriented mesh.

Finite-difference divergences use central differences with step
``1e-4 * characteristic_length`` (truncation O(h^2)); fields are assumed
twice continuously differentiable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from .errors import EvaluationError, GeometryError, InvalidArgumentError
from .sphere import _frozen, as_direction, build_quadrature, rotation_to

FD_RELATIVE_STEP = 1e-4
# Gauss points per cell and axis for boxes: degree 7 per cell, error O(cell^8)
BOX_GAUSS_POINTS = 4


@dataclass(frozen=True)
class FluxSample:
    point: np.ndarray
    normal: np.ndarray
    area_weight: float


@dataclass(frozen=True, eq=False)
class BoundarySamples:
    points: np.ndarray
    normals: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.weights)

    def __iter__(self) -> Iterator[FluxSample]:
        for p, n, w in zip(self.points, self.normals, self.weights):
            yield FluxSample(p, n, float(w))

    @property
    def total_area(self) -> float:
        return float(np.sum(self.weights))

    def closure(self) -> np.ndarray:
        """Area-weighted normal sum; zero for a closed surface."""
        return np.sum(self.weights[:, None] * self.normals, axis=0)


def _gauss01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


def _composite_gauss(lo: float, hi: float, cells: int, npts: int = BOX_GAUSS_POINTS):
    x, w = _gauss01(npts)
    edges = np.linspace(lo, hi, cells + 1)
    h = np.diff(edges)
    pts = (edges[:-1, None] + h[:, None] * x[None, :]).ravel()
    wts = (h[:, None] * w[None, :]).ravel()
    return pts, wts


def triangle_rule(tri: np.ndarray, n: int):
    """Collapsed Gauss rule on a triangle ``(3, 3)``; exact for degree <= 2n - 2."""
    a, b, c = tri
    x, w = _gauss01(n)
    s, t = np.meshgrid(x, x, indexing="ij")
    ws = np.outer(w, w)
    s, t, ws = s.ravel(), t.ravel(), ws.ravel()
    pts = a + s[:, None] * ((b - a) + t[:, None] * (c - b))
    twice_area = np.linalg.norm(np.cross(b - a, c - a))
    return pts, ws * s * twice_area


def tetra_rule(verts: np.ndarray, n: int, signed: bool = False):
    """Collapsed Gauss rule on a tetrahedron ``(4, 3)``; exact for degree <= 2n - 3.

    With ``signed=True`` the weights carry the sign of the orientation.
    """
    v0, v1, v2, v3 = verts
    x, w = _gauss01(n)
    s, t, r = (a.ravel() for a in np.meshgrid(x, x, x, indexing="ij"))
    ws = np.einsum("i,j,k->ijk", w, w, w).ravel()
    q = (v1 - v0) + t[:, None] * ((v2 - v1) + r[:, None] * (v3 - v2))
    pts = v0 + s[:, None] * q
    six_vol = float(np.linalg.det(np.array([v1 - v0, v2 - v0, v3 - v0])))
    if not signed:
        six_vol = abs(six_vol)
    return pts, ws * s * s * t * six_vol


class Region:
    """Base class; subclasses fill in ``_boundary``, ``_volume_rule`` and ``volume``."""

    boundary_resolution: int

    @cached_property
    def _samples(self) -> BoundarySamples:
        pts, nrm, wts = self._boundary()
        return BoundarySamples(_frozen(pts), _frozen(nrm), _frozen(wts))

    @cached_property
    def _vrule(self):
        pts, wts = self._volume_rule()
        return _frozen(pts), _frozen(wts)

    def boundary_samples(self) -> BoundarySamples:
        return self._samples

    def volume_rule(self):
        return self._vrule

    def volume(self) -> float:
        raise NotImplementedError

    @property
    def characteristic_length(self) -> float:
        raise NotImplementedError

    @property
    def fd_step(self) -> float:
        return FD_RELATIVE_STEP * self.characteristic_length

    def area(self) -> float:
        return self._samples.total_area

    def with_resolution(self, r: int) -> Region:
        raise NotImplementedError


def _check_resolution(r):
    if not isinstance(r, (int, np.integer)) or r < 1:
        raise GeometryError(f"boundary_resolution must be a positive integer, got {r!r}")


@dataclass(frozen=True, eq=False)
class Box(Region):
    lo: np.ndarray
    hi: np.ndarray
    boundary_resolution: int = 4

    def __post_init__(self):
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        if lo.shape != (3,) or hi.shape != (3,) or not np.all(lo < hi):
            raise GeometryError(f"box needs lo < hi componentwise, got {lo} and {hi}")
        _check_resolution(self.boundary_resolution)
        object.__setattr__(self, "lo", _frozen(lo))
        object.__setattr__(self, "hi", _frozen(hi))

    def _boundary(self):
        r = self.boundary_resolution
        pts, nrm, wts = [], [], []
        for k in range(3):
            i, j = [a for a in range(3) if a != k]
            pi, wi = _composite_gauss(self.lo[i], self.hi[i], r)
            pj, wj = _composite_gauss(self.lo[j], self.hi[j], r)
            gi, gj = (a.ravel() for a in np.meshgrid(pi, pj, indexing="ij"))
            gw = np.outer(wi, wj).ravel()
            for side, value in ((-1.0, self.lo[k]), (1.0, self.hi[k])):
                p = np.empty((len(gw), 3))
                p[:, i], p[:, j], p[:, k] = gi, gj, value
                n = np.zeros((len(gw), 3))
                n[:, k] = side
                pts.append(p)
                nrm.append(n)
                wts.append(gw)
        return np.concatenate(pts), np.concatenate(nrm), np.concatenate(wts)

    def _volume_rule(self):
        r = self.boundary_resolution
        axes = [_composite_gauss(self.lo[k], self.hi[k], r) for k in range(3)]
        grid = np.meshgrid(*(a[0] for a in axes), indexing="ij")
        pts = np.stack([g.ravel() for g in grid], axis=1)
        wts = np.einsum("i,j,k->ijk", *(a[1] for a in axes)).ravel()
        return pts, wts

    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    @property
    def characteristic_length(self) -> float:
        return float(np.max(self.hi - self.lo))

    def with_resolution(self, r):
        return Box(self.lo, self.hi, r)


@dataclass(frozen=True, eq=False)
class Ball(Region):
    center: np.ndarray
    radius: float
    boundary_resolution: int = 8

    def __post_init__(self):
        c = np.asarray(self.center, float)
        if c.shape != (3,) or not np.all(np.isfinite(c)):
            raise GeometryError(f"ball center must be 3 finite numbers, got {self.center!r}")
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise GeometryError(f"ball radius must be positive, got {self.radius}")
        _check_resolution(self.boundary_resolution)
        object.__setattr__(self, "center", _frozen(c))

    def _boundary(self):
        q = build_quadrature(self.boundary_resolution)
        R = self.radius
        return self.center + R * q.nodes, q.nodes.copy(), R * R * q.weights

    def _volume_rule(self):
        q = build_quadrature(self.boundary_resolution)
        x, w = _gauss01(2 * self.boundary_resolution)
        rad = self.radius * x
        wr = self.radius * w * rad * rad
        pts = self.center + (rad[:, None, None] * q.nodes[None, :, :]).reshape(-1, 3)
        return pts, np.outer(wr, q.weights).ravel()

    def volume(self) -> float:
        return 4.0 / 3.0 * math.pi * self.radius**3

    @property
    def characteristic_length(self) -> float:
        return 2.0 * self.radius

    def with_resolution(self, r):
        return Ball(self.center, self.radius, r)


@dataclass(frozen=True)
class Face:
    area: float
    normal: np.ndarray
    centroid: np.ndarray
    vertices: np.ndarray


@dataclass(frozen=True, eq=False)
class Tetrahedron(Region):
    vertices: np.ndarray
    boundary_resolution: int = 4

    def __post_init__(self):
        v = np.asarray(self.vertices, float)
        if v.shape != (4, 3) or not np.all(np.isfinite(v)):
            raise GeometryError("tetrahedron needs 4 finite vertices")
        _check_resolution(self.boundary_resolution)
        vol = abs(np.linalg.det(v[1:] - v[0])) / 6.0
        scale = np.max(np.ptp(v, axis=0))
        if not vol > 1e-14 * scale**3:
            raise GeometryError(f"degenerate tetrahedron (volume {vol})")
        object.__setattr__(self, "vertices", _frozen(v))

    @cached_property
    def faces(self) -> list[Face]:
        """Face ``i`` is the face opposite vertex ``i``."""
        out = []
        for i in range(4):
            tri = np.delete(self.vertices, i, axis=0)
            c = np.cross(tri[1] - tri[0], tri[2] - tri[0])
            if c @ (tri[0] - self.vertices[i]) < 0:
                tri = tri[[0, 2, 1]]
                c = -c
            a = float(np.linalg.norm(c))
            out.append(Face(0.5 * a, _frozen(c / a), _frozen(tri.mean(axis=0)), _frozen(tri)))
        return out

    def _boundary(self):
        n = self.boundary_resolution + 1
        pts, nrm, wts = [], [], []
        for f in self.faces:
            p, w = triangle_rule(f.vertices, n)
            w = w * (f.area / np.sum(w))
            pts.append(p)
            nrm.append(np.broadcast_to(f.normal, p.shape))
            wts.append(w)
        return np.concatenate(pts), np.concatenate(nrm), np.concatenate(wts)

    def _volume_rule(self):
        return tetra_rule(self.vertices, self.boundary_resolution + 1)

    def volume(self) -> float:
        v = self.vertices
        return abs(float(np.linalg.det(v[1:] - v[0]))) / 6.0

    @property
    def characteristic_length(self) -> float:
        v = self.vertices
        return float(max(np.linalg.norm(v[i] - v[j]) for i in range(4) for j in range(i)))

    def with_resolution(self, r):
        return Tetrahedron(self.vertices, r)


@dataclass(frozen=True, eq=False)
class CauchyTetrahedron(Tetrahedron):
    """Tetrahedron with one slant face of prescribed outward normal.

    Vertex 0 is the trihedron apex, so face 0 is the slant face and face
    ``i`` (i = 1, 2, 3) lies in the plane orthogonal to ``frame[:, i - 1]``.
    Face normals are the exact analytic ones rather than cross products.
    """

    normal: np.ndarray = None
    frame: np.ndarray = None

    @cached_property
    def faces(self) -> list[Face]:
        raw = Tetrahedron.faces.func(self)
        m = self.frame.T @ self.normal
        a0 = raw[0].area
        out = [Face(a0, self.normal, raw[0].centroid, raw[0].vertices)]
        for i in range(3):
            n = -math.copysign(1.0, m[i]) * self.frame[:, i]
            out.append(Face(a0 * abs(m[i]), _frozen(n), raw[i + 1].centroid, raw[i + 1].vertices))
        return out

    def face_areas(self) -> np.ndarray:
        return np.array([f.area for f in self.faces])

    def face_normals(self) -> np.ndarray:
        return np.array([f.normal for f in self.faces])

    def face_centroids(self) -> np.ndarray:
        return np.array([f.centroid for f in self.faces])

    def with_resolution(self, r):
        return CauchyTetrahedron(self.vertices, r, self.normal, self.frame)


def _candidate_frames() -> list[np.ndarray]:
    # Fixed frames tried when the normal is (nearly) axis aligned; the first
    # one sees e3 as (1, 1, 1)/sqrt(3).
    R = rotation_to(np.array([1.0, 1.0, 1.0]) / math.sqrt(3.0))
    out = []
    for ang in (0.0, 0.5, 1.1):
        c, s = math.cos(ang), math.sin(ang)
        rz = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        out.append((R @ rz).T)
    return out


AXIS_ALIGNED_THRESHOLD = 1e-2


def make_tetrahedron(x, h: float, normal, resolution: int = 2) -> CauchyTetrahedron:
    """Tetrahedron of size ``h`` centred at ``x`` with slant-face normal ``normal``.

    The other three faces are orthogonal to the axes of a trihedron frame:
    the coordinate frame when every component of ``normal`` exceeds 1e-2
    in magnitude, otherwise the best of a fixed list of rotated frames.
    """
    if not (isinstance(h, (int, float)) and h > 0 and math.isfinite(h)):
        raise InvalidArgumentError(f"tetrahedron size must be positive, got {h!r}")
    n = as_direction(normal)
    x = np.asarray(x, dtype=float)
    frame = np.eye(3)
    if np.min(np.abs(n)) < AXIS_ALIGNED_THRESHOLD:
        frame = max(_candidate_frames(), key=lambda F: np.min(np.abs(F.T @ n)))
    m = frame.T @ n
    apex = np.zeros(3)
    verts = [apex] + [apex + (h / m[i]) * frame[:, i] for i in range(3)]
    verts = np.array(verts)
    verts = verts - verts.mean(axis=0) + x
    return CauchyTetrahedron(verts, resolution, n, _frozen(frame))


@dataclass(frozen=True, eq=False)
class TriangleMesh(Region):
    """Closed, outward-oriented triangle soup, ``triangles`` of shape ``(T, 3, 3)``."""

    triangles: np.ndarray
    boundary_resolution: int = 2

    def __post_init__(self):
        tri = np.asarray(self.triangles, float)
        if tri.ndim != 3 or tri.shape[1:] != (3, 3) or len(tri) < 4:
            raise GeometryError("mesh needs at least 4 triangles of shape (3, 3)")
        if not np.all(np.isfinite(tri)):
            raise GeometryError("mesh coordinates must be finite")
        _check_resolution(self.boundary_resolution)
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        areas = 0.5 * np.linalg.norm(cross, axis=1)
        if np.any(areas <= 0):
            raise GeometryError(f"degenerate triangle at index {int(np.argmin(areas))}")
        _check_watertight(tri)
        total = float(np.sum(areas))
        if np.linalg.norm(0.5 * cross.sum(axis=0)) > 1e-9 * total:
            raise GeometryError("mesh is not closed: area-weighted normals do not cancel")
        object.__setattr__(self, "triangles", _frozen(tri))
        if self.volume() <= 0:
            raise GeometryError("mesh is inward oriented (negative enclosed volume)")

    @classmethod
    def from_file(cls, path, boundary_resolution: int = 2) -> TriangleMesh:
        """Read the ASCII triangle-soup format: 9 floats per line, ``#`` comments."""
        rows = []
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            try:
                vals = [float(p) for p in parts]
            except ValueError:
                raise GeometryError(f"{path}:{lineno}: non-numeric triangle entry") from None
            if len(vals) != 9:
                raise GeometryError(f"{path}:{lineno}: expected 9 floats, got {len(vals)}")
            rows.append(vals)
        return cls(np.array(rows).reshape(-1, 3, 3), boundary_resolution)

    @cached_property
    def _normals_areas(self):
        tri = self.triangles
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        norms = np.linalg.norm(cross, axis=1)
        return cross / norms[:, None], 0.5 * norms

    def _boundary(self):
        normals, _ = self._normals_areas
        n = self.boundary_resolution + 1
        pts, nrm, wts = [], [], []
        for t, nv in zip(self.triangles, normals):
            p, w = triangle_rule(t, n)
            pts.append(p)
            nrm.append(np.broadcast_to(nv, p.shape))
            wts.append(w)
        return np.concatenate(pts), np.concatenate(nrm), np.concatenate(wts)

    def _volume_rule(self):
        apex = self.triangles.reshape(-1, 3).mean(axis=0)
        n = self.boundary_resolution + 1
        pts, wts = [], []
        for t in self.triangles:
            p, w = tetra_rule(np.vstack([apex, t]), n, signed=True)
            pts.append(p)
            wts.append(w)
        return np.concatenate(pts), np.concatenate(wts)

    def volume(self) -> float:
        # divergence theorem with x/3; exact per flat triangle at its centroid
        normals, areas = self._normals_areas
        centroids = self.triangles.mean(axis=1)
        return float(np.sum(np.sum(centroids * normals, axis=1) * areas) / 3.0)

    @property
    def characteristic_length(self) -> float:
        pts = self.triangles.reshape(-1, 3)
        return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))

    def with_resolution(self, r):
        return TriangleMesh(self.triangles, r)


def _check_watertight(tri: np.ndarray):
    edges: dict[tuple, int] = {}
    for t in tri:
        keys = [tuple(v) for v in t]
        for a, b in ((0, 1), (1, 2), (2, 0)):
            e = (keys[a], keys[b])
            edges[e] = edges.get(e, 0) + 1
    for (a, b), count in edges.items():
        if count != 1 or edges.get((b, a), 0) != 1:
            raise GeometryError(f"mesh is not watertight/consistently oriented at edge {a} -> {b}")


def boundary_samples(region: Region) -> BoundarySamples:
    return region.boundary_samples()


def volume(region: Region) -> float:
    return region.volume()


def _eval_points(g, pts, what):
    vals = np.asarray(g(pts), dtype=float)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = int(np.flatnonzero(bad.reshape(len(pts), -1).any(axis=1))[0])
        raise EvaluationError(f"{what} is not finite at {pts[i].tolist()}", where=pts[i].copy())
    return vals


def volume_integrate(region: Region, g: Callable[[np.ndarray], np.ndarray]) -> float:
    """``int_R g dV``; ``g`` maps ``(N, 3)`` points to ``(N,)`` values."""
    pts, wts = region.volume_rule()
    vals = np.broadcast_to(_eval_points(g, pts, "volume integrand"), wts.shape)
    return float(np.sum(wts * vals))


def fd_divergence(field, pts: np.ndarray, h: float) -> np.ndarray:
    div = np.zeros(len(pts))
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        fp = _eval_points(field, pts + e, "vector field")[:, k]
        fm = _eval_points(field, pts - e, "vector field")[:, k]
        div += (fp - fm) / (2.0 * h)
    return div


def boundary_flux(region: Region, field) -> float:
    s = region.boundary_samples()
    F = _eval_points(field, s.points, "vector field")
    return float(np.sum(s.weights * np.sum(F * s.normals, axis=1)))


def gauss_residual(region: Region, field, h_fd: float | None = None, parts: bool = False):
    """``|int_dR F.n dA - int_R div F dV|`` with a central-difference divergence.

    ``field`` maps ``(N, 3)`` points to ``(N, 3)`` vectors. With
    ``parts=True`` returns ``(residual, boundary_side, volume_side)``.
    """
    h = region.fd_step if h_fd is None else h_fd
    surf = boundary_flux(region, field)
    vol = volume_integrate(region, lambda p: fd_divergence(field, p, h))
    res = abs(surf - vol)
    return (res, surf, vol) if parts else res
