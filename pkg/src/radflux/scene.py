"""Scene files: named regions, radiance fields, tensors, balance data and meters.

A scene is a JSON object::

    {
      "schema_version": 1,
      "quadrature_level": 8,
      "regions": {"cube": {"kind": "box", "min": [0,0,0], "max": [1,1,1]}},
      "fields":  {"lin": {"kind": "linear", "c": 0, "a": [1,0,0]}},
      "tensors": {"beam": {"kind": "conforming_atoms",
                           "atoms": [{"direction": [0,0,1],
                                      "weight": {"c": 0, "a": [0,0,1]}}]}},
      "balance": {"lin_ok": {"kind": "analytic_consistent", "field": "lin"}},
      "meters":  {"w": {"c": 0, "a": [1,0,0]}}
    }

Every section except ``schema_version`` is optional. ``parse_scene`` fills
in defaults, so ``to_json(parse_scene(text))`` is a canonical form and
parsing it again gives an identical scene. The kinds accepted by each
section are listed in ``README.md``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from dataclasses import field as dc_field
from pathlib import Path

import numpy as np

from .balance import BalanceData
from .errors import RadfluxError
from .measure_radiance import RadianceTensor
from .measures import SphereMeasure
from .radiance import ScalarRadianceField, exp_profile, gaussian_profile
from .regions import Ball, Box, Region, Tetrahedron, TriangleMesh
from .sphere import DEFAULT_LEVEL, SphericalQuadrature, build_quadrature

SCHEMA_VERSION = 1
SECTIONS = ("regions", "fields", "tensors", "balance", "meters")


class SceneError(RadfluxError, ValueError):
    """Malformed scene; the message names the offending location."""


def _fail(path, msg):
    raise SceneError(f"{path}: {msg}")


def _num(v, path):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        _fail(path, f"expected a finite number, got {v!r}")
    return float(v)


def _vec(v, path, n=3):
    if not isinstance(v, list) or len(v) != n:
        _fail(path, f"expected a list of {n} numbers, got {v!r}")
    return [_num(x, f"{path}[{i}]") for i, x in enumerate(v)]


def _int(v, path, lo=1):
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        _fail(path, f"expected an integer >= {lo}, got {v!r}")
    return v


def _obj(v, path):
    if not isinstance(v, dict):
        _fail(path, f"expected an object, got {type(v).__name__}")
    return v


def _keys(spec, path, required, optional=()):
    for k in required:
        if k not in spec:
            _fail(path, f"missing key {k!r}")
    extra = set(spec) - set(required) - set(optional) - {"kind"}
    if extra:
        _fail(path, f"unknown key(s) {sorted(extra)}")


def _affine(v, path):
    v = _obj(v, path)
    _keys(v, path, (), ("c", "a"))
    return {"c": _num(v.get("c", 0.0), f"{path}.c"), "a": _vec(v.get("a", [0, 0, 0]), f"{path}.a")}


def _norm_region(spec, path):
    spec = _obj(spec, path)
    kind = spec.get("kind")
    if kind == "box":
        _keys(spec, path, ("min", "max"), ("resolution",))
        out = {"kind": kind, "min": _vec(spec["min"], f"{path}.min"), "max": _vec(spec["max"], f"{path}.max")}
        out["resolution"] = _int(spec.get("resolution", 4), f"{path}.resolution")
    elif kind == "ball":
        _keys(spec, path, ("radius",), ("center", "resolution"))
        out = {
            "kind": kind,
            "center": _vec(spec.get("center", [0, 0, 0]), f"{path}.center"),
            "radius": _num(spec["radius"], f"{path}.radius"),
            "resolution": _int(spec.get("resolution", 8), f"{path}.resolution"),
        }
    elif kind == "tetrahedron":
        _keys(spec, path, ("vertices",), ("resolution",))
        vs = spec["vertices"]
        if not isinstance(vs, list) or len(vs) != 4:
            _fail(f"{path}.vertices", "expected 4 vertices")
        out = {
            "kind": kind,
            "vertices": [_vec(v, f"{path}.vertices[{i}]") for i, v in enumerate(vs)],
            "resolution": _int(spec.get("resolution", 4), f"{path}.resolution"),
        }
    elif kind == "mesh":
        _keys(spec, path, ("path",), ("resolution",))
        if not isinstance(spec["path"], str):
            _fail(f"{path}.path", "expected a file path string")
        out = {"kind": kind, "path": spec["path"], "resolution": _int(spec.get("resolution", 2), f"{path}.resolution")}
    else:
        _fail(f"{path}.kind", f"unknown region kind {kind!r} (box, ball, tetrahedron, mesh)")
    return out


def _norm_profile(spec, path):
    spec = _obj(spec, path)
    kind = spec.get("kind")
    if kind == "exp":
        _keys(spec, path, ("rate",), ("amplitude",))
        return {"kind": kind, "amplitude": _num(spec.get("amplitude", 1.0), f"{path}.amplitude"),
                "rate": _vec(spec["rate"], f"{path}.rate")}
    if kind == "gaussian":
        _keys(spec, path, ("sigma",), ("amplitude", "center"))
        return {"kind": kind, "amplitude": _num(spec.get("amplitude", 1.0), f"{path}.amplitude"),
                "center": _vec(spec.get("center", [0, 0, 0]), f"{path}.center"),
                "sigma": _num(spec["sigma"], f"{path}.sigma")}
    _fail(f"{path}.kind", f"unknown profile kind {kind!r} (exp, gaussian)")


def _norm_field(spec, path):
    spec = _obj(spec, path)
    kind = spec.get("kind")
    if kind == "isotropic":
        _keys(spec, path, ("i0",))
        return {"kind": kind, "i0": _num(spec["i0"], f"{path}.i0")}
    if kind == "linear":
        _keys(spec, path, ("a",), ("c",))
        return {"kind": kind, "c": _num(spec.get("c", 0.0), f"{path}.c"), "a": _vec(spec["a"], f"{path}.a")}
    if kind == "transported":
        _keys(spec, path, ("direction", "profile"))
        return {"kind": kind, "direction": _vec(spec["direction"], f"{path}.direction"),
                "profile": _norm_profile(spec["profile"], f"{path}.profile")}
    if kind == "lambert_surface":
        _keys(spec, path, ("i0", "axis"))
        return {"kind": kind, "i0": _num(spec["i0"], f"{path}.i0"), "axis": _vec(spec["axis"], f"{path}.axis")}
    _fail(f"{path}.kind", f"unknown field kind {kind!r} (isotropic, linear, transported, lambert_surface)")


def _norm_atoms(v, path):
    if not isinstance(v, list):
        _fail(path, "expected a list of atoms")
    out = []
    for i, a in enumerate(v):
        p = f"{path}[{i}]"
        a = _obj(a, p)
        _keys(a, p, ("direction", "weight"))
        out.append({"direction": _vec(a["direction"], f"{p}.direction"), "weight": _affine(a["weight"], f"{p}.weight")})
    return out


def _norm_tensor(spec, path):
    spec = _obj(spec, path)
    kind = spec.get("kind")
    if kind == "conforming_atoms":
        _keys(spec, path, ("atoms",))
        return {"kind": kind, "atoms": _norm_atoms(spec["atoms"], f"{path}.atoms")}
    if kind == "conforming_density":
        _keys(spec, path, ("field",), ("atoms",))
        return {"kind": kind, "field": spec["field"], "atoms": _norm_atoms(spec.get("atoms", []), f"{path}.atoms")}
    if kind == "general":
        _keys(spec, path, ("matrix",), ("field", "atoms"))
        m = spec["matrix"]
        if not isinstance(m, list) or len(m) != 3:
            _fail(f"{path}.matrix", "expected a 3x3 matrix")
        return {"kind": kind, "field": spec.get("field"),
                "atoms": _norm_atoms(spec.get("atoms", []), f"{path}.atoms"),
                "matrix": [_vec(r, f"{path}.matrix[{i}]") for i, r in enumerate(m)]}
    _fail(f"{path}.kind", f"unknown tensor kind {kind!r} (conforming_atoms, conforming_density, general)")


def _norm_balance(spec, path):
    spec = _obj(spec, path)
    kind = spec.get("kind")
    if kind == "zero":
        _keys(spec, path, ())
        return {"kind": kind}
    if kind == "analytic_consistent":
        _keys(spec, path, ("field",))
        return {"kind": kind, "field": spec["field"]}
    if kind == "explicit":
        _keys(spec, path, (), ("rho_dot", "source"))
        return {"kind": kind, "rho_dot": _affine(spec.get("rho_dot", {}), f"{path}.rho_dot"),
                "source": _affine(spec.get("source", {}), f"{path}.source")}
    _fail(f"{path}.kind", f"unknown balance kind {kind!r} (zero, analytic_consistent, explicit)")


_NORMALIZERS = {
    "regions": _norm_region,
    "fields": _norm_field,
    "tensors": _norm_tensor,
    "balance": _norm_balance,
    "meters": _affine,
}


def normalize(raw: dict) -> dict:
    raw = _obj(raw, "scene")
    extra = set(raw) - set(SECTIONS) - {"schema_version", "quadrature_level"}
    if extra:
        _fail("scene", f"unknown top-level key(s) {sorted(extra)}")
    if raw.get("schema_version") != SCHEMA_VERSION:
        _fail("scene.schema_version", f"expected {SCHEMA_VERSION}, got {raw.get('schema_version')!r}")
    out = {
        "schema_version": SCHEMA_VERSION,
        "quadrature_level": _int(raw.get("quadrature_level", DEFAULT_LEVEL), "scene.quadrature_level"),
    }
    seen: dict[str, str] = {}
    for sec in SECTIONS:
        entries = _obj(raw.get(sec, {}), sec)
        out[sec] = {}
        for name, spec in entries.items():
            if name in seen:
                _fail(f"{sec}.{name}", f"name already used in {seen[name]}")
            seen[name] = sec
            out[sec][name] = _NORMALIZERS[sec](spec, f"{sec}.{name}")
    for name, t in out["tensors"].items():
        ref = t.get("field")
        if ref is not None and ref not in out["fields"]:
            _fail(f"tensors.{name}.field", f"unknown field {ref!r}")
        if t["kind"] == "general" and ref is None and not t["atoms"]:
            _fail(f"tensors.{name}", "general tensor needs a field or atoms")
    for name, b in out["balance"].items():
        if b["kind"] == "analytic_consistent" and b["field"] not in out["fields"]:
            _fail(f"balance.{name}.field", f"unknown field {b['field']!r}")
    return out


@dataclass
class Scene:
    spec: dict
    base_dir: Path = dc_field(default_factory=Path)
    _cache: dict = dc_field(default_factory=dict, repr=False, compare=False)

    def __eq__(self, other):
        return isinstance(other, Scene) and self.spec == other.spec

    @property
    def quad(self) -> SphericalQuadrature:
        return build_quadrature(self.spec["quadrature_level"])

    def _lookup(self, section, name, what):
        if name not in self.spec[section]:
            known = ", ".join(sorted(self.spec[section])) or "none"
            raise SceneError(f"unknown {what} {name!r} (defined: {known})")
        key = (section, name)
        if key not in self._cache:
            self._cache[key] = getattr(self, f"_build_{section}")(self.spec[section][name], f"{section}.{name}")
        return self._cache[key]

    def region(self, name) -> Region:
        return self._lookup("regions", name, "region")

    def field(self, name) -> ScalarRadianceField:
        return self._lookup("fields", name, "field")

    def tensor(self, name) -> RadianceTensor:
        return self._lookup("tensors", name, "tensor")

    def balance(self, name) -> BalanceData:
        return self._lookup("balance", name, "balance data")

    def meter(self, name):
        return self._lookup("meters", name, "meter")

    def mesh_files(self) -> list[Path]:
        return [self.base_dir / r["path"] for r in self.spec["regions"].values() if r["kind"] == "mesh"]

    # builders -----------------------------------------------------------

    def _build_regions(self, s, path):
        try:
            if s["kind"] == "box":
                return Box(s["min"], s["max"], s["resolution"])
            if s["kind"] == "ball":
                return Ball(s["center"], s["radius"], s["resolution"])
            if s["kind"] == "tetrahedron":
                return Tetrahedron(np.array(s["vertices"]), s["resolution"])
            return TriangleMesh.from_file(self.base_dir / s["path"], s["resolution"])
        except (RadfluxError, OSError) as exc:
            raise SceneError(f"{path}: {exc}") from None

    def _build_fields(self, s, path):
        try:
            k = s["kind"]
            if k == "isotropic":
                return ScalarRadianceField.isotropic(s["i0"])
            if k == "linear":
                return ScalarRadianceField.linear(s["c"], s["a"])
            if k == "lambert_surface":
                return ScalarRadianceField.lambert_surface(s["i0"], s["axis"])
            p = s["profile"]
            if p["kind"] == "exp":
                prof = exp_profile(p["amplitude"], p["rate"])
            else:
                prof = gaussian_profile(p["amplitude"], p["center"], p["sigma"])
            return ScalarRadianceField.transported(s["direction"], *prof, params={"profile": p})
        except RadfluxError as exc:
            raise SceneError(f"{path}: {exc}") from None

    def _atoms(self, atoms):
        out = []
        for a in atoms:
            c, v = a["weight"]["c"], np.array(a["weight"]["a"])
            out.append((np.array(a["direction"]), lambda x, c=c, v=v: c + float(x @ v)))
        return out

    def _build_tensors(self, s, path):
        quad = self.quad
        try:
            atoms = self._atoms(s["atoms"])
            if s["kind"] == "conforming_atoms":
                dirs = [d for d, _ in atoms]
                return RadianceTensor.conforming_from_atoms(
                    quad, dirs, lambda x: np.array([w(x) for _, w in atoms])
                )
            dens = self.field(s["field"]).eval if s.get("field") else (lambda x, u: np.zeros(len(u)))
            if s["kind"] == "conforming_density":
                return RadianceTensor.conforming_from_density(quad, dens, atoms)

            def mu(x):
                return SphereMeasure(
                    quad,
                    np.broadcast_to(np.asarray(dens(x, quad.nodes), float), (quad.size,)),
                    np.reshape([d for d, _ in atoms], (-1, 3)),
                    [w(x) for _, w in atoms],
                )

            return RadianceTensor.mapped(quad, mu, s["matrix"])
        except RadfluxError as exc:
            raise SceneError(f"{path}: {exc}") from None

    def _build_balance(self, s, path):
        if s["kind"] == "zero":
            return BalanceData.zero()
        if s["kind"] == "analytic_consistent":
            return BalanceData.consistent(self.field(s["field"]))
        r, q = s["rho_dot"], s["source"]
        return BalanceData.affine(r["c"], r["a"], q["c"], q["a"])

    def _build_meters(self, s, path):
        c, a = s["c"], np.array(s["a"])
        return lambda p: c + np.asarray(p) @ a


def parse_scene(text: str, base_dir=".") -> Scene:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return Scene(normalize(raw), Path(base_dir))


def load_scene(path) -> Scene:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SceneError(f"cannot read scene {path}: {exc.strerror}") from None
    try:
        return parse_scene(text, path.parent)
    except SceneError as exc:
        raise SceneError(f"{path}: {exc}") from None


def to_json(scene: Scene) -> str:
    return json.dumps(scene.spec, sort_keys=True, indent=2) + "\n"


def digest(scene: Scene) -> str:
    """SHA-256 over the canonical scene and the bytes of referenced mesh files."""
    h = hashlib.sha256(to_json(scene).encode())
    for p in scene.mesh_files():
        try:
            h.update(p.read_bytes())
        except OSError:
            pass
    return h.hexdigest()

