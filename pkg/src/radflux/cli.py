"""Command-line front end.

    radflux irradiance --scene S --field F --point X --normal N [--subset D]
    radflux power --scene S --field F --region R [--direction U]
    radflux flux-vector --scene S (--field F | --tensor T) --point X
    radflux total-distribution --scene S --tensor T --region R [--subset D]
    radflux verify {cauchy,balance,ray,radiation-assumption,virtual-power,boundedness} ...

Vectors are comma separated (``--point=-1,0,0`` for a leading minus).
Subsets are ``full``, ``hemisphere:AXIS`` or ``cap:AXIS:HALF_ANGLE``.
Reports go to stdout as JSON (``--csv`` for a flat key,value table).
Exit codes: 0 success or pass, 1 verification failure, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .balance import (
    CauchyMap,
    boundedness_constant,
    differential_balance_residual,
    integral_balance_residual,
    ray_conservation_residual,
    tetrahedron_residual,
    virtual_power_sides,
)
from .errors import RadfluxError
from .measure_radiance import (
    direct_total_power,
    energy_flux_vector_measure,
    total_distribution,
    total_power_from_distribution,
    verify_radiation_assumption,
)
from .measures import measure_of, norm
from .radiance import (
    directional_power,
    energy_flux_vector,
    irradiance,
    total_power,
)
from .scene import Scene, digest, load_scene
from .sphere import SphereSubset, as_direction

# default tolerances, one per verifier
TOL_CAUCHY = 1e-12
TOL_BALANCE = 1e-8
TOL_DIFFERENTIAL = 1e-6
TOL_RAY = 1e-6
TOL_RAY_ENDPOINT = 1e-9
TOL_ASSUMPTION = 1e-9
TOL_VIRTUAL = 1e-6
TOL_BOUNDEDNESS = 1e-9


class InputError(Exception):
    pass


def _vector(text: str) -> np.ndarray:
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated vector: {text!r}") from None
    if len(vals) != 3 or not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError(f"expected 3 finite components: {text!r}")
    return np.array(vals)


def parse_subset(text: str | None) -> SphereSubset:
    if text is None or text == "full":
        return SphereSubset.full()
    parts = text.split(":")
    try:
        if parts[0] == "hemisphere" and len(parts) == 2:
            return SphereSubset.hemisphere(_vector(parts[1]))
        if parts[0] == "cap" and len(parts) == 3:
            return SphereSubset.cap(_vector(parts[1]), float(parts[2]))
    except (argparse.ArgumentTypeError, ValueError, RadfluxError) as exc:
        raise InputError(f"bad subset {text!r}: {exc}") from None
    raise InputError(f"bad subset {text!r}: use full, hemisphere:AXIS or cap:AXIS:ANGLE")


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


def _flatten(prefix, v, rows):
    if isinstance(v, dict):
        for k in sorted(v):
            _flatten(f"{prefix}.{k}" if prefix else k, v[k], rows)
    elif isinstance(v, list):
        for i, x in enumerate(v):
            _flatten(f"{prefix}[{i}]", x, rows)
    else:
        rows.append((prefix, v))


def render(report: dict, csv: bool) -> str:
    if not csv:
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    rows: list = []
    _flatten("", report, rows)
    return "key,value\n" + "".join(f"{k},{json.dumps(v)}\n" for k, v in rows)


def _direction(v):
    try:
        return as_direction(v)
    except RadfluxError as exc:
        raise InputError(str(exc)) from None


# commands ------------------------------------------------------------------


def cmd_irradiance(scene: Scene, a):
    field = scene.field(a.field)
    D = parse_subset(a.subset)
    n = _direction(a.normal)
    value = irradiance(field, a.point, n, scene.quad, D)
    return {"irradiance": value, "subset": a.subset or "full"}, None


def cmd_power(scene: Scene, a):
    field, region = scene.field(a.field), scene.region(a.region)
    if a.direction is not None:
        return {"directional_power": directional_power(field, region, _direction(a.direction))}, None
    return {"total_power": total_power(field, region, scene.quad)}, None


def cmd_flux_vector(scene: Scene, a):
    if a.tensor is not None:
        return {"energy_flux_vector": energy_flux_vector_measure(scene.tensor(a.tensor), a.point)}, None
    return {"energy_flux_vector": energy_flux_vector(scene.field(a.field), a.point, scene.quad)}, None


def cmd_total_distribution(scene: Scene, a):
    T, region = scene.tensor(a.tensor), scene.region(a.region)
    phi = total_distribution(T, region)
    m = phi.measure
    out = {
        "atoms": [{"direction": d, "weight": w} for d, w in zip(m.atom_dirs, m.atom_weights)],
        "density_norm": norm(m) - float(np.sum(np.abs(m.atom_weights))),
        "norm": norm(m),
        "total_power": total_power_from_distribution(phi),
        "direct_total_power": direct_total_power(T, region),
    }
    if a.subset is not None:
        out["subset"] = a.subset
        out["measure_of_subset"] = measure_of(m, parse_subset(a.subset))
    return out, None


def cmd_verify_cauchy(scene: Scene, a):
    if a.tensor is not None:
        cmap = CauchyMap.from_tensor(scene.tensor(a.tensor))
    else:
        cmap = CauchyMap.from_irradiance(scene.field(a.field), scene.quad)
    r = tetrahedron_residual(cmap, a.point, _direction(a.normal), a.h)
    return {"tetrahedron_residual": r, "h": a.h, "tol": a.tol}, r <= a.tol


def cmd_verify_balance(scene: Scene, a):
    field, data = scene.field(a.field), scene.balance(a.data)
    region, u = scene.region(a.region), _direction(a.direction)
    r = integral_balance_residual(field, data, region, u)
    out = {"integral_balance_residual": r, "tol": a.tol}
    ok = r <= a.tol
    if a.point is not None:
        d = differential_balance_residual(field, data, a.point, u)
        out["differential_balance_residual"] = d
        out["differential_tol"] = a.differential_tol
        ok = ok and d <= a.differential_tol
    return out, ok


def cmd_verify_ray(scene: Scene, a):
    res = ray_conservation_residual(
        scene.field(a.field), _direction(a.direction), (a.start, a.end), a.samples
    )
    out = {
        "ray_residual": res.residual,
        "endpoint_difference": res.endpoint_difference,
        "tol": a.tol,
        "endpoint_tol": a.endpoint_tol,
    }
    return out, res.residual <= a.tol and res.endpoint_difference <= a.endpoint_tol


def cmd_verify_assumption(scene: Scene, a):
    rep = verify_radiation_assumption(scene.tensor(a.tensor), a.point, a.tol)
    out = rep.as_dict()
    out["tol"] = a.tol
    return out, rep.passed


def cmd_verify_virtual(scene: Scene, a):
    lhs, rhs = virtual_power_sides(
        scene.field(a.field),
        scene.balance(a.data),
        scene.region(a.region),
        _direction(a.direction),
        scene.meter(a.meter),
    )
    r = abs(lhs - rhs)
    return {"lhs": lhs, "rhs": rhs, "virtual_power_residual": r, "tol": a.tol}, r <= a.tol


def cmd_verify_boundedness(scene: Scene, a):
    field, region, u = scene.field(a.field), scene.region(a.region), _direction(a.direction)
    b = boundedness_constant(field, u, region, a.tol)
    P = directional_power(field, region, u)
    out = {"constant": b.constant, "directional_power": P, "volume": region.volume(), "tol": a.tol}
    return out, b.verified


# parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="radflux", description="Flux-theoretic radiometry toolkit.")
    p.add_argument("--version", action="version", version=f"radflux {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def base(parser):
        parser.add_argument("--scene", required=True, help="scene JSON file")
        parser.add_argument("--csv", action="store_true", help="emit key,value rows instead of JSON")
        return parser

    s = base(sub.add_parser("irradiance", help="irradiance at a point through a normal"))
    s.add_argument("--field", required=True)
    s.add_argument("--point", type=_vector, required=True)
    s.add_argument("--normal", type=_vector, required=True)
    s.add_argument("--subset")
    s.set_defaults(run=cmd_irradiance)

    s = base(sub.add_parser("power", help="directional or total power out of a region"))
    s.add_argument("--field", required=True)
    s.add_argument("--region", required=True)
    s.add_argument("--direction", type=_vector)
    s.set_defaults(run=cmd_power)

    s = base(sub.add_parser("flux-vector", help="energy flux vector at a point"))
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--field")
    g.add_argument("--tensor")
    s.add_argument("--point", type=_vector, required=True)
    s.set_defaults(run=cmd_flux_vector)

    s = base(sub.add_parser("total-distribution", help="directional distribution of a region's output"))
    s.add_argument("--tensor", required=True)
    s.add_argument("--region", required=True)
    s.add_argument("--subset")
    s.set_defaults(run=cmd_total_distribution)

    v = sub.add_parser("verify", help="run a verifier; exit 1 on failure").add_subparsers(
        dest="check", required=True
    )

    s = base(v.add_parser("cauchy", help="tetrahedron linearity of the flux in the normal"))
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--field")
    g.add_argument("--tensor")
    s.add_argument("--point", type=_vector, required=True)
    s.add_argument("--normal", type=_vector, required=True)
    s.add_argument("--h", type=float, default=1.0)
    s.add_argument("--tol", type=float, default=TOL_CAUCHY)
    s.set_defaults(run=cmd_verify_cauchy)

    s = base(v.add_parser("balance", help="integral (and optionally differential) balance"))
    s.add_argument("--field", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--region", required=True)
    s.add_argument("--direction", type=_vector, required=True)
    s.add_argument("--point", type=_vector)
    s.add_argument("--tol", type=float, default=TOL_BALANCE)
    s.add_argument("--differential-tol", type=float, default=TOL_DIFFERENTIAL)
    s.set_defaults(run=cmd_verify_balance)

    s = base(v.add_parser("ray", help="conservation of radiance along a ray"))
    s.add_argument("--field", required=True)
    s.add_argument("--direction", type=_vector, required=True)
    s.add_argument("--start", type=_vector, required=True)
    s.add_argument("--end", type=_vector, required=True)
    s.add_argument("--samples", type=int, default=100)
    s.add_argument("--tol", type=float, default=TOL_RAY)
    s.add_argument("--endpoint-tol", type=float, default=TOL_RAY_ENDPOINT)
    s.set_defaults(run=cmd_verify_ray)

    s = base(v.add_parser("radiation-assumption", help="unit field of the tensor is the identity"))
    s.add_argument("--tensor", required=True)
    s.add_argument("--point", type=_vector, required=True)
    s.add_argument("--tol", type=float, default=TOL_ASSUMPTION)
    s.set_defaults(run=cmd_verify_assumption)

    s = base(v.add_parser("virtual-power", help="weak form of the directional balance"))
    s.add_argument("--field", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--region", required=True)
    s.add_argument("--direction", type=_vector, required=True)
    s.add_argument("--meter", required=True)
    s.add_argument("--tol", type=float, default=TOL_VIRTUAL)
    s.set_defaults(run=cmd_verify_virtual)

    s = base(v.add_parser("boundedness", help="|P| <= C |R| for the directional power"))
    s.add_argument("--field", required=True)
    s.add_argument("--region", required=True)
    s.add_argument("--direction", type=_vector, required=True)
    s.add_argument("--tol", type=float, default=TOL_BOUNDEDNESS, help="additive slack")
    s.set_defaults(run=cmd_verify_boundedness)
    return p


def run(argv: list[str]) -> tuple[str, int]:
    """Run one command; returns ``(stdout_text, exit_code)``.

    Errors produce no stdout text; the diagnostic goes to stderr.
    """
    args = build_parser().parse_args(argv)
    try:
        scene = load_scene(args.scene)
        results, ok = args.run(scene, args)
    except (RadfluxError, InputError) as exc:
        print(f"radflux: error: {exc}", file=sys.stderr)
        return "", 2
    report = {
        "tool": "radflux",
        "tool_version": __version__,
        "command": list(argv),
        "inputs_digest": digest(scene),
        "results": _jsonable(results),
    }
    if ok is not None:
        report["pass"] = bool(ok)
    return render(report, args.csv), 0 if ok in (None, True) else 1


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        text, code = run(argv)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code or 0)
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
