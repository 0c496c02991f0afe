import json
import math
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from radflux.balance import (
    boundedness_constant,
    integral_balance_residual,
    ray_conservation_residual,
    tetrahedron_residual,
    virtual_power_residual,
)
from radflux.cli import TOL_BALANCE, TOL_CAUCHY, TOL_VIRTUAL, main, run
from radflux.measure_radiance import verify_radiation_assumption
from radflux.scene import SceneError, digest, load_scene, parse_scene, to_json

ROOT = Path(__file__).resolve().parents[1]
REFERENCE = ROOT / "scenes" / "reference.json"
S = str(REFERENCE)


def report(argv):
    text, code = run(argv)
    return (json.loads(text) if text else None), code


@pytest.fixture
def scene_dir(tmp_path):
    shutil.copy(REFERENCE, tmp_path / "scene.json")
    shutil.copy(ROOT / "scenes" / "unit_cube.tri", tmp_path / "unit_cube.tri")
    return tmp_path


def write_scene(directory, spec):
    path = directory / "scene.json"
    path.write_text(json.dumps(spec, indent=2))
    return str(path)


# scene files ----------------------------------------------------------------


def test_round_trip():
    scene = load_scene(REFERENCE)
    again = parse_scene(to_json(scene), REFERENCE.parent)
    assert again == scene
    assert to_json(again) == to_json(scene)


def test_defaults_are_filled_in():
    s = parse_scene('{"schema_version": 1, "regions": {"b": {"kind": "ball", "radius": 2}}}')
    assert s.spec["quadrature_level"] == 8
    assert s.spec["regions"]["b"] == {"kind": "ball", "center": [0.0, 0.0, 0.0], "radius": 2.0, "resolution": 8}
    assert s.spec["fields"] == {}


def test_digest_covers_mesh_bytes(scene_dir):
    d0 = digest(load_scene(scene_dir / "scene.json"))
    with open(scene_dir / "unit_cube.tri", "a") as fh:
        fh.write("# touched\n")
    assert digest(load_scene(scene_dir / "scene.json")) != d0


@pytest.mark.parametrize(
    "text, where",
    [
        ('{"schema_version": 1,\n "fields": {\n  "x": }}', "line 3"),
        ('{"schema_version": 2}', "scene.schema_version"),
        ('{"schema_version": 1, "fields": {"f": {"kind": "linear", "a": [1, "z", 0]}}}', "fields.f.a[1]"),
        ('{"schema_version": 1, "fields": {"f": {"kind": "laser"}}}', "fields.f.kind"),
        ('{"schema_version": 1, "regions": {"r": {"kind": "box", "min": [0,0,0]}}}', "regions.r"),
        ('{"schema_version": 1, "regions": {"r": {"kind": "ball", "radius": 1, "color": 3}}}', "regions.r"),
        ('{"schema_version": 1, "fields": {"a": {"kind": "isotropic", "i0": 1}}, "meters": {"a": {"c": 1}}}', "meters.a"),
        ('{"schema_version": 1, "tensors": {"t": {"kind": "conforming_density", "field": "nope"}}}', "tensors.t.field"),
        ('{"schema_version": 1, "balance": {"b": {"kind": "analytic_consistent", "field": "nope"}}}', "balance.b.field"),
        ('{"schema_version": 1, "quadrature_level": 0}', "scene.quadrature_level"),
    ],
)
def test_malformed_scene_locations(text, where):
    with pytest.raises(SceneError, match=where.replace("[", r"\[").replace("]", r"\]")):
        parse_scene(text)


def test_bad_region_values_are_located():
    s = parse_scene('{"schema_version": 1, "regions": {"r": {"kind": "box", "min": [0,0,0], "max": [1,0,1]}}}')
    with pytest.raises(SceneError, match="regions.r"):
        s.region("r")


def test_unknown_name_lists_defined():
    with pytest.raises(SceneError, match=r"unknown field 'nope'.*lin"):
        load_scene(REFERENCE).field("nope")


# CLI examples ----------------------------------------------------------------


def test_power_example():
    rep, code = report(["power", "--scene", S, "--field", "lin", "--region", "cube", "--direction", "1,0,0"])
    assert code == 0
    assert abs(rep["results"]["directional_power"] - 1.0) <= 1e-9
    assert rep["tool"] == "radflux" and len(rep["inputs_digest"]) == 64
    assert rep["command"][0] == "power"


def test_total_power_defaults_to_all_directions():
    rep, code = report(["power", "--scene", S, "--field", "lin", "--region", "cube"])
    assert code == 0 and abs(rep["results"]["total_power"]) <= 1e-9


def test_radiation_assumption_example():
    rep, code = report(["verify", "radiation-assumption", "--scene", S, "--tensor", "lambert_density", "--point", "0,0,0"])
    assert code == 0 and rep["pass"] is True
    rep, code = report(["verify", "radiation-assumption", "--scene", S, "--tensor", "rotated", "--point", "0,0,0"])
    assert code == 1 and rep["pass"] is False
    assert abs(rep["results"]["max_angular_deviation"] - math.pi / 2) <= 1e-12


def test_undefined_field_exit_2(capsys):
    code = main(["irradiance", "--scene", S, "--field", "nope", "--point", "0,0,0", "--normal", "0,0,1"])
    out, err = capsys.readouterr()
    assert code == 2 and out == ""
    assert "nope" in err


def test_malformed_scene_exit_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"schema_version": 1,\n "fields": {"f": {"kind": "isotropic", "i0": -1}}}')
    code = main(["irradiance", "--scene", str(path), "--field", "f", "--point", "0,0,0", "--normal", "0,0,1"])
    out, err = capsys.readouterr()
    assert code == 2 and out == ""
    assert "fields.f" in err


def test_missing_scene_file_exit_2(tmp_path, capsys):
    assert main(["power", "--scene", str(tmp_path / "none.json"), "--field", "a", "--region", "b"]) == 2
    assert capsys.readouterr().out == ""


def test_usage_errors_exit_2(capsys):
    assert main(["irradiance", "--scene", S, "--field", "lin", "--point", "0,0", "--normal", "0,0,1"]) == 2
    assert main(["no-such-command"]) == 2
    assert main(["irradiance", "--scene", S, "--field", "lin", "--point", "0,0,0", "--normal", "0,0,9"]) == 2
    assert main(["irradiance", "--scene", S, "--field", "lin", "--point", "0,0,0", "--normal", "0,0,1", "--subset", "cap:0,0,1"]) == 2
    assert capsys.readouterr().out == ""


def test_irradiance_subsets():
    base = ["irradiance", "--scene", S, "--field", "lam", "--point", "0,0,0", "--normal", "0,0,1"]
    assert abs(report(base)[0]["results"]["irradiance"] - math.pi) <= 1e-6
    rep, _ = report(base + ["--subset", "hemisphere:0,0,1"])
    assert abs(rep["results"]["irradiance"] - math.pi) <= 1e-6
    rep, _ = report(base + ["--subset", "cap:0,0,1:0.5"])
    assert rep["results"]["irradiance"] == pytest.approx(math.pi * math.sin(0.5) ** 2, rel=1e-12)


def test_flux_vector_field_and_tensor():
    rep, _ = report(["flux-vector", "--scene", S, "--field", "lam", "--point", "0,0,0"])
    assert np.allclose(rep["results"]["energy_flux_vector"], [0, 0, math.pi], atol=1e-6)
    rep, _ = report(["flux-vector", "--scene", S, "--tensor", "collimated", "--point", "0,0,0"])
    assert rep["results"]["energy_flux_vector"] == [0.0, 0.0, 2.5]


def test_total_distribution_report():
    rep, code = report(["total-distribution", "--scene", S, "--tensor", "atom_ramp", "--region", "cube",
                        "--subset", "cap:0,0,1:0.1"])
    r = rep["results"]
    assert code == 0
    assert len(r["atoms"]) == 1 and r["atoms"][0]["direction"] == [0.0, 0.0, 1.0]
    assert abs(r["atoms"][0]["weight"] - 1.0) <= 1e-9
    assert abs(r["total_power"] - r["direct_total_power"]) <= 1e-10
    assert abs(r["measure_of_subset"] - 1.0) <= 1e-9


def test_csv_output():
    text, code = run(["power", "--scene", S, "--field", "lin", "--region", "cube", "--direction", "1,0,0", "--csv"])
    lines = text.splitlines()
    assert code == 0 and lines[0] == "key,value"
    rows = dict(line.split(",", 1) for line in lines[1:])
    assert float(rows["results.directional_power"]) == pytest.approx(1.0, abs=1e-9)


# determinism ------------------------------------------------------------------


def test_repeated_runs_identical():
    argv = ["total-distribution", "--scene", S, "--tensor", "lambert_density", "--region", "ball"]
    assert run(argv) == run(argv)


def test_thread_count_does_not_change_output(monkeypatch):
    argv = ["total-distribution", "--scene", S, "--tensor", "lambert_density", "--region", "mesh_cube"]
    monkeypatch.setenv("RADFLUX_THREADS", "1")
    one = run(argv)
    monkeypatch.setenv("RADFLUX_THREADS", "4")
    assert run(argv) == one
    monkeypatch.setenv("RADFLUX_THREADS", "zero")
    assert run(argv) == ("", 2)


def test_module_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "radflux", "power", "--scene", S, "--field", "iso", "--region", "simplex",
         "--direction", "0,0,1"],
        capture_output=True, text=True, check=False,
    )
    assert out.returncode == 0
    assert abs(json.loads(out.stdout)["results"]["directional_power"]) <= 1e-9


# verifier agreement -----------------------------------------------------------------


def agree(argv, lib_pass):
    rep, code = report(argv)
    assert rep["pass"] is bool(lib_pass)
    assert code == (0 if lib_pass else 1)


@pytest.mark.parametrize("tensor", ["collimated", "lambert_density", "atom_ramp", "rotated"])
def test_verify_radiation_assumption_agrees(tensor):
    scene = load_scene(REFERENCE)
    lib = verify_radiation_assumption(scene.tensor(tensor), np.array([0.1, 0.2, 0.3]), 1e-9)
    agree(["verify", "radiation-assumption", "--scene", S, "--tensor", tensor, "--point", "0.1,0.2,0.3"], lib.passed)


@pytest.mark.parametrize("name, flag", [("lin", "--field"), ("beam", "--field"), ("rotated", "--tensor"),
                                        ("lambert_density", "--tensor")])
def test_verify_cauchy_agrees(name, flag):
    from radflux.balance import CauchyMap

    scene = load_scene(REFERENCE)
    n = np.array([1.0, 2.0, 2.0]) / 3.0
    if flag == "--tensor":
        cmap = CauchyMap.from_tensor(scene.tensor(name))
    else:
        cmap = CauchyMap.from_irradiance(scene.field(name), scene.quad)
    lib = tetrahedron_residual(cmap, np.array([0.5, 0.5, 0.5]), n, 1.0) <= TOL_CAUCHY
    agree(["verify", "cauchy", "--scene", S, flag, name, "--point", "0.5,0.5,0.5", "--normal", "0.5,1,1"], lib)


@pytest.mark.parametrize("data", ["lin_consistent", "none", "unit_source"])
def test_verify_balance_agrees(data):
    scene = load_scene(REFERENCE)
    r = integral_balance_residual(scene.field("lin"), scene.balance(data), scene.region("cube"), np.eye(3)[0])
    agree(["verify", "balance", "--scene", S, "--field", "lin", "--data", data, "--region", "cube",
           "--direction", "1,0,0"], r <= TOL_BALANCE)


def test_verify_balance_differential():
    rep, code = report(["verify", "balance", "--scene", S, "--field", "lin", "--data", "lin_consistent",
                        "--region", "cube", "--direction", "1,0,0", "--point", "0.3,0.3,0.3"])
    assert code == 0 and rep["results"]["differential_balance_residual"] <= 1e-6


@pytest.mark.parametrize(
    "field, u, start, end", [("beam", "0,1,0", "0.3,0,0", "0.3,10,0"), ("lin", "1,0,0", "0,0,0", "10,0,0")]
)
def test_verify_ray_agrees(field, u, start, end):
    scene = load_scene(REFERENCE)
    vec = lambda t: np.array([float(c) for c in t.split(",")])
    r = ray_conservation_residual(scene.field(field), vec(u), (vec(start), vec(end)), 100)
    agree(["verify", "ray", "--scene", S, "--field", field, "--direction", u, "--start", start, "--end", end],
          r.residual <= 1e-6 and r.endpoint_difference <= 1e-9)


@pytest.mark.parametrize("meter, data", [("x1", "lin_consistent"), ("one", "lin_consistent"), ("x1", "none")])
def test_verify_virtual_power_agrees(meter, data):
    scene = load_scene(REFERENCE)
    r = virtual_power_residual(scene.field("lin"), scene.balance(data), scene.region("cube"), np.eye(3)[0],
                               scene.meter(meter))
    agree(["verify", "virtual-power", "--scene", S, "--field", "lin", "--data", data, "--region", "cube",
           "--direction", "1,0,0", "--meter", meter], r <= TOL_VIRTUAL)


@pytest.mark.parametrize("field", ["lin", "iso", "lam", "beam"])
@pytest.mark.parametrize("region", ["cube", "ball", "simplex", "mesh_cube"])
def test_verify_boundedness_agrees(field, region):
    scene = load_scene(REFERENCE)
    lib = boundedness_constant(scene.field(field), np.array([0.6, 0.0, 0.8]), scene.region(region))
    agree(["verify", "boundedness", "--scene", S, "--field", field, "--region", region,
           "--direction", "0.6,0,0.8"], lib.verified)
