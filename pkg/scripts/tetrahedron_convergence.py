"""Residual of the four-face flux balance on shrinking tetrahedra.

Prints the residual for a linear map, a smooth spatially varying flux field
(centroid evaluation), a transported beam seen along a generic direction,
and the nonlinear map (n . e3)^2, for h = 1, 1/2, ... 1/2^k.

    python3 scripts/tetrahedron_convergence.py --levels 8
"""

import argparse

import numpy as np

from radflux.balance import CauchyMap, tetrahedron_residual
from radflux.radiance import ScalarRadianceField, gaussian_profile


def unit(v):
    v = np.asarray(v, float)
    return v / np.linalg.norm(v)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=int, default=7)
    ap.add_argument("--point", default="0.1,0.2,0.3")
    args = ap.parse_args(argv)
    x = np.array([float(s) for s in args.point.split(",")])
    n = unit([1, 1, 1])
    beam = ScalarRadianceField.transported(unit([1, 0, 0]), *gaussian_profile(2.0, (0, 0.3, -0.2), 0.8))
    maps = {
        "linear": (CauchyMap.linear(lambda p: np.array([1.0, 2.0, 3.0])), "frozen"),
        "sin": (CauchyMap.linear(lambda p: np.sin(np.asarray(p, float))), "centroid"),
        "beam": (CauchyMap.directional(beam, unit([0.2, 1.0, 0.4])), "centroid"),
        "nonlinear": (CauchyMap(eval=lambda p, m: float(m[2] ** 2)), "frozen"),
    }
    print(f"{'h':>10}" + "".join(f"{k:>14}{'ratio':>8}" for k in maps))
    prev = {}
    for k in range(args.levels):
        h = 0.5**k
        row = f"{h:>10.5f}"
        for name, (m, mode) in maps.items():
            r = tetrahedron_residual(m, x, n, h, mode=mode)
            ratio = f"{prev[name] / r:8.3f}" if prev.get(name) and r > 0 else f"{'-':>8}"
            row += f"{r:14.4e}{ratio}"
            prev[name] = r
        print(row)


if __name__ == "__main__":
    main()
