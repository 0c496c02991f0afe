"""Run the golden-scene CLI suite.

    python3 scripts/run_golden_suite.py            # compare against tests/golden
    python3 scripts/run_golden_suite.py --update   # rewrite tests/golden
    python3 scripts/run_golden_suite.py --print    # concatenated reports to stdout

Commands run in-process from the repository root so that the command echo
inside each report uses the same relative scene path everywhere.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from radflux.cli import run

ROOT = Path(__file__).resolve().parents[1]
SUITE = ROOT / "scenes" / "golden_suite.json"
GOLDEN = ROOT / "tests" / "golden"


def with_scene(argv: list[str], scene: str) -> list[str]:
    """Insert ``--scene`` right after the (sub)command words."""
    k = 2 if argv[0] == "verify" else 1
    return argv[:k] + ["--scene", scene] + argv[k:]


def load_cases():
    """``(name, argv, expected_exit)`` for every case of the suite."""
    spec = json.loads(SUITE.read_text())
    return [(c["name"], with_scene(c["argv"], spec["scene"]), c["exit"]) for c in spec["cases"]]


def run_suite():
    """Yield ``(name, report_text, exit_code, expected_exit)`` for every case."""
    cwd = os.getcwd()
    os.chdir(ROOT)
    try:
        for name, argv, expected in load_cases():
            text, code = run(argv)
            yield name, text, code, expected
    finally:
        os.chdir(cwd)


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    g = p.add_mutually_exclusive_group()
    g.add_argument("--update", action="store_true")
    g.add_argument("--print", action="store_true")
    a = p.parse_args(argv)
    t0 = time.perf_counter()
    bad = 0
    for name, text, code, expected in run_suite():
        if code != expected:
            print(f"{name}: exit {code}, expected {expected}", file=sys.stderr)
            bad += 1
        path = GOLDEN / f"{name}.out"
        if a.print:
            sys.stdout.write(f"== {name} (exit {code})\n{text}")
        elif a.update:
            GOLDEN.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
        elif not path.exists() or path.read_text() != text:
            print(f"{name}: report differs from {path.relative_to(ROOT)}", file=sys.stderr)
            bad += 1
    print(f"golden suite: {bad} problem(s), {time.perf_counter() - t0:.2f} s", file=sys.stderr)
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
