#!/usr/bin/env python3
"""Smoke test for the biocontrol Python extension.

Builds nothing itself: run `cargo build --release -p biocontrol-py` first,
then `python3 python/smoke_test.py`. The script locates the compiled
cdylib under target/, loads it, and exercises the main surface.
"""

import importlib.util
import math
import pathlib
import shutil
import sys
import tempfile


def load_module():
    root = pathlib.Path(__file__).resolve().parent.parent
    candidates = [
        root / "target" / profile / f"libbiocontrol_py{ext}"
        for profile in ("release", "debug")
        for ext in (".so", ".dylib")
    ]
    lib = next((c for c in candidates if c.exists()), None)
    if lib is None:
        sys.exit(
            "extension not built; run `cargo build --release -p biocontrol-py` first"
        )
    tmp = pathlib.Path(tempfile.mkdtemp(prefix="biocontrol-smoke-"))
    target = tmp / "biocontrol_py.so"
    shutil.copy(lib, target)
    spec = importlib.util.spec_from_file_location("biocontrol_py", target)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def approx(got, want, tol, label):
    if abs(got - want) > tol:
        sys.exit(f"FAIL {label}: {got} vs {want} (tol {tol})")
    print(f"ok   {label}: {got}")


def main():
    bc = load_module()

    p = bc.Params(k1=0.00331, k2=0.001)
    r1, r2 = p.reproduction_numbers()
    approx(r1, 3.81697, 1e-5, "R1")
    approx(r2, 9.95025, 1e-5, "R2")
    approx(p.k1_max(), 0.0220159, 1e-6, "k1_max")

    eq = p.equilibria()
    assert eq["A1"] == (0.0, 0.0, 0.0, 0.0)
    a4 = eq["A4"]
    residual = p.vector_field(a4)
    norm = math.sqrt(sum(x * x for x in a4))
    if max(abs(r) for r in residual) > 1e-9 * norm:
        sys.exit(f"FAIL equilibrium residual {residual}")
    print(f"ok   A4 = {a4}")

    c = p.classify("A1")
    assert c["kind"] == "saddle-2-2", c
    print(f"ok   A1 classification: {c['kind']}")

    ok, violations = p.is_admissible()
    assert ok, violations
    bad_ok, bad_violations = p.with_interactions(0.001, 0.002).is_admissible()
    assert not bad_ok and bad_violations
    print("ok   admissibility checks")

    # exact Hopf point on the k2 = 0.001 slice
    pt = bc.solve_sigma_k2(p, 0.0033088, 100.0)
    assert pt is not None
    approx(pt[1], 0.0009855, 1e-7, "sigma k2 at k1=0.0033088")
    approx(pt[2], 2.84745, 1e-4, "omega0 on the curve")
    assert pt[3] == 1, "l1 sign"

    hopf = p.with_interactions(pt[0], pt[1])
    report = hopf.lyapunov()
    assert report["l1"] > 0, report["l1"]
    assert report["transversality"] < 0
    approx(report["omega0"], 2.84745, 1e-4, "omega0 from the report")
    print(f"ok   l1 = {report['l1']:.3e} > 0 (subcritical)")

    rows = bc.trace_sigma(p, 100.0, 30)
    assert len(rows) >= 20, len(rows)
    assert all(r[3] == 1 for r in rows)
    print(f"ok   traced {len(rows)} variety points")

    t = bc.find_tangency(p)
    approx(t["c2_star"], 650.41463, 1e-2, "c2_star")
    approx(t["k1"], 0.00035, 1e-5, "tangency k1")

    traj = p.integrate(a4, 10.0, 1e-9)
    drift = max(abs(a - b) for a, b in zip(traj[-1][1:], a4))
    assert drift <= 1e-6 * norm, drift
    print(f"ok   equilibrium held over {len(traj)} samples")

    print("smoke test passed")


if __name__ == "__main__":
    main()
