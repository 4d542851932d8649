"""Smoke test for the nldiff_py extension.

Build and run from the repository root:

    cargo build --release -p nldiff-py --features extension-module
    cp target/release/libnldiff_py.so python/nldiff_py.so
    python3 python/smoke_test.py
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import nldiff_py as nl


def main():
    mesh = nl.Mesh(40)
    u0 = nl.Field.gaussians(mesh)
    w = nl.Stencil.gaussian(0.05, mesh)

    a = nl.ptw(u0, w, p=3.0)
    b = nl.rr(u0, w, p=3.0, levels=2000)
    num = sum((x - y) ** 2 for x, y in zip(a.values(), b.values()))
    den = sum(x * x for x in a.values())
    print(f"rr vs ptw: {math.sqrt(num / den):.3e}")
    assert math.sqrt(num / den) < 1e-2
    assert abs(sum(a.values())) < 1e-9 * sum(abs(v) for v in u0.values())

    lam = 1.0
    res = nl.solve(u0, 1.0, 0.01, method="ptw", kernel="box", param=0.1, lam=lam)
    exact = nl.Field(mesh, [v * math.exp(-lam) for v in u0.values()])
    err = nl.relative_error(res.final_field, exact)
    print(f"manufactured solution: {res.steps} steps, rel err {err:.3e}")
    assert res.steps == 100 and err < 1e-2

    res = nl.solve(u0, 0.2, 0.01, method="rr", kernel="gaussian", param=0.05, p=3.0,
                   record_mass=True)
    drift = max(abs(m - res.mass_trace[0]) for m in res.mass_trace)
    print(f"rr mass drift {drift:.1e}, L_R = {res.kernel_levels}")
    assert drift < 1e-10

    try:
        nl.solve(u0, 1.0, 0.1, method="ptw", kernel="gaussian", param=0.03, p=3.0)
    except nl.BlowUpError as e:
        print(f"blow-up reported: {e}")
    else:
        raise AssertionError("expected a blow-up")

    checks = nl.verify()
    failed = [name for name, ok, _ in checks if not ok]
    print(f"{len(checks)} oracle checks, {len(failed)} failed")
    assert not failed
    print("ok")


if __name__ == "__main__":
    main()
