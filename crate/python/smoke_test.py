"""Smoke test for the sce_py extension module.

Build and install first, e.g.
    pip install --no-build-isolation ./crates/py
then run
    python python/smoke_test.py
"""

import math

import sce_py


def main():
    vac = sce_py.vacuum_moments(1.0, 1.0, 12)
    assert len(vac) == 13 and vac.order == 12
    assert vac.norm() > 0.0

    # static Minkowski with calibrated c1 stays put
    p = sce_py.PhysicsParams(m=1.0).calibrated(vac)
    tr, en = sce_py.residuals((1.0, 0.0, 0.0, 0.0, 0.0), vac, p)
    assert abs(tr) < 1e-12 and abs(en) < 1e-12, (tr, en)
    t = sce_py.solve_sce((1.0, 0.0, 0.0, 0.0), vac, p, (0.0, 1.0), tol=1e-12)
    assert t.halt is None and len(t) == 101
    assert max(abs(a - 1.0) for a in t.a) < 1e-10

    # expanding start on the energy constraint
    a3 = sce_py.solve_energy_for_a3((1.0, 0.2, 0.0), vac, p)
    t = sce_py.solve_sce((1.0, 0.2, 0.0, a3), vac, p, (0.0, 1.0), tol=1e-12)
    assert t.halt is None and t.a[-1] > 1.1
    assert max(abs(e) for e in t.energy_residual) < 1e-12

    # moment evolution stays inside the geometric bound
    v = sce_py.Potential.sinusoid(1.0, 0.3, 1.0)
    out = sce_py.evolve_moments(vac, v, 0.0, 0.5)
    bound, _ = sce_py.geometric_bound(v, 1.0, 0.0, 0.5)
    assert out.norm() <= bound * vac.norm()

    gap, retained = sce_py.oracle_gap(1.0, 0.5, [1.0, 0.2, -0.5], v, 0.0, 0.5, 12)
    assert gap < 1e-6 and retained > 0, gap

    try:
        sce_py.vacuum_moments(-1.0, 1.0, 4)
    except ValueError:
        pass
    else:
        raise AssertionError("negative mass accepted")

    conf = sce_py.PhysicsParams.conformal()
    assert conf.is_conformal() and math.isclose(conf.xi, 1.0 / 6.0)
    print("sce_py smoke test passed")


if __name__ == "__main__":
    main()
