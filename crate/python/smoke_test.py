"""Smoke test for the pyzigzag extension.

Build it first, e.g. ``maturin develop -m crates/python/Cargo.toml``,
then run ``python python/smoke_test.py``.
"""

import json
import math

import pyzigzag as zz


def main():
    assert abs(zz.alpha_crit(2).alpha_crit - 1.0) < 1e-10
    assert abs(zz.alpha_crit(3).alpha_crit - 5 / 12) < 1e-10

    eq = zz.solve_equilibrium(3)
    assert abs(eq.positions[2] - 1.25 ** (1 / 3)) < 1e-12
    assert max(abs(g) for g in zz.potential_gradient(eq.positions)) < 1e-10

    spectrum = zz.axial_spectrum(5)
    assert abs(spectrum.eigenvalues[0] - 1.0) < 1e-9
    assert abs(spectrum.eigenvalues[1] - 3.0) < 1e-8

    fit = zz.fit_theory(3, 10)
    lo = zz.THEORY_3_10
    assert abs(fit.c - lo.c) <= lo.c_stderr, fit
    assert abs(fit.beta - lo.beta) <= lo.beta_stderr, fit

    wide = zz.fit_theory(2, 100)
    n = zz.n_crit(80e3, 700e3, wide)
    assert 20.0 < n < 22.0, n
    assert math.floor(n) == 20

    found = zz.bisect_transition(4)
    exact = zz.alpha_crit(4).alpha_crit
    assert abs(found - exact) / exact < 1e-5, (found, exact)
    assert zz.minimize_full(4, 1.1 * exact).phase() == "zigzag"
    assert zz.minimize_full(4, 0.9 * exact).phase() == "linear"

    csv = "n_ions,nu_r_hz,nu_r_err_hz,nu_z_hz,nu_z_err_hz,label\n"
    for k in range(3, 8):
        nu_r = 500e3
        nu_z = nu_r * math.sqrt(zz.alpha_crit(k).alpha_crit)
        csv += f"{k},{nu_r},1e4,{nu_z},1.5e3,run{k}\n"
    report = json.loads(zz.analyze_csv(csv))
    for point in report["points"]:
        assert abs(point["alpha_mean"] / point["alpha_theory"] - 1) < 1e-12
    assert abs(report["fit"]["beta"] - report["theory_fit"]["beta"]) <= 2 * report["fit"]["beta_stderr"]

    try:
        zz.alpha_crit(1)
    except ValueError as err:
        assert "n_ions" in str(err)
    else:
        raise AssertionError("alpha_crit(1) should raise")

    print("pyzigzag smoke test passed")


if __name__ == "__main__":
    main()
