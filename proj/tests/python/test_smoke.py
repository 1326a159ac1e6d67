"""Smoke tests for the hmlab python extension."""

import math

import numpy as np
import pytest

import hmlab as hm


def test_grid_and_fields():
    g = hm.Grid(0.5, 0.5, 17, 17, 1.0 / 16.0)
    assert g.nx == 17 and g.s == pytest.approx(1.0 / 16.0)
    f = hm.sample(hm.map("holo:0,0,1,0"), g)  # identity map
    vals = f.values()
    assert vals.shape == (17, 17)
    assert vals[0, 0] == complex(0.5, 0.5)
    assert f.mask().all()


def test_wirtinger_calculus():
    g = hm.Grid(0.5, 0.5, 17, 17, 1.0 / 16.0)
    f = hm.sample(hm.map("ehpoly:g=0,0,1;k=0,0,0.3"), g)
    dz = hm.wirtinger_dz(f)
    vals = dz.values()
    mask = dz.mask()
    # d/dz (z^2 + 0.3 conj(z)^2) = 2z, exact on quadratics.
    xs = 0.5 + np.arange(17) * (1.0 / 16.0)
    zz = xs[None, :] + 1j * xs[:, None]
    assert np.max(np.abs(vals[mask] - 2 * zz[mask])) < 1e-12


def test_metric_consistency():
    for spec, k in [("euclidean", 0.0), ("spherical", 2.0), ("hyperbolic", -2.0)]:
        m = hm.metric(spec)
        assert m.curvature(0.1 + 0.2j) == pytest.approx(k)
        assert hm.verify_metric_consistency(m, samples=50)["max_err"] <= 1e-6


def test_solve_and_energy():
    g = hm.Grid(0.0, 0.0, 33, 33, 1.0 / 32.0)
    eu = hm.metric("euclidean")
    sol = hm.solve_harmonic(hm.boundary_from_map(hm.map("affine:c=0.3,0"), g), eu)
    assert sol.converged
    assert sol.energy == pytest.approx(1.09, abs=1e-6)
    assert hm.energy(sol.h, eu, hm.metric("spherical")) == pytest.approx(sol.energy, rel=1e-12)


def test_identity_checks():
    g = hm.Grid(0.5, 0.5, 33, 33, 1.0 / 32.0)
    b = hm.jacobian_bundle_exact(hm.map("ehpoly:g=0,0,1;k=0,0,0.3"), g, hm.metric("euclidean"))
    main = hm.main_identity_residual(b, tolerance=1e-10)
    assert main["passed"] and main["linf"] <= 1e-10
    hopf = hm.hopf_check(b)
    assert hopf["passed"]
    q_field, quad = hm.quadratic_form(b)
    assert quad["passed"] and quad["extras"]["min_Q"] >= 0.0


def test_hmfield_roundtrip(tmp_path):
    g = hm.Grid(-0.5, -0.5, 9, 9, 0.125)
    f = hm.sample(hm.map("affine:c=0.2,0.1"), g)
    path = str(tmp_path / "field.hmfield")
    hm.save_hmfield(path, f)
    back = hm.load_hmfield(path)
    assert np.array_equal(back.values(), f.values())
    assert np.array_equal(back.mask(), f.mask())


def test_errors_are_python_exceptions():
    hy = hm.metric("hyperbolic")
    with pytest.raises(Exception) as exc:
        hy.rho(2.0 + 0.0j)
    assert "domain" in str(exc.value)
