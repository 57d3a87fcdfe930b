import math

import numpy as np
import pytest

import beatnls


def test_interior_and_boundary_orbits():
    inner = beatnls.enumerate_resonances(4, set=[-2, -1, 1, 2], inside=6, nontrivial=True)
    assert (-2, 1, 1, -1, -1, 2) in [tuple(s) for s in inner]
    assert beatnls.is_complete([-2, -1, 1, 2])
    with pytest.raises(ValueError):
        beatnls.enumerate_resonances(4, set=[1, 1])


def test_reduced_pendulum_anchor():
    K = beatnls.K_STAR
    ps, _ = beatnls.fixed_points(K)
    assert ps == pytest.approx(1.0, abs=1e-12)
    p1, p2 = beatnls.separatrix_crossings(K)
    assert p1 + p2 == pytest.approx(2.0, abs=1e-10)
    assert p1 < 0.5 < 1.5 < p2
    p, q, eps = 0.7, 0.4, 1e-3
    expect = 1308 - 1296 + eps * (1296 - 270 * (p**2 + (2 - p) ** 2) + 36 * (p**3 + (2 - p) ** 3)
                                  + 72 * (p * (2 - p)) ** 1.5 * math.cos(q))
    assert beatnls.reduced_hamiltonian(K, p, q, eps) == pytest.approx(expect, rel=1e-12)


def test_floquet_limit():
    tp, tm = beatnls.floquet_exponents([0.0, 4.0, 0.0, 2.0], 3)
    assert tp == pytest.approx(702, rel=1e-6)
    assert tm == pytest.approx(414, rel=1e-6)


def test_verify_star():
    rep = beatnls.verify_star()
    assert rep["all_pass"] is True


def test_initial_data_and_short_run():
    xi = [0.5, 4.0, 0.0, 2.0]
    u = beatnls.initial_data(xi, 1e-3, J=8)
    assert u.shape == (17,) and u.dtype == np.complex128
    a = np.abs(u) ** 2 / math.sqrt(1e-3)
    assert a[8 + 1] + 2 * a[8 + 2] == pytest.approx(4.0, rel=1e-12)
    out = beatnls.simulate(xi, eps=1e-3, J=8, T=10.0, dt=0.02, stride=10)
    assert out["f"].shape == (len(out["t"]), 4)
    assert out["report"]["L_drift"] < 1e-8
    assert np.max(np.abs(out["L"] - out["L"][0])) < 1e-12
    with pytest.raises(ValueError):
        beatnls.simulate(xi, scheme="euler")
    with pytest.raises(ValueError):
        beatnls.initial_data(xi, 0.0)
