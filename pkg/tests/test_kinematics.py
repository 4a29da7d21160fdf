import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from channel_exchange.kinematics import (
    CollinearSingularity,
    DegenerateForward,
    KinematicsError,
    NonPhysical,
    ScatterConfig,
    propagators,
    solve_arrays,
    solve_kinematics,
)
from channel_exchange.tensor import mink_dot

from conftest import as_np, configs

ANCHOR = ScatterConfig(1.0, 1.0, math.pi / 2, math.pi / 2, math.pi)


def test_anchor_momenta():
    ms = solve_kinematics(ANCHOR)
    np.testing.assert_allclose(as_np(ms.pbar), [1, 0, 0, 1], atol=1e-15)
    np.testing.assert_allclose(as_np(ms.kbar), [1, 0, 0, -1], atol=1e-15)
    inv = ms.invariants
    assert inv["P2"] == pytest.approx(4)
    assert inv["Pbar2"] == pytest.approx(-2)
    assert inv["p.k"] == pytest.approx(2)
    assert inv["p.kbar"] == pytest.approx(1)
    assert inv["p.pbar"] == pytest.approx(1)


@given(configs())
def test_conservation_and_mass_shell(cfg):
    ms = solve_kinematics(cfg)
    p, k, pb, kb = ms.arrays()
    E = cfg.E_e + cfg.E_ph
    np.testing.assert_allclose(p + k, pb + kb, atol=1e-12 * E)
    for v in (p, k, pb, kb):
        assert abs(mink_dot(v, v)) < 1e-9 * E**2
    assert pb[0] > 0 and kb[0] > 0
    np.testing.assert_allclose(pb[1:3], 0, atol=0)


@given(configs())
def test_mandelstam_closure(cfg):
    ms = solve_kinematics(cfg)
    p, k, pb, kb = ms.arrays()
    s = mink_dot(p + k, p + k)
    t = mink_dot(p - pb, p - pb)
    u = mink_dot(p - kb, p - kb)
    assert s + t + u == pytest.approx(0, abs=1e-9 * (cfg.E_e + cfg.E_ph) ** 2)
    assert ms.invariants["Pbar2"] == pytest.approx(u)


@settings(max_examples=50)
@given(configs(), st.sampled_from([0.5, 2.0, 10.0]))
def test_momenta_scale_linearly(cfg, lam):
    a, b = solve_kinematics(cfg), solve_kinematics(cfg.scaled(lam))
    for x, y in zip(a.arrays(), b.arrays()):
        np.testing.assert_allclose(lam * x, y, rtol=1e-12, atol=1e-12 * lam)


@pytest.mark.parametrize("cfg, err", [
    (ScatterConfig(1, 1, 0, 0, 0), DegenerateForward),
    (ScatterConfig(1, 2, 0, 0, 1.0), DegenerateForward),
    # head-on along x: the pair has zero momentum, pbar is along +z
    (ScatterConfig(1, 1, math.pi / 2, math.pi / 2, 0.0), CollinearSingularity),
])
def test_degenerate_configs(cfg, err):
    with pytest.raises(err):
        solve_kinematics(cfg)


def test_error_codes():
    assert DegenerateForward.code == "DegenerateForward"
    assert NonPhysical.code == "NonPhysical"
    assert CollinearSingularity.code == "CollinearSingularity"
    assert issubclass(CollinearSingularity, KinematicsError)


def test_collinear_photon_along_detector_axis():
    # photon incoming along +z gives kbar = p, so Pbar = 0
    cfg = ScatterConfig(1, 1, math.pi / 3, 0.0, math.pi)
    with pytest.raises(CollinearSingularity):
        solve_kinematics(cfg)


@pytest.mark.parametrize("kw", [
    dict(E_e=0, E_ph=1, theta_e=1, theta_ph=1, phi_ph=1),
    dict(E_e=1, E_ph=1, theta_e=4, theta_ph=1, phi_ph=1),
    dict(E_e=1, E_ph=1, theta_e=1, theta_ph=-0.1, phi_ph=1),
    dict(E_e=1, E_ph=1, theta_e=1, theta_ph=1, phi_ph=2 * math.pi),
])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        ScatterConfig(**kw)


def test_vectorized_solve_matches_scalar():
    rng = np.random.default_rng(3)
    te, th, ph = rng.uniform(0, math.pi, 50), rng.uniform(0, math.pi, 50), rng.uniform(0, 2 * math.pi, 50)
    p, k, pb, kb, codes = solve_arrays(1.3, 0.7, te, th, ph)
    for i in range(50):
        cfg = ScatterConfig(1.3, 0.7, te[i], th[i], ph[i])
        try:
            ms = solve_kinematics(cfg)
        except KinematicsError as exc:
            assert codes[i] == exc.code
            assert np.all(np.isnan(pb[i]))
            continue
        assert codes[i] == ""
        np.testing.assert_allclose(as_np(ms.kbar), kb[i])


def test_propagators():
    P, Pbar, P2, Pbar2 = propagators(solve_kinematics(ANCHOR))
    np.testing.assert_allclose(as_np(P), [2, 0, 0, 0], atol=1e-15)
    np.testing.assert_allclose(as_np(Pbar), [0, 1, 0, 1], atol=1e-15)
    assert (P2, Pbar2) == pytest.approx((4, -2))
