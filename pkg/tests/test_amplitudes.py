import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from channel_exchange.amplitudes import (
    OUT_STATES,
    ExchangeQuad,
    Quantity,
    compare_paths,
    direct_terms,
    exchange_closed,
    exchange_closed_quad,
    exchange_trace,
    exchange_trace_quad,
    klein_nishina_massless,
    natural_scale,
    quad_arrays,
    summed_direct_terms,
    summed_exchange,
    total_quad,
    trace_terms_arrays,
)
from channel_exchange.conventions import CANONICAL, Conventions, all_conventions
from channel_exchange.dirac import ElectronSpin
from channel_exchange.kinematics import ScatterConfig, solve_kinematics
from channel_exchange.polarization import PhotonPolarization, circular_polarization

from conftest import configs

ANCHOR = solve_kinematics(ScatterConfig(1.0, 1.0, math.pi / 2, math.pi / 2, math.pi))


def _rel(a, b, floor=1e-300):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), np.max(np.abs(b)), floor))


def _floor(ms):
    return float(natural_scale(*(ms.arrays()[i] for i in (0, 1, 3))))


def test_anchor_quads():
    np.testing.assert_allclose(exchange_closed_quad(ANCHOR).values, [4, 0, 0, 4], atol=1e-12)
    np.testing.assert_allclose(exchange_trace_quad(ANCHOR).values, [4, 0, 0, 4], atol=1e-12)
    np.testing.assert_allclose(total_quad(ANCHOR).values, [8, 2, 2, 8], atol=1e-12)
    assert klein_nishina_massless(ANCHOR) == pytest.approx(5)


def test_anchor_direct_terms():
    up_r, up_l = OUT_STATES[0], OUT_STATES[1]
    assert direct_terms(ANCHOR, up_r) == pytest.approx((2, 2))
    assert direct_terms(ANCHOR, up_l) == pytest.approx((0, 2), abs=1e-12)
    assert summed_direct_terms(ANCHOR) == pytest.approx((4, 16))


@settings(max_examples=60, deadline=None)
@given(configs())
def test_closed_form_matches_trace(cfg):
    ms = solve_kinematics(cfg)
    rep = compare_paths(ms)
    assert _rel(rep.closed_form.values, rep.trace_path.values, _floor(ms)) < 1e-9
    assert rep.residual_imaginary < 1e-8


@settings(max_examples=60, deadline=None)
@given(configs())
def test_set_symmetry(cfg):
    ms = solve_kinematics(cfg)
    floor = _floor(ms)
    assert exchange_closed_quad(ms).symmetry_residual(floor) < 1e-10
    assert exchange_trace_quad(ms).symmetry_residual(floor) < 1e-10
    assert total_quad(ms).symmetry_residual(floor) < 1e-10


def test_forward_electron_quad_vanishes():
    # theta_e = 0 makes the electron keep its momentum (t = 0)
    ms = solve_kinematics(ScatterConfig(1.0, 1.0, 0.0, 2.0, 0.0))
    np.testing.assert_allclose(exchange_closed_quad(ms).values, 0, atol=1e-14)
    np.testing.assert_allclose(exchange_trace_quad(ms).values, 0, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(configs(), st.sampled_from([0.5, 2.0, 10.0]))
def test_scale_invariance(cfg, lam):
    ms = solve_kinematics(cfg)
    a = exchange_closed_quad(ms).values
    b = exchange_closed_quad(solve_kinematics(cfg.scaled(lam))).values
    assert _rel(a, b, _floor(ms)) < 1e-10


@settings(max_examples=60, deadline=None)
@given(configs())
def test_covariant_sums(cfg):
    ms = solve_kinematics(cfg)
    kn = klein_nishina_massless(ms)
    s, u = summed_direct_terms(ms)
    assert (s + u) / 4 == pytest.approx(kn, rel=1e-10)
    assert abs(summed_exchange(ms)) < 1e-9 * kn
    assert sum(total_quad(ms).values) / 4 == pytest.approx(kn, rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(configs(), st.sampled_from(list(ElectronSpin)))
def test_ward_identity(cfg, spin):
    # replacing the outgoing polarization by kbar kills the full amplitude
    ms = solve_kinematics(cfg)
    p, k, pb, kb = ms.arrays()
    exch, s, u = trace_terms_arrays(p, k, pb, kb, spin, kb.astype(complex))
    scale = abs(s) + abs(u) + klein_nishina_massless(ms) * kb[0] ** 2
    assert abs(exch + s + u) < 1e-9 * scale


@settings(max_examples=30, deadline=None)
@given(configs(), st.floats(0, 2 * math.pi), st.sampled_from(OUT_STATES))
def test_gauge_angle_invariance(cfg, alpha, out):
    ms = solve_kinematics(cfg)
    p, k, pb, kb = ms.arrays()
    e0 = np.asarray(circular_polarization(kb, out.pol).eps)
    e1 = np.asarray(circular_polarization(kb, out.pol, gauge_angle=alpha).eps)
    a = trace_terms_arrays(p, k, pb, kb, out.spin, e0)
    b = trace_terms_arrays(p, k, pb, kb, out.spin, e1)
    np.testing.assert_allclose(np.real(b), np.real(a), rtol=1e-9, atol=1e-12)


def test_vectorized_matches_scalar():
    ms = solve_kinematics(ScatterConfig(1.2, 0.8, 1.0, 2.0, 0.5))
    vals, worst = quad_arrays(*(v[None] for v in ms.arrays()))
    np.testing.assert_allclose(vals[0], exchange_closed_quad(ms).values, rtol=1e-12)
    tot, _ = quad_arrays(*(v[None] for v in ms.arrays()), quantity=Quantity.TOTAL)
    np.testing.assert_allclose(tot[0], total_quad(ms).values, rtol=1e-10)
    assert worst < 1e-10


def test_scalar_functions_agree():
    ms = solve_kinematics(ScatterConfig(1.0, 1.5, 0.4, 2.2, 4.0))
    for out in OUT_STATES:
        assert exchange_closed(ms, out) == pytest.approx(exchange_trace(ms, out), rel=1e-10)


def test_conventions_only_product_matters():
    ms = solve_kinematics(ScatterConfig(1.0, 1.5, 0.4, 2.2, 4.0))
    ref = exchange_closed_quad(ms).values
    for conv in all_conventions():
        vals = exchange_closed_quad(ms, conv).values
        product = conv.levi_civita_sign * conv.t2_up_sign * conv.rcp_x_sign
        if product == 1:
            np.testing.assert_allclose(vals, ref, rtol=1e-10)
        else:
            np.testing.assert_allclose(vals, (ref[1], ref[0], ref[3], ref[2]), rtol=1e-10)
    # the traced path builds eps from gamma5 itself; only the photon basis reaches it
    np.testing.assert_allclose(exchange_trace_quad(ANCHOR, Conventions(levi_civita_sign=-1)).values,
                               [4, 0, 0, 4], atol=1e-12)
    np.testing.assert_allclose(exchange_trace_quad(ANCHOR, Conventions(rcp_x_sign=1)).values,
                               [0, 4, 4, 0], atol=1e-12)


def test_exchange_quad_validation():
    with pytest.raises(ValueError):
        ExchangeQuad((1.0, 2.0, float("nan"), 0.0))
    q = ExchangeQuad((3, 1, 1, 3))
    assert (q.set1, q.set2, q.symmetry_residual()) == (3, 1, 0)


def test_out_state_labels():
    assert [o.label for o in OUT_STATES] == ["up_R", "up_L", "down_R", "down_L"]
    assert OUT_STATES[0].pol is PhotonPolarization.R
    assert CANONICAL.as_dict() == {"levi_civita_sign": 1, "t2_up_sign": -1, "rcp_x_sign": -1}
