import json
import math

import numpy as np
import pytest

from channel_exchange.amplitudes import Quantity
from channel_exchange.scan import (
    ANCHOR,
    Figure,
    InvalidSpec,
    Normalization,
    ScanSpec,
    calibrate,
    grid_from_csv,
    point_report,
    random_configs,
    read_scan_csv,
    report_discrepancy,
    run_scan,
    scan_fig3,
    scan_fig4,
    scan_fig5,
    write_scan,
)
from channel_exchange.kinematics import ScatterConfig


@pytest.fixture(scope="module")
def fig4_small():
    return run_scan(ScanSpec(Figure.FIG4, grid=(61, 61), normalization=Normalization.NONE))


def test_default_grids():
    assert ScanSpec(Figure.FIG4).grid == (181, 181)
    assert ScanSpec(Figure.FIG3).grid == (181, 361)
    assert ScanSpec(Figure.FIG5).grid == (721,)


@pytest.mark.parametrize("kw", [
    dict(figure=Figure.FIG4, E_e=1.0, E_ph=1.1),
    dict(figure=Figure.FIG4, grid=(1, 5)),
    dict(figure=Figure.FIG5, grid=(10, 10)),
    dict(figure=Figure.CUSTOM, E_e=-1.0),
])
def test_invalid_specs(kw):
    with pytest.raises(InvalidSpec):
        ScanSpec(**kw)


def test_fig4_diagonal_and_antidiagonal(fig4_small):
    g = fig4_small.state_grid()
    idx = np.arange(1, 60)
    # kbar points along -z on both lines, so set-2 vanishes there
    np.testing.assert_allclose(g.set2[idx, idx], 0, atol=1e-12)
    np.testing.assert_allclose(g.set2[idx, 60 - idx], 0, atol=1e-12)
    np.testing.assert_allclose(g.set1[idx, idx], 4, rtol=1e-12)


def test_fig4_symmetry_columns(fig4_small):
    v = fig4_small.raw
    ok = np.all(np.isfinite(v), axis=1)
    np.testing.assert_allclose(v[ok, 0], v[ok, 3], rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(v[ok, 1], v[ok, 2], rtol=1e-9, atol=1e-12)


def test_fig3_pole_column_is_holes():
    res = scan_fig3(grid=(19, 37))
    codes = res.errors.reshape(res.shape)
    assert set(codes[0]) == {"CollinearSingularity"}
    assert np.all(np.isnan(res.raw.reshape(19, 37, 4)[0]))
    # phi = 2 pi is written but evaluated as phi = 0
    v = res.raw.reshape(19, 37, 4)
    np.testing.assert_array_equal(v[5:, 0], v[5:, -1])
    assert res.coord("phi_ph")[-1] == pytest.approx(2 * math.pi)


def test_fig3_planar_point_set2_zero():
    res = scan_fig3(grid=(181, 361), normalization=Normalization.NONE)
    v = res.raw.reshape(181, 361, 4)
    assert v[90, 180, 1] == pytest.approx(0, abs=1e-12)
    assert v[90, 180, 0] == pytest.approx(4)


def test_fig5_layout():
    res = scan_fig5(theta_e=math.pi / 4)
    ts = res.coord("theta_s")
    assert len(ts) == 721 and ts[0] == 0 and ts[-1] == pytest.approx(2 * math.pi)
    th = res.coord("theta_ph")
    assert th.max() == pytest.approx(math.pi) and th.min() == 0
    v = res.raw
    i = int(np.argmin(abs(ts - math.pi / 4)))
    assert v[i, 1] == pytest.approx(0, abs=1e-12)


def test_normalization_clamps_then_divides():
    res = scan_fig4(grid=(31, 31))
    assert np.nanmax(res.values) == pytest.approx(1.0)
    assert np.nanmin(res.values) >= 0
    assert res.scale == pytest.approx(np.nanmax(res.raw))


@pytest.mark.parametrize("figure", [Figure.FIG4, Figure.FIG5])
def test_thread_determinism(tmp_path, figure):
    spec = ScanSpec(figure, grid=(101, 101) if figure is Figure.FIG4 else (721,))
    a = write_scan(run_scan(spec, threads=1), tmp_path / "a.csv")[0].read_bytes()
    b = write_scan(run_scan(spec, threads=4), tmp_path / "b.csv")[0].read_bytes()
    assert a == b


def test_csv_roundtrip(tmp_path, fig4_small):
    path, meta = write_scan(fig4_small, tmp_path / "s.csv")
    header, data, errors = read_scan_csv(path)
    assert header[:3] == ["theta_e", "theta_ph", "phi_ph"]
    assert data.shape == (61 * 61, 7)
    assert errors.count("") == 61 * 61 - fig4_small.n_holes
    g = grid_from_csv(path)
    np.testing.assert_allclose(g.set1, fig4_small.state_grid().set1, equal_nan=True)
    m = json.loads(meta.read_text())
    assert m["scans"][0]["n_holes"] == fig4_small.n_holes
    assert m["scans"][0]["jump_detection"].startswith("grid spacing")


def test_structured_output(tmp_path, fig4_small):
    (path,) = write_scan(fig4_small, tmp_path / "s.json", fmt="structured")
    d = json.loads(path.read_text())
    assert len(d["records"]) == 61 * 61
    assert d["records"][0]["error"] == "DegenerateForward"


def test_custom_detuned_scan():
    res = run_scan(ScanSpec(Figure.CUSTOM, E_e=1.0, E_ph=1.1, grid=(31, 31), phi_ph=math.pi))
    assert res.raw.shape == (961, 4)


def test_total_quantity_scan():
    res = scan_fig4(grid=(31, 31), quantity=Quantity.TOTAL, normalization=Normalization.NONE)
    g = res.state_grid()
    assert g.set1[15, 15] == pytest.approx(8)


def test_calibration_report():
    rep = calibrate()
    assert rep.passed
    assert sum(row["passed"] for row in rep.as_dict()["assignments"]) == 4
    assert rep.selected.as_dict() == {"levi_civita_sign": 1, "t2_up_sign": -1, "rcp_x_sign": -1}


def test_point_report_records():
    rec = point_report(ANCHOR)
    assert rec["quad"] == pytest.approx([4, 0, 0, 4], abs=1e-12)
    assert rec["concurrence"]["is_bell"]
    assert rec["klein_nishina"] == pytest.approx(5)
    bad = point_report(ScatterConfig(1, 1, 0, 0, 0))
    assert bad["error"] == "DegenerateForward"


def test_random_configs_reproducible():
    a, b = random_configs(20, seed=7), random_configs(20, seed=7)
    assert a == b and len(a) == 20


def test_report_discrepancy_small():
    rep = report_discrepancy(50, seed=1)
    assert rep["n_samples"] == 50
    assert max(rep["max_rel_discrepancy"].values()) < 1e-9
    assert rep["max_rel_imaginary"] < 1e-8
