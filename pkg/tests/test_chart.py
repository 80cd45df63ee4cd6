"""Chart construction, validation, file round-trips, and harmonic bases."""

from __future__ import annotations

import numpy as np
import pytest

import kkflow.operators as ops
from kkflow import build_flat_torus_chart, build_milne_chart
from kkflow.chart import (GridChart, harmonic_oneform_basis, load_supplied_chart,
                          parse_chart_file, save_chart)
from kkflow.errors import ConfigurationError, DataError

from conftest import identity_metric, perturbed_metric, smooth_oneform


def test_flat_chart_basics(flat8):
    assert flat8.dims == (8, 8, 8)
    assert flat8.npoints == 512
    np.testing.assert_allclose(flat8.spacings, 2.0 * np.pi / 8.0)
    np.testing.assert_array_equal(flat8.gamma, identity_metric(flat8))
    assert flat8.einstein_mu is None
    x, y, z = flat8.coords()
    assert x.shape == (8, 1, 1)
    assert float(x.max()) == pytest.approx(7 * flat8.spacings[0])


def test_chart_validation():
    with pytest.raises(ConfigurationError):
        build_flat_torus_chart((2, 8, 8))
    with pytest.raises(ConfigurationError):
        build_flat_torus_chart((8, 8, 8), lengths=(0.0, 1.0, 1.0))
    with pytest.raises(ConfigurationError):
        build_flat_torus_chart((8, 8, 8), q=0)
    bad = np.zeros((8, 8, 8, 3, 3))
    with pytest.raises(ConfigurationError):
        GridChart((8, 8, 8), (1.0, 1.0, 1.0), 1, "supplied-metric", bad)


def test_milne_chart_declared_background(milne16):
    assert milne16.einstein_mu == -2.0 / 9.0
    np.testing.assert_array_equal(milne16.gamma_ricci,
                                  (-2.0 / 9.0) * milne16.gamma)
    # declared semantics make the background an exact Einstein fixed point
    assert np.max(np.abs(milne16.einstein_residual)) == 0.0
    assert milne16.curvature_action.shape == milne16.dims + (3, 3, 3, 3)


def test_save_load_round_trip(tmp_path):
    chart = build_flat_torus_chart((8, 8, 8), q=2, gamma_lambda0=0.25)
    g = perturbed_metric(chart, eps=0.2, seed=3)
    supplied = GridChart(chart.dims, chart.spacings, 2, "supplied-metric", g,
                         gamma_lambda0=0.25, einstein_mu=None)
    path = tmp_path / "chart.txt"
    save_chart(supplied, str(path))
    loaded = load_supplied_chart(str(path))
    np.testing.assert_array_equal(loaded.gamma, supplied.gamma)
    assert loaded.dims == supplied.dims
    assert loaded.q == 2
    assert loaded.gamma_lambda0 == 0.25
    np.testing.assert_array_equal(loaded.spacings, supplied.spacings)


def test_save_load_extra_fields(tmp_path, flat8):
    w = smooth_oneform(flat8)
    path = tmp_path / "state.txt"
    supplied = GridChart(flat8.dims, flat8.spacings, 1, "supplied-metric",
                         perturbed_metric(flat8, eps=0.1, seed=9))
    save_chart(supplied, str(path), extra_fields={"omega": w},
               scalars={"time": 0.5, "tau0": -1.0})
    meta, _, fields = parse_chart_file(str(path))
    assert meta["time"] == 0.5
    assert meta["tau0"] == -1.0
    np.testing.assert_array_equal(
        np.asarray(fields["omega"]).reshape(flat8.dims + (3,)), w)


def test_parse_rejects_garbage(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("dims 8 8\nmetric\n")
    with pytest.raises(DataError):
        parse_chart_file(str(path))
    path.write_text("dims 8 8 8\nspacings 1 1 1\nmetric\n1 2 3\n")
    with pytest.raises(DataError):
        parse_chart_file(str(path))


def test_harmonic_basis_flat_is_exact(flat8):
    g = identity_metric(flat8)
    basis = harmonic_oneform_basis(flat8, g)
    assert basis.forms.shape == (3, 8, 8, 8, 3)
    assert all(r.iterations == 0 for r in basis.reports)
    assert max(abs(r) for r in basis.rayleigh) == 0.0
    # orthonormal in the one-form inner product
    hodge = ops.MimOneFormOps(flat8, g)
    for a in range(3):
        for b in range(3):
            ip = hodge.inner(basis.forms[a], basis.forms[b])
            assert ip == pytest.approx(1.0 if a == b else 0.0, abs=1e-12)


def test_harmonic_basis_curved_count_and_orthonormality(flat8):
    g = perturbed_metric(flat8, eps=0.2, seed=21)
    basis = harmonic_oneform_basis(flat8, g)
    assert basis.forms.shape[0] == 3
    assert max(abs(r) for r in basis.rayleigh) <= 1e-8
    hodge = ops.MimOneFormOps(flat8, g)
    for a in range(3):
        for b in range(3):
            ip = hodge.inner(basis.forms[a], basis.forms[b])
            assert ip == pytest.approx(1.0 if a == b else 0.0, abs=1e-10)


def test_harmonic_projection_removes_harmonic_part(flat8, rng):
    g = perturbed_metric(flat8, eps=0.2, seed=23)
    basis = harmonic_oneform_basis(flat8, g)
    w = smooth_oneform(flat8, seed=27) + 0.7 * basis.forms[1]
    projected, coeff = basis.project_out(flat8, g, w)
    hodge = ops.MimOneFormOps(flat8, g)
    for a in range(3):
        assert abs(hodge.inner(projected, basis.forms[a])) <= 1e-10
    assert coeff.shape == (3,)
