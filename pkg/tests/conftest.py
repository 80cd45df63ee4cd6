"""Shared fixtures and field builders for the test suite.

All random fields are built from seeded generators so every test is
deterministic.  Builders return arrays in the package's layout: grid axes
first, tensor axes last.
"""

from __future__ import annotations

import numpy as np
import pytest

from kkflow import build_flat_torus_chart, build_milne_chart

TWO_PI = 2.0 * np.pi


@pytest.fixture(scope="session")
def flat8():
    return build_flat_torus_chart((8, 8, 8))


@pytest.fixture(scope="session")
def flat16():
    return build_flat_torus_chart((16, 16, 16))


@pytest.fixture(scope="session")
def milne16():
    return build_milne_chart((16, 16, 16))


@pytest.fixture()
def rng():
    return np.random.default_rng(2024)


def smooth_scalar(chart, modes=((1, 0, 0, 0.7), (0, 1, 2, 0.3)), phase=0.4):
    """Low-frequency trig polynomial, exactly periodic on the chart."""
    x, y, z = chart.coords()
    lengths = [n * h for n, h in zip(chart.dims, chart.spacings)]
    out = np.zeros(chart.dims)
    for kx, ky, kz, amp in modes:
        arg = TWO_PI * (kx * x / lengths[0] + ky * y / lengths[1]
                        + kz * z / lengths[2])
        out += amp * np.sin(arg + phase)
        phase += 1.1
    return out


def smooth_oneform(chart, amp=1.0, seed=3):
    rng_ = np.random.default_rng(seed)
    w = np.zeros(chart.dims + (3,))
    for a in range(3):
        modes = tuple((int(rng_.integers(0, 3)), int(rng_.integers(0, 3)),
                       int(rng_.integers(0, 3)), float(rng_.uniform(0.2, 1.0)))
                      for _ in range(2))
        w[..., a] = amp * smooth_scalar(chart, modes, phase=float(rng_.uniform(0, 6)))
    return w


def smooth_sym_tensor(chart, amp=1.0, seed=5):
    rng_ = np.random.default_rng(seed)
    u = np.zeros(chart.dims + (3, 3))
    for i in range(3):
        for j in range(i, 3):
            modes = tuple((int(rng_.integers(0, 3)), int(rng_.integers(0, 3)),
                           int(rng_.integers(0, 3)), float(rng_.uniform(0.2, 1.0)))
                          for _ in range(2))
            f = amp * smooth_scalar(chart, modes, phase=float(rng_.uniform(0, 6)))
            u[..., i, j] = f
            u[..., j, i] = f
    return u


def perturbed_metric(chart, eps=0.1, seed=7):
    """SPD metric delta + eps * (smooth symmetric), safe for eps < 0.3."""
    u = smooth_sym_tensor(chart, amp=1.0, seed=seed)
    u = u / max(1.0, np.max(np.abs(u)))
    g = np.broadcast_to(np.eye(3), chart.dims + (3, 3)).copy()
    return g + eps * u


def identity_metric(chart):
    return np.broadcast_to(np.eye(3), chart.dims + (3, 3)).copy()
