"""Analytical test problems: closed-form values and branch continuity."""

import math

import numpy as np
import pytest

from cag.errors import InvalidParameter
from cag.solvers import (
    CRITICAL_WINDOW,
    SpringConfig,
    get_solver,
    label_samples,
    spring_displacement,
    spring_solver,
    wavelet,
    wavelet_solver,
)


def test_wavelet_hand_value():
    # 1 + sin(6 * pi/12) * exp(-(pi/12)^2 / 2), worked out independently
    t = math.pi / 12
    expected = 1.0 + math.sin(math.pi / 2) * math.exp(-(t * t) / 2)
    assert wavelet(t) == pytest.approx(1.966311087632226, abs=1e-15)
    assert wavelet(t) == pytest.approx(expected, abs=1e-15)


def test_wavelet_shape_and_limits():
    assert wavelet(0.0) == 1.0
    # symmetric envelope, odd oscillation: w(t) + w(-t) = 2
    for t in (0.3, 1.7, 4.1):
        assert wavelet(t) + wavelet(-t) == pytest.approx(2.0, abs=1e-15)
    # flattens to 1 far from the origin
    assert abs(wavelet(15.0) - 1.0) < 1e-40
    out = wavelet(np.linspace(-1, 1, 5))
    assert out.shape == (5,)


def test_spring_default_config():
    cfg = SpringConfig()
    assert cfg.mass == 0.1 and cfg.stiffness == 200.0
    wn = math.sqrt(cfg.stiffness / cfg.mass)
    assert wn == pytest.approx(math.sqrt(2000.0), rel=1e-15)
    grid = cfg.time_grid()
    assert grid.shape == (200,)
    assert grid[0] == 0.0 and grid[-1] == 1.0


def test_spring_initial_conditions():
    # released from rest at d0: x(0) = d0 on every branch
    for zeta in (0.0, 0.4, 1.0, 1.6):
        d = spring_displacement(zeta)
        assert d.shape == (200,)
        assert d[0] == pytest.approx(0.1, abs=1e-15)


def test_spring_underdamped_hand_value():
    # zeta=0.5 at t=0.1 against the textbook formula evaluated by hand
    cfg = SpringConfig(n_time=11)  # grid 0, 0.1, ..., 1.0
    zeta = 0.5
    wn = math.sqrt(2000.0)
    wd = wn * math.sqrt(1 - zeta**2)
    t = 0.1
    expected = math.exp(-zeta * wn * t) * (
        0.1 * math.cos(wd * t) + (zeta * wn * 0.1 / wd) * math.sin(wd * t)
    )
    assert spring_displacement(zeta, cfg)[1] == pytest.approx(expected, rel=1e-14)


def test_spring_undamped_is_pure_cosine():
    cfg = SpringConfig(n_time=201)
    d = spring_displacement(0.0, cfg)
    wn = math.sqrt(2000.0)
    expected = 0.1 * np.cos(wn * cfg.time_grid())
    np.testing.assert_allclose(d, expected, atol=1e-15)


def test_spring_critical_branch_hand_value():
    wn = math.sqrt(2000.0)
    d = spring_displacement(1.0)
    t = SpringConfig().time_grid()[7]
    expected = math.exp(-wn * t) * (0.1 + 0.1 * wn * t)
    assert d[7] == pytest.approx(expected, rel=1e-14)


def test_spring_overdamped_hand_value():
    zeta = 2.0
    wn = math.sqrt(2000.0)
    gap = math.sqrt(3.0)
    r1, r2 = (zeta - gap) * wn, (zeta + gap) * wn
    t = SpringConfig().time_grid()[3]
    expected = (-r2 * math.exp(-r1 * t) + r1 * math.exp(-r2 * t)) * 0.1 / (r1 - r2)
    assert spring_displacement(zeta)[3] == pytest.approx(expected, rel=1e-13)


def test_spring_branches_join_continuously():
    eps = 10 * CRITICAL_WINDOW
    at_one = spring_displacement(1.0)
    below = spring_displacement(1.0 - eps)
    above = spring_displacement(1.0 + eps)
    np.testing.assert_allclose(below, at_one, atol=1e-6)
    np.testing.assert_allclose(above, at_one, atol=1e-6)
    # inside the window the critical form is used exactly
    np.testing.assert_array_equal(spring_displacement(1.0 + CRITICAL_WINDOW / 2), at_one)


def test_spring_decay_envelope():
    # any damped response must decay overall; heavier damping ends smaller
    light = spring_displacement(0.1)
    heavy = spring_displacement(0.9)
    assert abs(light[-1]) < 0.1
    assert abs(heavy[-1]) < abs(light[-1])


def test_spring_rejects_bad_inputs():
    with pytest.raises(InvalidParameter):
        spring_displacement(-0.1)
    with pytest.raises(InvalidParameter):
        spring_displacement(float("nan"))
    with pytest.raises(InvalidParameter):
        SpringConfig(mass=0.0)
    with pytest.raises(InvalidParameter):
        SpringConfig(n_time=1)


def test_get_solver_lookup():
    assert get_solver("wavelet").name == "wavelet"
    spring = get_solver("spring", n_time=50)
    assert spring(0.5).shape == (50,)
    with pytest.raises(InvalidParameter):
        get_solver("pendulum")
    with pytest.raises(InvalidParameter):
        get_solver("wavelet", n_time=50)


def test_solver_call_returns_1d_field():
    w = wavelet_solver()
    out = w(0.25)
    assert out.shape == (1,)
    assert out[0] == pytest.approx(wavelet(0.25), abs=1e-15)
    s = spring_solver()
    assert s(0.3).shape == (200,)


def test_label_samples_builds_sorted_dataset():
    ds = label_samples(wavelet_solver(), [2.0, -1.0, 0.5])
    assert np.array_equal(ds.inputs, [-1.0, 0.5, 2.0])
    assert ds.outputs.shape == (1, 3)
    assert ds.outputs[0, 1] == pytest.approx(wavelet(0.5), abs=1e-15)


def test_label_samples_empty_and_validation():
    ds = label_samples(wavelet_solver(), [])
    assert ds.m == 0
    with pytest.raises(InvalidParameter):
        label_samples(wavelet_solver(), [[0.0, 1.0]])
