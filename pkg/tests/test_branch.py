import math

import numpy as np
import pytest

from wkbflow.branch import (BranchedPath, action, aligned_sqrt, continue_sqrt, gauss_kronrod,
                            path_integral)
from wkbflow.errors import BranchError, ConfigError, QuadratureError
from wkbflow.polynomial import ComplexPolynomial, TurningPoint

Q_X = ComplexPolynomial([0, 1])
Q_WELL = ComplexPolynomial([1, 0, -1])


def circle(n=64, turns=1):
    return np.exp(2j * np.pi * np.linspace(0, turns, n * turns + 1))


def test_gauss_kronrod_on_smooth_and_oscillatory():
    v, err = gauss_kronrod(lambda s: np.exp(3j * s), 0.0, 2.0)
    assert abs(v - (np.exp(6j) - 1) / 3j) < 1e-13
    assert err < 1e-12
    v, _ = gauss_kronrod(lambda s: np.sqrt(s), 0.0, 1.0, tol=1e-12)
    assert abs(v - 2 / 3) < 1e-10


def test_gauss_kronrod_reports_failure():
    with pytest.raises(QuadratureError), np.errstate(divide="ignore"):
        gauss_kronrod(lambda s: 1.0 / (s - 0.5) ** 2, 0.0, 1.0)
    with pytest.raises(QuadratureError):
        gauss_kronrod(lambda s: np.sin(1 / (s + 1e-9)), 0.0, 1.0, max_intervals=20)


def test_principal_branch_on_positive_reals():
    bp = continue_sqrt(Q_X, np.linspace(1, 4, 7))
    np.testing.assert_allclose(bp.sqrt_values, np.sqrt(np.linspace(1, 4, 7)), rtol=1e-15)
    assert np.all(np.asarray(bp.sqrt_values).imag == 0)


def test_circle_monodromy():
    once = continue_sqrt(Q_X, circle())
    assert abs(once.sqrt_values[-1] + 1) < 1e-12
    twice = continue_sqrt(Q_X, circle(turns=2))
    assert abs(twice.sqrt_values[-1] - 1) < 1e-12


def test_flipping_base_sign_negates_every_value():
    path = [2 + 1j, 1.5j, -1 + 0.5j]
    a = continue_sqrt(Q_WELL, path, 1)
    b = continue_sqrt(Q_WELL, path, -1)
    np.testing.assert_array_equal(np.asarray(a.sqrt_values), -np.asarray(b.sqrt_values))
    np.testing.assert_array_equal(np.asarray(a.flipped().sqrt_values), np.asarray(b.sqrt_values))


def test_continuity_certificate_after_refinement():
    # a coarse path around both turning points forces refinement
    bp = continue_sqrt(Q_WELL, [2j, -2, -2j, 2, 2j])
    s = np.asarray(bp.sqrt_values)
    w = np.asarray(bp.waypoints)
    assert len(w) > 5
    assert np.all(np.abs(np.angle(s[1:] / s[:-1])) < np.pi / 2)
    np.testing.assert_allclose(s ** 2, Q_WELL(w), rtol=1e-10)


def test_path_through_turning_point_is_rejected():
    with pytest.raises(BranchError):
        continue_sqrt(Q_WELL, [0.5, 1.5])


def test_action_examples():
    a = TurningPoint(0j, 1)
    assert abs(action(Q_X, a, 1.0).value - 2 / 3) < 1e-12
    assert action(Q_X, a, 0.0).value == 0
    right = TurningPoint(1 + 0j, 1)
    # branch with sqrt(Q) > 0 on (-1, 1)
    val = action(Q_WELL, right, 0.0).value
    assert abs(val + math.pi / 4) < 1e-12


def test_action_from_double_turning_point():
    # Q = x^2, S_0(x) = x^2/2 on the principal branch near x = 1
    Q = ComplexPolynomial([0, 0, 1])
    v = action(Q, TurningPoint(0j, 2), 1 + 1j).value
    assert abs(v - (1 + 1j) ** 2 / 2) < 1e-12


def test_action_closed_form_for_airy_potential():
    rng = np.random.default_rng(0)
    a = TurningPoint(0j, 1)
    for x in rng.uniform(0.2, 2, 5) * np.exp(1j * rng.uniform(-2.5, 2.5, 5)):
        assert abs(action(Q_X, a, x).value - 2 / 3 * x ** 1.5) < 1e-12


def test_action_additivity_and_sign_covariance():
    a = TurningPoint(1 + 0j, 1)
    x1, x2 = 0.5 + 0.7j, -0.3 + 1.2j
    s1 = action(Q_WELL, a, x1, path=[1, x1])
    s2 = action(Q_WELL, a, x2, path=[1, x1, x2])
    seg, _ = path_integral(Q_WELL, continue_sqrt(Q_WELL, [x1, x2], start_sqrt=s1.sqrt_end))
    assert abs(s1.value + seg[-1] - s2.value) < 1e-8
    neg = action(Q_WELL, a, x2, path=[1, x1, x2], base_sign=-1)
    assert neg.value == -s2.value


def test_action_path_must_start_at_base():
    with pytest.raises(ConfigError):
        action(Q_X, TurningPoint(0j, 1), 1.0, path=[0.1, 1.0])


def test_aligned_sqrt_picks_the_closer_root():
    assert aligned_sqrt(4.0, -1.0) == -2
    assert aligned_sqrt(-4.0, 1j) == 2j


def test_branched_path_json():
    bp = BranchedPath([1, 2], [1, 2 ** 0.5], 1, [0, 1])
    d = bp.to_json()
    assert d["waypoints"][0] == [1.0, 0.0]
