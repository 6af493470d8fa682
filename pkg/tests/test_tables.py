import math

import numpy as np
import pytest

from quasilab.tables import (
    DomainError,
    MonotoneTable,
    QuadratureError,
    empirical_limit,
    integrate_segments,
)


def power_table(p=1.5, c=2.0, lo=1e-6, hi=10.0, n=200):
    x = np.geomspace(lo, hi, n)
    return MonotoneTable(x, c * x**p, c * p * x ** (p - 1))


def test_exact_on_pure_power():
    t = power_table()
    x = np.geomspace(1e-6, 10.0, 1001)
    assert np.max(np.abs(t(x) / (2 * x**1.5) - 1)) < 1e-12
    assert np.max(np.abs(t.derivative(x) / (3 * x**0.5) - 1)) < 1e-10


def test_power_continuation_below_first_node():
    t = power_table()
    x = np.array([1e-12, 1e-9, 0.0])
    assert t(x[:2]) == pytest.approx(2 * x[:2] ** 1.5, rel=1e-10)
    assert t(x[2:])[0] == 0.0


def test_no_extrapolation_above_top():
    t = power_table()
    with pytest.raises(DomainError):
        t(np.array([10.5]))
    with pytest.raises(DomainError):
        t.inverse(np.array([t.y_max * 1.01]))


def test_inverse_roundtrip_general_monotone():
    x = np.geomspace(1e-4, 5.0, 300)
    y = x + np.sin(x) ** 2 * 0.3 + x**2
    dy = 1 + 0.6 * np.sin(x) * np.cos(x) + 2 * x
    t = MonotoneTable(x, y, dy)
    yy = np.geomspace(y[0], y[-1], 777)
    assert np.max(np.abs(t(t.inverse(yy)) / yy - 1)) < 1e-10


def test_inverse_view():
    t = power_table()
    inv = t.inverted()
    s = np.geomspace(1e-8, t.y_max, 50)
    assert np.allclose(inv(s), (s / 2.0) ** (1 / 1.5), rtol=1e-10)
    assert np.allclose(inv.derivative(s), 1.0 / t.derivative(inv(s)), rtol=1e-8)


def test_rejects_non_monotone():
    x = np.array([1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        MonotoneTable(x, np.array([1.0, 3.0, 2.0]))


def test_fritsch_carlson_keeps_monotone():
    # step-like data invites overshoot without the limiter
    x = np.linspace(1.0, 10.0, 10)
    y = np.array([1, 1.001, 1.002, 5, 5.001, 5.002, 5.003, 9, 9.001, 9.002])
    t = MonotoneTable(x, y)
    xx = np.linspace(1.0, 10.0, 5001)
    assert np.all(np.diff(t(xx)) >= 0)


def test_integrate_segments_smooth_and_singular():
    edges = np.linspace(0.0, math.pi, 5)
    assert np.sum(integrate_segments(np.sin, edges)) == pytest.approx(2.0, rel=1e-13)
    edges = np.geomspace(1e-12, 1.0, 30)
    val = np.sum(integrate_segments(lambda x: x**-0.5, edges))
    assert val == pytest.approx(2.0 - 2e-6, rel=1e-12)


def test_integrate_segments_raises_on_nan():
    with pytest.raises(QuadratureError) as exc:
        integrate_segments(lambda x: np.where(x > 0.5, np.nan, x), np.array([0.0, 1.0]))
    assert exc.value.subinterval[0] <= 0.5 <= exc.value.subinterval[1]


def test_empirical_limit_examples():
    s = 10.0 ** -np.arange(2, 6)
    est = empirical_limit(np.full(4, 3.0), s)
    assert est.value == 3.0 and est.error == 0.0 and est.converged
    est = empirical_limit(1 + s, s)
    assert est.value == pytest.approx(1.0, abs=1e-5)


def test_empirical_limit_needs_four_samples():
    with pytest.raises(ValueError):
        empirical_limit([1.0, 1.0, 1.0])


def test_empirical_limit_flags_oscillation():
    vals = np.array([1.0, 2.0, 0.5, 3.0, 0.1])
    assert not empirical_limit(vals).converged
