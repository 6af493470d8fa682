import numpy as np
import pytest

from conftest import pack_for
from quasilab.coefficients import make_example_family
from quasilab.tables import DomainError, QuadratureError, empirical_limit
from quasilab.transform import (
    build_transform,
    const_F_zero,
    const_g_infinity,
    const_g_zero,
    const_h_zero,
    convexity_transform,
    h_eval,
    tail_integral,
)


def test_identity_transform(exact_pack):
    s = np.geomspace(1e-9, 1e3, 300)
    assert np.allclose(exact_pack.g(s), s, rtol=1e-12)
    assert np.allclose(exact_pack.g_prime(s), 1.0)
    assert np.allclose(h_eval(exact_pack, s), s**-3.0, rtol=1e-10)


def test_anchor_of_pure_power_region():
    # A(1) = int_0^1 xi^(-1/2) = 2, so g(2) = 1
    pack = pack_for(0.5, 2.0)
    assert pack.g(np.array([2.0]))[0] == pytest.approx(1.0, rel=1e-8)


def test_small_s_expansion_a0_4():
    pack = build_transform(make_example_family(0.5, 2.0, a0=4.0))
    s = 10.0 ** -np.arange(3, 8)
    assert np.allclose(pack.g(s) / s**2, 1 / 16, rtol=1e-8)
    est = empirical_limit(pack.g(s) / s**2, s)
    assert est.within(0.0625, 0.01)
    h = pack.h(s) * s**3.0
    assert np.allclose(h, const_h_zero(0.5, 4.0, 2.0, 1.0), rtol=1e-8)


@pytest.mark.parametrize("mu,gamma", [(0.0, 3.0), (0.5, 2.0), (0.25, 1.5)])
def test_inversion_identity(mu, gamma):
    pack = pack_for(mu, gamma)
    s = np.geomspace(pack.s_min, pack.s_max, 500)
    assert np.max(np.abs(pack.A(pack.g(s)) / s - 1)) < 1e-8
    assert np.all(np.diff(pack.g(s)) > 0)


@pytest.mark.parametrize("mu,gamma", [(0.0, 3.0), (0.5, 2.0), (0.25, 1.5)])
def test_h_properties(mu, gamma):
    pack = pack_for(mu, gamma)
    s = np.geomspace(1e-8, pack.s_max, 400)
    h = pack.h(s)
    assert np.all(np.diff(h) <= 0)
    small = pack.h(10.0 ** -np.arange(1, 8))
    assert np.all(np.diff(small) > 0)
    # partial sums of int_1^s h settle
    from quasilab.tables import integrate_segments
    edges = np.geomspace(1.0, pack.s_max, 40)
    partial = np.cumsum(integrate_segments(pack.h, edges))
    assert partial[-1] - partial[-10] < 0.05 * partial[-1]


def test_g_lipschitz_above_delta():
    pack = pack_for(0.5, 2.0)
    s = np.linspace(0.01, pack.s_max, 20001)
    slopes = np.diff(pack.g(s)) / np.diff(s)
    assert np.max(slopes) <= 1 / np.sqrt(0.5) * (1 + 1e-6)


@pytest.mark.parametrize("gamma,t,expected", [(3.0, 1.0, 0.5), (2.0, 2.0, 0.5), (3.0, 0.1, 50.0)])
def test_tail_integral_examples(gamma, t, expected):
    fam = make_example_family(0.0, gamma)
    assert tail_integral(fam, np.array([t]))[0] == pytest.approx(expected, rel=1e-12)


def test_tail_integral_power_tail_uses_quadrature():
    from quasilab.coefficients import custom_family
    fam = custom_family(
        a=lambda s: np.ones_like(s), da=lambda s: np.zeros_like(s),
        f=lambda s: s**-3.0 * (1 + np.exp(-s)), df=lambda s: -3 * s**-4.0 * (1 + np.exp(-s)) - s**-3.0 * np.exp(-s),
        mu=0.0, a0=1.0, gamma=3.0, f0=2.0,
    )
    from scipy.integrate import quad
    ref = quad(lambda x: x**-3.0 * (1 + np.exp(-x)), 1.0, np.inf)[0]
    assert tail_integral(fam, np.array([1.0]))[0] == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize(
    "args,expected",
    [((0.0, 1.0), 1.0), ((0.5, 1.0), 0.25), ((0.5, 4.0), 0.0625)],
)
def test_const_g_zero(args, expected):
    assert const_g_zero(*args) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize(
    "args,expected",
    [((0.0, 1.0, 3.0, 1.0), 1.0), ((0.0, 1.0, 2.0, 1.0), 1.0), ((0.5, 1.0, 2.0, 1.0), 8.0)],
)
def test_const_h_zero(args, expected):
    assert const_h_zero(*args) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize(
    "args,expected",
    [((0.0, 1.0, 3.0, 1.0), 0.5), ((0.0, 1.0, 2.0, 1.0), 1.0), ((0.5, 4.0, 2.0, 1.0), 16.0)],
)
def test_const_F_zero(args, expected):
    assert const_F_zero(*args) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("args,expected", [((0.0, 1.0), 1.0), ((2.0, 1.0), 2**0.5), ((0.0, 4.0), 0.5)])
def test_const_g_infinity(args, expected):
    assert const_g_infinity(*args) == pytest.approx(expected, rel=1e-14)


def test_g_at_infinity_power_tail():
    from quasilab.coefficients import PowerTail
    pack = build_transform(make_example_family(0.5, 2.0, tail=PowerTail(1.0, 0.7, 2.0, 1.0)), s_max=1e6)
    s = np.geomspace(1e4, 1e6, 6)
    ratio = pack.g(s) / s ** (2 / 3)
    assert ratio[-1] == pytest.approx(const_g_infinity(1.0, 0.7), rel=0.02)


def test_transform_domain():
    with pytest.raises(DomainError):
        pack_for(0.0, 3.0).h(np.array([0.0]))
    with pytest.raises(DomainError):
        pack_for(0.0, 3.0).h(np.array([2e3]))


def test_convexity_transform_closed_form(exact_pack):
    ct = convexity_transform(exact_pack)
    s = np.geomspace(1e-4, 100.0, 200)
    assert np.allclose(ct.psi(s), s**2 / 2, rtol=1e-10)
    assert np.allclose(ct.H_of(s), s**-2.0 / 2, rtol=1e-12)
    assert np.allclose(ct.psi_prime(s), s, rtol=1e-12)


@pytest.mark.parametrize("mu,gamma", [(0.5, 2.0), (0.25, 1.5)])
def test_psi_increasing_and_convex(mu, gamma):
    ct = convexity_transform(pack_for(mu, gamma))
    assert np.all(np.diff(ct.psi.y) > 0)
    assert np.all(ct.psi_second(ct.s[ct.s <= ct.pack.s_max]) > 0)


def test_convexity_transform_needs_integrable_tail():
    pack = build_transform(make_example_family(0.2, 0.5, case="gamma_lt_1"))
    with pytest.raises(QuadratureError):
        convexity_transform(pack)


def test_transform_csv(tmp_path, exact_pack):
    p = tmp_path / "t.csv"
    exact_pack.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "s,g,g_prime,h"
    assert len(lines) > 100
