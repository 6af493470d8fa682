import numpy as np
import pytest

from quasilab.coefficients import (
    BoundedBlend,
    FamilyError,
    GridSpec,
    PowerTail,
    audit_assumptions,
    custom_family,
    make_example_family,
)


def test_mu_zero_is_constant_on_singular_region():
    fam = make_example_family(0.0, 3.0, s0=2.0)
    s = np.geomspace(1e-6, 2.0, 50)
    assert np.all(fam.a(s) == 1.0)
    assert np.allclose(fam.f(s), s**-3.0)


def test_blend_matches_value_and_slope():
    fam = make_example_family(0.5, 2.0, s0=1.0, tail=BoundedBlend(0.1))
    assert fam.a(np.array([1.0]))[0] == pytest.approx(1.0)
    assert fam.da(np.array([1.0 - 1e-12]))[0] == pytest.approx(-1.0)
    assert fam.da(np.array([1.0 + 1e-12]))[0] == pytest.approx(-1.0)
    assert fam.a(np.array([1e3]))[0] == pytest.approx(0.1, rel=1e-6)


def test_blend_rejects_large_floor():
    with pytest.raises(FamilyError) as exc:
        make_example_family(0.5, 2.0, s0=1.0, tail=BoundedBlend(2.0))
    assert exc.value.param == "a_min"


@pytest.mark.parametrize("gamma,case", [(0.9, "theorem"), (1.0, "theorem"), (1.5, "gamma_lt_1")])
def test_exponent_range_enforced(gamma, case):
    with pytest.raises(FamilyError):
        make_example_family(0.0, gamma, case=case)


@pytest.mark.parametrize("mu,gamma", [(0.5, 2.0), (0.0, 3.0), (0.25, 1.5), (0.9, 1.1)])
def test_example_families_pass_audit(mu, gamma):
    rep = audit_assumptions(make_example_family(mu, gamma))
    assert rep.passed, rep.to_dict()
    assert rep.a_floor >= 0.5 * min(1.0, 1.0) - 1e-12


def test_audit_structure_inequality_example():
    # 2 f' a = -4 s^-4 <= f a' = -s^-4 on the pure-power region
    fam = make_example_family(0.5, 2.0)
    s = np.geomspace(1e-4, 0.9, 20)
    assert np.allclose(2 * fam.df(s) * fam.a(s), -4 * s**-4.0)
    assert np.allclose(fam.f(s) * fam.da(s), -(s**-4.0))
    assert audit_assumptions(fam).verdict("structure")


def test_audit_rejects_growing_a_near_zero():
    fam = custom_family(
        a=lambda s: np.asarray(s, float), da=lambda s: np.ones_like(np.asarray(s, float)),
        f=lambda s: np.asarray(s, float) ** -2.0, df=lambda s: -2.0 * np.asarray(s, float) ** -3.0,
        mu=0.5, a0=1.0, gamma=2.0, f0=1.0,
    )
    rep = audit_assumptions(fam)
    assert not rep.passed
    assert not rep.verdict("a_limit")
    assert not rep.verdict("a_floor")


def test_audit_catches_wrong_derivative():
    fam = custom_family(
        a=lambda s: np.ones_like(np.asarray(s, float)), da=lambda s: np.zeros_like(np.asarray(s, float)),
        f=lambda s: np.asarray(s, float) ** -3.0, df=lambda s: -2.0 * np.asarray(s, float) ** -4.0,
        mu=0.0, a0=1.0, gamma=3.0, f0=1.0,
    )
    assert not audit_assumptions(fam).verdict("derivatives")


def test_power_tail_family_audits():
    fam = make_example_family(0.5, 2.0, tail=PowerTail(1.0, 0.7, 2.0, 1.0))
    rep = audit_assumptions(fam)
    assert rep.passed
    s = np.array([10.0, 100.0])
    assert np.allclose(fam.a(s), 0.7 * s)


def test_audit_grid_precondition():
    with pytest.raises(ValueError):
        audit_assumptions(make_example_family(0.0, 3.0), GridSpec(1e-4, 1e4, 400))


def test_report_serialises():
    d = audit_assumptions(make_example_family(0.5, 2.0)).to_dict()
    assert d["passed"] is True
    assert {c["name"] for c in d["checks"]} >= {"a_limit", "f_limit", "structure", "a_floor", "derivatives"}
