import numpy as np
import pytest

from conftest import TEST_FAMILIES, pack_for, profile_for
from quasilab.bvp import (
    Ball,
    Interval,
    Nonlinearity,
    SolverConfig,
    _newton,
    apply_laplacian,
    ball_parabola_profile,
    build_mesh,
    manufactured_solve,
    parabola_profile,
    reconstruct_u,
    solve,
    solve_semilinear,
)


def test_uniform_mesh():
    m = build_mesh(Interval(1.0), 4, q=1.0)
    assert np.allclose(m.x, [0, 0.25, 0.5, 0.75, 1.0])
    assert list(m.unknowns) == [1, 2, 3]


@pytest.mark.parametrize("n", [256, 1024, 4096])
def test_graded_first_node(n):
    m = build_mesh(Interval(1.0), n, q=2.0)
    # x1 = (1/2)(2/n)^2 = 2/n^2
    assert m.x[1] == pytest.approx(2.0 / n**2, rel=1e-12)
    assert np.all(np.diff(m.x) > 0)


@pytest.mark.parametrize("n", [8, 65])
def test_ball_mesh_has_centre(n):
    m = build_mesh(Ball(1.0, 3), n, q=2.0)
    assert m.x[0] == 0.0 and m.d[0] == 1.0
    assert m.d[-1] == 0.0
    assert 0 in m.unknowns and m.n not in m.unknowns


def test_constant_source_mode():
    m = build_mesh(Interval(1.0), 64, q=1.0)
    sol = solve_semilinear(None, m, nonlinearity=Nonlinearity.constant(1.0), initial="constant")
    assert np.allclose(sol.v, m.x * (1 - m.x) / 2, atol=1e-13)
    assert np.max(sol.v) == pytest.approx(0.125, abs=1e-13)


def test_self_convergence_exact_family(exact_pack):
    maxima = []
    for n in (256, 512, 1024):
        sol = solve_semilinear(exact_pack, build_mesh(Interval(1.0), n, q=2.0), profile=profile_for(0.0, 3.0))
        maxima.append(np.max(sol.v))
        assert sol.epsilon_final <= 1e-10
        i = sol.mesh.unknowns
        assert np.max(np.abs(sol.residual_semilinear[i]) / exact_pack.h(sol.v[i])) < 1e-9
    assert np.ptp(maxima) < 5e-4 * maxima[-1]
    # closed form v = sqrt(2x(1-x)) has maximum sqrt(1/2)
    assert maxima[-1] == pytest.approx(np.sqrt(0.5), rel=1e-3)


def test_uniqueness_proxy():
    pack, prof = pack_for(0.5, 2.0), profile_for(0.5, 2.0)
    m = build_mesh(Interval(1.0), 256, q=2.0)
    over = solve_semilinear(pack, m, profile=prof, initial="over")
    under = solve_semilinear(pack, m, profile=prof, initial="under")
    assert np.max(np.abs(over.v - under.v)) < 1e-8
    assert over.bracket_ok


def test_reconstruct_identity(exact_pack):
    sol = solve(exact_pack, build_mesh(Interval(1.0), 128, q=2.0), profile=profile_for(0.0, 3.0))
    assert np.allclose(sol.u, sol.v, rtol=1e-12, atol=0)
    inner = np.arange(1, 128)
    assert np.allclose(sol.Du[inner], sol.Dv[inner], rtol=1e-10)
    # a = 1: quasilinear residual coincides with the semilinear one
    assert np.allclose(sol.residual_quasilinear, sol.residual_semilinear, rtol=1e-9, atol=1e-9 * np.max(sol.v))


def test_reconstruct_anchor():
    pack = pack_for(0.5, 2.0)
    m = build_mesh(Interval(1.0), 4, q=1.0)
    from quasilab.bvp import Solution
    v = np.array([0.0, 1.0, 2.0, 1.0, 0.0])
    sol = reconstruct_u(pack, Solution(m, v, 0.0, 0, np.zeros(5)))
    assert sol.u[2] == pytest.approx(1.0, rel=1e-8)


def test_chain_rule_consistency():
    pack, prof = pack_for(0.5, 2.0), profile_for(0.5, 2.0)
    errs = []
    for n in (128, 256):
        sol = solve(pack, build_mesh(Interval(1.0), n, q=1.0), profile=prof)
        x, u, v = sol.mesh.x, sol.u, sol.v
        sel = (x > 0.25) & (x < 0.75)
        i = np.nonzero(sel)[0]
        du = (u[i + 1] - u[i - 1]) / (x[i + 1] - x[i - 1])
        dv = (v[i + 1] - v[i - 1]) / (x[i + 1] - x[i - 1])
        errs.append(np.max(np.abs(du - dv * pack.g_prime(v[i]))))
    assert errs[1] < errs[0] / 3


def test_parabola_exact():
    rep = manufactured_solve(None, Interval(1.0), parabola_profile(1.0), ns=(8, 16), mode="zero")
    assert max(rep.errors) < 1e-14


def test_ball_parabola_exact():
    rep = manufactured_solve(None, Ball(1.0, 3), ball_parabola_profile(1.0, 3), ns=(8, 16, 32), q=1.0, mode="zero")
    assert max(rep.errors) < 1e-14


def test_ball_centre_stencil():
    m = build_mesh(Ball(1.0, 3), 16, q=1.0)
    v = (1 - m.x**2) / 6
    assert np.allclose(apply_laplacian(m, v), -1.0, atol=1e-12)


@pytest.mark.parametrize("mu,gamma", TEST_FAMILIES)
def test_ball_solution_monotone_in_r(mu, gamma):
    sol = solve(pack_for(mu, gamma), build_mesh(Ball(1.0, 3), 128, q=2.0), profile=profile_for(mu, gamma))
    assert np.all(np.diff(sol.v) < 0)
    assert np.all(sol.v[:-1] > 0)
    assert sol.bracket_ok


def test_monotone_in_regularization():
    pack = pack_for(0.5, 2.0)
    m = build_mesh(Interval(1.0), 128, q=2.0)
    nl = Nonlinearity.from_pack(pack)
    start = np.sqrt(np.maximum(m.d, 0.0))
    start[[0, -1]] = 0.0
    cfg = SolverConfig()
    big, _ = _newton(m, nl, start + 0.0, 1e-2, cfg)
    small, _ = _newton(m, nl, big, 1e-3, cfg)
    smaller, _ = _newton(m, nl, small, 1e-5, cfg)
    inner = m.unknowns
    assert np.all(small[inner] >= big[inner] - 1e-12)
    assert np.all(smaller[inner] >= small[inner] - 1e-12)


def test_solution_csv(tmp_path, exact_pack):
    sol = solve(exact_pack, build_mesh(Interval(1.0), 32, q=2.0), profile=profile_for(0.0, 3.0))
    p = tmp_path / "s.csv"
    sol.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "x_or_r,d,v,u,Dv,Du,res_semilinear,res_quasilinear"
    assert len(lines) == 34
