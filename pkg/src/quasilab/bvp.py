"""Finite-difference solver for ``-Lap v = h(v)``, ``v = 0`` on the boundary, and reconstruction ``u = g(v)``.

Geometry is an interval ``[0, L]`` or a ball of radius ``R`` in ``R^N`` with
radial symmetry; in both the boundary distance is exact.  Meshes are graded
towards the boundary by the power map ``t -> t^q``.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np
from scipy.linalg import solve_banded

from .coefficients import CoefficientFamily
from .transform import TransformPack

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Interval:
    L: float = 1.0

    @property
    def radius(self) -> float:
        return 0.5 * self.L


@dataclass(frozen=True)
class Ball:
    R: float = 1.0
    N: int = 3

    @property
    def radius(self) -> float:
        return self.R


Geometry = Union[Interval, Ball]


@dataclass(frozen=True)
class Mesh:
    geometry: Geometry
    x: np.ndarray
    d: np.ndarray
    q: float

    @property
    def n(self) -> int:
        return self.x.size - 1

    @property
    def is_ball(self) -> bool:
        return isinstance(self.geometry, Ball)

    @property
    def unknowns(self) -> np.ndarray:
        """Indices of nodes carrying unknowns (all non-Dirichlet nodes)."""
        start = 0 if self.is_ball else 1
        return np.arange(start, self.n)

    @property
    def smallest_cell(self) -> float:
        return float(np.min(np.diff(self.x)))


def build_mesh(geometry: Geometry, n: int, q: float = 1.0) -> Mesh:
    """``n`` cells, graded with exponent ``q`` towards the boundary (symmetric on an interval)."""
    if n < 4:
        raise ValueError(f"n must be at least 4, got {n}")
    if not q >= 1.0:
        raise ValueError(f"grading exponent q must be >= 1, got {q}")
    t = np.linspace(0.0, 1.0, n + 1)
    if isinstance(geometry, Interval):
        L = geometry.L
        if not L > 0.0:
            raise ValueError("interval length must be positive")
        left = 0.5 * (2.0 * t) ** q
        right = 1.0 - 0.5 * (2.0 * (1.0 - t)) ** q
        x = L * np.where(t <= 0.5, left, right)
        x[0], x[-1] = 0.0, L
        d = np.minimum(x, L - x)
    elif isinstance(geometry, Ball):
        if not geometry.R > 0.0 or geometry.N < 1:
            raise ValueError("ball needs R > 0 and N >= 1")
        x = geometry.R * (1.0 - (1.0 - t) ** q)
        x[0], x[-1] = 0.0, geometry.R
        d = geometry.R - x
    else:
        raise TypeError(f"unknown geometry {geometry!r}")
    d[0] = 0.0 if isinstance(geometry, Interval) else d[0]
    d[-1] = 0.0
    return Mesh(geometry=geometry, x=x, d=d, q=float(q))


# ---------------------------------------------------------------------------
# discrete operators


def laplacian_bands(mesh: Mesh) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Coefficients (lower, diag, upper) of the 3-point Laplacian at the unknown nodes.

    Non-conservative divided-difference form, exact on quadratics; at the ball
    centre the radial operator is replaced by its limit ``N v''(0)``.
    """
    x = mesh.x
    idx = mesh.unknowns
    lo = np.zeros(idx.size)
    di = np.zeros(idx.size)
    up = np.zeros(idx.size)
    inner = idx[idx > 0]
    k = np.searchsorted(idx, inner)
    hm = x[inner] - x[inner - 1]
    hp = x[inner + 1] - x[inner]
    lo[k] = 2.0 / (hm * (hm + hp))
    up[k] = 2.0 / (hp * (hm + hp))
    di[k] = -2.0 / (hm * hp)
    if mesh.is_ball:
        N = mesh.geometry.N
        r = x[inner]
        c = (N - 1) / r
        lo[k] += c * (-hp / (hm * (hm + hp)))
        di[k] += c * ((hp - hm) / (hm * hp))
        up[k] += c * (hm / (hp * (hm + hp)))
        h0 = x[1] - x[0]
        lo[0] = 0.0
        di[0] = -2.0 * N / h0**2
        up[0] = 2.0 * N / h0**2
    return lo, di, up


def apply_laplacian(mesh: Mesh, v: np.ndarray) -> np.ndarray:
    """Discrete Laplacian of nodal values ``v`` at the unknown nodes."""
    lo, di, up = laplacian_bands(mesh)
    idx = mesh.unknowns
    left = v[np.maximum(idx - 1, 0)]
    return lo * left + di * v[idx] + up * v[idx + 1]


def gradient(mesh: Mesh, v: np.ndarray) -> np.ndarray:
    """Nodal derivative: weighted centered differences inside, first-order one-sided at the boundary."""
    x = mesh.x
    out = np.empty_like(v)
    hm = x[1:-1] - x[:-2]
    hp = x[2:] - x[1:-1]
    out[1:-1] = (
        -hp / (hm * (hm + hp)) * v[:-2]
        + (hp - hm) / (hm * hp) * v[1:-1]
        + hm / (hp * (hm + hp)) * v[2:]
    )
    out[-1] = (v[-1] - v[-2]) / (x[-1] - x[-2])
    if mesh.is_ball:
        out[0] = 0.0
    else:
        out[0] = (v[1] - v[0]) / (x[1] - x[0])
    return out


def second_difference(mesh: Mesh, w: np.ndarray) -> np.ndarray:
    """Nonuniform 3-point second derivative at interior nodes (NaN at the ends)."""
    x = mesh.x
    out = np.full_like(w, np.nan)
    hm = x[1:-1] - x[:-2]
    hp = x[2:] - x[1:-1]
    out[1:-1] = 2.0 / (hm + hp) * ((w[2:] - w[1:-1]) / hp - (w[1:-1] - w[:-2]) / hm)
    return out


# ---------------------------------------------------------------------------
# solver


@dataclass(frozen=True)
class SolverConfig:
    eps0_factor: float = 1e-2
    eps_min: float = 1e-10
    newton_tol: float = 1e-10
    max_iter: int = 100
    change_tol: float = 1e-10
    max_backtracks: int = 40


class NewtonError(RuntimeError):
    def __init__(self, message: str, last_iterate: np.ndarray, history: list[float]):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.history = history


@dataclass(frozen=True)
class Nonlinearity:
    """Right-hand side ``h(v) + source``; ``h`` and its derivative act on positive values."""

    h: Callable[[np.ndarray], np.ndarray]
    dh: Callable[[np.ndarray], np.ndarray]
    source: np.ndarray | None = None

    @classmethod
    def from_pack(cls, pack: TransformPack, source=None) -> "Nonlinearity":
        return cls(pack.h, pack.dh, source)

    @classmethod
    def constant(cls, value: float = 1.0) -> "Nonlinearity":
        return cls(lambda v: np.full_like(v, value), lambda v: np.zeros_like(v))

    @classmethod
    def zero(cls, source=None) -> "Nonlinearity":
        return cls(lambda v: np.zeros_like(v), lambda v: np.zeros_like(v), source)


@dataclass(frozen=True)
class Solution:
    mesh: Mesh
    v: np.ndarray
    epsilon_final: float
    newton_iterations: int
    residual_semilinear: np.ndarray
    u: np.ndarray | None = None
    Dv: np.ndarray | None = None
    Du: np.ndarray | None = None
    residual_quasilinear: np.ndarray | None = None
    bracket: tuple[float, float] | None = None
    bracket_ok: bool | None = None
    history: tuple[tuple[float, int, float], ...] = field(default=(), repr=False)

    def to_csv(self, path: str | Path) -> None:
        m = self.mesh
        cols = {
            "x_or_r": m.x,
            "d": m.d,
            "v": self.v,
            "u": self.u,
            "Dv": self.Dv,
            "Du": self.Du,
            "res_semilinear": self.residual_semilinear,
            "res_quasilinear": self.residual_quasilinear,
        }
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(list(cols))
            for i in range(m.x.size):
                w.writerow(["" if c is None else repr(float(c[i])) for c in cols.values()])


def _regularized(nl: Nonlinearity, eps: float):
    def h(v):
        return nl.h(np.maximum(v, eps))

    def dh(v):
        return np.where(v > eps, nl.dh(np.maximum(v, eps)), 0.0)

    return h, dh


def _newton(
    mesh: Mesh,
    nl: Nonlinearity,
    v: np.ndarray,
    eps: float,
    cfg: SolverConfig,
) -> tuple[np.ndarray, int]:
    idx = mesh.unknowns
    lo, di, up = laplacian_bands(mesh)
    h, dh = _regularized(nl, eps)
    src = np.zeros(idx.size) if nl.source is None else np.asarray(nl.source, dtype=float)[idx]
    lap_mag = np.abs(lo) + np.abs(di) + np.abs(up)

    def residual(vv):
        vi = vv[idx]
        hv = h(vi)
        g = -apply_laplacian(mesh, vv) - hv - src
        scale = np.abs(hv) + np.abs(src) + lap_mag * np.abs(vi) + np.finfo(float).tiny
        return g, scale

    history: list[float] = []
    v = v.copy()
    g, scale = residual(v)
    for it in range(cfg.max_iter + 1):
        norm = float(np.max(np.abs(g) / scale))
        history.append(norm)
        if norm <= cfg.newton_tol:
            return v, it
        if it == cfg.max_iter:
            break
        # Jacobian of -Lap v - h(v): tridiagonal
        ab = np.zeros((3, idx.size))
        ab[0, 1:] = -up[:-1]
        ab[1] = -di - dh(v[idx])
        ab[2, :-1] = -lo[1:]
        step = solve_banded((1, 1), ab, -g)
        lam = 1.0
        for _ in range(cfg.max_backtracks):
            trial = v.copy()
            trial[idx] += lam * step
            if np.all(trial[idx] > 0.0):
                gt, _ = residual(trial)
                if float(np.max(np.abs(gt) / scale)) < norm or np.max(np.abs(lam * step)) <= 1e-15 * np.max(np.abs(v)):
                    break
            lam *= 0.5
        else:
            if not np.all(trial[idx] > 0.0):
                raise NewtonError("negative iterate despite damping", v, history)
            raise NewtonError("Newton stagnated: no residual decrease", v, history)
        v = trial
        g, scale = residual(v)
        if np.max(np.abs(lam * step)) <= 4 * np.finfo(float).eps * np.max(np.abs(v)):
            history.append(float(np.max(np.abs(g) / scale)))
            return v, it + 1
    raise NewtonError(f"Newton did not converge in {cfg.max_iter} iterations", v, history)


def constant_source_solution(mesh: Mesh) -> np.ndarray:
    """Discrete solution of ``-Lap w = 1`` with zero boundary values."""
    idx = mesh.unknowns
    lo, di, up = laplacian_bands(mesh)
    ab = np.zeros((3, idx.size))
    ab[0, 1:] = -up[:-1]
    ab[1] = -di
    ab[2, :-1] = -lo[1:]
    w = np.zeros(mesh.x.size)
    w[idx] = solve_banded((1, 1), ab, np.ones(idx.size))
    return w


def bracket_constants(
    mesh: Mesh,
    nl: Nonlinearity,
    profile_d: np.ndarray,
    c_range: tuple[float, float] = (1e-3, 1e3),
    iterations: int = 60,
) -> tuple[float | None, float | None]:
    """Scales ``c1 <= c2`` making ``c1*phi(d)`` a discrete sub- and ``c2*phi(d)`` a supersolution.

    Returns ``None`` for a side that cannot be verified within ``c_range``.
    """
    idx = mesh.unknowns
    lap_phi = -apply_laplacian(mesh, profile_d)
    p = profile_d[idx]

    def excess(c: float) -> np.ndarray:
        return c * lap_phi - nl.h(c * p)

    def search(pred, want_small: bool) -> float | None:
        lo, hi = math.log(c_range[0]), math.log(c_range[1])
        end = hi if not want_small else lo
        if not pred(math.exp(end)):
            return None
        good, bad = end, (lo if not want_small else hi)
        if pred(math.exp(bad)):
            return math.exp(bad)
        for _ in range(iterations):
            mid = 0.5 * (good + bad)
            if pred(math.exp(mid)):
                good = mid
            else:
                bad = mid
        return math.exp(good)

    c2 = search(lambda c: bool(np.all(excess(c) >= 0.0)), want_small=False)
    c1 = search(lambda c: bool(np.all(excess(c) <= 0.0)), want_small=True)
    return c1, c2


def solve_semilinear(
    pack: TransformPack,
    mesh: Mesh,
    config: SolverConfig = SolverConfig(),
    *,
    profile=None,
    initial: str | np.ndarray = "over",
    nonlinearity: Nonlinearity | None = None,
    continuation: bool = True,
) -> Solution:
    """Solve ``-Lap_h v = h(v) (+ source)`` by damped Newton with epsilon-continuation.

    ``initial`` is ``"over"`` / ``"under"`` (scaled boundary profiles), ``"constant"``
    (scaled constant-source solution) or an explicit nodal array.
    """
    nl = nonlinearity or Nonlinearity.from_pack(pack)
    idx = mesh.unknowns
    c1 = c2 = None
    phi_d = None
    if profile is not None:
        phi_d = np.asarray(profile(mesh.d), dtype=float)
        c_hi = 1e3 if pack is None else min(1e3, pack.s_max / float(np.max(phi_d)))
        c1, c2 = bracket_constants(mesh, nl, phi_d, (1e-3, c_hi))

    if isinstance(initial, np.ndarray):
        v0 = initial.astype(float).copy()
    elif initial == "over" and c2 is not None:
        v0 = c2 * phi_d
    elif initial == "under" and c1 is not None:
        v0 = c1 * phi_d
    else:
        if initial in ("over", "under"):
            logger.info("bracket search failed; falling back to the constant-source iterate")
        w = constant_source_solution(mesh)
        v0 = w / np.max(w)
    v0[np.setdiff1d(np.arange(mesh.x.size), idx)] = 0.0
    if np.any(v0[idx] <= 0.0):
        raise ValueError("initial iterate must be positive at the unknown nodes")

    history: list[tuple[float, int, float]] = []
    total = 0
    v = v0
    if continuation:
        eps = config.eps0_factor * float(np.max(v0))
        while eps > config.eps_min:
            prev = v
            v, its = _newton(mesh, nl, v, eps, config)
            total += its
            change = float(np.max(np.abs(v - prev)))
            history.append((eps, its, change))
            if change < config.change_tol or eps < float(np.min(v[idx])):
                break
            eps *= 0.5
    # release the regularization completely
    eps = min(config.eps_min, 0.5 * float(np.min(v[idx])))
    v, its = _newton(mesh, nl, v, eps, config)
    total += its
    history.append((eps, its, 0.0))
    if eps > float(np.min(v[idx])):
        raise NewtonError("regularization still active at the converged iterate", v, [])

    res = np.zeros(mesh.x.size)
    src = 0.0 if nl.source is None else np.asarray(nl.source, dtype=float)[idx]
    res[idx] = -apply_laplacian(mesh, v) - nl.h(v[idx]) - src
    bracket_ok = None
    if c1 is not None and c2 is not None:
        tol = 1e-9
        bracket_ok = bool(np.all(v[idx] >= c1 * phi_d[idx] * (1 - tol)) and np.all(v[idx] <= c2 * phi_d[idx] * (1 + tol)))
    return Solution(
        mesh=mesh,
        v=v,
        epsilon_final=eps,
        newton_iterations=total,
        residual_semilinear=res,
        bracket=(c1, c2) if c1 is not None and c2 is not None else None,
        bracket_ok=bracket_ok,
        history=tuple(history),
    )


def reconstruct_u(pack: TransformPack, sol: Solution) -> Solution:
    """Attach ``u = g(v)``, ``Dv`` and ``Du = Dv / sqrt(a(u))`` plus the quasi-linear residual."""
    mesh = sol.mesh
    v = sol.v
    u = np.asarray(pack.g(np.maximum(v, 0.0)), dtype=float)
    Dv = gradient(mesh, v)
    Du = np.empty_like(Dv)
    inner = np.arange(1, mesh.n)
    Du[inner] = Dv[inner] / np.sqrt(pack.fam.a(u[inner]))
    # boundary nodes: a(0) is singular, so differentiate u directly there
    Du_direct = gradient(mesh, u)
    Du[-1] = Du_direct[-1]
    Du[0] = 0.0 if mesh.is_ball else Du_direct[0]
    out = dataclasses.replace(sol, u=u, Dv=Dv, Du=Du)
    return dataclasses.replace(out, residual_quasilinear=quasilinear_residual(pack.fam, out))


def quasilinear_residual(fam: CoefficientFamily, sol: Solution) -> np.ndarray:
    """Flux-form residual of ``-div(a(u)Du) + a'(u)/2 |Du|^2 - f(u)`` at interior nodes (0 elsewhere)."""
    mesh = sol.mesh
    x, u, Du = mesh.x, sol.u, sol.Du
    res = np.zeros_like(u)
    h = np.diff(x)
    um = 0.5 * (u[1:] + u[:-1])
    flux = fam.a(um) * np.diff(u) / h
    if mesh.is_ball:
        N = mesh.geometry.N
        rm = 0.5 * (x[1:] + x[:-1])
        flux = flux * rm ** (N - 1)
        i = np.arange(1, mesh.n)
        vol = x[i] ** (N - 1) * 0.5 * (h[i] + h[i - 1])
        div = (flux[i] - flux[i - 1]) / vol
        res[i] = -div + 0.5 * fam.da(u[i]) * Du[i] ** 2 - fam.f(u[i])
        # centre: the cell [0, h0/2] exchanges flux only through its outer face
        res[0] = -N * flux[0] / rm[0] ** (N - 1) / rm[0] - fam.f(u[0])
    else:
        i = np.arange(1, mesh.n)
        div = (flux[i] - flux[i - 1]) / (0.5 * (h[i] + h[i - 1]))
        res[i] = -div + 0.5 * fam.da(u[i]) * Du[i] ** 2 - fam.f(u[i])
    return res


def solve(pack: TransformPack, mesh: Mesh, config: SolverConfig = SolverConfig(), **kw) -> Solution:
    """``solve_semilinear`` followed by ``reconstruct_u``."""
    return reconstruct_u(pack, solve_semilinear(pack, mesh, config, **kw))


# ---------------------------------------------------------------------------
# manufactured solutions


@dataclass(frozen=True)
class ManufacturedProfile:
    value: Callable[[np.ndarray], np.ndarray]
    laplacian: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"


def sine_profile(L: float = 1.0) -> ManufacturedProfile:
    k = math.pi / L
    return ManufacturedProfile(lambda x: np.sin(k * x), lambda x: -k * k * np.sin(k * x), "sin")


def parabola_profile(L: float = 1.0) -> ManufacturedProfile:
    return ManufacturedProfile(lambda x: 0.5 * x * (L - x), lambda x: -np.ones_like(x), "x(L-x)/2")


def ball_parabola_profile(R: float = 1.0, N: int = 3) -> ManufacturedProfile:
    return ManufacturedProfile(
        lambda r: (R * R - r * r) / (2.0 * N), lambda r: -np.ones_like(r), "(R^2-r^2)/(2N)"
    )


@dataclass(frozen=True)
class ConvergenceReport:
    n: tuple[int, ...]
    errors: tuple[float, ...]
    orders: tuple[float, ...]

    @property
    def observed_order(self) -> float:
        return self.orders[-1]

    def to_dict(self) -> dict:
        return {"n": list(self.n), "errors": list(self.errors), "orders": list(self.orders)}


def manufactured_solve(
    pack: TransformPack | None,
    geometry: Geometry,
    v_star: ManufacturedProfile,
    ns: Sequence[int] = (64, 128, 256, 512),
    q: float = 1.0,
    *,
    mode: str = "h",
    config: SolverConfig = SolverConfig(),
) -> ConvergenceReport:
    """Solve ``-Lap v = h(v) + r`` with ``r = -Lap v* - h(v*)`` so that ``v*`` is exact; report max-norm errors.

    ``mode="zero"`` drops ``h`` (pure Poisson check).
    """
    errors = []
    for n in ns:
        mesh = build_mesh(geometry, n, q)
        vs = v_star.value(mesh.x)
        vs[np.setdiff1d(np.arange(mesh.x.size), mesh.unknowns)] = 0.0
        if mode == "h":
            base = Nonlinearity.from_pack(pack)
        elif mode == "zero":
            base = Nonlinearity.zero()
        else:
            raise ValueError(f"unknown mode {mode!r}")
        src = np.zeros(mesh.x.size)
        i = mesh.unknowns
        src[i] = -v_star.laplacian(mesh.x[i]) - base.h(vs[i])
        nl = Nonlinearity(base.h, base.dh, src)
        sol = solve_semilinear(pack, mesh, config, initial=0.9 * vs, nonlinearity=nl, continuation=False)
        errors.append(float(np.max(np.abs(sol.v - vs))))
    orders = [math.nan] + [
        math.log(errors[k - 1] / errors[k]) / math.log(ns[k] / ns[k - 1]) if errors[k] > 0 else math.inf
        for k in range(1, len(ns))
    ]
    return ConvergenceReport(tuple(ns), tuple(errors), tuple(orders))
