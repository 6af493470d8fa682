"""Boundary-rate fits, two-sided and gradient bounds, regularity classes and the H^1 test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .bvp import Mesh, Solution, gradient, second_difference
from .fits import RateFit, fit_power_law
from .phi import PhiProfile
from .tables import integrate_segments
from .transform import ConvexityTransform, TransformPack

__all__ = [
    "RateFit",
    "RegularityReport",
    "BoundFit",
    "default_window",
    "fit_boundary_rate",
    "fit_gradient_rate",
    "gradient_sup_stability",
    "classify_regularity",
    "H1Evidence",
    "h1_criterion",
    "dirichlet_energy",
    "energy_trend",
    "global_bounds_check",
    "holder_gradient_check",
    "ConvexityReport",
    "convexity_check",
]


def default_window(mesh: Mesh) -> tuple[float, float]:
    """``[5 * smallest cell, 0.05 * domain radius]``."""
    return 5.0 * mesh.smallest_cell, 0.05 * mesh.geometry.radius


def _window_nodes(mesh: Mesh, window: tuple[float, float] | None) -> tuple[np.ndarray, tuple[float, float]]:
    lo, hi = window or default_window(mesh)
    sel = (mesh.d >= lo) & (mesh.d <= hi)
    if not mesh.is_ball:
        sel &= mesh.x <= 0.5 * mesh.geometry.L  # one side of the symmetric interval
    idx = np.flatnonzero(sel)
    if idx.size <= 5:
        raise ValueError(f"fit window [{lo:.3g}, {hi:.3g}] holds only {idx.size} nodes")
    return idx, (lo, hi)


def fit_boundary_rate(values: np.ndarray, mesh: Mesh, window: tuple[float, float] | None = None) -> RateFit:
    """Least-squares ``log|values|`` against ``log d`` on the nodes whose distance lies in ``window``."""
    idx, win = _window_nodes(mesh, window)
    fit = fit_power_law(mesh.d[idx], values[idx])
    note = "" if math.log10(win[1] / win[0]) >= 1.5 else "window spans fewer than 1.5 decades"
    return RateFit(fit.exponent, fit.amplitude, fit.r_squared, win, fit.n_points, note)


def fit_gradient_rate(sol: Solution, window: tuple[float, float] | None = None) -> RateFit:
    """Rate fit of ``|Du|``.  In the Lipschitz regime the exponent is expected near 0."""
    fam_note = ""
    fit = fit_boundary_rate(np.abs(sol.Du), sol.mesh, window)
    if fit.exponent > -0.05:
        fam_note = "bounded gradient regime; check sup stability under refinement"
    return RateFit(fit.exponent, fit.amplitude, fit.r_squared, fit.window, fit.n_points, fam_note or fit.note)


def gradient_sup_stability(solutions: Sequence[Solution]) -> list[float]:
    """``max|Du|`` over interior nodes for each solution, finest last."""
    return [float(np.max(np.abs(s.Du[1:-1]))) for s in solutions]


# ---------------------------------------------------------------------------
# regularity classes


@dataclass(frozen=True)
class RegularityReport:
    gamma: float
    mu: float
    lipschitz: bool
    holder_exponent: float | None
    in_H10: bool | None
    applicable_case: Literal["theorem_1_1", "remark_2_1_gamma_lt_1", "excluded_gamma_eq_1"]
    lipschitz_threshold: float
    h1_threshold: float

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "mu": self.mu,
            "lipschitz": self.lipschitz,
            "holder_exponent": self.holder_exponent,
            "in_H10": self.in_H10,
            "applicable_case": self.applicable_case,
            "thresholds": {"lipschitz": self.lipschitz_threshold, "h1": self.h1_threshold},
        }


def classify_regularity(gamma: float, mu: float) -> RegularityReport:
    """Regularity class of the solution as a function of ``(gamma, mu)``.

    Lipschitz for ``1 < gamma <= 1 + 2 mu`` and for ``gamma < 1``; Hoelder with
    exponent ``2/(1+gamma-2mu)`` for ``gamma > 1 + 2 mu``; in H^1_0 iff
    ``gamma < 3 - 2 mu``.
    """
    if not (gamma > 0.0 and 0.0 <= mu < 1.0):
        raise ValueError("need gamma > 0 and 0 <= mu < 1")
    lip_t, h1_t = 1.0 + 2.0 * mu, 3.0 - 2.0 * mu
    if gamma == 1.0:
        return RegularityReport(gamma, mu, False, None, None, "excluded_gamma_eq_1", lip_t, h1_t)
    if gamma < 1.0:
        return RegularityReport(gamma, mu, True, None, True, "remark_2_1_gamma_lt_1", lip_t, h1_t)
    lipschitz = gamma <= lip_t
    holder = None if lipschitz else 2.0 / (1.0 + gamma - 2.0 * mu)
    in_h1 = gamma < h1_t  # strict: the threshold itself is not in H^1_0
    return RegularityReport(gamma, mu, lipschitz, holder, in_h1, "theorem_1_1", lip_t, h1_t)


# ---------------------------------------------------------------------------
# H^1 criterion


@dataclass(frozen=True)
class H1Evidence:
    verdict: bool | None
    s: tuple[float, ...]
    partial_integrals: tuple[float, ...]
    increment_exponent: float
    integrand_exponent: float
    energies: tuple[float, ...] = ()
    energy_verdict: str | None = None

    @property
    def growth_exponent(self) -> float:
        """Exponent ``p`` of the growth ``s^p`` of the partial integrals (0 when they converge)."""
        return min(self.increment_exponent, 0.0)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "s": list(self.s),
            "partial_integrals": list(self.partial_integrals),
            "increment_exponent": self.increment_exponent,
            "integrand_exponent": self.integrand_exponent,
            "energies": list(self.energies),
            "energy_verdict": self.energy_verdict,
        }


def dirichlet_energy(sol: Solution) -> float:
    """``int |Du|^2`` of the piecewise-linear interpolant (radial measure ``r^(N-1) dr`` on a ball)."""
    m = sol.mesh
    h = np.diff(m.x)
    slopes = np.diff(sol.u) / h
    if m.is_ball:
        w = (0.5 * (m.x[1:] + m.x[:-1])) ** (m.geometry.N - 1)
    else:
        w = 1.0
    return float(np.sum(w * slopes**2 * h))


def energy_trend(energies: Sequence[float]) -> str:
    """``"stable"`` if successive increments shrink geometrically, ``"divergent"`` if they do not.

    Increments that stay roughly constant per refinement (log growth) count as divergent.
    """
    e = np.asarray(energies, dtype=float)
    inc = np.diff(e)
    if inc.size < 2:
        raise ValueError("need energies on at least three meshes")
    ratios = np.abs(inc[1:]) / np.maximum(np.abs(inc[:-1]), np.finfo(float).tiny)
    if np.all(inc > 0.0) and np.all(ratios >= 0.9):
        return "divergent"
    if np.all(ratios < 1.0) and abs(inc[-1]) <= 0.02 * abs(e[-1]):
        return "stable"
    return "inconclusive"


def h1_criterion(
    pack: TransformPack,
    profile: PhiProfile,
    gamma: float,
    mu: float,
    *,
    s_values: Sequence[float] = tuple(10.0 ** -k for k in range(2, 7)),
    solutions: Sequence[Solution] = (),
) -> H1Evidence:
    """Analytic verdict ``gamma < 3 - 2 mu`` plus numerical evidence.

    Evidence: partial integrals ``int_s^1 phi h(phi)`` at decreasing ``s`` and
    the log-log slope of their increments (negative slope: divergence), and,
    when solutions on refined meshes are supplied, their Dirichlet energies.
    """
    reg = classify_regularity(gamma, mu)
    # only the strict inequality is claimed; the threshold gets evidence without a verdict
    verdict = None if gamma == 3.0 - 2.0 * mu else reg.in_H10
    s = np.sort(np.asarray(s_values, dtype=float))[::-1]

    def integrand(x):
        p = profile(x)
        return p * pack.h(p)

    edges = np.concatenate([s[::-1], [1.0]])
    pieces = integrate_segments(integrand, edges, rtol=1e-11)
    partial = np.cumsum(pieces[::-1])  # from s[0] down to s[-1]
    increments = np.diff(np.concatenate([[0.0], partial]))
    slope = float(np.polyfit(np.log(s[1:]), np.log(increments[1:]), 1)[0])
    energies: tuple[float, ...] = tuple(dirichlet_energy(x) for x in solutions)
    verdict_e = energy_trend(energies) if len(energies) >= 3 else None
    return H1Evidence(
        verdict=verdict,
        s=tuple(float(x) for x in s),
        partial_integrals=tuple(float(x) for x in partial),
        increment_exponent=slope,
        integrand_exponent=(2.0 - 2.0 * gamma) / (1.0 + gamma - 2.0 * mu),
        energies=energies,
        energy_verdict=verdict_e,
    )


# ---------------------------------------------------------------------------
# bounds


@dataclass(frozen=True)
class BoundFit:
    lambda1: float
    lambda2: float
    lambda3: float
    lambda4: float
    max_slack: float
    sandwich_fraction: float
    gradient_fraction: float
    search_range: tuple[float, float] = (1e-3, 1e3)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("lambda1", "lambda2", "lambda3", "lambda4", "max_slack", "sandwich_fraction", "gradient_fraction")}


def _bisect(pred, lo: float, hi: float, iterations: int, want: str) -> float | None:
    """Largest (``want="max"``) or smallest (``"min"``) Lambda in [lo, hi] with ``pred`` true.

    ``pred`` must be monotone: true below the threshold for ``max``, above it for ``min``.
    """
    a, b = math.log(lo), math.log(hi)
    if want == "max":
        if not pred(lo):
            return None
        if pred(hi):
            return hi
        good, bad = a, b
    else:
        if not pred(hi):
            return None
        if pred(lo):
            return lo
        good, bad = b, a
    for _ in range(iterations):
        mid = 0.5 * (good + bad)
        if pred(math.exp(mid)):
            good = mid
        else:
            bad = mid
    return math.exp(good)


def global_bounds_check(
    sol: Solution,
    profile: PhiProfile,
    pack: TransformPack,
    search_range: tuple[float, float] = (1e-3, 1e3),
    iterations: int = 60,
) -> BoundFit:
    """Fit ``g(L1 phi(d)) <= u <= g(L2 phi(d))`` and ``|Du| <= L3 [d h(L4 phi(d)) + phi(d)/d] / sqrt(a(u))``."""
    m = sol.mesh
    inner = np.arange(1, m.n) if not m.is_ball else np.arange(0, m.n)
    d = m.d[inner]
    u = sol.u[inner]
    phi_d = profile(d)
    cap = pack.s_max / float(np.max(phi_d))
    lo, hi = search_range[0], min(search_range[1], cap)

    # exact comparisons, so the reported slack is >= 0 by construction
    def below(lam: float) -> bool:
        return bool(np.all(pack.g(lam * phi_d) <= u))

    def above(lam: float) -> bool:
        return bool(np.all(pack.g(lam * phi_d) >= u))

    lam1 = _bisect(below, lo, hi, iterations, "max")
    lam2 = _bisect(above, lo, hi, iterations, "min")
    if lam1 is None or lam2 is None:
        raise ValueError(f"no bracketing constants within [{lo:.3g}, {hi:.3g}]")
    lower, upper = pack.g(lam1 * phi_d), pack.g(lam2 * phi_d)
    frac = float(np.mean((lower <= u) & (upper >= u)))
    slack = float(np.min(np.log(u / lower)))

    lam4 = lam1
    grad = np.abs(sol.Du[inner])
    bound = (d * pack.h(lam4 * phi_d) + phi_d / d) / np.sqrt(pack.fam.a(u))
    lam3 = float(np.max(grad / bound))
    if not math.isfinite(lam3):
        raise ValueError("gradient bound has no finite constant")
    gfrac = float(np.mean(grad <= lam3 * bound * (1 + 1e-12)))
    return BoundFit(lam1, lam2, lam3, lam4, slack, frac, gfrac, (lo, hi))


def holder_gradient_check(
    sol: Solution, gamma: float, mu: float, window: tuple[float, float] | None = None
) -> float:
    """``max |D(u^((1+gamma-2mu)/2))|`` over nodes with boundary distance in ``window`` (default: all)."""
    if not gamma > 1.0 + 2.0 * mu:
        raise ValueError("Hoelder check applies only when gamma > 1 + 2 mu")
    m = sol.mesh
    w = sol.u ** ((1.0 + gamma - 2.0 * mu) / 2.0)
    dw = np.abs(gradient(m, w))
    if window is None:
        sel = np.ones(m.x.size, dtype=bool)
    else:
        sel = (m.d >= window[0]) & (m.d <= window[1])
    return float(np.max(dw[sel]))


@dataclass(frozen=True)
class ConvexityReport:
    w: np.ndarray = field(repr=False)
    second_differences: np.ndarray = field(repr=False)
    min_second_difference: float
    worst_distance: float
    n_negative: int
    negative_interior: bool
    zero_boundary: bool
    verdict: Literal["convex", "not convex"]

    def to_dict(self) -> dict:
        return {
            "min_second_difference": self.min_second_difference,
            "worst_distance": self.worst_distance,
            "n_negative": self.n_negative,
            "negative_interior": self.negative_interior,
            "zero_boundary": self.zero_boundary,
            "verdict": self.verdict,
        }


def convexity_check(sol: Solution, ct: ConvexityTransform, tol: float = 1e-8) -> ConvexityReport:
    """``w = -psi(v)`` and its discrete second differences (interval geometry only)."""
    m = sol.mesh
    if m.is_ball:
        raise ValueError("convexity check is implemented for the interval only")
    w = -np.asarray(ct.psi(sol.v), dtype=float)
    d2 = second_difference(m, w)
    inner = d2[1:-1]
    scale = max(float(np.max(np.abs(w))), 1.0)
    worst = int(np.argmin(inner)) + 1
    return ConvexityReport(
        w=w,
        second_differences=d2,
        min_second_difference=float(inner[worst - 1]),
        worst_distance=float(m.d[worst]),
        n_negative=int(np.sum(inner < -tol * scale)),
        negative_interior=bool(np.all(w[1:-1] < 0.0)),
        zero_boundary=bool(w[0] == 0.0 and w[-1] == 0.0),
        verdict="convex" if np.all(inner >= -tol * scale) else "not convex",
    )
