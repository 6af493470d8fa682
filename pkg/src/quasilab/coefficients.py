"""Coefficient families (a, f) and a numerical audit of the standing assumptions.

A family bundles the diffusion ``a`` and the source ``f`` of

    -div(a(u) Du) + a'(u)/2 |Du|^2 = f(u),   u > 0 in the domain, u = 0 on the boundary,

together with the asymptotic data used everywhere downstream:
``a(s) s^(2 mu) -> a0`` and ``f(s) s^gamma -> f0`` as ``s -> 0+``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Union

import numpy as np

from .tables import empirical_limit

Evaluator = Callable[[np.ndarray], np.ndarray]


class FamilyError(ValueError):
    """Invalid family parameters; ``param`` names the offending field."""

    def __init__(self, param: str, message: str):
        super().__init__(f"{param}: {message}")
        self.param = param


@dataclass(frozen=True)
class BoundedBlend:
    a_min: float
    kind: Literal["bounded-blend"] = field(default="bounded-blend", init=False)


@dataclass(frozen=True)
class PowerTail:
    k: float
    a_inf: float
    p: float | None = None
    f_inf: float | None = None
    kind: Literal["power-tail"] = field(default="power-tail", init=False)


Tail = Union[BoundedBlend, PowerTail, None]


@dataclass(frozen=True)
class CoefficientFamily:
    mu: float
    a0: float
    gamma: float
    f0: float
    s0: float
    tail: Tail
    a: Evaluator = field(repr=False, compare=False)
    da: Evaluator = field(repr=False, compare=False)
    f: Evaluator = field(repr=False, compare=False)
    df: Evaluator = field(repr=False, compare=False)
    breakpoints: tuple[float, ...] = ()
    pure_power_f: bool = False
    case: Literal["theorem", "gamma_lt_1"] = "theorem"
    name: str = "custom"

    @property
    def beta_u(self) -> float:
        """Boundary exponent of u."""
        return 2.0 / (1.0 + self.gamma - 2.0 * self.mu)

    @property
    def beta_v(self) -> float:
        """Boundary exponent of the reduced unknown v (and of the profile)."""
        return (2.0 - 2.0 * self.mu) / (1.0 + self.gamma - 2.0 * self.mu)

    @property
    def h_exponent(self) -> float:
        return (self.mu - self.gamma) / (1.0 - self.mu)

    @property
    def a_floor_bound(self) -> float:
        """Lower bound on ``a`` implied by construction (0 when unknown)."""
        if isinstance(self.tail, BoundedBlend):
            return min(self.tail.a_min, self.a0 * self.s0 ** (-2.0 * self.mu))
        return 0.0

    def params(self) -> dict:
        out = {
            "name": self.name,
            "mu": self.mu,
            "a0": self.a0,
            "gamma": self.gamma,
            "f0": self.f0,
            "s0": self.s0,
            "case": self.case,
        }
        if isinstance(self.tail, BoundedBlend):
            out["tail"] = {"kind": self.tail.kind, "a_min": self.tail.a_min}
        elif isinstance(self.tail, PowerTail):
            out["tail"] = {
                "kind": self.tail.kind,
                "k": self.tail.k,
                "a_inf": self.tail.a_inf,
                "p": self.tail.p,
                "f_inf": self.tail.f_inf,
            }
        else:
            out["tail"] = None
        return out


def _check_exponents(mu: float, gamma: float, case: str) -> None:
    if not (0.0 <= mu < 1.0):
        raise FamilyError("mu", f"need 0 <= mu < 1, got {mu}")
    if case == "theorem":
        if not gamma > 1.0:
            raise FamilyError("gamma", f"need gamma > 1 for the theorem case, got {gamma}")
    elif case == "gamma_lt_1":
        if not (0.0 < gamma < 1.0):
            raise FamilyError("gamma", f"need 0 < gamma < 1 for the gamma_lt_1 case, got {gamma}")
    else:
        raise FamilyError("case", f"unknown case {case!r}")


def _hermite_bridge(x0: float, x1: float, y0: float, y1: float, m0: float, m1: float):
    """Cubic Hermite on [x0, x1] returning value and derivative callables."""
    w = x1 - x0

    def value(x):
        t = (x - x0) / w
        h00 = (1 + 2 * t) * (1 - t) ** 2
        h10 = t * (1 - t) ** 2
        h01 = t * t * (3 - 2 * t)
        h11 = t * t * (t - 1)
        return h00 * y0 + h10 * w * m0 + h01 * y1 + h11 * w * m1

    def slope(x):
        t = (x - x0) / w
        d00 = 6 * t * t - 6 * t
        d10 = 3 * t * t - 4 * t + 1
        d01 = -6 * t * t + 6 * t
        d11 = 3 * t * t - 2 * t
        return (d00 * y0 + d01 * y1) / w + d10 * m0 + d11 * m1

    return value, slope


def make_example_family(
    mu: float,
    gamma: float,
    s0: float = 1.0,
    tail: Tail = None,
    *,
    a0: float = 1.0,
    f0: float = 1.0,
    case: Literal["theorem", "gamma_lt_1"] = "theorem",
) -> CoefficientFamily:
    """``f = f0 s^-gamma`` everywhere, ``a = a0 s^-2mu`` on ``(0, s0]`` and a C^1 tail beyond.

    ``tail`` defaults to ``BoundedBlend(a_min=0.5 * a0 * s0**(-2 mu))``.
    """
    _check_exponents(mu, gamma, case)
    for pname, val in (("s0", s0), ("a0", a0), ("f0", f0)):
        if not (val > 0.0 and math.isfinite(val)):
            raise FamilyError(pname, f"must be positive and finite, got {val}")
    a_s0 = a0 * s0 ** (-2.0 * mu)
    da_s0 = -2.0 * mu * a0 * s0 ** (-2.0 * mu - 1.0)
    if tail is None:
        tail = BoundedBlend(a_min=0.5 * a_s0)

    def f(s):
        s = np.asarray(s, dtype=float)
        return f0 * s ** (-gamma)

    def df(s):
        s = np.asarray(s, dtype=float)
        return -gamma * f0 * s ** (-gamma - 1.0)

    if isinstance(tail, BoundedBlend):
        a_min = tail.a_min
        if not (a_min > 0.0):
            raise FamilyError("a_min", f"must be positive, got {a_min}")
        if not (a_min < a_s0):
            raise FamilyError("a_min", f"need a_min < a0*s0^(-2mu) = {a_s0:.6g}, got {a_min}")
        gap = a_s0 - a_min
        rate = -da_s0 / gap

        def a(s):
            s = np.asarray(s, dtype=float)
            with np.errstate(over="ignore"):
                near = a0 * s ** (-2.0 * mu)
                far = a_min + gap * np.exp(-rate * (s - s0))
            return np.where(s <= s0, near, far)

        def da(s):
            s = np.asarray(s, dtype=float)
            with np.errstate(over="ignore"):
                near = -2.0 * mu * a0 * s ** (-2.0 * mu - 1.0)
                far = -rate * gap * np.exp(-rate * (s - s0))
            return np.where(s <= s0, near, far)

        breakpoints: tuple[float, ...] = (s0,)
    elif isinstance(tail, PowerTail):
        if not (tail.k >= 0.0):
            raise FamilyError("k", f"need k >= 0, got {tail.k}")
        if not (tail.a_inf > 0.0):
            raise FamilyError("a_inf", f"must be positive, got {tail.a_inf}")
        if tail.p is not None and tail.p != gamma:
            raise FamilyError("p", "built-in families use f = s^-gamma, so p must equal gamma")
        if tail.f_inf is not None and tail.f_inf != f0:
            raise FamilyError("f_inf", "built-in families use f = f0 s^-gamma, so f_inf must equal f0")
        if not gamma > 1.0:
            raise FamilyError("gamma", "power-tail families need p = gamma > 1")
        tail = PowerTail(k=tail.k, a_inf=tail.a_inf, p=gamma, f_inf=f0)
        x0, x1 = math.log(s0), math.log(2.0 * s0)
        y0 = math.log(a_s0)
        y1 = math.log(tail.a_inf) + tail.k * x1
        bridge, bridge_slope = _hermite_bridge(x0, x1, y0, y1, -2.0 * mu, tail.k)
        k, a_inf = tail.k, tail.a_inf

        def a(s):
            s = np.asarray(s, dtype=float)
            ls = np.log(s)
            mid = np.exp(bridge(np.clip(ls, x0, x1)))
            return np.where(s <= s0, a0 * s ** (-2.0 * mu), np.where(s >= 2 * s0, a_inf * s**k, mid))

        def da(s):
            s = np.asarray(s, dtype=float)
            ls = np.clip(np.log(s), x0, x1)
            mid = np.exp(bridge(ls)) * bridge_slope(ls) / s
            near = -2.0 * mu * a0 * s ** (-2.0 * mu - 1.0)
            far = k * a_inf * s ** (k - 1.0)
            return np.where(s <= s0, near, np.where(s >= 2 * s0, far, mid))

        breakpoints = (s0, 2.0 * s0)
    else:
        raise FamilyError("tail", f"unsupported tail {tail!r}")

    return CoefficientFamily(
        mu=float(mu),
        a0=float(a0),
        gamma=float(gamma),
        f0=float(f0),
        s0=float(s0),
        tail=tail,
        a=a,
        da=da,
        f=f,
        df=df,
        breakpoints=breakpoints,
        pure_power_f=True,
        case=case,
        name="example",
    )


def custom_family(
    a: Evaluator,
    da: Evaluator,
    f: Evaluator,
    df: Evaluator,
    *,
    mu: float,
    a0: float,
    gamma: float,
    f0: float,
    s0: float = 1.0,
    breakpoints: tuple[float, ...] = (),
    case: Literal["theorem", "gamma_lt_1"] = "theorem",
) -> CoefficientFamily:
    """Wrap user evaluators.  Nothing is verified here; run :func:`audit_assumptions`."""
    _check_exponents(mu, gamma, case)
    return CoefficientFamily(
        mu=float(mu), a0=float(a0), gamma=float(gamma), f0=float(f0), s0=float(s0),
        tail=None, a=a, da=da, f=f, df=df, breakpoints=tuple(breakpoints), case=case,
    )


# ---------------------------------------------------------------------------
# audit


@dataclass(frozen=True)
class GridSpec:
    s_min: float = 1e-8
    s_max: float = 1e4
    n: int = 400

    def points(self) -> np.ndarray:
        return np.logspace(math.log10(self.s_min), math.log10(self.s_max), self.n)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    worst_s: float | None
    worst_violation: float
    detail: str = ""


@dataclass(frozen=True)
class AuditReport:
    checks: tuple[Check, ...]
    grid: GridSpec
    a_floor: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def verdict(self, name: str) -> bool:
        return next(c.passed for c in self.checks if c.name == name)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "a_floor": self.a_floor,
            "grid": {"s_min": self.grid.s_min, "s_max": self.grid.s_max, "n": self.grid.n,
                     "spacing": "log-uniform"},
            "checks": [
                {"name": c.name, "verdict": "pass" if c.passed else "fail",
                 "worst_s": c.worst_s, "worst_violation": c.worst_violation, "detail": c.detail}
                for c in self.checks
            ],
        }


def _limit_check(name: str, s: np.ndarray, values: np.ndarray, target: float, rtol: float) -> Check:
    # eight smallest samples, ordered towards 0
    est = empirical_limit(values[:8][::-1])
    dev = abs(est.value - target) / target if np.isfinite(est.value) else math.inf
    ok = est.converged and dev <= rtol and est.error <= rtol * target
    return Check(name, bool(ok), float(s[0]), float(dev),
                 f"extrapolated {est.value:.10g} vs {target:.10g} (err est {est.error:.3g})")


def _derivative_check(fam: CoefficientFamily, s: np.ndarray, rtol: float = 1e-6) -> Check:
    """Analytic a', f' against centered differences with relative step 1e-5, away from switch points."""
    step = 1e-5 * s
    keep = np.ones(s.size, dtype=bool)
    for b in fam.breakpoints:
        keep &= np.abs(s - b) > 2.0 * step
    s, step = s[keep], step[keep]
    worst, where = 0.0, None
    for fn, dfn in ((fam.a, fam.da), (fam.f, fam.df)):
        num = (fn(s + step) - fn(s - step)) / (2.0 * step)
        exact = dfn(s)
        # a' may vanish identically; measure against the natural scale |g|/s
        scale = np.maximum(np.abs(exact), np.abs(fn(s)) / s)
        err = np.abs(num - exact) / scale
        i = int(np.argmax(err))
        if err[i] > worst:
            worst, where = float(err[i]), float(s[i])
    return Check("derivatives", worst <= rtol, where, worst, "analytic vs centered differences")


def audit_assumptions(fam: CoefficientFamily, grid: GridSpec = GridSpec(), *, limit_rtol: float = 1e-3) -> AuditReport:
    """Check the two limits at 0, the structural inequality ``2 f' a <= f a'`` and ``a >= a_floor > 0``."""
    if grid.n < 200 or grid.s_min > 1e-8 or grid.s_max < 1e4:
        raise ValueError("audit grid must span [1e-8, 1e4] with at least 200 points")
    s = grid.points()
    with np.errstate(all="ignore"):
        a, da, f, df = (np.asarray(fn(s), dtype=float) for fn in (fam.a, fam.da, fam.f, fam.df))
    checks: list[Check] = []

    bad = ~(np.isfinite(a) & np.isfinite(da) & np.isfinite(f) & np.isfinite(df))
    if np.any(bad):
        i = int(np.argmax(bad))
        checks.append(Check("finite", False, float(s[i]), math.inf, "evaluator returned non-finite value"))
        return AuditReport(tuple(checks), grid, float("nan"))
    checks.append(Check("finite", True, None, 0.0))

    if fam.case == "theorem":
        checks.append(Check("exponents", fam.gamma > 1.0 > fam.mu >= 0.0, None, 0.0,
                            f"gamma={fam.gamma}, mu={fam.mu}"))
    else:
        checks.append(Check("exponents", 0.0 < fam.gamma < 1.0 and 0.0 <= fam.mu < 1.0, None, 0.0,
                            f"gamma={fam.gamma}, mu={fam.mu} (gamma<1 case)"))

    checks.append(_limit_check("a_limit", s, a * s ** (2 * fam.mu), fam.a0, limit_rtol))
    checks.append(_limit_check("f_limit", s, f * s**fam.gamma, fam.f0, limit_rtol))

    checks.append(_derivative_check(fam, s))

    lhs = 2.0 * df * a
    rhs = f * da
    excess = lhs - rhs - 1e-12 * np.abs(rhs)
    i = int(np.argmax(excess))
    checks.append(Check("structure", bool(excess[i] <= 0.0), float(s[i]),
                        float(max(excess[i], 0.0) / max(abs(rhs[i]), 1e-300)),
                        "2 f'(s) a(s) <= f(s) a'(s)"))

    a_floor = float(np.min(a))
    j = int(np.argmin(a))
    # a minimum at a grid end with a still falling there means a is not bounded away from 0
    sinking = (j == 0 and a[0] < a[1] * (1 - 1e-6)) or (j == a.size - 1 and a[-1] < a[-2] * (1 - 1e-6))
    # a floor known by construction settles a slow decay the finite grid cannot
    declared = fam.a_floor_bound
    if declared > 0.0 and a_floor >= declared * (1 - 1e-12):
        checks.append(Check("a_floor", True, float(s[j]), 0.0,
                            f"min a = {a_floor:.6g} >= constructed floor {declared:.6g}"))
    else:
        checks.append(Check("a_floor", a_floor > 0.0 and not sinking, float(s[j]), float(max(-a_floor, 0.0)),
                            f"min a = {a_floor:.6g}" + (" (still decreasing at grid end)" if sinking else "")))
    checks.append(Check("f_positive", bool(np.all(f > 0.0)), float(s[int(np.argmin(f))]),
                        float(max(-np.min(f), 0.0))))
    return AuditReport(tuple(checks), grid, a_floor)
