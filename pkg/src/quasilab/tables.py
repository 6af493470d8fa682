"""Shared numerical plumbing: monotone tables, segment quadrature, limit extrapolation.

Every tabulated function in the package (the primitive A, the change of
variable g, the profile primitive, the convexity map) is positive, strictly
increasing and power-like near the origin.  Tables therefore interpolate in
log-log coordinates with a shape-preserving cubic Hermite rule, which makes
pure powers exact and keeps inverses monotone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

FloatArray = np.ndarray


class DomainError(ValueError):
    """Evaluation requested outside the tabulated/admissible range."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to converge on a subinterval."""

    def __init__(self, message: str, subinterval: tuple[float, float]):
        super().__init__(f"{message} on [{subinterval[0]:.6g}, {subinterval[1]:.6g}]")
        self.subinterval = subinterval


def _limit_slopes(h: FloatArray, delta: FloatArray, m: FloatArray) -> FloatArray:
    """Fritsch-Carlson limiter; `delta` must be strictly positive.

    Slopes are kept strictly positive (at least 1e-3 of the adjacent secants) so
    the interpolant, its power continuation and its inverse stay strictly monotone.
    """
    floor = 1e-3 * np.minimum(np.append(delta, delta[-1]), np.insert(delta, 0, delta[0]))
    m = np.maximum(m, floor)
    alpha = m[:-1] / delta
    beta = m[1:] / delta
    tau = alpha**2 + beta**2
    bad = tau > 9.0
    if np.any(bad):
        scale = np.ones_like(delta)
        scale[bad] = 3.0 / np.sqrt(tau[bad])
        m = m.copy()
        # a node shared by two offending intervals takes the smaller slope
        left = np.minimum(np.append(scale, 1.0), np.insert(scale, 0, 1.0))
        m = m * left
    return m


class MonotoneTable:
    """Strictly increasing positive function sampled at strictly increasing abscissae.

    Interpolation is cubic Hermite in (log x, log y).  When ``slope`` (dy/dx at
    the samples) is given it is used after monotonicity limiting; otherwise
    PCHIP slopes are estimated.  With ``origin=True`` the function is anchored
    at (0, 0) and continued below the first sample by the power law matching
    the first sample's value and log-slope.  Anything above the last sample is
    a :class:`DomainError`; there is no extrapolation.
    """

    def __init__(self, x, y, slope=None, *, origin: bool = True, name: str = "table"):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size < 2:
            raise ValueError(f"{name}: need matching 1-D samples (at least 2)")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError(f"{name}: non-finite samples")
        if x[0] <= 0.0 or y[0] <= 0.0:
            raise ValueError(f"{name}: samples must be positive")
        if np.any(np.diff(x) <= 0.0):
            raise ValueError(f"{name}: abscissae not strictly increasing")
        if np.any(np.diff(y) <= 0.0):
            i = int(np.argmax(np.diff(y) <= 0.0))
            raise ValueError(f"{name}: ordinates not strictly increasing near x={x[i]:.6g}")
        self.name = name
        self.x = x
        self.y = y
        self.origin = origin
        lx, ly = np.log(x), np.log(y)
        if slope is None:
            m = PchipInterpolator(lx, ly).derivative()(lx)
        else:
            slope = np.asarray(slope, dtype=float)
            m = x * slope / y
        dlx = np.diff(lx)
        m = _limit_slopes(dlx, np.diff(ly) / dlx, m)
        self._lx, self._ly, self._m = lx, ly, m
        self._spline = CubicHermiteSpline(lx, ly, m)
        self._dspline = self._spline.derivative()

    # -- range helpers -------------------------------------------------
    @property
    def x_min(self) -> float:
        return 0.0 if self.origin else float(self.x[0])

    @property
    def x_max(self) -> float:
        return float(self.x[-1])

    @property
    def y_max(self) -> float:
        return float(self.y[-1])

    def _check(self, x: FloatArray, upper: float, lower: float, what: str) -> None:
        if x.size == 0:
            return
        hi = upper * (1.0 + 1e-12)
        if np.any(~np.isfinite(x)) or np.any(x > hi) or np.any(x < lower):
            bad = x[~((x <= hi) & (x >= lower))]
            raise DomainError(
                f"{self.name}: {what} {bad[0]!r} outside [{lower:.6g}, {upper:.6g}]"
            )

    # -- forward -------------------------------------------------------
    def __call__(self, x):
        xa = np.asarray(x, dtype=float)
        flat = np.atleast_1d(xa).ravel()
        lower = 0.0 if self.origin else self.x[0] * (1.0 - 1e-12)
        self._check(flat, self.x_max, lower, "argument")
        out = np.zeros_like(flat)
        inside = flat >= self.x[0]
        below = (~inside) & (flat > 0.0)
        xi = np.minimum(flat[inside], self.x[-1])
        out[inside] = np.exp(self._spline(np.log(xi)))
        if np.any(below):
            out[below] = self.y[0] * (flat[below] / self.x[0]) ** self._m[0]
        return out.reshape(xa.shape) if xa.ndim else float(out[0])

    def derivative(self, x):
        xa = np.asarray(x, dtype=float)
        flat = np.atleast_1d(xa).ravel()
        lower = 0.0 if self.origin else self.x[0] * (1.0 - 1e-12)
        self._check(flat, self.x_max, lower, "argument")
        out = np.empty_like(flat)
        inside = flat >= self.x[0]
        xi = np.minimum(flat[inside], self.x[-1])
        lxi = np.log(xi)
        out[inside] = np.exp(self._spline(lxi)) / xi * self._dspline(lxi)
        below = ~inside
        if np.any(below):
            m0 = self._m[0]
            with np.errstate(divide="ignore"):
                out[below] = self.y[0] * m0 / self.x[0] * (flat[below] / self.x[0]) ** (m0 - 1.0)
        return out.reshape(xa.shape) if xa.ndim else float(out[0])

    # -- inverse -------------------------------------------------------
    def inverse(self, y):
        ya = np.asarray(y, dtype=float)
        flat = np.atleast_1d(ya).ravel()
        lower = 0.0 if self.origin else self.y[0] * (1.0 - 1e-12)
        self._check(flat, self.y_max, lower, "value")
        out = np.zeros_like(flat)
        inside = flat >= self.y[0]
        below = (~inside) & (flat > 0.0)
        if np.any(inside):
            out[inside] = np.exp(self._invert_log(np.log(np.minimum(flat[inside], self.y[-1]))))
        if np.any(below):
            out[below] = self.x[0] * (flat[below] / self.y[0]) ** (1.0 / self._m[0])
        return out.reshape(ya.shape) if ya.ndim else float(out[0])

    def _invert_log(self, target: FloatArray) -> FloatArray:
        k = np.clip(np.searchsorted(self._ly, target, side="right") - 1, 0, self._ly.size - 2)
        c = self._spline.c[:, k]  # local cubic in z = l - lx[k]
        width = self._lx[k + 1] - self._lx[k]
        lo = np.zeros_like(target)
        hi = width.copy()
        span = self._ly[k + 1] - self._ly[k]
        z = width * np.clip((target - self._ly[k]) / span, 0.0, 1.0)
        for _ in range(60):
            p = ((c[0] * z + c[1]) * z + c[2]) * z + c[3] - target
            dp = (3.0 * c[0] * z + 2.0 * c[1]) * z + c[2]
            if np.all(p == 0.0):
                break
            lo = np.where(p < 0.0, z, lo)
            hi = np.where(p > 0.0, z, hi)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = np.where(dp > 0.0, p / dp, 0.0)
            znew = z - step
            out_of_bracket = ((znew <= lo) | (znew >= hi) | (dp <= 0.0)) & (p != 0.0)
            znew = np.where(out_of_bracket, 0.5 * (lo + hi), znew)
            done = np.abs(znew - z) <= 1e-15 * np.maximum(np.abs(self._lx[k]) + width, 1.0)
            z = znew
            if np.all(done):
                break
        return self._lx[k] + z

    def inverse_derivative(self, y):
        return 1.0 / self.derivative(self.inverse(y))

    def inverted(self) -> "InverseTable":
        return InverseTable(self)


@dataclass(frozen=True)
class InverseTable:
    """View of a :class:`MonotoneTable` as its exact inverse function."""

    forward: MonotoneTable

    @property
    def x(self) -> FloatArray:
        return self.forward.y

    @property
    def y(self) -> FloatArray:
        return self.forward.x

    @property
    def x_max(self) -> float:
        return self.forward.y_max

    @property
    def y_max(self) -> float:
        return self.forward.x_max

    def __call__(self, s):
        return self.forward.inverse(s)

    def derivative(self, s):
        return self.forward.inverse_derivative(s)

    def inverse(self, t):
        return self.forward(t)

    def inverted(self) -> MonotoneTable:
        return self.forward


# ---------------------------------------------------------------------------
# quadrature

_GL_LO = np.polynomial.legendre.leggauss(10)
_GL_HI = np.polynomial.legendre.leggauss(21)


def _gauss(func: Callable[[FloatArray], FloatArray], a: FloatArray, b: FloatArray, rule) -> FloatArray:
    nodes, weights = rule
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    pts = mid[:, None] + half[:, None] * nodes[None, :]
    vals = np.asarray(func(pts.ravel()), dtype=float).reshape(pts.shape)
    return half * (vals @ weights)


def integrate_segments(
    func: Callable[[FloatArray], FloatArray],
    edges,
    *,
    rtol: float = 1e-13,
    atol: float = 0.0,
    max_depth: int = 40,
    max_active: int = 200_000,
) -> FloatArray:
    """Integrals of a vectorized ``func`` over each ``[edges[k], edges[k+1]]``.

    Each segment is bisected adaptively until a 21-point and a 10-point
    Gauss-Legendre rule agree to ``max(atol, rtol*|I|)``.  Raises
    :class:`QuadratureError` naming the first segment that does not settle.
    """
    edges = np.asarray(edges, dtype=float)
    nseg = edges.size - 1
    total = np.zeros(nseg)
    owner = np.arange(nseg)
    a, b = edges[:-1].copy(), edges[1:].copy()
    for _ in range(max_depth + 1):
        if a.size == 0:
            return total
        hi = _gauss(func, a, b, _GL_HI)
        lo = _gauss(func, a, b, _GL_LO)
        if not np.all(np.isfinite(hi)):
            i = int(np.argmax(~np.isfinite(hi)))
            raise QuadratureError("non-finite integrand", (float(a[i]), float(b[i])))
        err = np.abs(hi - lo)
        tiny = (b - a) <= 1e-15 * np.maximum(np.abs(a), np.abs(b))
        ok = (err <= np.maximum(atol, rtol * np.abs(hi))) | tiny
        np.add.at(total, owner[ok], hi[ok])
        a, b, owner = a[~ok], b[~ok], owner[~ok]
        mid = 0.5 * (a + b)
        a, b, owner = np.concatenate([a, mid]), np.concatenate([mid, b]), np.concatenate([owner, owner])
        if a.size > max_active:
            raise QuadratureError("adaptive quadrature exceeded its subdivision budget", (float(a.min()), float(b.max())))
    raise QuadratureError("adaptive quadrature did not converge", (float(a.min()), float(b.max())))


# ---------------------------------------------------------------------------
# limits


@dataclass(frozen=True)
class LimitEstimate:
    value: float
    error: float
    converged: bool

    def within(self, target: float, rtol: float) -> bool:
        scale = rtol * abs(target)
        return self.converged and self.error < scale and abs(self.value - target) < scale


def empirical_limit(values, s=None, exponent: float = 0.0) -> LimitEstimate:
    """Extrapolate ``q = values / s**exponent`` as ``s -> 0``.

    Samples must be ordered with ``s`` geometrically decreasing.  Aitken's
    delta-squared process removes a geometric (power-of-``s``) correction;
    the error estimate is the change between the last two extrapolants.
    The estimate is flagged unconverged when the increments of ``q`` stop
    shrinking in magnitude.
    """
    v = np.asarray(values, dtype=float)
    if s is None:
        q = v
    else:
        q = v / np.asarray(s, dtype=float) ** exponent
    if q.size < 4:
        raise ValueError("empirical_limit needs at least 4 samples")
    if not np.all(np.isfinite(q)):
        return LimitEstimate(float("nan"), float("inf"), False)
    scale = max(np.max(np.abs(q)), np.finfo(float).tiny)
    noise = 64 * np.finfo(float).eps * scale
    d = np.diff(q)
    d = np.where(np.abs(d) <= noise, 0.0, d)
    converged = bool(np.all(np.abs(d[1:]) <= np.abs(d[:-1]) + noise))

    def aitken(i: int) -> float:
        d1, d2 = d[i - 1], d[i]
        dd = d2 - d1
        if abs(dd) <= noise or d2 == 0.0:
            return float(q[i + 1])
        return float(q[i + 1] - d2 * d2 / dd)

    last, prev = aitken(d.size - 1), aitken(d.size - 2)
    return LimitEstimate(last, abs(last - prev), converged)
