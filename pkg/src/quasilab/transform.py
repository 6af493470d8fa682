"""Change of variable ``u = g(v)`` reducing the quasi-linear problem to ``-Lap v = h(v)``.

``g`` solves ``g' = 1/sqrt(a(g))``, ``g(0) = 0``; equivalently ``A(g(s)) = s`` with
``A(t) = int_0^t sqrt(a)``.  ``A`` is computed by quadrature (its endpoint
singularity at 0 integrated in closed form) and ``g`` is its tabulated inverse.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate

from .coefficients import CoefficientFamily
from .tables import (
    DomainError,
    LimitEstimate,
    MonotoneTable,
    InverseTable,
    QuadratureError,
    empirical_limit,
    integrate_segments,
)

__all__ = [
    "TransformPack",
    "build_transform",
    "h_eval",
    "tail_integral",
    "const_g_zero",
    "const_h_zero",
    "const_F_zero",
    "const_g_infinity",
    "empirical_limit",
    "LimitEstimate",
    "ConvexityTransform",
    "convexity_transform",
]


@dataclass(frozen=True)
class TransformPack:
    fam: CoefficientFamily
    A: MonotoneTable
    g: InverseTable
    s_max: float

    @property
    def s_min(self) -> float:
        """Smallest tabulated s (values below follow the anchored power law)."""
        return float(self.A.y[0])

    def _arg(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if np.any(~(s > 0.0)) or np.any(s > self.s_max * (1 + 1e-12)):
            raise DomainError(f"s must lie in (0, {self.s_max:.6g}]")
        return s

    def g_prime(self, s):
        t = self.g(self._arg(s))
        return 1.0 / np.sqrt(self.fam.a(t))

    def h(self, s):
        t = self.g(self._arg(s))
        return self.fam.f(t) / np.sqrt(self.fam.a(t))

    def dh(self, s):
        """Derivative of h: ``f'(g)/a(g) - f(g) a'(g) / (2 a(g)^2)``."""
        t = self.g(self._arg(s))
        a = self.fam.a(t)
        return self.fam.df(t) / a - self.fam.f(t) * self.fam.da(t) / (2.0 * a * a)

    def F(self, t):
        return tail_integral(self, t)

    def table(self) -> dict[str, np.ndarray]:
        keep = self.A.y <= self.s_max  # the top node sits just above s_max
        s = self.A.y[keep]
        return {"s": s, "g": self.A.x[keep], "g_prime": self.g_prime(s), "h": self.h(s)}

    def to_csv(self, path: str | Path) -> None:
        _write_csv(path, self.table())


def _write_csv(path: str | Path, columns: dict[str, np.ndarray]) -> None:
    names = list(columns)
    rows = zip(*(np.asarray(columns[c], dtype=float) for c in names))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])


def _primitive(fam: CoefficientFamily, t: np.ndarray, delta: float) -> np.ndarray:
    """``A(t) = int_0^t sqrt(a)`` at increasing nodes ``t``.

    On ``[0, delta]`` the leading term ``sqrt(a0) xi^-mu`` is integrated exactly
    and only the bounded remainder goes through quadrature.
    """
    mu, sa0 = fam.mu, math.sqrt(fam.a0)

    def sqrt_a(x):
        return np.sqrt(fam.a(x))

    def remainder(x):
        return np.sqrt(fam.a(x)) - sa0 * x ** (-mu)

    def leading(x):
        return sa0 * x ** (1.0 - mu) / (1.0 - mu)

    breaks = [b for b in fam.breakpoints if t[0] < b < t[-1]]
    edges = np.unique(np.concatenate([[0.0, delta], t, breaks]))
    edges = edges[edges <= max(t[-1], delta)]
    lo_edges = edges[edges <= delta]
    hi_edges = edges[edges >= delta]
    # the remainder is judged against the size of the leading term, not its own
    atol = 1e-15 * leading(delta) / max(lo_edges.size, 1)
    out_lo = np.concatenate([[0.0], np.cumsum(integrate_segments(remainder, lo_edges, atol=atol))])
    vals = dict(zip(lo_edges, leading(lo_edges) + out_lo))
    if hi_edges.size > 1:
        cum = vals[delta] + np.concatenate([[0.0], np.cumsum(integrate_segments(sqrt_a, hi_edges))])
        vals.update(zip(hi_edges, cum))
    return np.array([vals[x] for x in t])


def build_transform(fam: CoefficientFamily, s_max: float = 1e3, n_samples: int = 2048) -> TransformPack:
    """Tabulate ``A`` and ``g = A^-1`` on s log-spaced over ``[1e-10 s_max, s_max]``."""
    if not s_max > 0.0:
        raise ValueError("s_max must be positive")
    if n_samples < 64:
        raise ValueError("n_samples must be at least 64")
    delta = min(fam.s0 / 2.0, 1e-2)
    s_lo = 1e-10 * s_max
    cg = const_g_zero(fam.mu, fam.a0)
    one_mu = 1.0 / (1.0 - fam.mu)

    # coarse pass: bracket the t-range, then invert for log-spaced s
    t_lo = 0.5 * cg * s_lo**one_mu
    t_hi = max(2.0 * cg * s_max**one_mu, 2.0 * fam.s0)
    for _ in range(200):
        t_coarse = np.geomspace(t_lo, t_hi, 512)
        A_coarse = _primitive(fam, t_coarse, delta)
        if A_coarse[0] > s_lo:
            t_lo *= 0.25
            continue
        if A_coarse[-1] < s_max:
            t_hi *= 4.0
            continue
        break
    else:
        raise QuadratureError("could not bracket the primitive range", (t_lo, t_hi))
    coarse = MonotoneTable(t_coarse, A_coarse, np.sqrt(fam.a(t_coarse)), name="A (coarse)")
    s_target = np.geomspace(s_lo, s_max, n_samples)
    t_nodes = coarse.inverse(s_target)
    # the top node must reach s_max exactly in A; nudge it past and rescan
    t_nodes[-1] = coarse.inverse(s_max) * (1.0 + 1e-9)
    t_nodes = np.unique(t_nodes)
    A_nodes = _primitive(fam, t_nodes, delta)
    A = MonotoneTable(t_nodes, A_nodes, np.sqrt(fam.a(t_nodes)), name="A")
    return TransformPack(fam=fam, A=A, g=A.inverted(), s_max=float(min(s_max, A_nodes[-1])))


def h_eval(pack: TransformPack, s):
    """Reduced nonlinearity ``h(s) = f(g(s)) / sqrt(a(g(s)))``."""
    return pack.h(s)


def tail_integral(pack_or_fam, t):
    """``F(t) = int_t^inf f``; exact for the built-in pure-power ``f``."""
    fam = pack_or_fam.fam if isinstance(pack_or_fam, TransformPack) else pack_or_fam
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0.0)):
        raise DomainError("tail_integral needs t > 0")
    if fam.pure_power_f:
        return fam.f0 * t ** (1.0 - fam.gamma) / (fam.gamma - 1.0)

    def one(x: float) -> float:
        val, err = integrate.quad(lambda y: float(fam.f(y)), x, math.inf, limit=200)
        if not (math.isfinite(val) and err <= 1e-8 * max(abs(val), 1e-300)):
            raise QuadratureError("tail of f is not integrable", (x, math.inf))
        return val

    out = np.vectorize(one, otypes=[float])(t)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# closed-form asymptotic constants


def const_g_zero(mu: float, a0: float) -> float:
    """Limit of ``g(s) / s^(1/(1-mu))`` as ``s -> 0+``."""
    return (1.0 - mu) ** (1.0 / (1.0 - mu)) * a0 ** (1.0 / (2.0 * (mu - 1.0)))


def const_h_zero(mu: float, a0: float, gamma: float, f0: float) -> float:
    """Limit of ``h(s) / s^((mu-gamma)/(1-mu))`` as ``s -> 0+``."""
    return f0 * a0 ** ((1.0 - gamma) / (2.0 * (mu - 1.0))) * (1.0 - mu) ** (-(gamma - mu) / (1.0 - mu))


def const_F_zero(mu: float, a0: float, gamma: float, f0: float) -> float:
    """Limit of ``F(g(s)) / s^((1-gamma)/(1-mu))`` as ``s -> 0+``."""
    return (
        f0
        * a0 ** ((gamma - 1.0) / (2.0 * (1.0 - mu)))
        / (gamma - 1.0)
        * (1.0 - mu) ** (-(gamma - 1.0) / (1.0 - mu))
    )


def const_g_infinity(k: float, a_inf: float) -> float:
    """Limit of ``g(s) / s^(2/(k+2))`` as ``s -> inf`` when ``a ~ a_inf s^k``."""
    return ((k + 2.0) / (2.0 * math.sqrt(a_inf))) ** (2.0 / (k + 2.0))


# ---------------------------------------------------------------------------
# convexity map


@dataclass(frozen=True)
class ConvexityTransform:
    """``psi(s) = int_0^s dxi / sqrt(2 H(xi))`` with ``H(s) = int_s^inf h``."""

    pack: TransformPack
    psi: MonotoneTable
    s: np.ndarray
    H: np.ndarray

    def H_of(self, s):
        # substituting xi = A(t) turns int_s^inf h into int_{g(s)}^inf f
        return tail_integral(self.pack, self.pack.g(s))

    def psi_prime(self, s):
        return 1.0 / np.sqrt(2.0 * self.H_of(s))

    def psi_second(self, s):
        return self.pack.h(s) / (2.0 * self.H_of(s)) ** 1.5

    def identity_residual(self, s_grid) -> np.ndarray:
        """``|psi'' - (psi')^3 h| / (psi')^3 h`` with both derivatives by centered differences.

        ``s_grid`` must be uniform and positive; the end points only serve as
        stencil neighbours.  ``psi`` is sampled by quadrature on the grid itself
        so that the table's interpolation error does not mask the stencil error.
        """
        s = np.asarray(s_grid, dtype=float)
        step = s[1] - s[0]
        if s.size < 3 or not s[0] > 0.0:
            raise ValueError("identity_residual needs at least 3 positive grid points")
        if not np.allclose(np.diff(s), step, rtol=1e-9, atol=0):
            raise ValueError("identity_residual needs a uniform grid")
        p = cumulative_profile_primitive(self.pack, s, 0.0)
        d1 = (p[2:] - p[:-2]) / (2.0 * step)
        d2 = (p[2:] - 2.0 * p[1:-1] + p[:-2]) / step**2
        target = d1**3 * self.pack.h(s[1:-1])
        return np.abs(d2 - target) / np.abs(target)


def _profile_integrand(pack: TransformPack, ell: float):
    def integrand(tau):
        tau = np.asarray(tau, dtype=float)
        return 1.0 / np.sqrt(ell * ell + 2.0 * tail_integral(pack, pack.g(tau)))

    return integrand


def cumulative_profile_primitive(pack: TransformPack, nodes: np.ndarray, ell: float) -> np.ndarray:
    """``int_0^tau dx / sqrt(ell^2 + 2 F(g(x)))`` at increasing positive ``nodes``.

    The integrand vanishes like a power at 0; the first piece ``[0, nodes[0]]``
    is integrated with that power law, whose exponent is read off the family.
    """
    fam = pack.fam
    integrand = _profile_integrand(pack, ell)
    p = (fam.gamma - 1.0) / (2.0 * (1.0 - fam.mu))
    first = nodes[0] * integrand(nodes[:1])[0] / (1.0 + p)
    return first + np.concatenate([[0.0], np.cumsum(integrate_segments(integrand, nodes))])


def convexity_transform(pack: TransformPack, s_grid=None) -> ConvexityTransform:
    """Tabulate ``psi`` and ``H`` on ``s_grid`` (positive, increasing; log-spaced by default)."""
    fam = pack.fam
    if fam.case != "theorem" or not fam.gamma > 1.0:
        raise QuadratureError("H diverges: h is not integrable at infinity for gamma <= 1", (0.0, math.inf))
    if s_grid is None:
        s_grid = np.geomspace(pack.s_min, pack.s_max, 4096)
    s = np.asarray(s_grid, dtype=float)
    H = tail_integral(pack, pack.g(s))
    if not np.all(np.isfinite(H)):
        raise QuadratureError("H diverges", (float(s[0]), math.inf))
    psi_vals = cumulative_profile_primitive(pack, s, 0.0)
    psi = MonotoneTable(s, psi_vals, 1.0 / np.sqrt(2.0 * H), name="psi")
    return ConvexityTransform(pack=pack, psi=psi, s=s, H=H)
