"""Log-log regression for boundary rates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RateFit:
    exponent: float
    amplitude: float
    r_squared: float
    window: tuple[float, float]
    n_points: int
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "amplitude": self.amplitude,
            "r_squared": self.r_squared,
            "window": list(self.window),
            "n_points": self.n_points,
            "note": self.note,
        }


def fit_power_law(x, y) -> RateFit:
    """Fit ``y = amplitude * x**exponent`` by least squares on logs."""
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    if x.size <= 5:
        raise ValueError(f"need at least 6 points for a rate fit, got {x.size}")
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise ValueError("rate fit needs positive data")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot == 0.0 else min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)
    return RateFit(float(slope), float(np.exp(intercept)), r2, (float(x.min()), float(x.max())), int(x.size))
