"""Stage functions composing audit, transform, profile, solve and analysis into JSON reports."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import analysis as an
from .bvp import NewtonError, Solution, build_mesh, solve
from .coefficients import CoefficientFamily, FamilyError, audit_assumptions
from .config import RunConfig
from .phi import PhiProfile, build_phi, constant_table, fit_phi_rate
from .tables import DomainError, QuadratureError, empirical_limit
from .transform import (
    TransformPack,
    build_transform,
    const_F_zero,
    const_g_zero,
    const_h_zero,
    convexity_transform,
    tail_integral,
)

SCHEMA_VERSION = 1
STAGE_ERRORS = (FamilyError, DomainError, QuadratureError, NewtonError, ValueError, ArithmeticError)


class StageFailure(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage!r} failed: {message}")
        self.stage = stage


def jsonable(obj: Any) -> Any:
    """Plain JSON types; non-finite floats become ``None``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    return obj


def dump_json(path: Path, obj: Any) -> None:
    path.write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class RunState:
    """Artifacts accumulated by the stages of one run."""

    cfg: RunConfig
    out: Path
    fam: CoefficientFamily | None = None
    pack: TransformPack | None = None
    profile: PhiProfile | None = None
    solutions: list[Solution] = field(default_factory=list)
    report: dict = field(default_factory=dict)
    files: list[str] = field(default_factory=list)

    @property
    def csv(self) -> bool:
        return "csv" in self.cfg.output.formats

    def emit(self, name: str, writer: Callable[[Path], Any]) -> None:
        """Write one artifact and record it for the manifest once it exists."""
        writer(self.out / name)
        self.files.append(name)


# ---------------------------------------------------------------------------
# stages


def stage_audit(st: RunState) -> bool:
    fam = st.cfg.family.build()  # FamilyError for out-of-range exponents
    st.fam = fam
    rep = audit_assumptions(fam)
    st.report["family"] = fam.params()
    st.report["audit"] = rep.to_dict()
    st.report["regularity"] = an.classify_regularity(fam.gamma, fam.mu).to_dict()
    return rep.passed


def _limit_checks(pack: TransformPack) -> dict:
    fam = pack.fam
    s = 10.0 ** -np.arange(3, 8)
    mu, a0, g, f0 = fam.mu, fam.a0, fam.gamma, fam.f0
    out = {}
    series = {
        "g": (pack.g(s) / s ** (1.0 / (1.0 - mu)), const_g_zero(mu, a0)),
        "h": (pack.h(s) * s ** ((g - mu) / (1.0 - mu)), const_h_zero(mu, a0, g, f0)),
    }
    if fam.case == "theorem":
        series["F"] = (tail_integral(pack, pack.g(s)) * s ** ((g - 1.0) / (1.0 - mu)), const_F_zero(mu, a0, g, f0))
    for name, (vals, target) in series.items():
        est = empirical_limit(vals, s)
        out[name] = {
            "closed_form": target,
            "extrapolated": est.value,
            "error_estimate": est.error,
            "converged": est.converged,
            "relative_deviation": abs(est.value / target - 1.0),
        }
    return out


def stage_transform(st: RunState) -> None:
    pack = build_transform(st.fam, s_max=st.cfg.analysis.transform_s_max)
    st.pack = pack
    s = np.geomspace(1e-6, pack.s_max, 200)
    inversion = float(np.max(np.abs(pack.A(pack.g(s)) / s - 1.0)))
    st.report["transform"] = {"s_max": pack.s_max, "inversion_error": inversion, "limits": _limit_checks(pack)}
    if st.csv:
        st.emit("transform.csv", pack.to_csv)


def stage_phi(st: RunState) -> None:
    a = st.cfg.analysis
    fam = st.fam
    prof = build_phi(st.pack, ell=a.ell, s_max=a.phi_s_max)
    st.profile = prof
    table = constant_table(fam.mu, fam.a0, fam.gamma, fam.f0)
    table["oracle_over_paper"] = table["oracle"] / table["paper"]
    fit = fit_phi_rate(prof, (1e-8, 1e-5))
    st.report["phi"] = {
        "ell": prof.ell,
        "s_max": prof.s_max,
        "constant_table": table,
        "fit": fit.to_dict(),
        "amplitude_vs_oracle": fit.amplitude / table["oracle"] - 1.0,
    }
    if st.csv:
        st.emit("phi.csv", prof.to_csv)


def _refinement_ns(n: int, k: int) -> list[int]:
    ns = [n]
    for _ in range(k - 1):
        if ns[0] // 2 < 16:
            break
        ns.insert(0, ns[0] // 2)
    return ns


def _quasilinear_summary(st: RunState) -> dict:
    """Residual of the original equation away from the boundary layer.

    The cut is two cells of the coarsest mesh in the refinement chain, so the
    same physical region is compared across refinements.
    """
    coarse, sol = st.solutions[0].mesh, st.solutions[-1]
    d_cut = float(coarse.d[2]) if not coarse.is_ball else float(coarse.d[-3])
    keep = (sol.mesh.d >= d_cut) & (sol.mesh.d > 0.0)
    res = np.abs(sol.residual_quasilinear[keep])
    rel = res / st.fam.f(sol.u[keep])
    return {"d_cut": d_cut, "max_abs": float(np.max(res)), "max_rel": float(np.max(rel))}


def stage_solve(st: RunState) -> None:
    cfg = st.cfg
    geo = cfg.geometry.build()
    initial = "over" if st.profile is not None else "constant"
    for n in _refinement_ns(cfg.mesh.n, cfg.analysis.refinements):
        mesh = build_mesh(geo, n, q=cfg.mesh.q)
        st.solutions.append(solve(st.pack, mesh, cfg.solver.build(), profile=st.profile, initial=initial))
    sol = st.solutions[-1]
    m = sol.mesh
    st.report["solve"] = {
        "geometry": {"kind": cfg.geometry.kind, "radius": geo.radius, **({"N": geo.N} if m.is_ball else {})},
        "n": m.n,
        "q": m.q,
        "newton_iterations": sol.newton_iterations,
        "epsilon_final": sol.epsilon_final,
        "bracket": list(sol.bracket) if sol.bracket else None,
        "bracket_ok": sol.bracket_ok,
        "residual_semilinear_max": float(np.max(np.abs(sol.residual_semilinear))),
        "residual_quasilinear": _quasilinear_summary(st),
        "refinement_ns": [s.mesh.n for s in st.solutions],
    }
    if st.csv:
        st.emit("solution.csv", sol.to_csv)


def _expected_exponents(fam: CoefficientFamily) -> dict:
    if fam.case == "gamma_lt_1":
        # h stays integrable at 0, so v vanishes linearly and u = g(v) ~ v^(1/(1-mu))
        bu = 1.0 / (1.0 - fam.mu)
        return {"u_exponent": bu, "v_exponent": 1.0, "gradient_exponent": bu - 1.0}
    return {
        "u_exponent": fam.beta_u,
        "v_exponent": fam.beta_v,
        "gradient_exponent": (1.0 - fam.gamma + 2.0 * fam.mu) / (1.0 + fam.gamma - 2.0 * fam.mu),
    }


def stage_analysis(st: RunState) -> None:
    fam, sol, cfg = st.fam, st.solutions[-1], st.cfg
    m = sol.mesh
    window = cfg.analysis.window(an.default_window(m))
    reg = an.classify_regularity(fam.gamma, fam.mu)
    u_fit = an.fit_boundary_rate(sol.u, m, window)
    v_fit = an.fit_boundary_rate(sol.v, m, window)
    g_fit = an.fit_gradient_rate(sol, window)
    out: dict[str, Any] = {
        "window": list(window),
        "window_rule": "default [5*smallest cell, 0.05*radius]" if window == an.default_window(m) else "configured",
        "u_rate": u_fit.to_dict(),
        "v_rate": v_fit.to_dict(),
        "gradient_rate": g_fit.to_dict(),
        "expected": _expected_exponents(fam),
        "exponent_ratio": u_fit.exponent / v_fit.exponent,
    }
    if reg.lipschitz:
        out["gradient_sup"] = an.gradient_sup_stability(st.solutions)
    if reg.holder_exponent is not None:
        out["holder_gradient_max"] = [
            an.holder_gradient_check(s, fam.gamma, fam.mu) for s in st.solutions
        ]
    if st.profile is not None:
        out["bounds"] = an.global_bounds_check(sol, st.profile, st.pack).to_dict()
        h1 = an.h1_criterion(st.pack, st.profile, fam.gamma, fam.mu, solutions=st.solutions)
        out["h1"] = h1.to_dict()
        if not m.is_ball:
            ct = convexity_transform(st.pack)
            out["convexity"] = an.convexity_check(sol, ct).to_dict()
    st.report["analysis"] = out


Stage = tuple[str, Callable[[RunState], Any]]


def stages_for(command: str, cfg: RunConfig) -> list[Stage]:
    theorem = cfg.family.case == "theorem"
    chain: list[Stage] = [("audit", stage_audit)]
    if command == "audit":
        return chain
    chain.append(("transform", stage_transform))
    if command == "transform":
        return chain
    if theorem:
        chain.append(("phi", stage_phi))
    if command == "phi":
        if not theorem:
            raise StageFailure("phi", "the boundary profile needs gamma > 1 (theorem case)")
        return chain
    chain.append(("solve", stage_solve))
    if command == "solve":
        return chain
    chain.append(("analysis", stage_analysis))
    return chain


def run(command: str, cfg: RunConfig, out: Path) -> tuple[int, RunState]:
    """Execute the stages for ``command``; write report, config echo and MANIFEST.

    Returns an exit code: 0 success, 1 domain or verdict failure.
    """
    out.mkdir(parents=True, exist_ok=True)
    st = RunState(cfg=cfg, out=out)
    st.report = {"schema_version": SCHEMA_VERSION, "command": command, "config": cfg.to_dict()}
    (out / "config.ini").write_text(cfg.to_ini())
    st.files.append("config.ini")
    failed, message, code = None, None, 0
    try:
        for name, fn in stages_for(command, cfg):
            try:
                ok = fn(st)
            except STAGE_ERRORS as exc:
                raise StageFailure(name, str(exc)) from exc
            except Exception as exc:  # anything else is still a failed stage, not a crash
                raise StageFailure(name, f"{type(exc).__name__}: {exc}") from exc
            if ok is False:
                failed, message, code = name, "assumption audit failed", 1
                break
    except StageFailure as exc:
        failed, message, code = exc.stage, str(exc), 1
    st.report["status"] = "ok" if code == 0 else "failed"
    st.report["failed_stage"] = failed
    st.report["error"] = message
    # report and manifest are always written; ``formats`` only controls the CSV tables
    st.emit("report.json", lambda p: dump_json(p, st.report))
    manifest = {
        "command": command,
        "status": st.report["status"],
        "failed_stage": failed,
        "files": {name: sha256_file(out / name) for name in sorted(st.files)},
    }
    dump_json(out / "MANIFEST.json", manifest)
    return code, st
