"""Run configuration: sectioned ``key = value`` files with optional sweep lists."""

from __future__ import annotations

import configparser
import dataclasses
import itertools
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .bvp import Ball, Interval, SolverConfig
from .coefficients import BoundedBlend, CoefficientFamily, PowerTail, make_example_family

MAX_SWEEP_RUNS = 256


class ConfigError(ValueError):
    """Unparseable or inconsistent configuration; ``where`` is ``file:line [section] key``."""

    def __init__(self, message: str, where: str = ""):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


@dataclass(frozen=True)
class FamilySection:
    kind: str = "example"
    mu: float = 0.0
    gamma: float = 3.0
    s0: float = 1.0
    a0: float = 1.0
    f0: float = 1.0
    case: str = "theorem"
    tail: str = "blend"
    a_min: float | None = None
    k: float | None = None
    a_inf: float | None = None

    def build(self) -> CoefficientFamily:
        if self.tail == "blend":
            tail = None if self.a_min is None else BoundedBlend(self.a_min)
        else:
            if self.k is None or self.a_inf is None:
                raise ConfigError("power tail needs k and a_inf", "[family] tail")
            tail = PowerTail(self.k, self.a_inf, p=self.gamma, f_inf=self.f0)
        return make_example_family(self.mu, self.gamma, self.s0, tail, a0=self.a0, f0=self.f0, case=self.case)


@dataclass(frozen=True)
class GeometrySection:
    kind: str = "interval"
    L: float = 1.0
    R: float = 1.0
    N: int = 3

    def build(self):
        return Interval(self.L) if self.kind == "interval" else Ball(self.R, self.N)


@dataclass(frozen=True)
class MeshSection:
    n: int = 512
    q: float = 2.0


@dataclass(frozen=True)
class SolverSection:
    eps0_factor: float = 1e-2
    eps_min: float = 1e-10
    newton_tol: float = 1e-10
    max_iter: int = 100

    def build(self) -> SolverConfig:
        return SolverConfig(
            eps0_factor=self.eps0_factor, eps_min=self.eps_min, newton_tol=self.newton_tol, max_iter=self.max_iter
        )


@dataclass(frozen=True)
class AnalysisSection:
    window_min: float | None = None
    window_max: float | None = None
    ell: float = 0.0
    phi_s_max: float = 50.0
    transform_s_max: float = 1e3
    refinements: int = 3

    def window(self, default: tuple[float, float]) -> tuple[float, float]:
        lo = default[0] if self.window_min is None else self.window_min
        hi = default[1] if self.window_max is None else self.window_max
        return lo, hi


@dataclass(frozen=True)
class OutputSection:
    directory: str = "out"
    formats: tuple[str, ...] = ("csv", "json")


@dataclass(frozen=True)
class RunConfig:
    family: FamilySection = field(default_factory=FamilySection)
    geometry: GeometrySection = field(default_factory=GeometrySection)
    mesh: MeshSection = field(default_factory=MeshSection)
    solver: SolverSection = field(default_factory=SolverSection)
    analysis: AnalysisSection = field(default_factory=AnalysisSection)
    output: OutputSection = field(default_factory=OutputSection)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_ini(self) -> str:
        """Canonical text form (sorted keys, ``repr`` numbers); re-parses to an equal config."""
        lines = []
        for sec in _SECTIONS:
            lines.append(f"[{sec}]")
            for k, v in sorted(dataclasses.asdict(getattr(self, sec)).items()):
                if v is None:
                    continue
                if isinstance(v, tuple):
                    v = ", ".join(v)
                lines.append(f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}")
            lines.append("")
        return "\n".join(lines)

    def replace(self, dotted: str, value: Any) -> "RunConfig":
        sec, key = dotted.split(".", 1)
        return dataclasses.replace(self, **{sec: dataclasses.replace(getattr(self, sec), **{key: value})})


_SECTIONS = {
    "family": FamilySection,
    "geometry": GeometrySection,
    "mesh": MeshSection,
    "solver": SolverSection,
    "analysis": AnalysisSection,
    "output": OutputSection,
}
_CHOICES = {
    ("family", "kind"): ("example",),
    ("family", "case"): ("theorem", "gamma_lt_1"),
    ("family", "tail"): ("blend", "power"),
    ("geometry", "kind"): ("interval", "ball"),
}


def _field_types(cls) -> dict[str, str]:
    return {f.name: str(f.type) for f in dataclasses.fields(cls)}


def _line_of(text: str, section: str, key: str | None) -> int | None:
    current = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"\[(.+)\]$", line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return no
            continue
        if current == section and key is not None and re.match(rf"{re.escape(key)}\s*[=:]", line):
            return no
    return None


def _convert(raw: str, typ: str):
    if "tuple" in typ:
        return tuple(x.strip() for x in raw.split(",") if x.strip())
    if raw.strip().lower() in ("", "none", "default") and "None" in typ:
        return None
    if typ.startswith("int"):
        return int(raw)
    if "float" in typ:
        return float(raw)
    return raw.strip()


def load_config(path: str | Path) -> tuple[RunConfig, dict[str, list]]:
    """Parse ``path`` into a base config and sweep axes ``{"section.key": [values...]}``.

    A numeric key whose value holds commas declares a sweep axis; the base
    config carries the first value of each axis.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", str(path)) from exc
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    parser.optionxform = str  # keys are case sensitive (L, R, N)
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(str(exc).replace("\n", " "), str(path)) from exc

    sections: dict[str, Any] = {}
    axes: dict[str, list] = {}
    for sec in parser.sections():
        if sec not in _SECTIONS:
            raise ConfigError(f"unknown section [{sec}]", f"{path}:{_line_of(text, sec, None)}")
    for sec, cls in _SECTIONS.items():
        if not parser.has_section(sec):
            sections[sec] = cls()
            continue
        types = _field_types(cls)
        values = {}
        for key, raw in parser.items(sec):
            where = f"{path}:{_line_of(text, sec, key)} [{sec}] {key}"
            if key not in types:
                raise ConfigError("unknown key", where)
            typ = types[key]
            numeric = typ.startswith(("int", "float"))
            try:
                if numeric and "," in raw:
                    vals = [_convert(x, typ) for x in raw.split(",") if x.strip()]
                    if len(vals) < 1:
                        raise ValueError("empty sweep list")
                    axes[f"{sec}.{key}"] = vals
                    values[key] = vals[0]
                else:
                    values[key] = _convert(raw, typ)
            except ValueError as exc:
                raise ConfigError(f"bad value {raw!r} ({exc})", where) from exc
            choices = _CHOICES.get((sec, key))
            if choices and values[key] not in choices:
                raise ConfigError(f"{values[key]!r} not one of {choices}", where)
        sections[sec] = cls(**values)
    cfg = RunConfig(**sections)
    _validate(cfg, path)
    n_runs = 1
    for vals in axes.values():
        n_runs *= len(vals)
    if n_runs > MAX_SWEEP_RUNS:
        raise ConfigError(f"sweep expands to {n_runs} runs (cap {MAX_SWEEP_RUNS})", str(path))
    return cfg, axes


def _validate(cfg: RunConfig, path: Path) -> None:
    # shape checks only; parameter ranges of the family are checked by the audit stage
    if cfg.mesh.n < 4:
        raise ConfigError("n must be at least 4", f"{path} [mesh] n")
    if cfg.mesh.q < 1.0:
        raise ConfigError("q must be >= 1", f"{path} [mesh] q")
    if cfg.analysis.refinements < 1:
        raise ConfigError("refinements must be >= 1", f"{path} [analysis] refinements")
    bad = set(cfg.output.formats) - {"csv", "json"}
    if bad:
        raise ConfigError(f"unknown formats {sorted(bad)}", f"{path} [output] formats")


def expand_sweep(base: RunConfig, axes: dict[str, list]) -> list[tuple[dict, RunConfig]]:
    """Cartesian product of the sweep axes, in declaration order (last axis fastest)."""
    if not axes:
        return [({}, base)]
    keys = list(axes)
    runs = []
    for combo in itertools.product(*(axes[k] for k in keys)):
        cfg = base
        for k, v in zip(keys, combo):
            cfg = cfg.replace(k, v)
        runs.append((dict(zip(keys, combo)), cfg))
    return runs
