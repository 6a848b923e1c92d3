"""Run configuration: a flat key = value file (TOML subset) plus env overrides.

Keys
----
problem        "problem1" | "cavity"
N              mesh subdivisions per axis
k              time step
T_final        final time
nu             viscosity (alternatively ``Re``; nu = U / Re)
alpha          pressure-potential weight
rho            divergence weight, absolute; or ``rho_over_nu`` as a multiple of nu
eps            pressure-increment tolerance
iter_max       iteration cap per time step
convection     NONE | SI_SKEW | FI_SKEW | IMEX_EXPLICIT
accelerate     Aitken acceleration on/off
linear_solver  gmres | direct
lid_edges      cavity only: lid | wall
out            output directory
assert_energy  warn | abort | off
seed           seed for randomized checks
meshes         list of N for study mode
alphas, rho_over_nus   sweep grid for study mode

Environment variables ``ITERPROJ_<KEY>`` (upper case) override file values.
"""
from __future__ import annotations

import os
import sys
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .projector import CONVECTION_MODES, SolverParams

ENV_PREFIX = "ITERPROJ_"
PROBLEMS = ("problem1", "cavity")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    problem: str = "problem1"
    N: int = 4
    k: float = 1e-3
    T_final: float = 0.1
    nu: Optional[float] = 1.0
    Re: Optional[float] = None
    alpha: float = 1.5
    rho: Optional[float] = None
    rho_over_nu: Optional[float] = 1.0
    eps: float = 1e-2
    iter_max: int = 50
    convection: str = "SI_SKEW"
    accelerate: bool = False
    linear_solver: str = "gmres"
    lid_edges: str = "lid"
    out: str = "out"
    assert_energy: str = "warn"
    seed: int = 0
    meshes: list = field(default_factory=lambda: [4, 6, 8])
    alphas: list = field(default_factory=lambda: [1.5, 2.0, 2.5])
    rho_over_nus: list = field(default_factory=lambda: [1.0, 2.0])

    def __post_init__(self):
        self.validate()

    # derived -----------------------------------------------------------
    @property
    def speed_scale(self) -> float:
        from .problems import PROBLEM1_SPEED
        return PROBLEM1_SPEED if self.problem == "problem1" else 1.0

    @property
    def viscosity(self) -> float:
        if self.Re is not None:
            return self.speed_scale / self.Re
        return float(self.nu)

    @property
    def rho_value(self) -> float:
        if self.rho is not None:
            return float(self.rho)
        return float(self.rho_over_nu) * self.viscosity

    def validate(self) -> None:
        if self.problem not in PROBLEMS:
            raise ConfigError(f"problem must be one of {PROBLEMS}, got {self.problem!r}")
        if self.Re is None and self.nu is None:
            raise ConfigError("give nu or Re")
        if self.Re is not None and self.Re <= 0:
            raise ConfigError("Re must be positive")
        if self.nu is not None and self.nu <= 0:
            raise ConfigError("nu must be positive")
        for name in ("k", "T_final", "eps"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.N < 1 or self.iter_max < 1:
            raise ConfigError("N and iter_max must be >= 1")
        if self.alpha < 0:
            raise ConfigError("alpha must be nonnegative")
        if self.rho is None and self.rho_over_nu is None:
            raise ConfigError("give rho or rho_over_nu")
        if self.rho_value < 0:
            raise ConfigError("rho must be nonnegative")
        if self.alpha == 0 and self.rho_value == 0:
            raise ConfigError("alpha and rho cannot both be zero")
        if self.convection not in CONVECTION_MODES:
            raise ConfigError(f"convection must be one of {CONVECTION_MODES}")
        if self.linear_solver not in ("gmres", "direct"):
            raise ConfigError("linear_solver must be gmres or direct")
        if self.assert_energy not in ("warn", "abort", "off"):
            raise ConfigError("assert_energy must be warn, abort or off")
        if self.lid_edges not in ("lid", "wall"):
            raise ConfigError("lid_edges must be lid or wall")

    def solver_params(self, **overrides) -> SolverParams:
        kw = dict(alpha=self.alpha, rho=self.rho_value, nu=self.viscosity, k=self.k, eps=self.eps,
                  iter_max=self.iter_max, convection=self.convection, accelerate=self.accelerate,
                  linear_solver=self.linear_solver)
        kw.update(overrides)
        return SolverParams(**kw)

    def problem_spec(self):
        from .problems import cavity_spec, problem1_spec
        if self.problem == "cavity":
            return cavity_spec(self.viscosity, lid_edges=self.lid_edges)
        return problem1_spec(self.viscosity)

    def replace(self, **changes) -> "RunConfig":
        d = asdict(self)
        d.update(changes)
        return RunConfig(**d)


_FIELD_TYPES = {f.name: f for f in fields(RunConfig)}
_LIST_FIELDS = ("meshes", "alphas", "rho_over_nus")


def _coerce(name: str, value):
    if value is None:
        return None
    if name in ("N", "iter_max", "seed"):
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"{name} must be an integer")
        return int(value)
    if name == "accelerate":
        if isinstance(value, str):
            low = value.strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ConfigError(f"accelerate: cannot read {value!r} as a boolean")
            return low in ("true", "1", "yes")
        return bool(value)
    if name in _LIST_FIELDS:
        if isinstance(value, str):
            value = [v for v in value.replace(",", " ").split() if v]
        if not isinstance(value, (list, tuple)):
            value = [value]
        cast = int if name == "meshes" else float
        return [cast(v) for v in value]
    if name in ("problem", "convection", "linear_solver", "lid_edges", "out", "assert_energy"):
        return str(value)
    try:
        return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: expected a number, got {value!r}") from exc


def from_mapping(data: dict) -> RunConfig:
    unknown = set(data) - set(_FIELD_TYPES)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kw = {name: _coerce(name, v) for name, v in data.items()}
    # an explicit Re or rho wins over the defaults of their alternatives
    if "Re" in kw and "nu" not in kw:
        kw["nu"] = None
    if "rho" in kw and "rho_over_nu" not in kw:
        kw["rho_over_nu"] = None
    try:
        return RunConfig(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def parse_text(text: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc


def env_overrides(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    out = {}
    for name in _FIELD_TYPES:
        key = ENV_PREFIX + name.upper()
        if key in environ:
            out[name] = environ[key]
    return out


def load_config(path=None, environ=None, **overrides) -> RunConfig:
    data = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = parse_text(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    data.update(env_overrides(environ))
    data.update({k: v for k, v in overrides.items() if v is not None})
    return from_mapping(data)


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_format(v) for v in value) + "]"
    return repr(value)


def dump_text(cfg: RunConfig) -> str:
    """Flat key = value text; ``None`` entries are omitted."""
    lines = []
    for name, value in asdict(cfg).items():
        if value is not None:
            lines.append(f"{name} = {_format(value)}")
    return "\n".join(lines) + "\n"
