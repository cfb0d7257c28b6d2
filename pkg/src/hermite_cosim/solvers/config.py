"""Solver selection, parameter presets and run statistics.

Defaults reproduce the nonlinear-solver settings used for the benchmark
runs (line-search ``bt`` of order 3 for Newton, Anderson depth 30, N-GMRES
window 30 with difference-based selection and restart).
"""
import dataclasses
import enum
from dataclasses import dataclass, field

from ..errors import ConfigError

__all__ = ["Method", "Outcome", "NewtonParams", "AndersonParams",
           "NgmresParams", "JfmConfig", "SolveStats", "METHOD_NAMES"]


class Method(enum.Enum):
    FIXED_POINT = "fixed-point"
    NEWTON_LS = "newtonls"
    ANDERSON = "anderson"
    NGMRES = "ngmres"
    NGMRES_LS = "ngmres-ls"


METHOD_NAMES = tuple(m.value for m in Method)


class Outcome(enum.Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    MAX_ITERATIONS = "max-iterations"
    LINE_SEARCH_FAILURE = "line-search-failure"
    LINEAR_SOLVE_FAILURE = "linear-solve-failure"

    @property
    def converged(self):
        return self is Outcome.CONVERGED


@dataclass(frozen=True)
class NewtonParams:
    ls_type: str = "bt"
    ls_order: int = 3
    alpha: float = 1e-4
    max_step: float = 1e8
    min_lambda: float = 1e-12
    damping: float = 1.0
    ls_rtol: float = 1e-8
    ls_atol: float = 1e-15
    ls_ltol: float = 1e-8
    ls_max_it: int = 40
    gmres_restart: int = 30
    gmres_rtol: float = 1e-4
    gmres_max_it: int = 100
    fd_h_scale: float = 1.0


@dataclass(frozen=True)
class AndersonParams:
    m: int = 30
    beta: float = 1.0
    restart_type: str = "none"
    restart_it: int = 2
    restart: int = 30


@dataclass(frozen=True)
class NgmresParams:
    m: int = 30
    gammaA: float = 2.0
    gammaC: float = 2.0
    epsilonB: float = 0.1
    deltaB: float = 0.9
    select_type: str = "difference"
    restart_type: str = "difference"
    restart_it: int = 2
    single_reduction: bool = False
    # line search used when select_type == "linesearch"
    ls_damping: float = 1.0
    ls_max_it: int = 1
    ls_max_step: float = 1e8
    ls_min_lambda: float = 1e-12


@dataclass(frozen=True)
class JfmConfig:
    method: Method = Method.NEWTON_LS
    eps_abs: float = 1e-4
    eps_rel: float = 1e-4
    max_it: int = 50
    div_tol: float = 1e4
    newton: NewtonParams = field(default_factory=NewtonParams)
    anderson: AndersonParams = field(default_factory=AndersonParams)
    ngmres: NgmresParams = field(default_factory=NgmresParams)

    def __post_init__(self):
        if isinstance(self.method, str):
            object.__setattr__(self, "method", _parse_method(self.method))
        if self.method is Method.NGMRES_LS and self.ngmres.select_type != "linesearch":
            object.__setattr__(self, "ngmres", dataclasses.replace(
                self.ngmres, select_type="linesearch"))
        if self.eps_abs <= 0 or self.eps_rel <= 0:
            raise ConfigError("convergence tolerances must be positive")
        if self.max_it < 1:
            raise ConfigError("max_it must be at least 1")
        if self.anderson.m < 1 or self.ngmres.m < 1:
            raise ConfigError("history depth m must be at least 1")
        if self.anderson.restart_type not in ("none", "periodic"):
            raise ConfigError(
                f"unsupported Anderson restart_type {self.anderson.restart_type!r}")
        if self.ngmres.select_type not in ("difference", "linesearch"):
            raise ConfigError(
                f"unknown N-GMRES select_type {self.ngmres.select_type!r}")
        if self.ngmres.restart_type not in ("none", "difference", "periodic"):
            raise ConfigError(
                f"unknown N-GMRES restart_type {self.ngmres.restart_type!r}")
        if self.newton.ls_type != "bt":
            raise ConfigError("only the 'bt' line search is available for Newton")
        if self.newton.ls_order not in (2, 3):
            raise ConfigError("bt line search order must be 2 or 3")

    @classmethod
    def from_name(cls, method, **overrides):
        """Build a configuration from a method name and flat overrides.

        Overrides use dotted keys for nested groups, e.g.
        ``JfmConfig.from_name("anderson", eps_abs=1e-6, **{"anderson.m": 5})``.
        The ``ngmres-ls`` name selects N-GMRES with line-search selection.
        """
        method = _parse_method(method)
        top, groups = {}, {"newton": {}, "anderson": {}, "ngmres": {}}
        if method is Method.NGMRES_LS:
            groups["ngmres"]["select_type"] = "linesearch"
        for key, value in overrides.items():
            if "." in key:
                group, name = key.split(".", 1)
                if group not in groups:
                    raise ConfigError(f"unknown parameter group {group!r}")
                groups[group][name] = value
            else:
                top[key] = value
        kwargs = {}
        for group, values in groups.items():
            base = {"newton": NewtonParams, "anderson": AndersonParams,
                    "ngmres": NgmresParams}[group]
            kwargs[group] = _coerce(base, values)
        for key, value in top.items():
            kwargs[key] = _coerce_field(cls, key, value)
        return cls(method=method, **kwargs)


def _parse_method(name):
    if isinstance(name, Method):
        return name
    key = str(name).strip().lower().replace("_", "-")
    aliases = {"fixedpoint": "fixed-point", "fp": "fixed-point",
               "newton": "newtonls", "newton-ls": "newtonls",
               "ngmresls": "ngmres-ls"}
    key = aliases.get(key, key)
    try:
        return Method(key)
    except ValueError:
        raise ConfigError(
            f"unknown method {name!r}; choose from {', '.join(METHOD_NAMES)}") from None


def _coerce_field(cls, name, value):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    if name not in fields or name == "method":
        raise ConfigError(f"unknown parameter {name!r} for {cls.__name__}")
    default = fields[name].default
    if isinstance(value, str):
        if isinstance(default, bool):
            low = value.strip().lower()
            if low not in ("true", "false", "1", "0"):
                raise ConfigError(f"{name} expects a boolean, got {value!r}")
            return low in ("true", "1")
        if isinstance(default, int):
            return int(float(value))
        if isinstance(default, float):
            return float(value)
        return value.strip().lower()
    return value


def _coerce(cls, values):
    return cls(**{k: _coerce_field(cls, k, v) for k, v in values.items()})


@dataclass
class SolveStats:
    outcome: Outcome = Outcome.MAX_ITERATIONS
    iterations: int = 0
    residual_evals: int = 0
    final_residual_norm: float = float("nan")
    residual_history: list = field(default_factory=list)
    message: str = ""

    @property
    def converged(self):
        return self.outcome.converged
