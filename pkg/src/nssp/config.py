"""Run configuration: a flat TOML file with a versioned schema.

Every key must be known; a typo in ``nu`` or ``dt`` would otherwise corrupt
every downstream fit without any sign of trouble.  Example::

    schema_version = 1
    dim = 2
    n = 64
    nu = 0.01
    dt = 0.001
    t_end = 1.0
    initial_kind = "taylor_green_2d"
    k_ladder = [2.0, 4.0, 8.0]
"""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import tomli

from .solver import DEALIAS_RULES, INITIAL_KINDS, NONLINEAR_FORMS, SolverConfig
from .spectral import GridSpec

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Malformed configuration; ``line`` is 1-based when known."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None, source: str = "<config>"):
        where = source
        if line is not None:
            where += f":{line}"
        if key is not None:
            where += f" [{key}]"
        super().__init__(f"{where}: {message}")
        self.message = message
        self.key = key
        self.line = line


@dataclass(frozen=True)
class RunConfig:
    schema_version: int = SCHEMA_VERSION
    # solver
    dim: int = 3
    n: int = 32
    nu: float = 0.05
    dt: float = 0.01
    t_end: float = 1.0
    dealias: str = "two_thirds"
    nonlinear_form: str = "rotational"
    # initial data
    initial_kind: str = "random_divfree"
    seed: int = 0
    spectrum_slope: float = -2.0
    amplitude: float = 1.0
    # diagnostics
    k_ladder: tuple[float, ...] = (2.0, 4.0, 8.0)
    sigma_list: tuple[float, ...] = (-1.0, -0.5)
    sample_every: int = 1
    oversample: int = 2
    # superposition; 0 selects the fitted minimum
    s_max: int = 64
    l1: int = 0
    i_max: int = 0
    # static battery
    ensemble_size: int = 4
    # output
    output_dir: str = "run"
    checkpoint_every: int = 1

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}", "schema_version")
        for name in ("k_ladder", "sigma_list"):
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))
        ladder = self.k_ladder
        if any(k < 1 for k in ladder):
            raise ConfigError("k_ladder entries must be >= 1", "k_ladder")
        if any(b <= a for a, b in zip(ladder, ladder[1:])):
            raise ConfigError("k_ladder must be strictly increasing", "k_ladder")
        if any(not -1.0 <= s <= 0.0 for s in self.sigma_list):
            raise ConfigError("sigma_list entries must lie in [-1, 0]", "sigma_list")
        if self.dealias not in DEALIAS_RULES:
            raise ConfigError(f"must be one of {DEALIAS_RULES}", "dealias")
        if self.nonlinear_form not in NONLINEAR_FORMS:
            raise ConfigError(f"must be one of {NONLINEAR_FORMS}", "nonlinear_form")
        if self.initial_kind not in INITIAL_KINDS:
            raise ConfigError(f"must be one of {INITIAL_KINDS}", "initial_kind")
        if self.oversample not in (1, 2):
            raise ConfigError("must be 1 or 2", "oversample")
        for name in ("sample_every", "checkpoint_every", "s_max", "ensemble_size"):
            if getattr(self, name) < 1:
                raise ConfigError("must be >= 1", name)
        for name in ("l1", "i_max", "seed"):
            if getattr(self, name) < 0:
                raise ConfigError("must be >= 0", name)
        if not (math.isfinite(self.dt) and math.isfinite(self.t_end)):
            raise ConfigError("dt and t_end must be finite", "dt")
        try:
            self.solver_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def grid(self) -> GridSpec:
        return GridSpec(self.dim, self.n, self.nu)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(self.grid(), self.dt, self.t_end, self.dealias, self.nonlinear_form, self.sample_every)

    def replace(self, **changes) -> RunConfig:
        return dataclasses.replace(self, **changes)

    def to_toml(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            lines.append(f"{f.name} = {_toml_value(value)}")
        return "\n".join(lines) + "\n"


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_TYPES = {
    int: (int,),
    float: (int, float),
    str: (str,),
}


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    return str(value)


def _key_lines(text: str) -> dict[str, int]:
    lines = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        m = re.match(r"\s*([A-Za-z0-9_\-]+|\"[^\"]*\")\s*=", raw)
        if m:
            lines.setdefault(m.group(1).strip('"'), no)
        m = re.match(r"\s*\[+\s*([^\]]+?)\s*\]", raw)
        if m:
            lines.setdefault(m.group(1), no)
    return lines


def _expected_kind(name: str):
    if name in ("k_ladder", "sigma_list"):
        return list
    return {"int": int, "float": float, "str": str}[_FIELDS[name].type]


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(str(exc), source=source) from exc
    lines = _key_lines(text)
    if "schema_version" not in data:
        raise ConfigError("missing schema_version", "schema_version", source=source)
    values = {}
    for key, value in data.items():
        line = lines.get(key)
        if key not in _FIELDS:
            raise ConfigError("unknown key", key, line, source)
        kind = _expected_kind(key)
        if kind is list:
            if not isinstance(value, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
            ):
                raise ConfigError("expected a list of numbers", key, line, source)
        elif isinstance(value, bool) or not isinstance(value, _TYPES[kind]):
            raise ConfigError(f"expected {kind.__name__}, got {type(value).__name__}", key, line, source)
        values[key] = float(value) if kind is float else value
    try:
        return RunConfig(**values)
    except ConfigError as exc:
        if exc.key is not None:
            raise ConfigError(exc.message, exc.key, lines.get(exc.key), source) from exc
        raise ConfigError(exc.message, source=source) from exc


BUNDLED = ("taylor_green_2d", "random_3d")


def bundled_config_text(name: str) -> str:
    return resources.files("nssp").joinpath("configs", f"{name}.toml").read_text()


def load_config(path) -> RunConfig:
    """Read a config file; a bare bundled name such as ``taylor_green_2d`` also works.

    Raises FileNotFoundError for a missing file and ConfigError for bad content.
    """
    p = Path(path)
    if not p.is_file():
        if str(path) in BUNDLED:
            return parse_config(bundled_config_text(str(path)), f"<bundled {path}>")
        raise FileNotFoundError(f"config file not found: {path}")
    return parse_config(p.read_text(), str(p))
