"""Run configuration: flat ``[section]`` / ``key = value`` text with ``#`` comments.

Unknown sections or keys are errors.  Values may be quoted with double
quotes.  Example::

    [problem]
    operator = hp          # hp | hp_unbounded | volterra | identity | files
    N = 200
    dfd = svd              # svd | example_hp | derive | stored

    [filter]
    spec = "tikhonov:rate_form"

    [choice]
    mu = 1
    rho = 1
    c = 1

    [run]
    seed = 42
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    pass


# section -> key -> (attribute, type)
_SCHEMA: dict[str, dict[str, tuple[str, type]]] = {
    "problem": {
        "operator": ("problem", str),
        "N": ("N", int),
        "path": ("path", str),
        "dfd": ("dfd", str),
        "v_path": ("v_path", str),
    },
    "filter": {"spec": ("filter", str)},
    "choice": {
        "mu": ("mu", float),
        "rho": ("rho", float),
        "c": ("c", float),
        "alpha": ("alpha", float),
    },
    "rates": {
        "delta_max": ("delta_max", float),
        "delta_min": ("delta_min", float),
        "points_per_decade": ("points_per_decade", int),
        "noise_draws": ("noise_draws", int),
        "source_ratio": ("source_ratio", float),
    },
    "invert": {
        "data": ("data", str),
        "truth": ("truth", str),
        "delta": ("delta", float),
    },
    "witness": {
        "delta_max": ("witness_delta_max", float),
        "delta_min": ("witness_delta_min", float),
    },
    "run": {"seed": ("seed", int), "out": ("out", str)},
}


@dataclass(frozen=True)
class RunConfig:
    problem: str = "hp"
    N: int | None = 200
    path: str | None = None
    dfd: str = "svd"
    v_path: str | None = None
    filter: str = "tikhonov:rate_form"
    mu: float = 1.0
    rho: float = 1.0
    c: float = 1.0
    alpha: float | None = None
    delta_max: float = 1e-1
    delta_min: float = 1e-6
    points_per_decade: int = 10
    noise_draws: int = 5
    source_ratio: float = 0.5
    data: str | None = None
    truth: str | None = None
    delta: float = 0.0
    witness_delta_max: float | None = None
    witness_delta_min: float | None = None
    seed: int = 0
    out: str = "."

    def delta_grid(self) -> np.ndarray:
        """Logarithmic grid from ``delta_max`` down to ``delta_min``."""
        if not 0 < self.delta_min < self.delta_max:
            raise ConfigError("need 0 < delta_min < delta_max")
        decades = np.log10(self.delta_max / self.delta_min)
        n = int(round(decades * self.points_per_decade)) + 1
        return np.logspace(np.log10(self.delta_max), np.log10(self.delta_min), n)

    def lines(self) -> list[str]:
        """Canonical ``section.key = value`` listing, excluding the output directory."""
        out = []
        for section, keys in _SCHEMA.items():
            for key, (attr, _) in keys.items():
                if attr == "out":
                    continue
                out.append(f"{section}.{key} = {getattr(self, attr)}")
        return out


_SECTION = re.compile(r"^\[\s*([A-Za-z_]+)\s*\]$")
_ITEM = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")


def _strip_comment(line: str) -> str:
    # '#' inside double quotes is kept
    out, quoted = [], False
    for ch in line:
        if ch == '"':
            quoted = not quoted
        elif ch == "#" and not quoted:
            break
        out.append(ch)
    return "".join(out).strip()


def _as_int(value: str) -> int:
    try:
        return int(value)
    except ValueError:
        f = float(value)
        if not f.is_integer():
            raise
        return int(f)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    values: dict[str, object] = {}
    section = None
    for n, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw)
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            section = m.group(1)
            if section not in _SCHEMA:
                raise ConfigError(f"{source}:{n}: unknown section [{section}]")
            continue
        m = _ITEM.match(line)
        if not m:
            raise ConfigError(f"{source}:{n}: expected 'key = value', got {raw.strip()!r}")
        if section is None:
            raise ConfigError(f"{source}:{n}: key {m.group(1)!r} outside any section")
        key, value = m.group(1), m.group(2).strip()
        if key not in _SCHEMA[section]:
            raise ConfigError(f"{source}:{n}: unknown key {key!r} in [{section}]")
        if len(value) >= 2 and value[0] == value[-1] == '"':
            value = value[1:-1]
        attr, typ = _SCHEMA[section][key]
        if attr in values:
            raise ConfigError(f"{source}:{n}: duplicate key {section}.{key}")
        try:
            values[attr] = _as_int(value) if typ is int else typ(value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{n}: invalid value for {section}.{key}: {value!r}") from exc
    cfg = RunConfig(**values)
    _validate(cfg, source)
    return cfg


def _validate(cfg: RunConfig, source: str) -> None:
    if cfg.problem == "files" and not cfg.path:
        raise ConfigError(f"{source}: problem.operator = files needs problem.path")
    if cfg.dfd == "derive" and not cfg.v_path:
        raise ConfigError(f"{source}: problem.dfd = derive needs problem.v_path")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError(f"{source}: run.seed must be an unsigned 64-bit integer")
    if cfg.noise_draws < 1 or cfg.points_per_decade < 1:
        raise ConfigError(f"{source}: noise_draws and points_per_decade must be positive")


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    return parse_config(text, str(p))


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    upd = {k: v for k, v in kw.items() if v is not None and k in known}
    return replace(cfg, **upd)
