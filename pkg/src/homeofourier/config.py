"""Experiment configuration: defaults, then a `key = value` file, then WFL_* env vars, then flags."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .homeo import HolderEnvelope

ENV_PREFIX = "WFL_"


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    depth: int = 20
    samples: int = 10_000
    workers: int = 1
    points_per_oscillation: int = 8
    K1: float = 6.0
    K2: float = 0.15
    C: float = 2.0
    output_dir: str = "-"  # "-" writes to stdout
    format: str = "csv"

    def __post_init__(self):
        problems = validate(self)
        if problems:
            raise ConfigError(problems)

    @property
    def envelope(self) -> HolderEnvelope:
        return HolderEnvelope(self.K1, self.K2, self.C)

    def to_dict(self) -> dict:
        return asdict(self)

    def metadata(self) -> dict:
        """Everything that can change a number; workers and the output location cannot."""
        d = self.to_dict()
        del d["workers"], d["output_dir"]
        return d

    def header_lines(self) -> list[str]:
        return [f"{k} = {v}" for k, v in self.metadata().items()]


def validate(cfg: ExperimentConfig) -> list[str]:
    problems = []
    if not 0 <= cfg.seed < 2**64:
        problems.append("seed: must be a 64-bit unsigned integer")
    for name in ("depth", "samples", "workers"):
        if getattr(cfg, name) < 1:
            problems.append(f"{name}: must be >= 1")
    if cfg.depth > 26:
        problems.append("depth: must be <= 26")
    if cfg.points_per_oscillation < 8:
        problems.append("points_per_oscillation: must be >= 8")
    if not cfg.K2 < 1.0:
        problems.append("K2: must be < 1")
    if not cfg.K1 > 1.0:
        problems.append("K1: must be > 1")
    if not cfg.K2 > 0.0:
        problems.append("K2: must be > 0")
    if not cfg.C > 0.0:
        problems.append("C: must be > 0")
    if cfg.format not in ("csv", "json"):
        problems.append("format: must be csv or json")
    return problems


_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_ALIASES = {"ppo": "points_per_oscillation", "out": "output_dir", "k1": "K1", "k2": "K2", "c": "C"}


def _canon(key: str) -> str | None:
    key = key.strip()
    if key in _TYPES:
        return key
    low = key.lower().replace("-", "_")
    if low in _TYPES:
        return low
    return _ALIASES.get(low)


def _convert(name: str, raw: str):
    kind = _TYPES[name]
    if kind == "int":
        return int(raw, 0)
    if kind == "float":
        return float(raw)
    return raw


def parse_pairs(pairs: list[tuple[str, str]], origin: str) -> tuple[dict, list[str]]:
    values, problems = {}, []
    for key, raw in pairs:
        key = key.strip()
        name = _canon(key)
        if name is None:
            problems.append(f"{origin}: unknown key {key!r}")
            continue
        try:
            values[name] = _convert(name, raw.strip())
        except ValueError:
            problems.append(f"{origin}: cannot parse {key} = {raw.strip()!r}")
    return values, problems


def read_config_file(path) -> tuple[dict, list[str]]:
    pairs, problems = [], []
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"{path}:{lineno}: expected 'key = value'")
            continue
        key, raw = line.split("=", 1)
        pairs.append((key, raw))
    values, more = parse_pairs(pairs, str(path))
    return values, problems + more


def env_overrides(environ=None) -> tuple[dict, list[str]]:
    environ = os.environ if environ is None else environ
    pairs = [(k[len(ENV_PREFIX):], v) for k, v in sorted(environ.items()) if k.startswith(ENV_PREFIX)]
    return parse_pairs(pairs, "environment")


def build_config(path=None, overrides: dict | None = None, environ=None) -> ExperimentConfig:
    """Merge defaults < file < environment < overrides; report every problem at once."""
    merged, problems = {}, []
    if path is not None:
        vals, probs = read_config_file(path)
        merged.update(vals)
        problems += probs
    vals, probs = env_overrides(environ)
    merged.update(vals)
    problems += probs
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    base = ExperimentConfig.__new__(ExperimentConfig)
    for f in fields(ExperimentConfig):
        object.__setattr__(base, f.name, merged.get(f.name, f.default))
    problems += validate(base)
    if problems:
        raise ConfigError(problems)
    return base


def load_config(path) -> ExperimentConfig:
    """Validated config from a `key = value` file; unspecified keys keep defaults."""
    return build_config(path, environ={})


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
