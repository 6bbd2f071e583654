"""Experiment configuration: a flat ``key = value`` file plus overrides."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from cwexp.hyperbolic import LAMBDA


class ConfigError(ValueError):
    """Unreadable or invalid configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    xi: float = 0.02
    delta: float = 0.02
    R0: float = 0.49
    a: float = 1.0
    eta: float = 1e-4
    horizon: int = 64
    seed: int = 0
    n0_override: int | None = None
    output_dir: str = "results"
    lam: float = LAMBDA

    def __post_init__(self):
        for name in ("xi", "delta", "R0", "a", "eta"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive number, got {v}")
        if not self.lam > 1:
            raise ConfigError(f"lambda must exceed 1, got {self.lam}")
        if self.horizon < 0:
            raise ConfigError("horizon must be nonnegative")
        if self.n0_override is not None and self.n0_override < 0:
            raise ConfigError("n0_override must be nonnegative")

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        try:
            return replace(self, **kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["lambda"] = d.pop("lam")
        return d


_KEYS = {
    "xi": float,
    "delta": float,
    "R0": float,
    "a": float,
    "eta": float,
    "horizon": int,
    "seed": int,
    "n0_override": int,
    "output_dir": str,
    "lambda": float,
}


def parse_config(text):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key == "n0_override" and val.lower() in ("", "none"):
            values[key] = None
            continue
        try:
            values["lam" if key == "lambda" else key] = _KEYS[key](val)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value {val!r} for {key}") from None
    return ExperimentConfig(**values)


def load_config(path=None):
    if path is None:
        return ExperimentConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
