"""Experiment configuration: flat ``key = value`` files plus command-line overrides.

Unknown keys are errors. ``to_mapping`` writes every field back as text that
parses to an identical config, and reports echo that mapping so each output
file records how it was produced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path

from hestonlab.analytics import HestonParams, V0Policy
from hestonlab.errors import ConfigError
from hestonlab.pathsim import Scheme, SimConfig

REQUIRED = ("kappa", "theta", "sigma", "rho", "delta")
FORMATS = ("csv", "pretty")


def _float(key: str, text: str) -> float:
    try:
        value = float(Fraction(text.strip())) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{key}: must be finite, got {text!r}")
    return value


def _int(key: str, text: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None


def _bool(key: str, text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def _int_or_auto(key: str, text: str) -> int | None:
    return None if text.strip().lower() == "auto" else _int(key, text)


def _v0(key: str, text: str) -> str | float:
    t = text.strip().lower()
    if t in ("theta", "stationary"):
        return t
    value = _float(key, text)
    if value <= 0:
        raise ConfigError(f"{key}: fixed initial variance must be positive")
    return value


def _substep_list(key: str, text: str) -> tuple[int, ...]:
    parts = [s for s in text.replace(" ", "").split(",")]
    if not parts or any(not s for s in parts):
        raise ConfigError(f"{key}: malformed list {text!r}")
    values = tuple(_int(key, s) for s in parts)
    if any(v < 1 for v in values):
        raise ConfigError(f"{key}: entries must be >= 1")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"{key}: entries must be strictly ascending")
    return values


def _scheme(key: str, text: str) -> str:
    t = text.strip().lower()
    if t not in {s.value for s in Scheme}:
        raise ConfigError(f"{key}: unknown scheme {text!r}")
    return t


def _format(key: str, text: str) -> str:
    t = text.strip().lower()
    if t not in FORMATS:
        raise ConfigError(f"{key}: expected one of {FORMATS}, got {text!r}")
    return t


def _text(key: str, text: str) -> str:
    return text.strip()


_PARSERS = {
    "kappa": _float, "theta": _float, "sigma": _float, "rho": _float,
    "mu": _float, "c": _float, "delta": _float,
    "substeps": _int, "horizon": _int_or_auto, "paths": _int, "scheme": _scheme,
    "seed": _int, "v0": _v0, "antithetic": _bool, "n_max": _int,
    "anchor": _int_or_auto, "substep_list": _substep_list, "out": _text,
    "format": _format, "closed_form_theta_scale": _float,
}


@dataclass(frozen=True)
class ExperimentConfig:
    kappa: float
    theta: float
    sigma: float
    rho: float
    delta: float
    mu: float = 0.0
    c: float = 0.0
    substeps: int = 64
    horizon: int | None = None  # None: anchor + n_max
    paths: int = 100_000
    scheme: str = "euler"
    seed: int = 42
    v0: str | float = "stationary"
    antithetic: bool = False
    n_max: int = 5
    anchor: int | None = None  # None: burn-in rule
    substep_list: tuple[int, ...] = (16, 64, 256)
    out: str = "-"
    format: str = "csv"
    # test hook: scales theta in the closed form only
    closed_form_theta_scale: float = 1.0

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> ExperimentConfig:
        values = {}
        for raw_key, text in mapping.items():
            key = raw_key.strip().replace("-", "_")
            if key not in _PARSERS:
                raise ConfigError(f"unknown key {raw_key!r}")
            values[key] = _PARSERS[key](key, str(text))
        for key in REQUIRED:
            if key not in values:
                raise ConfigError(f"missing required key {key!r}")
        return cls(**values)

    def to_mapping(self) -> dict[str, str]:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                text = "auto"
            elif isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, float):
                text = repr(value)
            elif isinstance(value, tuple):
                text = ",".join(str(v) for v in value)
            else:
                text = str(value)
            out[f.name] = text
        return out

    def validate(self, lags: bool = True) -> None:
        """Raise ConfigError on invalid settings; ``lags`` also checks anchor + n_max fits."""
        try:
            self.heston_params().check()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.n_max < 1:
            raise ConfigError("n_max must be >= 1")
        anchor, horizon = self.anchor_and_horizon()
        if anchor < 1:
            raise ConfigError("anchor must be >= 1")
        if lags and anchor + self.n_max > horizon:
            raise ConfigError(f"anchor {anchor} + n_max {self.n_max} exceeds horizon {horizon}")
        self.sim_config().check()

    def heston_params(self, theta_scale: float = 1.0) -> HestonParams:
        if self.v0 == "theta":
            policy, value = V0Policy.THETA, None
        elif self.v0 == "stationary":
            policy, value = V0Policy.STATIONARY, None
        else:
            policy, value = V0Policy.FIXED, float(self.v0)
        return HestonParams(
            kappa=self.kappa, theta=self.theta * theta_scale, sigma=self.sigma, rho=self.rho,
            mu=self.mu, c=self.c, v0_policy=policy, v0_value=value,
        )

    def anchor_and_horizon(self) -> tuple[int, int]:
        """Resolve ``auto`` anchor and horizon.

        Paths started from the stationary law need no burn-in, so the anchor
        is interval 1. Otherwise the anchor skips about five relaxation times,
        capped at half an explicitly given horizon.
        """
        anchor = self.anchor
        if anchor is None:
            if self.v0 == "stationary":
                anchor = 1
            else:
                anchor = max(1, math.ceil(5.0 / (self.kappa * self.delta)))
                if self.horizon is not None:
                    anchor = max(1, min(anchor, self.horizon // 2))
        horizon = self.horizon if self.horizon is not None else max(2, anchor + self.n_max)
        return anchor, horizon

    def sim_config(self, **overrides) -> SimConfig:
        _, horizon = self.anchor_and_horizon()
        kwargs = dict(
            delta=self.delta, substeps=self.substeps, horizon=horizon, n_paths=self.paths,
            scheme=Scheme(self.scheme), seed=self.seed, antithetic=self.antithetic,
        )
        kwargs.update(overrides)
        return SimConfig(**kwargs)


def read_config_file(path: str | Path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    mapping = {}
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        mapping[key.replace("-", "_")] = value
    return mapping
