"""Closed-form quantities of the Heston model with zero drift.

The model is

    dp_t = (mu + c V_t) dt + sqrt(V_t) dB_t
    dV_t = kappa (theta - V_t) dt + sigma sqrt(V_t) dW_t,   corr(dB, dW) = rho.

The leverage cross-covariance between a future squared return and a lagged
return over intervals of length ``delta`` is

    cov(R^2_{n}, R_{0}) = exp(-kappa delta)^(n-1) * rho * sigma * theta * a^2,
    a = (1 - exp(-kappa delta)) / kappa,

valid for ``mu = c = 0`` with the variance started from its stationary law.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from hestonlab.errors import DomainError, PreconditionError


class V0Policy(enum.Enum):
    """How the initial variance of each path is chosen."""

    THETA = "theta"
    FIXED = "fixed"
    STATIONARY = "stationary"


@dataclass(frozen=True)
class HestonParams:
    kappa: float
    theta: float
    sigma: float
    rho: float
    mu: float = 0.0
    c: float = 0.0
    v0_policy: V0Policy = V0Policy.STATIONARY
    v0_value: float | None = None  # only read when v0_policy is FIXED

    @property
    def feller_ok(self) -> bool:
        return 2.0 * self.kappa * self.theta >= self.sigma**2

    @property
    def zero_drift(self) -> bool:
        return self.mu == 0.0 and self.c == 0.0

    def check(self) -> None:
        """Raise DomainError if any invariant fails."""
        report = validate_params(self)
        if not report.valid:
            raise DomainError("; ".join(report.reasons))


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    feller_ok: bool
    reasons: tuple[str, ...] = field(default_factory=tuple)

    def __bool__(self) -> bool:
        return self.valid


def validate_params(params: HestonParams) -> ValidationReport:
    """Check parameter invariants without raising.

    A Feller violation (``2 kappa theta < sigma^2``) is reported through
    ``feller_ok`` but does not make the parameters invalid.
    """
    reasons = []

    def finite(x) -> bool:
        return isinstance(x, (int, float)) and math.isfinite(x)

    if not finite(params.kappa) or params.kappa <= 0:
        reasons.append("mean reversion must be positive")
    if not finite(params.theta) or params.theta <= 0:
        reasons.append("long-run variance must be positive")
    if not finite(params.sigma) or params.sigma < 0:
        reasons.append("volatility of variance must be non-negative")
    if not finite(params.rho) or not -1.0 <= params.rho <= 1.0:
        reasons.append("correlation out of range")
    if not finite(params.mu):
        reasons.append("drift must be finite")
    if not finite(params.c):
        reasons.append("variance-in-mean coefficient must be finite")
    if not isinstance(params.v0_policy, V0Policy):
        reasons.append("unknown initial variance policy")
    elif params.v0_policy is V0Policy.FIXED:
        if params.v0_value is None or not finite(params.v0_value) or params.v0_value <= 0:
            reasons.append("fixed initial variance must be positive")

    feller = bool(not reasons and params.feller_ok)
    return ValidationReport(valid=not reasons, feller_ok=feller, reasons=tuple(reasons))


def _check_rate_time(kappa: float, delta: float) -> None:
    if not kappa > 0 or not math.isfinite(kappa):
        raise DomainError(f"kappa must be positive and finite, got {kappa!r}")
    if not delta >= 0 or not math.isfinite(delta):
        raise DomainError(f"delta must be non-negative and finite, got {delta!r}")


def a_delta(kappa: float, delta: float) -> float:
    """Mean-reversion averaging kernel ``(1 - exp(-kappa delta)) / kappa``.

    Evaluated through ``expm1`` so that it tends to ``delta`` without
    cancellation as ``kappa * delta -> 0``.
    """
    _check_rate_time(kappa, delta)
    return -math.expm1(-kappa * delta) / kappa


def decay_factor(kappa: float, delta: float) -> float:
    """Lag-to-lag decay ``exp(-kappa delta)``, equal to ``1 - kappa * a_delta``."""
    _check_rate_time(kappa, delta)
    return math.exp(-kappa * delta)


@dataclass(frozen=True)
class ClosedFormXCov:
    lag_n: int
    value: float
    a_delta: float
    decay: float


def cross_cov_closed_form(params: HestonParams, delta: float, n: int) -> ClosedFormXCov:
    """Covariance between the squared return ``n`` intervals ahead and the current return."""
    params.check()
    if not params.zero_drift:
        raise PreconditionError("closed form only holds for mu = c = 0")
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"lag must be a positive integer, got {n!r}")
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta!r}")
    n = int(n)
    a = a_delta(params.kappa, delta)
    decay = decay_factor(params.kappa, delta)
    value = decay ** (n - 1) * params.rho * params.sigma * params.theta * a * a
    return ClosedFormXCov(lag_n=n, value=value, a_delta=a, decay=decay)


def stationary_variance_moments(params: HestonParams) -> tuple[float, float]:
    """Mean and variance of the stationary (gamma) law of the variance process."""
    params.check()
    return params.theta, params.sigma**2 * params.theta / (2.0 * params.kappa)
