"""Pathwise checks of the Ito decompositions of squared returns.

With zero drift the squared return over ``[t, t + delta]`` decomposes as

    R^2 = 2 int R_{t,u} sqrt(V_u) dB_u + int V_u du,

where the running return ``R_{t,u}`` is measured from the interval start.
Replacing it by the forward return ``R_{u,u+delta}`` gives a non-adapted
integrand and a decomposition that fails on average: the look-ahead
integrand contains the current increment itself, so its expectation picks up
an extra ``2 E[int V du]`` and the residual mean is ``-2 theta delta`` in
the stationary regime. Its discretisation here is the naive left-point sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from hestonlab.errors import ConfigError, PreconditionError, RangeError
from hestonlab.pathsim import PathEnsemble, SimConfig, simulate_paths
from hestonlab.analytics import HestonParams

CONSISTENT_Z = 3.0
NONZERO_Z = 5.0


@dataclass(frozen=True)
class ResidualReport:
    check_name: str
    substeps: int
    mean_residual: float
    rms_residual: float
    std_error_of_mean: float
    n_observations: int
    buckets: tuple[ResidualReport, ...] = field(default=(), repr=False)

    @property
    def z(self) -> float:
        return z_of_mean(self.mean_residual, self.std_error_of_mean)

    def buckets_outside(self, threshold: float = CONSISTENT_Z) -> int:
        return sum(abs(b.z) >= threshold for b in self.buckets)


def z_of_mean(mean: float, se: float) -> float:
    if se > 0:
        return mean / se
    return 0.0 if mean == 0 else math.copysign(math.inf, mean)


def summarize(check_name: str, substeps: int, residuals: np.ndarray) -> ResidualReport:
    r = np.asarray(residuals, dtype=float).ravel()
    r = r[~np.isnan(r)]
    if r.size == 0:
        raise RangeError(f"{check_name}: no observations")
    se = float(r.std(ddof=1)) / math.sqrt(r.size) if r.size > 1 else math.inf
    scale = float(np.abs(r).max())
    # scaled so that squaring cannot underflow or overflow
    rms = scale * float(np.sqrt(np.mean((r / scale) ** 2))) if scale > 0 else 0.0
    return ResidualReport(
        check_name=check_name,
        substeps=substeps,
        mean_residual=float(r.mean()),
        rms_residual=rms,
        std_error_of_mean=se,
        n_observations=int(r.size),
    )


def _require_zero_drift(ensemble: PathEnsemble) -> None:
    if not ensemble.params.zero_drift:
        raise PreconditionError("decomposition checks assume mu = c = 0")


def ito_residual_correct(ensemble: PathEnsemble) -> ResidualReport:
    """Residual ``R^2 - (adapted integral + integrated variance)`` over all paths and intervals."""
    _require_zero_drift(ensemble)
    res = ensemble.returns**2 - (ensemble.adapted_integral + ensemble.integrated_variance)
    return summarize("squared_return_ito", ensemble.config.substeps, res)


def ito_residual_incorrect(ensemble: PathEnsemble) -> ResidualReport:
    """Residual with the look-ahead integral in place of the adapted one.

    The last interval has no look-ahead value and is skipped.
    """
    _require_zero_drift(ensemble)
    res = ensemble.returns**2 - (ensemble.lookahead_integral + ensemble.integrated_variance)
    return summarize("squared_return_lookahead", ensemble.config.substeps, res[:, :-1])


def squared_logprice_residual(ensemble: PathEnsemble) -> ResidualReport:
    """Residual of ``p_end^2 - p_start^2 = 2 int p sqrt(V) dB + int V du`` per interval."""
    _require_zero_drift(ensemble)
    if ensemble.level_integral is None:
        raise ConfigError("simulate with track_level_integral=True to check the squared log-price")
    p = ensemble.logprice
    res = p[:, 1:] ** 2 - p[:, :-1] ** 2 - (ensemble.level_integral + ensemble.integrated_variance)
    return summarize("squared_logprice_ito", ensemble.config.substeps, res)


def martingale_check(ensemble: PathEnsemble, n: int, anchor: int = 1, n_buckets: int = 10) -> ResidualReport:
    """Mean of the adapted integral over interval ``anchor + n``, overall and by V-decile.

    Paths are ranked by the variance at the interval start and split into
    ``n_buckets`` equal-count groups (stable ordering, so ties are handled
    deterministically). Each group's mean should be consistent with zero.
    """
    _require_zero_drift(ensemble)
    k = anchor + n
    if n < 1 or anchor < 0 or k > ensemble.horizon:
        raise RangeError(f"interval {k} outside 1..{ensemble.horizon}")
    col = ensemble.interval(k)
    stat = ensemble.adapted_integral[:, col] / 2.0
    m = ensemble.config.substeps
    overall = summarize("martingale", m, stat)

    order = np.argsort(ensemble.variance[:, col], kind="stable")
    buckets = tuple(
        summarize(f"martingale_v_decile_{j:02d}", m, stat[idx])
        for j, idx in enumerate(np.array_split(order, n_buckets))
        if idx.size
    )
    return replace(overall, buckets=buckets)


def common_noise_resolution(substep_list) -> int | None:
    """Finest grid that every entry divides, or None if that would be wasteful."""
    lcm = math.lcm(*substep_list)
    return lcm if lcm <= 4 * max(substep_list) else None


def convergence_study(
    params: HestonParams,
    config_base: SimConfig,
    substep_list,
    check=ito_residual_correct,
    *,
    workers: int | None = None,
) -> list[ResidualReport]:
    """Run ``check`` at each sub-step count, sharing the Gaussian draws across refinements."""
    substep_list = list(substep_list)
    if not substep_list:
        raise ConfigError("substep list is empty")
    if any(not isinstance(m, int) or m < 1 for m in substep_list):
        raise ConfigError(f"substeps must be positive integers, got {substep_list}")
    if any(b <= a for a, b in zip(substep_list, substep_list[1:])):
        raise ConfigError(f"substep list must be strictly ascending, got {substep_list}")
    fine = common_noise_resolution(substep_list)
    reports = []
    for m in substep_list:
        cfg = replace(config_base, substeps=m, noise_substeps=fine)
        reports.append(check(simulate_paths(params, cfg, workers=workers)))
    return reports


def strictly_decreasing(values) -> bool:
    values = list(values)
    return all(b < a for a, b in zip(values, values[1:]))
