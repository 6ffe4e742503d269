"""Cross-sectional cross-covariance estimators.

For a fixed anchor interval ``t`` and lag ``n`` each path contributes one
pair ``(X_i, Y_i)``, with ``X_i`` the squared return (or integrated
variance) of interval ``t + n`` and ``Y_i`` the return of interval ``t``.
Paths are independent, so the centered products are i.i.d. and their
empirical dispersion gives the standard error directly.

The point estimate uses the 1/M normalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from hestonlab.analytics import HestonParams, cross_cov_closed_form
from hestonlab.errors import InsufficientSamplesError, PreconditionError, RangeError
from hestonlab.pathsim import PathEnsemble

MIN_PATHS = 30


@dataclass(frozen=True)
class XCovEstimate:
    lag_n: int
    estimate: float
    std_error: float
    n_samples: int
    closed_form: float | None = None
    z_score: float | None = None


def z_score(estimate: float, target: float, std_error: float) -> float:
    diff = estimate - target
    if std_error > 0:
        return diff / std_error
    # degenerate ensembles (e.g. constant X) have zero dispersion
    return 0.0 if diff == 0 else math.copysign(math.inf, diff)


def _mean(a: np.ndarray) -> float:
    # correctly rounded sum: independent of path order and of any chunking
    return math.fsum(a.tolist()) / a.size


def centered_cov(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """1/M covariance of paired samples and the standard error of that estimate."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    prod = (x - _mean(x)) * (y - _mean(y))
    m = prod.size
    est = _mean(prod)
    var = math.fsum(((prod - est) ** 2).tolist()) / (m - 1)
    return est, math.sqrt(var) / math.sqrt(m)


def _check_indices(ensemble: PathEnsemble, n: int, anchor: int) -> None:
    if n < 1:
        raise RangeError(f"lag must be >= 1, got {n}")
    if anchor < 1 or anchor + n > ensemble.horizon:
        raise RangeError(f"anchor {anchor} + lag {n} exceeds horizon {ensemble.horizon}")
    if ensemble.n_paths < MIN_PATHS:
        raise InsufficientSamplesError(f"need at least {MIN_PATHS} paths, got {ensemble.n_paths}")


def _lagged(ensemble: PathEnsemble, future: np.ndarray, n: int, anchor: int) -> XCovEstimate:
    _check_indices(ensemble, n, anchor)
    x = future[:, ensemble.interval(anchor + n)]
    y = ensemble.returns[:, ensemble.interval(anchor)]
    est, se = centered_cov(x, y)
    return XCovEstimate(lag_n=n, estimate=est, std_error=se, n_samples=x.size)


def empirical_cross_cov(ensemble: PathEnsemble, n: int, anchor: int = 1) -> XCovEstimate:
    """Estimate cov(R^2 of interval anchor+n, R of interval anchor)."""
    return _lagged(ensemble, ensemble.returns**2, n, anchor)


def integrated_variance_cross_cov(ensemble: PathEnsemble, n: int, anchor: int = 1) -> XCovEstimate:
    """Estimate cov(integrated variance of interval anchor+n, R of interval anchor)."""
    return _lagged(ensemble, ensemble.integrated_variance, n, anchor)


def xcov_profile(
    ensemble: PathEnsemble,
    n_max: int,
    anchor: int = 1,
    params: HestonParams | None = None,
) -> list[XCovEstimate]:
    """Empirical profile for lags 1..n_max paired with the closed form.

    ``params`` overrides the parameters used for the closed form only.
    """
    if not ensemble.params.zero_drift:
        raise PreconditionError("ensemble was simulated with mu or c nonzero")
    params = ensemble.params if params is None else params
    _check_indices(ensemble, n_max, anchor)
    rows = []
    for n in range(1, n_max + 1):
        est = empirical_cross_cov(ensemble, n, anchor)
        cf = cross_cov_closed_form(params, ensemble.config.delta, n).value
        rows.append(replace(est, closed_form=cf, z_score=z_score(est.estimate, cf, est.std_error)))
    return rows


def reduction_gap(ensemble: PathEnsemble, n: int, anchor: int = 1) -> tuple[XCovEstimate, XCovEstimate, float]:
    """Compare the squared-return and integrated-variance covariances at lag ``n``.

    Returns both estimates and the difference in units of the combined
    standard error ``sqrt(se1^2 + se2^2)``.
    """
    sq = empirical_cross_cov(ensemble, n, anchor)
    iv = integrated_variance_cross_cov(ensemble, n, anchor)
    combined = math.hypot(sq.std_error, iv.std_error)
    return sq, iv, z_score(sq.estimate, iv.estimate, combined)
