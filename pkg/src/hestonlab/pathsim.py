"""Correlated Heston path generation with per-interval stochastic integrals.

Every path owns a Philox stream keyed by ``(seed, stream index)``, so an
ensemble is a pure function of its parameters and configuration no matter
how many workers produce it. Paths are processed in fixed-size blocks;
within a block the sub-grid log-price is kept only until the look-ahead
integral has been formed, so stored memory scales with paths times
intervals.

Per interval ``k`` (covering ``((k-1) delta, k delta]``) the ensemble holds

* ``returns``: ``p(k delta) - p((k-1) delta)``
* ``integrated_variance``: left-point sum of ``V+ dt``
* ``adapted_integral``: ``2 * sum (p_u - p_start) sqrt(V+_u) dB_u``
* ``lookahead_integral``: ``2 * sum (p_{u+delta} - p_u) sqrt(V+_u) dB_u``,
  NaN on the last interval where the look-ahead is not available
* ``level_integral`` (optional): ``2 * sum p_u sqrt(V+_u) dB_u``

All stochastic sums use left-point (Ito) evaluation.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from hestonlab.analytics import HestonParams, V0Policy
from hestonlab.errors import ConfigError, ResourceError

BLOCK_PATHS = 1024
MAX_ENSEMBLE_CELLS = 50_000_000
WORKERS_ENV = "HESTONLAB_WORKERS"


class Scheme(enum.Enum):
    EULER = "euler"
    MILSTEIN = "milstein"


@dataclass(frozen=True)
class SimConfig:
    delta: float
    substeps: int = 64
    horizon: int = 6
    n_paths: int = 100_000
    scheme: Scheme = Scheme.EULER
    seed: int = 42
    antithetic: bool = False
    track_level_integral: bool = False
    # Resolution of the underlying Gaussian draws. Must be a multiple of
    # ``substeps``; coarser runs sum groups of fine draws, which gives common
    # random numbers across refinements.
    noise_substeps: int | None = None

    @property
    def dt(self) -> float:
        return self.delta / self.substeps

    @property
    def noise_resolution(self) -> int:
        return self.substeps if self.noise_substeps is None else self.noise_substeps

    def check(self) -> None:
        def is_int(x) -> bool:
            return isinstance(x, (int, np.integer)) and not isinstance(x, bool)

        if not (isinstance(self.delta, (int, float)) and math.isfinite(self.delta) and self.delta > 0):
            raise ConfigError(f"delta must be positive, got {self.delta!r}")
        if not is_int(self.substeps) or self.substeps < 1:
            raise ConfigError(f"substeps must be an integer >= 1, got {self.substeps!r}")
        if not is_int(self.horizon) or self.horizon < 2:
            raise ConfigError(f"horizon must be an integer >= 2, got {self.horizon!r}")
        if not is_int(self.n_paths) or self.n_paths < 1:
            raise ConfigError(f"n_paths must be an integer >= 1, got {self.n_paths!r}")
        if not isinstance(self.scheme, Scheme):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if not is_int(self.seed) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.noise_substeps is not None:
            if not is_int(self.noise_substeps) or self.noise_substeps % self.substeps:
                raise ConfigError("noise_substeps must be a multiple of substeps")


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    params: HestonParams
    config: SimConfig
    logprice: np.ndarray  # (M, N+1), at interval boundaries
    variance: np.ndarray  # (M, N+1), raw (untruncated) V at interval boundaries
    returns: np.ndarray  # (M, N)
    integrated_variance: np.ndarray
    adapted_integral: np.ndarray
    lookahead_integral: np.ndarray  # last column NaN
    level_integral: np.ndarray | None = None

    @property
    def n_paths(self) -> int:
        return self.returns.shape[0]

    @property
    def horizon(self) -> int:
        return self.returns.shape[1]

    def interval(self, k: int) -> int:
        """Column index of the 1-based interval ``k``."""
        return k - 1

    def same_as(self, other: PathEnsemble) -> bool:
        """Bitwise equality of every stored array (NaN matches NaN)."""
        names = ("logprice", "variance", "returns", "integrated_variance",
                 "adapted_integral", "lookahead_integral")
        for name in names:
            if getattr(self, name).tobytes() != getattr(other, name).tobytes():
                return False
        a, b = self.level_integral, other.level_integral
        if (a is None) != (b is None):
            return False
        return a is None or a.tobytes() == b.tobytes()


def correlated_increments(rho: float, dt: float, rng: np.random.Generator, size=None):
    """Draw ``(dB, dW)`` with variance ``dt`` each and correlation ``rho``."""
    z = rng.standard_normal((2,) if size is None else (2, *np.atleast_1d(size)))
    return correlate(rho, dt, z[0], z[1])


def correlate(rho: float, dt: float, z1, z2):
    """Map independent standard normals to correlated Brownian increments."""
    sq = math.sqrt(dt)
    dB = sq * z1
    dW = rho * dB + math.sqrt(max(1.0 - rho * rho, 0.0)) * sq * z2
    return dB, dW


def step_euler_full_truncation(p, v, dB, dW, dt: float, params: HestonParams):
    """One Euler step with ``max(V, 0)`` in both drift and diffusion.

    The returned variance may be negative; truncation is applied when it is
    next used.
    """
    vp = np.maximum(v, 0.0)
    sv = np.sqrt(vp)
    p_next = p + (params.mu + params.c * vp) * dt + sv * dB
    v_next = v + params.kappa * (params.theta - vp) * dt + params.sigma * sv * dW
    return p_next, v_next


def step_milstein(p, v, dB, dW, dt: float, params: HestonParams):
    """Full-truncation Euler step plus ``(sigma^2 / 4)(dW^2 - dt)`` on the variance."""
    p_next, v_next = step_euler_full_truncation(p, v, dB, dW, dt, params)
    return p_next, v_next + 0.25 * params.sigma**2 * (dW * dW - dt)


_STEPPERS = {Scheme.EULER: step_euler_full_truncation, Scheme.MILSTEIN: step_milstein}


def sample_v0(params: HestonParams, rng: np.random.Generator, size=None):
    """Initial variance under the parameters' policy.

    The stationary law is gamma with shape ``2 kappa theta / sigma^2`` and
    scale ``sigma^2 / (2 kappa)``; it collapses to ``theta`` when sigma is 0.
    """
    policy = params.v0_policy
    if policy is V0Policy.THETA:
        value = params.theta
    elif policy is V0Policy.FIXED:
        value = params.v0_value
    elif params.sigma == 0:
        value = params.theta
    else:
        shape = 2.0 * params.kappa * params.theta / params.sigma**2
        scale = params.sigma**2 / (2.0 * params.kappa)
        return rng.gamma(shape, scale, size=size)
    return value if size is None else np.full(size, value, dtype=float)


def path_stream(seed: int, index: int) -> np.random.Generator:
    """Counter-based generator for one path (or antithetic pair)."""
    return np.random.Generator(np.random.Philox(key=seed | (index << 64)))


def draw_path_noise(params: HestonParams, config: SimConfig, start: int, stop: int):
    """Initial variances and standard normals for paths ``start:stop``.

    Returns ``v0`` of shape ``(b,)`` and ``z`` of shape ``(b, N, m_noise, 2)``.
    Under antithetic sampling, path ``2j + 1`` reuses the stream of path
    ``2j`` with every normal negated (and the same initial variance).
    """
    n, m = config.horizon, config.noise_resolution
    b = stop - start
    v0 = np.empty(b)
    z = np.empty((b, n, m, 2))
    cache = {}
    for row, i in enumerate(range(start, stop)):
        if config.antithetic:
            pair = i // 2
            if pair not in cache:
                rng = path_stream(config.seed, pair)
                cache = {pair: (sample_v0(params, rng), rng.standard_normal((n, m, 2)))}
            v, draws = cache[pair]
            v0[row] = v
            z[row] = -draws if i % 2 else draws
        else:
            rng = path_stream(config.seed, i)
            v0[row] = sample_v0(params, rng)
            z[row] = rng.standard_normal((n, m, 2))
    return v0, z


def coarsen_noise(z: np.ndarray, substeps: int) -> np.ndarray:
    """Sum groups of fine standard normals into ``substeps`` standard normals per interval."""
    b, n, m_fine, _ = z.shape
    if m_fine == substeps:
        return z
    r = m_fine // substeps
    return z.reshape(b, n, substeps, r, 2).sum(axis=3) / math.sqrt(r)


def integrate_block(params: HestonParams, config: SimConfig, v0: np.ndarray, z: np.ndarray) -> dict:
    """Run the scheme over one block of paths from given initial variances and normals.

    ``z`` has shape ``(b, N, m, 2)`` at the simulation resolution
    (``m == config.substeps``). Deterministic in its inputs; the look-ahead
    integral is formed in a second pass over the completed sub-grid path.
    """
    step = _STEPPERS[config.scheme]
    b, n, m, _ = z.shape
    dt = config.dt
    dB_all, dW_all = correlate(params.rho, dt, z[..., 0], z[..., 1])

    p = np.zeros(b)
    v = np.asarray(v0, dtype=float).copy()
    fine_p = np.empty((b, n * m + 1))
    fine_p[:, 0] = 0.0
    shocks = np.empty((b, n * m))  # sqrt(V+) dB per sub-step

    logprice = np.empty((b, n + 1))
    variance = np.empty((b, n + 1))
    iv = np.zeros((b, n))
    s_corr = np.zeros((b, n))
    s_level = np.zeros((b, n)) if config.track_level_integral else None
    logprice[:, 0] = p
    variance[:, 0] = v

    for k in range(n):
        p_start = p.copy()
        for j in range(m):
            dB = dB_all[:, k, j]
            vp = np.maximum(v, 0.0)
            x = np.sqrt(vp) * dB
            shocks[:, k * m + j] = x
            iv[:, k] += vp * dt
            s_corr[:, k] += (p - p_start) * x
            if s_level is not None:
                s_level[:, k] += p * x
            p, v = step(p, v, dB, dW_all[:, k, j], dt, params)
            fine_p[:, k * m + j + 1] = p
        logprice[:, k + 1] = p
        variance[:, k + 1] = v

    s_wrong = np.full((b, n), np.nan)
    span = (n - 1) * m
    ahead = fine_p[:, m:m + span] - fine_p[:, :span]
    s_wrong[:, : n - 1] = 2.0 * (ahead * shocks[:, :span]).reshape(b, n - 1, m).sum(axis=2)

    out = dict(
        logprice=logprice,
        variance=variance,
        returns=np.diff(logprice, axis=1),
        integrated_variance=iv,
        adapted_integral=2.0 * s_corr,
        lookahead_integral=s_wrong,
    )
    if s_level is not None:
        out["level_integral"] = 2.0 * s_level
    return out


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(workers))


def simulate_paths(
    params: HestonParams,
    config: SimConfig,
    *,
    workers: int | None = None,
    max_cells: int = MAX_ENSEMBLE_CELLS,
) -> PathEnsemble:
    """Simulate ``config.n_paths`` independent Heston paths.

    Output is bit-for-bit reproducible from ``(params, config)``; ``workers``
    (default: ``$HESTONLAB_WORKERS`` or the CPU count) only changes speed.
    """
    try:
        params.check()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    config.check()
    if config.n_paths * config.horizon > max_cells:
        raise ResourceError(
            f"{config.n_paths} paths x {config.horizon} intervals exceeds the budget of {max_cells} cells"
        )

    def run(start: int) -> tuple[int, dict]:
        stop = min(start + BLOCK_PATHS, config.n_paths)
        v0, z = draw_path_noise(params, config, start, stop)
        z = coarsen_noise(z, config.substeps)
        return start, integrate_block(params, config, v0, z)

    starts = range(0, config.n_paths, BLOCK_PATHS)
    n_workers = resolve_workers(workers)
    if n_workers == 1:
        blocks = [run(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            blocks = list(pool.map(run, starts))
    blocks.sort(key=lambda item: item[0])

    keys = blocks[0][1].keys()
    arrays = {key: np.concatenate([blk[key] for _, blk in blocks], axis=0) for key in keys}
    return PathEnsemble(params=params, config=config, **arrays)


def replace_arrays(ensemble: PathEnsemble, **arrays) -> PathEnsemble:
    """Copy of ``ensemble`` with some per-interval arrays swapped (used for synthetic tests)."""
    fields = {
        name: getattr(ensemble, name)
        for name in ("logprice", "variance", "returns", "integrated_variance",
                     "adapted_integral", "lookahead_integral", "level_integral")
    }
    fields.update(arrays)
    return PathEnsemble(params=ensemble.params, config=ensemble.config, **fields)
