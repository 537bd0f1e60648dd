"""Brownian path generation with deterministic per-path seeding.

Every path owns an independent counter-based stream (Philox keyed by a
seed derived from ``(master_seed, path_index)``), so an ensemble is a pure
function of its :class:`SimConfig` no matter how the paths are batched or
distributed across worker processes.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, UsageError

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# Target number of floats per generated chunk (about 32 MB of float64).
_CHUNK_BUDGET = 4_000_000


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``start = t_0 < t_1 < ... < t_n = horizon``."""

    start: float
    horizon: float
    n_steps: int

    def __post_init__(self):
        if not np.isfinite(self.start) or self.start < 0:
            raise ConfigurationError(f"grid start must be >= 0, got {self.start}")
        if not np.isfinite(self.horizon) or self.horizon <= self.start:
            raise ConfigurationError(
                f"grid horizon must exceed start ({self.start}), got {self.horizon}"
            )
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ConfigurationError(f"n_steps must be a positive integer, got {self.n_steps}")

    @classmethod
    def from_dt(cls, horizon: float, dt: float, start: float = 0.0) -> "TimeGrid":
        """Grid on ``[start, horizon]`` whose step is as close to ``dt`` as possible."""
        if not dt > 0:
            raise ConfigurationError(f"dt must be positive, got {dt}")
        n = max(1, int(round((horizon - start) / dt)))
        return cls(start, horizon, n)

    @property
    def dt(self) -> float:
        return (self.horizon - self.start) / self.n_steps

    @property
    def times(self) -> np.ndarray:
        t = self.start + self.dt * np.arange(self.n_steps + 1)
        t[-1] = self.horizon
        return t

    def index_of(self, t: float) -> int:
        """Index of the grid point nearest to time ``t`` (clipped to the grid)."""
        k = int(round((t - self.start) / self.dt))
        return min(max(k, 0), self.n_steps)


@dataclass(frozen=True)
class SimConfig:
    master_seed: int
    n_paths: int
    grid: TimeGrid

    def __post_init__(self):
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ConfigurationError(f"n_paths must be a positive integer, got {self.n_paths}")
        if not 0 <= int(self.master_seed) <= _MASK64:
            raise ConfigurationError("master_seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class BrownianPath:
    """One trajectory, or a batch of them stacked along the leading axis.

    ``w[..., i]`` is the value at ``grid.times[i]``.
    """

    grid: TimeGrid
    w: np.ndarray

    def __post_init__(self):
        if self.w.shape[-1] != self.grid.n_steps + 1:
            raise UsageError(
                f"path has {self.w.shape[-1]} points, grid expects {self.grid.n_steps + 1}"
            )

    @property
    def n_paths(self) -> int:
        return 1 if self.w.ndim == 1 else self.w.shape[0]


def _splitmix64(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return z ^ (z >> 31)


def derive_path_seed(master_seed: int, path_index: int) -> int:
    """Seed of path ``path_index`` in the ensemble keyed by ``master_seed``.

    ``index -> mix(mix(master) + (index + 1) * golden)`` is a composition of
    bijections on 64-bit words, hence injective for all ``index < 2**64``.
    """
    if path_index < 0:
        raise UsageError(f"path_index must be >= 0, got {path_index}")
    base = _splitmix64(int(master_seed) & _MASK64)
    return _splitmix64((base + (int(path_index) + 1) * _GOLDEN) & _MASK64)


def derive_path_seeds(master_seed: int, start: int, stop: int) -> np.ndarray:
    """Vectorized :func:`derive_path_seed` for indices ``start .. stop - 1``."""
    if start < 0 or stop < start:
        raise UsageError(f"invalid index range [{start}, {stop})")
    base = np.uint64(_splitmix64(int(master_seed) & _MASK64))
    idx = np.arange(start, stop, dtype=np.uint64) + np.uint64(1)
    with np.errstate(over="ignore"):
        z = base + idx * np.uint64(_GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _increments(grid: TimeGrid, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    return rng.standard_normal(grid.n_steps) * np.sqrt(grid.dt)


def generate_brownian(grid: TimeGrid, seed: int, w0: float = 0.0) -> BrownianPath:
    """Exact Gaussian-increment Brownian path on ``grid``.

    When ``grid.start > 0`` the path is restarted at ``w0`` (default 0); pass
    the state of an earlier segment to continue it instead.
    """
    w = np.empty(grid.n_steps + 1)
    w[0] = w0
    np.cumsum(_increments(grid, seed), out=w[1:])
    w[1:] += w0
    return BrownianPath(grid, w)


def generate_paths(config: SimConfig, start: int = 0, stop: int | None = None,
                   w0: float = 0.0) -> BrownianPath:
    """Paths ``start .. stop - 1`` of the ensemble described by ``config``."""
    stop = config.n_paths if stop is None else stop
    grid = config.grid
    seeds = derive_path_seeds(config.master_seed, start, stop)
    w = np.empty((stop - start, grid.n_steps + 1))
    w[:, 0] = w0
    for row, seed in enumerate(seeds):
        np.cumsum(_increments(grid, int(seed)), out=w[row, 1:])
    w[:, 1:] += w0
    return BrownianPath(grid, w)


def refine(path: BrownianPath, seed: int) -> BrownianPath:
    """Halve the step of ``path`` by sampling each midpoint from the Brownian bridge.

    The refined path has exactly the law of Brownian motion on the finer grid
    and agrees with ``path`` on the coarse grid points.
    """
    grid = path.grid
    fine = TimeGrid(grid.start, grid.horizon, 2 * grid.n_steps)
    w = path.w
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    mids = 0.5 * (w[..., :-1] + w[..., 1:])
    mids = mids + rng.standard_normal(mids.shape) * np.sqrt(grid.dt / 4.0)
    out = np.empty(w.shape[:-1] + (fine.n_steps + 1,))
    out[..., ::2] = w
    out[..., 1::2] = mids
    return BrownianPath(fine, out)


def generate_refined_paths(config: SimConfig, n_levels: int, start: int = 0,
                           stop: int | None = None) -> list[BrownianPath]:
    """Coupled ensembles on ``config.grid`` and its ``n_levels - 1`` successive halvings.

    Level ``k`` of path ``i`` is refined with the seed derived from the path
    seed and ``k``, so each path's hierarchy is independent of batching.
    """
    if n_levels < 1:
        raise ConfigurationError(f"n_levels must be >= 1, got {n_levels}")
    stop = config.n_paths if stop is None else stop
    levels = [generate_paths(config, start, stop)]
    seeds = derive_path_seeds(config.master_seed, start, stop)
    for k in range(1, n_levels):
        coarse = levels[-1]
        rows = [refine(BrownianPath(coarse.grid, coarse.w[i]), derive_path_seed(int(s), k)).w
                for i, s in enumerate(seeds)]
        levels.append(BrownianPath(TimeGrid(coarse.grid.start, coarse.grid.horizon,
                                            2 * coarse.grid.n_steps), np.array(rows)))
    return levels


def running_abs_max(path: BrownianPath | np.ndarray) -> np.ndarray:
    """``out[i] = max_{j <= i} |w[j]|``."""
    w = path.w if isinstance(path, BrownianPath) else np.asarray(path, dtype=float)
    return np.maximum.accumulate(np.abs(w), axis=-1)


def default_chunk_size(config: SimConfig) -> int:
    return max(1, min(config.n_paths, _CHUNK_BUDGET // (config.grid.n_steps + 1)))


def _run_chunk(args):
    fn, config, lo, hi, w0, n_levels = args
    if n_levels:
        return fn(generate_refined_paths(config, n_levels, lo, hi))
    return fn(generate_paths(config, lo, hi, w0=w0))


def map_paths(config: SimConfig, fn: Callable[[BrownianPath], object], *,
              workers: int = 1, chunk_size: int | None = None,
              w0: float = 0.0, n_levels: int = 0) -> list:
    """Apply ``fn`` to consecutive path chunks and return results in path order.

    ``fn`` receives a batched :class:`BrownianPath`; it must be picklable when
    ``workers > 1``. Since every path has its own stream and the result list
    is ordered by chunk, any reduction over the concatenated results is
    independent of ``workers`` and ``chunk_size``.

    With ``n_levels > 0``, ``fn`` instead receives the list of coupled
    resolutions from :func:`generate_refined_paths`.
    """
    if workers < 1:
        raise ConfigurationError(f"workers must be >= 1, got {workers}")
    size = chunk_size or max(1, default_chunk_size(config) >> max(n_levels - 1, 0))
    jobs = [(fn, config, lo, min(lo + size, config.n_paths), w0, n_levels)
            for lo in range(0, config.n_paths, size)]
    if workers == 1 or len(jobs) == 1:
        return [_run_chunk(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_chunk, jobs))


def collect(config: SimConfig, fn: Callable[[BrownianPath], np.ndarray], **kwargs) -> np.ndarray:
    """:func:`map_paths` followed by concatenation along the path axis."""
    return np.concatenate(map_paths(config, fn, **kwargs), axis=0)
