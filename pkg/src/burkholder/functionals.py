"""Path functionals: discrete integrals, local time, compensators, brackets.

All functions act along the last axis, so a batch of paths stacked as a
2-D array is processed row by row without Python loops. Integrals use the
left-endpoint (Ito) convention throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UnsupportedParameterError, UsageError
from .paths import BrownianPath, running_abs_max


def _as_array(x) -> np.ndarray:
    return x.w if isinstance(x, BrownianPath) else np.asarray(x, dtype=float)


def _prepend_zero_cumsum(increments: np.ndarray) -> np.ndarray:
    out = np.zeros(increments.shape[:-1] + (increments.shape[-1] + 1,))
    np.cumsum(increments, axis=-1, out=out[..., 1:])
    return out


def _masked_products(h: np.ndarray, dx: np.ndarray) -> np.ndarray:
    # Undefined integrand values (NaN) are excluded from the sum.
    with np.errstate(invalid="ignore"):
        prod = h * dx
    return np.where(np.isnan(h), 0.0, prod)


def ito_integral(integrand, integrator) -> np.ndarray:
    """``out[k] = sum_{i<k} H[i] (X[i+1] - X[i])`` with ``out[0] = 0``."""
    h, x = _as_array(integrand), _as_array(integrator)
    if h.shape != x.shape:
        raise UsageError(f"integrand shape {h.shape} does not match integrator {x.shape}")
    return _prepend_zero_cumsum(_masked_products(h[..., :-1], np.diff(x, axis=-1)))


def is_monotone(g, axis: int = -1) -> np.ndarray:
    """True where the path is non-decreasing or non-increasing."""
    d = np.diff(_as_array(g), axis=axis)
    return np.all(d >= 0, axis=axis) | np.all(d <= 0, axis=axis)


def stieltjes_integral(integrand, integrator, check: bool = True) -> np.ndarray:
    """Left-endpoint Stieltjes sum against a monotone integrator.

    Steps on which the integrator does not move contribute exactly zero,
    whatever the integrand holds there (including undefined values).
    """
    h, g = _as_array(integrand), _as_array(integrator)
    if h.shape != g.shape:
        raise UsageError(f"integrand shape {h.shape} does not match integrator {g.shape}")
    if check and not np.all(is_monotone(g)):
        raise UsageError("Stieltjes integrator must be monotone; split it first")
    dg = np.diff(g, axis=-1)
    prod = _masked_products(h[..., :-1], dg)
    return _prepend_zero_cumsum(np.where(dg == 0, 0.0, prod))


def local_time_tanaka(path: BrownianPath, envelope: bool = True) -> np.ndarray:
    """Local time at zero from the discrete Tanaka identity.

    ``raw[k] = |w[k]| - |w[0]| - sum_{i<k} sgn(w[i]) (w[i+1] - w[i])`` with
    ``sgn(0) = 0``. Each raw increment is non-negative in exact arithmetic;
    ``envelope=True`` returns the running maximum, which also removes any
    rounding-level decrease.
    """
    w = path.w
    absw = np.abs(w)
    raw = absw - absw[..., :1] - ito_integral(np.sign(w), w)
    return np.maximum.accumulate(raw, axis=-1) if envelope else raw


def local_time_occupation(path: BrownianPath, bandwidth: float | None = None) -> np.ndarray:
    """Occupation-density estimate ``(1 / 2h) * time spent in [-h, h]``.

    ``bandwidth`` defaults to ``sqrt(dt)``.
    """
    dt = path.grid.dt
    h = np.sqrt(dt) if bandwidth is None else float(bandwidth)
    if not h > 0:
        raise DomainError(f"bandwidth must be positive, got {bandwidth}")
    visits = (np.abs(path.w[..., :-1]) <= h).astype(np.int64)
    counts = np.zeros(path.w.shape, dtype=np.int64)
    np.cumsum(visits, axis=-1, out=counts[..., 1:])
    return counts * (dt / (2.0 * h))


def check_power(m: float) -> float:
    """Validate the exponent of ``|W|^m``: only ``m = 1`` and ``m >= 2`` are supported."""
    m = float(m)
    if not np.isfinite(m) or m < 1:
        raise DomainError(f"power m must be >= 1, got {m}")
    if 1 < m < 2:
        raise UnsupportedParameterError(
            f"no compensator is implemented for m in (1, 2), got {m}"
        )
    return m


def _elapsed(path: BrownianPath) -> np.ndarray:
    t = path.grid.times - path.grid.start
    return np.broadcast_to(t, path.w.shape).copy()


def compensator(m: float, path: BrownianPath, local_time: np.ndarray | None = None) -> np.ndarray:
    """Increasing part ``A_m`` of the Doob-Meyer decomposition of ``|W|^m``.

    ``m = 1`` gives the local time at zero (the monotone Tanaka estimate unless
    ``local_time`` is supplied), ``m = 2`` gives elapsed time, and ``m > 2``
    gives ``m(m-1)/2 * int |W|^(m-2) ds`` as a left-endpoint Riemann sum.
    """
    m = check_power(m)
    if m == 1:
        return local_time_tanaka(path) if local_time is None else np.asarray(local_time)
    if m == 2:
        return _elapsed(path)
    integrand = np.abs(path.w[..., :-1]) ** (m - 2)
    return 0.5 * m * (m - 1) * path.grid.dt * _prepend_zero_cumsum(integrand)


def bracket_M(m: float, path: BrownianPath) -> np.ndarray:
    """Quadratic variation ``m^2 int |W|^(2m-2) ds`` of ``|W|^m - A_m``."""
    m = check_power(m)
    if m == 1:
        return _elapsed(path)
    integrand = np.abs(path.w[..., :-1]) ** (2 * m - 2)
    return m * m * path.grid.dt * _prepend_zero_cumsum(integrand)


def power_of_max(wstar, q: float) -> np.ndarray:
    """``wstar ** q`` with NaN marking ``0 ** q`` for negative ``q``."""
    x = np.asarray(wstar, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = x ** q
    if q < 0:
        out = np.where(x > 0, out, np.nan)
    return out


def realized_variation(x) -> np.ndarray:
    """Running sum of squared grid increments."""
    return _prepend_zero_cumsum(np.diff(_as_array(x), axis=-1) ** 2)


@dataclass(frozen=True)
class AugmentedPath:
    """A Brownian path together with the functionals of ``X = |W|^m``."""

    base: BrownianPath
    wstar: np.ndarray
    local_time: np.ndarray
    m: float
    comp: np.ndarray
    mart: np.ndarray
    bracket: np.ndarray

    @property
    def grid(self):
        return self.base.grid

    @property
    def w(self) -> np.ndarray:
        return self.base.w

    @property
    def x(self) -> np.ndarray:
        return np.abs(self.base.w) ** self.m

    @property
    def xstar(self) -> np.ndarray:
        # Running max of x itself, so that x == xstar holds exactly at new maxima.
        return np.maximum.accumulate(self.x, axis=-1)


def augment(path: BrownianPath, m: float) -> AugmentedPath:
    m = check_power(m)
    lt = local_time_tanaka(path)
    comp = compensator(m, path, lt)
    mart = np.abs(path.w) ** m - comp
    return AugmentedPath(path, running_abs_max(path), lt, m, comp, mart, bracket_M(m, path))
