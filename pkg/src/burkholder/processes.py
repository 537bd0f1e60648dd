"""The processes ``J(m, c, p)`` and ``Z(phi, alpha)`` and their decompositions.

``J_t = (W*_t)^(p-m) (|W_t|^m - A_{m,t}) + c (W*_t)^p`` with ``J_0 = 0``;
``m = 2`` gives the squared-Brownian family ``(W*)^(p-2) (W^2 - t) + c (W*)^p``
and ``m = 1`` the local-time family. ``Z`` is the same construction for a
general monotone weight ``phi`` of the running maximum ``X* = (W*)^m``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, UsageError
from .functionals import (
    AugmentedPath,
    check_power,
    ito_integral,
    power_of_max,
    stieltjes_integral,
)


@dataclass(frozen=True)
class ProcessSpec:
    m: float
    p: float
    c: float

    def __post_init__(self):
        check_power(self.m)
        if not (np.isfinite(self.p) and self.p > 0):
            raise DomainError(f"p must be positive, got {self.p}")
        if not np.isfinite(self.c):
            raise DomainError(f"c must be finite, got {self.c}")

    @property
    def c_star(self) -> float:
        """Critical value ``(m - p) / p`` of ``c``."""
        return (self.m - self.p) / self.p

    @property
    def alpha(self) -> float | None:
        """``c p / (m - p)``; ``None`` when ``p == m``, where it is undefined."""
        if self.p == self.m:
            return None
        return self.c * self.p / (self.m - self.p)

    @property
    def regime(self) -> str:
        """``'sub'``, ``'super'``, ``'martingale'`` or ``'neither'``.

        ``p <= m`` and ``c >= c*`` makes J a submartingale; ``p >= m`` and
        ``c <= c*`` a supermartingale; ``p == m, c == 0`` is both.
        """
        sub = self.p <= self.m and self.c >= self.c_star
        sup = self.p >= self.m and self.c <= self.c_star
        if sub and sup:
            return "martingale"
        if sub:
            return "sub"
        if sup:
            return "super"
        return "neither"

    @classmethod
    def from_alpha(cls, m: float, p: float, alpha: float) -> "ProcessSpec":
        if p == m:
            raise UsageError("alpha is undefined when p == m")
        return cls(m, p, alpha * (m - p) / p)


@dataclass(frozen=True)
class PhiPair:
    """A weight ``phi`` of the running maximum, its derivative and
    ``Phi(x, z) = -int_z^x y phi'(y) dy``."""

    phi: Callable[[np.ndarray], np.ndarray]
    phi_prime: Callable[[np.ndarray], np.ndarray]
    Phi: Callable[[np.ndarray, np.ndarray], np.ndarray]

    @classmethod
    def power(cls, m: float, p: float) -> "PhiPair":
        """``phi(x) = x^(p/m - 1)``, the weight that turns Z into J."""
        e = p / m - 1.0
        k = (m - p) / p

        def phi(x):
            return np.asarray(x, dtype=float) ** e

        def phi_prime(x):
            return e * np.asarray(x, dtype=float) ** (e - 1.0)

        def Phi(x, z):
            r = p / m
            return k * (np.asarray(x, dtype=float) ** r - np.asarray(z, dtype=float) ** r)

        return cls(phi, phi_prime, Phi)

    @classmethod
    def constant(cls, value: float) -> "PhiPair":
        return cls(
            lambda x: np.full(np.shape(x), float(value)),
            lambda x: np.zeros(np.shape(x)),
            lambda x, z: np.zeros(np.broadcast_shapes(np.shape(x), np.shape(z))),
        )


@dataclass(frozen=True)
class PathDecomposition:
    """``z - z[start] = mart_part + fv_part + residual`` from ``start_index`` on.

    The three parts are zero before ``start_index``.
    """

    z: np.ndarray
    mart_part: np.ndarray
    fv_part: np.ndarray
    residual: np.ndarray
    start_index: int = 0

    def sup_residual(self) -> np.ndarray:
        return np.max(np.abs(self.residual), axis=-1)


def _check_start(aug: AugmentedPath, start_index: int) -> int:
    n = aug.grid.n_steps
    if not 0 <= start_index <= n:
        raise UsageError(f"start_index {start_index} outside grid [0, {n}]")
    return int(start_index)


def build_J(aug: AugmentedPath, spec: ProcessSpec) -> np.ndarray:
    if aug.m != spec.m:
        raise UsageError(f"path augmented with m={aug.m}, spec has m={spec.m}")
    ws = aug.wstar
    with np.errstate(invalid="ignore"):
        j = power_of_max(ws, spec.p - spec.m) * aug.mart + spec.c * ws ** spec.p
    # Undefined prefix (no excursion yet) is pinned to J_0 = 0.
    return np.where(ws > 0, j, 0.0)


def build_Z_general(aug: AugmentedPath, phi_pair: PhiPair, alpha: float,
                    start_index: int = 0) -> np.ndarray:
    """``phi(X*_t) M_t + alpha Phi(X*_t, X*_start)`` for ``t >= start``.

    Entries before ``start_index`` are NaN; entries with ``X* = 0`` are 0.
    """
    start = _check_start(aug, start_index)
    xs = aug.xstar
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        z = phi_pair.phi(xs) * aug.mart + alpha * phi_pair.Phi(xs, xs[..., start:start + 1])
    z = np.where(xs > 0, z, 0.0)
    z[..., :start] = np.nan
    return z


def _from_start(values: np.ndarray, start: int) -> np.ndarray:
    out = np.zeros(values.shape[:-1] + (values.shape[-1] + start,))
    out[..., start:] = values
    return out


def _assemble(z, mart_part, fv_part, start) -> PathDecomposition:
    residual = z - z[..., start:start + 1] - mart_part - fv_part
    residual[..., :start] = 0.0
    return PathDecomposition(z, mart_part, fv_part, residual, start)


def decompose(aug: AugmentedPath, spec: ProcessSpec, start_index: int = 0) -> PathDecomposition:
    """Split J into ``int (W*)^(p-m) dM`` and a Stieltjes integral against ``d(W*)^m``.

    The finite-variation integrand is
    ``(p/m - 1) [(1 - alpha) (W*)^m - A] (W*)^(p-2m)``, written in terms of
    ``c`` so that it stays defined at ``p == m`` (where it reduces to ``c``).
    """
    start = _check_start(aug, start_index)
    z = build_J(aug, spec)
    m, p, c = spec.m, spec.p, spec.c
    sl = (..., slice(start, None))
    ws = aug.wstar[sl]
    mart_part = ito_integral(power_of_max(ws, p - m), aug.mart[sl])
    k_max = (p - m + c * p) / m
    k_comp = p / m - 1.0
    integrand = k_max * power_of_max(ws, p - m)
    if k_comp != 0:
        with np.errstate(invalid="ignore"):
            integrand = integrand - k_comp * aug.comp[sl] * power_of_max(ws, p - 2 * m)
    fv_part = stieltjes_integral(integrand, ws ** m, check=False)
    return _assemble(z, _from_start(mart_part, start), _from_start(fv_part, start), start)


def canonical_decomposition_general(aug: AugmentedPath, phi_pair: PhiPair,
                                    alpha: float) -> PathDecomposition:
    """Semimartingale decomposition of ``Z(phi, alpha)`` started from time 0:
    ``int phi(X*) dM + int ((1 - alpha) X* - A) phi'(X*) dX*``.
    """
    xs = aug.xstar
    positive = xs > 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        dphi = np.where(positive, phi_pair.phi_prime(xs), np.nan)
        weight = np.where(positive, phi_pair.phi(xs), np.nan)
    if np.any(dphi > 0) and np.any(dphi < 0):
        raise UsageError("phi must be monotone on the range of the running maximum")
    z = build_Z_general(aug, phi_pair, alpha, 0)
    mart_part = ito_integral(weight, aug.mart)
    with np.errstate(invalid="ignore"):
        integrand = ((1.0 - alpha) * xs - aug.comp) * dphi
    fv_part = stieltjes_integral(integrand, xs, check=False)
    return _assemble(z, mart_part, fv_part, 0)


def fv_support_holds(decomp: PathDecomposition, aug: AugmentedPath) -> np.ndarray:
    """True per path when FV increments vanish on every step without a new maximum."""
    flat = np.diff(aug.wstar, axis=-1) == 0
    moved = np.diff(decomp.fv_part, axis=-1) != 0
    return ~np.any(flat & moved, axis=-1)
