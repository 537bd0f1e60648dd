"""Discrete checks of the balayage identity for ``U = X - X*`` and ``K = psi(X*)``.

On the grid the zero set of ``U`` is the set of indices where a new running
maximum is attained, detected by exact comparison. ``sigma(t)`` is the last
such index strictly before ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, UsageError
from .functionals import AugmentedPath


@dataclass(frozen=True)
class FVFunction:
    """A function of finite variation on ``(0, inf)``."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    kind: str
    name: str = ""

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise DomainError(f"{self.name or 'psi'} evaluated at a negative argument")
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.asarray(self.evaluator(x), dtype=float)


def constant_psi(value: float = 1.0) -> FVFunction:
    return FVFunction(lambda x: np.full(x.shape, float(value)), "smooth-monotone", "constant")


def identity_psi() -> FVFunction:
    return FVFunction(lambda x: x, "smooth-monotone", "identity")


def power_psi(exponent: float) -> FVFunction:
    return FVFunction(lambda x: x ** exponent, "smooth-monotone", f"power({exponent:g})")


def inv_sqrt_psi() -> FVFunction:
    return FVFunction(lambda x: x ** -0.5, "smooth-monotone", "inv_sqrt")


def step_psi(level: float = 0.25) -> FVFunction:
    return FVFunction(lambda x: (x >= level).astype(float), "step", "step")


PSI_REGISTRY: dict[str, Callable[..., FVFunction]] = {
    "constant": constant_psi,
    "identity": identity_psi,
    "inv_sqrt": inv_sqrt_psi,
    "step": step_psi,
}


def make_psi(name: str, **kwargs) -> FVFunction:
    try:
        factory = PSI_REGISTRY[name]
    except KeyError:
        raise UsageError(f"unknown psi {name!r}; choose from {sorted(PSI_REGISTRY)}") from None
    return factory(**kwargs)


def sigma_indices(aug: AugmentedPath) -> np.ndarray:
    """``sigma[t]`` = last index ``s < t`` with ``x[s] == xstar[s]``; ``sigma[0] = 0``."""
    x, xs = aug.x, aug.xstar
    idx = np.arange(x.shape[-1])
    last_upto = np.maximum.accumulate(np.where(x == xs, idx, 0), axis=-1)
    sigma = np.zeros_like(last_upto)
    sigma[..., 1:] = last_upto[..., :-1]
    return sigma


def last_zero_before(aug: AugmentedPath, t_index: int) -> int:
    """Last grid index strictly before ``t_index`` where ``U = X - X*`` vanishes."""
    if aug.w.ndim != 1:
        raise UsageError("last_zero_before expects a single path")
    if not 1 <= t_index <= aug.grid.n_steps:
        raise UsageError(f"t_index must lie in [1, {aug.grid.n_steps}], got {t_index}")
    zeros = np.flatnonzero(aug.x[:t_index] == aug.xstar[:t_index])
    return int(zeros[-1]) if zeros.size else 0


def _check_start(aug: AugmentedPath, start_index: int) -> int:
    if not 1 <= start_index <= aug.grid.n_steps:
        raise UsageError(f"start_index must lie in [1, {aug.grid.n_steps}], got {start_index}")
    if np.any(aug.wstar[..., start_index] <= 0):
        raise UsageError("running maximum must be positive at start_index")
    return int(start_index)


def _sup_from(diff: np.ndarray, start: int) -> np.ndarray:
    return np.max(np.abs(diff[..., start:]), axis=-1)


def balayage_residual(aug: AugmentedPath, psi: FVFunction, start_index: int = 1) -> np.ndarray:
    """``sup_t |U_t K_sigma(t) - U_s K_sigma(s) - sum_{s<=i<t} K_sigma(i) dU_i|``.

    Returns one value per path. The integrand is evaluated at the left
    endpoint, which keeps it predictable.
    """
    start = _check_start(aug, start_index)
    xs = aug.xstar
    u = aug.x - xs
    k = psi(np.take_along_axis(xs, sigma_indices(aug), axis=-1))
    if not np.all(np.isfinite(k[..., start:])):
        raise DomainError(f"{psi.name or 'psi'} is not finite at X*_sigma on [start, T]")
    k = k[..., start:]
    u = u[..., start:]
    # U vanishes exactly where K may be undefined; the product is 0 there.
    lhs = np.where(u == 0, 0.0, u * k)
    rhs = np.zeros_like(lhs)
    rhs[..., 0] = lhs[..., 0]
    rhs[..., 1:] = lhs[..., :1] + np.cumsum(k[..., :-1] * np.diff(u, axis=-1), axis=-1)
    return _sup_from(lhs - rhs, 0)


def formula_d_residual(aug: AugmentedPath, psi: FVFunction, start_index: int = 1) -> np.ndarray:
    """Sup-residual of the product rule for ``psi(X*) (X - A)`` against
    ``int psi(X*) d(X - A) + int (X* - A) d psi(X*)``, one value per path."""
    start = _check_start(aug, start_index)
    sl = (..., slice(start, None))
    g = psi(aug.xstar[sl])
    if not np.all(np.isfinite(g)):
        raise DomainError(f"{psi.name or 'psi'} is not finite on the running maximum")
    mart = aug.mart[sl]
    lhs = g * mart - g[..., :1] * mart[..., :1]
    terms = (g[..., :-1] * np.diff(mart, axis=-1)
             + (aug.xstar[sl][..., :-1] - aug.comp[sl][..., :-1]) * np.diff(g, axis=-1))
    rhs = np.zeros_like(lhs)
    np.cumsum(terms, axis=-1, out=rhs[..., 1:])
    return _sup_from(lhs - rhs, 0)
