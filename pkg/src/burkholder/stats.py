"""Monte Carlo summaries with normal-approximation confidence intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import UsageError


@dataclass(frozen=True)
class StatSummary:
    estimate: float
    std_error: float
    n_samples: int
    ci_level: float = 0.99

    def __post_init__(self):
        if self.n_samples < 2:
            raise UsageError("a summary needs at least two samples")
        if not self.std_error >= 0:
            raise UsageError(f"std_error must be >= 0, got {self.std_error}")
        if not 0 < self.ci_level < 1:
            raise UsageError(f"ci_level must lie in (0, 1), got {self.ci_level}")

    @property
    def ci(self) -> tuple[float, float]:
        half = norm.ppf(0.5 + self.ci_level / 2) * self.std_error
        return self.estimate - half, self.estimate + half

    def z_score(self, target: float = 0.0) -> float:
        """Signed distance from ``target`` in standard errors."""
        diff = self.estimate - target
        if self.std_error == 0:
            return 0.0 if diff == 0 else math.copysign(math.inf, diff)
        return diff / self.std_error

    def within(self, target: float, n_se: float = 3.0) -> bool:
        return abs(self.estimate - target) <= n_se * self.std_error

    def at_least(self, target: float, n_se: float = 3.0) -> bool:
        return self.estimate >= target - n_se * self.std_error

    def at_most(self, target: float, n_se: float = 3.0) -> bool:
        return self.estimate <= target + n_se * self.std_error


def summarize(samples, ci_level: float = 0.99) -> StatSummary:
    """Sample mean and its standard error for a 1-D array of i.i.d. draws."""
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise UsageError("a summary needs at least two samples")
    if not np.all(np.isfinite(x)):
        raise UsageError("samples contain non-finite values")
    return StatSummary(float(x.mean()), float(x.std(ddof=1) / math.sqrt(n)), n, ci_level)


def combined_se(*errors: float) -> float:
    """Standard errors added in quadrature."""
    return math.sqrt(sum(e * e for e in errors))
