"""Monte Carlo checks of the strong BDG bounds with explicit constants.

For ``0 < p < 2`` and a bounded stopping time ``tau``:

* ratio form:  ``E[tau / (W*_tau)^(2-p)] <= (2/p) E[(W*_tau)^p]``
* moment form: ``E[tau^(p/2)] <= (2/p)^(p/2) E[(W*_tau)^p]``
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .paths import BrownianPath, SimConfig, collect, running_abs_max
from .stats import StatSummary, combined_se, summarize
from .verification import StoppingRule, stopping_index

ZIO = "zio"
GI = "gi"


def _check_p(p: float) -> float:
    p = float(p)
    if not 0 < p < 2:
        raise DomainError(f"p outside (0,2): {p}")
    return p


def bdg_constant(p: float) -> float:
    """``(2/p)^(p/2)``; equals ``sqrt(2)`` at ``p = 1``."""
    p = _check_p(p)
    return (2.0 / p) ** (p / 2.0)


def zio_constant(p: float) -> float:
    return 2.0 / _check_p(p)


@dataclass(frozen=True)
class StoppedSample:
    """Stopping times and running maxima at those times, one entry per path."""

    rule: StoppingRule
    tau: np.ndarray
    wstar: np.ndarray


def _stopped_values(paths: BrownianPath, rule: StoppingRule) -> np.ndarray:
    idx = stopping_index(rule, paths.w, paths.grid)
    wstar = np.take_along_axis(running_abs_max(paths), idx[:, None], axis=1)[:, 0]
    tau = paths.grid.times[idx] - paths.grid.start
    return np.column_stack([tau, wstar])


def stopped_sample(rule: StoppingRule, config: SimConfig, workers: int = 1) -> StoppedSample:
    stopping_index(rule, np.zeros((1, config.grid.n_steps + 1)), config.grid)
    fn = functools.partial(_stopped_values, rule=rule)
    data = collect(config, fn, workers=workers)
    return StoppedSample(rule, data[:, 0], data[:, 1])


@dataclass(frozen=True)
class BdgReport:
    p: float
    form: str
    lhs: StatSummary
    rhs: StatSummary
    constant: float
    ratio: float
    rule: StoppingRule
    n_se: float = 3.0

    @property
    def excess(self) -> float:
        """``lhs - constant * rhs``; negative when the bound holds."""
        return self.lhs.estimate - self.constant * self.rhs.estimate

    @property
    def excess_se(self) -> float:
        return combined_se(self.lhs.std_error, self.constant * self.rhs.std_error)

    @property
    def violated(self) -> bool:
        return self.excess > self.n_se * self.excess_se


def bdg_report(p: float, sample: StoppedSample, form: str = GI, n_se: float = 3.0) -> BdgReport:
    """Evaluate one bound on an existing sample (common random numbers across ``p``)."""
    p = _check_p(p)
    if form == ZIO:
        lhs_values = sample.tau / sample.wstar ** (2.0 - p)
        constant = zio_constant(p)
    elif form == GI:
        lhs_values = sample.tau ** (p / 2.0)
        constant = bdg_constant(p)
    else:
        raise ValueError(f"unknown form {form!r}")
    lhs = summarize(lhs_values)
    rhs = summarize(sample.wstar ** p)
    return BdgReport(p, form, lhs, rhs, constant, lhs.estimate / rhs.estimate, sample.rule, n_se)


def zio_check(p: float, rule: StoppingRule, config: SimConfig, workers: int = 1) -> BdgReport:
    _check_p(p)
    return bdg_report(p, stopped_sample(rule, config, workers), ZIO)


def gi_check(p: float, rule: StoppingRule, config: SimConfig, workers: int = 1) -> BdgReport:
    _check_p(p)
    return bdg_report(p, stopped_sample(rule, config, workers), GI)


def bdg_sweep(ps, rules, config: SimConfig, workers: int = 1) -> list[BdgReport]:
    """Both forms for every ``(rule, p)``; each rule's sample is shared by all ``p``."""
    ps = [_check_p(p) for p in ps]
    reports = []
    for rule in rules:
        sample = stopped_sample(rule, config, workers)
        for p in ps:
            reports.append(bdg_report(p, sample, ZIO))
            reports.append(bdg_report(p, sample, GI))
    return reports
