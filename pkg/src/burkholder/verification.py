"""Pathwise and statistical checks of the sub/supermartingale property."""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError, UsageError
from .functionals import augment, compensator, local_time_tanaka
from .paths import BrownianPath, SimConfig, TimeGrid, collect, derive_path_seed, running_abs_max
from .processes import ProcessSpec, build_J, decompose
from .stats import StatSummary, summarize


class Monotonicity(enum.Enum):
    NON_DECREASING = "NonDecreasing"
    NON_INCREASING = "NonIncreasing"
    MIXED = "Mixed"


_CODES = {Monotonicity.NON_DECREASING: 0, Monotonicity.NON_INCREASING: 1, Monotonicity.MIXED: 2}


@dataclass(frozen=True)
class MonotonicityVerdict:
    kind: Monotonicity
    max_up_move: float
    max_down_move: float
    tolerance_used: float


def default_tolerance(fv: np.ndarray) -> float:
    """Rounding-level tolerance ``8 n eps (1 + max |fv|)`` for an ``n``-step path.

    Finite-variation parts are built as Stieltjes sums whose increments carry
    the exact sign of the integrand, so only floating-point noise needs
    absorbing.
    """
    fv = np.asarray(fv)
    return 8.0 * fv.shape[-1] * np.finfo(float).eps * (1.0 + float(np.max(np.abs(fv))))


def coarse_tolerance(fv: np.ndarray, dt: float) -> float:
    """``10 dt (1 + max |fv|)``; hides moves below one-step discretization size."""
    return 10.0 * dt * (1.0 + float(np.max(np.abs(fv))))


def monotone_runs(fv) -> tuple[float, float]:
    """Largest total rise and largest total fall over maximal monotone runs.

    Zero increments neither extend nor break a run.
    """
    d = np.diff(np.asarray(fv, dtype=float))
    d = d[d != 0]
    if d.size == 0:
        return 0.0, 0.0
    up = d > 0
    starts = np.flatnonzero(np.r_[True, up[1:] != up[:-1]])
    sums = np.add.reduceat(d, starts)
    rise = sums[sums > 0]
    fall = sums[sums < 0]
    return (float(rise.max()) if rise.size else 0.0,
            float(-fall.min()) if fall.size else 0.0)


def classify_fv(fv, tolerance: float) -> MonotonicityVerdict:
    """Classify one finite-variation path as non-decreasing, non-increasing or mixed.

    A path that is flat within tolerance is reported as non-decreasing.
    """
    if not tolerance >= 0:
        raise UsageError(f"tolerance must be >= 0, got {tolerance}")
    up, down = monotone_runs(fv)
    if down <= tolerance:
        kind = Monotonicity.NON_DECREASING
    elif up <= tolerance:
        kind = Monotonicity.NON_INCREASING
    else:
        kind = Monotonicity.MIXED
    return MonotonicityVerdict(kind, up, down, tolerance)


def classify_paths(fv: np.ndarray, tolerance: float | None = None) -> list[MonotonicityVerdict]:
    """:func:`classify_fv` row by row; ``tolerance=None`` uses :func:`default_tolerance` per path."""
    fv = np.atleast_2d(fv)
    return [classify_fv(row, default_tolerance(row) if tolerance is None else tolerance)
            for row in fv]


@dataclass(frozen=True)
class PhaseRow:
    c: float
    frac_nondecreasing: float
    frac_nonincreasing: float
    frac_mixed: float


def _phase_codes(paths: BrownianPath, m: float, p: float, c_grid: tuple,
                 tolerance: float | None) -> np.ndarray:
    aug = augment(paths, m)
    codes = np.empty((paths.n_paths, len(c_grid)), dtype=np.int8)
    for j, c in enumerate(c_grid):
        fv = decompose(aug, ProcessSpec(m, p, c)).fv_part
        for i, verdict in enumerate(classify_paths(fv, tolerance)):
            codes[i, j] = _CODES[verdict.kind]
    return codes


def phase_scan(m: float, p: float, c_grid, config: SimConfig, workers: int = 1,
               tolerance: float | None = None) -> list[PhaseRow]:
    """Fractions of paths whose finite-variation part is monotone, for each ``c``.

    All values of ``c`` are evaluated on the same ensemble.
    """
    if p == m:
        raise UsageError("p == m: every c is on the boundary, a scan is meaningless")
    c_grid = tuple(float(c) for c in c_grid)
    if not c_grid:
        raise UsageError("c_grid is empty")
    for c in c_grid:
        ProcessSpec(m, p, c)
    fn = functools.partial(_phase_codes, m=m, p=p, c_grid=c_grid, tolerance=tolerance)
    codes = collect(config, fn, workers=workers)
    n = codes.shape[0]
    return [PhaseRow(c, *(float(np.count_nonzero(codes[:, j] == k)) / n for k in range(3)))
            for j, c in enumerate(c_grid)]


@dataclass(frozen=True)
class StoppingRule:
    """A bounded stopping time on the grid.

    ``fixed``: deterministic time ``cap``. ``abs_hit``: first grid time with
    ``|W| >= level``. ``max_hit``: first grid time with ``W >= level``
    (one-sided). Hitting rules stop at ``cap`` when the level is not reached.
    """

    kind: str
    cap: float
    level: float = math.nan

    def __post_init__(self):
        if self.kind not in ("fixed", "abs_hit", "max_hit"):
            raise ConfigurationError(f"unknown stopping rule {self.kind!r}")
        if not (math.isfinite(self.cap) and self.cap > 0):
            raise ConfigurationError(f"stopping cap must be finite and positive, got {self.cap}")
        if self.kind != "fixed" and not (math.isfinite(self.level) and self.level > 0):
            raise ConfigurationError(f"hitting level must be positive, got {self.level}")

    @classmethod
    def fixed(cls, t: float) -> "StoppingRule":
        return cls("fixed", t)

    @classmethod
    def abs_hit(cls, level: float, cap: float) -> "StoppingRule":
        return cls("abs_hit", cap, level)

    @classmethod
    def max_hit(cls, level: float, cap: float) -> "StoppingRule":
        return cls("max_hit", cap, level)

    def __str__(self) -> str:
        if self.kind == "fixed":
            return f"FixedTime({self.cap:g})"
        name = "AbsHit" if self.kind == "abs_hit" else "MaxHit"
        return f"{name}({self.level:g}, cap {self.cap:g})"


def stopping_index(rule: StoppingRule, w: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Grid index of the stopping time for each path (always >= 1)."""
    if rule.cap > grid.horizon * (1 + 1e-12):
        raise ConfigurationError(f"grid horizon {grid.horizon} is shorter than the cap {rule.cap}")
    cap = max(1, grid.index_of(rule.cap))
    w = np.atleast_2d(w)
    if rule.kind == "fixed":
        return np.full(w.shape[0], cap)
    hit = np.abs(w) >= rule.level if rule.kind == "abs_hit" else w >= rule.level
    hit[:, 0] = False
    hit[:, cap + 1:] = False
    return np.where(hit.any(axis=1), hit.argmax(axis=1), cap)


def j_value(spec: ProcessSpec, w, wstar, a) -> np.ndarray:
    """``J`` as a function of the state ``(W_t, W*_t, A_{m,t})``."""
    w, wstar, a = (np.asarray(v, dtype=float) for v in (w, wstar, a))
    with np.errstate(divide="ignore", invalid="ignore"):
        j = wstar ** (spec.p - spec.m) * (np.abs(w) ** spec.m - a) + spec.c * wstar ** spec.p
    return np.where(wstar > 0, j, 0.0)


def _stopped_J(paths: BrownianPath, spec: ProcessSpec, rule: StoppingRule) -> np.ndarray:
    tau = stopping_index(rule, paths.w, paths.grid)[:, None]
    j = build_J(augment(paths, spec.m), spec)
    return np.take_along_axis(np.atleast_2d(j), tau, axis=1)[:, 0]


def optional_stopping_test(spec: ProcessSpec, rule: StoppingRule, config: SimConfig,
                           workers: int = 1) -> StatSummary:
    """Monte Carlo estimate of ``E[J_tau]``; ``J_0 = 0``, so a submartingale needs it >= 0."""
    fn = functools.partial(_stopped_J, spec=spec, rule=rule)
    stopping_index(rule, np.zeros((1, config.grid.n_steps + 1)), config.grid)
    return summarize(collect(config, fn, workers=workers))


def _continuation_increment(paths: BrownianPath, spec: ProcessSpec, wstar: float,
                            a: float, j0: float) -> np.ndarray:
    ws = np.maximum(wstar, running_abs_max(paths)[:, -1])
    if spec.m == 1:
        da = local_time_tanaka(paths)[:, -1]
    else:
        da = compensator(spec.m, paths)[:, -1]
    return j_value(spec, paths.w[:, -1], ws, a + da) - j0


def conditional_drift_test(spec: ProcessSpec, state: tuple[float, float, float], delta: float,
                           inner_config: SimConfig, outer_index: int = 0,
                           workers: int = 1) -> StatSummary:
    """Nested Monte Carlo estimate of ``E[J_{t+delta} - J_t | W_t, W*_t, A_t]``.

    Continuations run on a grid of step ``inner_config.grid.dt`` and are seeded
    from ``(inner_config.master_seed, outer_index, inner index)``.
    """
    w, wstar, a = (float(v) for v in state)
    if not (wstar >= abs(w) and a >= 0 and wstar > 0):
        raise DomainError(f"invalid state (w={w}, wstar={wstar}, a={a})")
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    grid = TimeGrid.from_dt(delta, inner_config.grid.dt)
    cfg = SimConfig(derive_path_seed(inner_config.master_seed, outer_index),
                    inner_config.n_paths, grid)
    j0 = float(j_value(spec, w, wstar, a))
    fn = functools.partial(_continuation_increment, spec=spec, wstar=wstar, a=a, j0=j0)
    return summarize(collect(cfg, fn, workers=workers, w0=w))


def default_rule_family(cap: float = 10.0) -> list[StoppingRule]:
    """Rules used when probing for optional-stopping violations."""
    rules = [StoppingRule.fixed(t) for t in (0.25, 1.0, min(4.0, cap))]
    for level in (0.5, 1.0, 2.0):
        rules.append(StoppingRule.abs_hit(level, cap))
        rules.append(StoppingRule.max_hit(level, cap))
    return rules


def stopping_sweep(spec: ProcessSpec, rules, config: SimConfig,
                   workers: int = 1) -> list[tuple[StoppingRule, StatSummary]]:
    """:func:`optional_stopping_test` over a rule family, most negative z-score first."""
    results = [(rule, optional_stopping_test(spec, rule, config, workers)) for rule in rules]
    return sorted(results, key=lambda item: item[1].z_score())
