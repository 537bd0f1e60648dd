"""Batch command-line front end.

Usage::

    burkholder COMMAND [--config FILE] [--seed N] [--paths N] [--dt X]
                       [--horizon T] [--out PATH] [command flags ...]

Settings are resolved as built-in defaults, then the ``key=value`` config
file, then command-line flags. Every report is a CSV file whose first lines
are ``#``-prefixed ``key=value`` pairs holding the resolved configuration.

Exit codes: 0 all checks passed, 1 a check was violated, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .balayage import PSI_REGISTRY, balayage_residual, formula_d_residual, make_psi
from .errors import BurkholderError, ConfigurationError
from .functionals import augment, local_time_occupation, local_time_tanaka
from .inequalities import bdg_constant, bdg_report, stopped_sample
from .paths import SimConfig, TimeGrid, collect, running_abs_max
from .processes import ProcessSpec, decompose, fv_support_holds
from .stats import summarize
from .verification import (
    Monotonicity,
    StoppingRule,
    classify_paths,
    conditional_drift_test,
    optional_stopping_test,
    phase_scan,
)

COMMON = {
    "seed": (int, 0),
    "paths": (int, 1000),
    "dt": (float, 1e-3),
    "horizon": (float, 1.0),
    "out": (str, "-"),
    "workers": (int, 1),
}
_SPEC = {"m": (float, 2.0), "p": (float, 1.0), "c": (float, 1.0)}
_RULE = {"rule": (str, "fixed"), "level": (float, 1.0), "cap": (float, 1.0)}

SCHEMAS = {
    "simulate": {"checkpoints": (int, 10)},
    "decompose": {**_SPEC, "start": (float, 0.0), "tolerance": (float, None)},
    "scan": {"m": (float, 2.0), "p": (float, 1.0), "c_min": (float, 0.0),
             "c_max": (float, 2.0), "c_steps": (int, 5), "tolerance": (float, None)},
    "stopping": {**_SPEC, **_RULE},
    "drift": {**_SPEC, "w": (float, 1.0), "wstar": (float, 1.0), "a": (float, 0.0),
              "delta": (float, 0.1)},
    "bdg": {"p": (float, 1.0), **_RULE},
    "balayage": {"m": (float, 2.0), "psi": (str, "identity"), "psi_level": (float, 0.25),
                 "start": (float, 0.05)},
    "localtime": {"bandwidth": (float, None)},
}

RULE_KINDS = {"fixed": "fixed", "abshit": "abs_hit", "maxhit": "max_hit"}


@dataclass
class Report:
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    passed: bool = True


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def parse_config_file(path: str) -> dict[str, str]:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigurationError(f"{path}:{lineno}: expected key=value")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def resolve(command: str, file_values: dict[str, str], flag_values: dict[str, str]) -> dict:
    """Merge defaults, config file and flags; convert and validate types."""
    schema = {**COMMON, **SCHEMAS[command]}
    raw = {**file_values, **flag_values}
    unknown = sorted(set(raw) - set(schema) - {"command"})
    if unknown:
        raise ConfigurationError(f"unknown setting(s) for {command}: {', '.join(unknown)}")
    resolved = {}
    for key, (kind, default) in schema.items():
        if key in raw and raw[key] not in (None, ""):
            try:
                resolved[key] = kind(raw[key])
            except ValueError:
                raise ConfigurationError(f"{key}: cannot parse {raw[key]!r}") from None
        else:
            resolved[key] = default
        if kind is float and resolved[key] is not None and not math.isfinite(resolved[key]):
            raise ConfigurationError(f"{key} must be finite")
    if resolved["workers"] < 1:
        raise ConfigurationError("workers must be >= 1")
    return resolved


def _sim(cfg: dict, horizon: float | None = None) -> SimConfig:
    if cfg["paths"] < 2:
        raise ConfigurationError(f"paths must be >= 2, got {cfg['paths']}")
    if horizon is not None:
        cfg["horizon"] = horizon  # reported value is the one simulated
    grid = TimeGrid.from_dt(cfg["horizon"], cfg["dt"])
    return SimConfig(cfg["seed"], cfg["paths"], grid)


def _rule(cfg: dict) -> StoppingRule:
    try:
        kind = RULE_KINDS[cfg["rule"]]
    except KeyError:
        raise ConfigurationError(f"rule must be one of {sorted(RULE_KINDS)}") from None
    return StoppingRule(kind, cfg["cap"], cfg["level"] if kind != "fixed" else math.nan)


def _simulate_chunk(paths, idx):
    w = paths.w[:, idx]
    return np.stack([w, w * w, running_abs_max(paths)[:, idx]], axis=1)


def cmd_simulate(cfg: dict) -> Report:
    sim = _sim(cfg)
    k = cfg["checkpoints"]
    if k < 1:
        raise ConfigurationError("checkpoints must be >= 1")
    idx = np.unique(np.linspace(0, sim.grid.n_steps, k + 1).round().astype(int)[1:])
    data = collect(sim, partial(_simulate_chunk, idx=idx), workers=cfg["workers"])
    rep = Report(["t", "mean_w", "se_w", "mean_w2", "se_w2", "mean_wstar", "se_wstar"])
    for j, i in enumerate(idx):
        t = sim.grid.times[i]
        s = [summarize(data[:, q, j]) for q in range(3)]
        rep.passed &= s[0].within(0.0) and s[1].within(t - sim.grid.start)
        rep.rows.append([t] + [v for x in s for v in (x.estimate, x.std_error)])
    return rep


def _decompose_chunk(paths, spec, start, tolerance):
    aug = augment(paths, spec.m)
    d = decompose(aug, spec, paths.grid.index_of(start))
    verdicts = classify_paths(d.fv_part, tolerance)
    codes = [list(Monotonicity).index(v.kind) for v in verdicts]
    return np.column_stack([d.sup_residual(), codes,
                            [v.max_up_move for v in verdicts],
                            [v.max_down_move for v in verdicts],
                            fv_support_holds(d, aug)])


def cmd_decompose(cfg: dict) -> Report:
    spec = ProcessSpec(cfg["m"], cfg["p"], cfg["c"])
    sim = _sim(cfg)
    data = collect(sim, partial(_decompose_chunk, spec=spec, start=cfg["start"],
                                 tolerance=cfg["tolerance"]), workers=cfg["workers"])
    kinds = list(Monotonicity)
    rep = Report(["path", "sup_residual", "fv_class", "max_up_move", "max_down_move", "support_ok"])
    for i, row in enumerate(data):
        rep.rows.append([i, row[0], kinds[int(row[1])].value, row[2], row[3], bool(row[4])])
    rep.passed = bool(np.all(data[:, 4] == 1))
    return rep


def cmd_scan(cfg: dict) -> Report:
    m, p = cfg["m"], cfg["p"]
    if cfg["c_steps"] < 1 or cfg["c_max"] < cfg["c_min"]:
        raise ConfigurationError("need c_steps >= 1 and c_max >= c_min")
    if p == m:
        raise ConfigurationError("scan needs p != m")
    c_grid = np.linspace(cfg["c_min"], cfg["c_max"], cfg["c_steps"])
    rows = phase_scan(m, p, c_grid, _sim(cfg), workers=cfg["workers"], tolerance=cfg["tolerance"])
    c_star = (m - p) / p
    rep = Report(["c", "frac_nondecreasing", "frac_nonincreasing", "frac_mixed"])
    fracs = []
    for r in rows:
        rep.rows.append([r.c, r.frac_nondecreasing, r.frac_nonincreasing, r.frac_mixed])
        if p < m:
            fracs.append(r.frac_nondecreasing)
            if r.c >= c_star and r.frac_nondecreasing < 0.99:
                rep.passed = False
        else:
            fracs.append(-r.frac_nonincreasing)
            if r.c <= c_star and r.frac_nonincreasing < 0.99:
                rep.passed = False
    rep.passed &= bool(np.all(np.diff(fracs) >= 0))
    return rep


def _claim_holds(spec: ProcessSpec, summary) -> bool:
    regime = spec.regime
    if regime == "sub":
        return summary.at_least(0.0)
    if regime == "super":
        return summary.at_most(0.0)
    if regime == "martingale":
        return summary.within(0.0)
    return True


_STAT_COLUMNS = ["regime", "estimate", "std_error", "n_samples", "ci_low", "ci_high", "z_score"]


def _stat_row(spec, s) -> list:
    lo, hi = s.ci
    return [spec.regime, s.estimate, s.std_error, s.n_samples, lo, hi, s.z_score()]


def cmd_stopping(cfg: dict) -> Report:
    spec = ProcessSpec(cfg["m"], cfg["p"], cfg["c"])
    rule = _rule(cfg)
    s = optional_stopping_test(spec, rule, _sim(cfg, horizon=rule.cap), workers=cfg["workers"])
    return Report(["rule"] + _STAT_COLUMNS, [[str(rule)] + _stat_row(spec, s)], _claim_holds(spec, s))


def cmd_drift(cfg: dict) -> Report:
    spec = ProcessSpec(cfg["m"], cfg["p"], cfg["c"])
    state = (cfg["w"], cfg["wstar"], cfg["a"])
    s = conditional_drift_test(spec, state, cfg["delta"], _sim(cfg, horizon=cfg["delta"]),
                               workers=cfg["workers"])
    return Report(["delta"] + _STAT_COLUMNS, [[cfg["delta"]] + _stat_row(spec, s)],
                  _claim_holds(spec, s))


def cmd_bdg(cfg: dict) -> Report:
    rule = _rule(cfg)
    bdg_constant(cfg["p"])  # validates p before simulating
    sample = stopped_sample(rule, _sim(cfg, horizon=rule.cap), workers=cfg["workers"])
    rep = Report(["form", "p", "rule", "lhs", "lhs_se", "rhs", "rhs_se", "constant", "ratio",
                  "excess", "excess_se", "violated"])
    for form in ("zio", "gi"):
        r = bdg_report(cfg["p"], sample, form)
        rep.rows.append([form, r.p, str(rule), r.lhs.estimate, r.lhs.std_error, r.rhs.estimate,
                         r.rhs.std_error, r.constant, r.ratio, r.excess, r.excess_se, r.violated])
        rep.passed &= not r.violated
    return rep


def _balayage_chunk(paths, m, psi_names, psi_level, start):
    aug = augment(paths, m)
    s = max(1, paths.grid.index_of(start))
    cols = []
    for name in psi_names:
        psi = make_psi(name, level=psi_level) if name == "step" else make_psi(name)
        cols += [balayage_residual(aug, psi, s), formula_d_residual(aug, psi, s)]
    return np.column_stack(cols)


def cmd_balayage(cfg: dict) -> Report:
    names = sorted(PSI_REGISTRY) if cfg["psi"] == "all" else [cfg["psi"]]
    for name in names:
        if name not in PSI_REGISTRY:
            raise ConfigurationError(f"psi must be 'all' or one of {sorted(PSI_REGISTRY)}")
    sim = _sim(cfg)
    if not 0 <= cfg["start"] < sim.grid.horizon:
        raise ConfigurationError("start must lie in [0, horizon)")
    ProcessSpec(cfg["m"], 1.0, 0.0)
    data = collect(sim, partial(_balayage_chunk, m=cfg["m"], psi_names=names,
                                 psi_level=cfg["psi_level"], start=cfg["start"]),
                   workers=cfg["workers"])
    rep = Report(["psi", "median_balayage", "mean_balayage", "max_balayage",
                  "median_formula_d", "mean_formula_d", "max_formula_d"])
    for j, name in enumerate(names):
        b, d = data[:, 2 * j], data[:, 2 * j + 1]
        rep.rows.append([name, np.median(b), b.mean(), b.max(), np.median(d), d.mean(), d.max()])
        if name == "constant":
            rep.passed &= bool(b.max() <= 1e-9 and d.max() <= 1e-9)
    return rep


def _localtime_chunk(paths, bandwidth):
    return np.column_stack([local_time_tanaka(paths)[:, -1],
                            local_time_occupation(paths, bandwidth)[:, -1],
                            np.abs(paths.w[:, -1])])


def cmd_localtime(cfg: dict) -> Report:
    sim = _sim(cfg)
    if cfg["bandwidth"] is not None and cfg["bandwidth"] <= 0:
        raise ConfigurationError("bandwidth must be positive")
    data = collect(sim, partial(_localtime_chunk, bandwidth=cfg["bandwidth"]),
                   workers=cfg["workers"])
    exact = math.sqrt(2 * sim.grid.horizon / math.pi)
    rep = Report(["quantity", "estimate", "std_error", "n_samples", "reference"])
    stats = {
        "tanaka_mean": summarize(data[:, 0]),
        "occupation_mean": summarize(data[:, 1]),
        "abs_w_mean": summarize(data[:, 2]),
        "mean_abs_difference": summarize(np.abs(data[:, 0] - data[:, 1])),
    }
    for name, s in stats.items():
        ref = 0.0 if name == "mean_abs_difference" else exact
        rep.rows.append([name, s.estimate, s.std_error, s.n_samples, ref])
    rep.passed = stats["tanaka_mean"].within(exact)
    return rep


COMMANDS = {
    "simulate": cmd_simulate,
    "decompose": cmd_decompose,
    "scan": cmd_scan,
    "stopping": cmd_stopping,
    "drift": cmd_drift,
    "bdg": cmd_bdg,
    "balayage": cmd_balayage,
    "localtime": cmd_localtime,
}


def render(command: str, cfg: dict, report: Report) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    buf.write(f"# command={command}\r\n")
    for key in sorted(cfg):
        if key in ("out", "workers"):
            continue
        buf.write(f"# {key}={_fmt(cfg[key]) if cfg[key] is not None else 'auto'}\r\n")
    writer.writerow(report.columns)
    for row in report.rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="burkholder", argument_default=argparse.SUPPRESS,
                                     description="Monte Carlo checks of Burkholder-type processes.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="key=value settings file")
    keys = set(COMMON)
    for schema in SCHEMAS.values():
        keys |= set(schema)
    aliases = {"seed": "--seed", "paths": "--paths"}
    for key in sorted(keys):
        parser.add_argument(aliases.get(key, "--" + key.replace("_", "-")), dest=key)
    return parser


def run(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config", None)
    try:
        file_values = parse_config_file(config_path) if config_path else {}
        cfg = resolve(command, file_values, args)
        out = None
        if cfg["out"] != "-":
            out = open(cfg["out"], "w", encoding="utf-8", newline="")
    except (OSError, BurkholderError) as exc:
        print(f"burkholder: {exc}", file=sys.stderr)
        return 2
    try:
        report = COMMANDS[command](cfg)
        text = render(command, cfg, report)
    except BurkholderError as exc:
        print(f"burkholder: {exc}", file=sys.stderr)
        if out is not None:
            out.close()
        return 2
    if out is None:
        sys.stdout.write(text)
    else:
        with out:
            out.write(text)
    return 0 if report.passed else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
