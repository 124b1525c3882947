"""Command-line front end.

    qpelab sweep --method kaiser --m 5 --p 4 --points 10000 --output runs/
    qpelab qsvt --m 5 --d 64 --phi 0.3
    qpelab --config run.ini

A config file holds one ``[run]`` section with ``command = ...`` and the same
keys as the flags (dashes become underscores).
"""
from __future__ import annotations

import argparse
import configparser
import math
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

FORMAT_VERSION = 1
COMMANDS = ("window", "spectrum", "qpe", "qsvt", "phases", "sweep", "scaling", "cost", "report")
WINDOW_KINDS = ("rectangular", "cosine", "sine", "kaiser")


class ConfigError(ValueError):
    """Invalid run configuration; ``key`` names the offending parameter."""

    def __init__(self, kind: str, key: str | None, message: str) -> None:
        self.kind = kind
        self.key = key
        prefix = f"{kind}: {key}: " if key else f"{kind}: "
        super().__init__(prefix + message)


# --- parameter schema -----------------------------------------------------------

@dataclass(frozen=True)
class Param:
    type: Callable[[str], Any]
    check: Callable[[Any], str | None] = lambda v: None
    default: Any = None
    required: bool = False
    help: str = ""


def _int_at_least(lo: int) -> Callable[[int], str | None]:
    return lambda v: None if v >= lo else f"must be >= {lo}"


def _choice(options: Sequence[str]) -> Callable[[str], str | None]:
    return lambda v: None if v in options else f"must be one of {', '.join(options)}"


def _phase(v: float) -> str | None:
    return None if 0.0 <= v < 1.0 else "phase must lie in [0, 1)"


def _even(v: int) -> str | None:
    return None if v >= 0 and v % 2 == 0 else "degree must be even"


def _delta(v: float) -> str | None:
    return None if 0.0 < v < math.sqrt(2.0 / math.pi) else "must lie in (0, sqrt(2/pi))"


def _kappa(v: float) -> str | None:
    return None if 0.0 < v <= 0.25 else "must lie in (0, 0.25]"


def _nonneg(v: float) -> str | None:
    return None if v >= 0 and math.isfinite(v) else "must be a finite non-negative number"


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


COMMON = {
    "output": Param(str, default="qpelab-out", help="output directory"),
    "overwrite": Param(_bool, default=False, help="replace existing files"),
    "plot": Param(_bool, default=False, help="also write SVG figures"),
}
M = Param(int, _int_at_least(1), required=True, help="bits of precision")
P = Param(int, _int_at_least(0), default=0, help="additional phase qubits")
ALPHA = Param(float, _nonneg, help="Kaiser alpha (defaults to the table value)")
DELTA = Param(float, _delta, help="plateau deviation (default from m)")
KAPPA = Param(float, _kappa, default=0.25, help="transition half-width")
SEED = Param(int, _int_at_least(0), default=0)
POINTS = Param(int, _int_at_least(1), default=10_000)

SCHEMA: dict[str, dict[str, Param]] = {
    "window": {"kind": Param(str, _choice(WINDOW_KINDS), required=True),
               "n": Param(int, _int_at_least(1), required=True), "alpha": ALPHA},
    "spectrum": {"kind": Param(str, _choice(WINDOW_KINDS), required=True),
                 "n": Param(int, _int_at_least(1), required=True), "alpha": ALPHA,
                 "pad": Param(int, lambda v: None if v >= 4 and v & (v - 1) == 0
                              else "must be a power of two >= 4", default=64)},
    "qpe": {"phi": Param(float, _phase, required=True), "m": M, "p": P,
            "window": Param(str, _choice(WINDOW_KINDS), default="rectangular"), "alpha": ALPHA,
            "prep": Param(str, _choice(("inject", "circuit")), default="inject")},
    "qsvt": {"phi": Param(float, _phase, required=True), "m": M,
             "d": Param(int, _even, required=True), "delta": DELTA, "kappa": KAPPA, "seed": SEED},
    "phases": {"d": Param(int, _even, required=True), "m": Param(int, _int_at_least(1), default=5),
               "delta": DELTA, "kappa": KAPPA, "seed": SEED,
               "grid": Param(int, _int_at_least(10), default=2000)},
    "sweep": {"method": Param(str, _choice(WINDOW_KINDS + ("qsvt",)), required=True), "m": M, "p": P,
              "alpha": ALPHA, "d": Param(int, _even, default=64), "delta": DELTA, "kappa": KAPPA,
              "seed": SEED, "grid": Param(str, _choice(("period", "full"))), "points": POINTS},
    "scaling": {"window": Param(str, _choice(("cosine", "kaiser")), required=True),
                "m": Param(int, _int_at_least(1), default=5),
                "p_min": Param(int, _int_at_least(0), default=1),
                "p_max": Param(int, _int_at_least(0), default=6), "points": POINTS},
    "cost": {"m": M, "p": P, "d": Param(int, _even, default=0)},
    "report": {"figure": Param(str, _choice(("kaiser", "success", "cost", "scaling", "precision",
                                               "popcount")), required=True),
               "m": Param(int, _int_at_least(1), help="defaults to 4 for kaiser, 5 otherwise"), "points": POINTS, "seed": SEED,
               "qsvt_points": Param(int, _int_at_least(1), default=500),
               "max_m": Param(int, _int_at_least(1), default=14),
               "qsvt_max_m": Param(int, _int_at_least(1), default=8)},
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: dict[str, Any] = field(default_factory=dict)
    format_version: int = FORMAT_VERSION


# --- parsing --------------------------------------------------------------------

def _validate(command: str, raw: dict[str, Any]) -> RunConfig:
    if command not in SCHEMA:
        raise ConfigError("unknown command", None, f"{command!r}; expected one of {', '.join(COMMANDS)}")
    schema = {**SCHEMA[command], **COMMON}
    params: dict[str, Any] = {}
    for key, value in raw.items():
        if key not in schema:
            raise ConfigError("unknown key", key, f"not a parameter of {command!r}")
        if value is None:
            continue
        spec = schema[key]
        try:
            value = spec.type(str(value) if spec.type is _bool else value)
        except (TypeError, ValueError):
            raise ConfigError("bad value", key, f"cannot read {value!r} as {spec.type.__name__}") from None
        problem = spec.check(value)
        if problem:
            raise ConfigError("out of range", key, f"{problem} (got {value!r})")
        params[key] = value
    for key, spec in schema.items():
        if key not in params:
            if spec.required:
                raise ConfigError("missing parameter", key, f"required by {command!r}")
            if spec.default is not None:
                params[key] = spec.default
    _fill_defaults(command, params)
    return RunConfig(command, params)


def _fill_defaults(command: str, params: dict[str, Any]) -> None:
    from .qsp import default_delta
    from .windows import best_alpha

    kind = params.get("kind") or params.get("window") or params.get("method")
    if "alpha" in SCHEMA[command]:
        if kind == "kaiser" and "alpha" not in params:
            if command in ("window", "spectrum"):
                raise ConfigError("missing parameter", "alpha", "required for kaiser windows")
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    params["alpha"] = best_alpha(params.get("p", 0))
            except ValueError as exc:
                raise ConfigError("missing parameter", "alpha", str(exc)) from None
        elif kind != "kaiser" and params.get("alpha", 0.0) != 0.0:
            raise ConfigError("out of range", "alpha", f"only applies to kaiser windows, not {kind}")
    if "delta" in SCHEMA[command] and "delta" not in params:
        params["delta"] = default_delta(params.get("m", 5))
    if command == "sweep" and "grid" not in params:
        params["grid"] = "full" if params["method"] == "qsvt" else "period"
    if command == "sweep" and params["method"] == "qsvt" and params["grid"] != "full":
        raise ConfigError("out of range", "grid", "qsvt sweeps are not periodic; use the full grid")
    if command == "scaling" and params["p_min"] > params["p_max"]:
        raise ConfigError("out of range", "p_min", "must not exceed p_max")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        if "invalid choice" in message:
            raise ConfigError("unknown command", None, message)
        if "unrecognized arguments" in message:
            raise ConfigError("unknown key", None, message)
        if "required" in message:
            raise ConfigError("missing parameter", None, message)
        raise ConfigError("bad value", None, message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qpelab", description="Windowed and QSVT phase estimation experiments.")
    parser.add_argument("--config", help="read the run from a config file")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd)
        for key, spec in {**SCHEMA[cmd], **COMMON}.items():
            flag = "--" + key.replace("_", "-")
            if spec.type is _bool:
                sp.add_argument(flag, dest=key, action="store_const", const="true", help=spec.help)
            else:
                sp.add_argument(flag, dest=key, type=str, help=spec.help)
    return parser


def parse_args(argv: Sequence[str]) -> RunConfig:
    ns = build_parser().parse_args(list(argv))
    if ns.config:
        if ns.command:
            raise ConfigError("bad value", "config", "give either --config or a command, not both")
        return parse_config(Path(ns.config).read_text())
    if not ns.command:
        raise ConfigError("missing parameter", "command", f"expected one of {', '.join(COMMANDS)}")
    raw = {k: v for k, v in vars(ns).items() if k not in ("command", "config") and v is not None}
    return _validate(ns.command, raw)


def parse_config(source: str | Sequence[str]) -> RunConfig:
    """Validated config from config-file text or from a list of CLI flags."""
    if not isinstance(source, str):
        return parse_args(source)
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(source)
    except configparser.Error as exc:
        raise ConfigError("bad value", None, f"unreadable config: {exc}") from None
    if not cp.has_section("run"):
        raise ConfigError("missing parameter", "run", "config needs a [run] section")
    raw = dict(cp["run"])
    version = raw.pop("format_version", str(FORMAT_VERSION))
    if version != str(FORMAT_VERSION):
        raise ConfigError("out of range", "format_version", f"unsupported version {version}")
    command = raw.pop("command", None)
    if command is None:
        raise ConfigError("missing parameter", "command", "config must name a command")
    return _validate(command, raw)


def serialize(config: RunConfig) -> str:
    lines = ["[run]", f"format_version = {config.format_version}", f"command = {config.command}"]
    for key in sorted(config.params):
        v = config.params[key]
        lines.append(f"{key} = {repr(v) if isinstance(v, float) else v}")
    return "\n".join(lines) + "\n"


# --- dispatch -------------------------------------------------------------------

def _phase_fit(params: dict):
    from .cache import cached_phases
    from .qsp import SignFunctionSpec

    spec = SignFunctionSpec(params["delta"], params["kappa"], params["d"])
    return cached_phases(spec, params.get("grid", 2000) if isinstance(params.get("grid"), int) else 2000,
                         seed=params.get("seed", 0))


def execute(config: RunConfig) -> tuple[dict[str, str], dict]:
    """Run a command; returns ``(files, summary)``."""
    from . import report, sweep
    from .qpe import PhaseRegisterSpec, run_qpe, success_probability, coalesce_bins
    from .qsvt_qpe import QsvtQpeConfig, query_cost, run_qsvt_qpe
    from .qsp import phases_to_csv
    from .windows import WindowSpec, make_window, spectrum_metrics

    c, pr = config.command, config.params
    files: dict[str, str] = {}
    # output-only settings stay out of the summary so results do not depend on them
    summary: dict[str, Any] = {"command": c, **{k: v for k, v in pr.items() if k not in COMMON}}
    if c in ("window", "spectrum"):
        win = make_window(WindowSpec(pr["kind"], pr["n"], pr.get("alpha", 0.0)))
        tag = f"{pr['kind']}_n{pr['n']}"
        if c == "window":
            files[f"window_{tag}.csv"] = report.window_csv(win)
        else:
            sm = spectrum_metrics(win, pr["pad"])
            files[f"spectrum_{tag}.csv"] = report.csv_text(
                ["frequency_bin", "magnitude"],
                ((float((i - sm.spectrum.size // 2) / sm.pad_factor), float(v)) for i, v in enumerate(sm.spectrum)))
            summary.update(main_lobe_width_bins=sm.main_lobe_width_bins, max_side_lobe_db=sm.max_side_lobe_db)
    elif c == "qpe":
        reg = PhaseRegisterSpec(pr["m"], pr["p"])
        dist = run_qpe(pr["phi"], reg, WindowSpec(pr["window"], reg.n, pr.get("alpha", 0.0)), pr["prep"])
        coarse = coalesce_bins(dist, pr["p"])
        from .qpe import phase_success_probability
        summary.update(success_probability=phase_success_probability(dist, pr["phi"], pr["m"]),
                       coalesced_success_probability=success_probability(coarse, pr["phi"], pr["m"]))
        files[f"qpe_{pr['window']}_m{pr['m']}_p{pr['p']}.csv"] = report.distribution_csv(dist)
    elif c == "qsvt":
        fit = _phase_fit(pr)
        dist = run_qsvt_qpe(QsvtQpeConfig(pr["m"], fit.phases, pr["phi"]))
        summary.update(success_probability=success_probability(dist, pr["phi"], pr["m"]),
                       achieved_delta=fit.achieved_delta)
        files[f"qsvt_m{pr['m']}_d{pr['d']}.csv"] = report.distribution_csv(dist)
    elif c == "phases":
        fit = _phase_fit(pr)
        summary.update(achieved_delta=fit.achieved_delta, certified=fit.certified)
        files[f"phases_d{pr['d']}.csv"] = phases_to_csv(fit)
    elif c == "sweep":
        if pr["method"] == "qsvt":
            cfg = sweep.SweepConfig("qsvt", pr["m"], phases=_phase_fit(pr).phases, grid="full",
                                    n_points=pr["points"])
        else:
            cfg = sweep.SweepConfig("windowed", pr["m"], pr["method"], pr["p"], pr.get("alpha", 0.0),
                                    grid=pr["grid"], n_points=pr["points"])
        res = sweep.run_sweep(cfg)
        summary.update(res.summary())
        files[f"sweep_{cfg.label}.csv"] = sweep.sweep_csv(res)
        files[f"sweep_{cfg.label}.json"] = report.json_text(summary)
        if pr["plot"]:
            files[f"sweep_{cfg.label}.svg"] = report.svg_text(
                report.success_plot({cfg.label: (res.phis, res.success)}))
    elif c == "scaling":
        st = sweep.scaling_study(pr["window"], pr["m"], range(pr["p_min"], pr["p_max"] + 1), pr["points"])
        tag = f"{pr['window']}_m{pr['m']}"
        files[f"scaling_{tag}.csv"] = report.csv_text(
            ["p", "alpha", "max_failure", "precision_limited"],
            ((pt.p, pt.alpha, pt.max_failure, int(pt.precision_limited)) for pt in st.points))
        if st.fit is not None:
            summary.update(fit_model=st.fit.model, fit_params=list(st.fit.params),
                           fit_residual=st.fit.residual_norm)
        else:
            summary.update(fit_note=st.note)
        files[f"scaling_{tag}.json"] = report.json_text(summary)
        if pr["plot"]:
            files[f"scaling_{tag}.svg"] = report.svg_text(report.scaling_plot([st]))
    elif c == "cost":
        rows = [("windowed", pr["m"], pr["p"], "", query_cost("windowed", pr["m"], p=pr["p"]))]
        if pr["d"]:
            rows.append(("qsvt", pr["m"], "", pr["d"], query_cost("qsvt", pr["m"], d=pr["d"])))
        files[f"cost_m{pr['m']}.csv"] = report.csv_text(["method", "m", "p", "d", "query_cost"], rows)
        summary.update(costs={r[0]: r[4] for r in rows})
    elif c == "report":
        from .figures import build_figure
        files.update(build_figure(pr))
    if c != "sweep" and c != "scaling":
        files.setdefault(f"{c}_summary.json", report.json_text(summary))
    return files, summary


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        config = parse_args(argv)
    except ConfigError as exc:
        print(f"qpelab: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"qpelab: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        from .report import emit_report

        files, summary = execute(config)
        written = emit_report(files, config.params["output"], config.params["overwrite"])
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"qpelab: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    for key in ("success_probability", "log10_max_failure", "achieved_delta", "max_side_lobe_db"):
        if key in summary:
            print(f"{key} = {summary[key]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
