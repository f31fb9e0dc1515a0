"""Command-line entry point.

Configuration is resolved in the order built-in defaults, preset, config
file, flags; later sources override earlier ones.  Config files are flat
``key = value`` text with ``#`` comments, and the ``manifest.txt`` written
into every output directory is itself a valid config file.
"""
from __future__ import annotations

import argparse
import logging
import os
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .experiments import (
    StudyConfig,
    default_workers,
    fit_rate,
    run_study,
    fit_loglog,
    time_increments,
    write_error_table,
    write_pathwise_table,
    write_rates,
)
from .grid import build_grid, synthesize
from .integrators import StepperKind, evolve, steps_for_time
from .model import Nonlinearity, ProblemSpec, initial_state, preset as get_preset
from .noise import sample_path

log = logging.getLogger("sphere_swave")

COMMANDS = ("simulate", "converge-space", "converge-time", "regularity", "validate")
OUT_ENV = "SPHERE_SWAVE_OUT"

# key -> parser for values coming from text
_LIST = "list"
KEYS: dict[str, Any] = {
    "preset": str,
    "scale": str,
    "kappa": _LIST,
    "kappa_ref": int,
    "h": _LIST,
    "h_ref": float,
    "T": float,
    "beta": float,
    "delta": float,
    "alpha": float,
    "gamma": float,
    "f": str,
    "g": str,
    "stepper": str,
    "reference_stepper": str,
    "samples": int,
    "seed": int,
    "p": int,
    "workers": int,
    "out": str,
    "times": _LIST,
    "sim_kappa": int,
    "sim_h": float,
    "plots": str,
}
DEFAULTS: dict[str, Any] = dict(
    scale="desk", f="coef-sine", g="identity", beta=1.0, delta=1.0, stepper="STM",
    samples=20, seed=0, p=1, plots="yes",
)


class ConfigError(ValueError):
    pass


def _parse_value(key: str, raw: Any) -> Any:
    kind = KEYS[key]
    try:
        if kind is _LIST:
            if isinstance(raw, (list, tuple)):
                return [float(x) for x in raw]
            return [float(x) for x in str(raw).replace(" ", "").split(",") if x]
        if kind is int:
            val = float(raw)
            if val != int(val):
                raise ValueError
            return int(val)
        return kind(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value {raw!r} for {key}") from None


def read_config_file(path: str | os.PathLike) -> dict[str, Any]:
    out: dict[str, Any] = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{num}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in KEYS:
            raise ConfigError(f"{path}:{num}: unknown key {key!r}")
        out[key] = _parse_value(key, val)
    return out


@dataclass
class RunConfig:
    """Fully resolved settings for one command."""

    command: str
    values: dict[str, Any] = field(default_factory=dict)
    # keys set by a config file or flag rather than a preset or default
    explicit: frozenset = frozenset()

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def problem(self, kappa: int = 0) -> ProblemSpec:
        v = self.values
        return ProblemSpec(
            kappa, v["T"], v["f"], v["g"], v["beta"], v["delta"], v.get("gamma"), v.get("alpha")
        )

    def steppers(self) -> list[StepperKind]:
        try:
            return [StepperKind.parse(s) for s in str(self["stepper"]).split(",") if s.strip()]
        except ValueError:
            raise ConfigError(f"invalid value {self['stepper']!r} for stepper; use STM, SI or STM,SI") from None

    def study(self, stepper: StepperKind | None = None) -> StudyConfig:
        v = self.values
        if self.command == "converge-space":
            need = ("kappa", "kappa_ref", "h")
            kind, res, ref, fixed = "space", [int(k) for k in v.get("kappa", [])], v.get("kappa_ref"), _single(v, "h")
        else:
            need = ("kappa", "h", "h_ref")
            kind, res, ref, fixed = "time", v.get("h", []), v.get("h_ref"), int(_single(v, "kappa"))
        for key in need:
            if v.get(key) is None:
                raise ConfigError(f"missing required setting {key}")
        return StudyConfig(
            kind, self.problem(), res, ref, fixed, v["samples"], v["seed"], v["p"],
            stepper or self.steppers()[0], v.get("reference_stepper"),
        )

    def manifest(self) -> str:
        lines = [
            f"# sphere-swave {__version__} command={self.command}",
            f"# python {platform.python_version()} numpy {np.__version__}",
        ]
        for key in KEYS:
            if key in self.values and self.values[key] is not None:
                val = self.values[key]
                if isinstance(val, list):
                    val = ",".join(_fmt(x) for x in val)
                elif isinstance(val, float):
                    val = _fmt(val)
                lines.append(f"{key} = {val}")
        return "\n".join(lines) + "\n"


def _fmt(x) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 2**53 else f"{x:.17g}"


def _single(v: dict, key: str):
    val = v.get(key)
    if val is None:
        raise ConfigError(f"missing required setting {key}")
    if isinstance(val, list):
        if len(val) != 1:
            raise ConfigError(f"{key} takes a single value for this command, got {len(val)}")
        return val[0]
    return val


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sphere-swave", description="Stochastic wave equation on the sphere")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value settings file")
        p.add_argument("--preset", help="named experiment (fig1, fig4 .. fig8)")
        p.add_argument("--scale", choices=("desk", "paper"), help="preset size")
        p.add_argument("--kappa", help="truncation degree(s), comma separated")
        p.add_argument("--kappa-ref", dest="kappa_ref")
        p.add_argument("--h", help="step size(s), comma separated; lags for regularity")
        p.add_argument("--h-ref", dest="h_ref", help="reference step; fine step for regularity")
        p.add_argument("--T")
        for key in ("beta", "delta", "alpha", "gamma", "f", "g", "samples", "seed", "p", "workers", "out", "times"):
            p.add_argument(f"--{key}")
        p.add_argument("--stepper", help="STM, SI or STM,SI")
        p.add_argument("--reference-stepper", dest="reference_stepper")
        p.add_argument("--no-plots", dest="plots", action="store_const", const="no")
    return ap


def parse_config(argv: Sequence[str] | None = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if v is not None and k not in ("command", "config")}
    values: dict[str, Any] = dict(DEFAULTS)
    from_file = read_config_file(args.config) if args.config else {}
    name = flags.get("preset", from_file.get("preset"))
    scale = flags.get("scale", from_file.get("scale", DEFAULTS["scale"]))
    if name:
        try:
            pre = get_preset(name)
            values.update(pre.settings(scale))
        except (KeyError, ValueError) as exc:
            raise ConfigError(str(exc).strip("'\"")) from None
    values.update({k: _parse_value(k, v) if k in KEYS else v for k, v in from_file.items()})
    values.update({k: _parse_value(k, v) for k, v in flags.items()})
    if values.get("workers") is None:
        values["workers"] = default_workers()
    if values.get("out") is None:
        values["out"] = os.environ.get(OUT_ENV, "out")
    cfg = RunConfig(args.command, values, frozenset(from_file) | frozenset(flags))
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    v = cfg.values
    if cfg.command == "validate":
        return
    if v.get("T") is None:
        raise ConfigError("missing required setting T (give --T or a preset)")
    for key in ("f", "g"):
        try:
            Nonlinearity.parse(v[key])
        except ValueError:
            choices = ", ".join(n.value for n in Nonlinearity)
            raise ConfigError(f"invalid value {v[key]!r} for {key}; choose from {choices}") from None
    try:
        spec = cfg.problem(0)
        # echo the resolved thresholds so the manifest pins them
        v["gamma"], v["alpha"] = spec.gamma, spec.alpha
        cfg.steppers()
        if cfg.command in ("converge-space", "converge-time"):
            cfg.study()
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if v["workers"] < 1:
        raise ConfigError("workers must be at least 1")


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.txt").write_text(cfg.manifest())
    return out


def _plots(cfg: RunConfig) -> bool:
    return str(cfg.get("plots", "yes")).lower() not in ("no", "false", "0")


def cmd_simulate(cfg: RunConfig) -> int:
    v = cfg.values
    # a preset's simulation sizes apply unless kappa / h were given explicitly
    kappa = int(_single(v, "kappa") if "kappa" in cfg.explicit or not v.get("sim_kappa") else v["sim_kappa"])
    h = float(_single(v, "h") if "h" in cfg.explicit or not v.get("sim_h") else v["sim_h"])
    spec = cfg.problem(kappa)
    times = sorted({0.0, spec.T, *v.get("times", [])})
    for t in times:
        if t > spec.T:
            raise ConfigError(f"output time {t} exceeds T = {spec.T}")
        steps_for_time(t, h)
    out = _out_dir(cfg)
    X0 = initial_state(spec.gamma, kappa)
    n_steps = steps_for_time(spec.T, h)
    if n_steps:
        path = sample_path((v["seed"], 0), spec.spectrum(), kappa, h, n_steps)
        states = evolve(X0, path, spec, cfg.steppers()[0], times)
    else:
        states = [X0]
    grid = spec.grid or build_grid(kappa)
    for t, X in zip(times, states):
        name = "u_t0" if t == 0 else ("u_T" if t == spec.T else f"u_t{_fmt(t)}")
        field_ = synthesize(X.u, grid)
        field_.to_csv(out / f"{name}.csv")
        if _plots(cfg):
            from .plotting import plot_surface

            plot_surface(field_, out / f"{name}.png", title=f"t = {_fmt(t)}")
        print(f"wrote {out / (name + '.csv')}")
    return 0


def _rates(table: str, records, rows: list) -> None:
    if len(records) < 3:
        log.warning("%s: fewer than 3 resolutions, rate fit skipped", table)
        return
    for metric in ("position", "velocity", "state", "pathwise-max"):
        try:
            rows.append((table, metric, fit_rate(records, metric)))
        except ValueError as exc:
            log.warning("%s %s: %s", table, metric, exc)


def cmd_converge(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    kind = "space" if cfg.command == "converge-space" else "time"
    tables = {}
    rate_rows: list = []
    steppers = cfg.steppers() if kind == "time" else cfg.steppers()[:1]
    for stepper in steppers:
        study = cfg.study(stepper)
        records = run_study(study, workers=cfg["workers"])
        table = kind if kind == "space" else f"time_{stepper.value}"
        write_error_table(records, out / f"errors_{table}.csv")
        write_pathwise_table(records, out / f"pathwise_{table}.csv")
        _rates(table, records, rate_rows)
        tables[stepper.value] = records
        for r in records:
            print(f"{table} {_fmt(r.resolution)}: state {r.err_state:.4g} (se {r.se_state:.2g})")
    write_rates(rate_rows, out / "rates.csv")
    for table, metric, est in rate_rows:
        print(f"rate {table} {metric}: {est.slope:.3f}")
    if _plots(cfg):
        from .plotting import plot_errors, plot_pathwise

        xlabel = "kappa" if kind == "space" else "h"
        guide = (-1.0, -0.5) if kind == "space" else (1.0, 0.5)
        plot_errors(tables, out / f"errors_{kind}.png", xlabel, guide)
        plot_pathwise(tables, out / f"pathwise_{kind}.png", xlabel)
    return 0


def cmd_regularity(cfg: RunConfig) -> int:
    v = cfg.values
    out = _out_dir(cfg)
    kappa = int(_single(v, "kappa"))
    taus = v.get("h") or [2.0**-j for j in range(3, 7)]
    taus, means = time_increments(
        cfg.problem(), kappa, taus, v["samples"], v.get("h_ref"), seed=v["seed"], workers=v["workers"]
    )
    with open(out / "regularity.csv", "w") as fh:
        fh.write("tau,mean_sq_increment\n")
        for t, m in zip(taus, means):
            fh.write(f"{t:.17g},{m:.17g}\n")
    rows = []
    if len(taus) >= 3:
        est = fit_loglog(taus, means)
        rows.append(("regularity", "position", est))
        print(f"regularity slope {est.slope:.3f} (expected about {2 * min(1.0, v['beta'], v['delta']):g})")
    else:
        log.warning("fewer than 3 lags, rate fit skipped")
    write_rates(rows, out / "rates.csv")
    return 0


def cmd_validate(cfg: RunConfig) -> int:
    from .validation import run_checks

    kappa = int(_single(cfg.values, "kappa")) if cfg.get("kappa") else 8
    results = run_checks(kappa, seed=cfg["seed"])
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    return 0 if all(r.passed for r in results) else 1


DISPATCH = {
    "simulate": cmd_simulate,
    "converge-space": cmd_converge,
    "converge-time": cmd_converge,
    "regularity": cmd_regularity,
    "validate": cmd_validate,
}


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = parse_config(argv)
        return DISPATCH[cfg.command](cfg)
    except ConfigError as exc:
        print(f"sphere-swave: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"sphere-swave: error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"sphere-swave: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
