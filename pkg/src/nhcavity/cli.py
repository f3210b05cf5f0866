"""Command-line runs: presets or config files in, CSV out.

    python -m nhcavity --preset fig3b --out fig3b.csv
    python -m nhcavity --preset fig2 --sweep phi --points 800 --out fig2.csv
    python -m nhcavity --config my.cfg --oracle --out check.csv

Precedence is flags over config-file values over preset values. Exit codes:
0 success, 2 configuration error, 3 solver error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import ast
import json
import math
import operator
import os
import sys
import tempfile
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import ConfigError, ConflictingFlags, MalformedConfig, SolverError
from .model import SystemConfig, validate_config
from .observables import (
    TIME_COLUMNS,
    Pipeline,
    oracle_time_series,
    phi_sweep,
    time_series,
)
from .presets import RATE_SET, get_preset

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4

DEFAULT_GRIDS = {"time": (0.0, 20 * math.pi, 4000), "phi": (0.0, 4 * math.pi, 1600)}
ORACLE_COLUMNS = ("concurrence_oracle", "pancharatnam_oracle", "norm2_oracle", "amplitude_gap")

_PHYSICAL = {f.name for f in fields(SystemConfig)}
_INTEGER_KEYS = {"kappa", "n_max", "points", "jobs"}
_RUN_KEYS = {"preset", "sweep", "t_start", "t_stop", "points", "jobs", "t_values"}

# ---------------------------------------------------------------------------
# value parsing

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}


def _eval_number(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id == "pi":
        return math.pi
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        value = _eval_number(node.operand)
        return -value if isinstance(node.op, ast.USub) else value
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_number(node.left), _eval_number(node.right))
    raise ValueError("not a number")


def parse_number(text: str) -> float:
    """A float, optionally written with ``pi`` and ``+ - * / **`` (``pi/2``, ``1e-3``)."""
    try:
        return _eval_number(ast.parse(text.strip(), mode="eval").body)
    except (SyntaxError, ValueError, ZeroDivisionError, OverflowError) as exc:
        raise ValueError(f"cannot read {text!r} as a number") from exc


def _parse_value(key, text):
    text = text.strip()
    if key in ("preset", "sweep"):
        return text
    if key == "n_max" and text.lower() in ("auto", "none"):
        return None
    parts = [p for p in text.split(",")]
    values = [parse_number(p) for p in parts]
    if key in _INTEGER_KEYS:
        if len(values) != 1 or values[0] != int(values[0]):
            raise ValueError(f"{key} needs one integer, got {text!r}")
        return int(values[0])
    if key == "t_values":
        return tuple(values)
    if key in ("omega_atom", "gamma_atom"):
        if len(values) == 1:
            return values[0]
        if len(values) == 4:
            return ((values[0], values[1]), (values[2], values[3]))
        raise ValueError(f"{key} takes 1 or 4 values (level-major), got {len(values)}")
    if key in ("omega_field", "gamma_field", "lambda_coupling", "nbar"):
        if len(values) in (1, 2):
            return values[0] if len(values) == 1 else tuple(values)
        raise ValueError(f"{key} takes 1 or 2 values, got {len(values)}")
    if len(values) != 1:
        raise ValueError(f"{key} takes a single value")
    return values[0]


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out, seen = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise MalformedConfig("expected 'key = value'", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _PHYSICAL and key not in _RUN_KEYS:
            raise MalformedConfig("unknown key", line=lineno, field=key)
        if key in seen:
            raise MalformedConfig(f"duplicate key (first on line {seen[key]})", line=lineno, field=key)
        if not value:
            raise MalformedConfig("missing value", line=lineno, field=key)
        try:
            out[key] = _parse_value(key, value)
        except ValueError as exc:
            raise MalformedConfig(str(exc), line=lineno, field=key) from None
        seen[key] = lineno
    return out


# ---------------------------------------------------------------------------
# run specification


@dataclass(frozen=True)
class RunSpec:
    source: str
    variants: tuple  # ((label, SystemConfig), ...) already validated
    sweep: str
    start: float
    stop: float
    count: int
    out: str
    jobs: int = 1
    oracle: bool = False
    counter_rotating: bool = False
    t_values: tuple = ()
    notes: dict = field(default_factory=dict)

    def grid(self):
        return np.linspace(self.start, self.stop, self.count)


def build_parser():
    p = argparse.ArgumentParser(
        prog="nhcavity",
        description="Two-atom, two-mode dissipative cavity runs written to CSV.",
    )
    p.add_argument("--preset", help="named parameter set (fig2, fig3a..c, fig4a/b, fig5a/b)")
    p.add_argument("--config", help="key = value parameter file")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--sweep", choices=("time", "phi"))
    p.add_argument("--t-start", type=parse_number, dest="t_start")
    p.add_argument("--t-stop", type=parse_number, dest="t_stop")
    p.add_argument("--points", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--oracle", action="store_true",
                   help="add reference-integrator columns")
    p.add_argument("--counter-rotating", action="store_true", dest="counter_rotating",
                   help="oracle keeps the terms dropped by the rotating-wave approximation")
    return p


def parse_run(args, config_text: str | None = None) -> RunSpec:
    """Resolve flags, config-file values and preset defaults into a :class:`RunSpec`.

    ``config_text`` stands in for the file named by ``--config`` (tests pass
    it directly); when omitted the file is read from disk.
    """
    ns = build_parser().parse_args(args) if isinstance(args, (list, tuple)) else args
    if config_text is None and ns.config:
        try:
            with open(ns.config, encoding="utf-8") as fh:
                config_text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {ns.config!r}: {exc}") from exc
    values = parse_config_text(config_text) if config_text is not None else {}

    preset_name = ns.preset
    if "preset" in values:
        if preset_name and preset_name != values["preset"]:
            raise ConflictingFlags(
                f"--preset {preset_name} disagrees with config preset {values['preset']}"
            )
        preset_name = values["preset"]
    if preset_name is None and config_text is None:
        raise ConflictingFlags("give --preset, --config or both")
    if ns.counter_rotating and not ns.oracle:
        raise ConflictingFlags("--counter-rotating only applies together with --oracle")

    preset = get_preset(preset_name) if preset_name else None
    overrides = {k: v for k, v in values.items() if k in _PHYSICAL}
    if preset is not None:
        raw_variants = [(label, replace(cfg, **overrides)) for label, cfg in preset.variants]
    else:
        raw_variants = [("config", SystemConfig(**overrides))]
    variants = tuple((label, validate_config(cfg)) for label, cfg in raw_variants)

    sweep = ns.sweep or values.get("sweep") or (preset.sweep if preset else "time")
    if sweep not in DEFAULT_GRIDS:
        raise MalformedConfig(f"sweep must be 'time' or 'phi', got {sweep!r}", field="sweep")
    if ns.oracle and sweep != "time":
        raise ConflictingFlags("--oracle applies to time sweeps only")

    start, stop, count = DEFAULT_GRIDS[sweep]
    start = _pick(ns.t_start, values.get("t_start"), start)
    stop = _pick(ns.t_stop, values.get("t_stop"), stop)
    count = _pick(ns.points, values.get("points"), count)
    jobs = _pick(ns.jobs, values.get("jobs"), 1)
    if count < 2:
        raise ConfigError(f"grid needs at least 2 points, got {count}")
    if not stop > start:
        raise ConfigError(f"grid stop {stop} must exceed start {start}")
    if sweep == "time" and start < 0:
        raise ConfigError("time grid must start at t >= 0")
    if jobs < 1:
        raise ConfigError(f"jobs must be positive, got {jobs}")

    t_values = ()
    if sweep == "phi":
        t_values = values.get("t_values") or (preset.t_values if preset else ())
        if not t_values:
            raise ConfigError("a phi sweep needs t_values (config) or a phi preset")

    notes = {}
    if preset_name in ("fig4a", "fig4b"):
        notes["atomic_decay_set"] = list(RATE_SET)
    return RunSpec(
        source=f"preset:{preset_name}" if preset_name else f"config:{ns.config}",
        variants=variants,
        sweep=sweep,
        start=float(start),
        stop=float(stop),
        count=int(count),
        out=ns.out,
        jobs=int(jobs),
        oracle=bool(ns.oracle),
        counter_rotating=bool(ns.counter_rotating),
        t_values=tuple(float(t) for t in t_values),
        notes=notes,
    )


def _pick(flag, config, default):
    if flag is not None:
        return flag
    if config is not None:
        return config
    return default


# ---------------------------------------------------------------------------
# execution


def _fmt(x):
    return format(float(x), ".17g")


def _check_finite(label, columns):
    for name, col in columns.items():
        bad = ~np.isfinite(np.asarray(col, dtype=float))
        if np.any(bad):
            raise SolverError(f"run {label}: non-finite {name} at row {int(np.argmax(bad))}")


def _time_rows(spec, meta):
    grid = spec.grid()
    header = ("run",) + TIME_COLUMNS + (ORACLE_COLUMNS if spec.oracle else ())
    rows = []
    for label, cfg in spec.variants:
        pipe = Pipeline(cfg)
        series = time_series(cfg, grid, jobs=spec.jobs, pipeline=pipe)
        cols = series.columns()
        info = {"initial_tail": series.initial_tail}
        if spec.oracle:
            ref, ref_amps = oracle_time_series(
                cfg, grid, include_counter_rotating=spec.counter_rotating, pipeline=pipe
            )
            gap = np.max(np.abs(ref_amps - pipe.evolver.evolve(pipe.a0, grid)), axis=(1, 2))
            cols.update(
                concurrence_oracle=ref.concurrence,
                pancharatnam_oracle=ref.pancharatnam,
                norm2_oracle=ref.norm2,
                amplitude_gap=gap,
            )
            key = "rwa_discrepancy" if spec.counter_rotating else "oracle_max_gap"
            info[key] = float(np.max(gap))
        _check_finite(label, cols)
        meta["runs"][label].update(info)
        for i in range(len(grid)):
            rows.append([label] + [_fmt(cols[c][i]) for c in header[1:]])
    return header, rows


def _phi_rows(spec, meta):
    phis = spec.grid()
    header = ("run", "t", "phi", "pancharatnam_phase")
    rows = []
    for label, cfg in spec.variants:
        phases = phi_sweep(cfg, spec.t_values, phis)
        _check_finite(label, {"pancharatnam_phase": phases})
        for t, row in zip(spec.t_values, phases):
            rows.extend([label, _fmt(t), _fmt(p), _fmt(v)] for p, v in zip(phis, row))
    return header, rows


def metadata(spec: RunSpec) -> dict:
    return {
        "source": spec.source,
        "sweep": spec.sweep,
        "grid": {"start": spec.start, "stop": spec.stop, "count": spec.count},
        "t_values": list(spec.t_values),
        "oracle": spec.oracle,
        "counter_rotating": spec.counter_rotating,
        "coherent_phase": "real alpha = sqrt(nbar)",
        "normalization": "observables use the trace-normalised reduced state; norm2 is the raw trace",
        "concurrence": "sum formula on the atom-1 reduced state",
        "time_unit": "lambda * t",
        "runs": {label: {"config": cfg.to_dict()} for label, cfg in spec.variants},
        **spec.notes,
    }


def write_csv_atomic(path, header, rows, meta):
    """Write to a temporary file next to ``path`` and rename it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".nhcavity-", suffix=".csv", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(row) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(spec: RunSpec) -> int:
    meta = metadata(spec)
    if spec.sweep == "time":
        header, rows = _time_rows(spec, meta)
    else:
        header, rows = _phi_rows(spec, meta)
    write_csv_atomic(spec.out, header, rows, meta)
    return EXIT_OK


def main(argv=None) -> int:
    try:
        spec = parse_run(build_parser().parse_args(argv))
        return run(spec)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
