"""Command-line front end: ``trapcool {synth,sweep,curves,verify,wavefn}``.

Exit codes: 0 success, 1 invalid input, 2 verification failure, 3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from . import schrodinger, verify
from .phase import ControlBounds
from .sweep import find_crossovers, gamma_grid, sweep, switching_curve_rows
from .synthesis import Schedule, synthesize

EXIT_OK, EXIT_INVALID, EXIT_VERIFY, EXIT_IO = 0, 1, 2, 3

DEFAULTS = {
    "u1": 1.0,
    "u2": 1.0,
    "gamma": None,
    "gamma_min": None,
    "gamma_max": None,
    "gamma_step": 0.01,
    "dt": None,
    "grid_points": 4096,
    "grid_span": 8.0,
    "format": None,
    "out": None,
    "schedule": None,
    "schedule_out": None,
    "snapshots": None,
    "snapshot_every": 100,
}
DEFAULT_DT = {"verify": 1e-4, "wavefn": 1e-3}
DEFAULT_FORMAT = {"synth": "json", "verify": "json", "wavefn": "json", "sweep": "csv", "curves": "csv"}
FLOAT_KEYS = {"u1", "u2", "gamma", "gamma_min", "gamma_max", "gamma_step", "dt", "grid_span"}
INT_KEYS = {"grid_points", "snapshot_every"}


class UsageError(Exception):
    pass


class VerificationFailed(Exception):
    pass


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def read_config(path: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in DEFAULTS or key == "config":
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def _coerce(key, value):
    if value is None:
        return None
    try:
        if key in FLOAT_KEYS:
            return float(value)
        if key in INT_KEYS:
            return int(value)
    except ValueError:
        raise UsageError(f"invalid value for {key}: {value!r}") from None
    return value


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults < config file < command-line flags and validate."""
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(read_config(args.config))
    for key in DEFAULTS:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    cfg = {k: _coerce(k, v) for k, v in cfg.items()}
    cmd = args.command
    cfg["command"] = cmd
    if cfg["dt"] is None:
        cfg["dt"] = DEFAULT_DT.get(cmd, 1e-4)
    if cfg["format"] is None:
        cfg["format"] = DEFAULT_FORMAT[cmd]
    if cfg["format"] not in ("csv", "json"):
        raise UsageError(f"format must be csv or json, got {cfg['format']!r}")
    if not cfg["dt"] > 0:
        raise UsageError("dt must be positive")
    try:
        cfg["bounds"] = ControlBounds(cfg["u1"], cfg["u2"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if cmd in ("sweep", "curves"):
        if cfg["gamma_min"] is None or cfg["gamma_max"] is None:
            raise UsageError("--gamma-min and --gamma-max are required")
        try:
            cfg["gammas"] = gamma_grid(cfg["gamma_min"], cfg["gamma_max"], cfg["gamma_step"])
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    elif cfg["schedule"] is None or cmd == "synth":
        g = cfg["gamma"]
        if g is None:
            raise UsageError("--gamma is required")
        if not (math.isfinite(g) and g > 1):
            raise UsageError(f"gamma must exceed 1, got {g!r}")
    return cfg


def _emit(cfg, text: str) -> None:
    if cfg["out"]:
        Path(cfg["out"]).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(row.get(h)) for h in header])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _load_schedule(path) -> Schedule:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError:
        raise
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise UsageError(f"cannot parse schedule {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"schedule {path} must be a JSON object")
    try:
        return Schedule.from_dict(data)
    except ValueError as exc:
        raise UsageError(f"invalid schedule {path}: {exc}") from None


def cmd_synth(cfg) -> int:
    sol = synthesize(cfg["bounds"], cfg["gamma"])
    d = sol.to_dict()
    if cfg["schedule_out"]:
        Path(cfg["schedule_out"]).write_text(_json_text(sol.schedule.to_dict()), encoding="utf-8")
    if cfg["format"] == "json":
        _emit(cfg, _json_text(d))
    else:
        header = ["gamma", "n_turns", "s", "total_time", "j", "kind", "duration", "x1_end", "x2_end"]
        rows = [
            {"gamma": sol.gamma, "n_turns": sol.n_turns, "s": sol.s, "total_time": sol.total_time,
             "j": j, "kind": seg.control.kind, "duration": seg.duration,
             "x1_end": seg.end.x1, "x2_end": seg.end.x2}
            for j, seg in enumerate(sol.schedule.segments, 1)
        ]
        _emit(cfg, _csv_text(header, rows))
    return EXIT_OK


def cmd_sweep(cfg) -> int:
    bounds = cfg["bounds"]
    rows = sweep(bounds, cfg["gamma_min"], cfg["gamma_max"], cfg["gamma_step"])
    crossings = find_crossovers(bounds, rows)
    n_top = max((max(r.times, default=0) for r in rows), default=0)
    if cfg["format"] == "json":
        obj = {
            "schema": 1,
            "u1": bounds.u1,
            "u2": bounds.u2,
            "rows": [
                {"gamma": r.gamma, "T0": r.T0,
                 "T_n": {str(n): r.times.get(n) for n in range(1, n_top + 1)},
                 "optimal_n": r.optimal_n, "optimal_T": r.optimal_T}
                for r in rows
            ],
            "crossovers": [c.__dict__ for c in crossings],
        }
        _emit(cfg, _json_text(obj))
    else:
        header = ["gamma", "T0"] + [f"T{n}" for n in range(1, n_top + 1)] + ["optimal_n", "optimal_T"]
        table = []
        for r in rows:
            d = {"gamma": r.gamma, "T0": r.T0, "optimal_n": r.optimal_n, "optimal_T": r.optimal_T}
            d.update({f"T{n}": t for n, t in r.times.items()})
            table.append(d)
        _emit(cfg, _csv_text(header, table))
        for c in crossings:
            print(f"crossover gamma={fmt(c.gamma)} from_n={c.from_n} to_n={c.to_n} "
                  f"T={fmt(c.time)} gap={fmt(c.gap)}", file=sys.stderr)
    return EXIT_OK


def cmd_curves(cfg) -> int:
    rows = switching_curve_rows(cfg["bounds"], cfg["gammas"])
    header = ["gamma", "n_turns", "j", "x1", "x2", "kind", "invariant"]
    if cfg["format"] == "json":
        _emit(cfg, _json_text({"schema": 1, "u1": cfg["u1"], "u2": cfg["u2"], "points": rows}))
    else:
        _emit(cfg, _csv_text(header, rows))
    return EXIT_OK


def cmd_verify(cfg) -> int:
    if cfg["schedule"]:
        schedule = _load_schedule(cfg["schedule"])
        report = verify.check_schedule(schedule, cfg["dt"])
        gamma = schedule.gamma
    else:
        sol = synthesize(cfg["bounds"], cfg["gamma"])
        report = verify.check_solution(sol, cfg["dt"])
        gamma = sol.gamma
    d = report.to_dict()
    d = {"schema": 1, "gamma": gamma, **d}
    if cfg["format"] == "json":
        _emit(cfg, _json_text(d))
    else:
        flat = {k: (v if not isinstance(v, list) else max(v, default=0.0)) for k, v in d.items()}
        flat["endpoint_error"] = max(report.endpoint_error)
        _emit(cfg, _csv_text(list(flat), [flat]))
    if not report.passed:
        raise VerificationFailed("verification failed")
    return EXIT_OK


def cmd_wavefn(cfg) -> int:
    if cfg["schedule"]:
        schedule = _load_schedule(cfg["schedule"])
    else:
        schedule = synthesize(cfg["bounds"], cfg["gamma"]).schedule
    gamma = schedule.gamma
    try:
        grid = schrodinger.SpatialGrid.for_expansion(gamma, cfg["grid_points"], cfg["grid_span"])
        psi0 = schrodinger.ground_state(1.0, grid)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    snaps = []
    every = max(1, cfg["snapshot_every"])
    counter = [0]

    def record(t, amp):
        counter[0] += 1
        if counter[0] % every == 0:
            snaps.append((t, abs(amp) ** 2))

    if cfg["snapshots"]:
        snaps.append((0.0, psi0.density()))
    final = schrodinger.split_step_propagate(psi0, schedule, cfg["dt"],
                                             on_step=record if cfg["snapshots"] else None)
    target = schrodinger.ground_state(1.0 / gamma**2, grid)
    ansatz = schrodinger.scaling_solution(gamma, gamma, 0.0, grid)
    exact = schrodinger.exact_state(schedule, grid)
    result = {
        "schema": 1,
        "gamma": gamma,
        "total_time": schedule.total_time,
        "dt": cfg["dt"],
        "grid_points": grid.n_points,
        "x_max": grid.x_max,
        "norm": final.norm(),
        "fidelity_target": schrodinger.fidelity(final, target),
        "fidelity_ansatz": schrodinger.fidelity(final, ansatz),
        "l2_error_exact": schrodinger.l2_distance(final, exact),
        "final_width": math.sqrt(2 * final.moment(2)),
    }
    if cfg["snapshots"]:
        snaps.append((final.t, final.density()))
        x = grid.x
        with open(cfg["snapshots"], "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "x", "density"])
            for t, dens in snaps:
                for xi, di in zip(x, dens):
                    w.writerow([fmt(float(t)), fmt(float(xi)), fmt(float(di))])
    if cfg["format"] == "json":
        _emit(cfg, _json_text(result))
    else:
        _emit(cfg, _csv_text(list(result), [result]))
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "sweep": cmd_sweep, "curves": cmd_curves,
            "verify": cmd_verify, "wavefn": cmd_wavefn}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--u1", type=float, help="magnitude of the most expulsive control (default 1)")
    common.add_argument("--u2", type=float, help="largest trap stiffness (default 1)")
    common.add_argument("--config", help="key = value file; flags override it")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--out", help="write output here instead of stdout")

    single = argparse.ArgumentParser(add_help=False)
    single.add_argument("--gamma", type=float, help="expansion ratio, > 1")

    ranged = argparse.ArgumentParser(add_help=False)
    ranged.add_argument("--gamma-min", dest="gamma_min", type=float)
    ranged.add_argument("--gamma-max", dest="gamma_max", type=float)
    ranged.add_argument("--gamma-step", dest="gamma_step", type=float, help="default 0.01")

    ap = argparse.ArgumentParser(prog="trapcool", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("synth", parents=[common, single], help="minimum-time schedule as JSON")
    p.add_argument("--schedule-out", dest="schedule_out", help="also write the schedule interchange file")
    sub.add_parser("sweep", parents=[common, ranged], help="candidate times over a gamma range")
    sub.add_parser("curves", parents=[common, ranged], help="switching points over a gamma range")
    p = sub.add_parser("verify", parents=[common, single], help="RK4 re-integration report")
    p.add_argument("--dt", type=float, help="RK4 step (default 1e-4)")
    p.add_argument("--schedule", help="verify this schedule file instead of synthesizing")
    p = sub.add_parser("wavefn", parents=[common, single], help="split-step wavefunction check")
    p.add_argument("--dt", type=float, help="split-step time step (default 1e-3)")
    p.add_argument("--grid-points", dest="grid_points", type=int, help="default 4096")
    p.add_argument("--grid-span", dest="grid_span", type=float, help="half-span in units of gamma (default 8)")
    p.add_argument("--schedule", help="propagate through this schedule file")
    p.add_argument("--snapshots", help="CSV path for |psi|^2 snapshots")
    p.add_argument("--snapshot-every", dest="snapshot_every", type=int, help="steps between snapshots (default 100)")
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; that code means verification failure here
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except VerificationFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except schrodinger.GridSpanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
