"""Command line interface.

Exit codes: 0 success, 2 calibration failure, 3 invalid input,
4 every requested point is kinematically degenerate.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

from .amplitudes import Quantity
from .kinematics import ScatterConfig
from .scan import (
    FIG5_THETA_E,
    STATE_LABELS,
    CalibrationFailed,
    Figure,
    InvalidSpec,
    Normalization,
    ScanSpec,
    attach_jumps,
    calibrate,
    grid_from_csv,
    point_report,
    report_discrepancy,
    run_scan,
    write_scan,
)
from .entanglement import ContourNotClosed, GridTooCoarse, find_jump_points, zero_concurrence_contour

OUTDIR_ENV = "CHANNEL_EXCHANGE_OUTDIR"

EXIT_OK, EXIT_CALIBRATION, EXIT_INVALID, EXIT_DEGENERATE = 0, 2, 3, 4

# built-in values for options left unset by both the flags and the config file
DEFAULTS = {
    "energy": 1.0,
    "energy_photon": None,
    "theta_e": None,
    "theta_ph": None,
    "phi_ph": None,
    "degrees": False,
    "grid": None,
    "quantity": "exchange",
    "normalize": "gridmax",
    "out": None,
    "format": "csv",
    "seed": 0,
    "threads": 1,
    "figure": "4",
    "samples": 1000,
    "input": None,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser):
    # default=None everywhere so that config-file values can fill the gaps
    p.add_argument("--config", help="JSON file whose keys mirror the long flags")
    p.add_argument("--energy", type=float, help="incoming electron energy in MeV (default 1)")
    p.add_argument("--energy-photon", type=float, help="incoming photon energy in MeV (default: --energy)")
    p.add_argument("--theta-e", type=float, help="incoming electron polar angle")
    p.add_argument("--theta-ph", type=float, help="incoming photon polar angle")
    p.add_argument("--phi-ph", type=float, help="incoming photon azimuth")
    p.add_argument("--degrees", action="store_const", const=True, help="angles are given in degrees")
    p.add_argument("--grid", help="grid size, NxM (or N for figure 5)")
    p.add_argument("--quantity", choices=["exchange", "total"])
    p.add_argument("--normalize", choices=["gridmax", "none"])
    p.add_argument("--out", help="output path")
    p.add_argument("--format", choices=["csv", "structured"])
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="channel-exchange", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("point", help="full record at one configuration")
    _common(p)
    p = sub.add_parser("scan", help="grid scan reproducing a figure")
    _common(p)
    p.add_argument("--figure", choices=["3", "4", "5", "custom"])
    p = sub.add_parser("find-jumps", help="jump-concurrence points and zero-concurrence contours")
    _common(p)
    p.add_argument("--input", help="existing figure-4 or custom scan CSV; default runs the figure-4 scan")
    p = sub.add_parser("calibrate", help="fix the sign conventions at the back-to-back anchor")
    _common(p)
    p = sub.add_parser("report-discrepancy", help="closed form versus trace engine on random configurations")
    _common(p)
    p.add_argument("--samples", type=int)
    return parser


def resolve_options(args: argparse.Namespace) -> dict:
    """Merge flags over config file over built-in defaults."""
    config = {}
    if args.config:
        try:
            config = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidSpec(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(config, dict):
            raise InvalidSpec("config file must hold a JSON object")
        config = {k.replace("-", "_"): v for k, v in config.items()}
        unknown = set(config) - set(DEFAULTS)
        if unknown:
            raise InvalidSpec(f"unknown config keys: {sorted(unknown)}")
    opts = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        opts[key] = flag if flag is not None else config.get(key, default)
    if opts["degrees"]:
        for key in ("theta_e", "theta_ph", "phi_ph"):
            if opts[key] is not None:
                opts[key] = math.radians(opts[key])
    if opts["threads"] < 1:
        raise InvalidSpec("--threads must be >= 1")
    return opts


def _parse_grid(text) -> tuple[int, ...] | None:
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return tuple(int(n) for n in text)
    try:
        return tuple(int(part) for part in str(text).lower().split("x"))
    except ValueError as exc:
        raise InvalidSpec(f"bad --grid {text!r}") from exc


def _out_path(opts: dict, default_name: str) -> Path:
    if opts["out"]:
        return Path(opts["out"])
    return Path(os.environ.get(OUTDIR_ENV, ".")) / default_name


def _emit(text: str, opts: dict, default_name: str | None = None):
    if opts["out"] or (default_name and os.environ.get(OUTDIR_ENV)):
        path = _out_path(opts, default_name or "out.json")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        print(f"wrote {path}")
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_point(opts: dict) -> int:
    try:
        cfg = ScatterConfig(
            opts["energy"],
            opts["energy_photon"] or opts["energy"],
            math.pi / 2 if opts["theta_e"] is None else opts["theta_e"],
            math.pi / 2 if opts["theta_ph"] is None else opts["theta_ph"],
            math.pi if opts["phi_ph"] is None else opts["phi_ph"],
        )
    except ValueError as exc:
        raise InvalidSpec(str(exc)) from exc
    record = point_report(cfg, quantity=Quantity(opts["quantity"]))
    if opts["format"] == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["E_e", "E_ph", "theta_e", "theta_ph", "phi_ph", *STATE_LABELS, "C_max", "C_min", "is_bell", "error"])
        quad = record.get("quad", [""] * 4)
        conc = record.get("concurrence", {})
        w.writerow([cfg.E_e, cfg.E_ph, cfg.theta_e, cfg.theta_ph, cfg.phi_ph, *quad,
                    conc.get("C_max", ""), conc.get("C_min", ""), conc.get("is_bell", ""), record.get("error", "")])
        _emit(buf.getvalue(), opts)
    else:
        _emit(_json(record), opts)
    return EXIT_DEGENERATE if "error" in record else EXIT_OK


def _scan_specs(opts: dict, figure: Figure) -> list[ScanSpec]:
    common = dict(
        E_e=opts["energy"],
        E_ph=opts["energy_photon"],
        grid=_parse_grid(opts["grid"]),
        quantity=Quantity(opts["quantity"]),
        normalization=Normalization(opts["normalize"]),
    )
    if figure is Figure.FIG3:
        return [ScanSpec(figure, theta_e=math.pi / 2 if opts["theta_e"] is None else opts["theta_e"], **common)]
    if figure in (Figure.FIG4, Figure.CUSTOM):
        return [ScanSpec(figure, phi_ph=opts["phi_ph"], **common)]
    thetas = FIG5_THETA_E if opts["theta_e"] is None else (opts["theta_e"],)
    return [ScanSpec(figure, theta_e=t, **common) for t in thetas]


def cmd_scan(opts: dict) -> int:
    figure = Figure(str(opts["figure"]))
    specs = _scan_specs(opts, figure)
    results = [run_scan(s, threads=opts["threads"]) for s in specs]
    if all(r.n_holes == r.raw.shape[0] for r in results):
        print("every grid point is kinematically degenerate", file=sys.stderr)
        return EXIT_DEGENERATE
    ext = "csv" if opts["format"] == "csv" else "json"
    paths = write_scan(results, _out_path(opts, f"fig{figure.value}.{ext}"), opts["format"])
    for r in results:
        print(f"figure {figure.value}: {r.raw.shape[0]} points, {r.n_holes} holes, {len(r.jumps)} jump points")
    for path in paths:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_find_jumps(opts: dict) -> int:
    if opts["input"]:
        grid = grid_from_csv(opts["input"])
        jumps = find_jump_points(grid)
        contours = []
        for j in jumps:
            try:
                contours.append({"jump": [j.theta_e, j.theta_ph], "closed": True,
                                 "points": zero_concurrence_contour(grid, j).tolist()})
            except ContourNotClosed as exc:
                contours.append({"jump": [j.theta_e, j.theta_ph], "closed": False, "error": str(exc)})
    else:
        (spec,) = _scan_specs(opts, Figure.FIG4)
        result = run_scan(spec, threads=opts["threads"])
        if result.n_holes == result.raw.shape[0]:
            return EXIT_DEGENERATE
        attach_jumps(result)
        jumps, contours = result.jumps, result.contours
    _emit(_json({"jump_points": [j.as_dict() for j in jumps], "contours": contours}), opts, "jumps.json")
    return EXIT_OK


def cmd_calibrate(opts: dict) -> int:
    try:
        report = calibrate()
        code = EXIT_OK
    except CalibrationFailed as exc:
        report, code = exc.report, EXIT_CALIBRATION
    _emit(report.to_text(), opts, "conventions.json")
    return code


def cmd_report_discrepancy(opts: dict) -> int:
    if opts["samples"] < 1:
        raise InvalidSpec("--samples must be >= 1")
    report = report_discrepancy(opts["samples"], opts["seed"])
    _emit(_json(report), opts, "discrepancy.json")
    return EXIT_OK


COMMANDS = {
    "point": cmd_point,
    "scan": cmd_scan,
    "find-jumps": cmd_find_jumps,
    "calibrate": cmd_calibrate,
    "report-discrepancy": cmd_report_discrepancy,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        opts = resolve_options(args)
        return COMMANDS[args.command](opts)
    except (InvalidSpec, GridTooCoarse) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
