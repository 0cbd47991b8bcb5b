"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical or
validation failure. Every successful run writes ``<out>.manifest.json``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import platform
import sys
from pathlib import Path

import numba
import numpy as np
import scipy

from . import __version__
from .beamform import BeamformGrid, bmode
from .dpc import DpcParams, dpc_pipeline
from .io import ConfigError, ContainerError, as_float32, export_image, load_config, read_rf, write_rf
from .memory import WindowGridSpec, validate_memory_effect
from .workflows import default_grid, simulate_from_config, soscal_sweep

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text):
    try:
        return [float(v) for v in text.replace(" ", ",").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _grid(text):
    vals = _floats(text)
    if len(vals) not in (4, 5):
        raise argparse.ArgumentTypeError("grid is x_min,x_max,z_min,z_max[,pixel_pitch] in mm")
    try:
        return BeamformGrid(*vals)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="usdpc", description="Ultrasound differential phase contrast toolkit")
    p.add_argument("--version", action="version", version=f"usdpc {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the random seed")
    common.add_argument("--threads", type=int, default=1, help="worker threads (1 is bit-reproducible)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", parents=[common], help="synthesize an RF dataset")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)

    b = sub.add_parser("bmode", parents=[common], help="coherently compounded B-mode image")
    b.add_argument("--rf", required=True)
    b.add_argument("--na", type=float, default=0.6)
    b.add_argument("--grid", type=_grid, default=None)
    b.add_argument("--format", choices=["pgm16", "csv"], default=None)
    b.add_argument("--figure", default=None, help="also render a PNG")
    b.add_argument("--out", required=True)

    d = sub.add_parser("dpc", parents=[common], help="differential phase contrast image")
    d.add_argument("--rf", required=True)
    d.add_argument("--T", type=_floats, action="extend", default=None,
                   help="pre-delays in sampling periods (comma separated or repeated)")
    d.add_argument("--m", type=int, default=1)
    d.add_argument("--na", type=float, default=0.6)
    d.add_argument("--sigma", type=float, default=0.0, help="Gaussian smoothing (mm)")
    d.add_argument("--mode", choices=["mean", "product"], default="mean")
    d.add_argument("--grid", type=_grid, default=None)
    d.add_argument("--format", choices=["pgm16", "csv"], default=None)
    d.add_argument("--figure", default=None)
    d.add_argument("--out", required=True)

    m = sub.add_parser("memory", parents=[common], help="memory-effect validation report")
    m.add_argument("--rf", required=True)
    m.add_argument("--no-figure", action="store_true")
    m.add_argument("--out", required=True)

    c = sub.add_parser("soscal", parents=[common], help="SoS linearity sweep over inclusion types")
    c.add_argument("--config", required=True)
    c.add_argument("--no-figure", action="store_true")
    c.add_argument("--out", required=True)
    return p


def _format_for(path, explicit):
    if explicit:
        return explicit
    return "csv" if str(path).lower().endswith(".csv") else "pgm16"


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _manifest(out, command, params, inputs):
    data = {
        "command": command,
        "parameters": params,
        "inputs": {str(k): _sha256(v) for k, v in inputs.items()},
        "versions": {
            "usdpc": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "numba": numba.__version__,
        },
    }
    Path(str(out) + ".manifest.json").write_text(json.dumps(data, indent=2, sort_keys=True, default=str) + "\n")


def _set_threads(n):
    if n < 1:
        raise UsageError("--threads must be >= 1")
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def _cmd_simulate(args):
    cfg = load_config(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    ds = simulate_from_config(cfg, seed=seed)
    write_rf(as_float32(ds), args.out)
    _manifest(args.out, "simulate", {"seed": seed, "config": cfg.model_dump()}, {"config": args.config})


def _cmd_bmode(args):
    ds = read_rf(args.rf)
    grid = args.grid or default_grid(ds)
    db = bmode(ds, ds.probe, grid, ds.sos, args.na)
    export_image(db, args.out, _format_for(args.out, args.format), x=grid.x, z=grid.z)
    if args.figure:
        from .plotting import plot_bmode
        plot_bmode(db, grid, args.figure)
    _manifest(args.out, "bmode", {"na": args.na, "grid": grid.__dict__, "seed": args.seed}, {"rf": args.rf})


def _cmd_dpc(args):
    ds = read_rf(args.rf)
    T = args.T or [800.0]
    grid = args.grid or default_grid(ds, max(T))
    params = DpcParams(grid, tuple(T), args.m, args.na, args.sigma, args.mode)
    image = dpc_pipeline(ds, params=params)
    export_image(image, args.out, _format_for(args.out, args.format))
    if args.figure:
        from .plotting import plot_dpc
        plot_dpc(image, args.figure)
    _manifest(args.out, "dpc", {
        "T": list(T), "m": args.m, "na": args.na, "sigma": args.sigma, "mode": args.mode,
        "grid": grid.__dict__, "n_pairs": image.n_pairs, "shear_effective_mm": image.shear_effective,
        "seed": args.seed,
    }, {"rf": args.rf})
    print(f"dpc: compounded {image.n_pairs} pair images", file=sys.stderr)


def _write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def _cmd_memory(args):
    ds = read_rf(args.rf)
    spec = WindowGridSpec()
    report = validate_memory_effect(ds, spec)
    _write_csv(args.out, report["angles"])
    lines = [f"memory-effect validation of {args.rf}"]
    for r in report["angles"]:
        lines.append(
            f"theta={r['angle']:+.4f} rad  windows={r['n_windows']}  correlated={r['n_correlated']}  "
            f"pass={r['pass_fraction']:.3f}  rms_dx={r['rms_dx_mm']:.4f} mm  "
            f"rms_dt={r['rms_dt_s'] * 1e9:.2f} ns  mean_rho={r['mean_rho']:.3f}"
        )
    Path(str(args.out) + ".summary.txt").write_text("\n".join(lines) + "\n")
    if not args.no_figure:
        from .plotting import plot_memory_report
        plot_memory_report(report, Path(args.out).with_suffix(".png"), ds)
    _manifest(args.out, "memory", {"window_spec": spec.__dict__, "seed": args.seed}, {"rf": args.rf})


def _cmd_soscal(args):
    cfg = load_config(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    result = soscal_sweep(cfg, seed=seed)
    _write_csv(args.out, result.rows)
    fit = result.fit
    Path(str(args.out) + ".summary.txt").write_text(
        f"slope_rad_per_mps {fit.slope!r}\nintercept_rad {fit.intercept!r}\nr_squared {fit.r_squared!r}\n"
    )
    if not args.no_figure:
        from .plotting import plot_soscal
        plot_soscal(result, Path(args.out).with_suffix(".png"))
    _manifest(args.out, "soscal", {"seed": seed, "config": cfg.model_dump()}, {"config": args.config})


COMMANDS = {
    "simulate": _cmd_simulate,
    "bmode": _cmd_bmode,
    "dpc": _cmd_dpc,
    "memory": _cmd_memory,
    "soscal": _cmd_soscal,
}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _set_threads(args.threads)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        COMMANDS[args.command](args)
    except (ContainerError, ConfigError, OSError) as exc:
        print(f"usdpc {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, ArithmeticError) as exc:
        print(f"usdpc {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
