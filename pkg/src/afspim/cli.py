"""Run, benchmark and calibrate the simulated Ising machine from the command line.

Exit codes: 0 success, 1 runtime failure, 2 configuration or usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .core import CouplingSpec, LatticeShape
from .correlation import realized_coupling, synthesize_kernel
from .errors import CalibrationError, SpimError
from .experiment import load_config, run_bench, run_solve
from .optics import (DetectorGrid, FieldMode, NoiseModel, OpticsParams, apply_phase_ramp,
                     calibrate_origin, far_field_intensity, uniform_mask)
from .problems import brute_force_optimum, summarize
from .solver import Backend

EXIT_RUNTIME = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _apply_globals(cfg, args):
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.backend is not None:
        cfg = replace(cfg, solver=replace(cfg.solver, backend=Backend(args.backend)))
    if args.out is not None:
        cfg = replace(cfg, output_dir=Path(args.out))
    if getattr(args, "no_timing", False):
        cfg = replace(cfg, record_timing=False)
    return cfg


def _out_dir(args, default: str) -> Path:
    out = Path(args.out if args.out is not None else default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_solve(args) -> int:
    cfg = _apply_globals(load_config(args.config), args)
    summary = run_solve(cfg)
    for t in summary["trials"]:
        print(f"trial {t['trial']}: H={t['final_H']:.6g} |m'|={t['m_abs']:.3e} "
              f"fidelity={t['fidelity']:.3e} seed={t['solver_seed']}")
    return 0


def cmd_bench(args) -> int:
    cfg = _apply_globals(load_config(args.config), args)
    sizes = None
    if args.sizes is not None:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
        if not sizes:
            raise UsageError("--sizes is empty")
    table = run_bench(cfg, sizes=sizes, trials=args.trials, jobs=args.jobs)
    for row in table:
        print(f"N={row['N']:6d} mean={row['mean_fidelity']:.3e} min={row['min_fidelity']:.3e} "
              f"max={row['max_fidelity']:.3e}")
    return 0


def _target(args, shape: LatticeShape) -> CouplingSpec:
    dims = (2 * shape.n_y - 1, 2 * shape.n_x - 1)
    if args.target == "uniform":
        return CouplingSpec.uniform(-args.strength)
    if args.target == "zero":
        return CouplingSpec.from_table(np.zeros(dims))
    if args.target == "delta":
        table = np.zeros(dims)
        table[shape.n_y - 1, shape.n_x - 1] = -args.strength
        return CouplingSpec.from_table(table)
    path = Path(args.target)
    if not path.is_file():
        raise UsageError(f"unknown target {args.target!r} (uniform, zero, delta or a JSON file)")
    try:
        return CouplingSpec.from_dict(json.loads(path.read_text()))
    except (json.JSONDecodeError, KeyError) as exc:
        raise UsageError(f"{path}: bad coupling spec ({exc})") from None


def cmd_synth_kernel(args) -> int:
    shape = LatticeShape(args.nx, args.ny)
    grid = DetectorGrid.for_lattice(shape, OpticsParams(), args.samples)
    target = _target(args, shape)
    kernel = synthesize_kernel(target, shape, grid)
    table = target.table(shape)
    error = float(np.abs(realized_coupling(kernel, shape) - table).max())
    doubled = synthesize_kernel(CouplingSpec.from_table(2 * table), shape, grid)
    scale = max(1.0, float(np.abs(kernel.weights).max()))
    linearity = float(np.abs(doubled.weights - 2 * kernel.weights).max()) / scale
    out = _out_dir(args, "afspim-out")
    io.write_kernel(out / "kernel.grid", kernel)
    report = {
        "lattice": [shape.n_x, shape.n_y],
        "samples_per_axis": grid.samples_per_axis,
        "target": target.kind.value,
        "max_realized_error": error,
        "linearity_error": linearity,
        "min_weight": float(kernel.weights.min()),
        "max_weight": float(kernel.weights.max()),
    }
    io.atomic_write_text(out / "kernel_report.json", json.dumps(report, indent=2) + "\n")
    print(f"max |realized G - target| = {error:.3e}")
    print(f"linearity error = {linearity:.3e}")
    return 0


def cmd_calibrate(args) -> int:
    frame = io.read_frame(args.frame)
    du, dv = calibrate_origin(frame)
    result = {"offset_u": du, "offset_v": dv, "units": "pixels"}
    text = json.dumps(result, indent=2) + "\n"
    if args.out is not None:
        io.atomic_write_text(_out_dir(args, args.out) / "calibration.json", text)
    sys.stdout.write(text)
    return 0


def cmd_render_frame(args) -> int:
    shape = LatticeShape(args.nx, args.ny)
    grid = DetectorGrid.for_lattice(shape, OpticsParams(), args.samples)
    mask = apply_phase_ramp(uniform_mask(shape), grid, (args.shift_u, args.shift_v))
    noise = NoiseModel(read_noise_sigma=args.read_noise, auto_exposure=True,
                       rng_seed=args.seed if args.seed is not None else 0)
    frame = far_field_intensity(mask, grid.params, grid, FieldMode.PHYSICAL, noise)
    out = _out_dir(args, "afspim-out")
    io.write_frame(out / "frame.grid", frame)
    print(out / "frame.grid")
    return 0


def cmd_oracle(args) -> int:
    amps, seed = io.read_instance(args.instance)
    diff, spins = brute_force_optimum(amps)
    result = {"N": amps.shape.size, "difference": diff, "fidelity": summarize(spins, amps).fidelity}
    if args.out is not None:
        out = _out_dir(args, args.out)
        io.write_partition(out / "oracle.partition", spins, seed)
        io.atomic_write_text(out / "oracle.json", json.dumps(result, indent=2) + "\n")
    print(json.dumps(result))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="base random seed")
    common.add_argument("--backend", choices=[b.value for b in Backend], default=None)
    common.add_argument("--out", default=None, help="output directory")

    parser = argparse.ArgumentParser(prog="afspim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="run the ground-state search")
    p.add_argument("config")
    p.add_argument("--no-timing", action="store_true", help="write wall_ms as 0 for reproducible files")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", parents=[common], help="fidelity versus number-set size")
    p.add_argument("config")
    p.add_argument("--sizes", default=None, help="comma-separated N list")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth-kernel", parents=[common], help="synthesise a correlation kernel")
    p.add_argument("--nx", type=int, required=True)
    p.add_argument("--ny", type=int, required=True)
    p.add_argument("--samples", type=int, default=None, help="detector samples per axis (odd)")
    p.add_argument("--target", default="uniform", help="uniform, zero, delta or a coupling JSON file")
    p.add_argument("--strength", type=float, default=1.0)
    p.set_defaults(func=cmd_synth_kernel)

    p = sub.add_parser("calibrate", parents=[common], help="locate the frame origin")
    p.add_argument("frame")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("render-frame", parents=[common], help="render a uniform-mask calibration frame")
    p.add_argument("--nx", type=int, required=True)
    p.add_argument("--ny", type=int, required=True)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--shift-u", type=float, default=0.0)
    p.add_argument("--shift-v", type=float, default=0.0)
    p.add_argument("--read-noise", type=float, default=0.0)
    p.set_defaults(func=cmd_render_frame)

    p = sub.add_parser("oracle", parents=[common], help="exhaustive partition optimum (N <= 24)")
    p.add_argument("instance")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"afspim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CalibrationError as exc:
        print(f"afspim: calibration failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (FileNotFoundError, ValueError) as exc:
        # config, format and domain errors are all ValueErrors
        print(f"afspim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SpimError, RuntimeError, OSError, FloatingPointError) as exc:
        print(f"afspim: failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
