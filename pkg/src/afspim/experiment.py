"""Experiment configuration and the trial/bench drivers behind the CLI.

A config is one JSON document::

    {
      "seed": 0,
      "lattice": {"n_x": 200, "n_y": 200},
      "instance": {"seed": 7},            # or {"file": "instance.txt"}
      "optics": {"wavelength": 5.32e-7, "focal_length": 0.1, "macropixel_width": 1.6e-5},
      "detector": {"samples_per_axis": null},
      "noise": {"read_noise_sigma": 0.01, "quantization_bits": 8, "auto_exposure": true},
      "solver": {"max_iterations": 1000, "backend": "exact-fast"},
      "trials": 4,
      "output_dir": "runs/demo",
      "record_timing": true,
      "bench": {"sizes": [1600, 2500], "trials": 10}
    }

Trial ``i`` runs the solver with seed ``seed + i``. ``solve`` keeps one
instance for all trials; ``bench`` also draws instance ``instance_seed + i``
for trial ``i``.
"""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import io
from .core import AmplitudeSet, LatticeShape, gauge_transform, magnetization
from .errors import ConfigurationError, SpimError
from .optics import NoiseModel, OpticsParams
from .problems import generate_instance, greedy_baseline, summarize
from .solver import Backend, SolverConfig, run

DEFAULT_BENCH_SIZES = (1600, 2500, 6400, 10000, 16900, 40000)

_TOP_KEYS = {"seed", "lattice", "instance", "optics", "detector", "noise", "solver", "trials",
             "output_dir", "record_timing", "bench"}
_SOLVER_KEYS = {"max_iterations", "initial_flip_fraction", "flip_decay", "initial_temperature",
                "temperature_decay", "backend", "decision_margin"}


@dataclass(frozen=True)
class ExperimentConfig:
    shape: LatticeShape | None = None
    instance_seed: int | None = None
    instance_file: Path | None = None
    optics: OpticsParams = field(default_factory=OpticsParams)
    samples_per_axis: int | None = None
    noise: NoiseModel = field(default_factory=NoiseModel)
    solver: SolverConfig = field(default_factory=SolverConfig)
    output_dir: Path = Path("afspim-out")
    trials: int = 1
    seed: int = 0
    record_timing: bool = True
    bench_sizes: tuple[int, ...] = DEFAULT_BENCH_SIZES
    bench_trials: int = 10

    def __post_init__(self):
        if self.trials < 1 or self.bench_trials < 1:
            raise ConfigurationError("trial counts must be positive")
        if self.instance_file is not None and not Path(self.instance_file).is_file():
            raise ConfigurationError(f"instance file not found: {self.instance_file}")

    @property
    def base_instance_seed(self) -> int:
        return self.seed if self.instance_seed is None else self.instance_seed

    def solver_for_trial(self, trial: int) -> SolverConfig:
        return replace(self.solver, rng_seed=self.seed + trial, noise=self.noise)

    def to_dict(self) -> dict:
        s = self.solver
        return {
            "seed": self.seed,
            "lattice": None if self.shape is None else {"n_x": self.shape.n_x, "n_y": self.shape.n_y},
            "instance": ({"file": str(self.instance_file)} if self.instance_file is not None
                         else {"seed": self.base_instance_seed}),
            "optics": asdict(self.optics),
            "detector": {"samples_per_axis": self.samples_per_axis},
            "noise": asdict(self.noise),
            "solver": {k: getattr(s, k) if k != "backend" else s.backend.value for k in sorted(_SOLVER_KEYS)},
            "trials": self.trials,
            "output_dir": str(self.output_dir),
            "record_timing": self.record_timing,
            "bench": {"sizes": list(self.bench_sizes), "trials": self.bench_trials},
        }


def _section(doc: dict, key: str, allowed: set | None = None) -> dict:
    value = doc.get(key) or {}
    if not isinstance(value, dict):
        raise ConfigurationError(f"'{key}' must be an object")
    if allowed is not None:
        unknown = set(value) - allowed
        if unknown:
            raise ConfigurationError(f"unknown keys in '{key}': {sorted(unknown)}")
    return value


def config_from_dict(doc: dict, base_dir: Path | None = None) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigurationError("config must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    base_dir = base_dir or Path(".")
    try:
        lattice = _section(doc, "lattice", {"n_x", "n_y"})
        shape = LatticeShape(lattice["n_x"], lattice["n_y"]) if lattice else None
        instance = _section(doc, "instance", {"seed", "file"})
        if "seed" in instance and "file" in instance:
            raise ConfigurationError("instance takes either 'seed' or 'file', not both")
        instance_file = None
        if "file" in instance:
            instance_file = Path(instance["file"])
            if not instance_file.is_absolute():
                instance_file = base_dir / instance_file
        optics = OpticsParams(**_section(doc, "optics", {"wavelength", "focal_length", "macropixel_width"}))
        detector = _section(doc, "detector", {"samples_per_axis"})
        noise = NoiseModel(**_section(doc, "noise", set(NoiseModel.__dataclass_fields__)))
        solver_doc = dict(_section(doc, "solver", _SOLVER_KEYS))
        if "backend" in solver_doc:
            solver_doc["backend"] = Backend(solver_doc["backend"])
        solver = SolverConfig(**solver_doc, noise=noise)
        bench = _section(doc, "bench", {"sizes", "trials"})
        sizes = tuple(int(n) for n in bench.get("sizes", DEFAULT_BENCH_SIZES))
        output_dir = Path(doc.get("output_dir", "afspim-out"))
        if not output_dir.is_absolute():
            output_dir = base_dir / output_dir
        return ExperimentConfig(
            shape=shape,
            instance_seed=instance.get("seed"),
            instance_file=instance_file,
            optics=optics,
            samples_per_axis=detector.get("samples_per_axis"),
            noise=noise,
            solver=solver,
            output_dir=output_dir,
            trials=int(doc.get("trials", 1)),
            seed=int(doc.get("seed", 0)),
            record_timing=bool(doc.get("record_timing", True)),
            bench_sizes=sizes,
            bench_trials=int(bench.get("trials", 10)),
        )
    except (TypeError, KeyError) as exc:
        raise ConfigurationError(f"invalid config: {exc}") from None
    except SpimError:
        raise
    except ValueError as exc:
        raise ConfigurationError(f"invalid config: {exc}") from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: not valid JSON ({exc})") from None
    return config_from_dict(doc, path.parent)


def load_problem(cfg: ExperimentConfig) -> tuple[AmplitudeSet, int | None]:
    if cfg.instance_file is not None:
        amps, seed = io.read_instance(cfg.instance_file)
        if cfg.shape is not None and cfg.shape != amps.shape:
            raise ConfigurationError(f"instance file lattice {amps.shape} differs from config {cfg.shape}")
        return amps, seed
    if cfg.shape is None:
        raise ConfigurationError("config needs a lattice shape or an instance file")
    seed = cfg.base_instance_seed
    return generate_instance(cfg.shape, seed), seed


def trial_summary(result, amps: AmplitudeSet, trial: int, solver_seed: int, instance_seed) -> dict:
    final = summarize(result.final_spins, amps)
    best = summarize(result.best_spins, amps)
    m_abs = magnetization(gauge_transform(result.final_spins, amps))
    return {
        "trial": trial,
        "solver_seed": solver_seed,
        "instance_seed": instance_seed,
        "N": amps.shape.size,
        "iterations": len(result.records),
        "accepted": sum(r.accepted for r in result.records),
        "final_H": result.final_energy,
        "final_H_exact": final.difference ** 2,
        "m_abs": m_abs,
        "difference": final.difference,
        "fidelity": final.fidelity,
        "best_H": result.best_energy,
        "best_fidelity": best.fidelity,
    }


def run_solve(cfg: ExperimentConfig) -> dict:
    """Run every trial on one instance, writing CSV, partition and summary files."""
    amps, instance_seed = load_problem(cfg)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_instance(out / "instance.txt", amps, instance_seed)
    trials = []
    for trial in range(cfg.trials):
        solver = cfg.solver_for_trial(trial)
        writer = io.TrajectoryWriter(out / f"trial_{trial:03d}.csv", timing=cfg.record_timing)
        with writer:
            result = run(amps, solver, optics=cfg.optics, samples_per_axis=cfg.samples_per_axis,
                         on_record=writer)
        io.write_partition(out / f"trial_{trial:03d}.partition", result.final_spins, instance_seed)
        trials.append(trial_summary(result, amps, trial, solver.rng_seed, instance_seed))
    summary = {"config": cfg.to_dict(), "trials": trials}
    io.atomic_write_text(out / "summary.json", json.dumps(summary, indent=2) + "\n")
    return summary


def _bench_trial(args) -> dict:
    cfg, N, trial = args
    shape = LatticeShape.for_size(N)
    instance_seed = cfg.base_instance_seed + trial
    amps = generate_instance(shape, instance_seed)
    solver = cfg.solver_for_trial(trial)
    result = run(amps, solver, optics=cfg.optics)
    row = trial_summary(result, amps, trial, solver.rng_seed, instance_seed)
    row["greedy_fidelity"] = summarize(greedy_baseline(amps), amps).fidelity
    return row


def run_bench(cfg: ExperimentConfig, sizes=None, trials: int | None = None, jobs: int = 1) -> list[dict]:
    """Fidelity versus N; writes ``bench.csv`` and ``bench_trials.csv``."""
    sizes = tuple(cfg.bench_sizes if sizes is None else sizes)
    if not sizes:
        raise ConfigurationError("bench needs at least one size")
    if any(n < 1 for n in sizes):
        raise ConfigurationError(f"sizes must be positive, got {sizes}")
    trials = cfg.bench_trials if trials is None else trials
    if trials < 1:
        raise ConfigurationError("bench needs at least one trial")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(cfg, N, t) for N in sizes for t in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_bench_trial, tasks))
    else:
        rows = [_bench_trial(task) for task in tasks]

    table = []
    for N in sizes:
        fid = np.array([r["fidelity"] for r in rows if r["N"] == N])
        greedy = np.array([r["greedy_fidelity"] for r in rows if r["N"] == N])
        shape = LatticeShape.for_size(N)
        table.append({"N": N, "n_x": shape.n_x, "n_y": shape.n_y, "trials": fid.size,
                      "mean_fidelity": float(fid.mean()), "min_fidelity": float(fid.min()),
                      "max_fidelity": float(fid.max()), "std_fidelity": float(fid.std()),
                      "greedy_mean_fidelity": float(greedy.mean())})
    io.atomic_write_text(out / "bench.csv", _csv(table))
    io.atomic_write_text(out / "bench_trials.csv", _csv(rows))
    return table


def _csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    keys = list(rows[0])
    lines = [",".join(keys)]
    for r in rows:
        lines.append(",".join(repr(r[k]) if isinstance(r[k], float) else str(r[k]) for k in keys))
    return "\n".join(lines) + "\n"

