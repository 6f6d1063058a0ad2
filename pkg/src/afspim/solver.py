"""Ground-state search through the simulated optoelectronic loop.

Each iteration flips a random batch of spins, re-encodes the mask, forms a
frame, reads the Hamiltonian off the frame/kernel correlation and keeps the
candidate only if the energy goes down (or, with a temperature, with the
Metropolis probability).
"""
from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .core import (AmplitudeSet, CouplingSpec, SpinConfiguration, exact_hamiltonian_uniform,
                   gauge_transform, magnetization)
from .correlation import CorrelationKernel, hamiltonian_from_frame, synthesize_kernel
from .errors import ConfigurationError
from .optics import (DetectorGrid, FieldMode, NoiseModel, OpticsParams, calibrate_origin,
                     encode_phase, far_field_intensity, uniform_mask)


class Backend(enum.Enum):
    OPTICAL_PHYSICAL = "optical-physical"
    OPTICAL_IDEAL = "optical-ideal"
    EXACT_FAST = "exact-fast"

    @property
    def field_mode(self) -> FieldMode | None:
        return {Backend.OPTICAL_PHYSICAL: FieldMode.PHYSICAL,
                Backend.OPTICAL_IDEAL: FieldMode.IDEAL}.get(self)


@dataclass(frozen=True)
class SolverConfig:
    """Search settings.

    The batch size at iteration ``t`` is ``max(1, round(p0 * N * gamma**t))``
    and the temperature is ``T0 * temperature_decay**t``. Candidates must beat
    the current energy by more than ``decision_margin * N**2`` to be accepted
    outright, which keeps optical and exact backends making the same calls on
    floating-point near-ties.
    """

    max_iterations: int = 1000
    initial_flip_fraction: float = 0.05
    flip_decay: float = 0.98
    initial_temperature: float = 0.0
    temperature_decay: float = 0.99
    backend: Backend = Backend.EXACT_FAST
    noise: NoiseModel = field(default_factory=NoiseModel)
    rng_seed: int = 0
    decision_margin: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "backend", Backend(self.backend))
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ConfigurationError(f"max_iterations must be a positive integer, got {self.max_iterations}")
        if not 0 < self.initial_flip_fraction <= 1:
            raise ConfigurationError(f"initial_flip_fraction must be in (0, 1], got {self.initial_flip_fraction}")
        if not 0 < self.flip_decay <= 1:
            raise ConfigurationError(f"flip_decay must be in (0, 1], got {self.flip_decay}")
        if not self.initial_temperature >= 0:
            raise ConfigurationError(f"initial_temperature must be >= 0, got {self.initial_temperature}")
        if not 0 < self.temperature_decay <= 1:
            raise ConfigurationError(f"temperature_decay must be in (0, 1], got {self.temperature_decay}")
        if not self.decision_margin >= 0:
            raise ConfigurationError(f"decision_margin must be >= 0, got {self.decision_margin}")

    def flips_at(self, N: int, iteration: int) -> int:
        k = math.floor(self.initial_flip_fraction * N * self.flip_decay ** iteration + 0.5)
        return min(N, max(1, k))

    def temperature_at(self, iteration: int) -> float:
        return self.initial_temperature * self.temperature_decay ** iteration


@dataclass(frozen=True)
class TrajectoryRecord:
    iteration: int
    H: float
    m_abs: float
    accepted: bool
    flips: int
    wall_time: float

    CSV_HEADER = ("iteration", "H", "m_abs", "accepted", "flips", "wall_ms")

    def csv_row(self) -> tuple:
        return (self.iteration, repr(self.H), repr(self.m_abs), int(self.accepted), self.flips,
                f"{self.wall_time * 1e3:.3f}")


class Evaluator:
    """Maps a spin configuration to a (possibly noisy) Hamiltonian reading."""

    def __init__(self, amps: AmplitudeSet, backend: Backend, noise: NoiseModel | None = None,
                 optics: OpticsParams | None = None, samples_per_axis: int | None = None,
                 rng: np.random.Generator | None = None):
        self.amps = amps
        self.backend = Backend(backend)
        self.noise = noise or NoiseModel()
        self.rng = rng if rng is not None else np.random.default_rng(self.noise.rng_seed)
        self.grid: DetectorGrid | None = None
        self.kernel: CorrelationKernel | None = None
        self.origin = (0.0, 0.0)
        if self.backend is not Backend.EXACT_FAST:
            self.optics = optics or OpticsParams()
            self.grid = DetectorGrid.for_lattice(amps.shape, self.optics, samples_per_axis)
            self._calibrate()

    @property
    def stochastic(self) -> bool:
        """True when two readings of the same spins can differ."""
        return self.backend is not Backend.EXACT_FAST and self.noise.is_stochastic

    def _calibrate(self):
        frame = far_field_intensity(uniform_mask(self.amps.shape), self.optics, self.grid,
                                    self.backend.field_mode, self.noise, rng=self.rng)
        self.origin = calibrate_origin(frame)
        kernel = synthesize_kernel(CouplingSpec.uniform(-1.0), self.amps.shape, self.grid)
        self.kernel = kernel.shifted(self.origin)

    def __call__(self, spins: SpinConfiguration) -> float:
        gauge = gauge_transform(spins, self.amps)
        if self.backend is Backend.EXACT_FAST:
            return exact_hamiltonian_uniform(gauge)
        mask = encode_phase(gauge, spins)
        frame = far_field_intensity(mask, self.optics, self.grid, self.backend.field_mode,
                                    self.noise, rng=self.rng)
        return hamiltonian_from_frame(frame.with_origin(self.origin), self.kernel)


@dataclass
class SearchState:
    amps: AmplitudeSet
    spins: SpinConfiguration
    energy: float
    evaluator: Evaluator
    proposal_rng: np.random.Generator
    accept_rng: np.random.Generator
    iteration: int = 0
    best_spins: SpinConfiguration | None = None
    best_energy: float = math.inf


@dataclass
class RunResult:
    records: list[TrajectoryRecord]
    final_spins: SpinConfiguration
    final_energy: float
    best_spins: SpinConfiguration
    best_energy: float


def propose(config: SolverConfig, spins: SpinConfiguration, iteration: int,
            rng: np.random.Generator) -> SpinConfiguration:
    """Flip a uniformly random subset whose size follows the batch schedule."""
    N = spins.shape.size
    k = config.flips_at(N, iteration)
    return spins.flipped(rng.choice(N, size=k, replace=False))


def initial_state(problem: AmplitudeSet, config: SolverConfig, initial: SpinConfiguration | None = None,
                  optics: OpticsParams | None = None, samples_per_axis: int | None = None) -> SearchState:
    seed = int(config.rng_seed)
    evaluator = Evaluator(problem, config.backend, config.noise, optics, samples_per_axis,
                          rng=np.random.default_rng([seed, int(config.noise.rng_seed), 2]))
    spins = initial if initial is not None else SpinConfiguration.uniform(problem.shape, 1)
    energy = evaluator(spins)
    return SearchState(problem, spins, energy, evaluator,
                       proposal_rng=np.random.default_rng([seed, 0]),
                       accept_rng=np.random.default_rng([seed, 1]),
                       best_spins=spins, best_energy=energy)


def step(state: SearchState, config: SolverConfig) -> tuple[SearchState, TrajectoryRecord]:
    start = time.perf_counter()
    t = state.iteration
    N = state.spins.shape.size
    flips = config.flips_at(N, t)
    candidate = propose(config, state.spins, t, state.proposal_rng)
    best_spins, best_energy = state.best_spins, state.best_energy

    current = state.energy
    if state.evaluator.stochastic:
        # a stored noisy reading would bias every later comparison
        current = state.evaluator(state.spins)
        if current < best_energy:
            best_spins, best_energy = state.spins, current
    h_cand = state.evaluator(candidate)
    if not math.isfinite(h_cand):
        raise FloatingPointError(f"non-finite Hamiltonian reading {h_cand}")
    if h_cand < best_energy:
        best_spins, best_energy = candidate, h_cand

    delta = h_cand - current
    temperature = config.temperature_at(t)
    if delta < -config.decision_margin * N * N:
        accepted = True
    elif temperature > 0:
        accepted = bool(state.accept_rng.random() < math.exp(-max(delta, 0.0) / temperature))
    else:
        accepted = False

    spins, energy = (candidate, h_cand) if accepted else (state.spins, current)
    m_abs = magnetization(gauge_transform(spins, state.amps))
    new_state = replace(state, spins=spins, energy=energy, iteration=t + 1,
                        best_spins=best_spins, best_energy=best_energy)
    record = TrajectoryRecord(t, energy, m_abs, accepted, flips, time.perf_counter() - start)
    return new_state, record


def run(problem: AmplitudeSet, config: SolverConfig, initial: SpinConfiguration | None = None,
        optics: OpticsParams | None = None, samples_per_axis: int | None = None,
        on_record: Callable[[TrajectoryRecord], None] | None = None) -> RunResult:
    """Iterate ``step`` from the all-up state (unless ``initial`` is given)."""
    state = initial_state(problem, config, initial, optics, samples_per_axis)
    records = []
    for _ in range(config.max_iterations):
        state, record = step(state, config)
        records.append(record)
        if on_record is not None:
            on_record(record)
    return RunResult(records, state.spins, state.energy, state.best_spins, state.best_energy)
