"""Number-partitioning instances, exact oracles and solution metrics."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import AmplitudeSet, LatticeShape, SpinConfiguration, _check_shapes
from .errors import DimensionError, DomainError

MAX_BRUTE_FORCE = 24


@dataclass(frozen=True)
class PartitionSummary:
    sum_up: float
    sum_down: float
    difference: float
    fidelity: float

    def to_dict(self) -> dict:
        return {"sum_up": self.sum_up, "sum_down": self.sum_down,
                "difference": self.difference, "fidelity": self.fidelity}


def _shape_of(shape) -> LatticeShape:
    if isinstance(shape, LatticeShape):
        return shape
    return LatticeShape.for_size(int(shape))


def generate_instance(shape, seed: int) -> AmplitudeSet:
    """I.i.d. uniform amplitudes on (0, 1].

    ``shape`` is a LatticeShape or a spin count (laid out as square as possible).
    """
    shape = _shape_of(shape)
    rng = np.random.default_rng(seed)
    # 1 - U[0,1) excludes zero exactly
    return AmplitudeSet(shape, 1.0 - rng.random(shape.size))


def generate_parity_instance(shape, seed: int) -> tuple[AmplitudeSet, SpinConfiguration]:
    """Mirror-symmetric set xi_j = xi_{N+1-j} and its analytic ground state.

    The returned spins satisfy s_j = -s_{N+1-j}, so both subsets hold the same
    multiset of values and the difference is exactly zero.
    """
    shape = _shape_of(shape)
    N = shape.size
    if N % 2:
        raise DimensionError(f"parity instances need an even number of spins, got {N}")
    rng = np.random.default_rng(seed)
    half = 1.0 - rng.random(N // 2)
    signs = rng.choice(np.array([1, -1], dtype=np.int8), size=N // 2)
    amps = np.concatenate([half, half[::-1]])
    spins = np.concatenate([signs, -signs[::-1]])
    return AmplitudeSet(shape, amps), SpinConfiguration(shape, spins)


def summarize(spins: SpinConfiguration, amps: AmplitudeSet) -> PartitionSummary:
    _check_shapes(spins, amps)
    xi = amps.amplitudes
    up = math.fsum(xi[spins.spins > 0].tolist())
    down = math.fsum(xi[spins.spins < 0].tolist())
    diff = abs(math.fsum((xi * spins.spins).tolist()))
    total = up + down
    return PartitionSummary(up, down, diff, diff / total)


def brute_force_optimum(amps: AmplitudeSet) -> tuple[float, SpinConfiguration]:
    """Exact minimum |sum_1 - sum_2| over all 2**(N-1) partitions."""
    N = amps.shape.size
    if N > MAX_BRUTE_FORCE:
        raise DomainError(f"exhaustive search limited to N <= {MAX_BRUTE_FORCE}, got {N}")
    diff, signs = _kernels.min_partition(np.ascontiguousarray(amps.amplitudes))
    return diff, SpinConfiguration(amps.shape, signs)


def greedy_baseline(amps: AmplitudeSet) -> SpinConfiguration:
    """Largest-first greedy: each value joins the currently lighter subset.

    Not part of the optical method; used as a reference column in benchmarks.
    """
    xi = amps.amplitudes
    order = np.argsort(-xi, kind="stable")
    spins = np.empty(xi.size, dtype=np.int8)
    up = down = 0.0
    for j in order:
        if up <= down:
            spins[j] = 1
            up += xi[j]
        else:
            spins[j] = -1
            down += xi[j]
    return SpinConfiguration(amps.shape, spins)
