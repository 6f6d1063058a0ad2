"""Spin-lattice value types, the gauge transformation and exact Hamiltonians.

Spin ``j`` sits at lattice site ``(m, n)`` with ``m`` the column and ``n`` the
row. Flat arrays are row-major with ``m`` varying fastest, so with 0-based
indices ``j = n * n_x + m`` and ``array.reshape(n_y, n_x)[n, m]`` is spin
``j``. The checkerboard parity used by the phase encoding is ``(m + n) % 2``,
which is the same for 0- and 1-based labels.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DimensionError, DomainError, SpecError


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class LatticeShape:
    n_x: int
    n_y: int

    def __post_init__(self):
        if int(self.n_x) != self.n_x or int(self.n_y) != self.n_y:
            raise DimensionError(f"lattice sizes must be integers, got {self.n_x}x{self.n_y}")
        if self.n_x < 1 or self.n_y < 1:
            raise DimensionError(f"lattice sizes must be positive, got {self.n_x}x{self.n_y}")
        object.__setattr__(self, "n_x", int(self.n_x))
        object.__setattr__(self, "n_y", int(self.n_y))

    @property
    def size(self) -> int:
        return self.n_x * self.n_y

    def index(self, m: int, n: int) -> int:
        """Flat index of the 0-based site (m, n)."""
        if not (0 <= m < self.n_x and 0 <= n < self.n_y):
            raise DimensionError(f"site ({m}, {n}) outside {self.n_x}x{self.n_y} lattice")
        return n * self.n_x + m

    def site(self, j: int) -> tuple[int, int]:
        """0-based (m, n) of flat index j."""
        if not 0 <= j < self.size:
            raise DimensionError(f"index {j} outside lattice of {self.size} spins")
        n, m = divmod(j, self.n_x)
        return m, n

    def parity(self) -> np.ndarray:
        """Flat array of (-1)**(m + n)."""
        n, m = np.divmod(np.arange(self.size), self.n_x)
        return np.where((m + n) % 2 == 0, 1.0, -1.0)

    @classmethod
    def for_size(cls, N: int) -> "LatticeShape":
        """Most nearly square lattice holding exactly N spins (n_x >= n_y)."""
        if N < 1:
            raise DimensionError(f"need at least one spin, got {N}")
        n_y = math.isqrt(N)
        while N % n_y:
            n_y -= 1
        return cls(N // n_y, n_y)


@dataclass(frozen=True)
class SpinConfiguration:
    shape: LatticeShape
    spins: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = np.asarray(self.spins)
        if s.ndim == 2:
            if s.shape != (self.shape.n_y, self.shape.n_x):
                raise DimensionError(f"spin grid {s.shape} does not match {self.shape}")
            s = s.ravel()
        if s.shape != (self.shape.size,):
            raise DimensionError(f"expected {self.shape.size} spins, got {s.size}")
        if not np.all((s == 1) | (s == -1)):
            raise DomainError("spins must be exactly +1 or -1")
        object.__setattr__(self, "spins", _frozen(s.astype(np.int8)))

    @classmethod
    def uniform(cls, shape: LatticeShape, value: int = 1) -> "SpinConfiguration":
        return cls(shape, np.full(shape.size, value, dtype=np.int8))

    def grid(self) -> np.ndarray:
        return self.spins.reshape(self.shape.n_y, self.shape.n_x)

    def flipped(self, indices) -> "SpinConfiguration":
        s = self.spins.copy()
        s[np.asarray(indices, dtype=np.intp)] *= -1
        return SpinConfiguration(self.shape, s)

    def __eq__(self, other):
        if not isinstance(other, SpinConfiguration):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.spins, other.spins)

    __hash__ = None


@dataclass(frozen=True)
class AmplitudeSet:
    shape: LatticeShape
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=np.float64)
        if a.ndim == 2:
            if a.shape != (self.shape.n_y, self.shape.n_x):
                raise DimensionError(f"amplitude grid {a.shape} does not match {self.shape}")
            a = a.ravel()
        if a.shape != (self.shape.size,):
            raise DimensionError(f"expected {self.shape.size} amplitudes, got {a.size}")
        if not np.all((a > 0) & (a <= 1)):
            raise DomainError("amplitudes must lie in (0, 1]")
        object.__setattr__(self, "amplitudes", _frozen(a))

    def grid(self) -> np.ndarray:
        return self.amplitudes.reshape(self.shape.n_y, self.shape.n_x)


@dataclass(frozen=True)
class GaugeField:
    shape: LatticeShape
    angles: np.ndarray = field(repr=False)
    effective_spins: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "angles", _frozen(np.asarray(self.angles, dtype=np.float64)))
        object.__setattr__(self, "effective_spins", _frozen(np.asarray(self.effective_spins, dtype=np.float64)))

    @property
    def spins(self) -> np.ndarray:
        return np.where(self.effective_spins > 0, 1, -1).astype(np.int8)


class CouplingKind(enum.Enum):
    UNIFORM_ANTIFERROMAGNETIC = "uniform-antiferromagnetic"
    TABLE = "table"


@dataclass(frozen=True)
class CouplingSpec:
    """Translation-invariant coupling G(k) on the lattice difference set.

    Tables are indexed ``table[k_y + n_y - 1, k_x + n_x - 1]``.
    """

    kind: CouplingKind = CouplingKind.UNIFORM_ANTIFERROMAGNETIC
    strength: float = -1.0
    g_table: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind is CouplingKind.UNIFORM_ANTIFERROMAGNETIC:
            if not self.strength < 0:
                raise SpecError(f"antiferromagnetic coupling needs J < 0, got {self.strength}")
        elif self.g_table is None:
            raise SpecError("table coupling requires g_table")
        if self.g_table is not None:
            t = np.asarray(self.g_table, dtype=np.float64)
            if t.ndim != 2 or t.shape[0] % 2 == 0 or t.shape[1] % 2 == 0:
                raise SpecError(f"G table must be 2-D with odd sides, got shape {t.shape}")
            if not np.all(np.isfinite(t)):
                raise SpecError("G table must be finite")
            if not np.array_equal(t, t[::-1, ::-1]):
                raise SpecError("G table must satisfy G(k) = G(-k)")
            object.__setattr__(self, "g_table", _frozen(t))

    @classmethod
    def uniform(cls, J: float = -1.0) -> "CouplingSpec":
        return cls(CouplingKind.UNIFORM_ANTIFERROMAGNETIC, float(J))

    @classmethod
    def from_table(cls, table, strength: float = 1.0) -> "CouplingSpec":
        return cls(CouplingKind.TABLE, float(strength), np.asarray(table, dtype=np.float64))

    def table(self, shape: LatticeShape) -> np.ndarray:
        dims = (2 * shape.n_y - 1, 2 * shape.n_x - 1)
        if self.kind is CouplingKind.UNIFORM_ANTIFERROMAGNETIC:
            return np.full(dims, self.strength)
        if self.g_table.shape != dims:
            raise DimensionError(f"G table {self.g_table.shape} does not cover difference set {dims}")
        return np.array(self.g_table)

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "strength": self.strength}
        if self.g_table is not None:
            d["table"] = self.g_table.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CouplingSpec":
        kind = CouplingKind(d.get("kind", CouplingKind.UNIFORM_ANTIFERROMAGNETIC.value))
        if kind is CouplingKind.UNIFORM_ANTIFERROMAGNETIC:
            return cls.uniform(d.get("strength", -1.0))
        return cls.from_table(d["table"], d.get("strength", 1.0))


def _check_shapes(spins: SpinConfiguration, amps: AmplitudeSet):
    if spins.shape != amps.shape:
        raise DimensionError(f"spin lattice {spins.shape} does not match amplitude lattice {amps.shape}")


def gauge_transform(spins: SpinConfiguration, amps: AmplitudeSet) -> GaugeField:
    """Rotate each spin by arccos(xi) so couplings become uniform."""
    _check_shapes(spins, amps)
    xi = amps.amplitudes
    if not np.all((xi > 0) & (xi <= 1)):
        raise DomainError("amplitudes must lie in (0, 1]")
    return GaugeField(spins.shape, np.arccos(xi), xi * spins.spins)


def exact_hamiltonian_mattis(spins: SpinConfiguration, amps: AmplitudeSet, J: float) -> float:
    """-J * sum_{j,h} xi_j xi_h s_j s_h by the direct O(N^2) double sum."""
    _check_shapes(spins, amps)
    v = amps.amplitudes * spins.spins
    return _kernels.mattis_energy(np.ascontiguousarray(v, dtype=np.float64), float(J))


def exact_hamiltonian_uniform(gauge: GaugeField) -> float:
    """(sum_j s'_j)**2, the uniform antiferromagnet with J = -1, in O(N)."""
    total = math.fsum(gauge.effective_spins.tolist())
    return total * total


def magnetization(gauge: GaugeField) -> float:
    """|m'| = |sum_j s'_j| / N."""
    return abs(math.fsum(gauge.effective_spins.tolist())) / gauge.effective_spins.size
