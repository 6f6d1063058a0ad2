"""Distribution-function synthesis and Hamiltonian readout by correlation.

For a target coupling ``G(k)`` on the lattice difference set ``K`` the kernel
``g`` must satisfy, on the detector grid,

    sum_p g(u_p) * sinc^2(W u_p / f lam) * exp(2 pi i k.q_p / M) * du^2 = G(k).

With ``M >= 2 n - 1`` every ``k`` in ``K`` is a distinct DFT bin, so the
envelope-weighted kernel is just the inverse DFT of the zero-padded table.
Correlating a frame against ``g`` then returns ``sum_{jh} G(j-h) s'_j s'_h``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft as sfft

from . import _kernels
from .core import CouplingSpec, LatticeShape, _frozen
from .errors import ConfigurationError, DimensionError
from .optics import DetectorFrame, DetectorGrid


@dataclass(frozen=True)
class CorrelationKernel:
    grid: DetectorGrid
    weights: np.ndarray = field(repr=False)
    target: CouplingSpec
    origin_offset: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        M = self.grid.samples_per_axis
        if w.shape != (M, M):
            raise DimensionError(f"kernel is {w.shape}, grid expects {(M, M)}")
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "origin_offset", (float(self.origin_offset[0]), float(self.origin_offset[1])))

    def shifted(self, offset) -> "CorrelationKernel":
        """Kernel re-centred on ``offset`` (pixels), resampled bilinearly from this one."""
        dx = float(offset[0]) - self.origin_offset[0]
        dy = float(offset[1]) - self.origin_offset[1]
        if dx == 0 and dy == 0:
            return self
        w = _kernels.bilinear_shift(np.ascontiguousarray(self.weights), dx, dy)
        return replace(self, weights=w, origin_offset=(float(offset[0]), float(offset[1])))

    def __mul__(self, c: float) -> "CorrelationKernel":
        return replace(self, weights=self.weights * c)

    __rmul__ = __mul__


def _difference_bins(shape: LatticeShape, M: int):
    ky = np.arange(-(shape.n_y - 1), shape.n_y) % M
    kx = np.arange(-(shape.n_x - 1), shape.n_x) % M
    return np.ix_(ky, kx)


def synthesize_kernel(target: CouplingSpec, shape: LatticeShape, grid: DetectorGrid) -> CorrelationKernel:
    grid.check_lattice(shape)
    table = target.table(shape)
    if not np.array_equal(table, table[::-1, ::-1]):
        raise ConfigurationError("coupling table is not symmetric under k -> -k")
    M = grid.samples_per_axis
    padded = np.zeros((M, M))
    padded[_difference_bins(shape, M)] = table
    # bins outside K stay zero: the minimum-energy completion
    h = sfft.fftshift(sfft.fft2(padded, norm="forward")).real
    g = h / (grid.envelope() * grid.pixel_pitch ** 2)
    return CorrelationKernel(grid, g, target)


def realized_coupling(kernel: CorrelationKernel, shape: LatticeShape) -> np.ndarray:
    """Forward-evaluate the coupling a kernel produces, as a complex table.

    Uses the nominal (unshifted) grid coordinates, so a kernel translated by
    whole pixels picks up the corresponding DFT phase factor.
    """
    grid = kernel.grid
    grid.check_lattice(shape)
    h = kernel.weights * grid.envelope() * grid.pixel_pitch ** 2
    spectrum = sfft.ifft2(sfft.ifftshift(h), norm="forward")
    return spectrum[_difference_bins(shape, grid.samples_per_axis)]


def correlate(frame: DetectorFrame, kernel: CorrelationKernel) -> float:
    """F = sum_p I(u_p) g(u_p) du^2, undoing the frame's exposure scaling."""
    if frame.grid != kernel.grid:
        raise DimensionError("frame and kernel live on different detector grids")
    k = kernel.shifted(frame.origin_offset)
    s = _kernels.weighted_sum(frame.intensities, k.weights)
    return s * frame.grid.pixel_pitch ** 2 / frame.exposure_scale


def hamiltonian_from_frame(frame: DetectorFrame, kernel: CorrelationKernel) -> float:
    return -correlate(frame, kernel)
