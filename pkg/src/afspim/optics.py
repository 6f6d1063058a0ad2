"""Virtual SPIM forward model.

A phase-only SLM holds one macropixel per spin; lens L1 Fourier-transforms the
modulated field onto a detector sampled on an odd ``M x M`` grid covering the
first diffraction-order zone. Detector pixel ``p`` along an axis sits at
``u_p = (p - (M-1)/2) * du`` with ``du = f*lam / (W*M)``, so the macropixel
phase term ``2*pi*W*j*u_p/(f*lam)`` reduces to ``2*pi*j*q/M`` with
``q = p - (M-1)/2``, and the field is a zero-padded size-``M`` DFT.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft as sfft

from .core import GaugeField, LatticeShape, SpinConfiguration, _frozen
from .errors import CalibrationError, ConfigurationError, DimensionError, DomainError


@dataclass(frozen=True)
class OpticsParams:
    wavelength: float = 532e-9
    focal_length: float = 100e-3
    macropixel_width: float = 16e-6

    def __post_init__(self):
        for name in ("wavelength", "focal_length", "macropixel_width"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError(f"{name} must be positive and finite, got {value}")

    @property
    def zone_half_width(self) -> float:
        """u_max = f*lam/(2W), edge of the first diffraction-order zone."""
        return self.focal_length * self.wavelength / (2 * self.macropixel_width)

    def macropixel_positions(self, shape: LatticeShape) -> tuple[np.ndarray, np.ndarray]:
        """Centre coordinates x_j = W*j of every macropixel, flat row-major order."""
        n, m = np.divmod(np.arange(shape.size), shape.n_x)
        return self.macropixel_width * m, self.macropixel_width * n


@dataclass(frozen=True)
class DetectorGrid:
    samples_per_axis: int
    params: OpticsParams = field(default_factory=OpticsParams)

    def __post_init__(self):
        M = self.samples_per_axis
        if int(M) != M or M < 1 or M % 2 == 0:
            raise ConfigurationError(f"samples_per_axis must be an odd positive integer, got {M}")
        object.__setattr__(self, "samples_per_axis", int(M))

    @classmethod
    def for_lattice(cls, shape: LatticeShape, params: OpticsParams | None = None,
                    samples_per_axis: int | None = None) -> "DetectorGrid":
        """Default grid: the smallest odd M above the DFT orthogonality bound."""
        M = samples_per_axis if samples_per_axis is not None else 2 * max(shape.n_x, shape.n_y) + 1
        grid = cls(M, params or OpticsParams())
        grid.check_lattice(shape)
        return grid

    @property
    def center(self) -> int:
        return (self.samples_per_axis - 1) // 2

    @property
    def pixel_pitch(self) -> float:
        p = self.params
        return p.focal_length * p.wavelength / (p.macropixel_width * self.samples_per_axis)

    def offsets(self) -> np.ndarray:
        """Integer sample offsets q = p - (M-1)/2 along one axis."""
        return np.arange(self.samples_per_axis) - self.center

    def coordinates(self) -> np.ndarray:
        return self.offsets() * self.pixel_pitch

    def envelope(self) -> np.ndarray:
        """sinc^2(W u/(f lam)) * sinc^2(W v/(f lam)) on the grid."""
        s = np.sinc(self.offsets() / self.samples_per_axis)
        return np.outer(s * s, s * s)

    def check_lattice(self, shape: LatticeShape):
        bound = 2 * max(shape.n_x, shape.n_y) - 1
        if self.samples_per_axis < bound:
            raise ConfigurationError(
                f"M={self.samples_per_axis} below orthogonality bound {bound} for {shape.n_x}x{shape.n_y} lattice")


@dataclass(frozen=True)
class NoiseModel:
    """Detector non-idealities, in units of full-scale intensity.

    ``auto_exposure`` rescales every frame so its noiseless peak sits at full
    scale before noise is added, like a camera adjusting its gain per shot.
    Otherwise the peak of the all-up ideal frame (``N**2``) is full scale.
    """

    read_noise_sigma: float = 0.0
    photon_budget: float | None = None
    quantization_bits: int | None = None
    saturation_level: float = 1.0
    auto_exposure: bool = False
    rng_seed: int = 0

    def __post_init__(self):
        if not self.read_noise_sigma >= 0:
            raise ConfigurationError(f"read_noise_sigma must be >= 0, got {self.read_noise_sigma}")
        if self.photon_budget is not None and not self.photon_budget > 0:
            raise ConfigurationError(f"photon_budget must be positive, got {self.photon_budget}")
        if self.quantization_bits is not None and not 1 <= self.quantization_bits <= 16:
            raise ConfigurationError(f"quantization_bits must be in [1, 16], got {self.quantization_bits}")
        if not self.saturation_level > 0:
            raise ConfigurationError(f"saturation_level must be positive, got {self.saturation_level}")

    @property
    def is_ideal(self) -> bool:
        return (self.read_noise_sigma == 0 and self.photon_budget is None
                and self.quantization_bits is None)

    @property
    def is_stochastic(self) -> bool:
        return self.read_noise_sigma > 0 or self.photon_budget is not None


class FieldMode(enum.Enum):
    PHYSICAL = "physical"
    IDEAL = "ideal"


@dataclass(frozen=True)
class PhaseMask:
    shape: LatticeShape
    phases: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.asarray(self.phases, dtype=np.float64).ravel()
        if p.size != self.shape.size:
            raise DimensionError(f"expected {self.shape.size} phases, got {p.size}")
        object.__setattr__(self, "phases", _frozen(wrap_phase(p)))

    def grid(self) -> np.ndarray:
        return self.phases.reshape(self.shape.n_y, self.shape.n_x)


@dataclass(frozen=True)
class DetectorFrame:
    grid: DetectorGrid
    intensities: np.ndarray = field(repr=False)
    origin_offset: tuple[float, float] = (0.0, 0.0)
    exposure_scale: float = 1.0
    noise: NoiseModel | None = None

    def __post_init__(self):
        I = np.asarray(self.intensities, dtype=np.float64)
        M = self.grid.samples_per_axis
        if I.shape != (M, M):
            raise DimensionError(f"frame is {I.shape}, grid expects {(M, M)}")
        if not np.all(I >= 0):
            raise DomainError("intensities must be non-negative")
        if not (math.isfinite(self.exposure_scale) and self.exposure_scale > 0):
            raise DomainError(f"exposure_scale must be positive, got {self.exposure_scale}")
        object.__setattr__(self, "intensities", _frozen(I))
        object.__setattr__(self, "origin_offset", (float(self.origin_offset[0]), float(self.origin_offset[1])))

    def with_origin(self, offset) -> "DetectorFrame":
        return replace(self, origin_offset=(float(offset[0]), float(offset[1])))


def wrap_phase(phi):
    """Wrap angles into (-pi, pi]."""
    w = np.pi - np.mod(np.pi - np.asarray(phi, dtype=np.float64), 2 * np.pi)
    return w


def encode_phase(gauge: GaugeField, spins: SpinConfiguration) -> PhaseMask:
    """phi = s*pi/2 + (-1)**(m+n) * alpha for every macropixel.

    Then Im exp(i phi) = s*xi (the effective spin) and the real part is a
    checkerboard-modulated carrier that diffracts toward the zone corners.
    """
    if gauge.shape != spins.shape:
        raise DimensionError(f"gauge lattice {gauge.shape} does not match spins {spins.shape}")
    phi = spins.spins * (np.pi / 2) + spins.shape.parity() * gauge.angles
    return PhaseMask(spins.shape, phi)


def apply_phase_ramp(mask: PhaseMask, grid: DetectorGrid, shift) -> PhaseMask:
    """Add a linear phase that moves the far-field pattern by ``shift`` = (dx, dy) pixels."""
    M = grid.samples_per_axis
    n, m = np.divmod(np.arange(mask.shape.size), mask.shape.n_x)
    ramp = -2 * np.pi * (m * shift[0] + n * shift[1]) / M
    return PhaseMask(mask.shape, mask.phases + ramp)


def emitter_amplitudes(mask: PhaseMask, mode: FieldMode) -> np.ndarray:
    """Complex macropixel amplitudes on the (n_y, n_x) lattice."""
    phi = mask.grid()
    if mode is FieldMode.IDEAL:
        # carrier dropped: c = i * sin(phi) = i * s'
        return 1j * np.sin(phi)
    return np.exp(1j * phi)


def raw_intensity(mask: PhaseMask, grid: DetectorGrid, mode: FieldMode = FieldMode.PHYSICAL) -> np.ndarray:
    """Noiseless, unnormalised |E(u)|**2 on the detector grid."""
    mode = FieldMode(mode)
    grid.check_lattice(mask.shape)
    M = grid.samples_per_axis
    c = emitter_amplitudes(mask, mode)
    # sum_j c_j exp(+2 pi i j q / M) == M^2 * ifft2, reordered so q = 0 is the centre
    E = sfft.fftshift(sfft.ifft2(c, s=(M, M), norm="forward"))
    return grid.envelope() * (E.real ** 2 + E.imag ** 2)


def apply_noise(I: np.ndarray, noise: NoiseModel, rng: np.random.Generator) -> np.ndarray:
    """Shot noise, read noise, clipping, quantisation, in that order."""
    out = np.array(I, dtype=np.float64)
    if noise.photon_budget is not None:
        out = rng.poisson(out * noise.photon_budget) / noise.photon_budget
    if noise.read_noise_sigma > 0:
        out = out + rng.normal(0.0, noise.read_noise_sigma, size=out.shape)
    out = np.clip(out, 0.0, noise.saturation_level)
    if noise.quantization_bits is not None:
        levels = 2 ** noise.quantization_bits - 1
        out = np.round(out * levels) / levels
    return out


def far_field_intensity(mask: PhaseMask, params: OpticsParams, grid: DetectorGrid,
                        mode: FieldMode = FieldMode.PHYSICAL, noise: NoiseModel | None = None,
                        rng: np.random.Generator | None = None) -> DetectorFrame:
    """Detector frame for ``mask``, exposure-normalised and passed through ``noise``.

    ``rng`` defaults to a fresh generator seeded from ``noise.rng_seed``.
    """
    if grid.params != params:
        raise ConfigurationError("detector grid was built for different optics parameters")
    noise = noise or NoiseModel()
    raw = raw_intensity(mask, grid, mode)
    if noise.auto_exposure:
        peak = float(raw.max())
        scale = 1.0 / peak if peak > 0 else 1.0
    else:
        scale = 1.0 / float(mask.shape.size) ** 2
    I = raw * scale
    if not noise.is_ideal or noise.saturation_level < 1.0:
        if rng is None:
            rng = np.random.default_rng(noise.rng_seed)
        I = apply_noise(I, noise, rng)
    return DetectorFrame(grid, I, (0.0, 0.0), scale, noise)


def uniform_mask(shape: LatticeShape) -> PhaseMask:
    """All macropixels at phi = pi/2 (every spin up, every xi = 1)."""
    return PhaseMask(shape, np.full(shape.size, np.pi / 2))


def calibrate_origin(frame: DetectorFrame) -> tuple[float, float]:
    """Sub-pixel (du, dv) of the intensity maximum, in pixels from the grid centre.

    A paraboloid is least-squares fitted to log-intensity on the 3x3
    neighbourhood of the brightest pixel; the log makes the fit exact for a
    Gaussian-like peak, which removes most of the bias of fitting a
    sinc^2-shaped lobe directly. Residuals are weighted by intensity because
    additive noise of size s perturbs log(I) by about s/I; without the weights
    dim corner pixels dominate when the peak straddles four pixels.
    """
    I = frame.intensities
    M = I.shape[0]
    py, px = np.unravel_index(int(np.argmax(I)), I.shape)
    if not (0 < py < M - 1 and 0 < px < M - 1):
        raise CalibrationError(f"intensity peak at pixel ({px}, {py}) touches the grid boundary")
    patch = I[py - 1:py + 2, px - 1:px + 2]
    top = float(patch.max())
    if top <= 0:
        raise CalibrationError("frame has no positive intensity")
    clipped = np.maximum(patch, top * 1e-6).ravel()
    z = np.log(clipped)
    y, x = np.mgrid[-1:2, -1:2]
    x, y = x.ravel(), y.ravel()
    A = np.column_stack([np.ones(9), x, y, x * x, x * y, y * y])
    w = clipped / top
    _, b, c, d, e, f = np.linalg.lstsq(A * w[:, None], z * w, rcond=None)[0]
    hess = np.array([[2 * d, e], [e, 2 * f]])
    if not (hess[0, 0] < 0 and np.linalg.det(hess) > 0):
        raise CalibrationError("peak neighbourhood is not locally concave")
    vx, vy = np.linalg.solve(hess, [-b, -c])
    if abs(vx) > 1 or abs(vy) > 1:
        raise CalibrationError("fitted vertex lies outside the 3x3 neighbourhood")
    centre = frame.grid.center
    return float(px + vx - centre), float(py + vy - centre)
