"""Simulated antiferromagnetic spatial photonic Ising machine.

Spins and Mattis amplitudes are gauge-encoded on a single phase-only mask,
the far-field intensity is correlated against a synthesised distribution
function to read out the Hamiltonian, and a batch-flip Monte Carlo loop
drives the lattice toward balanced number partitions.
"""
from ._kernels import IMPLEMENTATION as KERNEL_IMPLEMENTATION
from .core import (AmplitudeSet, CouplingKind, CouplingSpec, GaugeField, LatticeShape,
                   SpinConfiguration, exact_hamiltonian_mattis, exact_hamiltonian_uniform,
                   gauge_transform, magnetization)
from .correlation import (CorrelationKernel, correlate, hamiltonian_from_frame, realized_coupling,
                          synthesize_kernel)
from .errors import (CalibrationError, ConfigurationError, DimensionError, DomainError, FormatError,
                     SpecError, SpimError)
from .optics import (DetectorFrame, DetectorGrid, FieldMode, NoiseModel, OpticsParams, PhaseMask,
                     apply_phase_ramp, calibrate_origin, encode_phase, far_field_intensity, uniform_mask)
from .problems import (PartitionSummary, brute_force_optimum, generate_instance,
                       generate_parity_instance, greedy_baseline, summarize)
from .solver import Backend, RunResult, SolverConfig, TrajectoryRecord, propose, run, step

__version__ = "0.1.0"
