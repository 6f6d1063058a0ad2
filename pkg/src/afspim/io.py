"""Plain-text file formats.

Grid files (detector frames and correlation kernels)::

    # afspim-grid 1
    # kind: "frame"
    # samples_per_axis: 401
    # pixel_pitch: 8.291770573566085e-06
    # wavelength: 5.32e-07
    # focal_length: 0.1
    # macropixel_width: 1.6e-05
    # exposure_scale: 6.25e-10
    # origin_offset: [0.0, 0.0]
    <M rows of M space-separated values>

Header values are JSON. Kernel files use ``kind: "kernel"`` and add a
``target`` entry holding the coupling spec. Rows run over the v axis, columns
over u, both from the most negative coordinate. Values are written with 17
significant digits so a write/read cycle is lossless.

Instance and partition files hold one value per line (amplitudes, or +1/-1)
in flat spin order after a single header line ``# n_x=<int> n_y=<int> seed=<int|none>``.
"""
from __future__ import annotations

import csv
import json
import math
import os
import re
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from .core import AmplitudeSet, CouplingSpec, LatticeShape, SpinConfiguration
from .correlation import CorrelationKernel
from .errors import FormatError
from .optics import DetectorFrame, DetectorGrid, OpticsParams
from .solver import TrajectoryRecord

GRID_MAGIC = "# afspim-grid 1"
_HEADER_RE = re.compile(r"#\s*n_x=(\d+)\s+n_y=(\d+)\s+seed=(\S+)\s*$")


def atomic_write_text(path, text: str):
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _grid_text(kind: str, grid: DetectorGrid, values: np.ndarray, extra: dict) -> str:
    p = grid.params
    header = {
        "kind": kind,
        "samples_per_axis": grid.samples_per_axis,
        "pixel_pitch": grid.pixel_pitch,
        "wavelength": p.wavelength,
        "focal_length": p.focal_length,
        "macropixel_width": p.macropixel_width,
        **extra,
    }
    lines = [GRID_MAGIC]
    lines += [f"# {k}: {json.dumps(v)}" for k, v in header.items()]
    lines += [" ".join(f"{x:.17g}" for x in row) for row in values]
    return "\n".join(lines) + "\n"


def _read_grid(path) -> tuple[dict, np.ndarray]:
    text = Path(path).read_text().splitlines()
    if not text or text[0].strip() != GRID_MAGIC:
        raise FormatError(f"{path}: not an afspim grid file")
    header = {}
    body = []
    for n, line in enumerate(text[1:], start=2):
        try:
            if line.startswith("#"):
                key, sep, value = line[1:].partition(":")
                if not sep:
                    raise FormatError(f"{path}: malformed header line {line!r}")
                header[key.strip()] = json.loads(value)
            elif line.strip():
                body.append([float(x) for x in line.split()])
        except ValueError as exc:
            # JSONDecodeError is a ValueError too
            raise FormatError(f"{path}:{n}: {exc}") from None
    try:
        M = int(header["samples_per_axis"])
        params = OpticsParams(header["wavelength"], header["focal_length"], header["macropixel_width"])
    except KeyError as exc:
        raise FormatError(f"{path}: missing header field {exc}") from None
    if any(len(row) != M for row in body) or len(body) != M:
        raise FormatError(f"{path}: expected {M} rows of {M} values")
    values = np.array(body, dtype=np.float64)
    if values.shape != (M, M):
        raise FormatError(f"{path}: expected {M}x{M} values, found shape {values.shape}")
    grid = DetectorGrid(M, params)
    if not math.isclose(grid.pixel_pitch, header.get("pixel_pitch", grid.pixel_pitch), rel_tol=1e-12):
        raise FormatError(f"{path}: pixel_pitch disagrees with the optics parameters")
    header["grid"] = grid
    return header, values


def write_frame(path, frame: DetectorFrame):
    extra = {"exposure_scale": frame.exposure_scale, "origin_offset": list(frame.origin_offset)}
    atomic_write_text(path, _grid_text("frame", frame.grid, frame.intensities, extra))


def read_frame(path) -> DetectorFrame:
    header, values = _read_grid(path)
    if header.get("kind") != "frame":
        raise FormatError(f"{path}: expected a frame, found {header.get('kind')!r}")
    return DetectorFrame(header["grid"], values, tuple(header.get("origin_offset", (0.0, 0.0))),
                         float(header.get("exposure_scale", 1.0)))


def write_kernel(path, kernel: CorrelationKernel):
    extra = {"origin_offset": list(kernel.origin_offset), "target": kernel.target.to_dict()}
    atomic_write_text(path, _grid_text("kernel", kernel.grid, kernel.weights, extra))


def read_kernel(path) -> CorrelationKernel:
    header, values = _read_grid(path)
    if header.get("kind") != "kernel":
        raise FormatError(f"{path}: expected a kernel, found {header.get('kind')!r}")
    target = CouplingSpec.from_dict(header.get("target", {}))
    return CorrelationKernel(header["grid"], values, target, tuple(header.get("origin_offset", (0.0, 0.0))))


def _header_line(shape: LatticeShape, seed) -> str:
    return f"# n_x={shape.n_x} n_y={shape.n_y} seed={'none' if seed is None else int(seed)}"


def _read_column(path) -> tuple[LatticeShape, int | None, list[str]]:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise FormatError(f"{path}: empty file")
    m = _HEADER_RE.match(lines[0])
    if not m:
        raise FormatError(f"{path}: bad header {lines[0]!r}")
    shape = LatticeShape(int(m.group(1)), int(m.group(2)))
    seed = None if m.group(3) == "none" else int(m.group(3))
    values = [ln.strip() for ln in lines[1:] if ln.strip()]
    if len(values) != shape.size:
        raise FormatError(f"{path}: header declares {shape.size} values, found {len(values)}")
    return shape, seed, values


def write_instance(path, amps: AmplitudeSet, seed: int | None = None):
    body = "\n".join(repr(float(x)) for x in amps.amplitudes)
    atomic_write_text(path, f"{_header_line(amps.shape, seed)}\n{body}\n")


def read_instance(path) -> tuple[AmplitudeSet, int | None]:
    shape, seed, values = _read_column(path)
    try:
        amps = np.array([float(v) for v in values])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return AmplitudeSet(shape, amps), seed


def write_partition(path, spins: SpinConfiguration, seed: int | None = None):
    body = "\n".join(f"{int(s):+d}" for s in spins.spins)
    atomic_write_text(path, f"{_header_line(spins.shape, seed)}\n{body}\n")


def read_partition(path) -> tuple[SpinConfiguration, int | None]:
    shape, seed, values = _read_column(path)
    try:
        spins = np.array([int(v) for v in values])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return SpinConfiguration(shape, spins), seed


class TrajectoryWriter:
    """Streams trajectory rows to a CSV file, renamed into place on close."""

    def __init__(self, path, timing: bool = True):
        self.path = Path(path)
        self.timing = timing
        fd, self._tmp = tempfile.mkstemp(dir=self.path.parent, prefix=f".{self.path.name}.", suffix=".tmp")
        self._fh = os.fdopen(fd, "w", newline="")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(TrajectoryRecord.CSV_HEADER)

    def __call__(self, record: TrajectoryRecord):
        if not self.timing:
            record = replace(record, wall_time=0.0)
        self._writer.writerow(record.csv_row())

    def close(self):
        self._fh.close()
        os.replace(self._tmp, self.path)

    def abort(self):
        self._fh.close()
        if os.path.exists(self._tmp):
            os.unlink(self._tmp)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.close()
        else:
            self.abort()
        return False


def read_trajectory(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
