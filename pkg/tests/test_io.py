import numpy as np
import pytest

from afspim import (AmplitudeSet, CouplingSpec, DetectorGrid, FieldMode, LatticeShape, NoiseModel,
                    SpinConfiguration, far_field_intensity, uniform_mask)
from afspim import io
from afspim.correlation import synthesize_kernel
from afspim.errors import DomainError, FormatError
from afspim.problems import generate_instance
from afspim.solver import TrajectoryRecord


def test_instance_round_trip(tmp_path):
    a = generate_instance(LatticeShape(7, 3), 12)
    io.write_instance(tmp_path / "i.txt", a, 12)
    b, seed = io.read_instance(tmp_path / "i.txt")
    assert seed == 12 and b.shape == a.shape
    assert np.array_equal(a.amplitudes, b.amplitudes)


def test_partition_round_trip(tmp_path):
    s = SpinConfiguration(LatticeShape(3, 2), [1, -1, -1, 1, 1, -1])
    io.write_partition(tmp_path / "p.txt", s)
    t, seed = io.read_partition(tmp_path / "p.txt")
    assert seed is None and t == s
    assert (tmp_path / "p.txt").read_text().splitlines()[1:3] == ["+1", "-1"]


def test_frame_round_trip(tmp_path):
    shape = LatticeShape(5, 5)
    grid = DetectorGrid.for_lattice(shape)
    frame = far_field_intensity(uniform_mask(shape), grid.params, grid, FieldMode.PHYSICAL,
                                NoiseModel(read_noise_sigma=0.01, auto_exposure=True))
    frame = frame.with_origin((0.25, -0.5))
    io.write_frame(tmp_path / "f.grid", frame)
    back = io.read_frame(tmp_path / "f.grid")
    assert back.grid == frame.grid
    assert np.array_equal(back.intensities, frame.intensities)
    assert back.origin_offset == (0.25, -0.5)
    assert back.exposure_scale == frame.exposure_scale


def test_kernel_round_trip(tmp_path, rng):
    shape = LatticeShape(4, 3)
    t = rng.normal(size=(5, 7))
    target = CouplingSpec.from_table(t + t[::-1, ::-1])
    k = synthesize_kernel(target, shape, DetectorGrid.for_lattice(shape))
    io.write_kernel(tmp_path / "k.grid", k)
    back = io.read_kernel(tmp_path / "k.grid")
    assert np.array_equal(back.weights, k.weights)
    assert np.array_equal(back.target.table(shape), target.table(shape))
    assert io.read_kernel(tmp_path / "k.grid").grid == k.grid


def test_uniform_target_round_trip(tmp_path):
    shape = LatticeShape(3, 3)
    k = synthesize_kernel(CouplingSpec.uniform(-2.0), shape, DetectorGrid.for_lattice(shape))
    io.write_kernel(tmp_path / "k.grid", k)
    assert io.read_kernel(tmp_path / "k.grid").target == k.target


def test_frame_is_not_a_kernel(tmp_path):
    shape = LatticeShape(3, 3)
    grid = DetectorGrid.for_lattice(shape)
    io.write_frame(tmp_path / "f.grid", far_field_intensity(uniform_mask(shape), grid.params, grid, FieldMode.IDEAL))
    with pytest.raises(FormatError):
        io.read_kernel(tmp_path / "f.grid")


@pytest.mark.parametrize("text", [
    "",
    "# n_x=2 n_y=1\n0.5\n0.5\n",
    "# n_x=2 n_y=1 seed=none\n0.5\n",
    "# n_x=2 n_y=1 seed=none\n0.5\nabc\n",
])
def test_bad_instance_files(tmp_path, text):
    (tmp_path / "bad.txt").write_text(text)
    with pytest.raises(FormatError):
        io.read_instance(tmp_path / "bad.txt")


def test_instance_values_out_of_range(tmp_path):
    (tmp_path / "bad.txt").write_text("# n_x=2 n_y=1 seed=none\n0.5\n1.5\n")
    with pytest.raises(DomainError):
        io.read_instance(tmp_path / "bad.txt")


@pytest.mark.parametrize("text", [
    "not a grid\n",
    "# afspim-grid 1\n# kind: \"frame\"\n# samples_per_axis: 3\n1 2 3\n",
    "# afspim-grid 1\n# kind: \"frame\"\n# samples_per_axis: 3\n# pixel_pitch: {{bad\n",
])
def test_bad_grid_files(tmp_path, text):
    (tmp_path / "bad.grid").write_text(text)
    with pytest.raises(FormatError):
        io.read_frame(tmp_path / "bad.grid")


def test_trajectory_writer(tmp_path):
    path = tmp_path / "t.csv"
    with io.TrajectoryWriter(path, timing=False) as w:
        w(TrajectoryRecord(0, 4.0, 0.5, True, 3, 0.123))
        w(TrajectoryRecord(1, 1.0, 0.25, False, 1, 0.456))
    rows = io.read_trajectory(path)
    assert list(rows[0]) == list(TrajectoryRecord.CSV_HEADER)
    assert rows[1] == {"iteration": "1", "H": "1.0", "m_abs": "0.25", "accepted": "0", "flips": "1",
                       "wall_ms": "0.000"}


def test_trajectory_writer_aborts_on_error(tmp_path):
    path = tmp_path / "t.csv"
    with pytest.raises(RuntimeError):
        with io.TrajectoryWriter(path) as w:
            w(TrajectoryRecord(0, 1.0, 0.1, True, 1, 0.0))
            raise RuntimeError("boom")
    assert not path.exists()
    assert list(tmp_path.iterdir()) == []


def test_atomic_write_replaces(tmp_path):
    p = tmp_path / "x.txt"
    io.atomic_write_text(p, "one")
    io.atomic_write_text(p, "two")
    assert p.read_text() == "two"
    assert [q.name for q in tmp_path.iterdir()] == ["x.txt"]
