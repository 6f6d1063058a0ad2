import json
import subprocess
import sys

import numpy as np
import pytest

from afspim import io
from afspim.cli import main
from afspim.problems import generate_instance


def write_config(path, **overrides):
    doc = {"seed": 3, "lattice": {"n_x": 8, "n_y": 8}, "instance": {"seed": 5},
           "solver": {"max_iterations": 60}, "trials": 2, "output_dir": "out"}
    doc.update(overrides)
    path.write_text(json.dumps(doc))
    return path


def read_files(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


def test_solve_outputs(tmp_path, capsys):
    cfg = write_config(tmp_path / "cfg.json")
    assert main(["solve", str(cfg)]) == 0
    out = tmp_path / "out"
    assert {"instance.txt", "summary.json", "trial_000.csv", "trial_001.csv",
            "trial_000.partition", "trial_001.partition"} <= set(read_files(out))
    summary = json.loads((out / "summary.json").read_text())
    t0 = summary["trials"][0]
    for key in ("final_H", "m_abs", "fidelity", "iterations", "solver_seed"):
        assert key in t0
    assert [t["solver_seed"] for t in summary["trials"]] == [3, 4]
    rows = io.read_trajectory(out / "trial_000.csv")
    assert len(rows) == 60
    spins, _ = io.read_partition(out / "trial_000.partition")
    amps, seed = io.read_instance(out / "instance.txt")
    assert seed == 5 and np.array_equal(amps.amplitudes, generate_instance(amps.shape, 5).amplitudes)
    assert "trial 1:" in capsys.readouterr().out


def test_rerun_is_bit_identical(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", noise={"read_noise_sigma": 0.01, "quantization_bits": 8,
                                                     "auto_exposure": True},
                       solver={"max_iterations": 30, "backend": "optical-ideal"})
    assert main(["solve", str(cfg), "--no-timing", "--out", str(tmp_path / "a")]) == 0
    assert main(["solve", str(cfg), "--no-timing", "--out", str(tmp_path / "b")]) == 0
    a, b = read_files(tmp_path / "a"), read_files(tmp_path / "b")
    a.pop("summary.json"), b.pop("summary.json")  # holds the differing output path
    assert a == b


def test_backend_flag_agreement(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", lattice={"n_x": 32, "n_y": 32}, trials=1,
                       solver={"max_iterations": 80})
    for backend in ("exact-fast", "optical-ideal"):
        assert main(["solve", str(cfg), "--backend", backend, "--out", str(tmp_path / backend)]) == 0
    fast = io.read_trajectory(tmp_path / "exact-fast" / "trial_000.csv")
    optical = io.read_trajectory(tmp_path / "optical-ideal" / "trial_000.csv")
    assert [r["accepted"] for r in fast] == [r["accepted"] for r in optical]


def test_seed_flag(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", trials=1)
    main(["solve", str(cfg), "--seed", "11"])
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["trials"][0]["solver_seed"] == 11


def test_missing_instance_file(tmp_path, capsys):
    cfg = write_config(tmp_path / "cfg.json", instance={"file": "nope.txt"})
    assert main(["solve", str(cfg)]) == 2
    assert not (tmp_path / "out").exists()
    assert "not found" in capsys.readouterr().err


def test_instance_file_config(tmp_path):
    amps = generate_instance(12, 1)
    io.write_instance(tmp_path / "inst.txt", amps, 1)
    cfg = write_config(tmp_path / "cfg.json", lattice=None, instance={"file": "inst.txt"}, trials=1)
    assert main(["solve", str(cfg)]) == 0
    back, _ = io.read_instance(tmp_path / "out" / "instance.txt")
    assert np.array_equal(back.amplitudes, amps.amplitudes)


@pytest.mark.parametrize("doc", [{"bogus": 1}, {"solver": {"max_iterations": 0}}, {"noise": {"quantization_bits": 99}}])
def test_bad_config(tmp_path, doc):
    assert main(["solve", str(write_config(tmp_path / "cfg.json", **doc))]) == 2


def test_config_not_json(tmp_path):
    (tmp_path / "cfg.json").write_text("{")
    assert main(["solve", str(tmp_path / "cfg.json")]) == 2


def test_bench(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", solver={"max_iterations": 1000})
    assert main(["bench", str(cfg), "--sizes", "1600", "--trials", "2"]) == 0
    rows = (tmp_path / "out" / "bench.csv").read_text().splitlines()
    assert rows[0].startswith("N,n_x,n_y,trials,mean_fidelity")
    table = dict(zip(rows[0].split(","), rows[1].split(",")))
    assert table["N"] == "1600" and table["trials"] == "2"
    # noiseless descent floor for N=1600
    assert float(table["max_fidelity"]) <= 1e-4
    trials = (tmp_path / "out" / "bench_trials.csv").read_text().splitlines()
    assert len(trials) == 3 and "greedy_fidelity" in trials[0]


def test_bench_empty_sizes(tmp_path):
    cfg = write_config(tmp_path / "cfg.json")
    assert main(["bench", str(cfg), "--sizes", ""]) == 2
    assert main(["bench", str(write_config(tmp_path / "c2.json", bench={"sizes": []}))]) == 2


def test_synth_kernel(tmp_path, capsys):
    assert main(["synth-kernel", "--nx", "6", "--ny", "4", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "kernel_report.json").read_text())
    assert report["max_realized_error"] <= 1e-9
    assert report["linearity_error"] <= 1e-9
    assert report["min_weight"] < 0 < report["max_weight"]
    assert io.read_kernel(tmp_path / "kernel.grid").weights.shape == (13, 13)
    assert "max |realized G - target|" in capsys.readouterr().out


def test_synth_kernel_zero_target(tmp_path):
    assert main(["synth-kernel", "--nx", "3", "--ny", "3", "--target", "zero", "--out", str(tmp_path)]) == 0
    assert np.all(io.read_kernel(tmp_path / "kernel.grid").weights == 0)


def test_synth_kernel_json_target(tmp_path):
    table = np.zeros((3, 5))
    table[1, 2] = -1.0
    table[0, 0] = table[2, 4] = 0.5
    (tmp_path / "g.json").write_text(json.dumps({"kind": "table", "table": table.tolist()}))
    assert main(["synth-kernel", "--nx", "3", "--ny", "2", "--target", str(tmp_path / "g.json"),
                 "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "kernel_report.json").read_text())["max_realized_error"] <= 1e-9


def test_synth_kernel_asymmetric_target(tmp_path):
    table = np.zeros((3, 3))
    table[0, 1] = 1.0
    (tmp_path / "g.json").write_text(json.dumps({"kind": "table", "table": table.tolist()}))
    assert main(["synth-kernel", "--nx", "2", "--ny", "2", "--target", str(tmp_path / "g.json")]) == 2


def test_render_and_calibrate(tmp_path, capsys):
    assert main(["render-frame", "--nx", "16", "--ny", "16", "--shift-u", "0.3", "--shift-v", "-0.2",
                 "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    assert main(["calibrate", str(tmp_path / "frame.grid")]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["offset_u"] == pytest.approx(0.3, abs=0.05)
    assert result["offset_v"] == pytest.approx(-0.2, abs=0.05)


def test_calibrate_boundary_peak(tmp_path):
    from afspim.optics import DetectorFrame, DetectorGrid
    I = np.zeros((9, 9))
    I[4, 0] = 1.0
    io.write_frame(tmp_path / "edge.grid", DetectorFrame(DetectorGrid(9), I))
    assert main(["calibrate", str(tmp_path / "edge.grid")]) == 1


def test_oracle(tmp_path, capsys):
    io.write_instance(tmp_path / "i.txt", generate_instance(10, 2), 2)
    assert main(["oracle", str(tmp_path / "i.txt"), "--out", str(tmp_path / "o")]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["N"] == 10 and result["difference"] >= 0
    assert (tmp_path / "o" / "oracle.partition").exists()


def test_oracle_too_large(tmp_path):
    io.write_instance(tmp_path / "i.txt", generate_instance(30, 2))
    assert main(["oracle", str(tmp_path / "i.txt")]) == 2


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["solve"])
    assert exc.value.code == 2


def test_console_script(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "afspim.cli", "synth-kernel", "--nx", "2", "--ny", "2",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "kernel.grid").exists()
