import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from afspim import AmplitudeSet, LatticeShape, NoiseModel, SpinConfiguration
from afspim.errors import ConfigurationError
from afspim.problems import brute_force_optimum, generate_instance, summarize
from afspim.solver import (Backend, Evaluator, SolverConfig, TrajectoryRecord, initial_state, propose,
                           run, step)


class TestConfig:
    def test_floor_rule(self):
        cfg = SolverConfig()
        assert cfg.flips_at(10, 0) == 1
        assert cfg.flips_at(100, 500) == 1

    def test_large_lattice_first_batch(self):
        assert SolverConfig(initial_flip_fraction=0.05).flips_at(40000, 0) == 2000

    def test_schedule_decays(self):
        cfg = SolverConfig()
        ks = [cfg.flips_at(40000, t) for t in range(0, 1000, 50)]
        assert ks == sorted(ks, reverse=True) and ks[-1] >= 1

    def test_temperature(self):
        cfg = SolverConfig(initial_temperature=2.0, temperature_decay=0.5)
        assert cfg.temperature_at(0) == 2.0 and cfg.temperature_at(2) == 0.5

    @pytest.mark.parametrize("kw", [dict(initial_flip_fraction=0), dict(initial_flip_fraction=1.5),
                                    dict(flip_decay=0), dict(initial_temperature=-1),
                                    dict(max_iterations=0), dict(decision_margin=-1)])
    def test_invalid(self, kw):
        with pytest.raises(ConfigurationError):
            SolverConfig(**kw)

    def test_backend_from_string(self):
        assert SolverConfig(backend="optical-ideal").backend is Backend.OPTICAL_IDEAL


class TestProposal:
    def test_deterministic(self):
        s = SpinConfiguration.uniform(LatticeShape(20, 20))
        cfg = SolverConfig()
        a = propose(cfg, s, 0, np.random.default_rng(4))
        b = propose(cfg, s, 0, np.random.default_rng(4))
        assert a == b

    def test_flip_count(self):
        s = SpinConfiguration.uniform(LatticeShape(200, 200))
        c = propose(SolverConfig(), s, 0, np.random.default_rng(0))
        assert int((c.spins != s.spins).sum()) == 2000


class TestStep:
    def test_uphill_rejected_at_zero_temperature(self):
        # from the balanced state every flip raises H
        amps = AmplitudeSet(LatticeShape(2, 1), [0.5, 0.5])
        cfg = SolverConfig(initial_flip_fraction=0.5)
        state = initial_state(amps, cfg, initial=SpinConfiguration(amps.shape, [1, -1]))
        new, rec = step(state, cfg)
        assert not rec.accepted and new.spins == state.spins and new.energy == 0.0

    def test_downhill_accepted(self):
        amps = AmplitudeSet(LatticeShape(2, 1), [0.5, 0.5])
        cfg = SolverConfig(initial_flip_fraction=0.5)
        state = initial_state(amps, cfg)
        new, rec = step(state, cfg)
        assert rec.accepted and new.energy == 0.0 and rec.H == 0.0 and rec.m_abs == 0.0

    def test_temperature_accepts_uphill_sometimes(self):
        amps = AmplitudeSet(LatticeShape(2, 1), [0.5, 0.5])
        cfg = SolverConfig(initial_flip_fraction=0.5, initial_temperature=100.0, temperature_decay=1.0,
                           max_iterations=50)
        result = run(amps, cfg, initial=SpinConfiguration(amps.shape, [1, -1]))
        assert any(r.accepted and r.H > 0 for r in result.records)


class TestRun:
    @settings(max_examples=15, deadline=None)
    @given(N=st.integers(2, 400), seed=st.integers(0, 2**31))
    def test_monotone_and_best(self, N, seed):
        amps = generate_instance(N, seed)
        result = run(amps, SolverConfig(max_iterations=60, rng_seed=seed))
        H = [r.H for r in result.records]
        assert all(b <= a for a, b in zip(H, H[1:]))
        assert result.best_energy <= (N * amps.amplitudes.mean()) ** 2 + 1e-9
        assert result.best_energy <= H[-1]

    def test_fast_path_identity(self):
        amps = generate_instance(900, 3)
        for r in run(amps, SolverConfig(max_iterations=50)).records:
            assert r.H == pytest.approx((900 * r.m_abs) ** 2, rel=1e-9, abs=1e-18)

    @pytest.mark.parametrize("backend", list(Backend))
    def test_deterministic(self, backend):
        amps = generate_instance(LatticeShape(8, 8), 5)
        noise = NoiseModel(read_noise_sigma=0.01, quantization_bits=8, auto_exposure=True, rng_seed=3)
        cfg = SolverConfig(max_iterations=40, backend=backend, noise=noise, rng_seed=9)
        a, b = run(amps, cfg), run(amps, cfg)
        strip = lambda rs: [(r.iteration, r.H, r.m_abs, r.accepted, r.flips) for r in rs]
        assert strip(a.records) == strip(b.records)
        assert a.final_spins == b.final_spins

    @pytest.mark.parametrize("n, seed", [(8, 0), (16, 1), (32, 2)])
    def test_backend_agreement(self, n, seed):
        amps = generate_instance(LatticeShape(n, n), seed)
        runs = {b: run(amps, SolverConfig(max_iterations=150, backend=b, rng_seed=seed))
                for b in (Backend.EXACT_FAST, Backend.OPTICAL_IDEAL)}
        exact, optical = runs[Backend.EXACT_FAST], runs[Backend.OPTICAL_IDEAL]
        assert [r.accepted for r in exact.records] == [r.accepted for r in optical.records]
        for re_, ro in zip(exact.records, optical.records):
            assert ro.H == pytest.approx(re_.H, rel=1e-6, abs=1e-9 * n ** 4)

    def test_equal_amplitude_parity_instance_reaches_zero(self):
        shape = LatticeShape(8, 8)
        amps = AmplitudeSet(shape, np.full(64, 0.5))
        result = run(amps, SolverConfig(max_iterations=300, rng_seed=2))
        assert result.final_energy == 0.0
        assert summarize(result.final_spins, amps).difference == 0.0

    def test_noisy_run_tracks_best(self):
        amps = generate_instance(LatticeShape(8, 8), 1)
        noise = NoiseModel(read_noise_sigma=0.05, quantization_bits=6, auto_exposure=True, rng_seed=1)
        result = run(amps, SolverConfig(max_iterations=80, backend=Backend.OPTICAL_IDEAL, noise=noise))
        assert result.best_energy <= min(r.H for r in result.records)

    def test_callback_sees_every_record(self):
        seen = []
        run(generate_instance(16, 0), SolverConfig(max_iterations=7), on_record=seen.append)
        assert [r.iteration for r in seen] == list(range(7))
        assert all(isinstance(r, TrajectoryRecord) for r in seen)

    def test_evaluator_stochastic_flag(self):
        amps = generate_instance(LatticeShape(4, 4), 0)
        assert not Evaluator(amps, Backend.OPTICAL_IDEAL).stochastic
        assert Evaluator(amps, Backend.OPTICAL_IDEAL, NoiseModel(read_noise_sigma=0.01)).stochastic
        assert not Evaluator(amps, Backend.EXACT_FAST, NoiseModel(read_noise_sigma=0.01)).stochastic


@pytest.mark.xfail(strict=True, reason="random-subset descent with 500 evaluations seldom lands on the "
                                       "single optimal partition of 2**15; measured well below 9/10")
def test_sixteen_spin_optimum_in_500_iterations():
    hits = 0
    for seed in range(10):
        amps = generate_instance(LatticeShape(4, 4), seed)
        best, _ = brute_force_optimum(amps)
        result = run(amps, SolverConfig(max_iterations=500, rng_seed=seed))
        hits += math.isclose(summarize(result.final_spins, amps).difference, best, abs_tol=1e-12)
    assert hits >= 9
