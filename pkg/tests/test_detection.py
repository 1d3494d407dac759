import math

import numpy as np
import pytest

from fspmag.detection import (PhaseShiftSeries, ProbeGeometry,
                              add_shot_noise, extract_phase, high_pass,
                              probe_signal, shot_noise_sigma)
from fspmag.model import CONSTANTS, TWO_PI

F0 = 350e3
W0 = TWO_PI * F0


def _sine(f, duration, dt, amp=1.0, phase=0.0, decay=None):
    t = np.arange(int(duration / dt)) * dt
    env = np.exp(-t / decay) if decay else 1.0
    return t, amp * env * np.sin(TWO_PI * f * t + phase)


class TestProbeGeometry:
    def test_alpha_range(self):
        with pytest.raises(ValueError, match="alpha"):
            ProbeGeometry(alpha=math.pi / 2)

    def test_gain_positive(self):
        with pytest.raises(ValueError, match="gain_k"):
            ProbeGeometry(gain_k=0.0)


class TestPhaseShiftSeries:
    def test_monotone_t(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            PhaseShiftSeries(t=[0.0, 1.0, 1.0], tau=[0.0, 0.0, 0.0],
                             reference_omega=W0)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="same shape"):
            PhaseShiftSeries(t=[0.0, 1.0], tau=[0.0], reference_omega=W0)


class TestProbeSignal:
    def test_alpha_zero_is_px(self):
        rng = np.random.default_rng(0)
        traj2 = rng.normal(size=(50, 3))
        traj1 = np.zeros((50, 3))
        geom = ProbeGeometry(alpha=0.0, gain_k=2.0)
        out = probe_signal(traj2, traj1, geom)
        assert np.allclose(out, 2.0 * traj2[:, 0])

    def test_pz_zero_any_alpha(self):
        rng = np.random.default_rng(1)
        traj2 = rng.normal(size=(50, 3))
        traj2[:, 2] = 0.0
        geom = ProbeGeometry(alpha=0.3, gain_k=1.0)
        out = probe_signal(traj2, np.zeros((50, 3)), geom)
        assert np.allclose(out, math.cos(0.3) * traj2[:, 0])

    def test_manifolds_summed(self):
        traj2 = np.ones((10, 3))
        traj1 = 0.5 * np.ones((10, 3))
        out = probe_signal(traj2, traj1, ProbeGeometry())
        assert np.allclose(out, 1.5)


class TestAddShotNoise:
    def test_infinite_flux_is_identity(self):
        sig = np.linspace(0.0, 1.0, 100)
        out = add_shot_noise(sig, math.inf, 1e-6, rng_seed=3)
        assert np.array_equal(out, sig)

    def test_deterministic_under_seed(self):
        sig = np.zeros(1000)
        a = add_shot_noise(sig, 1e15, 1e-6, rng_seed=42)
        b = add_shot_noise(sig, 1e15, 1e-6, rng_seed=42)
        assert np.array_equal(a, b)

    def test_sample_variance_matches_sigma(self):
        phi, dt = 1e15, 1e-6
        sig = np.zeros(1_000_000)
        out = add_shot_noise(sig, phi, dt, rng_seed=7)
        sigma = shot_noise_sigma(phi, dt)
        assert np.var(out) == pytest.approx(sigma ** 2, rel=0.01)

    def test_rejects_nonpositive_flux(self):
        with pytest.raises(ValueError, match="phi_pr"):
            add_shot_noise(np.zeros(4), 0.0, 1e-6, rng_seed=0)


class TestHighPass:
    def test_passes_fast_blocks_slow(self):
        dt = 1.0 / (50.0 * F0)
        t = np.arange(20000) * dt
        fast = np.sin(W0 * t)
        slow = np.sin(TWO_PI * 500.0 * t)
        out_fast = high_pass(fast, dt, 150e3)
        out_slow = high_pass(slow, dt, 150e3)
        assert np.max(np.abs(out_fast[5000:])) > 0.8
        assert np.max(np.abs(out_slow[5000:])) < 0.01


class TestExtractPhase:
    def test_zero_tau_on_reference_sinusoid(self):
        dt = 1.0 / (200.0 * F0)
        t, sig = _sine(F0, 40 / F0, dt)
        series = extract_phase(sig, dt, W0)
        assert series.t.size >= 35
        assert np.max(np.abs(series.tau)) < 1e-4 / F0

    def test_detuned_sinusoid_linear_ramp(self):
        # tau is signal-crossing minus reference-crossing time: a signal
        # faster than the reference crosses earlier, so tau ramps at -eps
        eps = 1e-3
        dt = 1.0 / (400.0 * F0)
        t, sig = _sine(F0 * (1.0 + eps), 200 / F0, dt)
        series = extract_phase(sig, dt, W0)
        slope = np.polyfit(series.t, series.tau, 1)[0]
        assert slope == pytest.approx(-eps, abs=1e-6)

    def test_crossing_spacing_one_per_period(self):
        dt = 1.0 / (150.0 * F0)
        _, sig = _sine(F0, 30 / F0, dt)
        series = extract_phase(sig, dt, W0)
        spacing = np.diff(series.t)
        assert np.allclose(spacing, 1.0 / F0, rtol=1e-3)

    def test_threshold_curl_on_decaying_signal(self):
        # a nonzero threshold on a decaying envelope biases the crossing
        # times progressively earlier as the amplitude shrinks
        dt = 1.0 / (300.0 * F0)
        t2 = 2e-3
        _, sig = _sine(F0, 1.5 * t2, dt, decay=t2)
        series = extract_phase(sig, dt, W0, threshold=0.1)
        bias = series.tau - np.mean(series.tau[:10])
        # monotone growth of the magnitude of the bias
        third = len(bias) // 3
        assert abs(np.mean(bias[-third:])) > 5.0 * abs(np.mean(bias[:third]))

    def test_signal_lost_error(self):
        dt = 1.0 / (200.0 * F0)
        _, sig = _sine(F0, 20 / F0, dt, amp=0.05)
        with pytest.raises(ValueError, match="signal lost"):
            extract_phase(sig, dt, W0, threshold=0.04, hysteresis=0.02)

    def test_no_crossings_error(self):
        dt = 1.0 / (200.0 * F0)
        sig = np.full(2000, -1.0)
        sig[0] = 1.0   # amplitude check passes, but no upward crossing
        with pytest.raises(ValueError, match="no crossings found"):
            extract_phase(sig, dt, W0)

    def test_hysteresis_rejects_retriggers(self):
        dt = 1.0 / (200.0 * F0)
        rng = np.random.default_rng(5)
        _, sig = _sine(F0, 30 / F0, dt)
        noisy = sig + rng.normal(0.0, 0.05, len(sig))
        series = extract_phase(noisy, dt, W0, hysteresis=0.3)
        spacing = np.diff(series.t)
        # one crossing per period: no doubled triggers
        assert np.all(spacing > 0.5 / F0)

    def test_noise_floor_scales_with_flux(self):
        # fitted-phase scatter scales as 1/sqrt(phi_pr)
        dt = 1.0 / (200.0 * F0)
        _, sig = _sine(F0, 100 / F0, dt)
        stds = []
        fluxes = [1e12, 1e14]
        for phi in fluxes:
            taus = []
            for s in range(8):
                noisy = add_shot_noise(sig, phi, dt, rng_seed=s)
                series = extract_phase(noisy, dt, W0)
                taus.append(np.std(series.tau))
            stds.append(np.mean(taus))
        slope = (math.log(stds[1]) - math.log(stds[0])) / (
            math.log(fluxes[1]) - math.log(fluxes[0]))
        assert slope == pytest.approx(-0.5, abs=0.05)
