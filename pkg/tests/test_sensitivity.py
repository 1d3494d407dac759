import json
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fspmag.model import CONSTANTS, TWO_PI
from fspmag.sensitivity import (BoundInputs, amp_psd_bound, delta_b_tot,
                                delta_b_tran, delta_b_ts, freq_psd_bound,
                                joint_fit_variance_ratios, kappa1, kappa2,
                                mc_amplitude_std, mc_frequency_std,
                                optical_gain, optimal_m_for_freq,
                                photon_flux, predicted_amplitude_std,
                                predicted_frequency_std, report,
                                shot_noise_psd)

DT = 1.0 / 348e3
T2 = 1.7e-3


def _inputs(m, t2=T2, rho=1e-8, **kw):
    return BoundInputs(gain_k=1.0, t2=t2, delta_t=DT, m_periods=m,
                       rho_theta=rho, **kw)


class TestOpticalGain:
    def test_on_resonance_null(self):
        assert optical_gain(0.01, 1e17, 0.0, 500e6) == 0.0

    def test_extremum_at_half_fwhm(self):
        fwhm = 500e6
        peak = optical_gain(0.01, 1e17, fwhm / 2.0, fwhm)
        for d in (0.3e9, 0.2e9, 0.4e9):
            assert abs(optical_gain(0.01, 1e17, d, fwhm)) <= abs(peak) + 1e-30
        assert peak == pytest.approx(
            optical_gain(0.01, 1e17, 1.0, fwhm) * fwhm / 2.0
            * (1.0 / fwhm) / (1.0 / (1.0 + (fwhm / 2.0) ** 2 / 1.0)),
            rel=1.0)   # sign and scale sanity only
        assert optical_gain(0.01, 1e17, -fwhm / 2.0, fwhm) == -peak

    def test_linear_in_length(self):
        a = optical_gain(0.01, 1e17, 1e9, 500e6)
        b = optical_gain(0.1, 1e17, 1e9, 500e6)
        assert b == pytest.approx(10.0 * a, rel=1e-12)

    def test_fwhm_validation(self):
        with pytest.raises(ValueError, match="fwhm"):
            optical_gain(0.01, 1e17, 1e9, 0.0)


class TestShotNoisePsd:
    def test_quadrupling_flux_halves_rho(self):
        assert shot_noise_psd(4e15) == pytest.approx(
            shot_noise_psd(1e15) / 2.0, rel=1e-12)

    def test_paper_flux(self):
        phi = photon_flux(2e-3, 795e-9)
        assert phi == pytest.approx(8.0e15, rel=0.01)
        assert shot_noise_psd(phi) == pytest.approx(7.9e-9, rel=0.01)

    def test_validation(self):
        with pytest.raises(ValueError, match="phi_pr"):
            shot_noise_psd(0.0)
        with pytest.raises(ValueError):
            photon_flux(-1.0, 795e-9)


class TestBoundInputs:
    def test_needs_noise_level(self):
        with pytest.raises(ValueError, match="rho_theta or phi_pr"):
            BoundInputs(gain_k=1.0, t2=T2, delta_t=DT, m_periods=10)

    def test_z_and_time(self):
        inp = _inputs(100)
        assert inp.z == pytest.approx(math.exp(-DT / T2))
        assert inp.measurement_time == pytest.approx(100 * DT)

    def test_rho_from_flux(self):
        inp = BoundInputs(gain_k=1.0, t2=T2, delta_t=DT, m_periods=10,
                          phi_pr=8e15)
        assert inp.rho == pytest.approx(shot_noise_psd(8e15))


class TestKappas:
    def test_kappa2_m1_exactly_two(self):
        for z in (0.1, 0.5, 0.999):
            assert kappa2(1, z) == pytest.approx(2.0, rel=1e-12)

    def test_kappa2_short_time_limit(self):
        # M*dt << T2: kappa2 -> 2*dt/t = 2/M
        z = math.exp(-1e-5)
        m = 50
        assert kappa2(m, z) == pytest.approx(2.0 / m, rel=0.01)

    def test_kappa2_large_m(self):
        z = 0.9
        assert kappa2(10_000, z) == pytest.approx(2.0 * (1.0 - z * z),
                                                  rel=1e-9)

    @given(st.integers(1, 500), st.floats(0.01, 0.999))
    def test_kappa2_identity(self, m, z):
        assert kappa2(m, z) * (1.0 - z ** (2 * m)) == pytest.approx(
            2.0 * (1.0 - z * z), rel=1e-9)

    def test_kappa1_positive(self):
        for m in (2, 10, 100, 1000):
            for z in (0.3, 0.9, 0.999):
                assert kappa1(m, z) > 0.0

    def test_kappa1_undamped_limit_matches_fisher_oracle(self):
        # kappa1 encodes the slope variance of the weighted LS fit of a
        # linear phase on M samples with noise growing as the envelope
        # decays: var(omega) = sigma0^2 * kappa1 / dt^2; compare against
        # the brute-force Fisher-matrix oracle (weights z^(2i)) near z=1
        m = 40
        z = 1.0 - 1e-4
        t = np.arange(1, m + 1, dtype=float)
        w = z ** (2 * t)
        x = np.column_stack([np.ones(m), t])
        cov = np.linalg.inv(x.T @ (w[:, None] * x))
        assert kappa1(m, z) == pytest.approx(cov[1, 1], rel=1e-2)
        # undamped closed form 12/(M(M^2-1))
        assert kappa1(m, z) == pytest.approx(12.0 / (m * (m * m - 1)),
                                             rel=1e-2)

    def test_kappa1_validation(self):
        with pytest.raises(ValueError, match="m must be >= 2"):
            kappa1(1, 0.5)
        with pytest.raises(ValueError, match="z must be"):
            kappa1(10, 1.5)


class TestBounds:
    def test_freq_bound_minimum_near_2t2(self):
        inp = _inputs(100)
        m_opt = optimal_m_for_freq(inp)
        t_opt = m_opt * DT
        assert t_opt == pytest.approx(2.0 * T2, rel=0.1)

    def test_amp_bound_monotone_in_m(self):
        vals = [amp_psd_bound(_inputs(m)) for m in (10, 30, 100, 300, 1000)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_delta_b_tot_halves_with_t2(self):
        a = delta_b_tot(_inputs(100, t2=T2))
        b = delta_b_tot(_inputs(100, t2=2 * T2))
        assert b == pytest.approx(a / 2.0, rel=1e-12)

    def test_delta_b_tran_short_independent_of_t2(self):
        a = delta_b_tran(_inputs(20, t2=T2), regime="short")
        b = delta_b_tran(_inputs(20, t2=2 * T2), regime="short")
        assert a == pytest.approx(b, rel=1e-12)

    def test_delta_b_tran_general_matches_2t2_form(self):
        m = int(round(2.0 * T2 / DT))
        gen = delta_b_tran(_inputs(m), regime="general")
        closed = delta_b_tran(_inputs(m), regime="t=2T2")
        assert gen == pytest.approx(closed, rel=0.05)

    def test_tran_to_ts_ratio_at_matched_modulation(self):
        # at omega_m = pi/T2 the simultaneous scheme is within a factor
        # pi/2 of the time-sharing bound ("comparable sensitivity")
        m = int(round(2.0 * T2 / DT))
        inp = _inputs(m, omega_m=math.pi / T2)
        ratio = delta_b_tran(inp, regime="t=2T2") / delta_b_ts(inp)
        assert ratio == pytest.approx(math.pi / 2.0, rel=1e-9)

    def test_theta_zero_error(self):
        inp = _inputs(100, theta=0.0)
        with pytest.raises(ValueError, match="no transverse sensitivity"):
            delta_b_tran(inp)
        with pytest.raises(ValueError, match="no transverse sensitivity"):
            delta_b_ts(inp)

    def test_short_regime_guard(self):
        m = int(round(2.0 * T2 / DT))
        with pytest.raises(ValueError, match="short regime"):
            delta_b_tran(_inputs(m), regime="short")

    def test_measured_sigma_psi_maps_to_paper_numbers(self):
        # sigma_psi = 2pi*3e-4 per period -> rho = k*sigma_psi*sqrt(dt)
        sigma_psi = TWO_PI * 3e-4
        rho = sigma_psi * math.sqrt(DT)
        theta = math.asin(18.0 / 50.0)
        m = int(round(2.0 * T2 / DT))
        inp = _inputs(m, rho=rho, theta=theta)
        tot = delta_b_tot(inp)
        tran = delta_b_tran(inp, regime="t=2T2")
        assert tot == pytest.approx(0.3e-3, rel=0.30)     # 0.3 pT/rtHz
        assert tran == pytest.approx(3.0e-3, rel=0.30)    # 3 pT/rtHz

    def test_multipass_projection(self):
        # pinned gain k=1.553 at 2 mW probe reproduces the projected
        # 218 aT/rtHz and ~3 fT/rtHz
        phi = photon_flux(2e-3, 795e-9)
        m = int(round(2.0 * 3e-3 * 350e3))
        inp = BoundInputs(gain_k=1.553, t2=3e-3, delta_t=1.0 / 350e3,
                          m_periods=m, omega_m=TWO_PI * 480.0,
                          theta=math.radians(30.0), phi_pr=phi)
        assert delta_b_tot(inp) == pytest.approx(218e-9, rel=0.01)
        assert delta_b_tran(inp, regime="t=2T2") == pytest.approx(
            3e-6, rel=0.1)


class TestMonteCarlo:
    def test_frequency_std_matches_bound(self):
        for m in (100, 400):
            inp = _inputs(m, rho=2e-6)
            got = mc_frequency_std(inp, omega0=TWO_PI * 348e3, trials=120,
                                   seed=1)
            assert got == pytest.approx(predicted_frequency_std(inp),
                                        rel=0.15)

    def test_amplitude_std_matches_bound(self):
        # modulation pinned to an integer number of cycles in the record
        m = 100
        omega_m = TWO_PI * 2.0 / (m * DT)
        inp = _inputs(m, rho=2e-6, omega_m=omega_m)
        got = mc_amplitude_std(inp, trials=300, seed=2)
        assert got == pytest.approx(predicted_amplitude_std(inp), rel=0.15)

    def test_joint_fit_converges_for_fast_modulation(self):
        # harmonic columns decouple from offset+slope once several
        # modulation cycles fit within the record
        m = int(round(2.0 * T2 / DT))
        slow = joint_fit_variance_ratios(_inputs(m, omega_m=math.pi / T2))
        fast = joint_fit_variance_ratios(
            _inputs(m, omega_m=8.0 * math.pi / T2))
        assert fast[0] < slow[0]
        assert fast[1] < slow[1]
        assert fast[1] < 1.25


class TestReport:
    def test_json_payload(self):
        inp = _inputs(100)
        payload = json.loads(report(inp, monte_carlo={"trials": 10}))
        assert set(payload) == {"inputs", "bounds", "monte_carlo"}
        for v in payload["bounds"].values():
            assert np.isfinite(v)
