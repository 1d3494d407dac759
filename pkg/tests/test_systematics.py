import json
import math

import numpy as np
import pytest

from fspmag.model import CONSTANTS, FieldConfig, TWO_PI, carrier_frequency
from fspmag.spin_sim import b_hm
from fspmag.systematics_oracle import (berry_equivalent_field, budget,
                                       dynamic_heading, probe_heading_field,
                                       second_harmonic_amplitude,
                                       static_heading)

DEG = math.pi / 180.0


class TestBerry:
    def test_no_modulation_is_zero(self):
        cfg = FieldConfig(b_z=50000.0, b_m=0.0, omega_m=TWO_PI * 480.0)
        assert berry_equivalent_field(cfg) == 0.0

    def test_paper_geometry(self, dyn_cfg):
        val = berry_equivalent_field(dyn_cfg)
        assert val == pytest.approx(4.59, rel=0.01)
        # budget prediction of 4.7 nT, within 10%
        assert val == pytest.approx(4.7, rel=0.1)

    def test_small_angle_form_larger(self, dyn_cfg):
        exact = berry_equivalent_field(dyn_cfg, exact=True)
        approx = berry_equivalent_field(dyn_cfg, exact=False)
        assert approx > exact
        assert approx == pytest.approx(5.1, rel=0.05)

    def test_linear_in_omega_m(self, dyn_cfg):
        doubled = dyn_cfg.replace(omega_m=2.0 * dyn_cfg.omega_m)
        assert berry_equivalent_field(doubled) == pytest.approx(
            2.0 * berry_equivalent_field(dyn_cfg), rel=1e-12)

    def test_direction_sign(self, dyn_cfg):
        assert berry_equivalent_field(dyn_cfg, direction=-1) == \
            -berry_equivalent_field(dyn_cfg, direction=+1)

    def test_errors(self, dyn_cfg):
        cfg = FieldConfig(b_z=0.0, b_m=0.0, omega_m=TWO_PI * 480.0)
        with pytest.raises(ValueError, match="b_z"):
            berry_equivalent_field(cfg)
        with pytest.raises(ValueError, match="direction"):
            berry_equivalent_field(dyn_cfg, direction=2)


class TestSecondHarmonic:
    def test_paper_magnitude(self, dyn_cfg):
        val = second_harmonic_amplitude(dyn_cfg)
        assert val < 0.0
        assert abs(val) == pytest.approx(16.9e-9, rel=0.01)
        assert abs(val) == pytest.approx(16e-9, rel=0.2)

    def test_zero_modulation(self):
        cfg = FieldConfig(b_z=50000.0, b_m=0.0, omega_m=TWO_PI * 480.0)
        assert second_harmonic_amplitude(cfg) == 0.0

    def test_quadratic_in_b_m(self, dyn_cfg):
        # compare at fixed b_z and carrier: halving b_m quarters the value
        # up to the small carrier change
        half = dyn_cfg.replace(b_m=dyn_cfg.b_m / 2.0)
        ratio = (second_harmonic_amplitude(dyn_cfg)
                 / second_harmonic_amplitude(half))
        w_ratio = carrier_frequency(half) / carrier_frequency(dyn_cfg)
        assert ratio == pytest.approx(4.0 * w_ratio, rel=1e-9)


class TestStaticHeading:
    def test_zero_angle(self):
        assert static_heading(7.7, 0.0) == 0.0

    def test_paper_value(self):
        bhm = b_hm(1.0, 50000.0)
        assert bhm == pytest.approx(7.69, rel=0.01)
        assert static_heading(bhm, 24.0 * DEG) == pytest.approx(3.1,
                                                                rel=0.05)

    def test_odd_in_beta(self):
        assert static_heading(7.7, -0.3) == -static_heading(7.7, 0.3)


class TestDynamicHeading:
    def test_perpendicular_is_zero(self, dyn_cfg):
        assert dynamic_heading(7.69, dyn_cfg.theta, "perpendicular", +1) \
            == 0.0

    def test_parallel_paper_value(self, dyn_cfg):
        val = dynamic_heading(7.69, dyn_cfg.theta, "parallel", +1)
        assert val == pytest.approx(3.0, rel=0.1)

    def test_start_sign_flip(self, dyn_cfg):
        plus = dynamic_heading(7.69, dyn_cfg.theta, "parallel", +1)
        minus = dynamic_heading(7.69, dyn_cfg.theta, "parallel", -1)
        assert minus == -plus

    def test_adiabatic_warning(self, dyn_cfg):
        with pytest.warns(UserWarning, match="adiabatic"):
            dynamic_heading(7.69, dyn_cfg.theta, "parallel", +1,
                            omega_m=TWO_PI * 480.0,
                            omega_0=TWO_PI * 1000.0, t2=3e-3)

    def test_input_validation(self, dyn_cfg):
        with pytest.raises(ValueError, match="rf_start"):
            dynamic_heading(7.69, dyn_cfg.theta, "diagonal", +1)
        with pytest.raises(ValueError, match="start_sign"):
            dynamic_heading(7.69, dyn_cfg.theta, "parallel", 0)


class TestProbeHeading:
    def test_zero_alpha(self):
        assert probe_heading_field(TWO_PI * 480.0, alpha=0.0) == 0.0

    def test_one_degree(self):
        val = probe_heading_field(TWO_PI * 480.0, alpha=1.0 * DEG)
        assert abs(val) == pytest.approx(1.2, rel=0.02)

    def test_ten_degrees(self):
        val = probe_heading_field(TWO_PI * 480.0, alpha=10.0 * DEG)
        assert abs(val) == pytest.approx(68.5 * math.tan(10.0 * DEG),
                                         rel=0.01)

    def test_direction_flips_sign(self):
        a = probe_heading_field(TWO_PI * 480.0, alpha=0.1, direction=+1)
        b = probe_heading_field(TWO_PI * 480.0, alpha=0.1, direction=-1)
        assert a == -b != 0.0


class TestBudget:
    def test_full_budget(self, dyn_cfg):
        b = budget(dyn_cfg, polarization=1.0, beta=24.0 * DEG,
                   alpha=1.0 * DEG, tau_e=10.4e-3)
        payload = json.loads(b.to_json())
        assert payload["berry_nT"] == pytest.approx(4.59, rel=0.01)
        assert payload["tau_2nd_s"] == pytest.approx(-16.9e-9, rel=0.01)
        assert payload["static_heading_nT"] == pytest.approx(3.1, rel=0.05)
        assert payload["dynamic_heading_nT"] == pytest.approx(2.77,
                                                              rel=0.01)
        assert payload["probe_heading_nT"] == pytest.approx(1.2, rel=0.02)
        assert payload["eddy_cutoff_hz"] == pytest.approx(
            1.0 / (TWO_PI * 10.4e-3), rel=1e-9)
        assert all(np.isfinite(v) for k, v in payload.items()
                   if k != "inputs")
        assert payload["inputs"]["b_hm_nT"] == pytest.approx(7.69, rel=0.01)
