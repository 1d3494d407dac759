"""Closed-form predictions for every systematic effect, used as oracles
against the simulation pipeline and for error budgeting."""

from __future__ import annotations

from dataclasses import dataclass, asdict
import json
import math

from .model import CONSTANTS, Constants, FieldConfig, carrier_frequency
from .spin_sim import b_hm


@dataclass(frozen=True)
class SystematicsBudget:
    """One entry per effect, with the inputs echoed for traceability."""

    berry_nT: float
    tau_2nd_s: float
    static_heading_nT: float
    dynamic_heading_nT: float
    probe_heading_nT: float
    eddy_cutoff_hz: float
    inputs: dict

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def berry_equivalent_field(cfg: FieldConfig, consts: Constants = CONSTANTS,
                           direction: int = +1, exact: bool = True) -> float:
    """Geometric (solid-angle) frequency shift expressed as a field along
    B_tot: +/-(1 - cos theta) * omega_m / gamma, sign following the rotation
    direction. exact=False gives the small-angle form B_m^2/(2 B_z^2)."""
    if cfg.b_z == 0:
        raise ValueError("b_z must be nonzero")
    if direction not in (-1, 1):
        raise ValueError("direction must be +1 or -1")
    geom = (1.0 - math.cos(cfg.theta)) if exact else \
        cfg.b_m ** 2 / (2.0 * cfg.b_z ** 2)
    return direction * geom * cfg.omega_m / consts.gamma_f2_rad


def second_harmonic_amplitude(cfg: FieldConfig,
                              consts: Constants = CONSTANTS) -> float:
    """Sin(2 w_m t) amplitude of the phase series: -B_m^2/(4 B_z^2 w_0)."""
    if cfg.b_z == 0:
        raise ValueError("b_z must be nonzero")
    return -cfg.b_m ** 2 / (4.0 * cfg.b_z ** 2 * carrier_frequency(cfg,
                                                                   consts))


def static_heading(b_hm_nt: float, beta: float) -> float:
    """Static heading error B_HM*sin(beta) for pump at angle beta from the
    plane perpendicular to the field."""
    return b_hm_nt * math.sin(beta)


def dynamic_heading(b_hm_nt: float, theta: float, rf_start: str,
                    start_sign: int, omega_m: float | None = None,
                    omega_0: float | None = None,
                    t2: float | None = None) -> float:
    """Dynamic heading error of the spin component locked to the rotating
    total field: start_sign * B_HM * sin(theta) for a parallel rotating-field
    start, zero for a perpendicular start."""
    if rf_start not in ("parallel", "perpendicular"):
        raise ValueError("rf_start must be parallel|perpendicular")
    if start_sign not in (-1, 1):
        raise ValueError("start_sign must be +1 or -1")
    if omega_m is not None and omega_0 is not None and t2 is not None:
        if not (1.0 / t2 < omega_m < 0.1 * omega_0):
            import warnings

            warnings.warn("outside the adiabatic regime 1/T2 < w_m << w_0",
                          stacklevel=2)
    if rf_start == "perpendicular":
        return 0.0
    return start_sign * b_hm_nt * math.sin(theta)


def probe_heading_field(omega_m: float, consts: Constants = CONSTANTS,
                        alpha: float = 0.0, direction: int = +1) -> float:
    """Fictitious field along the probe beam from the P_z contribution:
    -/+ (w_m/gamma) tan(alpha), sign per rotation direction."""
    if not abs(alpha) < math.pi / 2:
        raise ValueError("|alpha| must be < pi/2")
    if direction not in (-1, 1):
        raise ValueError("direction must be +1 or -1")
    return direction * (omega_m / consts.gamma_f2_rad) * math.tan(alpha)


def budget(cfg: FieldConfig, polarization: float, beta: float, alpha: float,
           tau_e: float, rf_start: str = "parallel",
           consts: Constants = CONSTANTS) -> SystematicsBudget:
    """Full error budget at the shot-1 sign conventions."""
    bhm = b_hm(polarization, cfg.b_tot, consts)
    return SystematicsBudget(
        berry_nT=berry_equivalent_field(cfg, consts, +1),
        tau_2nd_s=second_harmonic_amplitude(cfg, consts),
        static_heading_nT=static_heading(bhm, beta),
        dynamic_heading_nT=dynamic_heading(bhm, cfg.theta, rf_start, +1),
        probe_heading_nT=probe_heading_field(cfg.omega_m, consts, alpha, +1),
        eddy_cutoff_hz=1.0 / (2.0 * math.pi * tau_e),
        inputs={"b_z_nT": cfg.b_z, "b_m_nT": cfg.b_m,
                "omega_m_rad_s": cfg.omega_m, "theta_rad": cfg.theta,
                "polarization": polarization, "beta_rad": beta,
                "alpha_rad": alpha, "tau_e_s": tau_e,
                "b_hm_nT": bhm, "rf_start": rf_start})
