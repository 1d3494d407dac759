"""Shared domain types, physical constants, and elementary field arithmetic.

Units: fields in nT, time in s, angles in rad. Gyromagnetic ratios are stored
in Hz/nT and multiplied by 2*pi wherever an angular rate is needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Constants:
    """Rb-87 ground-state constants.

    gamma_f2 > 0 and gamma_f1 < 0: the two hyperfine manifolds precess in
    opposite senses; their magnitude difference generates the beat frequency
    omega_hp = 2*pi*|gamma_f2 + gamma_f1|... see omega_hp().
    """

    gamma_f2_hz_per_nt: float = 7.0056
    gamma_f1_hz_per_nt: float = -6.9778
    a_hf_hz: float = 3.417e9

    def __post_init__(self) -> None:
        if self.gamma_f2_hz_per_nt <= 0:
            raise ValueError("gamma_f2 must be positive")
        if self.gamma_f1_hz_per_nt >= 0:
            raise ValueError("gamma_f1 must be negative")
        if math.isclose(abs(self.gamma_f2_hz_per_nt), abs(self.gamma_f1_hz_per_nt)):
            raise ValueError("|gamma_f2| must differ from |gamma_f1|")

    @property
    def gamma_f2_rad(self) -> float:
        """Angular gyromagnetic ratio of F=2, rad/s/nT."""
        return TWO_PI * self.gamma_f2_hz_per_nt

    @property
    def gamma_f1_rad(self) -> float:
        return TWO_PI * self.gamma_f1_hz_per_nt

    def omega_hp(self, b_tot_nt: float) -> float:
        """Beat angular frequency between the manifolds at |B| = b_tot, rad/s."""
        return TWO_PI * abs(self.gamma_f2_hz_per_nt + self.gamma_f1_hz_per_nt) * b_tot_nt


CONSTANTS = Constants()


@dataclass(frozen=True)
class FieldConfig:
    """Applied field: leading field B_z plus a rotating transverse field.

    B_x(t) = b_x_res + b_m sin(omega_m t + phi_x)
    B_y(t) = b_y_res + b_m sin(omega_m t + phi_y)
    B_z(t) = b_z
    """

    b_z: float
    b_m: float
    omega_m: float
    phi_x: float = math.pi / 2
    phi_y: float = 0.0
    b_x_res: float = 0.0
    b_y_res: float = 0.0

    def __post_init__(self) -> None:
        if self.b_m < 0:
            raise ValueError("b_m must be >= 0")
        if self.omega_m <= 0:
            raise ValueError("omega_m must be > 0")
        if self.b_m > 0:
            # rotating, not linear, modulation
            d = abs(self.phi_x - self.phi_y) % math.pi
            if not (math.isclose(d, math.pi / 2, abs_tol=1e-9)):
                raise ValueError("|phi_x - phi_y| must be pi/2 modulo pi")

    @property
    def theta(self) -> float:
        """Half-opening angle of the field cone, arctan(B_m/B_z)."""
        return math.atan2(self.b_m, self.b_z)

    @property
    def b_tot(self) -> float:
        return math.hypot(self.b_m, self.b_z)

    def replace(self, **kw) -> "FieldConfig":
        from dataclasses import replace

        return replace(self, **kw)


@dataclass(frozen=True)
class ShotPhaseConfig:
    """One shot's start phases plus its row of the sign table.

    Signs are stored verbatim per shot. Rotation direction is
    +1 (anti-clockwise) for shots 1 and 3, -1 (clockwise) for shots 2 and 4.
    """

    shot_index: int
    phi_x: float
    phi_y: float
    sign_bx: int
    sign_by: int
    sign_tau_b: int
    sign_tau_2nd: int
    sign_tau_pump: int
    sign_tau_prob: int

    def __post_init__(self) -> None:
        if self.shot_index not in (1, 2, 3, 4):
            raise ValueError("shot_index must be 1..4")
        for s in (self.sign_bx, self.sign_by, self.sign_tau_b,
                  self.sign_tau_2nd, self.sign_tau_pump, self.sign_tau_prob):
            if s not in (-1, 1):
                raise ValueError("sign entries must be +1 or -1")

    @property
    def direction(self) -> int:
        """Rotation sense: +1 anti-clockwise, -1 clockwise."""
        return self.sign_tau_b


def _deg(d: float) -> float:
    return math.radians(d)


#: The canonical four-shot sign table, row for row.
#: columns: shot, phi_x, phi_y, b_x, b_y, tau_B, tau_2nd, tau_pump, tau_prob
SHOT_TABLE: tuple[ShotPhaseConfig, ...] = (
    ShotPhaseConfig(1, _deg(90), _deg(0), -1, +1, +1, -1, -1, -1),
    ShotPhaseConfig(2, _deg(90), _deg(180), -1, -1, -1, +1, -1, +1),
    ShotPhaseConfig(3, _deg(270), _deg(180), +1, -1, +1, -1, +1, -1),
    ShotPhaseConfig(4, _deg(270), _deg(360), +1, +1, -1, +1, +1, +1),
)


@dataclass(frozen=True)
class CellParams:
    """Vapor-cell ensemble parameters for the two-manifold classical model."""

    t2: float
    polarization: float = 1.0
    weight_f1: float = 0.0
    pump_direction: tuple[float, float, float] = (0.0, -1.0, 0.0)

    def __post_init__(self) -> None:
        if self.t2 <= 0:
            raise ValueError("t2 must be > 0")
        if not (0.0 <= self.polarization <= 1.0):
            raise ValueError("polarization must be in [0, 1]")
        if not (0.0 <= self.weight_f1 < 1.0):
            raise ValueError("weight_f1 must be in [0, 1)")
        n = math.sqrt(sum(c * c for c in self.pump_direction))
        if not math.isclose(n, 1.0, rel_tol=1e-6):
            raise ValueError("pump_direction must be a unit vector")

    @property
    def weight_f2(self) -> float:
        return 1.0 - self.weight_f1


def total_field(cfg: FieldConfig, t) -> np.ndarray:
    """Applied field at time(s) t, shape (..., 3), nT."""
    t = np.asarray(t, dtype=float)
    bx = cfg.b_x_res + cfg.b_m * np.sin(cfg.omega_m * t + cfg.phi_x)
    by = cfg.b_y_res + cfg.b_m * np.sin(cfg.omega_m * t + cfg.phi_y)
    bz = np.full_like(bx, cfg.b_z)
    return np.stack([bx, by, bz], axis=-1)


def reference_frequency(cfg: FieldConfig, consts: Constants = CONSTANTS,
                        direction: int = +1) -> float:
    """Rotating-frame precession rate omega0, rad/s.

    omega0 = gamma*sqrt(B_m^2 + (B_z + direction*omega_m/gamma)^2); the
    direction sign matches the rotation sense. For omega_m << omega0 this
    reduces to gamma*sqrt(B_m^2 + B_z^2).
    """
    if direction not in (-1, 1):
        raise ValueError("direction must be +1 or -1")
    g = consts.gamma_f2_rad
    bz_eff = cfg.b_z + direction * cfg.omega_m / g
    return g * math.hypot(cfg.b_m, bz_eff)


def carrier_frequency(cfg: FieldConfig, consts: Constants = CONSTANTS) -> float:
    """Lab-frame carrier used as the zero-crossing reference, rad/s.

    gamma*sqrt(B_m^2 + B_z^2): direction-independent, so the same reference
    serves all four shots and the Berry term appears as a slope of the
    extracted phase series.
    """
    return consts.gamma_f2_rad * math.hypot(cfg.b_m, cfg.b_z)


def scale_factor(cfg: FieldConfig, consts: Constants = CONSTANTS,
                 direction: int | None = None) -> float:
    """Phase-shift seconds per nT of transverse field.

    B_m / (omega_m * (B_m^2 + bz_eff^2)) where bz_eff includes the
    direction-dependent omega_m/gamma correction when direction is given.
    """
    if cfg.b_m == 0:
        raise ValueError("no vector sensitivity")
    if direction is None:
        bz_eff = cfg.b_z
    else:
        if direction not in (-1, 1):
            raise ValueError("direction must be +1 or -1")
        bz_eff = cfg.b_z + direction * cfg.omega_m / consts.gamma_f2_rad
    return cfg.b_m / (cfg.omega_m * (cfg.b_m ** 2 + bz_eff ** 2))
