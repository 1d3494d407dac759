"""Spin evolution: numba RK4 Bloch integrator (ground truth), the
closed-form rotation-matrix solution for the ideal rotating field, and the
heading-error effective-field augmentation."""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from numba import njit

from .model import CellParams, Constants, CONSTANTS, FieldConfig


@dataclass(frozen=True)
class HeadingModel:
    """Effective-field heading term: B_eff = B - B_HM (S_hat.B_hat) B_hat.

    The sign is fixed by requiring the full pipeline to report a positive
    total-field offset when the rotating field starts parallel to the spin.
    """

    b_hm: float = 0.0
    enabled: bool = False

    def __post_init__(self) -> None:
        if self.b_hm < 0:
            raise ValueError("b_hm must be >= 0")


@dataclass
class SpinState:
    """Classical polarization vectors of the two ground-state manifolds."""

    s_f2: np.ndarray
    s_f1: np.ndarray
    rf_start_relation: str | None = None

    def __post_init__(self) -> None:
        self.s_f2 = np.asarray(self.s_f2, dtype=float)
        self.s_f1 = np.asarray(self.s_f1, dtype=float)
        for v in (self.s_f2, self.s_f1):
            if v.shape != (3,):
                raise ValueError("spin vectors must be 3-vectors")
            if np.linalg.norm(v) > 1.0 + 1e-9:
                raise ValueError("|S| must be <= 1")


def b_hm(p: float, b_tot: float, consts: Constants = CONSTANTS) -> float:
    """Maximum static heading error, nT.

    [P(7+P^2)/(5+3P^2)] * 3*gamma*B_tot^2 / (4*pi*A_hf) with gamma angular
    and A_hf angular, which reduces to (3/2)*gamma_Hz*B_tot^2/A_hf_Hz.
    """
    if not (0.0 <= p <= 1.0):
        raise ValueError("polarization must be in [0, 1]")
    if b_tot <= 0:
        raise ValueError("b_tot must be > 0")
    pol = p * (7.0 + p * p) / (5.0 + 3.0 * p * p)
    return pol * 1.5 * consts.gamma_f2_hz_per_nt * b_tot ** 2 / consts.a_hf_hz


@njit(cache=True)
def _rk4_bloch(field, s0, gamma, t2_inv, dt, bhm, heading_on):  # pragma: no cover
    """Fixed-step RK4 for dS/dt = gamma * S x B_eff - S/T2.

    field is sampled at dt spacing; midpoints use adjacent-sample averages
    (the field varies at the slow modulation rate, so this is far below the
    integrator's own error).
    """
    n = field.shape[0]
    traj = np.empty((n, 3))
    s = s0.copy()
    traj[0] = s

    def deriv(sx, sy, sz, bx, by, bz):
        if heading_on:
            bn = math.sqrt(bx * bx + by * by + bz * bz)
            sn = math.sqrt(sx * sx + sy * sy + sz * sz)
            if bn > 0.0 and sn > 1e-12:
                proj = (sx * bx + sy * by + sz * bz) / (sn * bn)
                c = 1.0 - bhm * proj / bn
                bx, by, bz = bx * c, by * c, bz * c
        dx = gamma * (sy * bz - sz * by) - t2_inv * sx
        dy = gamma * (sz * bx - sx * bz) - t2_inv * sy
        dz = gamma * (sx * by - sy * bx) - t2_inv * sz
        return dx, dy, dz

    for k in range(n - 1):
        b0x, b0y, b0z = field[k, 0], field[k, 1], field[k, 2]
        b2x, b2y, b2z = field[k + 1, 0], field[k + 1, 1], field[k + 1, 2]
        b1x, b1y, b1z = 0.5 * (b0x + b2x), 0.5 * (b0y + b2y), 0.5 * (b0z + b2z)
        sx, sy, sz = s[0], s[1], s[2]
        k1x, k1y, k1z = deriv(sx, sy, sz, b0x, b0y, b0z)
        k2x, k2y, k2z = deriv(sx + 0.5 * dt * k1x, sy + 0.5 * dt * k1y,
                              sz + 0.5 * dt * k1z, b1x, b1y, b1z)
        k3x, k3y, k3z = deriv(sx + 0.5 * dt * k2x, sy + 0.5 * dt * k2y,
                              sz + 0.5 * dt * k2z, b1x, b1y, b1z)
        k4x, k4y, k4z = deriv(sx + dt * k3x, sy + dt * k3y, sz + dt * k3z,
                              b2x, b2y, b2z)
        s[0] = sx + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        s[1] = sy + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        s[2] = sz + dt / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
        traj[k + 1] = s
    return traj


def evolve_bloch(state: SpinState, field_at_cell: np.ndarray,
                 cell: CellParams, heading: HeadingModel | None,
                 dt: float, consts: Constants = CONSTANTS
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Integrate both manifolds over the sampled field; returns (traj_f2,
    traj_f1), each shape (n, 3). Pumping is off during evolution (FID)."""
    field_at_cell = np.ascontiguousarray(field_at_cell, dtype=float)
    if field_at_cell.ndim != 2 or field_at_cell.shape[1] != 3:
        raise ValueError("field_at_cell must have shape (n, 3)")
    if np.any(~np.isfinite(field_at_cell)):
        raise ValueError("NaN in field")
    b_scale = float(np.max(np.abs(field_at_cell)))
    f_larmor = consts.gamma_f2_hz_per_nt * b_scale
    if f_larmor > 0 and dt > 1.0 / (50.0 * f_larmor):
        raise ValueError("dt too large to resolve the precession")
    t2_inv = 1.0 / cell.t2 if np.isfinite(cell.t2) else 0.0
    h_on = bool(heading is not None and heading.enabled)
    h_b = heading.b_hm if h_on else 0.0
    traj2 = _rk4_bloch(field_at_cell, state.s_f2, consts.gamma_f2_rad,
                       t2_inv, dt, h_b, h_on)
    if np.linalg.norm(state.s_f1) > 0.0:
        traj1 = _rk4_bloch(field_at_cell, state.s_f1, consts.gamma_f1_rad,
                           t2_inv, dt, h_b, h_on)
    else:
        traj1 = np.zeros_like(traj2)
    return traj2, traj1


def evolve_closed_form(cfg: FieldConfig, consts: Constants = CONSTANTS,
                       t=0.0) -> np.ndarray:
    """Spin projections for the canonical configuration (phi_x=90 deg,
    phi_y=0, no residuals, initial spin (0,-1,0), no relaxation)."""
    if cfg.b_x_res != 0.0 or cfg.b_y_res != 0.0:
        raise ValueError("closed form requires zero residual fields")
    if not (math.isclose(cfg.phi_x, math.pi / 2, abs_tol=1e-12)
            and math.isclose(cfg.phi_y, 0.0, abs_tol=1e-12)):
        raise ValueError("closed form requires phi_x=90 deg, phi_y=0")
    g = consts.gamma_f2_rad
    w0 = g * math.hypot(cfg.b_m, cfg.b_z + cfg.omega_m / g)
    t = np.asarray(t, dtype=float)
    wm_t = cfg.omega_m * t
    w0_t = w0 * t
    ratio = (g * cfg.b_z + cfg.omega_m) / w0
    px = np.cos(w0_t) * np.sin(wm_t) - ratio * np.sin(w0_t) * np.cos(wm_t)
    py = -np.cos(w0_t) * np.cos(wm_t) - ratio * np.sin(w0_t) * np.sin(wm_t)
    pz = (g * cfg.b_m / w0) * np.sin(w0_t)
    return np.stack([px, py, pz], axis=-1)


def pump_reset(cell: CellParams, rf_start_relation: str | None = None
               ) -> SpinState:
    """Instantaneous repolarization along the pump direction.

    The manifold weights are applied here, so the probe sums the manifolds
    plainly. rf_start_relation ('parallel' or 'perpendicular') is metadata
    recording the geometry of the shot's rotating-field start phase vs. the
    pump."""
    if rf_start_relation not in (None, "parallel", "perpendicular"):
        raise ValueError("rf_start_relation must be parallel|perpendicular")
    sp = np.asarray(cell.pump_direction, dtype=float)
    s = cell.polarization * sp
    return SpinState(s_f2=cell.weight_f2 * s, s_f1=cell.weight_f1 * s,
                     rf_start_relation=rf_start_relation)


def write_trajectory_csv(path, t: np.ndarray, traj_f2: np.ndarray,
                         traj_f1: np.ndarray) -> None:
    data = np.column_stack([t, traj_f2, traj_f1])
    np.savetxt(path, data, delimiter=",",
               header="t_s,f2_sx,f2_sy,f2_sz,f1_sx,f1_sy,f1_sz", comments="")
