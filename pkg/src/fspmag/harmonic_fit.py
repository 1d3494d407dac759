"""Linear least-squares fit of phase-shift series to the regression model

    tau(t) = offset + slope*t + a1 sin(w_m t) + b1 cos(w_m t)
                    + a2 sin(2 w_m t) + b2 cos(2 w_m t)
                    + ah sin(w_hp t) + bh cos(w_hp t)

and conversion of fitted coefficients to magnetic field quantities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import json
import math

import numpy as np

from .detection import PhaseShiftSeries
from .model import Constants, ShotPhaseConfig, TWO_PI

N_PARAMS = 8
_RANK_TOL = 1e-10


@dataclass
class FitResult:
    offset: float
    slope: float
    a1: float
    b1: float
    a2: float
    b2: float
    ah: float
    bh: float
    residual_rms: float
    covariance: np.ndarray = field(repr=False)

    def coefficients(self) -> np.ndarray:
        return np.array([self.offset, self.slope, self.a1, self.b1,
                         self.a2, self.b2, self.ah, self.bh])

    def to_dict(self) -> dict:
        return {
            "offset_s": self.offset, "slope": self.slope,
            "a1_s": self.a1, "b1_s": self.b1,
            "a2_s": self.a2, "b2_s": self.b2,
            "ah_s": self.ah, "bh_s": self.bh,
            "residual_rms_s": self.residual_rms,
            "covariance": self.covariance.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _design_matrix(t: np.ndarray, omega_m: float, omega_hp: float,
                   hp_decay_t2: float | None) -> np.ndarray:
    cols = [np.ones_like(t), t,
            np.sin(omega_m * t), np.cos(omega_m * t),
            np.sin(2.0 * omega_m * t), np.cos(2.0 * omega_m * t)]
    env = np.exp(-t / hp_decay_t2) if hp_decay_t2 else 1.0
    cols.append(env * np.sin(omega_hp * t))
    cols.append(env * np.cos(omega_hp * t))
    return np.column_stack(cols)


def fit_phase_model(series: PhaseShiftSeries, omega_m: float,
                    omega_hp: float, hp_decay_t2: float | None = None
                    ) -> FitResult:
    """Ordinary least squares on the 8-parameter model.

    The time axis is centered before solving (the harmonic phases are kept
    in absolute time, only the polynomial part is re-referenced) and the
    offset is mapped back afterwards, which keeps the design matrix well
    conditioned for series that start late in a panorama.
    """
    t = np.asarray(series.t, dtype=float)
    tau = np.asarray(series.tau, dtype=float)
    if t.size < N_PARAMS:
        raise ValueError("insufficient data: need at least 8 samples")
    duration = t[-1] - t[0]
    if omega_m * duration < TWO_PI:
        raise ValueError("insufficient data: need at least one modulation "
                         "period")
    t0 = t.mean()
    x = _design_matrix(t, omega_m, omega_hp, hp_decay_t2)
    x[:, 1] = t - t0
    scales = np.linalg.norm(x, axis=0)
    if np.any(scales == 0):
        raise ValueError("rank-deficient design matrix")
    xs = x / scales
    beta_s, _, rank, _ = np.linalg.lstsq(xs, tau, rcond=_RANK_TOL)
    if rank < N_PARAMS:
        raise ValueError("rank-deficient design matrix")
    beta = beta_s / scales
    resid = tau - x @ beta
    dof = max(t.size - N_PARAMS, 1)
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(xs.T @ xs) / np.outer(scales, scales)
    # un-center: tau = c0' + c1 (t - t0) + ...  =>  offset = c0' - c1 t0
    jac = np.eye(N_PARAMS)
    jac[0, 1] = -t0
    beta = jac @ beta
    cov = jac @ cov @ jac.T
    return FitResult(offset=beta[0], slope=beta[1], a1=beta[2], b1=beta[3],
                     a2=beta[4], b2=beta[5], ah=beta[6], bh=beta[7],
                     residual_rms=float(np.sqrt(np.mean(resid ** 2))),
                     covariance=cov)


def transverse_fields(fit: FitResult, sf: float, shot: ShotPhaseConfig
                      ) -> tuple[float, float]:
    """Convert first-harmonic amplitudes to transverse fields.

    For shot 1 the phase shift is sf*(-b_x sin(w_m t) + b_y cos(w_m t)),
    so b_x = -a1/sf and b_y = +b1/sf; the per-shot sign table generalizes
    this to the other start-phase configurations.
    """
    if sf <= 0:
        raise ValueError("sf must be > 0")
    return (shot.sign_bx * fit.a1 / sf, shot.sign_by * fit.b1 / sf)


def slope_to_field(slope: float, omega0: float, consts: Constants) -> float:
    """Fractional frequency offset (the fitted slope) expressed as an
    equivalent field shift along the total field, in nT."""
    return slope * omega0 / consts.gamma_f2_rad
