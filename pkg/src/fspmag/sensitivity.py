"""Fundamental-limit formulas for damped-sinusoid phase, frequency, and
amplitude estimation (CRLB/MVU bounds), field-sensitivity conversions, and
Monte-Carlo maximum-likelihood validation of the bounds.

PSD convention (two-sided, shared with the detection module): white noise of
PSD rho has per-sample sigma = rho/sqrt(2*dt) and an average over time t has
variance rho^2/(2*t).
"""

from __future__ import annotations

from dataclasses import dataclass
import json
import math

import numpy as np
from scipy.optimize import curve_fit

from .model import CONSTANTS, Constants

R_E = 2.8179403262e-15      # classical electron radius, m
C_LIGHT = 2.99792458e8      # m/s
H_PLANCK = 6.62607015e-34   # J s


def photon_flux(power_w: float, wavelength_m: float) -> float:
    """Photon flux of a beam of the given optical power, photons/s."""
    if power_w <= 0 or wavelength_m <= 0:
        raise ValueError("power and wavelength must be > 0")
    return power_w * wavelength_m / (H_PLANCK * C_LIGHT)


def optical_gain(l: float, n: float, detuning: float, fwhm: float,
                 oscillator_strength: float = 1.0 / 3.0) -> float:
    """Lumped optical-rotation gain k = (1/2) l r_e c f n D(nu) with the
    dispersion profile D = detuning / (detuning^2 + (fwhm/2)^2)."""
    if fwhm <= 0:
        raise ValueError("fwhm must be > 0")
    d = detuning / (detuning ** 2 + (fwhm / 2.0) ** 2)
    return 0.5 * l * R_E * C_LIGHT * oscillator_strength * n * d


def shot_noise_psd(phi_pr: float) -> float:
    """Rotation-angle shot-noise PSD rho_theta = sqrt(1/(2 Phi)), rad/√Hz."""
    if phi_pr <= 0:
        raise ValueError("phi_pr must be > 0")
    return math.sqrt(1.0 / (2.0 * phi_pr))


@dataclass(frozen=True)
class BoundInputs:
    """Inputs for the sensitivity bounds.

    delta_t is the precession period 2*pi/omega_0; m_periods is the number
    of periods M in the measurement; rho_theta may be given directly or
    derived from phi_pr.
    """

    gain_k: float
    t2: float
    delta_t: float
    m_periods: int
    omega_m: float = 2.0 * math.pi * 480.0
    theta: float = math.atan2(18000.0, 46649.0)
    rho_theta: float | None = None
    phi_pr: float | None = None

    def __post_init__(self) -> None:
        if self.gain_k <= 0 or self.t2 <= 0 or self.delta_t <= 0:
            raise ValueError("gain_k, t2, delta_t must be > 0")
        if self.m_periods < 1:
            raise ValueError("m_periods must be >= 1")
        if self.rho_theta is None and self.phi_pr is None:
            raise ValueError("give rho_theta or phi_pr")

    @property
    def rho(self) -> float:
        if self.rho_theta is not None:
            return self.rho_theta
        return shot_noise_psd(self.phi_pr)

    @property
    def z(self) -> float:
        """Per-period damping factor e^(-delta_t/T2)."""
        return math.exp(-self.delta_t / self.t2)

    @property
    def measurement_time(self) -> float:
        return self.m_periods * self.delta_t


def kappa1(m: int, z: float) -> float:
    """Damping factor of the MVU frequency-estimation variance."""
    if m < 2:
        raise ValueError("m must be >= 2")
    if not (0.0 < z < 1.0):
        raise ValueError("z must be in (0, 1)")
    z2 = z * z
    z2m = z ** (2 * m)
    num = (1.0 - z2) ** 3 * (1.0 - z2m)
    den = z2 + z2 * z2m * z2m - z2m * (2.0 * z2 + m * m * (1.0 - z2) ** 2)
    if den <= 0.0:
        raise ValueError("outside validity")
    return num / den


def kappa2(m: int, z: float) -> float:
    """Damping factor of the MVU amplitude-estimation variance."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not (0.0 < z < 1.0):
        raise ValueError("z must be in (0, 1)")
    return 2.0 * (1.0 - z * z) / (1.0 - z ** (2 * m))


def freq_psd_bound(inp: BoundInputs) -> float:
    """MVU frequency-estimation noise PSD rho(omega), rad/s/√Hz."""
    k1 = kappa1(inp.m_periods, inp.z)
    return inp.rho / (inp.gain_k * inp.delta_t) * math.sqrt(
        2.0 * inp.m_periods * k1)


def amp_psd_bound(inp: BoundInputs) -> float:
    """MVU amplitude-estimation noise PSD rho(A), 1/√Hz."""
    k2 = kappa2(inp.m_periods, inp.z)
    return inp.rho / inp.gain_k * math.sqrt(2.0 * inp.m_periods * k2)


def delta_b_tot(inp: BoundInputs, consts: Constants = CONSTANTS) -> float:
    """Total-field sensitivity at the t ~ 2 T2 optimum:
    4*sqrt(2)*rho_theta/(gamma*k*T2), nT/√Hz."""
    return 4.0 * math.sqrt(2.0) * inp.rho / (
        consts.gamma_f2_rad * inp.gain_k * inp.t2)


def delta_b_tran(inp: BoundInputs, consts: Constants = CONSTANTS,
                 regime: str = "general") -> float:
    """Transverse-field sensitivity, nT/√Hz.

    general: (omega_m csc(theta)/gamma) * (rho_theta/k) * sqrt(2 M kappa2);
    short (t << T2): prefactor sqrt(2); t=2T2 optimum: prefactor 2*sqrt(2).
    """
    if math.sin(inp.theta) == 0.0:
        raise ValueError("no transverse sensitivity")
    base = inp.omega_m / (math.sin(inp.theta) * consts.gamma_f2_rad) \
        * inp.rho / inp.gain_k
    if regime == "general":
        return base * math.sqrt(2.0 * inp.m_periods
                                * kappa2(inp.m_periods, inp.z))
    if regime == "short":
        if inp.measurement_time > 0.2 * inp.t2:
            raise ValueError("short regime requires t << T2")
        return base * 2.0
    if regime == "t=2T2":
        return base * 4.0
    raise ValueError(f"unknown regime {regime!r}")


def delta_b_ts(inp: BoundInputs, consts: Constants = CONSTANTS) -> float:
    """Sequential-modulation (time-sharing) transverse sensitivity:
    8*rho_theta/(gamma*k*T2*sin(theta)), nT/√Hz."""
    if math.sin(inp.theta) == 0.0:
        raise ValueError("no transverse sensitivity")
    return 8.0 * inp.rho / (consts.gamma_f2_rad * inp.gain_k * inp.t2
                            * math.sin(inp.theta))


def optimal_m_for_freq(inp: BoundInputs, m_max: int | None = None) -> int:
    """Number of periods minimizing rho(omega) (expected near t = 2 T2)."""
    if m_max is None:
        m_max = int(10.0 * inp.t2 / inp.delta_t)
    from dataclasses import replace

    best_m, best = 2, math.inf
    for m in range(2, m_max + 1):
        val = freq_psd_bound(replace(inp, m_periods=m))
        if val < best:
            best_m, best = m, val
    return best_m


# ---------------------------------------------------------------------------
# Monte-Carlo maximum-likelihood validation
# ---------------------------------------------------------------------------

def mc_frequency_std(inp: BoundInputs, omega0: float, trials: int = 200,
                     samples_per_period: int = 20, seed: int = 0) -> float:
    """Standard deviation of ML frequency estimates on simulated damped
    noisy sinusoids; the bound predicts rho(omega)/sqrt(2 t)."""
    dt = inp.delta_t / samples_per_period
    n = inp.m_periods * samples_per_period
    t = np.arange(n) * dt
    envelope = np.exp(-t / inp.t2)
    sigma = inp.rho / math.sqrt(2.0 * dt)
    rng = np.random.default_rng(seed)

    def model(tt, a, w, psi):
        return a * np.exp(-tt / inp.t2) * np.sin(w * tt + psi)

    truth = (inp.gain_k, omega0, 0.3)
    clean = model(t, *truth)
    est = np.empty(trials)
    for i in range(trials):
        y = clean + rng.normal(0.0, sigma, n)
        popt, _ = curve_fit(model, t, y, p0=truth)
        est[i] = popt[1]
    return float(np.std(est, ddof=1))


def predicted_frequency_std(inp: BoundInputs) -> float:
    return freq_psd_bound(inp) / math.sqrt(2.0 * inp.measurement_time)


def mc_amplitude_std(inp: BoundInputs, amp: float = 1e-3, trials: int = 400,
                     seed: int = 0) -> float:
    """Standard deviation of weighted-LS amplitude estimates on per-period
    phase samples psi_m = C sin(omega_m m dt) with noise growing as the
    signal envelope decays; the bound predicts sigma0*sqrt(kappa2)."""
    m = inp.m_periods
    t = np.arange(1, m + 1) * inp.delta_t
    sigma0 = inp.rho / (inp.gain_k * math.sqrt(inp.delta_t))
    w = np.exp(-2.0 * t / inp.t2)        # inverse-variance weights
    sig = np.sin(inp.omega_m * t)
    rng = np.random.default_rng(seed)
    est = np.empty(trials)
    denom = float(np.sum(w * sig * sig))
    for i in range(trials):
        psi = amp * sig + rng.normal(0.0, sigma0 / np.exp(-t / inp.t2))
        est[i] = float(np.sum(w * sig * psi)) / denom
    return float(np.std(est, ddof=1))


def predicted_amplitude_std(inp: BoundInputs) -> float:
    sigma0 = inp.rho / (inp.gain_k * math.sqrt(inp.delta_t))
    return sigma0 * math.sqrt(kappa2(inp.m_periods, inp.z))


def joint_fit_variance_ratios(inp: BoundInputs) -> tuple[float, float]:
    """Variance of jointly fitting {offset, slope, sin, cos} on per-period
    phase samples, relative to the independent single-parameter bounds.

    Returns (slope ratio, amplitude ratio); both approach 1 when the
    modulation is fast enough that the harmonic columns decouple from the
    polynomial ones.
    """
    m = inp.m_periods
    t = np.arange(1, m + 1) * inp.delta_t
    w = np.exp(-2.0 * t / inp.t2)
    x = np.column_stack([np.ones_like(t), t, np.sin(inp.omega_m * t),
                         np.cos(inp.omega_m * t)])
    sigma0 = inp.rho / (inp.gain_k * math.sqrt(inp.delta_t))
    cov = sigma0 ** 2 * np.linalg.inv(x.T @ (w[:, None] * x))
    var_slope_ind = predicted_frequency_std(inp) ** 2
    var_amp_ind = predicted_amplitude_std(inp) ** 2
    return (float(cov[1, 1]) / var_slope_ind,
            float(cov[2, 2]) / var_amp_ind)


def report(inp: BoundInputs, consts: Constants = CONSTANTS,
           monte_carlo: dict | None = None) -> str:
    """JSON sensitivity report: inputs, bounds, optional MC results."""
    payload = {
        "inputs": {"rho_theta": inp.rho, "gain_k": inp.gain_k,
                   "t2_s": inp.t2, "delta_t_s": inp.delta_t,
                   "m_periods": inp.m_periods, "omega_m_rad_s": inp.omega_m,
                   "theta_rad": inp.theta},
        "bounds": {"rho_omega": freq_psd_bound(inp),
                   "rho_amp": amp_psd_bound(inp),
                   "delta_b_tot_nT": delta_b_tot(inp, consts),
                   "delta_b_tran_nT": delta_b_tran(inp, consts),
                   "delta_b_ts_nT": delta_b_ts(inp, consts)},
    }
    if monte_carlo is not None:
        payload["monte_carlo"] = monte_carlo
    return json.dumps(payload, indent=2)
