"""Optical-rotation signal synthesis, photon shot noise, and zero-crossing
phase extraction against a reference oscillator (MDA emulation).

PSD convention (two-sided, used consistently here and in the sensitivity
bounds): a white process of PSD rho has per-sample sigma = rho/sqrt(2*dt)
and an estimate averaged over time t has variance rho^2/(2*t).
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from numba import njit
from scipy.signal import lfilter

from .model import TWO_PI


@dataclass(frozen=True)
class ProbeGeometry:
    """Probe beam at angle alpha from the x axis (in the x-z plane) with
    lumped optical gain k (rad of rotation per unit spin projection)."""

    alpha: float = 0.0
    gain_k: float = 1.0

    def __post_init__(self) -> None:
        if not (abs(self.alpha) < math.pi / 2):
            raise ValueError("|alpha| must be < pi/2")
        if self.gain_k <= 0:
            raise ValueError("gain_k must be > 0")


@dataclass
class PhaseShiftSeries:
    """Phase shift in time units at each signal zero crossing."""

    t: np.ndarray
    tau: np.ndarray
    reference_omega: float

    def __post_init__(self) -> None:
        self.t = np.asarray(self.t, dtype=float)
        self.tau = np.asarray(self.tau, dtype=float)
        if self.t.shape != self.tau.shape:
            raise ValueError("t and tau must have the same shape")
        if self.t.size > 1 and np.any(np.diff(self.t) <= 0):
            raise ValueError("t must be strictly increasing")


def probe_signal(traj_f2: np.ndarray, traj_f1: np.ndarray,
                 geom: ProbeGeometry) -> np.ndarray:
    """Optical rotation k*(P_x cos(alpha) + P_z sin(alpha)), manifolds summed
    (their weights are already folded into the state amplitudes)."""
    ca, sa = math.cos(geom.alpha), math.sin(geom.alpha)
    px = traj_f2[:, 0] + traj_f1[:, 0]
    pz = traj_f2[:, 2] + traj_f1[:, 2]
    return geom.gain_k * (px * ca + pz * sa)


def shot_noise_sigma(phi_pr: float, dt: float) -> float:
    """Per-sample rotation-angle noise for probe flux phi_pr (photons/s)."""
    rho = math.sqrt(1.0 / (2.0 * phi_pr))
    return rho / math.sqrt(2.0 * dt)


def add_shot_noise(signal: np.ndarray, phi_pr: float, dt: float,
                   rng_seed: int) -> np.ndarray:
    """Add white Gaussian photon shot noise; deterministic under the seed."""
    if phi_pr <= 0:
        raise ValueError("phi_pr must be > 0")
    if not np.isfinite(phi_pr):
        return np.asarray(signal, dtype=float).copy()
    rng = np.random.default_rng(rng_seed)
    sigma = shot_noise_sigma(phi_pr, dt)
    return np.asarray(signal, dtype=float) + rng.normal(0.0, sigma,
                                                        len(signal))


def high_pass(signal: np.ndarray, dt: float, cutoff_hz: float) -> np.ndarray:
    """First-order high-pass (the pre-MDA analog filter)."""
    rc = 1.0 / (TWO_PI * cutoff_hz)
    a = rc / (rc + dt)
    return lfilter([a, -a], [1.0, -a], np.asarray(signal, dtype=float))


@njit(cache=True)
def _upward_crossings(sig, dt, threshold, hysteresis):  # pragma: no cover
    """Interpolated times of upward threshold crossings with a hysteresis
    re-arm band."""
    n = sig.shape[0]
    out = np.empty(n // 2 + 1)
    m = 0
    armed = sig[0] < threshold - hysteresis
    for k in range(1, n):
        if armed:
            if sig[k - 1] < threshold <= sig[k]:
                frac = (threshold - sig[k - 1]) / (sig[k] - sig[k - 1])
                out[m] = (k - 1 + frac) * dt
                m += 1
                armed = False
        else:
            if sig[k] < threshold - hysteresis:
                armed = True
    return out[:m]


def extract_phase(signal: np.ndarray, dt: float, reference_omega: float,
                  threshold: float = 0.0, hysteresis: float = 0.0
                  ) -> PhaseShiftSeries:
    """Zero-crossing phase extraction.

    Detects upward crossings of `threshold` (with hysteresis to reject noise
    re-triggers), linearly interpolates the crossing times, and subtracts the
    nearest reference-oscillator crossing; the resulting tau(t) is unwrapped
    so it can drift beyond one reference period. A nonzero threshold on a
    decaying signal produces the documented amplitude-dependent phase bias
    ("curl").
    """
    signal = np.asarray(signal, dtype=float)
    if reference_omega <= 0:
        raise ValueError("reference_omega must be > 0")
    period = TWO_PI / reference_omega
    n_first = max(2, int(round(period / dt)))
    amp0 = float(np.max(np.abs(signal[:n_first])))
    if amp0 <= threshold + hysteresis:
        raise ValueError("signal lost")
    tc = _upward_crossings(signal, dt, threshold, hysteresis)
    if tc.size == 0:
        raise ValueError("no crossings found")
    # phase of each crossing relative to the reference, wrapped then
    # unwrapped so tau can exceed +/- half a reference period
    wrapped = np.mod(reference_omega * tc + math.pi, TWO_PI) - math.pi
    tau = np.unwrap(wrapped) / reference_omega
    return PhaseShiftSeries(t=tc, tau=tau, reference_omega=reference_omega)


def write_phase_csv(path, series: PhaseShiftSeries) -> None:
    np.savetxt(path, np.column_stack([series.t, series.tau]), delimiter=",",
               header="t_s,tau_s", comments="")
