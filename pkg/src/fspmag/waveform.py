"""Commanded rotating-field waveform across four-shot blocks and the
eddy-current channel (first-order low-pass) between coil command and
field-at-the-cell."""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.signal import lfilter

from .model import FieldConfig, ShotPhaseConfig, SHOT_TABLE, TWO_PI

SWITCH_SCHEMES = ("cosine", "sine", "none")


@dataclass(frozen=True)
class BlockSchedule:
    """Timing of one four-shot block.

    Each shot is prepare (pump) time followed by a measurement window. Shot
    phases are referenced to the measurement-window start. The phase flip
    into shot k happens during the prepare time:

    - cosine switch: the flip is executed with the flipping component at its
      peak (the command jumps from -B_m to +B_m or vice versa), which
      suppresses the eddy transient;
    - sine switch: the flip happens at the flipping component's zero crossing
      (the command is continuous there, but the rotation reversal leaves a
      large low-pass state mismatch);
    - none: the first shot's phases run continuously through the whole block.
    """

    shot_duration: float = 1.0 / 120.0
    prepare_fraction: float = 0.25
    shots: tuple[ShotPhaseConfig, ...] = SHOT_TABLE
    switch_scheme: str = "cosine"

    def __post_init__(self) -> None:
        if self.switch_scheme not in SWITCH_SCHEMES:
            raise ValueError(f"unknown switch_scheme {self.switch_scheme!r}")
        if len(self.shots) != 4:
            raise ValueError("a block holds exactly four shots")
        if not (0.0 < self.prepare_fraction < 1.0):
            raise ValueError("prepare_fraction must be in (0, 1)")
        if self.shot_duration <= 0:
            raise ValueError("shot_duration must be > 0")

    @property
    def block_duration(self) -> float:
        return 4.0 * self.shot_duration

    @property
    def prepare_time(self) -> float:
        return self.prepare_fraction * self.shot_duration

    @property
    def measure_time(self) -> float:
        return self.shot_duration - self.prepare_time

    def meas_start(self, shot_pos: int) -> float:
        """Measurement-window start of shot_pos (0-based) within the block."""
        return shot_pos * self.shot_duration + self.prepare_time

    def validate_against(self, cfg: FieldConfig) -> None:
        t_mod = TWO_PI / cfg.omega_m
        n = self.measure_time / t_mod
        if abs(n - round(n)) > 1e-9 or round(n) < 1:
            raise ValueError("measurement window must be an integer number of "
                             "modulation periods")
        if self.switch_scheme != "none" and self.prepare_time < 0.5 * t_mod:
            raise ValueError("prepare time too short to host the phase flip")


def _flip_offsets(schedule: BlockSchedule, cfg: FieldConfig) -> np.ndarray:
    """Time before each shot's measurement start at which its phases take
    effect. Shots 2 and 4 flip phi_y; shots 3 and 1 (block wrap) flip phi_x.

    The flipping component sits at a peak at a quarter period (phi in
    {0,180,360} components) or half period (phi in {90,270}) before the
    window start; the zero crossing is the complementary instant.
    """
    t_mod = TWO_PI / cfg.omega_m
    # offset placing the flipped component at its peak, per target shot
    # (0-based): into shot 0 and 2 the x component (phi 90/270) flips ->
    # peak at T/2 before meas start; into shots 1 and 3 the y component
    # (phi 0/180/360) flips -> peak at T/4 before meas start.
    peak = np.array([0.5, 0.25, 0.5, 0.25]) * t_mod
    zero = np.array([0.25, 0.5, 0.25, 0.5]) * t_mod
    return peak if schedule.switch_scheme == "cosine" else zero


def commanded_series(schedule: BlockSchedule, cfg: FieldConfig,
                     t: np.ndarray) -> np.ndarray:
    """Commanded field at times t (seconds from block start), shape (n, 3).

    Times may span multiple blocks; the four-shot pattern repeats. With
    switch_scheme="none" the first shot's phases apply throughout.
    """
    t = np.asarray(t, dtype=float)
    if schedule.switch_scheme == "none":
        shot = schedule.shots[0]
        bx = cfg.b_x_res + cfg.b_m * np.sin(cfg.omega_m * t + shot.phi_x)
        by = cfg.b_y_res + cfg.b_m * np.sin(cfg.omega_m * t + shot.phi_y)
        bz = np.full_like(bx, cfg.b_z)
        return np.stack([bx, by, bz], axis=-1)

    ts = schedule.shot_duration
    offs = _flip_offsets(schedule, cfg)
    shot_idx = np.floor_divide(t, ts).astype(np.int64)
    trel = t - shot_idx * ts
    # flip into this shot happens at prepare_time - offset; before it the
    # previous shot's phases still apply
    flip_at = schedule.prepare_time - offs[shot_idx % 4]
    eff = np.where(trel >= flip_at, shot_idx, shot_idx - 1)
    eff_pos = np.clip(eff, 0, None)  # nothing precedes the very first shot
    pos = (eff_pos % 4).astype(np.int64)
    phi_x = np.array([s.phi_x for s in schedule.shots])[pos]
    phi_y = np.array([s.phi_y for s in schedule.shots])[pos]
    # phases are referenced to each shot's measurement-window start
    tm = eff_pos * ts + schedule.prepare_time
    arg = cfg.omega_m * (t - tm)
    bx = cfg.b_x_res + cfg.b_m * np.sin(arg + phi_x)
    by = cfg.b_y_res + cfg.b_m * np.sin(arg + phi_y)
    bz = np.full_like(bx, cfg.b_z)
    return np.stack([bx, by, bz], axis=-1)


def commanded_field(schedule: BlockSchedule, cfg: FieldConfig, t) -> np.ndarray:
    """Single-block commanded field; t must lie within [0, 4*shot_duration)."""
    ta = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ta < 0) or np.any(ta >= schedule.block_duration):
        raise ValueError("t outside the four-shot block")
    out = commanded_series(schedule, cfg, ta)
    return out[0] if np.isscalar(t) or np.ndim(t) == 0 else out


@dataclass(frozen=True)
class EddyModel:
    """First-order low-pass between commanded field and field at the cell."""

    tau_e: float = 10.4e-3
    enabled: bool = True

    def __post_init__(self) -> None:
        if self.enabled and self.tau_e < 0:
            raise ValueError("tau_e must be >= 0")

    @property
    def cutoff_hz(self) -> float:
        return 1.0 / (TWO_PI * self.tau_e)

    def attenuation(self, omega: float) -> float:
        """Transverse amplitude transfer |H| at angular frequency omega."""
        if not self.enabled:
            return 1.0
        return 1.0 / math.sqrt(1.0 + (omega * self.tau_e) ** 2)


def effective_b_m(cfg: FieldConfig, eddy: EddyModel | None) -> float:
    """Rotating-field amplitude seen by the atoms after the eddy channel."""
    if eddy is None or not eddy.enabled:
        return cfg.b_m
    return cfg.b_m * eddy.attenuation(cfg.omega_m)


def apply_eddy(model: EddyModel, commanded: np.ndarray, dt: float,
               state: np.ndarray | None = None,
               return_state: bool = False):
    """Pass both transverse components through the low-pass
    y[k+1] = y[k] + (1 - e^(-dt/tau_e))(u[k] - y[k]); B_z unchanged.

    `state` carries the filter output across calls (panorama continuity);
    default is a demagnetized start (zeros).
    """
    commanded = np.asarray(commanded, dtype=float)
    if commanded.ndim != 2 or commanded.shape[1] != 3:
        raise ValueError("commanded must have shape (n, 3)")
    if np.any(~np.isfinite(commanded)):
        raise ValueError("NaN in field")
    if not model.enabled or model.tau_e == 0.0:
        out = commanded.copy()
        st = out[-1, :2].copy()
        return (out, st) if return_state else out
    if dt >= model.tau_e / 10.0:
        raise ValueError("undersampled eddy filter")
    a = math.exp(-dt / model.tau_e)
    out = commanded.copy()
    st = np.zeros(2) if state is None else np.asarray(state, dtype=float)
    new_state = np.empty(2)
    for c in range(2):
        # y[k] = a*y[k-1] + (1-a)*u[k-1], seeded with y[0] = state[c]
        y, _ = lfilter([0.0, 1.0 - a], [1.0, -a], commanded[:, c],
                       zi=np.array([st[c]]))
        out[:, c] = y
        new_state[c] = a * y[-1] + (1.0 - a) * commanded[-1, c]
    return (out, new_state) if return_state else out


def write_waveform_csv(path, t: np.ndarray, series: np.ndarray) -> None:
    data = np.column_stack([t, series])
    np.savetxt(path, data, delimiter=",", header="t_s,bx_nT,by_nT,bz_nT",
               comments="")
