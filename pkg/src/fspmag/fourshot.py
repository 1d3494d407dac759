"""Four-shot block orchestration: run the full per-shot pipeline
(pump reset, waveform, eddy channel, Bloch evolution, probe, noise, phase
extraction, harmonic fit) and perform the sign-table averaging that
separates the systematic effects from the field quantities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import json
import math

import numpy as np

from . import detection, harmonic_fit, spin_sim, waveform
from .detection import PhaseShiftSeries, ProbeGeometry
from .harmonic_fit import FitResult
from .model import (CONSTANTS, CellParams, Constants, FieldConfig,
                    ShotPhaseConfig, TWO_PI, carrier_frequency, scale_factor)
from .spin_sim import HeadingModel
from .waveform import BlockSchedule, EddyModel


@dataclass(frozen=True)
class SimParams:
    """Numerical and detector settings shared by every shot."""

    steps_per_period: int = 100
    phi_pr: float | None = None
    threshold: float = 0.0
    hysteresis: float = 0.0
    highpass_hz: float | None = None

    def __post_init__(self) -> None:
        if self.steps_per_period < 50:
            raise ValueError("steps_per_period must be >= 50")
        if self.phi_pr is not None and self.phi_pr <= 0:
            raise ValueError("phi_pr must be > 0")


@dataclass
class ShotRecord:
    """One shot's configuration, phase-shift series, and fit."""

    shot: ShotPhaseConfig
    series: PhaseShiftSeries
    fit: FitResult
    b_x: float
    b_y: float
    slope_field: float


class BlockError(RuntimeError):
    """Extraction or fitting failed for one shot of a block."""

    def __init__(self, shot_index: int, cause: Exception):
        super().__init__(f"shot {shot_index}: {cause}")
        self.shot_index = shot_index
        self.cause = cause


@dataclass
class BlockSummary:
    """Four-shot decomposition of the fitted slopes and amplitudes."""

    b_x: float
    b_y: float
    dbz_plus_bsh: float
    b_berry: float
    b_dh: float
    alpha_est: float
    shots: list[ShotRecord] = field(repr=False, default_factory=list)

    FIELDS = ("b_x", "b_y", "dbz_plus_bsh", "b_berry", "b_dh", "alpha_est")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.FIELDS}


def rf_start_relation(shot: ShotPhaseConfig, cell: CellParams) -> str:
    """Geometry of the rotating field at the measurement start relative to
    the pumped spin: parallel, perpendicular, or oblique."""
    bt = np.array([math.sin(shot.phi_x), math.sin(shot.phi_y), 0.0])
    n = np.linalg.norm(bt)
    if n == 0.0:
        return "perpendicular"
    c = abs(float(np.dot(bt / n, np.asarray(cell.pump_direction))))
    if c > 0.9:
        return "parallel"
    if c < 0.1:
        return "perpendicular"
    return "oblique"


def _reference_cfg(cfg: FieldConfig, eddy: EddyModel | None) -> FieldConfig:
    """Field config as seen by the atoms: the eddy channel attenuates the
    rotating-field amplitude."""
    b_m_eff = waveform.effective_b_m(cfg, eddy)
    return cfg.replace(b_m=b_m_eff) if b_m_eff != cfg.b_m else cfg


def _run_shot(g: int, shot: ShotPhaseConfig, cfg: FieldConfig,
              cell: CellParams, schedule: BlockSchedule, geom: ProbeGeometry,
              heading: HeadingModel | None, eddy: EddyModel | None,
              sim: SimParams, seed: int | None, dt: float, omega_ref: float,
              eddy_state: np.ndarray | None, consts: Constants
              ) -> tuple[ShotRecord, np.ndarray | None]:
    """Run one shot (global index g in the panorama); returns the record and
    the eddy filter state at the end of the shot."""
    n_shot = int(math.floor(schedule.shot_duration / dt))
    t = g * schedule.shot_duration + np.arange(n_shot + 1) * dt
    cmd = waveform.commanded_series(schedule, cfg, t)
    if eddy is not None and eddy.enabled:
        at_cell, eddy_state = waveform.apply_eddy(eddy, cmd, dt,
                                                  state=eddy_state,
                                                  return_state=True)
    else:
        at_cell = cmd
    idx0 = int(math.ceil(schedule.prepare_time / dt))
    state = spin_sim.pump_reset(cell, rf_start_relation(shot, cell))
    traj2, traj1 = spin_sim.evolve_bloch(state, at_cell[idx0:], cell,
                                         heading, dt, consts)
    sig = detection.probe_signal(traj2, traj1, geom)
    if sim.highpass_hz is not None:
        sig = detection.high_pass(sig, dt, sim.highpass_hz)
    if sim.phi_pr is not None and seed is not None:
        sig = detection.add_shot_noise(sig, sim.phi_pr, dt, seed + g)
    try:
        series = detection.extract_phase(sig, dt, omega_ref,
                                         threshold=sim.threshold,
                                         hysteresis=sim.hysteresis)
        # re-reference crossing times to the true measurement-window start
        series.t = series.t + (idx0 * dt - schedule.prepare_time)
        omega_hp = consts.omega_hp(math.hypot(cfg.b_m, cfg.b_z))
        fit = harmonic_fit.fit_phase_model(series, cfg.omega_m, omega_hp)
    except ValueError as exc:
        raise BlockError(shot.shot_index, exc) from exc
    sf = scale_factor(_reference_cfg(cfg, eddy), consts)
    b_x, b_y = harmonic_fit.transverse_fields(fit, sf, shot)
    slope_field = harmonic_fit.slope_to_field(fit.slope, omega_ref, consts)
    return ShotRecord(shot=shot, series=series, fit=fit, b_x=b_x, b_y=b_y,
                      slope_field=slope_field), eddy_state


def estimate_alpha(fits: list[FitResult], cfg: FieldConfig,
                   consts: Constants = CONSTANTS,
                   eddy: EddyModel | None = None) -> float:
    """Probe angle from the rotation-direction asymmetry of the sin(w_m t)
    amplitudes: the probe-heading fictitious field (w_m/gamma) tan(alpha)
    flips with the rotation sense while the real b_x term does not."""
    if len(fits) != 4:
        raise ValueError("need the four per-shot fits")
    sf = scale_factor(_reference_cfg(cfg, eddy), consts)
    from .model import SHOT_TABLE

    # the demodulation signs (-sign_bx * direction) are orthogonal to the
    # real-b_x pattern, so a residual transverse field cannot masquerade as
    # a probe angle
    fict = float(np.mean([-s.sign_bx * s.direction * f.a1 for s, f in
                          zip(SHOT_TABLE, fits)])) / sf
    return math.atan(fict * consts.gamma_f2_rad / cfg.omega_m)


def _summarize(records: list[ShotRecord], cfg: FieldConfig,
               consts: Constants, eddy: EddyModel | None) -> BlockSummary:
    slopes_f = np.array([r.slope_field for r in records])
    dirs = np.array([r.shot.sign_tau_b for r in records], dtype=float)
    starts = np.array([-r.shot.sign_tau_pump for r in records], dtype=float)
    summary = BlockSummary(
        b_x=float(np.mean([r.b_x for r in records])),
        b_y=float(np.mean([r.b_y for r in records])),
        dbz_plus_bsh=float(np.mean(slopes_f)),
        b_berry=float(np.mean(dirs * slopes_f)),
        b_dh=float(np.mean(starts * slopes_f)),
        alpha_est=estimate_alpha([r.fit for r in records], cfg, consts, eddy),
        shots=records)
    return summary


def run_panorama(n_blocks: int, cfg: FieldConfig, cell: CellParams,
                 schedule: BlockSchedule, geom: ProbeGeometry,
                 heading: HeadingModel | None = None,
                 eddy: EddyModel | None = None,
                 sim: SimParams = SimParams(), seed: int | None = None,
                 discard_shots: int = 0, consts: Constants = CONSTANTS,
                 eddy_state: np.ndarray | None = None
                 ) -> tuple[list[BlockSummary], dict]:
    """Run n_blocks four-shot blocks with persistent eddy-filter state and
    aggregate the block summaries (after discarding leading shots).

    Returns (block summaries, aggregate). The aggregate holds the mean and
    standard deviation of every summary field over the retained blocks.
    """
    if n_blocks < 1:
        raise ValueError("n_blocks must be >= 1")
    if discard_shots % 4 != 0:
        raise ValueError("discard_shots must be a multiple of 4")
    schedule.validate_against(cfg)
    eff_cfg = _reference_cfg(cfg, eddy)
    omega_ref = carrier_frequency(eff_cfg, consts)
    dt = TWO_PI / omega_ref / sim.steps_per_period
    blocks: list[BlockSummary] = []
    for b in range(n_blocks):
        records = []
        for pos, shot in enumerate(schedule.shots):
            rec, eddy_state = _run_shot(4 * b + pos, shot, cfg, cell,
                                        schedule, geom, heading, eddy, sim,
                                        seed, dt, omega_ref, eddy_state,
                                        consts)
            records.append(rec)
        blocks.append(_summarize(records, cfg, consts, eddy))
    keep = blocks[discard_shots // 4:]
    if not keep:
        raise ValueError("discard_shots removes every block")
    aggregate = {}
    for name in BlockSummary.FIELDS:
        vals = np.array([getattr(s, name) for s in keep])
        aggregate[name] = {"mean": float(vals.mean()),
                           "std": float(vals.std(ddof=1)) if len(vals) > 1
                           else 0.0}
    return blocks, aggregate


def run_block(cfg: FieldConfig, cell: CellParams, schedule: BlockSchedule,
              geom: ProbeGeometry, heading: HeadingModel | None = None,
              eddy: EddyModel | None = None, sim: SimParams = SimParams(),
              seed: int | None = None, consts: Constants = CONSTANTS
              ) -> BlockSummary:
    """Run a single four-shot block end to end."""
    blocks, _ = run_panorama(1, cfg, cell, schedule, geom, heading, eddy,
                             sim, seed, consts=consts)
    return blocks[0]


def write_panorama_json(path, blocks: list[BlockSummary],
                        aggregate: dict) -> None:
    payload = {"blocks": [b.to_dict() for b in blocks],
               "aggregate": aggregate}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)


def write_shot_csv(path, blocks: list[BlockSummary]) -> None:
    rows = []
    for b, blk in enumerate(blocks):
        for r in blk.shots:
            rows.append([4 * b + r.shot.shot_index - 1, r.shot.shot_index,
                         r.fit.slope, r.fit.a1, r.fit.b1, r.fit.a2, r.fit.b2,
                         r.b_x, r.b_y, r.slope_field])
    np.savetxt(path, np.asarray(rows), delimiter=",",
               header="shot_global,shot_index,slope,a1_s,b1_s,a2_s,b2_s,"
                      "bx_nT,by_nT,slope_field_nT", comments="")
