"""Declarative scenario configs (strict-validated, unit-suffixed fields),
built-in named reproductions, and the runners that turn a scenario into
result dictionaries and artifacts."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Literal

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field

from . import detection, fourshot, sensitivity, spin_sim, systematics_oracle
from .detection import ProbeGeometry
from .fourshot import BlockSummary, SimParams
from .model import CONSTANTS, CellParams, FieldConfig, TWO_PI
from .spin_sim import HeadingModel
from .waveform import BlockSchedule, EddyModel

DEG = math.pi / 180.0


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FieldSpec(_Strict):
    b_z_nT: float
    b_m_nT: float = 18000.0
    f_m_hz: float = 480.0
    phi_x_deg: float = 90.0
    phi_y_deg: float = 0.0
    b_x_res_nT: float = 0.0
    b_y_res_nT: float = 0.0

    def to_core(self) -> FieldConfig:
        return FieldConfig(b_z=self.b_z_nT, b_m=self.b_m_nT,
                           omega_m=TWO_PI * self.f_m_hz,
                           phi_x=self.phi_x_deg * DEG,
                           phi_y=self.phi_y_deg * DEG,
                           b_x_res=self.b_x_res_nT,
                           b_y_res=self.b_y_res_nT)


class CellSpec(_Strict):
    t2_s: float = 3e-3
    polarization: float = 1.0
    weight_f1: float = 0.0
    pump_direction: tuple[float, float, float] = (0.0, -1.0, 0.0)

    def to_core(self) -> CellParams:
        return CellParams(t2=self.t2_s, polarization=self.polarization,
                          weight_f1=self.weight_f1,
                          pump_direction=self.pump_direction)


class ProbeSpec(_Strict):
    alpha_deg: float = 0.0
    gain_k: float = 1.0

    def to_core(self) -> ProbeGeometry:
        return ProbeGeometry(alpha=self.alpha_deg * DEG, gain_k=self.gain_k)


class HeadingSpec(_Strict):
    enabled: bool = False
    b_hm_nT: float | None = None   # None: computed from P and B_tot

    def to_core(self, cell: CellSpec, field: FieldSpec) -> HeadingModel:
        if not self.enabled:
            return HeadingModel(b_hm=0.0, enabled=False)
        bhm = self.b_hm_nT
        if bhm is None:
            b_tot = math.hypot(field.b_m_nT, field.b_z_nT)
            bhm = spin_sim.b_hm(cell.polarization, b_tot)
        return HeadingModel(b_hm=bhm, enabled=True)


class EddySpec(_Strict):
    enabled: bool = False
    tau_e_s: float = 10.4e-3

    def to_core(self) -> EddyModel:
        return EddyModel(tau_e=self.tau_e_s, enabled=self.enabled)


class ScheduleSpec(_Strict):
    shot_duration_s: float = 1.0 / 120.0
    prepare_fraction: float = 0.25
    switch_scheme: Literal["cosine", "sine", "none"] = "cosine"

    def to_core(self) -> BlockSchedule:
        return BlockSchedule(shot_duration=self.shot_duration_s,
                             prepare_fraction=self.prepare_fraction,
                             switch_scheme=self.switch_scheme)


class SimSpec(_Strict):
    steps_per_period: int = 100
    phi_pr: float | None = None
    threshold: float = 0.0
    hysteresis: float = 0.0
    highpass_hz: float | None = None

    def to_core(self) -> SimParams:
        return SimParams(steps_per_period=self.steps_per_period,
                         phi_pr=self.phi_pr, threshold=self.threshold,
                         hysteresis=self.hysteresis,
                         highpass_hz=self.highpass_hz)


class SweepSpec(_Strict):
    parameter: str            # dot path, e.g. "field.b_y_res_nT"
    values: list[float]


class BeatSpec(_Strict):
    duration_s: float = 0.04


class OracleSpec(_Strict):
    beta_deg: float = 0.0
    alpha_deg: float = 0.0
    tau_e_s: float = 10.4e-3
    rf_start: Literal["parallel", "perpendicular"] = "parallel"


class BoundsSpec(_Strict):
    gain_k: float = 1.0
    t2_s: float = 3e-3
    delta_t_s: float = 1.0 / 348000.0
    m_periods: int | None = None      # None: 2*T2/delta_t
    f_m_hz: float = 480.0
    theta_deg: float = 21.1
    rho_theta: float | None = None
    phi_pr: float | None = None
    power_w: float | None = None
    wavelength_nm: float = 795.0
    sigma_psi: float | None = None    # per-period phase std; sets rho_theta

    def to_core(self) -> sensitivity.BoundInputs:
        rho, phi = self.rho_theta, self.phi_pr
        if phi is None and self.power_w is not None:
            phi = sensitivity.photon_flux(self.power_w,
                                          self.wavelength_nm * 1e-9)
        if rho is None and self.sigma_psi is not None:
            rho = self.gain_k * self.sigma_psi * math.sqrt(self.delta_t_s)
        m = self.m_periods
        if m is None:
            m = int(round(2.0 * self.t2_s / self.delta_t_s))
        return sensitivity.BoundInputs(
            gain_k=self.gain_k, t2=self.t2_s, delta_t=self.delta_t_s,
            m_periods=m, omega_m=TWO_PI * self.f_m_hz,
            theta=self.theta_deg * DEG, rho_theta=rho, phi_pr=phi)


class Scenario(_Strict):
    name: str
    kind: Literal["block", "panorama", "sweep", "beat", "oracle", "bounds",
                  "eddy-tau", "eddy-switch"]
    field: FieldSpec = Field(default_factory=lambda: FieldSpec(b_z_nT=46649.0))
    cell: CellSpec = Field(default_factory=CellSpec)
    probe: ProbeSpec = Field(default_factory=ProbeSpec)
    heading: HeadingSpec = Field(default_factory=HeadingSpec)
    eddy: EddySpec = Field(default_factory=EddySpec)
    schedule: ScheduleSpec = Field(default_factory=ScheduleSpec)
    sim: SimSpec = Field(default_factory=SimSpec)
    seed: int | None = None
    n_blocks: int = 1
    discard_shots: int = 0
    sweep: SweepSpec | None = None
    beat: BeatSpec | None = None
    oracle: OracleSpec | None = None
    bounds: BoundsSpec | None = None

    def config_hash(self) -> str:
        return hashlib.sha256(
            self.model_dump_json().encode()).hexdigest()


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    return Scenario.model_validate(data)


# ---------------------------------------------------------------------------
# Runners
# ---------------------------------------------------------------------------

def _core(sc: Scenario):
    return (sc.field.to_core(), sc.cell.to_core(), sc.schedule.to_core(),
            sc.probe.to_core(), sc.heading.to_core(sc.cell, sc.field),
            sc.eddy.to_core(), sc.sim.to_core())


def _run_panorama(sc: Scenario) -> tuple[list[BlockSummary], dict]:
    cfg, cell, schedule, geom, heading, eddy, sim = _core(sc)
    n = 1 if sc.kind == "block" else sc.n_blocks
    return fourshot.run_panorama(n, cfg, cell, schedule, geom, heading,
                                 eddy, sim, sc.seed,
                                 discard_shots=sc.discard_shots)


def _blocks_payload(blocks: list[BlockSummary], aggregate: dict) -> dict:
    return {"blocks": [b.to_dict() for b in blocks], "aggregate": aggregate,
            "shots": [[{"shot_index": r.shot.shot_index, "b_x": r.b_x,
                        "b_y": r.b_y, "slope_field": r.slope_field,
                        "a1_s": r.fit.a1, "b1_s": r.fit.b1,
                        "a2_s": r.fit.a2, "b2_s": r.fit.b2}
                       for r in b.shots] for b in blocks]}


def _set_by_path(sc: Scenario, path: str, value: float) -> Scenario:
    data = sc.model_dump()
    node = data
    parts = path.split(".")
    for p in parts[:-1]:
        if p not in node or not isinstance(node[p], dict):
            raise ValueError(f"unknown parameter path {path!r}")
        node = node[p]
    leaf = parts[-1]
    if leaf not in node or isinstance(node[leaf], (dict, list)):
        raise ValueError(f"parameter path {path!r} does not address a "
                         "scalar field")
    node[leaf] = value
    return Scenario.model_validate(data)


def run_sweep(sc: Scenario, parameter: str | None = None,
              values: list[float] | None = None) -> dict:
    """Run the scenario once per parameter value; long-format rows
    (param, value, metric, mean, std)."""
    if parameter is None or values is None:
        if sc.sweep is None:
            raise ValueError("sweep scenario needs a sweep section")
        parameter, values = sc.sweep.parameter, sc.sweep.values
    rows = []
    for v in values:
        sub = _set_by_path(sc, parameter, v)
        blocks, aggregate = _run_panorama(sub)
        for name, st in aggregate.items():
            rows.append({"param": parameter, "value": v, "metric": name,
                         "mean": st["mean"], "std": st["std"]})
        # signed first-harmonic amplitudes, for calibration-slope work
        a1 = np.mean([[r.shot.sign_bx * r.fit.a1 for r in b.shots]
                      for b in blocks])
        b1 = np.mean([[r.shot.sign_by * r.fit.b1 for r in b.shots]
                      for b in blocks])
        rows.append({"param": parameter, "value": v,
                     "metric": "a1_signed_s", "mean": float(a1), "std": 0.0})
        rows.append({"param": parameter, "value": v,
                     "metric": "b1_signed_s", "mean": float(b1), "std": 0.0})
    return {"rows": rows}


def fit_eddy_time_constant(blocks: list[BlockSummary], schedule:
                           BlockSchedule, min_field_nt: float = 10.0
                           ) -> float:
    # the default floor keeps shots whose recovered offset is well above the
    # zero-crossing extraction floor (a few tenths of a nT), which otherwise
    # biases the decay fit
    """Exponential-decay fit of the per-shot recovered transverse-field
    magnitude after a single rotation start at t=0 (switch_scheme none)."""
    ts, rs = [], []
    for b, blk in enumerate(blocks):
        for pos, r in enumerate(blk.shots):
            mag = math.hypot(r.b_x, r.b_y)
            if mag > min_field_nt:
                ts.append((4 * b + pos) * schedule.shot_duration)
                rs.append(mag)
    if len(ts) < 3:
        raise ValueError("too few shots above the field floor to fit a "
                         "decay")
    slope = np.polyfit(np.asarray(ts), np.log(np.asarray(rs)), 1)[0]
    if slope >= 0:
        raise ValueError("per-shot offsets are not decaying")
    return -1.0 / slope


def run_eddy_tau(sc: Scenario) -> dict:
    blocks, aggregate = _run_panorama(sc)
    tau = fit_eddy_time_constant(blocks, sc.schedule.to_core())
    out = _blocks_payload(blocks, aggregate)
    out["tau_e_est_s"] = tau
    return out


def run_eddy_switch(sc: Scenario) -> dict:
    """Same panorama under the cosine and sine switch schemes; reports the
    per-shot demodulated transverse offsets of the settled last block."""
    out = {}
    for scheme in ("cosine", "sine"):
        sub = sc.model_copy(update={
            "schedule": sc.schedule.model_copy(
                update={"switch_scheme": scheme})})
        blocks, _ = _run_panorama(sub)
        last = blocks[-1]
        off = [math.hypot(r.b_x, r.b_y) for r in last.shots]
        out[scheme] = {"per_shot_offset_nT": off,
                       "per_shot_by_nT": [r.b_y for r in last.shots],
                       "mean_offset_nT": float(np.mean(off))}
    out["sine_to_cosine_ratio"] = (out["sine"]["mean_offset_nT"]
                                   / out["cosine"]["mean_offset_nT"])
    return out


def beat_spectrum(cfg: FieldConfig, cell: CellParams, duration: float,
                  steps_per_period: int = 100, geom: ProbeGeometry
                  = ProbeGeometry()) -> dict:
    """Single long FID with both manifolds populated; returns the spectrum
    of the extracted phase series and its interpolated peak frequency."""
    from .model import carrier_frequency, total_field

    omega_ref = carrier_frequency(cfg)
    dt = TWO_PI / omega_ref / steps_per_period
    n = int(duration / dt)
    t = np.arange(n) * dt
    field = total_field(cfg, t)
    state = spin_sim.pump_reset(cell)
    traj2, traj1 = spin_sim.evolve_bloch(state, field, cell, None, dt)
    sig = detection.probe_signal(traj2, traj1, geom)
    series = detection.extract_phase(sig, dt, omega_ref)
    tau = series.tau - np.polyval(np.polyfit(series.t, series.tau, 1),
                                  series.t)
    d = float(np.mean(np.diff(series.t)))
    w = np.hanning(len(tau))
    spec = np.abs(np.fft.rfft(tau * w, n=8 * len(tau)))
    freqs = np.fft.rfftfreq(8 * len(tau), d)
    lo = np.searchsorted(freqs, 200.0)   # skip the DC/slope residue
    pk = lo + int(np.argmax(spec[lo:]))
    # quadratic interpolation around the peak bin
    if 0 < pk < len(spec) - 1:
        y0, y1, y2 = spec[pk - 1], spec[pk], spec[pk + 1]
        shift = 0.5 * (y0 - y2) / (y0 - 2.0 * y1 + y2)
    else:
        shift = 0.0
    peak_hz = float(freqs[pk] + shift * (freqs[1] - freqs[0]))
    return {"peak_hz": peak_hz,
            "freqs_hz": freqs[lo:lo + 4000].tolist(),
            "asd": spec[lo:lo + 4000].tolist()}


def run_beat(sc: Scenario) -> dict:
    beat = sc.beat or BeatSpec()
    out = beat_spectrum(sc.field.to_core(), sc.cell.to_core(),
                        beat.duration_s, sc.sim.steps_per_period,
                        sc.probe.to_core())
    return {"peak_hz": out["peak_hz"]}


def run_oracle(sc: Scenario) -> dict:
    spec = sc.oracle or OracleSpec()
    b = systematics_oracle.budget(sc.field.to_core(), sc.cell.polarization,
                                  spec.beta_deg * DEG, spec.alpha_deg * DEG,
                                  spec.tau_e_s, spec.rf_start)
    return json.loads(b.to_json())


def run_bounds(sc: Scenario) -> dict:
    spec = sc.bounds or BoundsSpec()
    inp = spec.to_core()
    rep = json.loads(sensitivity.report(inp))
    rep["bounds"]["delta_b_tran_2t2_nT"] = sensitivity.delta_b_tran(
        inp, regime="t=2T2")
    return rep


def run_scenario(sc: Scenario) -> dict:
    """Dispatch a scenario to its runner; returns the result dictionary."""
    if sc.kind in ("block", "panorama"):
        blocks, aggregate = _run_panorama(sc)
        return _blocks_payload(blocks, aggregate)
    if sc.kind == "sweep":
        return run_sweep(sc)
    if sc.kind == "eddy-tau":
        return run_eddy_tau(sc)
    if sc.kind == "eddy-switch":
        return run_eddy_switch(sc)
    if sc.kind == "beat":
        return run_beat(sc)
    if sc.kind == "oracle":
        return run_oracle(sc)
    if sc.kind == "bounds":
        return run_bounds(sc)
    raise ValueError(f"unknown scenario kind {sc.kind!r}")


def write_artifacts(sc: Scenario, result: dict, outdir, fmt: str = "json"
                    ) -> list[str]:
    """Write the result plus a manifest; returns the written paths."""
    import numpy, scipy

    from . import __version__

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "csv" and sc.kind == "sweep":
        path = outdir / f"{sc.name}.csv"
        with open(path, "w") as fh:
            fh.write("param,value,metric,mean,std\n")
            for row in result["rows"]:
                fh.write("{param},{value},{metric},{mean},{std}\n"
                         .format(**row))
        written.append(str(path))
    else:
        path = outdir / f"{sc.name}.json"
        with open(path, "w") as fh:
            json.dump(result, fh, indent=2)
        written.append(str(path))
    manifest = {"scenario": sc.name, "config_hash": sc.config_hash(),
                "seed": sc.seed,
                "versions": {"fspmag": __version__,
                             "numpy": numpy.__version__,
                             "scipy": scipy.__version__}}
    mpath = outdir / "manifest.json"
    with open(mpath, "w") as fh:
        json.dump(manifest, fh, indent=2)
    written.append(str(mpath))
    return written


# ---------------------------------------------------------------------------
# Built-in scenarios
# ---------------------------------------------------------------------------

def _b_z_for(b_tot: float, b_m: float) -> float:
    return math.sqrt(b_tot ** 2 - b_m ** 2)


def _builtin_table3() -> Scenario:
    return Scenario(
        name="table3-dynamic-heading", kind="block",
        field=FieldSpec(b_z_nT=_b_z_for(50000.0, 18000.0)),
        cell=CellSpec(t2_s=3e-3, pump_direction=(1.0, 0.0, 0.0)),
        heading=HeadingSpec(enabled=True),
        sim=SimSpec(highpass_hz=150e3))


def _builtin_fig6() -> Scenario:
    return Scenario(
        name="fig6-calibration", kind="sweep",
        field=FieldSpec(b_z_nT=_b_z_for(50000.0, 19000.0), b_m_nT=19000.0),
        cell=CellSpec(t2_s=3e-3),
        sweep=SweepSpec(parameter="field.b_y_res_nT",
                        values=[-52.0, -39.0, -26.0, -13.0, 0.0,
                                13.0, 26.0, 39.0, 52.0]))


def _builtin_fig8() -> Scenario:
    return Scenario(
        name="fig8-eddy-time-constant", kind="eddy-tau",
        field=FieldSpec(b_z_nT=_b_z_for(50000.0, 18000.0)),
        cell=CellSpec(t2_s=3e-3),
        schedule=ScheduleSpec(switch_scheme="none"),
        eddy=EddySpec(enabled=True), n_blocks=3)


def _builtin_fig7() -> Scenario:
    return Scenario(
        name="fig7-eddy-switch", kind="eddy-switch",
        field=FieldSpec(b_z_nT=_b_z_for(50000.0, 18000.0)),
        cell=CellSpec(t2_s=3e-3),
        eddy=EddySpec(enabled=True), n_blocks=3)


def _builtin_fig9() -> Scenario:
    return Scenario(
        name="fig9-probe-heading", kind="sweep",
        field=FieldSpec(b_z_nT=_b_z_for(50000.0, 18000.0)),
        cell=CellSpec(t2_s=3e-3),
        sweep=SweepSpec(parameter="probe.alpha_deg",
                        values=[-10.0, -5.0, -2.0, 2.0, 5.0, 10.0]))


def _builtin_fig3() -> Scenario:
    return Scenario(
        name="fig3-beat", kind="beat",
        field=FieldSpec(b_z_nT=50000.0, b_m_nT=0.0),
        cell=CellSpec(t2_s=20e-3, weight_f1=0.3),
        beat=BeatSpec(duration_s=0.04))


def _builtin_table4() -> Scenario:
    return Scenario(
        name="table4-budget", kind="oracle",
        field=FieldSpec(b_z_nT=_b_z_for(50000.0, 18000.0)),
        oracle=OracleSpec(beta_deg=24.0, alpha_deg=1.0))


def _builtin_bounds() -> Scenario:
    return Scenario(
        name="sensitivity-bounds", kind="bounds",
        bounds=BoundsSpec(t2_s=1.7e-3, delta_t_s=1.0 / 348000.0,
                          theta_deg=math.degrees(math.asin(18.0 / 50.0)),
                          sigma_psi=TWO_PI * 3e-4))


def _builtin_projection() -> Scenario:
    return Scenario(
        name="sensitivity-projection", kind="bounds",
        bounds=BoundsSpec(gain_k=1.553, power_w=2e-3, t2_s=3e-3,
                          delta_t_s=1.0 / 350000.0, theta_deg=30.0))


BUILTIN_SCENARIOS = {
    s.name: s for s in (
        _builtin_table3(), _builtin_fig6(), _builtin_fig8(),
        _builtin_fig7(), _builtin_fig9(), _builtin_fig3(),
        _builtin_table4(), _builtin_bounds(), _builtin_projection())
}


def get_scenario(name_or_path: str) -> Scenario:
    """Look up a built-in scenario by name or load one from a YAML file."""
    if name_or_path in BUILTIN_SCENARIOS:
        return BUILTIN_SCENARIOS[name_or_path]
    return load_scenario(name_or_path)
