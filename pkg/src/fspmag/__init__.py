"""Pulsed free-spin-precession Rb-87 vector magnetometer simulator.

Core pipeline: waveform generation -> spin dynamics -> optical probe ->
zero-crossing phase extraction -> harmonic regression -> four-shot
systematic cancellation, plus analytic systematics oracles and CRLB/MVU
sensitivity bounds.
"""

__version__ = "1.0.0"

from .model import (CONSTANTS, CellParams, Constants, FieldConfig,
                    SHOT_TABLE, ShotPhaseConfig, carrier_frequency,
                    reference_frequency, scale_factor, total_field)
from .waveform import BlockSchedule, EddyModel, apply_eddy, commanded_field
from .spin_sim import (HeadingModel, SpinState, b_hm, evolve_bloch,
                       evolve_closed_form, pump_reset)
from .detection import (PhaseShiftSeries, ProbeGeometry, add_shot_noise,
                        extract_phase, probe_signal)
from .harmonic_fit import (FitResult, fit_phase_model, slope_to_field,
                           transverse_fields)
from .fourshot import (BlockError, BlockSummary, ShotRecord, SimParams,
                       estimate_alpha, run_block, run_panorama)
from .systematics_oracle import (SystematicsBudget, berry_equivalent_field,
                                 budget, dynamic_heading,
                                 probe_heading_field,
                                 second_harmonic_amplitude, static_heading)
from .sensitivity import (BoundInputs, amp_psd_bound, delta_b_tot,
                          delta_b_tran, delta_b_ts, freq_psd_bound, kappa1,
                          kappa2, optical_gain, photon_flux, shot_noise_psd)
from .scenarios import BUILTIN_SCENARIOS, Scenario, get_scenario, run_scenario
