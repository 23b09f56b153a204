"""Single-cell SOT-MTJ write model with thermal drift and geometry spread.

Model summary
-------------
Each cell switches stochastically under a write pulse.  The switching
probability follows a logistic curve in the pulse amplitude,

    Psw(V) = 1 / (1 + exp(-steepness * (V - Vc(T, tw)))),

centred on a critical voltage that drifts with temperature and pulse width:

    Ic(T)     = ic_ref + ic_tc * (T - 25)            # decreasing in T
    Rpath(T)  = track_resistance + ron_ref + ron_tc * (T - 25)
    Vc(T)     = Ic(T) * Rpath(T)
    Vc(T, tw) = Vc(T) * (1 + width_coeff * ln(tw_ref / tw))

The transistor on-resistance rises with temperature while the critical
current falls, so the product Vc stays nearly flat across the supported
range (-40..125 degC): the write voltage window self-compensates.

Device-to-device variation is a track-width effect.  A cell with width
factor w carries proportionally more critical current (fixed current
density) and proportionally less track resistance, so the product
Ic * Rtrack is width-independent and only the on-resistance term
ic_ref * ron * w spreads Vc between cells.

All functions broadcast over numpy arrays, so a whole population can be
evaluated by passing array-valued cell fields.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .rng import normal_block

TEMP_MIN_C = -40.0
TEMP_MAX_C = 125.0
TEMP_REF_C = 25.0

PULSE_WIDTH_REF_S = 20e-9
PULSE_WIDTH_MIN_S = 1e-9
PULSE_WIDTH_MAX_S = 1e-6

# Width factors below this are unphysical; the normal(1, cv) draw is clipped here.
WIDTH_FACTOR_MIN = 0.1


@dataclass(frozen=True)
class CellParams:
    """Electrical parameters of one cell (or, with array fields, a population)."""

    ic_ref: float = 1.8e-3            # critical current at 25 degC [A]
    ic_tc: float = -1.75e-6           # critical-current tempco [A/degC], < 0
    track_resistance: float = 700.0   # SOT track resistance [ohm]
    ron_ref: float = 300.0            # access-transistor on-resistance at 25 degC [ohm]
    ron_tc: float = 0.85              # on-resistance tempco [ohm/degC], >= 0
    steepness: float = 16.7           # logistic slope of Psw vs. amplitude [1/V]
    width_coeff: float = 0.05         # Vc sensitivity to log pulse width
    width_factor: float = 1.0         # geometric track-width multiplier


@dataclass(frozen=True)
class VariationConfig:
    """Population sampling knobs: n_cells cells, width cv, deterministic seed."""

    n_cells: int
    cv: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_cells <= 0:
            raise ValueError(f"n_cells must be positive, got {self.n_cells}")
        if not 0.0 <= self.cv < 1.0:
            raise ValueError(f"cv must be in [0, 1), got {self.cv}")


def _check_temperature(temperature_c) -> np.ndarray:
    t = np.asarray(temperature_c, dtype=float)
    if np.any(t < TEMP_MIN_C) or np.any(t > TEMP_MAX_C):
        raise ValueError(
            f"temperature {temperature_c} outside supported range "
            f"[{TEMP_MIN_C}, {TEMP_MAX_C}] degC"
        )
    return t


def _check_pulse_width(pulse_width_s) -> np.ndarray:
    tw = np.asarray(pulse_width_s, dtype=float)
    if np.any(tw < PULSE_WIDTH_MIN_S) or np.any(tw > PULSE_WIDTH_MAX_S):
        raise ValueError(
            f"pulse width {pulse_width_s} outside supported range "
            f"[{PULSE_WIDTH_MIN_S}, {PULSE_WIDTH_MAX_S}] s"
        )
    return tw


def critical_current(params: CellParams, temperature_c=TEMP_REF_C):
    """Ic(T) in amperes; the width factor scales the whole current (fixed density)."""
    t = _check_temperature(temperature_c)
    return np.asarray(params.width_factor, dtype=float) * (
        params.ic_ref + params.ic_tc * (t - TEMP_REF_C)
    )


def write_path_resistance(params: CellParams, temperature_c=TEMP_REF_C):
    """Total write-path resistance: track (width-scaled) plus transistor Ron(T)."""
    t = _check_temperature(temperature_c)
    track = params.track_resistance / np.asarray(params.width_factor, dtype=float)
    return track + params.ron_ref + params.ron_tc * (t - TEMP_REF_C)


def critical_voltage(params: CellParams, temperature_c=TEMP_REF_C,
                     pulse_width_s=PULSE_WIDTH_REF_S):
    """Switching threshold Vc(T, tw) = Ic(T) * Rpath(T) * width-law multiplier."""
    tw = _check_pulse_width(pulse_width_s)
    vc = critical_current(params, temperature_c) * write_path_resistance(params, temperature_c)
    mult = 1.0 + params.width_coeff * np.log(PULSE_WIDTH_REF_S / tw)
    return vc * mult


def psw_single(params: CellParams, v_write, pulse_width_s=PULSE_WIDTH_REF_S,
               temperature_c=TEMP_REF_C):
    """Probability that one pulse of amplitude |v_write| switches the cell.

    Polarity is handled by the array layer; only the magnitude matters here.
    """
    v = np.abs(np.asarray(v_write, dtype=float))
    vc = critical_voltage(params, temperature_c, pulse_width_s)
    # exp argument clipped to keep float64 finite for far-off-threshold pulses
    arg = np.clip(-params.steepness * (v - vc), -700.0, 700.0)
    return 1.0 / (1.0 + np.exp(arg))


def sample_population(config: VariationConfig, baseline: CellParams = CellParams()) -> CellParams:
    """Draw a cell population: CellParams with array-valued width-dependent fields.

    width_factor ~ normal(1, cv) clipped at WIDTH_FACTOR_MIN.  Critical current
    scales with width (constant density); track resistance scales inversely.
    Deterministic for a fixed seed, independent of chunking or call order.
    """
    w = 1.0 + config.cv * normal_block(config.seed, _STREAM_POPULATION, 0,
                                       config.n_cells)
    w = np.clip(w, WIDTH_FACTOR_MIN, None)
    return dataclasses.replace(baseline, width_factor=w)


# Stream tag separating population draws from the array layer's pulse/read streams.
_STREAM_POPULATION = 0x506F50
