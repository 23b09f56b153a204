"""Bit-array write/read simulator on top of the cell model.

State is a flat vector of stored bits plus a cell population.  Write pulses
are polarity-selective: a pulse only acts on cells not already in its target
state, and each candidate cell flips with its own Psw.  Reads return a
disturbed copy of the stored bits under a Bernoulli flip model whose rate
depends on whether a write-back pass has restored the array.

Randomness contract: every pulse and every read consumes one counter-based
stream block keyed by (seed, stream tag, event index).  A cell's draw is a
pure function of that tuple and its index, so replaying a run, or splitting
it across workers, reproduces identical bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .device import (
    CellParams,
    PULSE_WIDTH_REF_S,
    TEMP_REF_C,
    psw_single,
)
from .rng import uniform_block as _uniform_block

POL_RESET = 0
POL_SET = 1

_STREAM_PULSE = 0x5057
_STREAM_READ = 0x52D5
_STREAM_SHMOO = 0x534D

# Reads hotter/cooler than nominal and away from nominal supply disturb more.
VDD_REF_V = 1.8
VDD_MIN_V = 1.4
VDD_MAX_V = 2.2


@dataclass(frozen=True)
class ReadModel:
    """Bernoulli read-disturb rates and their environment penalties."""

    flip_prob_raw: float = 1.55946e-2   # before any write-back pass
    flip_prob_swb: float = 3.29e-5      # after a self-write-back pass
    temp_slope: float = 0.035           # per degC of |T - 25|
    vdd_slope: float = 2.0              # per volt of |VDD - 1.8|

    def flip_prob(self, swb_done: bool, temperature_c: float = TEMP_REF_C,
                  vdd: float = VDD_REF_V) -> float:
        if not VDD_MIN_V <= vdd <= VDD_MAX_V:
            raise ValueError(f"vdd {vdd} outside supported range "
                             f"[{VDD_MIN_V}, {VDD_MAX_V}] V")
        base = self.flip_prob_swb if swb_done else self.flip_prob_raw
        penalty = (1.0 + self.temp_slope * abs(temperature_c - TEMP_REF_C)) * (
            1.0 + self.vdd_slope * abs(vdd - VDD_REF_V))
        return min(base * penalty, 0.5)


@dataclass
class ArrayState:
    """Mutable simulator state: stored bits, cells, and stream counters."""

    bits: np.ndarray
    cells: CellParams
    seed: int
    pulse_counter: int = 0
    read_counter: int = 0
    history: int = 0          # completed reconfiguration cycles
    swb_done: bool = False

    @property
    def n_cells(self) -> int:
        return self.bits.size


def init_array(cells: CellParams, n_cells: int, polarity: int, seed: int) -> ArrayState:
    """Fresh array with every bit set to `polarity`."""
    _check_polarity(polarity)
    bits = np.full(n_cells, polarity, dtype=np.uint8)
    return ArrayState(bits=bits, cells=cells, seed=seed)


def _check_polarity(polarity: int) -> None:
    if polarity not in (POL_RESET, POL_SET):
        raise ValueError(f"polarity must be {POL_RESET} or {POL_SET}, got {polarity}")


def apply_pulse(state: ArrayState, polarity: int, amplitude: float,
                pulse_width_s: float = PULSE_WIDTH_REF_S,
                temperature_c: float = TEMP_REF_C) -> None:
    """One write pulse over the whole array; advances the pulse stream once."""
    _check_polarity(polarity)
    if amplitude <= 0.0:
        raise ValueError(f"pulse amplitude must be positive, got {amplitude}")
    p = psw_single(state.cells, amplitude, pulse_width_s, temperature_c)
    u = _uniform_block(state.seed, _STREAM_PULSE, state.pulse_counter, state.n_cells)
    state.pulse_counter += 1
    flips = (state.bits != polarity) & (u < p)
    state.bits[flips] = polarity
    state.swb_done = False


def set_pattern(state: ArrayState, polarity: int) -> None:
    """Deterministic (saturating) initialization write."""
    _check_polarity(polarity)
    state.bits.fill(polarity)
    state.swb_done = False


def reconfigure_single(state: ArrayState, v_write: float, polarity: int,
                       pulse_width_s: float = PULSE_WIDTH_REF_S,
                       temperature_c: float = TEMP_REF_C) -> None:
    """Initialize opposite to `polarity`, then one stochastic pulse."""
    set_pattern(state, 1 - polarity)
    apply_pulse(state, polarity, v_write, pulse_width_s, temperature_c)
    state.history += 1


def reconfigure_dual(state: ArrayState, v1: float, beta: float, first_polarity: int,
                     pulse_width_s: float = PULSE_WIDTH_REF_S,
                     temperature_c: float = TEMP_REF_C) -> None:
    """Dual-pulse reconfiguration: saturate, pulse at v1, pulse back at v1 - beta.

    The second pulse has opposite polarity and reduced amplitude, partially
    undoing the first, which centres the final ones-density.
    """
    v2 = v1 - beta
    if v2 <= 0.0:
        raise ValueError(f"second amplitude v1 - beta = {v2} must be positive")
    set_pattern(state, 1 - first_polarity)
    apply_pulse(state, first_polarity, v1, pulse_width_s, temperature_c)
    apply_pulse(state, 1 - first_polarity, v2, pulse_width_s, temperature_c)
    state.history += 1


def wsr(reference_bits: np.ndarray, bits_after: np.ndarray, polarity: int) -> float:
    """Fraction of switchable cells that ended in `polarity`.

    Switchable means the reference held the opposite value; cells already at
    the pulse polarity cannot count as switched.
    """
    _check_polarity(polarity)
    if reference_bits.shape != bits_after.shape:
        raise ValueError(
            f"shape mismatch: {reference_bits.shape} vs {bits_after.shape}")
    switchable = reference_bits != polarity
    n = int(switchable.sum())
    if n == 0:
        return 0.0
    switched = switchable & (bits_after == polarity)
    return float(switched.sum()) / n


def read(state: ArrayState, model: ReadModel, temperature_c: float = TEMP_REF_C,
         vdd: float = VDD_REF_V, swb_done: bool | None = None) -> np.ndarray:
    """Disturbed copy of the stored bits; advances the read stream once."""
    if swb_done is None:
        swb_done = state.swb_done
    p = model.flip_prob(swb_done, temperature_c, vdd)
    u = _uniform_block(state.seed, _STREAM_READ, state.read_counter, state.n_cells)
    state.read_counter += 1
    out = state.bits.copy()
    flip = u < p
    out[flip] ^= 1
    return out


def swb(state: ArrayState, readout: np.ndarray) -> None:
    """Self-write-back: deterministically rewrite the array from a readout."""
    if readout.shape != state.bits.shape:
        raise ValueError(f"readout shape {readout.shape} != array {state.bits.shape}")
    state.bits = readout.astype(np.uint8, copy=True)
    state.swb_done = True


def tmv_error_rate(p: float, n_reads: int) -> float:
    """Exact per-bit error probability after majority voting over n reads.

    The majority of n independent reads, each flipped with probability p,
    is wrong iff at least (n+1)/2 flips occur: the upper binomial tail.
    Summed in closed form with exact binomial coefficients.
    """
    if n_reads < 1 or n_reads % 2 == 0:
        raise ValueError(f"n_reads must be odd and positive, got {n_reads}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"flip probability must be in [0, 1], got {p}")
    k_min = (n_reads + 1) // 2
    total = 0.0
    for j in range(k_min, n_reads + 1):
        total += math.comb(n_reads, j) * p ** j * (1.0 - p) ** (n_reads - j)
    return total


def tmv(state: ArrayState, model: ReadModel, n_reads: int = 15,
        temperature_c: float = TEMP_REF_C, vdd: float = VDD_REF_V,
        swb_done: bool | None = None) -> np.ndarray:
    """Majority vote over n_reads independent reads (n_reads must be odd)."""
    if n_reads < 1 or n_reads % 2 == 0:
        raise ValueError(f"n_reads must be odd and positive, got {n_reads}")
    counts = np.zeros(state.n_cells, dtype=np.int32)
    for _ in range(n_reads):
        counts += read(state, model, temperature_c, vdd, swb_done)
    return (2 * counts > n_reads).astype(np.uint8)


def write_shmoo(cells: CellParams, n_cells: int, v_grid: np.ndarray,
                width_grid: np.ndarray, temperature_c: float = TEMP_REF_C,
                seed: int = 0) -> np.ndarray:
    """WSR over an amplitude x pulse-width grid, shape (len(v_grid), len(width_grid)).

    A single uniform draw is shared across the grid (common random numbers),
    so the map is exactly monotone along both axes, matching the monotone
    Psw surface it samples.
    """
    v_grid = np.asarray(v_grid, dtype=float)
    width_grid = np.asarray(width_grid, dtype=float)
    u = _uniform_block(seed, _STREAM_SHMOO, 0, n_cells)
    out = np.empty((v_grid.size, width_grid.size), dtype=float)
    for i, v in enumerate(v_grid):
        for j, tw in enumerate(width_grid):
            p = psw_single(cells, v, tw, temperature_c)
            out[i, j] = float(np.mean(u < p))
    return out
