"""Dual-pulse amplitude planning: tangent models, beta solving, write windows.

The write-success curve WSR(V) is locally linearized around its half-switch
point as a tangent WSR = k*V + b with b = 0.5 - k*v_center.  Composing a
first pulse at V1 with an opposing second pulse at V2 = V1 - beta under the
independent-event model,

    F(V1) = WSR(V1) * (1 - WSR(V1 - beta)),

gives a downward parabola in V1 whose peak depends only on k*beta:

    F_extreme = (1 + k*beta)^2 / 4.

Choosing beta so the peak sits at the top of the target weight window both
centres the final ones-density and maximizes the usable V1 range.  The
algebra admits a second, negative-beta branch; its operating point puts the
second pulse far outside the tangent's validity, so it is rejected.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import array as arr
from .device import CellParams, PULSE_WIDTH_REF_S, TEMP_REF_C, VariationConfig, sample_population

# Tangent slope of the reference array's weight curve at the half-switch
# point, used when planning without re-characterizing a device.
DEFAULT_TANGENT_K = 3.733

# Half-width of the tangent's validity interval, in units of 1/k.
DEFAULT_VALIDITY_FACTOR = 0.2


class FitError(ValueError):
    """Raised when a curve cannot support the requested fit."""


class InfeasibleError(ValueError):
    """Raised when no operating point satisfies the target window."""


@dataclass(frozen=True)
class TargetWindow:
    """Half-open acceptance band (lower, upper] for a success fraction."""

    lower: float = 0.4
    upper: float = 0.6

    def __post_init__(self) -> None:
        if not 0.0 <= self.lower < self.upper <= 1.0:
            raise ValueError(f"need 0 <= lower < upper <= 1, got "
                             f"({self.lower}, {self.upper}]")

    def contains(self, f):
        f = np.asarray(f)
        return (f > self.lower) & (f <= self.upper)

    @property
    def mid(self) -> float:
        return 0.5 * (self.lower + self.upper)


DEFAULT_TARGET_WINDOW = TargetWindow(0.4, 0.6)


@dataclass(frozen=True)
class VoltageWindow:
    """Closed voltage interval [lo, hi]; may be degenerate (lo == hi)."""

    lo: float
    hi: float
    temperature_c: float | None = None

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError(f"lo {self.lo} > hi {self.hi}")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, v: float) -> bool:
        return self.lo <= v <= self.hi


def common_window(w1: VoltageWindow, w2: VoltageWindow) -> VoltageWindow | None:
    """Intersection of two voltage windows; None when they do not meet.

    Touching windows yield a degenerate zero-width window, not None.
    """
    lo = max(w1.lo, w2.lo)
    hi = min(w1.hi, w2.hi)
    if lo > hi:
        return None
    return VoltageWindow(lo=lo, hi=hi)


@dataclass(frozen=True)
class TangentModel:
    """Local linear model WSR = k*V + b anchored at the half-switch point."""

    k: float
    b: float
    v_center: float
    validity: tuple[float, float]

    def __post_init__(self) -> None:
        if self.k <= 0.0:
            raise ValueError(f"tangent slope must be positive, got {self.k}")
        anchored = 0.5 - self.k * self.v_center
        if abs(self.b - anchored) > 1e-9:
            raise ValueError(
                f"b = {self.b} breaks the anchor invariant b = 0.5 - k*v_center "
                f"= {anchored}")

    @classmethod
    def from_center(cls, k: float, v_center: float,
                    validity_halfwidth: float | None = None) -> "TangentModel":
        if k <= 0.0:
            raise ValueError(f"tangent slope must be positive, got {k}")
        if validity_halfwidth is None:
            validity_halfwidth = DEFAULT_VALIDITY_FACTOR / k
        return cls(k=k, b=0.5 - k * v_center, v_center=v_center,
                   validity=(v_center - validity_halfwidth,
                             v_center + validity_halfwidth))

    def wsr(self, v):
        return self.k * np.asarray(v, dtype=float) + self.b

    @property
    def validity_halfwidth(self) -> float:
        return 0.5 * (self.validity[1] - self.validity[0])


@dataclass(frozen=True)
class ExtendedTangentModel:
    """Independent tangents for the two pulses: WSR1 = k1*V + b1, WSR2 = k2*V + b2."""

    k1: float
    b1: float
    k2: float
    b2: float


def compose_independent(wsr1, wsr2):
    """Composite success fraction when the two switching events are independent."""
    return np.asarray(wsr1) * (1.0 - np.asarray(wsr2))


def compose_dependent(wsr1, wsr2):
    """Composite under the fully dependent reading F = WSR1 - WSR2.

    The premise WSR1 >= WSR2 can fail off-model; the result is clamped at
    zero and flagged with a warning rather than returned negative.
    """
    w1 = np.asarray(wsr1, dtype=float)
    w2 = np.asarray(wsr2, dtype=float)
    f = w1 - w2
    if np.any(f < 0.0):
        warnings.warn("dependent composition premise WSR1 >= WSR2 violated; "
                      "clamping to 0", RuntimeWarning, stacklevel=2)
        f = np.maximum(f, 0.0)
    return f


def f_curve(model: TangentModel, v1, beta: float):
    """Composite F(V1) under the tangent model (a downward parabola)."""
    v1 = np.asarray(v1, dtype=float)
    return compose_independent(model.wsr(v1), model.wsr(v1 - beta))


def f_extreme(k: float, beta: float) -> float:
    """Peak of the composite parabola; depends only on the product k*beta."""
    return 0.25 * (1.0 + k * beta) ** 2


def vertex_v1(model: TangentModel, beta: float) -> float:
    """V1 at the parabola peak: half a beta above the half-switch point."""
    return model.v_center + 0.5 * beta


@dataclass(frozen=True)
class BetaInterval:
    """Interval of beta values, with endpoint openness flags."""

    lo: float
    hi: float
    lo_open: bool
    hi_open: bool
    branch: str            # "positive" or "negative" tangent-offset branch

    def contains(self, beta: float) -> bool:
        above = beta > self.lo if self.lo_open else beta >= self.lo
        below = beta < self.hi if self.hi_open else beta <= self.hi
        return above and below

    @property
    def min_abs(self) -> float:
        if self.lo <= 0.0 <= self.hi:
            return 0.0
        return min(abs(self.lo), abs(self.hi))


@dataclass(frozen=True)
class BetaSolution:
    k: float
    window: TargetWindow
    intervals: tuple[BetaInterval, ...]       # every algebraic branch
    valid: tuple[BetaInterval, ...]           # branches surviving validity rejection
    optimal_beta: float | None


def solve_beta(k: float, window: TargetWindow = DEFAULT_TARGET_WINDOW,
               validity_halfwidth: float | None = None,
               target: str = "upper") -> BetaSolution:
    """Solve F_extreme(beta) in (lower, upper] for beta.

    The condition (1 + k*beta)^2 / 4 in (lo, hi] splits into a positive and
    a negative branch of 1 + k*beta.  A branch is rejected when the second
    pulse's peak operating point V2* = v_center - beta/2 sits outside the
    tangent validity interval for *every* beta in the branch; the negative
    branch always fails this, sitting several validity widths away.

    target selects where the peak is aimed: "upper" pins F_extreme to the
    window's upper edge (widest usable V1 range); "center" aims mid-window.
    """
    if k <= 0.0:
        raise ValueError(f"tangent slope must be positive, got {k}")
    if validity_halfwidth is None:
        validity_halfwidth = DEFAULT_VALIDITY_FACTOR / k
    if target not in ("upper", "center"):
        raise ValueError(f"target must be 'upper' or 'center', got {target!r}")

    root_lo = 2.0 * np.sqrt(window.lower)
    root_hi = 2.0 * np.sqrt(window.upper)
    positive = BetaInterval(
        lo=(root_lo - 1.0) / k, hi=(root_hi - 1.0) / k,
        lo_open=True, hi_open=False, branch="positive")
    negative = BetaInterval(
        lo=(-root_hi - 1.0) / k, hi=(-root_lo - 1.0) / k,
        lo_open=False, hi_open=True, branch="negative")
    intervals = (negative, positive)

    # Keep a branch if any of its beta values brings V2* within validity.
    valid = tuple(iv for iv in intervals
                  if 0.5 * iv.min_abs <= validity_halfwidth)

    optimal = None
    if valid:
        f_target = window.upper if target == "upper" else window.mid
        beta_star = (2.0 * np.sqrt(f_target) - 1.0) / k
        if any(iv.contains(beta_star) for iv in valid):
            optimal = float(beta_star)
    return BetaSolution(k=k, window=window, intervals=intervals,
                        valid=valid, optimal_beta=optimal)


def window_width(model: TangentModel, beta: float,
                 window: TargetWindow = DEFAULT_TARGET_WINDOW,
                 v_max: float | None = None) -> float:
    """Measure (in volts) of {V1 <= v_max : F(V1, beta) in window}.

    Computed in tangent units w = WSR1(V1): the parabola exceeds `lower`
    between two roots, and once the peak clears `upper` an inner exclusion
    band opens around the vertex.  Width is the outer span minus the
    exclusion, optionally capped on the high side at v_max.
    """
    m = (1.0 + model.k * beta) ** 2
    if m <= 4.0 * window.lower:
        return 0.0
    c = 1.0 + model.k * beta
    span_lo = np.sqrt(m - 4.0 * window.lower)
    pieces = []
    w_left = 0.5 * (c - span_lo)
    w_right = 0.5 * (c + span_lo)
    if m > 4.0 * window.upper:
        span_hi = np.sqrt(m - 4.0 * window.upper)
        u_left = 0.5 * (c - span_hi)
        u_right = 0.5 * (c + span_hi)
        pieces.append((w_left, u_left))
        pieces.append((u_right, w_right))
    else:
        pieces.append((w_left, w_right))
    if v_max is not None:
        w_cap = model.wsr(v_max)
        pieces = [(lo, min(hi, w_cap)) for lo, hi in pieces if lo < w_cap]
    total_w = sum(hi - lo for lo, hi in pieces if hi > lo)
    return float(total_w / model.k)


@dataclass(frozen=True)
class ExtendedBetaSolution:
    intervals: tuple[BetaInterval, ...]
    valid: tuple[BetaInterval, ...]
    optimal_beta: float | None
    degenerate: bool = False
    # For a flat second tangent (k2 ~ 0) feasibility is governed by WSR1
    # alone; this carries the V1 interval that lands F in the window.
    v1_window_degenerate: VoltageWindow | None = None


def solve_beta_extended(model: ExtendedTangentModel,
                        window: TargetWindow = DEFAULT_TARGET_WINDOW,
                        validity_halfwidth: float | None = None,
                        eps: float = 1e-9) -> ExtendedBetaSolution:
    """Beta intervals for asymmetric tangents WSR1 != WSR2.

    The composite peak generalizes to F_extreme = G^2 / (4*k1*k2) with
    G(beta) = k1*(1 - b2) + k2*b1 + k1*k2*beta, recovering the symmetric
    formula when k1 = k2 and b1 = b2.  When k1*k2 falls below eps the
    parabola degenerates to a line and beta no longer moves the peak; the
    solution is then expressed as a V1 window instead.
    """
    k1, b1, k2, b2 = model.k1, model.b1, model.k2, model.b2
    if k1 <= 0.0:
        raise ValueError(f"first-pulse slope must be positive, got {k1}")
    if k2 < 0.0:
        raise ValueError(f"second-pulse slope must be >= 0, got {k2}")

    if k1 * k2 < eps:
        gain = 1.0 - b2
        if gain <= 0.0:
            return ExtendedBetaSolution(intervals=(), valid=(), optimal_beta=None,
                                        degenerate=True, v1_window_degenerate=None)
        lo_v = (window.lower / gain - b1) / k1
        hi_v = (window.upper / gain - b1) / k1
        return ExtendedBetaSolution(
            intervals=(), valid=(), optimal_beta=None, degenerate=True,
            v1_window_degenerate=VoltageWindow(lo=min(lo_v, hi_v),
                                               hi=max(lo_v, hi_v)))

    if validity_halfwidth is None:
        validity_halfwidth = DEFAULT_VALIDITY_FACTOR / k1
    g0 = k1 * (1.0 - b2) + k2 * b1
    g1 = k1 * k2
    root_lo = 2.0 * np.sqrt(g1 * window.lower)
    root_hi = 2.0 * np.sqrt(g1 * window.upper)
    positive = BetaInterval(
        lo=(root_lo - g0) / g1, hi=(root_hi - g0) / g1,
        lo_open=True, hi_open=False, branch="positive")
    negative = BetaInterval(
        lo=(-root_hi - g0) / g1, hi=(-root_lo - g0) / g1,
        lo_open=False, hi_open=True, branch="negative")
    intervals = (negative, positive)
    valid = tuple(iv for iv in intervals
                  if 0.5 * iv.min_abs <= validity_halfwidth)
    optimal = None
    if valid:
        beta_star = (root_hi - g0) / g1
        if any(iv.contains(beta_star) for iv in valid):
            optimal = float(beta_star)
    return ExtendedBetaSolution(intervals=intervals, valid=valid,
                                optimal_beta=optimal)


def extended_f_extreme(model: ExtendedTangentModel, beta: float) -> float:
    """Peak composite F for the asymmetric tangent pair."""
    g = model.k1 * (1.0 - model.b2) + model.k2 * model.b1 + model.k1 * model.k2 * beta
    return float(g * g / (4.0 * model.k1 * model.k2))


def extended_vertex_v1(model: ExtendedTangentModel, beta: float) -> float:
    """V1 at the asymmetric composite's peak (from the quadratic's vertex)."""
    a = model.k1 * (1.0 - model.b2 + model.k2 * beta) - model.k2 * model.b1
    return float(a / (2.0 * model.k1 * model.k2))


@dataclass(frozen=True)
class WsrCurve:
    """Sampled write-success curve at one temperature and pulse width."""

    voltages: np.ndarray
    values: np.ndarray
    temperature_c: float = TEMP_REF_C
    pulse_width_s: float = PULSE_WIDTH_REF_S

    def __post_init__(self) -> None:
        v = np.asarray(self.voltages, dtype=float)
        y = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2 or v.shape != y.shape:
            raise ValueError(f"need matching 1-D grids of >= 2 points, got "
                             f"{v.shape} and {y.shape}")
        if np.any(np.diff(v) <= 0.0):
            raise ValueError("voltage grid must be strictly increasing")
        object.__setattr__(self, "voltages", v)
        object.__setattr__(self, "values", y)

    def evaluate(self, v):
        return np.interp(np.asarray(v, dtype=float), self.voltages, self.values)

    def crossing(self, level: float) -> float:
        """First upward crossing of `level`, by linear inverse interpolation."""
        y = self.values
        above = y >= level
        if not above.any() or above.all():
            raise FitError(f"curve does not cross {level} inside the grid")
        i = int(np.argmax(above))
        if i == 0:
            raise FitError(f"curve starts above {level}; no upward crossing")
        v0, v1 = self.voltages[i - 1], self.voltages[i]
        y0, y1 = y[i - 1], y[i]
        if y1 == y0:
            return float(v0)
        return float(v0 + (level - y0) * (v1 - v0) / (y1 - y0))


def measure_wsr_curve(cells: CellParams, n_cells: int, v_grid: np.ndarray,
                      polarity: int = arr.POL_SET,
                      pulse_width_s: float = PULSE_WIDTH_REF_S,
                      temperature_c: float = TEMP_REF_C,
                      seed: int = 0) -> WsrCurve:
    """Monte-Carlo WSR(V): one fresh single-pulse reconfiguration per grid point."""
    v_grid = np.asarray(v_grid, dtype=float)
    state = arr.init_array(cells, n_cells, 1 - polarity, seed)
    reference = np.full(n_cells, 1 - polarity, dtype=np.uint8)
    values = np.empty(v_grid.size, dtype=float)
    for i, v in enumerate(v_grid):
        arr.reconfigure_single(state, float(v), polarity, pulse_width_s,
                               temperature_c)
        values[i] = arr.wsr(reference, state.bits, polarity)
    return WsrCurve(voltages=v_grid, values=values,
                    temperature_c=temperature_c, pulse_width_s=pulse_width_s)


def fit_tangent(curve: WsrCurve, band: tuple[float, float] = (0.3, 0.7)) -> TangentModel:
    """Tangent at the half-switch point: slope by least squares inside `band`.

    The fitted line is re-anchored to pass through (v_center, 0.5) so the
    model invariant holds exactly; the least-squares intercept only informs
    the slope.
    """
    v_center = curve.crossing(0.5)
    mask = (curve.values >= band[0]) & (curve.values <= band[1])
    if mask.sum() < 2:
        raise FitError(f"fewer than 2 samples inside the {band} fit band")
    slope = np.polyfit(curve.voltages[mask], curve.values[mask], 1)[0]
    if slope <= 0.0:
        raise FitError(f"non-positive fitted slope {slope}")
    return TangentModel.from_center(k=float(slope), v_center=float(v_center))


def operation_window(curve: WsrCurve, window: TargetWindow = DEFAULT_TARGET_WINDOW
                     ) -> VoltageWindow | None:
    """Voltage band where a monotone WSR curve sits inside the target window."""
    try:
        lo_v = curve.crossing(window.lower)
        hi_v = curve.crossing(window.upper)
    except FitError:
        return None
    if hi_v < lo_v:
        return None
    return VoltageWindow(lo=lo_v, hi=hi_v, temperature_c=curve.temperature_c)


@dataclass(frozen=True)
class PhaseDiagram:
    """Per-temperature dual-pulse feasibility over a (beta, V1) grid."""

    beta_grid: np.ndarray
    v1_grid: np.ndarray
    window: TargetWindow
    per_temperature: dict[float, np.ndarray]   # bool, shape (n_beta, n_v1)
    overlap: np.ndarray                        # AND across temperatures

    def overlap_fraction(self) -> float:
        return float(np.mean(self.overlap))


def phase_diagram(curves: dict[float, WsrCurve], beta_grid: np.ndarray,
                  v1_grid: np.ndarray,
                  window: TargetWindow = DEFAULT_TARGET_WINDOW) -> PhaseDiagram:
    """Feasibility maps F(V1, beta) in window, one per temperature, plus overlap."""
    if not curves:
        raise ValueError("need at least one temperature curve")
    beta_grid = np.asarray(beta_grid, dtype=float)
    v1_grid = np.asarray(v1_grid, dtype=float)
    per_t: dict[float, np.ndarray] = {}
    for t, curve in curves.items():
        w1 = curve.evaluate(v1_grid)[None, :]
        w2 = curve.evaluate(v1_grid[None, :] - beta_grid[:, None])
        per_t[t] = np.asarray(window.contains(compose_independent(w1, w2)))
    overlap = np.logical_and.reduce(list(per_t.values()))
    return PhaseDiagram(beta_grid=beta_grid, v1_grid=v1_grid, window=window,
                        per_temperature=per_t, overlap=overlap)


def point_feasible(curves: dict[float, WsrCurve], beta: float, v1: float,
                   window: TargetWindow = DEFAULT_TARGET_WINDOW) -> bool:
    """Exact (grid-free) feasibility of one (beta, V1) point at all temperatures."""
    for curve in curves.values():
        f = compose_independent(curve.evaluate(v1), curve.evaluate(v1 - beta))
        if not bool(window.contains(f)):
            return False
    return True


@dataclass(frozen=True)
class SlopeSample:
    cv: float
    k: float
    v_center: float
    curve: WsrCurve


def slope_k_study(cv_values, baseline: CellParams = CellParams(),
                  n_cells: int = 16384, v_grid: np.ndarray | None = None,
                  pulse_width_s: float = PULSE_WIDTH_REF_S,
                  temperature_c: float = TEMP_REF_C, seed: int = 0
                  ) -> list[SlopeSample]:
    """Fitted array-level tangent slope as device-to-device spread grows.

    Wider width spread flattens the population-average transition, so k
    falls monotonically with cv.  Curves that never cross 0.5 raise
    FitError (propagated: a study over a grid that misses the transition is
    a configuration problem, not data).
    """
    if v_grid is None:
        v_grid = np.linspace(1.4, 2.2, 81)
    out = []
    for i, cv in enumerate(cv_values):
        cells = sample_population(
            VariationConfig(n_cells=n_cells, cv=float(cv), seed=seed + i),
            baseline)
        curve = measure_wsr_curve(cells, n_cells, v_grid,
                                  pulse_width_s=pulse_width_s,
                                  temperature_c=temperature_c, seed=seed + i)
        model = fit_tangent(curve)
        out.append(SlopeSample(cv=float(cv), k=model.k,
                               v_center=model.v_center, curve=curve))
    return out
