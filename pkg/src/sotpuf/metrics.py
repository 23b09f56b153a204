"""PUF quality metrics: weight, uniformity, distances, correlation, Psw maps.

Degenerate statistical inputs (empty vectors, constant streams, too few
responses to fit) raise MetricError rather than returning silently wrong
numbers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from .rng import uniform_block

# Below this many responses a histogram fit is statistically meaningless.
MIN_RESPONSES_FOR_FIT = 30

_STREAM_PSW_MAP = 0x504D
_STREAM_MAP_BITS = 0x4D42


class MetricError(ValueError):
    """Raised when a metric's statistical preconditions are not met."""


def ideal_hw_sigma(width: int) -> float:
    """Binomial standard deviation of the fractional weight of fair responses."""
    return 1.0 / (2.0 * np.sqrt(width))


def hamming_weight(bits: np.ndarray) -> float:
    bits = np.asarray(bits)
    if bits.size == 0:
        raise MetricError("hamming weight of an empty bit vector is undefined")
    return float(np.mean(bits))


def normalized_hd(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise MetricError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise MetricError("hamming distance of empty vectors is undefined")
    return float(np.mean(a != b))


@dataclass(frozen=True)
class GaussFit:
    """Least-squares Gaussian fit to a response-weight histogram."""

    mu: float
    sigma: float
    amplitude: float
    n_bins: int
    n_samples: int


def _gauss(x, amplitude, mu, sigma):
    return amplitude * np.exp(-0.5 * ((x - mu) / sigma) ** 2)


def uniformity(responses) -> GaussFit:
    """Fit a Gaussian to the per-response fractional-weight histogram.

    Accepts a ResponseSet or a 2-D bit array (responses by rows).  Bin width
    follows Scott's rule.  A zero-spread sample short-circuits to a
    degenerate fit with sigma = 0.
    """
    rows = getattr(responses, "responses", responses)
    rows = np.asarray(rows)
    if rows.ndim != 2:
        raise MetricError(f"expected responses by rows, got shape {rows.shape}")
    if rows.shape[0] < MIN_RESPONSES_FOR_FIT:
        raise MetricError(
            f"need at least {MIN_RESPONSES_FOR_FIT} responses for a fit, "
            f"got {rows.shape[0]}")
    hw = rows.mean(axis=1)
    n = hw.size
    sample_mu = float(np.mean(hw))
    sample_sd = float(np.std(hw))
    if sample_sd == 0.0:
        return GaussFit(mu=sample_mu, sigma=0.0, amplitude=float(n),
                        n_bins=1, n_samples=n)
    # Scott's rule bin width, snapped up to a whole number of lattice steps:
    # weights live on a 1/width grid, and a bin width near one lattice step
    # aliases the counts (some bins catch two lattice points, some one).
    h = 3.49 * sample_sd * n ** (-1.0 / 3.0)
    lattice = 1.0 / rows.shape[1]
    h = max(1, int(np.ceil(h / lattice))) * lattice
    lo = (np.round(hw.min() / lattice) - 0.5) * lattice
    n_bins = max(int(np.ceil((hw.max() - lo) / h)), 3)
    edges = lo + h * np.arange(n_bins + 1)
    counts, _ = np.histogram(hw, bins=edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    try:
        popt, _ = optimize.curve_fit(
            _gauss, centers, counts,
            p0=(float(counts.max()), sample_mu, sample_sd), maxfev=10000)
    except RuntimeError as exc:
        raise MetricError(f"gaussian fit did not converge: {exc}") from exc
    amplitude, mu, sigma = popt
    return GaussFit(mu=float(mu), sigma=float(abs(sigma)),
                    amplitude=float(amplitude), n_bins=n_bins, n_samples=n)


@dataclass(frozen=True)
class HdDistribution:
    """A batch of normalized Hamming distances."""

    values: np.ndarray

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def std(self) -> float:
        return float(np.std(self.values))

    @property
    def distance_from_half(self) -> float:
        return abs(self.mean - 0.5)


def inter_reconfig_hd(keys) -> HdDistribution:
    """Pairwise HD over every unordered pair of keys from one array."""
    keys = [np.asarray(k) for k in keys]
    if len(keys) < 2:
        raise MetricError(f"need at least 2 keys, got {len(keys)}")
    values = [normalized_hd(a, b) for a, b in itertools.combinations(keys, 2)]
    return HdDistribution(values=np.array(values))


def inter_die_hd(chips) -> HdDistribution:
    """Per-address HD between every pair of chips' response sets."""
    sets = [np.asarray(getattr(c, "responses", c)) for c in chips]
    if len(sets) < 2:
        raise MetricError(f"need at least 2 chips, got {len(sets)}")
    shape = sets[0].shape
    for i, s in enumerate(sets):
        if s.shape != shape:
            raise MetricError(f"chip {i} shape {s.shape} != {shape}")
    values = []
    for a, b in itertools.combinations(sets, 2):
        values.append((a != b).mean(axis=1))
    return HdDistribution(values=np.concatenate(values))


def intra_hd(golden: np.ndarray, reads) -> HdDistribution:
    """HD of each repeated read against the golden (enrolled) response."""
    golden = np.asarray(golden)
    reads = [np.asarray(r) for r in reads]
    if not reads:
        raise MetricError("need at least one read")
    return HdDistribution(values=np.array([normalized_hd(golden, r) for r in reads]))


@dataclass(frozen=True)
class AcfResult:
    lags: np.ndarray
    values: np.ndarray
    bound: float          # +/- band for an uncorrelated stream
    confidence: float

    @property
    def fraction_within(self) -> float:
        return float(np.mean(np.abs(self.values) <= self.bound))


def acf(bits: np.ndarray, max_lag: int = 100, confidence: float = 0.95) -> AcfResult:
    """Sample autocorrelation of a bitstream at lags 1..max_lag."""
    x = np.asarray(bits, dtype=float)
    if x.ndim != 1:
        raise MetricError(f"expected a flat bitstream, got shape {x.shape}")
    n = x.size
    if max_lag < 1 or max_lag >= n:
        raise MetricError(f"max_lag must be in [1, {n - 1}], got {max_lag}")
    x = x - x.mean()
    denom = float(np.dot(x, x))
    if denom == 0.0:
        raise MetricError("autocorrelation of a constant stream is undefined")
    lags = np.arange(1, max_lag + 1)
    values = np.array([float(np.dot(x[:-k], x[k:])) / denom for k in lags])
    z = stats.norm.ppf(0.5 * (1.0 + confidence))
    return AcfResult(lags=lags, values=values, bound=float(z / np.sqrt(n)),
                     confidence=confidence)


@dataclass(frozen=True)
class CorrelationResult:
    matrix: np.ndarray           # nan rows/cols for degenerate keys
    degenerate: np.ndarray       # indices of zero-variance keys

    def max_off_diagonal(self) -> float:
        m = self.matrix.copy()
        np.fill_diagonal(m, np.nan)
        finite = m[np.isfinite(m)]
        if finite.size == 0:
            raise MetricError("no finite off-diagonal correlations")
        return float(np.max(np.abs(finite)))

    def off_diagonal(self) -> np.ndarray:
        iu = np.triu_indices(self.matrix.shape[0], k=1)
        vals = self.matrix[iu]
        return vals[np.isfinite(vals)]


def correlation_matrix(keys) -> CorrelationResult:
    """Pearson correlation between keys after mapping bits to +/-1.

    Zero-variance keys are flagged and their rows/columns set to nan instead
    of raising, so one dead key does not abort a batch report.
    """
    rows = np.asarray([np.asarray(k) for k in keys], dtype=float)
    if rows.ndim != 2 or rows.shape[0] < 2:
        raise MetricError(f"need a 2-D batch of at least 2 keys, got {rows.shape}")
    x = 2.0 * rows - 1.0
    xc = x - x.mean(axis=1, keepdims=True)
    norms = np.sqrt((xc * xc).sum(axis=1))
    degenerate = np.flatnonzero(norms == 0.0)
    safe = norms.copy()
    safe[degenerate] = 1.0
    m = (xc @ xc.T) / np.outer(safe, safe)
    m[degenerate, :] = np.nan
    m[:, degenerate] = np.nan
    good = np.setdiff1d(np.arange(rows.shape[0]), degenerate)
    m[good, good] = 1.0
    return CorrelationResult(matrix=m, degenerate=degenerate)


@dataclass(frozen=True)
class PswMapStats:
    """Per-cell empirical switching frequencies over repeated trials."""

    p: np.ndarray
    n_trials: int

    @property
    def mu(self) -> float:
        return float(np.mean(self.p))

    @property
    def sigma(self) -> float:
        return float(np.std(self.p))

    @property
    def degenerate(self) -> bool:
        """True when every cell is fully deterministic (p exactly 0 or 1)."""
        return bool(np.all((self.p == 0.0) | (self.p == 1.0)))


def psw_map(run_fn, n_trials: int) -> PswMapStats:
    """Per-cell switch frequency over n_trials reconfigurations.

    run_fn(trial_index) must return the per-cell switched/one indicator for
    that trial as a bit vector of constant length.
    """
    if n_trials < 1:
        raise MetricError(f"n_trials must be >= 1, got {n_trials}")
    acc = None
    for t in range(n_trials):
        bits = np.asarray(run_fn(t), dtype=float)
        if acc is None:
            acc = np.zeros_like(bits)
        acc += bits
    return PswMapStats(p=acc / n_trials, n_trials=n_trials)


def sample_psw_map(mu: float, sigma: float, n_cells: int, seed: int = 0) -> np.ndarray:
    """Per-cell switching probabilities: normal(mu, sigma) clipped to [0, 1].

    Calibration mode: lets measured Psw-map statistics stand in for the
    physical cell model when replaying characterized silicon.
    """
    if n_cells < 1:
        raise MetricError(f"n_cells must be >= 1, got {n_cells}")
    if sigma < 0.0:
        raise MetricError(f"sigma must be >= 0, got {sigma}")
    # Gaussian draw through the uniform stream keeps the map a pure
    # function of (seed, cell index).
    u = uniform_block(seed, _STREAM_PSW_MAP, 0, n_cells)
    p = mu + sigma * stats.norm.ppf(u)
    return np.clip(p, 0.0, 1.0)


def bits_from_map(p: np.ndarray, seed: int, trial: int) -> np.ndarray:
    """One reconfiguration realization from a per-cell probability map."""
    p = np.asarray(p, dtype=float)
    u = uniform_block(seed, _STREAM_MAP_BITS, trial, p.size)
    return (u < p).astype(np.uint8)


def expected_hd_same_map(p: np.ndarray) -> float:
    """Closed-form inter-reconfiguration HD for two draws from one map."""
    p = np.asarray(p, dtype=float)
    return float(np.mean(2.0 * p * (1.0 - p)))


def expected_hd_cross_maps(p1: np.ndarray, p2: np.ndarray) -> float:
    """Closed-form HD between draws from two maps over the same cells."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    return float(np.mean(p1 * (1.0 - p2) + p2 * (1.0 - p1)))
