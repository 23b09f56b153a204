"""Statistical randomness battery (SP800-22 subset).

Thirteen tests: frequency, block frequency, cumulative sums (both
directions), runs, longest run of ones, binary matrix rank, spectral (DFT),
non-overlapping and overlapping template matching, approximate entropy,
serial (two p-values), and linear complexity.  Random-excursions variants
are intentionally absent: at the sequence lengths this toolkit produces
they are routinely inapplicable.

Battery semantics: each test yields one p-value per sequence; a sequence
passes a test at significance alpha when p >= alpha.  A test passes the
battery when the passing proportion clears the standard threshold

    p_hat - 3 * sqrt(p_hat * (1 - p_hat) / m),   p_hat = 1 - alpha,

over m sequences.  Sequences too short for a test are reported as skipped,
never silently passed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sp_fft
from scipy import special, stats

ALPHA_DEFAULT = 0.01


# ---------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class TestResult:
    """Outcome of one statistical test on one sequence."""

    name: str
    p_value: float
    passed: bool
    skipped: bool = False
    detail: str = ""


@dataclass(frozen=True)
class BatteryRow:
    """One test aggregated across all sequences of a battery run."""

    name: str
    p_values: tuple[float, ...]
    proportion: float            # passing fraction among applicable sequences
    threshold: float
    passed: bool
    skipped_count: int = 0
    uniformity_p: float = float("nan")   # chi-square on the p-value histogram
    detail: str = ""


@dataclass(frozen=True)
class BatteryReport:
    alpha: float
    n_sequences: int
    rows: tuple[BatteryRow, ...]

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def row(self, name: str) -> BatteryRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)


def proportion_threshold(alpha: float, m: int) -> float:
    p_hat = 1.0 - alpha
    return p_hat - 3.0 * np.sqrt(p_hat * (1.0 - p_hat) / m)


def uniformity_p_value(p_values) -> float:
    """Chi-square uniformity of p-values over 10 equal bins."""
    p = np.asarray(p_values, dtype=float)
    if p.size == 0:
        return float("nan")
    counts, _ = np.histogram(p, bins=10, range=(0.0, 1.0))
    expected = p.size / 10.0
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    return float(special.gammaincc(4.5, chi2 / 2.0))


# ---------------------------------------------------------------------------
# individual tests; each takes a 0/1 uint8 vector


def _bits(seq) -> np.ndarray:
    b = np.asarray(seq, dtype=np.uint8)
    if b.ndim != 1:
        raise ValueError(f"expected a flat bit vector, got shape {b.shape}")
    if b.size and b.max() > 1:
        raise ValueError("bit vector must contain only 0 and 1")
    return b


def _skip(name: str, why: str) -> TestResult:
    return TestResult(name=name, p_value=float("nan"), passed=False,
                      skipped=True, detail=why)


def frequency_test(seq, alpha: float = ALPHA_DEFAULT) -> TestResult:
    b = _bits(seq)
    n = b.size
    if n < 100:
        return _skip("frequency", f"n={n} < 100")
    s = abs(2.0 * b.sum() - n) / np.sqrt(n)
    p = float(special.erfc(s / np.sqrt(2.0)))
    return TestResult("frequency", p, p >= alpha)


def block_frequency_test(seq, block_size: int = 128,
                         alpha: float = ALPHA_DEFAULT) -> TestResult:
    b = _bits(seq)
    n = b.size
    n_blocks = n // block_size
    if n < 100 or n_blocks < 1:
        return _skip("block_frequency", f"n={n} too short for M={block_size}")
    pi = b[: n_blocks * block_size].reshape(n_blocks, block_size).mean(axis=1)
    chi2 = 4.0 * block_size * float(((pi - 0.5) ** 2).sum())
    p = float(special.gammaincc(n_blocks / 2.0, chi2 / 2.0))
    return TestResult("block_frequency", p, p >= alpha)


def _cusum_p(n: int, z: float) -> float:
    if z == 0.0:
        return 0.0
    sqn = np.sqrt(n)
    term1 = 0.0
    for k in range(int(np.floor((-n / z + 1) / 4)), int(np.floor((n / z - 1) / 4)) + 1):
        term1 += (stats.norm.cdf((4 * k + 1) * z / sqn)
                  - stats.norm.cdf((4 * k - 1) * z / sqn))
    term2 = 0.0
    for k in range(int(np.floor((-n / z - 3) / 4)), int(np.floor((n / z - 1) / 4)) + 1):
        term2 += (stats.norm.cdf((4 * k + 3) * z / sqn)
                  - stats.norm.cdf((4 * k + 1) * z / sqn))
    return float(1.0 - term1 + term2)


def cumulative_sums_test(seq, reverse: bool = False,
                         alpha: float = ALPHA_DEFAULT) -> TestResult:
    name = "cumulative_sums_rev" if reverse else "cumulative_sums_fwd"
    b = _bits(seq)
    n = b.size
    if n < 100:
        return _skip(name, f"n={n} < 100")
    x = 2.0 * b.astype(np.int64) - 1
    if reverse:
        x = x[::-1]
    z = float(np.abs(np.cumsum(x)).max())
    p = min(max(_cusum_p(n, z), 0.0), 1.0)
    return TestResult(name, p, p >= alpha)


def runs_test(seq, alpha: float = ALPHA_DEFAULT) -> TestResult:
    b = _bits(seq)
    n = b.size
    if n < 100:
        return _skip("runs", f"n={n} < 100")
    pi = b.mean()
    if abs(pi - 0.5) >= 2.0 / np.sqrt(n):
        # Frequency precondition failed; the reference procedure pins p to 0.
        return TestResult("runs", 0.0, False, detail="frequency precondition failed")
    v = 1 + int((b[1:] != b[:-1]).sum())
    num = abs(v - 2.0 * n * pi * (1 - pi))
    den = 2.0 * np.sqrt(2.0 * n) * pi * (1 - pi)
    p = float(special.erfc(num / den))
    return TestResult("runs", p, p >= alpha)


_LONGEST_RUN_TABLES = {
    # block size: (K, class upper bounds, class probabilities)
    8: (3, [1, 2, 3, 4],
        [0.2148, 0.3672, 0.2305, 0.1875]),
    128: (5, [4, 5, 6, 7, 8, 9],
          [0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124]),
    10000: (6, [10, 11, 12, 13, 14, 15, 16],
            [0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727]),
}


def longest_run_test(seq, alpha: float = ALPHA_DEFAULT) -> TestResult:
    b = _bits(seq)
    n = b.size
    if n < 128:
        return _skip("longest_run", f"n={n} < 128")
    if n < 6272:
        m = 8
    elif n < 750000:
        m = 128
    else:
        m = 10000
    k, bounds, pis = _LONGEST_RUN_TABLES[m]
    n_blocks = n // m
    blocks = b[: n_blocks * m].reshape(n_blocks, m)
    # longest run of ones per block, vectorized over blocks
    longest = np.zeros(n_blocks, dtype=np.int64)
    run = np.zeros(n_blocks, dtype=np.int64)
    for j in range(m):
        col = blocks[:, j]
        run = (run + 1) * col
        longest = np.maximum(longest, run)
    counts = np.zeros(k + 1, dtype=np.int64)
    lo = bounds[0]
    hi = bounds[-1]
    clipped = np.clip(longest, lo, hi)
    for idx, bound in enumerate(bounds):
        counts[idx] = int((clipped == bound).sum())
    expected = n_blocks * np.asarray(pis)
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    p = float(special.gammaincc(k / 2.0, chi2 / 2.0))
    return TestResult("longest_run", p, p >= alpha)


def _gf2_rank(mat: np.ndarray) -> int:
    m = mat.copy()
    rows, cols = m.shape
    rank = 0
    for col in range(cols):
        pivots = np.nonzero(m[rank:, col])[0]
        if pivots.size == 0:
            continue
        pivot = pivots[0] + rank
        if pivot != rank:
            m[[rank, pivot]] = m[[pivot, rank]]
        below = np.nonzero(m[rank + 1:, col])[0] + rank + 1
        m[below] ^= m[rank]
        rank += 1
        if rank == rows:
            break
    return rank


def rank_test(seq, alpha: float = ALPHA_DEFAULT) -> TestResult:
    b = _bits(seq)
    n = b.size
    q = 32
    n_mats = n // (q * q)
    if n_mats < 38:
        # Fewer matrices than the reference procedure's floor for the
        # three-class chi-square to be meaningful.
        return _skip("rank", f"only {n_mats} 32x32 matrices, need 38")
    mats = b[: n_mats * q * q].reshape(n_mats, q, q)
    ranks = np.array([_gf2_rank(m) for m in mats])
    # asymptotic class probabilities for full rank, full-1, and the rest
    p_full = 0.2888
    p_minus1 = 0.5776
    p_rest = 0.1336
    f_full = int((ranks == q).sum())
    f_minus1 = int((ranks == q - 1).sum())
    f_rest = n_mats - f_full - f_minus1
    chi2 = ((f_full - n_mats * p_full) ** 2 / (n_mats * p_full)
            + (f_minus1 - n_mats * p_minus1) ** 2 / (n_mats * p_minus1)
            + (f_rest - n_mats * p_rest) ** 2 / (n_mats * p_rest))
    p = float(np.exp(-chi2 / 2.0))
    return TestResult("rank", p, p >= alpha)


def spectral_test(seq, alpha: float = ALPHA_DEFAULT) -> TestResult:
    b = _bits(seq)
    n = b.size
    if n < 1000:
        return _skip("spectral", f"n={n} < 1000")
    x = 2.0 * b.astype(np.float64) - 1.0
    mod = np.abs(sp_fft.rfft(x))[: n // 2]
    threshold = np.sqrt(np.log(1.0 / 0.05) * n)
    n0 = 0.95 * n / 2.0
    n1 = float((mod < threshold).sum())
    d = (n1 - n0) / np.sqrt(n * 0.95 * 0.05 / 4.0)
    p = float(special.erfc(abs(d) / np.sqrt(2.0)))
    return TestResult("spectral", p, p >= alpha)


def _aperiodic_templates(m: int) -> np.ndarray:
    """All unbordered bit templates of length m (no proper prefix == suffix)."""
    out = []
    for value in range(2 ** m):
        t = [(value >> (m - 1 - i)) & 1 for i in range(m)]
        if all(t[: m - s] != t[s:] for s in range(1, m)):
            out.append(t)
    return np.asarray(out, dtype=np.uint8)


_TEMPLATE_CACHE: dict[int, np.ndarray] = {}


def aperiodic_templates(m: int) -> np.ndarray:
    if m not in _TEMPLATE_CACHE:
        _TEMPLATE_CACHE[m] = _aperiodic_templates(m)
    return _TEMPLATE_CACHE[m]


def _window_values(b: np.ndarray, m: int) -> np.ndarray:
    """Integer value of every overlapping m-bit window."""
    weights = (1 << np.arange(m - 1, -1, -1)).astype(np.int64)
    return np.convolve(b.astype(np.int64), weights[::-1], mode="valid")


def non_overlapping_template_test(seq, template_len: int = 9, n_blocks: int = 8,
                                  alpha: float = ALPHA_DEFAULT) -> list[TestResult]:
    """One result per aperiodic template; occurrences may not overlap."""
    b = _bits(seq)
    n = b.size
    m = template_len
    block = n // n_blocks
    if block <= m + 1 or n < 1000:
        return [_skip("non_overlapping_template", f"n={n} too short")]
    mu = (block - m + 1) / 2.0 ** m
    var = block * (1.0 / 2.0 ** m - (2.0 * m - 1.0) / 2.0 ** (2 * m))
    windows = _window_values(b, m)
    templates = aperiodic_templates(m)
    weights = (1 << np.arange(m - 1, -1, -1)).astype(np.int64)
    tvals = templates.astype(np.int64) @ weights
    results = []
    for t_idx, tv in enumerate(tvals):
        counts = np.zeros(n_blocks, dtype=np.int64)
        for j in range(n_blocks):
            start = j * block
            # windows fully inside the block
            hits = np.nonzero(windows[start: start + block - m + 1] == tv)[0]
            # greedy non-overlapping count
            c = 0
            last = -m
            for h in hits:
                if h >= last + m:
                    c += 1
                    last = h
            counts[j] = c
        chi2 = float(((counts - mu) ** 2 / var).sum())
        p = float(special.gammaincc(n_blocks / 2.0, chi2 / 2.0))
        name = f"non_overlapping_template[{''.join(map(str, templates[t_idx]))}]"
        results.append(TestResult(name, p, p >= alpha))
    return results


# Class probabilities for the overlapping-template statistic with
# m = 9, M = 1032 (lambda = 2): occurrences 0..4 and >= 5.
_OVERLAPPING_PI = (0.364091, 0.185659, 0.139381, 0.100571, 0.070432, 0.139865)


def overlapping_template_test(seq, template_len: int = 9, block: int = 1032,
                              alpha: float = ALPHA_DEFAULT) -> TestResult:
    b = _bits(seq)
    n = b.size
    m = template_len
    n_blocks = n // block
    if n_blocks < 1 or n < 10000:
        return _skip("overlapping_template", f"n={n} too short")
    target = (1 << m) - 1      # all-ones template
    k = len(_OVERLAPPING_PI) - 1
    counts = np.zeros(k + 1, dtype=np.int64)
    windows = _window_values(b, m)
    for j in range(n_blocks):
        start = j * block
        hits = int((windows[start: start + block - m + 1] == target).sum())
        counts[min(hits, k)] += 1
    expected = n_blocks * np.asarray(_OVERLAPPING_PI)
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    p = float(special.gammaincc(k / 2.0, chi2 / 2.0))
    return TestResult("overlapping_template", p, p >= alpha)


def _phi(b: np.ndarray, m: int) -> float:
    if m == 0:
        return 0.0
    n = b.size
    ext = np.concatenate([b, b[: m - 1]]) if m > 1 else b
    vals = _window_values(ext, m)
    counts = np.bincount(vals, minlength=2 ** m)
    nz = counts[counts > 0].astype(np.float64)
    return float((nz / n * np.log(nz / n)).sum())


def approximate_entropy_test(seq, m: int = 2,
                             alpha: float = ALPHA_DEFAULT) -> TestResult:
    b = _bits(seq)
    n = b.size
    if n < 100:
        return _skip("approximate_entropy", f"n={n} < 100")
    ap_en = _phi(b, m) - _phi(b, m + 1)
    chi2 = 2.0 * n * (np.log(2.0) - ap_en)
    p = float(special.gammaincc(2.0 ** (m - 1), chi2 / 2.0))
    return TestResult("approximate_entropy", p, p >= alpha)


def _psi_sq(b: np.ndarray, m: int) -> float:
    if m == 0:
        return 0.0
    n = b.size
    ext = np.concatenate([b, b[: m - 1]]) if m > 1 else b
    vals = _window_values(ext, m)
    counts = np.bincount(vals, minlength=2 ** m).astype(np.float64)
    return float((counts ** 2).sum() * (2.0 ** m) / n - n)


def serial_test(seq, m: int = 8, alpha: float = ALPHA_DEFAULT
                ) -> tuple[TestResult, TestResult]:
    b = _bits(seq)
    n = b.size
    if n < 100 or m < 2 or 2 ** (m + 1) > n:
        return (_skip("serial_p1", f"n={n} too short for m={m}"),
                _skip("serial_p2", f"n={n} too short for m={m}"))
    psi_m = _psi_sq(b, m)
    psi_m1 = _psi_sq(b, m - 1)
    psi_m2 = _psi_sq(b, m - 2)
    d1 = psi_m - psi_m1
    d2 = psi_m - 2.0 * psi_m1 + psi_m2
    p1 = float(special.gammaincc(2.0 ** (m - 2), d1 / 2.0))
    p2 = float(special.gammaincc(2.0 ** (m - 3), d2 / 2.0))
    return (TestResult("serial_p1", p1, p1 >= alpha),
            TestResult("serial_p2", p2, p2 >= alpha))


def _berlekamp_massey(block: np.ndarray) -> int:
    """Linear complexity of a bit block, bits packed into Python ints.

    The sequence is stored bit-reversed so the discrepancy
    d = sum_j c_j * s_{i-j} becomes a plain AND + popcount against a shifted
    window instead of a per-step reversal.
    """
    n = block.size
    s_rev = 0
    for i, bit in enumerate(block):
        if bit:
            s_rev |= 1 << (n - 1 - i)
    c = 1
    b = 1
    l = 0
    m = -1
    for i in range(n):
        d = (c & (s_rev >> (n - 1 - i))).bit_count() & 1
        if d:
            t = c
            c ^= b << (i - m)
            if 2 * l <= i:
                l = i + 1 - l
                m = i
                b = t
    return l


_LINEAR_COMPLEXITY_PI = (0.010417, 0.03125, 0.125, 0.5, 0.25, 0.0625, 0.020833)


def linear_complexity_test(seq, block: int = 500,
                           alpha: float = ALPHA_DEFAULT) -> TestResult:
    b = _bits(seq)
    n = b.size
    n_blocks = n // block
    if n_blocks < 20:
        return _skip("linear_complexity", f"only {n_blocks} blocks of {block}")
    mu = (block / 2.0 + (9.0 + (-1.0) ** (block + 1)) / 36.0
          - (block / 3.0 + 2.0 / 9.0) / 2.0 ** block)
    counts = np.zeros(7, dtype=np.int64)
    sign = 1.0 if block % 2 == 0 else -1.0
    for j in range(n_blocks):
        l = _berlekamp_massey(b[j * block: (j + 1) * block])
        t = sign * (l - mu) + 2.0 / 9.0
        if t <= -2.5:
            counts[0] += 1
        elif t <= -1.5:
            counts[1] += 1
        elif t <= -0.5:
            counts[2] += 1
        elif t <= 0.5:
            counts[3] += 1
        elif t <= 1.5:
            counts[4] += 1
        elif t <= 2.5:
            counts[5] += 1
        else:
            counts[6] += 1
    expected = n_blocks * np.asarray(_LINEAR_COMPLEXITY_PI)
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    p = float(special.gammaincc(3.0, chi2 / 2.0))
    return TestResult("linear_complexity", p, p >= alpha)


# ---------------------------------------------------------------------------
# battery


def run_single(seq, alpha: float = ALPHA_DEFAULT) -> dict[str, list[TestResult]]:
    """All tests on one sequence, grouped by aggregation row."""
    rows: dict[str, list[TestResult]] = {}
    rows["frequency"] = [frequency_test(seq, alpha)]
    rows["block_frequency"] = [block_frequency_test(seq, alpha=alpha)]
    rows["cumulative_sums_fwd"] = [cumulative_sums_test(seq, False, alpha)]
    rows["cumulative_sums_rev"] = [cumulative_sums_test(seq, True, alpha)]
    rows["runs"] = [runs_test(seq, alpha)]
    rows["longest_run"] = [longest_run_test(seq, alpha)]
    rows["rank"] = [rank_test(seq, alpha)]
    rows["spectral"] = [spectral_test(seq, alpha)]
    rows["non_overlapping_template"] = non_overlapping_template_test(seq, alpha=alpha)
    rows["overlapping_template"] = [overlapping_template_test(seq, alpha=alpha)]
    rows["approximate_entropy"] = [approximate_entropy_test(seq, alpha=alpha)]
    s1, s2 = serial_test(seq, alpha=alpha)
    rows["serial_p1"] = [s1]
    rows["serial_p2"] = [s2]
    rows["linear_complexity"] = [linear_complexity_test(seq, alpha=alpha)]
    return rows


def run_battery(sequences, alpha: float = ALPHA_DEFAULT) -> BatteryReport:
    """Run every test over a batch of sequences and aggregate proportions.

    The non-overlapping template row aggregates all templates: the row
    passes only when every template sub-test clears the proportion
    threshold on its own.
    """
    sequences = list(sequences)
    m = len(sequences)
    if m < 1:
        raise ValueError("need at least one sequence")
    per_seq = [run_single(s, alpha) for s in sequences]
    row_names = list(per_seq[0].keys())
    rows: list[BatteryRow] = []
    threshold = proportion_threshold(alpha, m)
    for name in row_names:
        if name == "non_overlapping_template":
            rows.append(_aggregate_templates(per_seq, name, alpha, m, threshold))
            continue
        results = [ps[name][0] for ps in per_seq]
        applicable = [r for r in results if not r.skipped]
        skipped = m - len(applicable)
        pvals = tuple(r.p_value for r in applicable)
        if not applicable:
            rows.append(BatteryRow(name=name, p_values=(), proportion=0.0,
                                   threshold=threshold, passed=False,
                                   skipped_count=skipped,
                                   detail="skipped for all sequences"))
            continue
        prop = float(np.mean([r.passed for r in applicable]))
        rows.append(BatteryRow(
            name=name, p_values=pvals, proportion=prop, threshold=threshold,
            passed=prop >= threshold and skipped == 0,
            skipped_count=skipped,
            uniformity_p=uniformity_p_value(pvals),
            detail="" if skipped == 0 else f"{skipped} sequence(s) skipped"))
    return BatteryReport(alpha=alpha, n_sequences=m, rows=tuple(rows))


def _aggregate_templates(per_seq, name: str, alpha: float, m: int,
                         threshold: float) -> BatteryRow:
    by_template: dict[str, list[TestResult]] = {}
    skipped = 0
    for ps in per_seq:
        results = ps[name]
        if len(results) == 1 and results[0].skipped:
            skipped += 1
            continue
        for r in results:
            by_template.setdefault(r.name, []).append(r)
    if not by_template:
        return BatteryRow(name=name, p_values=(), proportion=0.0,
                          threshold=threshold, passed=False, skipped_count=skipped,
                          detail="skipped for all sequences")
    worst_prop = 1.0
    worst_detail = ""
    all_p: list[float] = []
    for t_name, results in by_template.items():
        prop = float(np.mean([r.passed for r in results]))
        all_p.extend(r.p_value for r in results)
        if prop < worst_prop:
            worst_prop = prop
            worst_detail = t_name
    return BatteryRow(
        name=name, p_values=tuple(all_p), proportion=worst_prop,
        threshold=threshold,
        passed=worst_prop >= threshold and skipped == 0,
        skipped_count=skipped,
        uniformity_p=uniformity_p_value(all_p),
        detail=f"worst template {worst_detail}" if worst_detail else "")


def reference_bits(n_bits: int, seed: int = 0) -> np.ndarray:
    """Reference pseudo-random bit source for battery self-checks."""
    rng = np.random.default_rng(seed)
    return rng.integers(0, 2, size=n_bits, dtype=np.uint8)
