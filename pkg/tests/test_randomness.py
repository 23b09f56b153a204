"""Statistical randomness battery: per-test oracles and aggregation rules.

Reference values are recomputed in-test with independent implementations
(dict counting, groupby scans, dense linear algebra) rather than trusting
the vectorized production code paths.
"""

from __future__ import annotations

import itertools
from collections import defaultdict

import numpy as np
import pytest
from scipy import special, stats

from sotpuf import randomness as rnd

ROW_NAMES = [
    "frequency", "block_frequency", "cumulative_sums_fwd",
    "cumulative_sums_rev", "runs", "longest_run", "rank", "spectral",
    "non_overlapping_template", "overlapping_template",
    "approximate_entropy", "serial_p1", "serial_p2", "linear_complexity",
]


def bits_of(*runs):
    """Concatenate (value, count) runs into a uint8 vector."""
    return np.concatenate([np.full(c, v, dtype=np.uint8) for v, c in runs])


class TestHelpers:
    def test_bits_validation(self):
        with pytest.raises(ValueError, match="flat"):
            rnd._bits(np.zeros((2, 3), dtype=np.uint8))
        with pytest.raises(ValueError, match="only 0 and 1"):
            rnd._bits(np.array([0, 1, 2], dtype=np.uint8))

    def test_proportion_threshold(self):
        assert rnd.proportion_threshold(0.01, 10) == pytest.approx(0.8956072,
                                                                   abs=1e-7)
        assert rnd.proportion_threshold(0.01, 1000) > rnd.proportion_threshold(
            0.01, 10)

    def test_uniformity_p_value(self):
        flat = np.tile(np.linspace(0.05, 0.95, 10), 5)
        assert rnd.uniformity_p_value(flat) == 1.0
        assert rnd.uniformity_p_value(np.full(45, 0.55)) < 1e-60
        assert np.isnan(rnd.uniformity_p_value([]))

    def test_reference_bits_deterministic(self):
        a = rnd.reference_bits(1000, seed=3)
        assert np.array_equal(a, rnd.reference_bits(1000, seed=3))
        assert not np.array_equal(a, rnd.reference_bits(1000, seed=4))
        assert set(np.unique(a)) <= {0, 1}


class TestFrequency:
    def test_hand_computed(self):
        r = rnd.frequency_test(bits_of((1, 60), (0, 40)))
        assert r.p_value == pytest.approx(special.erfc(2.0 / np.sqrt(2.0)),
                                          abs=1e-10)
        assert r.passed and not r.skipped

    def test_constant_fails(self):
        r = rnd.frequency_test(np.zeros(200, dtype=np.uint8))
        assert r.p_value < 1e-40 and not r.passed

    def test_short_sequence_skipped(self):
        r = rnd.frequency_test(np.zeros(99, dtype=np.uint8))
        assert r.skipped and not r.passed


class TestBlockFrequency:
    def test_exact_chi_square(self):
        # block 1 balanced, block 2 at 0.75 ones: chi2 = 4*128*0.0625 = 32
        b = np.concatenate([np.tile([1, 0], 64),
                            bits_of((1, 96), (0, 32))]).astype(np.uint8)
        r = rnd.block_frequency_test(b)
        assert r.p_value == pytest.approx(np.exp(-16.0), rel=1e-9)
        assert not r.passed

    def test_balanced_blocks_pass(self):
        r = rnd.block_frequency_test(np.tile([1, 0], 640).astype(np.uint8))
        assert r.p_value == 1.0

    def test_short_skipped(self):
        assert rnd.block_frequency_test(np.ones(99, dtype=np.uint8)).skipped


def exact_cusum_exceedance(n, z):
    """Absorbing random-walk DP: P(max_i |S_i| >= z) for a fair +/-1 walk."""
    size = 2 * z - 1
    probs = np.zeros(size)
    probs[z - 1] = 1.0
    for _ in range(n):
        nxt = np.zeros(size)
        nxt[1:] += 0.5 * probs[:-1]
        nxt[:-1] += 0.5 * probs[1:]
        probs = nxt
    return 1.0 - probs.sum()


class TestCumulativeSums:
    @pytest.mark.parametrize("n,z,tol", [(1000, 31, 5e-4), (1000, 45, 5e-4),
                                         (10000, 100, 2e-4)])
    def test_asymptotic_formula_against_exact_walk(self, n, z, tol):
        assert rnd._cusum_p(n, z) == pytest.approx(exact_cusum_exceedance(n, z),
                                                   abs=tol)

    def test_statistic_is_max_abs_partial_sum(self):
        b = rnd.reference_bits(1000, seed=6)
        x = 2.0 * b.astype(np.int64) - 1
        z_fwd = float(np.abs(np.cumsum(x)).max())
        r = rnd.cumulative_sums_test(b, reverse=False)
        assert r.p_value == pytest.approx(rnd._cusum_p(1000, z_fwd), rel=1e-12)
        z_rev = float(np.abs(np.cumsum(x[::-1])).max())
        r = rnd.cumulative_sums_test(b, reverse=True)
        assert r.name == "cumulative_sums_rev"
        assert r.p_value == pytest.approx(rnd._cusum_p(1000, z_rev), rel=1e-12)

    def test_all_ones_fails(self):
        r = rnd.cumulative_sums_test(np.ones(1000, dtype=np.uint8))
        assert not r.passed and r.p_value < 1e-10

    def test_short_skipped(self):
        assert rnd.cumulative_sums_test(np.ones(99, dtype=np.uint8)).skipped


class TestRuns:
    def test_alternating_has_too_many_runs(self):
        r = rnd.runs_test(np.tile([1, 0], 50).astype(np.uint8))
        assert not r.passed and r.p_value < 1e-10

    def test_precondition_pins_p_to_zero(self):
        r = rnd.runs_test(bits_of((1, 75), (0, 25)))
        assert r.p_value == 0.0 and not r.passed
        assert r.detail == "frequency precondition failed"

    def test_reference_passes(self):
        assert rnd.runs_test(rnd.reference_bits(10000, seed=2)).passed

    def test_short_skipped(self):
        assert rnd.runs_test(np.ones(99, dtype=np.uint8)).skipped


class TestLongestRun:
    @staticmethod
    def brute_p(b, m, k, bounds, pis):
        n_blocks = b.size // m
        counts = np.zeros(k + 1)
        for j in range(n_blocks):
            block = b[j * m:(j + 1) * m]
            longest = max((len(list(g)) for v, g in itertools.groupby(block)
                           if v == 1), default=0)
            longest = min(max(longest, bounds[0]), bounds[-1])
            counts[bounds.index(longest)] += 1
        expected = n_blocks * np.asarray(pis)
        chi2 = float(((counts - expected) ** 2 / expected).sum())
        return float(special.gammaincc(k / 2.0, chi2 / 2.0))

    def test_matches_groupby_reference(self):
        b = rnd.reference_bits(10000, seed=3)
        want = self.brute_p(b, 128, 5, [4, 5, 6, 7, 8, 9],
                            [0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124])
        assert rnd.longest_run_test(b).p_value == pytest.approx(want, rel=1e-12)

    def test_small_block_regime(self):
        b = rnd.reference_bits(1280, seed=4)
        want = self.brute_p(b, 8, 3, [1, 2, 3, 4],
                            [0.2148, 0.3672, 0.2305, 0.1875])
        assert rnd.longest_run_test(b).p_value == pytest.approx(want, rel=1e-12)

    def test_short_skipped(self):
        assert rnd.longest_run_test(np.ones(127, dtype=np.uint8)).skipped


def list_gf2_rank(mat):
    rows = [int("".join(map(str, row)), 2) for row in mat.tolist()]
    rank = 0
    for col in range(mat.shape[1] - 1, -1, -1):
        pivot = next((i for i in range(rank, len(rows))
                      if rows[i] >> col & 1), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i] >> col & 1:
                rows[i] ^= rows[rank]
        rank += 1
    return rank


class TestRank:
    def test_known_ranks(self):
        assert rnd._gf2_rank(np.eye(32, dtype=np.uint8)) == 32
        assert rnd._gf2_rank(np.zeros((32, 32), dtype=np.uint8)) == 0
        dup = np.eye(32, dtype=np.uint8)
        dup[5] = dup[3]
        assert rnd._gf2_rank(dup) == 31

    def test_matches_list_elimination(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            m = rng.integers(0, 2, size=(8, 8)).astype(np.uint8)
            assert rnd._gf2_rank(m) == list_gf2_rank(m)
        for _ in range(5):
            m = rng.integers(0, 2, size=(32, 32)).astype(np.uint8)
            assert rnd._gf2_rank(m) == list_gf2_rank(m)

    def test_all_ones_fails(self):
        r = rnd.rank_test(np.ones(40960, dtype=np.uint8))
        assert not r.passed and r.p_value < 1e-10

    def test_reference_passes(self):
        assert rnd.rank_test(rnd.reference_bits(100_000, seed=5)).passed

    def test_too_few_matrices_skipped(self):
        assert rnd.rank_test(np.ones(37 * 1024, dtype=np.uint8)).skipped
        assert not rnd.rank_test(rnd.reference_bits(38 * 1024, seed=5)).skipped


class TestSpectral:
    def test_matches_numpy_fft(self):
        b = rnd.reference_bits(2000, seed=4)
        x = 2.0 * b.astype(float) - 1.0
        mod = np.abs(np.fft.rfft(x))[:1000]
        threshold = np.sqrt(np.log(1.0 / 0.05) * 2000)
        n1 = float((mod < threshold).sum())
        d = (n1 - 0.95 * 1000) / np.sqrt(2000 * 0.95 * 0.05 / 4.0)
        want = float(special.erfc(abs(d) / np.sqrt(2.0)))
        assert rnd.spectral_test(b).p_value == pytest.approx(want, rel=1e-10)

    def test_constant_fails(self):
        r = rnd.spectral_test(np.zeros(1000, dtype=np.uint8))
        assert not r.passed and r.p_value < 1e-10

    def test_short_skipped(self):
        assert rnd.spectral_test(np.ones(999, dtype=np.uint8)).skipped


class TestTemplates:
    def test_aperiodic_template_counts(self):
        # the count sequence for lengths 1..9
        want = [2, 2, 4, 6, 12, 20, 40, 74, 148]
        for m, c in zip(range(1, 10), want):
            assert len(rnd.aperiodic_templates(m)) == c

    def test_templates_are_unbordered_and_unique(self):
        ts = rnd.aperiodic_templates(9)
        seen = set()
        for t in ts.tolist():
            assert tuple(t) not in seen
            seen.add(tuple(t))
            for s in range(1, 9):
                assert t[:9 - s] != t[s:]

    def test_non_overlapping_matches_greedy_scan(self):
        b = rnd.reference_bits(3000, seed=5)
        results = {r.name: r for r in rnd.non_overlapping_template_test(b)}
        assert len(results) == 148
        templates = rnd.aperiodic_templates(9).tolist()
        block = 3000 // 8
        mu = (block - 9 + 1) / 2.0 ** 9
        var = block * (1.0 / 2.0 ** 9 - 17.0 / 2.0 ** 18)
        for t in templates[:5] + templates[70:75] + templates[-5:]:
            counts = []
            for j in range(8):
                chunk = b[j * block:(j + 1) * block].tolist()
                c = 0
                i = 0
                while i <= block - 9:
                    if chunk[i:i + 9] == t:
                        c += 1
                        i += 9
                    else:
                        i += 1
                counts.append(c)
            chi2 = sum((c - mu) ** 2 / var for c in counts)
            want = float(special.gammaincc(4.0, chi2 / 2.0))
            name = f"non_overlapping_template[{''.join(map(str, t))}]"
            assert results[name].p_value == pytest.approx(want, rel=1e-10)

    def test_non_overlapping_short_skipped(self):
        out = rnd.non_overlapping_template_test(np.ones(999, dtype=np.uint8))
        assert len(out) == 1 and out[0].skipped

    def test_overlapping_matches_window_scan(self):
        b = rnd.reference_bits(12000, seed=6)
        counts = np.zeros(6)
        for j in range(12000 // 1032):
            chunk = b[j * 1032:(j + 1) * 1032]
            hits = sum(1 for i in range(1032 - 8)
                       if chunk[i:i + 9].all())
            counts[min(hits, 5)] += 1
        n_blocks = 12000 // 1032
        expected = n_blocks * np.asarray(rnd._OVERLAPPING_PI)
        chi2 = float(((counts - expected) ** 2 / expected).sum())
        want = float(special.gammaincc(2.5, chi2 / 2.0))
        assert rnd.overlapping_template_test(b).p_value == pytest.approx(
            want, rel=1e-10)

    def test_overlapping_pi_is_a_distribution(self):
        assert sum(rnd._OVERLAPPING_PI) == pytest.approx(1.0, abs=2e-6)

    def test_overlapping_short_skipped(self):
        assert rnd.overlapping_template_test(np.ones(9999, dtype=np.uint8)).skipped


def dict_phi(b, m):
    if m == 0:
        return 0.0
    ext = np.concatenate([b, b[:m - 1]]) if m > 1 else b
    counts = defaultdict(int)
    for i in range(b.size):
        counts[tuple(ext[i:i + m])] += 1
    n = b.size
    return sum(c / n * np.log(c / n) for c in counts.values())


def dict_psi_sq(b, m):
    if m == 0:
        return 0.0
    ext = np.concatenate([b, b[:m - 1]]) if m > 1 else b
    counts = defaultdict(int)
    for i in range(b.size):
        counts[tuple(ext[i:i + m])] += 1
    n = b.size
    return sum(c * c for c in counts.values()) * 2.0 ** m / n - n


class TestEntropyAndSerial:
    def test_approximate_entropy_matches_dict_counts(self):
        b = rnd.reference_bits(2000, seed=6)
        ap_en = dict_phi(b, 2) - dict_phi(b, 3)
        chi2 = 2.0 * 2000 * (np.log(2.0) - ap_en)
        want = float(special.gammaincc(2.0, chi2 / 2.0))
        assert rnd.approximate_entropy_test(b).p_value == pytest.approx(
            want, rel=1e-10)

    def test_alternating_has_no_entropy(self):
        r = rnd.approximate_entropy_test(np.tile([1, 0], 500).astype(np.uint8))
        assert not r.passed and r.p_value < 1e-10

    def test_serial_matches_dict_counts(self):
        b = rnd.reference_bits(2000, seed=7)
        psi8 = dict_psi_sq(b, 8)
        psi7 = dict_psi_sq(b, 7)
        psi6 = dict_psi_sq(b, 6)
        want1 = float(special.gammaincc(64.0, (psi8 - psi7) / 2.0))
        want2 = float(special.gammaincc(32.0, (psi8 - 2 * psi7 + psi6) / 2.0))
        r1, r2 = rnd.serial_test(b)
        assert r1.p_value == pytest.approx(want1, rel=1e-10)
        assert r2.p_value == pytest.approx(want2, rel=1e-10)

    def test_alternating_fails_serial(self):
        r1, r2 = rnd.serial_test(np.tile([1, 0], 500).astype(np.uint8))
        assert not r1.passed and not r2.passed

    def test_skips(self):
        assert rnd.approximate_entropy_test(np.ones(99, dtype=np.uint8)).skipped
        r1, r2 = rnd.serial_test(np.ones(99, dtype=np.uint8))
        assert r1.skipped and r2.skipped


def list_berlekamp_massey(block):
    """Classic coefficient-list formulation, for cross-checking."""
    s = [int(x) for x in block]
    n = len(s)
    c = [1] + [0] * n
    b = [1] + [0] * n
    l, m = 0, -1
    for i in range(n):
        d = s[i]
        for j in range(1, l + 1):
            d ^= c[j] & s[i - j]
        if d:
            t = c[:]
            shift = i - m
            for j in range(n + 1 - shift):
                c[j + shift] ^= b[j]
            if 2 * l <= i:
                l = i + 1 - l
                m = i
                b = t
    return l


class TestLinearComplexity:
    def test_known_complexities(self):
        assert rnd._berlekamp_massey(
            np.array([1, 1, 0, 1, 0, 1, 1, 1, 1, 0, 0, 0, 1], np.uint8)) == 4
        assert rnd._berlekamp_massey(np.array([0, 0, 0, 0, 1], np.uint8)) == 5
        assert rnd._berlekamp_massey(np.ones(6, dtype=np.uint8)) == 1
        assert rnd._berlekamp_massey(np.tile([1, 0], 4).astype(np.uint8)) == 2
        assert rnd._berlekamp_massey(np.zeros(10, dtype=np.uint8)) == 0

    def test_matches_list_reference(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(1, 81))
            block = rng.integers(0, 2, n).astype(np.uint8)
            assert rnd._berlekamp_massey(block) == list_berlekamp_massey(block)

    def test_reference_passes(self):
        r = rnd.linear_complexity_test(rnd.reference_bits(10_000, seed=8))
        assert r.passed and not r.skipped

    def test_periodic_fails(self):
        per = np.tile([1, 0, 1], 4000)[:10_000].astype(np.uint8)
        r = rnd.linear_complexity_test(per)
        assert not r.passed and r.p_value == 0.0

    def test_too_few_blocks_skipped(self):
        assert rnd.linear_complexity_test(np.ones(9999, dtype=np.uint8)).skipped


class TestBattery:
    def test_run_single_row_structure(self):
        rows = rnd.run_single(rnd.reference_bits(50_000, seed=1))
        assert list(rows) == ROW_NAMES
        assert len(rows["non_overlapping_template"]) == 148
        assert all(len(v) == 1 for k, v in rows.items()
                   if k != "non_overlapping_template")
        assert not any(r.skipped for v in rows.values() for r in v)

    def test_run_single_short_input_all_skipped(self):
        rows = rnd.run_single(rnd.reference_bits(50, seed=1))
        assert list(rows) == ROW_NAMES
        assert all(r.skipped for v in rows.values() for r in v)

    def test_proportion_aggregation(self):
        good = [rnd.reference_bits(2000, seed=200 + i) for i in range(8)]
        biased = [(np.random.default_rng(s).random(2000) < 0.7).astype(np.uint8)
                  for s in (1, 2)]
        rep = rnd.run_battery(good + biased)
        row = rep.row("frequency")
        assert row.proportion == pytest.approx(0.8)
        assert not row.passed and not rep.all_passed
        assert row.threshold == pytest.approx(0.8956072, abs=1e-7)
        # one failure out of ten still clears the threshold
        rep1 = rnd.run_battery(good + [rnd.reference_bits(2000, seed=208),
                                       biased[0]])
        assert rep1.row("frequency").proportion == pytest.approx(0.9)
        assert rep1.row("frequency").passed

    def test_skipped_sequences_fail_the_row(self):
        seqs = [rnd.reference_bits(2000, seed=210 + i) for i in range(9)]
        seqs.append(rnd.reference_bits(99, seed=219))
        rep = rnd.run_battery(seqs)
        row = rep.row("frequency")
        assert row.skipped_count == 1 and not row.passed
        assert row.detail == "1 sequence(s) skipped"
        # whole-row skip: 2000-bit sequences can't form 38 rank matrices
        rank_row = rep.row("rank")
        assert rank_row.skipped_count == 10 and not rank_row.passed
        assert rank_row.detail == "skipped for all sequences"

    def test_template_row_takes_worst_template(self):
        seqs = [rnd.reference_bits(4000, seed=300 + i) for i in range(10)]
        rep = rnd.run_battery(seqs)
        row = rep.row("non_overlapping_template")
        per_template = defaultdict(list)
        for s in seqs:
            for r in rnd.run_single(s)["non_overlapping_template"]:
                per_template[r.name].append(r.passed)
        worst = min(np.mean(v) for v in per_template.values())
        assert row.proportion == pytest.approx(worst)
        assert row.detail.startswith("worst template non_overlapping_template[")

    def test_battery_needs_input(self):
        with pytest.raises(ValueError, match="at least one"):
            rnd.run_battery([])

    def test_row_lookup(self):
        rep = rnd.run_battery([rnd.reference_bits(2000, seed=220)])
        assert rep.row("frequency").name == "frequency"
        with pytest.raises(KeyError):
            rep.row("nonexistent")


@pytest.fixture(scope="module")
def p_samples():
    per_row = defaultdict(list)
    for i in range(150):
        rows = rnd.run_single(rnd.reference_bits(50_000, seed=5000 + i))
        for results in rows.values():
            for r in results:
                assert not r.skipped
                per_row[r.name].append(r.p_value)
    return per_row


class TestPValueUniformity:
    """Under the null every test's p-values must be uniform; this catches
    systematic bias in any statistic or its asymptotic distribution."""

    @pytest.mark.parametrize("name", [n for n in ROW_NAMES
                                      if n != "non_overlapping_template"])
    def test_p_values_uniform(self, p_samples, name):
        assert stats.kstest(p_samples[name], "uniform").pvalue >= 0.001

    @pytest.mark.parametrize("pattern", ["000000001", "010011011", "111111110"])
    def test_template_p_values_uniform(self, p_samples, pattern):
        # tested per template: pooling all 148 makes the KS oversensitive
        # to the mild discreteness of the 8-block count statistic
        name = f"non_overlapping_template[{pattern}]"
        assert stats.kstest(p_samples[name], "uniform").pvalue >= 0.001
