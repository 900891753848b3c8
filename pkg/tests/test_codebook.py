import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from hashbeam import codebook as cbm
from hashbeam.arraychan import ArrayConfig, Multipath, OnGridLoS
from hashbeam.codebook import (CodebookFamily, CodebookFormatError, CodebookValidationError,
                               HashCodebook, Provenance, gen_existing_random, gen_hierarchical,
                               gen_proposed_random, gen_sweeping, load, save, search_fixed, stats)
from hashbeam.trainer import campaign_hits, run_campaign

import oracles

PROPOSED_CONFIGS = [(8, 4, 2), (16, 8, 4), (128, 64, 8), (6, 6, 2), (12, 9, 4), (8, 8, 8), (4, 8, 1)]


def assert_proposed_structure(cb):
    n, m, l = cb.cols, cb.rows, cb.l_per_row
    c = cb.bits.astype(int)
    assert np.all(c.sum(axis=1) == l)
    assert np.all(c.sum(axis=0) == m * l // n)
    groups = c.reshape(m // (n // l), n // l, n).sum(axis=1)
    assert np.all(groups == 1)


# --- existing random -------------------------------------------------------

def test_existing_full_rows():
    cb = gen_existing_random(4, 3, 4, seed=11)
    assert np.array_equal(cb.bits, np.ones((3, 4)))


def test_existing_deterministic():
    a = gen_existing_random(8, 4, 2, seed=42)
    b = gen_existing_random(8, 4, 2, seed=42)
    assert a == b and np.array_equal(a.bits, b.bits)


def test_existing_rejects_l_above_n():
    with pytest.raises(ValueError):
        gen_existing_random(4, 2, 5, seed=0)


def test_existing_column_count_mean():
    g1 = []
    for s in range(10_000):
        cb = gen_existing_random(128, 64, 8, seed=s)
        assert np.all(cb.bits.sum(axis=1) == 8)
        g1.append(cb.bits[:, 0].sum())
    mean, se = oracles.mean_and_se(g1)
    assert abs(mean - 4.0) < 3 * se


def test_existing_column_count_binomial():
    n, m, l, seeds = 8, 6, 2, 10_000
    counts = np.array([gen_existing_random(n, m, l, seed=s).bits[:, 3].sum() for s in range(seeds)])
    for g in range(m + 1):
        emp = np.mean(counts == g)
        ref = oracles.binomial_pmf_direct(g, m, l / n)
        se = math.sqrt(ref * (1 - ref) / seeds)
        assert abs(emp - ref) <= 3 * se + 1e-12, g


# --- proposed random -------------------------------------------------------

def test_proposed_small_partition():
    cb = gen_proposed_random(4, 2, 2, seed=3)
    assert np.all(cb.bits.sum(axis=0) == 1)
    assert np.all(cb.bits.sum(axis=1) == 2)


@pytest.mark.parametrize("seed", range(20))
def test_proposed_column_sums(seed):
    cb = gen_proposed_random(128, 64, 8, seed=seed)
    assert np.all(cb.bits.sum(axis=0) == 4)


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(PROPOSED_CONFIGS), st.integers(min_value=0, max_value=2**63 - 1))
def test_proposed_invariants(cfg, seed):
    assert_proposed_structure(gen_proposed_random(*cfg, seed=seed))


@pytest.mark.parametrize("n, m, l, word", [(8, 4, 3, "N mod L"), (8, 3, 2, "M mod (N/L)")])
def test_proposed_divisibility_errors(n, m, l, word):
    with pytest.raises(ValueError, match=word.replace("(", r"\(").replace(")", r"\)")):
        gen_proposed_random(n, m, l, seed=0)


def test_proposed_overlap_binomial():
    # K_{a,b} for a fixed pair over seeds: Binomial(G, (L-1)/(N-1)) = Binomial(2, 1/5)
    n, m, l, seeds = 6, 6, 2, 20_000
    k = np.array([stats(gen_proposed_random(n, m, l, seed=s)).pair_overlap(1, 4) for s in range(seeds)])
    for v in range(3):
        ref = oracles.binomial_pmf_direct(v, 2, 1 / 5)
        se = math.sqrt(ref * (1 - ref) / seeds)
        assert abs(np.mean(k == v) - ref) <= 3 * se


def test_proposed_follows_pool_exhaustion():
    # with N/L = 2 rows per group, the second row of a group is the complement of the first
    cb = gen_proposed_random(8, 6, 4, seed=9)
    for g in range(3):
        assert np.array_equal(cb.bits[2 * g] + cb.bits[2 * g + 1], np.ones(8))


# --- special cases -----------------------------------------------------------

def test_sweeping_identity():
    assert np.array_equal(gen_sweeping(4).bits, np.eye(4))
    assert np.array_equal(gen_sweeping(1).bits, [[1]])
    cb = gen_sweeping(9)
    assert np.all(cb.bits.sum(axis=0) == 1) and np.all(cb.bits.sum(axis=1) == 1)
    assert cb.l_per_row == 1 and cb.provenance is Provenance.SWEEPING


def test_hierarchical_n4():
    cb = gen_hierarchical(4)
    rows = [set(np.flatnonzero(r) + 1) for r in cb.bits]
    assert rows == [{1, 3}, {2, 4}, {1, 2}, {3, 4}] or rows == [{1, 3}, {2, 4}, {1, 2}, {3, 4}]


def test_hierarchical_n4_bit_partition_by_hand():
    # (n-1) bit 0 clear -> {1,3}, set -> {2,4}; bit 1 clear -> {1,2}, set -> {3,4}
    expected = np.array([[1, 0, 1, 0], [0, 1, 0, 1], [1, 1, 0, 0], [0, 0, 1, 1]])
    assert np.array_equal(gen_hierarchical(4).bits, expected)


def test_hierarchical_n2():
    cb = gen_hierarchical(2)
    assert np.array_equal(cb.bits, [[1, 0], [0, 1]]) and cb.l_per_row == 1


@pytest.mark.parametrize("n", [2, 4, 8, 64, 256])
def test_hierarchical_column_sums(n):
    cb = gen_hierarchical(n)
    assert cb.rows == 2 * int(math.log2(n)) and cb.l_per_row == n // 2
    assert np.all(cb.bits.sum(axis=0) == math.log2(n))


@pytest.mark.parametrize("n", [1, 3, 6, 12])
def test_hierarchical_needs_power_of_two(n):
    with pytest.raises(ValueError):
        gen_hierarchical(n)


# --- validation ----------------------------------------------------------------

def test_validation_row_sum():
    bits = np.array([[1, 1, 0, 0], [1, 0, 0, 0]])
    with pytest.raises(CodebookValidationError, match="row 2"):
        HashCodebook(bits, 2, Provenance.EXISTING_RANDOM)


def test_validation_proposed_group():
    bits = np.array([[1, 1, 0, 0], [1, 0, 1, 0]])
    with pytest.raises(CodebookValidationError, match="group"):
        HashCodebook(bits, 2, Provenance.PROPOSED_RANDOM)


def test_validation_sweeping_identity():
    with pytest.raises(CodebookValidationError):
        HashCodebook(np.array([[0, 1], [1, 0]]), 1, Provenance.SWEEPING)


# --- stats ---------------------------------------------------------------------

def test_stats_sweeping():
    s = stats(gen_sweeping(4))
    assert list(s.column_counts) == [1, 1, 1, 1]
    assert all(s.pair_overlap(a, b) == 0 for a in range(1, 5) for b in range(1, 5) if a != b)


def test_stats_small_proposed():
    s = stats(gen_proposed_random(4, 2, 2, seed=1))
    assert list(s.column_counts) == [1, 1, 1, 1]
    assert set(np.unique(s.overlap)) <= {0, 1}


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=2, max_value=20), st.integers(min_value=1, max_value=12),
       st.data())
def test_stats_invariants(n, m, data):
    l = data.draw(st.integers(min_value=1, max_value=n))
    cb = gen_existing_random(n, m, l, seed=data.draw(st.integers(0, 2**32)))
    s = stats(cb)
    g = s.column_counts
    assert g.sum() == m * l
    assert np.array_equal(np.diag(s.overlap), g)
    assert np.all(s.overlap >= 0)
    assert np.all(s.overlap <= np.minimum.outer(g, g))


# --- persistence -----------------------------------------------------------------

def test_roundtrip(tmp_path):
    cb = gen_proposed_random(128, 64, 8, seed=77)
    save(cb, tmp_path / "cb.hcb")
    assert load(tmp_path / "cb.hcb") == cb


@pytest.mark.parametrize("cb", [gen_sweeping(5), gen_hierarchical(8), gen_existing_random(7, 3, 2, seed=None)])
def test_roundtrip_special(cb):
    back = cbm.loads(cbm.dumps(cb))
    assert back == cb


def test_load_bad_row_sum(tmp_path):
    text = cbm.dumps(gen_existing_random(6, 3, 2, seed=1)).splitlines()
    row = list(text[7])
    row[row.index("1")] = "0"
    text[7] = "".join(row)
    with pytest.raises(CodebookValidationError, match="row 2"):
        cbm.loads("\n".join(text))


def test_load_truncated():
    text = cbm.dumps(gen_proposed_random(8, 8, 2, seed=1))
    with pytest.raises(CodebookFormatError, match="truncated"):
        cbm.loads("\n".join(text.splitlines()[:10]))
    with pytest.raises(CodebookFormatError, match="line 4"):
        cbm.loads("\n".join(text.splitlines()[:3]))


def test_load_bad_characters():
    lines = cbm.dumps(gen_sweeping(3)).splitlines()
    lines[6] = "1x0"
    with pytest.raises(CodebookFormatError, match="line 7"):
        cbm.loads("\n".join(lines))


def test_load_bad_header():
    with pytest.raises(CodebookFormatError, match="line 1"):
        cbm.loads("N 4\n")
    lines = cbm.dumps(gen_sweeping(3)).splitlines()
    lines[2] = "M three"
    with pytest.raises(CodebookFormatError):
        cbm.loads("\n".join(lines))


# --- random families -------------------------------------------------------------

@pytest.mark.parametrize("n, m, l", PROPOSED_CONFIGS)
def test_family_proposed_structure(n, m, l):
    fam = CodebookFamily(Provenance.PROPOSED_RANDOM, n, m, l)
    bits = cbm.rows_to_bits(fam.sample_rows(np.random.default_rng(0), 200), n)
    for c in bits:
        assert_proposed_structure(HashCodebook(c, l, Provenance.PROPOSED_RANDOM))


@pytest.mark.parametrize("l", [1, 2, 5, 9, 16])
def test_family_existing_rows_are_subsets(l):
    fam = CodebookFamily(Provenance.EXISTING_RANDOM, 16, 6, l)
    rows = fam.sample_rows(np.random.default_rng(1), 300)
    bits = cbm.rows_to_bits(rows, 16)
    assert np.all(bits.sum(axis=-1) == l)


@pytest.mark.parametrize("l", [2, 7])
def test_family_existing_uniform(l):
    # chi-square on single-column inclusion counts against Binomial(M, L/N)
    n, m, t = 16, 5, 40_000
    fam = CodebookFamily(Provenance.EXISTING_RANDOM, n, m, l)
    g = cbm.rows_to_bits(fam.sample_rows(np.random.default_rng(2), t), n).sum(axis=1)  # (t, n)
    col = g[:, 5]
    obs = np.bincount(col, minlength=m + 1)
    exp = t * sps.binom.pmf(np.arange(m + 1), m, l / n)
    keep = exp > 5
    chi2 = np.sum((obs[keep] - exp[keep]) ** 2 / exp[keep])
    assert sps.chi2.sf(chi2, keep.sum() - 1) > 1e-3


def test_family_rejects_special_kinds():
    with pytest.raises(ValueError):
        CodebookFamily(Provenance.SWEEPING, 4, 4, 1)


# --- offline search ----------------------------------------------------------------

def test_search_single_candidate_matches_campaign():
    sampler = Multipath(ArrayConfig(16))
    cb, acc = search_fixed(16, 8, 4, 1, sampler, 1e-3, 3000, seed=5)
    ref = gen_proposed_random(16, 8, 4, cbm.candidate_seed(5, 0))
    assert np.array_equal(cb.bits, ref.bits)
    assert cb.provenance is Provenance.FIXED
    assert acc == run_campaign(ref, sampler, 1e-3, 3000, 5)


def test_search_returns_best_candidate():
    sampler = Multipath(ArrayConfig(8))
    sigma2, trials, seed = 1e-2, 10_000, 21
    cb, acc = search_fixed(8, 4, 2, 5, sampler, sigma2, trials, seed)
    accs = [run_campaign(gen_proposed_random(8, 4, 2, cbm.candidate_seed(seed, i)), sampler,
                         sigma2, trials, seed) for i in range(5)]
    assert acc == max(accs)
    assert np.array_equal(cb.bits, gen_proposed_random(8, 4, 2, cbm.candidate_seed(seed, accs.index(acc))).bits)


def test_search_deterministic_and_parallel_safe():
    sampler = OnGridLoS(ArrayConfig(16))
    a = search_fixed(16, 8, 2, 4, sampler, 0.01, 2000, seed=3)
    b = search_fixed(16, 8, 2, 4, sampler, 0.01, 2000, seed=3, workers=3)
    assert a[0] == b[0] and a[1] == b[1]


def test_search_rejects_zero_candidates():
    with pytest.raises(ValueError):
        search_fixed(8, 4, 2, 0, OnGridLoS(ArrayConfig(8)), 0.1, 10, seed=0)


def test_benchmark_matches_campaign_hits():
    from hashbeam.trainer import Benchmark
    sampler = Multipath(ArrayConfig(32))
    cb = gen_proposed_random(32, 16, 4, seed=2)
    bench = Benchmark(sampler, 16, 0.002, 2500, (9, 1))
    assert bench.successes(cb) == campaign_hits(cb, sampler, 0.002, 2500, (9, 1))
