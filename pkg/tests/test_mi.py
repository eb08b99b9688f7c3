import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import digamma_series, reference_profile
from spkldd.generator import Corpus
from spkldd.mi import (
    EULER_GAMMA,
    LddProfile,
    _HarmonicDigamma,
    decay_onset,
    digamma_int,
    entropy_grassberger,
    entropy_plugin,
    joint_counts,
    ldd_profile,
    mi_at_distance,
)

# frozen from mpmath at 30 digits: log(10) - digamma(10), log(10) - digamma(5)
H_GB_A10 = 0.0508325039273245763705352907984
H_GB_A5B5 = 0.796467424562245211291170211433


def test_frozen_values_match_mpmath():
    mpmath.mp.dps = 30
    assert abs(float(mpmath.log(10) - mpmath.digamma(10)) - H_GB_A10) < 1e-15
    assert abs(float(mpmath.log(10) - mpmath.digamma(5)) - H_GB_A5B5) < 1e-15


@pytest.mark.parametrize("n", [1, 2, 3, 7, 10, 99, 1000, 65536, 999_999, 1_000_000])
def test_digamma_table_against_series(n):
    assert digamma_int.scalar(n) == pytest.approx(digamma_series(n), rel=1e-14, abs=1e-14)


@pytest.mark.parametrize("n", [1_000_001, 1_004_096, 1_004_097, 5_000_000, 12_345_678, 40_000_001])
def test_digamma_beyond_dense_table(n):
    assert digamma_int.scalar(n) == pytest.approx(digamma_series(n), rel=1e-14)


def test_digamma_small_table_extension_matches_dense():
    small = _HarmonicDigamma(dense_limit=1000, block=64)
    for n in (1000, 1001, 1063, 1064, 1065, 5000, 77_777):
        assert small.scalar(n) == pytest.approx(digamma_int.scalar(n), rel=1e-15)
    vec = small(np.array([[1, 2000], [1000, 3]]))
    assert vec.shape == (2, 2)
    assert vec[0, 1] == small.scalar(2000)


def test_digamma_rejects_nonpositive():
    with pytest.raises(ValueError):
        digamma_int(np.array([0, 3]))
    with pytest.raises(ValueError):
        digamma_int.scalar(0)


def test_grassberger_unit_values():
    assert entropy_grassberger({"a": 10}) == pytest.approx(H_GB_A10, abs=1e-12)
    assert entropy_grassberger({"a": 5, "b": 5}) == pytest.approx(H_GB_A5B5, abs=1e-12)
    assert abs(entropy_grassberger({"a": 1}) - EULER_GAMMA) < 1e-12
    assert entropy_grassberger({"a": 5, "b": 5}) > math.log(2)


def test_plugin_unit_values():
    assert abs(entropy_plugin({"a": 5, "b": 5}) - math.log(2)) < 1e-12
    assert entropy_plugin({"a": 10}) == 0.0
    assert entropy_plugin([1, 1, 2]) == pytest.approx(-(2 * 0.25 * math.log(0.25) + 0.5 * math.log(0.5)), abs=1e-15)
    assert entropy_plugin([1, 1, 2]) == pytest.approx(1.039721, abs=1e-6)


def test_entropy_input_forms_and_errors():
    assert entropy_plugin(np.array([[3, 0], [1, 0]])) == entropy_plugin([3, 1])
    for bad in ([], [0, 0], {}):
        with pytest.raises(ValueError):
            entropy_grassberger(bad)
    with pytest.raises(ValueError):
        entropy_plugin([-1, 2])


@settings(max_examples=200)
@given(st.lists(st.integers(1, 5000), min_size=1, max_size=12))
def test_grassberger_against_scipy_digamma(counts):
    from oracles import entropy_grassberger_ref

    assert entropy_grassberger(counts) == pytest.approx(entropy_grassberger_ref(counts), abs=1e-12)


@settings(max_examples=200)
@given(st.lists(st.integers(1, 10_000), min_size=1, max_size=10))
def test_estimators_converge(counts):
    K, N = len(counts), sum(counts)
    if N < 100 * K:
        return
    assert abs(entropy_grassberger(counts) - entropy_plugin(counts)) <= K / N


def test_mi_alternating_corpus():
    corpus = np.array([0, 1] * 500)
    assert mi_at_distance(corpus, 2, "plugin") == pytest.approx(1.0, abs=1e-12)
    # 999 pairs split 500/499; Y is a function of X so MI = H(X)
    p = 500 / 999
    assert mi_at_distance(corpus, 1, "plugin") == pytest.approx(-(p * math.log2(p) + (1 - p) * math.log2(1 - p)), abs=1e-12)


def test_mi_two_symbol_corpus():
    corpus = np.array([0, 1])
    assert mi_at_distance(corpus, 1, "plugin") == 0.0
    assert math.isfinite(mi_at_distance(corpus, 1, "grassberger"))


def test_mi_errors():
    with pytest.raises(ValueError):
        mi_at_distance(np.array([0]), 1)
    with pytest.raises(ValueError):
        mi_at_distance(np.array([0, 1, 0]), 3)
    with pytest.raises(ValueError):
        mi_at_distance(np.array([0, 1, 0]), 0)
    with pytest.raises(ValueError):
        mi_at_distance(np.array([0, 1, 0]), 1, "nsb")
    with pytest.raises(ValueError):
        ldd_profile(np.array([0, 1, 0]), 3)


def test_mi_iid_is_near_zero():
    rng = np.random.default_rng(7)
    corpus = rng.integers(0, 4, 200_000)
    for D in (1, 10, 100):
        assert abs(mi_at_distance(corpus, D)) < 5e-4


@pytest.fixture(scope="module")
def markov_corpus():
    rng = np.random.default_rng(3)
    # a sticky 3-state chain so MI is clearly positive and decays with D
    ids = [0]
    for _ in range(3000):
        ids.append(ids[-1] if rng.random() < 0.8 else int(rng.integers(0, 3)))
    return np.array(ids, dtype=np.uint8)


def test_joint_counts_conserve_marginals(markov_corpus):
    c = markov_corpus
    for D in (1, 5, 200):
        J = joint_counts(c, D, 3)
        assert J.sum() == c.size - D
        assert np.array_equal(J.sum(axis=1), np.bincount(c[: c.size - D], minlength=3))
        assert np.array_equal(J.sum(axis=0), np.bincount(c[D:], minlength=3))


def test_reversal_symmetry_is_exact(markov_corpus):
    c = markov_corpus
    r = c[::-1].copy()
    for est in ("grassberger", "plugin"):
        for D in (1, 2, 17, 500):
            assert mi_at_distance(c, D, est) == mi_at_distance(r, D, est)


def test_plugin_bounds(markov_corpus):
    c = markov_corpus
    for D in range(1, 60):
        mi = mi_at_distance(c, D, "plugin")
        J = joint_counts(c, D, 3)
        hx = entropy_plugin(J.sum(axis=1)) / math.log(2)
        hy = entropy_plugin(J.sum(axis=0)) / math.log(2)
        assert -1e-12 <= mi <= min(hx, hy) + 1e-12


def test_matches_reference_transliteration(markov_corpus):
    seq = markov_corpus.tolist()
    ref = reference_profile(seq, 40)
    prof = ldd_profile(markov_corpus, 40)
    for D, v in prof:
        assert abs(v - ref[D]) < 1e-12


def test_profile_entries_equal_mi_at_distance(markov_corpus):
    prof = ldd_profile(markov_corpus, 30, "plugin")
    assert prof.distances.tolist() == list(range(1, 31))
    for D, v in prof:
        assert v == mi_at_distance(markov_corpus, D, "plugin")
    single = ldd_profile(markov_corpus, 1)
    assert len(single) == 1 and single.mi_bits[0] == mi_at_distance(markov_corpus, 1)


def test_profile_workers_are_bit_identical(markov_corpus):
    a = ldd_profile(markov_corpus, 80, workers=1)
    b = ldd_profile(markov_corpus, 80, workers=4)
    assert a.mi_bits.tobytes() == b.mi_bits.tobytes()


def test_profile_accepts_corpus_objects():
    corpus = Corpus.from_strings(["abca", "bb"], symbols="abcd")
    prof = ldd_profile(corpus, 3)
    assert prof.mi_bits.tolist() == [mi_at_distance(corpus.ids, D) for D in (1, 2, 3)]


def test_csv_round_trip_and_precision(markov_corpus):
    prof = ldd_profile(markov_corpus, 5)
    text = prof.to_csv()
    lines = text.splitlines()
    assert lines[0] == "D,mi_bits" and len(lines) == 6
    back = LddProfile.from_csv(text)
    assert back.mi_bits.tobytes() == prof.mi_bits.tobytes()
    assert back.max_distance == 5


def test_log_floor_clamps_only_plot_output():
    prof = LddProfile(np.arange(1, 4), np.array([0.5, -1e-7, 1e-9]))
    rows = prof.to_csv(log_floor=1e-6).splitlines()[1:]
    assert [float(r.split(",")[1]) for r in rows] == [0.5, 1e-6, 1e-6]
    assert prof.to_csv().splitlines()[2] == "2,-9.9999999999999995e-08"


def test_decay_onset():
    d = np.arange(1, 41)
    mi = np.where(d <= 20, 1e-2, 1e-6)
    prof = LddProfile(d, mi)
    assert decay_onset(prof, 20) == 20
    with pytest.raises(ValueError):
        decay_onset(LddProfile(np.arange(1, 30), np.ones(29)), 20)
