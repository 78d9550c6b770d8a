import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from semcodebook.codebook import (
    Codebook,
    FeatureSet,
    IndexSequence,
    UsageStats,
    empirical_entropy,
    is_in_cell,
    mutual_information_estimate,
    nats_to_bits,
    pairwise_sq_distances,
    quantize,
    quantize_batch,
    reconstruct,
    usage_frequencies,
)

import oracles

C01 = Codebook([[0.0], [1.0]])


def test_quantize_strictly_nearer():
    assert quantize([0.2], C01) == 0
    assert quantize([0.9], C01) == 1


def test_quantize_tie_goes_to_smallest_index():
    assert quantize([0.5], C01) == 0


def test_quantize_duplicate_codewords_tie():
    C = Codebook([[1.0, 1.0], [0.0, 0.0], [0.0, 0.0]])
    assert quantize([0.1, -0.1], C) == 1


def test_quantize_matches_exhaustive_scan(rng):
    C = Codebook(rng.normal(size=(16, 8)))
    for z in rng.normal(size=(100, 8)):
        assert quantize(z, C) == oracles.nearest_exhaustive(z, C.codewords)


@pytest.mark.parametrize("bad", [[np.nan], [np.inf], [0.0, 1.0]])
def test_quantize_rejects_bad_input(bad):
    with pytest.raises(ValueError):
        quantize(bad, C01)


def test_feature_set_rejects_empty_and_nonfinite():
    with pytest.raises(ValueError):
        FeatureSet(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        FeatureSet([[1.0, np.nan]])


def test_codebook_needs_two_codewords():
    with pytest.raises(ValueError):
        Codebook([[1.0, 2.0]])


def test_quantize_batch_identity_on_codewords(rng):
    C = Codebook(rng.normal(size=(12, 5)))
    S = quantize_batch(FeatureSet(C.codewords), C)
    assert S.indices.tolist() == list(range(12))


def test_quantize_batch_matches_rowwise(rng):
    C = Codebook(rng.normal(size=(9, 3)))
    Z = FeatureSet(rng.normal(size=(300, 3)))
    assert quantize_batch(Z, C).indices.tolist() == [quantize(z, C) for z in Z.vectors]


def test_quantize_batch_dim_mismatch():
    with pytest.raises(ValueError):
        quantize_batch(FeatureSet(np.zeros((3, 2))), C01)


def test_is_in_cell_basics(rng):
    C = Codebook(rng.normal(size=(6, 4)))
    for k in range(6):
        assert is_in_cell(C.codewords[k], k, C)
    mid = [0.5]
    assert is_in_cell(mid, 0, C01) and is_in_cell(mid, 1, C01)
    for z in rng.normal(size=(50, 4)):
        assert is_in_cell(z, quantize(z, C), C)
    with pytest.raises(ValueError):
        is_in_cell([0.0], 2, C01)


def test_reconstruct(rng):
    C = Codebook(rng.normal(size=(5, 3)))
    out = reconstruct(IndexSequence([3] * 7, 5), C)
    assert np.array_equal(out.vectors, np.tile(C.codewords[3], (7, 1)))
    Zc = FeatureSet(C.codewords)
    assert np.array_equal(reconstruct(quantize_batch(Zc, C), C).vectors, Zc.vectors)
    S = rng.integers(0, 5, size=40)
    rec = reconstruct(IndexSequence(S, 5), C).vectors
    for m, s in enumerate(S):
        assert rec[m].tolist() == C.codewords[s].tolist()


def test_index_sequence_range_checked():
    with pytest.raises(ValueError):
        IndexSequence([0, 4], 4)
    with pytest.raises(ValueError):
        reconstruct(IndexSequence([0, 1], 3), C01)


def test_usage_frequencies():
    st_ = usage_frequencies(IndexSequence([0, 0, 1, 1], 2))
    assert st_.frequencies.tolist() == [0.5, 0.5]
    assert usage_frequencies(IndexSequence([0] * 5, 4)).frequencies.tolist() == [1, 0, 0, 0]


def test_usage_frequencies_match_histogram(rng):
    S = rng.integers(0, 11, size=1000)
    stats = usage_frequencies(IndexSequence(S, 11))
    assert stats.counts.sum() == 1000
    assert np.allclose(stats.frequencies, oracles.histogram(S.tolist(), 11), atol=0, rtol=0)
    assert abs(stats.frequencies.sum() - 1.0) <= 1e-12


@pytest.mark.parametrize("K", [2, 3, 8, 256, 1000])
def test_entropy_uniform_is_ln_k(K):
    h = empirical_entropy(UsageStats.from_frequencies(np.full(K, 1.0 / K)))
    assert abs(h - math.log(K)) <= 1e-12


def test_entropy_one_hot_and_mixed():
    assert empirical_entropy(UsageStats.from_frequencies([1.0, 0.0, 0.0])) == 0.0
    h = empirical_entropy(UsageStats.from_frequencies([0.5, 0.25, 0.25]))
    assert h == pytest.approx(oracles.entropy([0.5, 0.25, 0.25]), abs=1e-15)
    assert h == pytest.approx(1.0397207708399179, abs=1e-12)
    assert nats_to_bits(h) == pytest.approx(1.5, abs=1e-12)


def test_mutual_information(rng):
    C = Codebook(rng.normal(size=(8, 3)))
    assert mutual_information_estimate(FeatureSet(C.codewords), C) == pytest.approx(math.log(8), abs=1e-12)
    assert mutual_information_estimate(FeatureSet(C.codewords[[2] * 10] + 1e-9), C) == 0.0
    Z = FeatureSet(rng.normal(size=(400, 3)))
    expected = oracles.entropy(oracles.histogram(
        [oracles.nearest_exhaustive(z, C.codewords) for z in Z.vectors], 8))
    assert mutual_information_estimate(Z, C) == pytest.approx(expected, abs=1e-12)


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(cw=arrays(np.float64, st.tuples(st.integers(2, 10), st.integers(1, 4)), elements=finite),
       z=st.lists(finite, min_size=4, max_size=4))
def test_partition_property(cw, z):
    C = Codebook(cw)
    zz = np.array(z[:C.dim])
    k = quantize(zz, C)
    assert 0 <= k < C.K
    assert is_in_cell(zz, k, C)
    cells = [j for j in range(C.K) if is_in_cell(zz, j, C)]
    assert k == cells[0]


@settings(max_examples=60, deadline=None)
@given(cw=arrays(np.float64, st.tuples(st.integers(2, 10), st.integers(1, 4)),
                 elements=finite, unique=True))
def test_idempotence_on_distinct_codewords(cw):
    C = Codebook(cw)
    # unique-nearest precondition, in floating point (subnormal gaps underflow to 0)
    gaps = pairwise_sq_distances(C) + np.diag(np.full(C.K, np.inf))
    if gaps.min() > 0:
        assert quantize_batch(FeatureSet(C.codewords), C).indices.tolist() == list(range(C.K))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=64).filter(lambda v: sum(v) > 0))
def test_entropy_bounds(values):
    freq = np.array(values) / sum(values)
    freq = freq / freq.sum()
    h = empirical_entropy(UsageStats(np.zeros(freq.size, dtype=np.int64), freq))
    assert 0.0 <= h <= math.log(freq.size) + 1e-12


def test_determinism(rng):
    C = Codebook(rng.normal(size=(7, 5)))
    Z = FeatureSet(rng.normal(size=(5000, 5)))
    a, b = quantize_batch(Z, C), quantize_batch(Z, C)
    assert a.indices.tobytes() == b.indices.tobytes()
