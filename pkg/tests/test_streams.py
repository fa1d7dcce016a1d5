"""Deterministic stream derivation."""

import numpy as np
import pytest

from phaselab import derive_stream


def test_identical_keys_replay_identically():
    a = derive_stream(1234, 7).uniform(1000)
    b = derive_stream(1234, 7).uniform(1000)
    np.testing.assert_array_equal(a, b)
    c = derive_stream(1234, 7).normal(1000)
    d = derive_stream(1234, 7).normal(1000)
    np.testing.assert_array_equal(c, d)


def test_distinct_stream_indices_differ():
    a = derive_stream(99, 0).uniform(1000)
    b = derive_stream(99, 1).uniform(1000)
    assert np.any(a != b)


def test_distinct_master_seeds_differ():
    a = derive_stream(1, 5).uniform(256)
    b = derive_stream(2, 5).uniform(256)
    assert np.any(a != b)


def test_normal_moments_clt():
    draws = derive_stream(2024, 0).normal(10**6)
    assert abs(draws.mean()) < 5.0 / np.sqrt(10**6)
    assert abs(draws.std() - 1.0) < 5e-3


def test_uniform_bounds():
    draws = derive_stream(7, 3).uniform(10**5)
    assert draws.min() >= 0.0
    assert draws.max() < 1.0


def test_stream_independence_statistics():
    # correlation across 64 distinct streams should be noise-level
    block = np.stack([derive_stream(11, i).uniform(4096) for i in range(64)])
    corr = np.corrcoef(block)
    off_diag = corr[~np.eye(64, dtype=bool)]
    assert np.max(np.abs(off_diag)) < 0.08


def test_negative_seed_rejected():
    with pytest.raises(ValueError):
        derive_stream(-1, 0)
    with pytest.raises(ValueError):
        derive_stream(0, -1)
