import numpy as np

from clockbias.rng import SplitMix64

from oracles import splitmix64_scalar


def test_matches_scalar_reference():
    for seed in (0, 1, 42, 2**64 - 1):
        got = SplitMix64(seed).next_uint64(50)
        assert [int(v) for v in got] == splitmix64_scalar(seed, 50)


def test_published_first_output_for_seed_zero():
    assert int(SplitMix64(0).next_uint64(1)[0]) == 0xE220A8397B1DCDAF


def test_blocks_continue_the_stream():
    a = SplitMix64(9)
    joined = np.concatenate([a.next_uint64(3), a.next_uint64(4)])
    assert np.array_equal(joined, SplitMix64(9).next_uint64(7))


def test_uniform_range_and_normal_moments():
    rng = SplitMix64(5)
    u = rng.uniform(10000)
    assert u.min() >= 0.0 and u.max() < 1.0
    z = SplitMix64(6).normal(20000)
    assert abs(z.mean()) < 0.03
    assert abs(z.std() - 1.0) < 0.03


def test_permutation_is_a_permutation():
    perm = SplitMix64(3).permutation(100)
    assert sorted(perm.tolist()) == list(range(100))
    assert not np.array_equal(perm, np.arange(100))
