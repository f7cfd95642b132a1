import numpy as np

from emostress.rng import ALGORITHM, Rng, derive_seed

MASK = 0xFFFFFFFFFFFFFFFF


def mix_reference(z: int) -> int:
    z &= MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def splitmix_reference(seed: int, count: int) -> list[int]:
    """Sequential splitmix64: advance by the golden gamma, then finalize."""
    state = seed & MASK
    out = []
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & MASK
        out.append(mix_reference(state))
    return out


def test_matches_sequential_reference():
    for seed in (0, 1, 42, 12345678901234567890, MASK):
        got = Rng(seed).next_uint64(64)
        assert [int(v) for v in got] == splitmix_reference(seed, 64)


def test_block_size_does_not_change_the_stream():
    one = Rng(9).next_uint64(50)
    r = Rng(9)
    parts = np.concatenate([r.next_uint64(7), r.next_uint64(40), r.next_uint64(3)])
    assert np.array_equal(one, parts)


def test_uniform_range_and_determinism():
    a = Rng(3).uniform(5000)
    b = Rng(3).uniform(5000)
    assert np.array_equal(a, b)
    assert a.min() >= 0.0 and a.max() < 1.0
    assert abs(a.mean() - 0.5) < 0.02


def test_normal_moments():
    x = Rng(17).normal(40000)
    assert len(x) == 40000
    assert abs(x.mean()) < 0.03
    assert abs(x.std() - 1.0) < 0.03
    # odd request lengths work (Box-Muller emits pairs internally)
    assert len(Rng(17).normal(7)) == 7


def test_integers_cover_the_range():
    draws = Rng(5).integers(3000, 7)
    assert draws.min() == 0 and draws.max() == 6
    assert set(np.unique(draws)) == set(range(7))


def test_shuffle_is_a_deterministic_permutation():
    items = list(range(100))
    a = list(items)
    Rng(11).shuffle(a)
    b = list(items)
    Rng(11).shuffle(b)
    assert a == b
    assert sorted(a) == items
    c = list(items)
    Rng(12).shuffle(c)
    assert c != a


def test_derive_seed_regression_anchors():
    # frozen values: changing the derivation would silently reshuffle
    # every split and init in existing configs
    assert derive_seed(0, "split") == 12912914139362736367
    assert derive_seed(0, "train") == 7804140424620613037


def test_derive_seed_sensitivity():
    seeds = {derive_seed(0, label) for label in ("split", "init", "train", "synth")}
    assert len(seeds) == 4
    assert derive_seed(1, "split") != derive_seed(0, "split")
    for s in seeds:
        assert 0 <= s <= MASK


def test_algorithm_id_is_pinned():
    assert ALGORITHM == "splitmix64-v1"
    assert Rng(0).algorithm == ALGORITHM
