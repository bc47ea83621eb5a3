"""Dictionary lower bound on the bounded-Lipschitz distance; rank tests."""
import math

import numpy as np
import pytest

from fragimm.metrics import LipDictionary, bl_lower, make_dictionary, two_sample
from fragimm.samples import PointSample


def _samples_from(rng, scale, n):
    out = []
    for _ in range(n):
        k = rng.poisson(3.0)
        out.append(PointSample(tuple(scale * rng.random(k))))
    return out


def test_dictionary_entries_are_admissible():
    d = make_dictionary(K=8, n_random=256, seed=0)
    assert np.all(np.abs(d.coeffs).sum(axis=1) <= 1.0 + 1e-12)
    vals = d.evaluate(_samples_from(np.random.default_rng(0), 1.0, 50))
    assert np.all(vals <= 1.0) and np.all(vals >= -1.0)


def test_dictionary_rejects_inadmissible_entries():
    with pytest.raises(ValueError):
        LipDictionary(np.array([[0.7, 0.7]]), np.array([0.0]), seed=0)


def test_bl_lower_identical_samples_zero():
    g = np.random.default_rng(5)
    s = _samples_from(g, 1.0, 300)
    d, se = bl_lower(s, s, make_dictionary(seed=1))
    assert d == 0.0


def test_bl_lower_point_masses():
    d = make_dictionary(seed=2)
    a = [PointSample((1.0,))] * 100
    b = [PointSample(())] * 100
    lb, se = bl_lower(a, b, d)
    assert lb >= 1.0 - 1e-12
    assert lb <= 2.0


def test_bl_lower_never_exceeds_two():
    g = np.random.default_rng(9)
    d = make_dictionary(seed=3)
    for scale in (0.1, 1.0, 10.0):
        a = _samples_from(g, scale, 200)
        b = _samples_from(g, 3.0 * scale, 200)
        lb, _ = bl_lower(a, b, d)
        assert 0.0 <= lb <= 2.0


def test_bl_lower_symmetry():
    g = np.random.default_rng(11)
    a = _samples_from(g, 1.0, 200)
    b = _samples_from(g, 2.0, 200)
    d = make_dictionary(seed=4)
    assert bl_lower(a, b, d)[0] == bl_lower(b, a, d)[0]


def test_bl_lower_monotone_in_dictionary():
    # a richer dictionary can only increase the lower bound on fixed samples
    g = np.random.default_rng(13)
    a = _samples_from(g, 1.0, 300)
    b = _samples_from(g, 1.5, 300)
    small = make_dictionary(K=8, n_random=32, seed=5)
    big_coeffs = np.vstack([small.coeffs,
                            make_dictionary(K=8, n_random=64, seed=6).coeffs])
    big_off = np.concatenate([small.offsets,
                              make_dictionary(K=8, n_random=64, seed=6).offsets])
    big = LipDictionary(big_coeffs, big_off, seed=7)
    assert bl_lower(a, b, big)[0] >= bl_lower(a, b, small)[0] - 1e-15


def test_bl_lower_triangle_consistency():
    g = np.random.default_rng(17)
    a = _samples_from(g, 1.0, 400)
    b = _samples_from(g, 1.3, 400)
    c = _samples_from(g, 1.6, 400)
    d = make_dictionary(seed=8)
    dab, sab = bl_lower(a, b, d)
    dbc, sbc = bl_lower(b, c, d)
    dac, sac = bl_lower(a, c, d)
    tol = 3.0 * math.sqrt(sab ** 2 + sbc ** 2 + sac ** 2)
    assert dac <= dab + dbc + tol


def test_two_sample_identical_inputs():
    a = [PointSample((1.0, 0.5))] * 100
    rep = two_sample(a, a, "largest_mass")
    assert rep["p_value"] == 1.0


def test_two_sample_power():
    g = np.random.default_rng(19)
    a = _samples_from(g, 1.0, 500)
    b = [PointSample(tuple(2.0 * m for m in s.masses)) for s in a]
    rep = two_sample(a, b, "largest_mass")
    assert rep["p_value"] < 0.01
    rep = two_sample(a, b, "total_above", a=0.0)
    assert rep["p_value"] < 0.01


def test_two_sample_permutation_invariance():
    g = np.random.default_rng(23)
    a = _samples_from(g, 1.0, 120)
    b = _samples_from(g, 1.1, 120)
    p1 = two_sample(a, b, "count_above", a=0.5)["p_value"]
    perm = list(a)
    np.random.default_rng(1).shuffle(perm)
    p2 = two_sample(perm, b, "count_above", a=0.5)["p_value"]
    assert p1 == p2


def test_two_sample_needs_enough_samples():
    a = [PointSample((1.0,))] * 10
    with pytest.raises(ValueError):
        two_sample(a, a, "largest_mass")
