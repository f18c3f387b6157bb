"""Moment norms: exact even-order evaluation, MC estimates, surrogates."""

import math

import numpy as np
import pytest

from centroidkit import distributions as dists
from centroidkit import norms
from centroidkit.rng import derived_rng

EXACT_COMBOS = [
    ("gaussian", 2, 2),
    ("gaussian", 3, 4),
    ("gaussian", 4, 6),
    ("exponential", 2, 2),
    ("exponential", 3, 4),
    ("rademacher", 4, 4),
    ("rademacher", 3, 6),
    ("cube", 3, 4),
    ("sphere", 4, 4),
    ("sparse", 4, 4),
]

FACTORY = {
    "gaussian": dists.gaussian,
    "exponential": dists.exponential,
    "rademacher": dists.rademacher,
    "cube": dists.cube,
    "sphere": dists.sphere,
    "sparse": dists.sparse,
}


def _unit(dim, seed):
    g = derived_rng(seed, 900)
    t = g.standard_normal(dim)
    return t / np.linalg.norm(t)


@pytest.mark.parametrize("name,dim,p", EXACT_COMBOS)
def test_exact_even_matches_projection_reference(name, dim, p):
    spec = FACTORY[name](dim)
    t = _unit(dim, dim * 100 + p)
    est = norms.moment_norm_exact_even(spec, t, p)
    ref = norms.projection_even_moment(spec, t, p)
    assert est.value == pytest.approx(ref ** (1 / p), rel=1e-12)


@pytest.mark.parametrize("name,dim,p", EXACT_COMBOS)
def test_exact_even_inside_mc_interval(name, dim, p):
    spec = FACTORY[name](dim)
    t = _unit(dim, dim * 100 + p)
    exact = norms.moment_norm_exact_even(spec, t, p).value
    cache = dists.sample(spec, 100_000, 17)
    mc = norms.moment_norm_mc(cache, t, float(p), resamples=100)
    width = mc.ci_high - mc.ci_low
    assert mc.ci_low - width <= exact <= mc.ci_high + width, (exact, mc)


def test_gradient_euler_identity():
    spec = dists.exponential(4)
    t = np.array([0.9, -0.4, 0.2, 1.3])
    for p in (2, 4, 6):
        grad = norms.moment_norm_gradient(spec, t, p)
        value = norms.moment_norm_exact_even(spec, t, p).value
        assert float(grad @ t) == pytest.approx(value, rel=1e-9)


def test_homogeneity_exact_and_mc():
    spec = dists.gaussian(3)
    t = np.array([1.0, 2.0, -0.5])
    v1 = norms.moment_norm_exact_even(spec, t, 4).value
    v2 = norms.moment_norm_exact_even(spec, 2 * t, 4).value
    assert v2 == pytest.approx(2 * v1, rel=1e-12)
    cache = dists.sample(spec, 20_000, 3)
    m1 = norms.moment_norm_mc(cache, t, 3.0, resamples=50)
    m2 = norms.moment_norm_mc(cache, 2 * t, 3.0, resamples=50)
    assert m2.value == pytest.approx(2 * m1.value, rel=1e-12)


def test_rademacher_exact_hand_values():
    assert norms.rademacher_norm_exact([1.0], 5.0).value == pytest.approx(1.0)
    assert norms.rademacher_norm_exact([1.0, 1.0], 2.0).value == pytest.approx(math.sqrt(2))
    # E (e1+e2)^4 = 8
    assert norms.rademacher_norm_exact([1.0, 1.0], 4.0).value == pytest.approx(8 ** 0.25)


def test_rademacher_exact_agrees_with_even_machinery():
    gen = derived_rng(7, 901)
    for trial in range(5):
        n = int(gen.integers(2, 7))
        w = gen.standard_normal(n)
        p = int(gen.choice([2, 4, 6]))
        brute = norms.rademacher_norm_exact(w, float(p)).value
        spec = dists.rademacher(n)
        closed = norms.moment_norm_exact_even(spec, w, p).value
        assert brute == pytest.approx(closed, rel=1e-10)


def test_surrogate_hand_values_and_sandwich():
    assert norms.rademacher_norm_surrogate([1.0, 0.0], 4.0).value == pytest.approx(1.0)
    assert norms.rademacher_norm_surrogate([1.0, 1.0], 4.0).value == pytest.approx(2.0)
    gen = derived_rng(11, 902)
    for trial in range(40):
        n = int(gen.integers(1, 11))
        w = gen.standard_normal(n)
        p = float(gen.choice([1.0, 1.7, 2.0, 3.0, 4.0, 6.0, 10.0]))
        exact = norms.rademacher_norm_exact(w, p).value
        sur = norms.rademacher_norm_surrogate(w, p).value
        assert sur > 0
        assert 1 / 8 <= exact / sur <= 8, (n, p, exact, sur)


def test_moment_growth_ratio_gaussian_bound():
    spec = dists.gaussian(5)
    cache = dists.sample(spec, 150_000, 23)
    gen = derived_rng(19, 903)
    for trial in range(8):
        t = gen.standard_normal(5)
        q = float(gen.uniform(1.0, 4.0))
        p = q + float(gen.uniform(0.5, 4.0))
        out = norms.moment_growth_ratio(cache, t, p, q, resamples=200)
        assert out["bound_gaussian"] == pytest.approx(math.sqrt(p / q), rel=1e-12)
        assert out["bound_log_concave"] == pytest.approx(p / q, rel=1e-12)
        width = (out["ci_high"] - out["ci_low"]) / max(out["ratio"], 1e-12)
        assert out["ratio"] <= out["bound_gaussian"] * (1 + 4 * width + 1e-3)


def test_bootstrap_ci_degenerate_and_centered():
    gen = derived_rng(3, 904)
    lo, hi = norms.bootstrap_mean_ci(np.full(500, 2.5), 100, gen)
    assert lo == hi == 2.5
    data = gen.standard_normal(20_000) + 1.0
    lo, hi = norms.bootstrap_mean_ci(data, 300, gen)
    assert lo < 1.0 < hi
    assert hi - lo < 0.1


def test_growth_prefactor_known_families():
    assert norms.growth_prefactor(dists.gaussian(3)) == 1.0
    assert norms.growth_prefactor(dists.exponential(3)) == 1.0
    assert norms.growth_prefactor(dists.cube(3)) == 1.0
