"""Distribution factories: exact moments, sampling, isotropy, order statistics."""

import math

import numpy as np
import pytest

from centroidkit import distributions as dists

FAMILIES = {
    "gaussian": dists.gaussian,
    "exponential": dists.exponential,
    "rademacher": dists.rademacher,
    "cube": dists.cube,
    "sphere": dists.sphere,
    "sparse": dists.sparse,
}


@pytest.mark.parametrize("name", sorted(FAMILIES))
@pytest.mark.parametrize("dim", [2, 5])
def test_covariance_matches_family(name, dim):
    cov = dists.covariance(FAMILIES[name](dim))
    # the sphere factory keeps the classical radius-1 normalization
    scale = 1.0 / dim if name == "sphere" else 1.0
    assert np.allclose(cov, scale * np.eye(dim), atol=1e-12)


def test_mixed_even_moment_hand_values():
    # alpha holds half-degrees: the call returns E prod x_i^(2 alpha_i)
    assert dists.mixed_even_moment(dists.gaussian(1), (2,)) == pytest.approx(3.0)
    assert dists.mixed_even_moment(dists.gaussian(2), (1, 1)) == pytest.approx(1.0)
    # unit-variance two-sided exponential: E X^4 = 24 b^4 with b = 1/sqrt(2)
    assert dists.mixed_even_moment(dists.exponential(1), (2,)) == pytest.approx(6.0)
    assert dists.mixed_even_moment(dists.rademacher(3), (1, 1, 0)) == pytest.approx(1.0)
    assert dists.mixed_even_moment(dists.rademacher(3), (2, 0, 0)) == pytest.approx(1.0)
    # uniform on [-sqrt(3), sqrt(3)]: E X^4 = 9/5
    assert dists.mixed_even_moment(dists.cube(1), (2,)) == pytest.approx(9 / 5)
    # radius-1 sphere: E x1^4 = 3 / (n (n+2))
    assert dists.mixed_even_moment(dists.sphere(3), (2, 0, 0)) == pytest.approx(0.2)
    # sparse: one coordinate carries +-sqrt(n), so E x1^4 = n^2 / n
    assert dists.mixed_even_moment(dists.sparse(4), (2, 0, 0, 0)) == pytest.approx(4.0)


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_sample_matches_exact_moments(name):
    spec = FAMILIES[name](3)
    cache = dists.sample(spec, 400_000, 31)
    x = cache.data.astype(np.float64)
    # even mixed moments up to total degree 6 against the closed forms
    alphas = [(1, 0, 0), (0, 1, 0), (2, 0, 0), (1, 1, 0), (1, 0, 2)]
    for alpha in alphas:
        mono = np.prod(x ** (2 * np.asarray(alpha)), axis=1)
        want = dists.mixed_even_moment(spec, alpha)
        se = mono.std() / math.sqrt(len(mono))
        assert abs(mono.mean() - want) <= 4 * se + 1e-9, (alpha, mono.mean(), want)
    # odd moments vanish by symmetry
    for alpha in [(1, 0, 0), (1, 1, 1), (3, 0, 0)]:
        mono = np.prod(x ** np.asarray(alpha), axis=1)
        se = mono.std() / math.sqrt(len(mono))
        assert abs(mono.mean()) <= 4 * se + 1e-9


def test_marginal_abs_moment_values():
    assert dists.marginal_abs_moment(dists.gaussian(2), 2.0) == pytest.approx(1.0)
    assert dists.marginal_abs_moment(dists.gaussian(2), 1.0) == pytest.approx(math.sqrt(2 / math.pi))
    assert dists.marginal_abs_moment(dists.exponential(2), 1.0) == pytest.approx(1 / math.sqrt(2))
    assert dists.marginal_abs_moment(dists.rademacher(2), 7.3) == pytest.approx(1.0)
    # cross-check a fractional order against a big sample
    spec = dists.exponential(1)
    x = np.abs(dists.sample(spec, 400_000, 5).data[:, 0])
    want = dists.marginal_abs_moment(spec, 2.5)
    got = float(np.mean(x**2.5))
    se = float(np.std(x**2.5)) / math.sqrt(len(x))
    assert abs(got - want) <= 4 * se


def test_sampling_determinism_and_prefix():
    spec = dists.exponential(3)
    a = dists.sample(spec, 70_000, 5).data
    b = dists.sample(spec, 70_000, 5).data
    assert np.array_equal(a, b)
    # block layout: a shorter draw is a prefix of a longer one at equal seed
    c = dists.sample(spec, 200_000, 5).data
    assert np.array_equal(a, c[:70_000])
    d = dists.sample(spec, 70_000, 6).data
    assert not np.array_equal(a, d)


def test_isotropize_whitens():
    base = dists.gaussian(2)
    skew = dists.linear_image(np.array([[2.0, 0.3], [0.0, 1.0]]), base)
    iso = dists.isotropize(skew)
    cov = dists.covariance(iso)
    assert np.allclose(cov, np.eye(2), atol=1e-8)


def test_isotropize_rejects_rank_deficient():
    base = dists.gaussian(2)
    squash = dists.linear_image(np.array([[1.0, 0.0], [1.0, 0.0]]), base)
    with pytest.raises(ValueError):
        dists.isotropize(squash)


def test_exact_unavailable_for_linear_images():
    li = dists.linear_image(np.array([[1.0, 0.3], [0.0, 1.0]]), dists.exponential(2))
    with pytest.raises(dists.ExactUnavailable):
        dists.mixed_even_moment(li, (2, 0))


def test_order_statistic_rademacher_exact():
    est = dists.order_statistic_mean(dists.rademacher(5), 3, 50_000, 0)
    assert est.value == 1.0
    assert est.ci_low == est.ci_high == 1.0


def test_order_statistic_exponential_matches_harmonic_sum():
    # rank-r largest of n iid Exp(rate sqrt(2)) magnitudes has mean
    # (1/sqrt(2)) * sum_{j=r..n} 1/j
    want = sum(1.0 / j for j in range(8, 17)) / math.sqrt(2)
    est = dists.order_statistic_mean(dists.exponential(16), 8, 400_000, 99)
    half = (est.ci_high - est.ci_low) / 2
    assert abs(est.value - want) <= 4 * max(half, 1e-4)


def test_config_roundtrip():
    for name in sorted(FAMILIES):
        spec = FAMILIES[name](4)
        cfg = {"family": name, "dim": 4}
        again = dists.spec_from_config(cfg)
        assert again.family == spec.family
        assert again.dim == 4


def test_sample_cache_dtype_and_shape():
    cache = dists.sample(dists.gaussian(6), 1234, 8)
    assert cache.data.shape == (1234, 6)
    assert cache.count == 1234
