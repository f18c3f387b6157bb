"""Support-function solver: closed forms, SAA behavior, witnesses, moments."""

import math

import numpy as np
import pytest

from centroidkit import distributions as dists
from centroidkit import dual
from centroidkit.rng import derived_rng

FAST = dual.DualSolveOptions(starts=4, sample_budget=20_000)


def _direction(dim, seed):
    g = derived_rng(seed, 910)
    s = g.standard_normal(dim)
    return s / np.linalg.norm(s)


def test_gaussian_closed_form_p6():
    # E g^6 = 15, so the norm of s is |s| / 15^(1/6)
    s = _direction(8, 1) * 2.7
    est = dual.centroid_norm(dists.gaussian(8), 6.0, s)
    assert est.value == pytest.approx(np.linalg.norm(s) / 15 ** (1 / 6), rel=1e-9)


def test_p2_reduces_to_euclidean_norm():
    for spec in (dists.exponential(5), dists.rademacher(5)):
        s = _direction(5, 2) * 1.4
        est = dual.centroid_norm(spec, 2.0, s)
        assert est.value == pytest.approx(np.linalg.norm(s), rel=1e-12)


def test_saa_duality_sandwich():
    spec = dists.gaussian(4)
    s = _direction(4, 3)
    opts = dual.DualSolveOptions(starts=4, sample_budget=30_000, evaluator="saa")
    est = dual.centroid_norm(spec, 3.0, s, opts)
    assert est.witness is not None
    assert est.witness_value <= est.value * (1 + 1e-9)
    if est.upper_bound is not None:
        assert est.value <= est.upper_bound * 1.02


def test_saa_matches_closed_form_within_two_percent():
    spec = dists.gaussian(6)
    opts = dual.DualSolveOptions(starts=6, sample_budget=60_000, evaluator="saa")
    for trial in range(3):
        s = _direction(6, 40 + trial)
        want = np.linalg.norm(s) / 15 ** (1 / 6)
        got = dual.centroid_norm(spec, 6.0, s, opts).value
        assert abs(got / want - 1) < 0.02


def test_linear_invariance():
    # Z_p(AX) = A Z_p(X): the gauge of A s under AX equals the gauge of s under X
    gen = derived_rng(17, 911)
    base = dists.gaussian(4)
    a = np.eye(4) + 0.25 * gen.standard_normal((4, 4))
    assert np.linalg.cond(a) < 10
    image = dists.linear_image(a, base)
    opts = dual.DualSolveOptions(starts=6, sample_budget=60_000)
    for trial in range(2):
        s = _direction(4, 60 + trial)
        lhs = dual.centroid_norm(image, 4.0, a @ s, opts).value
        rhs = dual.centroid_norm(base, 4.0, s, opts).value
        assert abs(lhs / rhs - 1) < 0.05


def test_norm_nonincreasing_in_p():
    # M_p balls shrink as p grows, so their support function cannot grow
    spec = dists.exponential(4)
    s = _direction(4, 5)
    values = [dual.centroid_norm(spec, float(p), s).value for p in (2, 4, 6, 8)]
    for lo, hi in zip(values[1:], values[:-1]):
        assert lo <= hi * (1 + 1e-9), values


def test_saa_stability_across_seeds():
    spec = dists.gaussian(6)
    close = 0
    trials = 10
    for trial in range(trials):
        s = _direction(6, 80 + trial)
        a = dual.centroid_norm(
            spec, 3.0, s, dual.DualSolveOptions(starts=4, sample_budget=30_000, seed=0, evaluator="saa")
        ).value
        b = dual.centroid_norm(
            spec, 3.0, s, dual.DualSolveOptions(starts=4, sample_budget=30_000, seed=1, evaluator="saa")
        ).value
        if abs(a / b - 1) < 0.03:
            close += 1
    assert close >= 0.9 * trials


def test_centroid_norm_deterministic():
    spec = dists.exponential(5)
    s = _direction(5, 6)
    opts = dual.DualSolveOptions(starts=4, sample_budget=25_000, evaluator="saa")
    a = dual.centroid_norm(spec, 3.5, s, opts)
    b = dual.centroid_norm(spec, 3.5, s, opts)
    assert a.value == b.value


def test_moment_report_deterministic_and_consistent():
    spec = dists.sphere(6)
    r1 = dual.centroid_norm_moment(spec, 4.0, 2.0, outer=200, opts=FAST, seed=3)
    r2 = dual.centroid_norm_moment(spec, 4.0, 2.0, outer=200, opts=FAST, seed=3)
    assert r1.estimate.value == r2.estimate.value
    assert r1.certified_lower <= r1.estimate.value * (1 + 1e-9)
    assert r1.capped_fraction == 0.0
    assert r1.dim == 6
    saa = dual.DualSolveOptions(starts=4, sample_budget=20_000, evaluator="saa")
    r3 = dual.centroid_norm_moment(spec, 4.0, 2.0, outer=200, opts=saa, seed=3)
    assert abs(r3.estimate.value / r1.estimate.value - 1) < 0.04


def test_envelope_values_and_ratio():
    assert dual.envelope(8, 2.0, "mixed") == pytest.approx(math.sqrt(5))
    assert dual.envelope(8, 2.0, "proportional") == pytest.approx(2.0)
    rep = dual.centroid_norm_moment(dists.gaussian(4), 4.0, 2.0, outer=300, opts=FAST, seed=1)
    ratio = dual.envelope_ratio(rep)
    assert ratio == pytest.approx(rep.estimate.value / math.sqrt(2.0))


def test_unconditional_decomposition_hand_values():
    s = np.ones(6) / math.sqrt(6)
    out = dual.unconditional_decomposition(dists.rademacher(6), 2.0, s)
    assert out["lhs"] == pytest.approx(1.0, rel=1e-9)
    assert out["term_sparse"] == pytest.approx(math.sqrt(1 / 3), rel=1e-9)
    assert out["term_euclid"] == pytest.approx(math.sqrt(1 / 2), rel=1e-9)
    assert out["implied_constant"] == pytest.approx(0.597717, abs=1e-5)
    assert out["support_size"] == 2


def test_unconditional_decomposition_validation():
    with pytest.raises(ValueError):
        dual.unconditional_decomposition(dists.rademacher(4), 6.0, np.ones(4))
    with pytest.raises(ValueError):
        dual.unconditional_decomposition(dists.rademacher(16), 2.0, np.ones(16))


def test_exponential_tail_witness_rows_and_moment():
    spec = dists.exponential(4)
    out = dual.exponential_tail_witness(spec, 2.0, [0.5, 1.0], samples=200_000, seed=4)
    assert out["witness_gauge"] <= 1 + 1e-9
    np_root = math.sqrt(4 * 2.0)
    for row, t in zip(out["rows"], [0.5, 1.0]):
        bound = math.exp(-t * np_root / math.sqrt(2))
        assert row["analytic_bound"] == pytest.approx(bound, rel=1e-12)
        se = math.sqrt(bound * (1 - bound) / row["samples"])
        assert abs(row["frequency"] - bound) <= 5 * se
        assert row["ci_low"] <= row["frequency"] <= row["ci_high"]
    # the analytic moment identity is exact at q = sqrt(np)
    assert out["moment_witness"] == pytest.approx(out["moment_reference"], rel=1e-12)
    assert out["moment_q"] == pytest.approx(np_root)


def test_exponential_tail_witness_rejects_other_families():
    with pytest.raises(ValueError):
        dual.exponential_tail_witness(dists.gaussian(4), 2.0, [1.0], samples=1000, seed=0)
