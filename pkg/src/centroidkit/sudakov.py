"""Expected suprema over structured index sets and minoration constants.

The minoration constant of a law X is the smallest C such that
E sup_{t in T} <t,X>  >=  (1/C) * eps * sqrt(log N(T, eps B_2^n))
for every bounded T and eps > 0.  This module produces certified lower
bounds on C by combining a Monte Carlo estimate of the left side with
entropy lower bounds that only use volume formulas or explicit packings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import cover
from . import distributions as dists
from . import dual
from . import norms
from .rng import derive_seed, derived_rng

_SUP_STREAM = 6101
_PACK_STREAM = 6102
_BOOT_STREAM = 6103

MAX_FINITE_VECTORS = 10**6
EPS_GRID_POINTS = 24
_PACKING_CENTER_CAP = 2000


@dataclass(frozen=True)
class IndexSet:
    """Bounded symmetric index set T for sup-of-linear-form statistics.

    kinds: "finite" (explicit vectors), "cube" (max-norm ball of the given
    radius), "ball" (euclidean ball), "moment_ball" (unit ball of the p-th
    moment norm of `spec`).
    """

    kind: str
    dim: int
    vectors: Optional[np.ndarray] = None
    radius: Optional[float] = None
    spec: Optional[dists.DistributionSpec] = None
    p: Optional[float] = None

    def diameter(self) -> float:
        if self.kind == "cube":
            return 2.0 * self.radius * math.sqrt(self.dim)
        if self.kind == "ball":
            return 2.0 * self.radius
        if self.kind == "finite":
            return 2.0 * float(np.linalg.norm(self.vectors, axis=1).max())
        # moment ball: the norm dominates the covariance form, so the body
        # sits inside the ellipsoid with semi-axis 1/sqrt(lambda_min)
        lam_min = float(np.linalg.eigvalsh(dists.covariance(self.spec))[0])
        if lam_min <= 1e-12:
            raise ValueError("degenerate covariance; moment ball unbounded")
        return 2.0 / math.sqrt(lam_min)

    def label(self) -> str:
        if self.kind == "finite":
            return f"finite({len(self.vectors)})"
        if self.kind == "moment_ball":
            return f"moment_ball(p={self.p:g})"
        return f"{self.kind}(r={self.radius:g})"


def finite_set(vectors) -> IndexSet:
    vecs = np.atleast_2d(np.asarray(vectors, dtype=float))
    if vecs.size == 0:
        raise ValueError("finite index set must be nonempty")
    if vecs.shape[0] > MAX_FINITE_VECTORS:
        raise ValueError(f"finite sets larger than {MAX_FINITE_VECTORS} are rejected")
    return IndexSet(kind="finite", dim=vecs.shape[1], vectors=vecs)


def cube_set(dim: int, radius: float) -> IndexSet:
    if radius <= 0:
        raise ValueError("radius must be positive")
    return IndexSet(kind="cube", dim=dim, radius=float(radius))


def ball_set(dim: int, radius: float) -> IndexSet:
    if radius <= 0:
        raise ValueError("radius must be positive")
    return IndexSet(kind="ball", dim=dim, radius=float(radius))


def moment_ball_set(spec: dists.DistributionSpec, p: float) -> IndexSet:
    if p < 2:
        raise ValueError("moment balls are tracked for p >= 2 only")
    return IndexSet(kind="moment_ball", dim=spec.dim, spec=spec, p=float(p))


# ---------------------------------------------------------------------------
# expected suprema


def sup_over_set(spec: dists.DistributionSpec, T: IndexSet, samples: int = 20_000,
                 seed: int = 0, opts: Optional[dual.DualSolveOptions] = None) -> norms.NormEstimate:
    """Monte Carlo estimate of E sup_{t in T} <t, X> with bootstrap CI.

    Cube and ball sets have closed per-realization suprema (r*||x||_1 and
    r*|x|); finite sets are scanned exactly; moment balls delegate each
    realization to the dual-norm solver.
    """
    if T.dim != spec.dim:
        raise ValueError("index set and law dimension mismatch")
    if samples < 2:
        raise ValueError("need at least 2 samples")
    cache = dists.sample(spec, samples, derive_seed(seed, _SUP_STREAM))
    x = cache.data
    diagnostics = {"samples": samples, "seed": seed, "set": T.label()}
    if T.kind == "cube":
        vals = T.radius * np.abs(x).sum(axis=1)
    elif T.kind == "ball":
        vals = T.radius * np.linalg.norm(x, axis=1)
    elif T.kind == "finite":
        if T.vectors.shape[0] == 0:
            raise ValueError("finite index set must be nonempty")
        vals = np.empty(samples)
        # chunk so rows * set size stays within a fixed element budget
        step = max(1, int(2e7) // T.vectors.shape[0])
        for lo in range(0, samples, step):
            vals[lo:lo + step] = (x[lo:lo + step] @ T.vectors.T).max(axis=1)
    elif T.kind == "moment_ball":
        vals, diag = _moment_ball_sups(T, x, opts or dual.DualSolveOptions(), seed)
        diagnostics.update(diag)
    else:
        raise ValueError(f"unknown index set kind {T.kind!r}")
    mean = float(vals.mean())
    if float(vals.std()) == 0.0:
        lo = hi = mean
    else:
        gen = derived_rng(seed, _BOOT_STREAM)
        lo, hi = norms.bootstrap_mean_ci(vals, 400, gen)
    return norms.NormEstimate(value=mean, ci_low=lo, ci_high=hi,
                              method="monte_carlo", diagnostics=diagnostics)


def _moment_ball_sups(T: IndexSet, x: np.ndarray,
                      opts: dual.DualSolveOptions, seed: int):
    """Per-realization sup over the moment ball: a dual-norm solve each.

    Warm starts: previous optimum plus the realization itself; the first
    realization gets the full start battery.
    """
    oracle = dual.build_norm_oracle(T.spec, T.p, opts)
    gen = derived_rng(derive_seed(seed, _SUP_STREAM), 1)
    vals = np.empty(x.shape[0])
    prev = None
    iters_total = 0
    for i, s in enumerate(x):
        norm_s = np.linalg.norm(s)
        if norm_s == 0.0:
            vals[i] = 0.0
            continue
        if prev is None:
            T0 = dual._start_battery(s / norm_s, opts.starts, T.dim, gen)
        else:
            T0 = np.vstack([prev, s / norm_s])
        val, t_best, iters, _ = dual._ascend(oracle, s, T0, opts)
        vals[i] = val
        prev = t_best
        iters_total += iters
    return vals, {"mean_iterations": iters_total / max(len(x), 1)}


# ---------------------------------------------------------------------------
# minoration


@dataclass(frozen=True)
class MinorationReport:
    """Certified lower bound on the minoration constant of a law.

    entropy_profile rows are (eps, log N lower bound); every entry comes from
    a volume formula or an explicit packing, never from greedy cover counts.
    cx_lower = max over the profile of eps*sqrt(log N)/sup_estimate.
    """

    sup_estimate: norms.NormEstimate
    entropy_profile: list
    cx_lower: float
    best_eps: float
    metadata: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "sup": self.sup_estimate.value,
            "sup_ci": [self.sup_estimate.ci_low, self.sup_estimate.ci_high],
            "cx_lower": self.cx_lower,
            "best_eps": self.best_eps,
            "entropy_profile": [[float(e), float(l)] for e, l in self.entropy_profile],
            "metadata": dict(self.metadata),
        }


def _log_unit_ball_volume(n: int) -> float:
    return (n / 2.0) * math.log(math.pi) - math.lgamma(n / 2.0 + 1.0)


def _euclidean_ball_radius(T: IndexSet) -> Optional[float]:
    """Radius when T is exactly a euclidean ball, else None."""
    if T.kind == "ball":
        return T.radius
    if T.kind == "moment_ball" and T.spec.family in ("gaussian", "sphere"):
        # rotation invariance makes the moment ball euclidean with radius
        # equal to the reciprocal marginal moment
        return 1.0 / dists.marginal_abs_moment(T.spec, T.p) ** (1.0 / T.p)
    return None


def _finite_packing_count(vectors: np.ndarray, separation: float) -> int:
    kept = [0]
    d2 = ((vectors - vectors[0]) ** 2).sum(axis=1)
    sep2 = separation * separation
    while True:
        far = int(np.argmax(d2))
        if d2[far] <= sep2:
            return len(kept)
        kept.append(far)
        d2 = np.minimum(d2, ((vectors - vectors[far]) ** 2).sum(axis=1))


def entropy_lower_profile(T: IndexSet, eps_values: np.ndarray, seed: int = 0,
                          opts: Optional[dual.DualSolveOptions] = None,
                          packing_candidates: int = cover.DEFAULT_CANDIDATES) -> list:
    """Certified (eps, log N(T, eps B)) lower bounds along an eps grid."""
    n = T.dim
    rows = []
    ball_r = _euclidean_ball_radius(T)
    cloud = None
    body = None
    for eps in eps_values:
        eps = float(eps)
        if T.kind == "cube":
            # vol(T) = (2r)^n against vol(eps B)
            log_n = n * math.log(2.0 * T.radius) - n * math.log(eps) \
                - _log_unit_ball_volume(n)
        elif ball_r is not None:
            log_n = n * math.log(ball_r / eps)
        elif T.kind == "finite":
            log_n = math.log(_finite_packing_count(T.vectors, 2.0 * eps))
        else:
            if body is None:
                body = cover.moment_ball(T.spec, T.p, opts)
                cloud = cover._candidate_cloud(
                    body, packing_candidates, derive_seed(seed, _PACK_STREAM))
            centers, _ = cover._farthest_point(cloud, 2.0 * eps,
                                               _PACKING_CENTER_CAP)
            log_n = math.log(len(centers))
        rows.append((eps, max(log_n, 0.0)))
    return rows


def minoration_constant_lower(spec: dists.DistributionSpec, T: IndexSet,
                              eps_values=None, sup_samples: int = 20_000,
                              packing_candidates: int = cover.DEFAULT_CANDIDATES,
                              seed: int = 0,
                              opts: Optional[dual.DualSolveOptions] = None) -> MinorationReport:
    """Lower bound on the minoration constant via one index set.

    cx_lower = max_eps eps*sqrt(log N_lower(T, eps))/E sup; certified up to
    Monte Carlo error in the denominator.
    """
    sup_est = sup_over_set(spec, T, samples=sup_samples, seed=seed, opts=opts)
    if sup_est.value <= 1e-12:
        raise ValueError("sup estimate is degenerate (~0); minoration undefined")
    if eps_values is None:
        diam = T.diameter()
        eps_values = np.geomspace(diam / 1e3, diam, EPS_GRID_POINTS)
    profile = entropy_lower_profile(T, np.asarray(eps_values, dtype=float),
                                    seed=seed, opts=opts,
                                    packing_candidates=packing_candidates)
    best_val, best_eps = 0.0, float(eps_values[0])
    for eps, log_n in profile:
        val = eps * math.sqrt(log_n) / sup_est.value
        if val > best_val:
            best_val, best_eps = val, eps
    meta = {"seed": seed, "sup_samples": sup_samples, "set": T.label(),
            "grid_points": len(profile)}
    return MinorationReport(sup_estimate=sup_est, entropy_profile=profile,
                            cx_lower=best_val, best_eps=best_eps, metadata=meta)


def unconditional_minoration_ratio(spec: dists.DistributionSpec, T: IndexSet,
                                   sup_samples: int = 20_000, seed: int = 0,
                                   opts: Optional[dual.DualSolveOptions] = None) -> float:
    """cx_lower * min_i E|X_i| / sqrt(log(n+1)).

    For unconditional laws the minoration constant is conjectured to be
    O(sqrt(log(n+1))/min E|X_i|); this normalized ratio should stay bounded
    across dimensions if that holds.
    """
    if not spec.is_unconditional:
        raise ValueError("ratio is defined for unconditional laws")
    min_abs = min(dists.marginal_abs_moment(spec, 1.0, coord=i)
                  for i in range(spec.dim))
    if min_abs <= 0:
        raise ValueError("min E|X_i| vanishes")
    report = minoration_constant_lower(spec, T, sup_samples=sup_samples,
                                       seed=seed, opts=opts)
    return report.cx_lower * min_abs / math.sqrt(math.log(spec.dim + 1))
