"""Covering and packing estimates for convex bodies given by their gauge.

Bodies are handled through a `BodyOracle` (dimension, vectorized gauge,
optional exact volume).  Covering numbers of implicitly defined bodies are
approximated on finite candidate clouds and the counts are always labeled as
cloud-based; certified lower bounds come from volumes or explicit packings,
never from the greedy counts themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import distributions as dists
from . import dual
from .rng import derived_rng

_CLOUD_STREAM = 5101
_VOLUME_STREAM = 5102

# candidate cloud defaults: 2:1 boundary to interior
DEFAULT_CANDIDATES = 30_000
_BOUNDARY_SHARE = 2.0 / 3.0

MAX_MC_VOLUME_DIM = 8

Source = Union[dists.DistributionSpec, dists.SampleCache]


class BodyOracle:
    """Convex body {center + x : gauge(x) <= 1} with a vectorized gauge.

    gauge_fn maps an (m, n) array to (m,) nonnegative values and must be
    positively homogeneous.  `volume` is the exact volume when known;
    `outer_radius` bounds the body inside center + outer_radius * B_2^n and
    gates Monte Carlo volume estimation.
    """

    def __init__(self, dimension: int, gauge_fn: Callable[[np.ndarray], np.ndarray],
                 volume: Optional[float] = None,
                 outer_radius: Optional[float] = None,
                 center: Optional[np.ndarray] = None,
                 label: str = "body"):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.dimension = int(dimension)
        self._gauge_fn = gauge_fn
        self.volume = volume
        self.outer_radius = outer_radius
        self.center = np.zeros(dimension) if center is None else np.asarray(center, dtype=float)
        self.label = label

    def gauge(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dimension:
            raise ValueError("point dimension mismatch")
        return np.asarray(self._gauge_fn(pts), dtype=float)

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self.gauge(pts - self.center) <= 1.0 + 1e-9

    def boundary_points(self, directions: np.ndarray) -> np.ndarray:
        """Map directions to the boundary via gauge normalization."""
        dirs = np.atleast_2d(np.asarray(directions, dtype=float))
        g = self.gauge(dirs)
        if np.any(g <= 0):
            raise ValueError("gauge vanishes on a nonzero direction; body is unbounded")
        return self.center + dirs / g[:, None]


def euclidean_ball(dimension: int, radius: float = 1.0) -> BodyOracle:
    if radius <= 0:
        raise ValueError("radius must be positive")
    return BodyOracle(
        dimension,
        lambda pts: np.linalg.norm(pts, axis=1) / radius,
        volume=unit_ball_volume(dimension) * radius**dimension,
        outer_radius=radius,
        label=f"ball(r={radius:g})",
    )


def cube_body(dimension: int, half_width: float) -> BodyOracle:
    if half_width <= 0:
        raise ValueError("half_width must be positive")
    return BodyOracle(
        dimension,
        lambda pts: np.abs(pts).max(axis=1) / half_width,
        volume=(2.0 * half_width) ** dimension,
        outer_radius=half_width * math.sqrt(dimension),
        label=f"cube(h={half_width:g})",
    )


def interval_body(a: float, b: float) -> BodyOracle:
    """The segment [a, b] as a one-dimensional body."""
    if not b > a:
        raise ValueError("need b > a")
    half = (b - a) / 2.0
    return BodyOracle(
        1,
        lambda pts: np.abs(pts[:, 0]) / half,
        volume=b - a,
        outer_radius=half,
        center=np.array([(a + b) / 2.0]),
        label=f"segment[{a:g},{b:g}]",
    )


def moment_ball(source: Source, p: float,
                opts: Optional[dual.DualSolveOptions] = None) -> BodyOracle:
    """Unit ball of the p-th moment norm of `source`.

    The gauge is the norm oracle itself, so a frozen cache passed here is
    shared by the candidate cloud and every later membership query.  The
    outer radius comes from the smallest covariance eigenvalue: for p >= 2
    the moment norm dominates the covariance quadratic form.
    """
    if p < 2:
        raise ValueError("moment balls are tracked for p >= 2 only")
    oracle = dual.build_norm_oracle(source, p, opts)
    if isinstance(source, dists.SampleCache):
        n = source.data.shape[1]
        cov = source.data.T @ source.data / source.data.shape[0]
    else:
        n = source.dim
        cov = dists.covariance(source)
    lam_min = float(np.linalg.eigvalsh(cov)[0])
    outer = 1.0 / math.sqrt(lam_min) if lam_min > 1e-12 else None
    return BodyOracle(n, oracle.norm, volume=None, outer_radius=outer,
                      label=f"moment_ball(p={p:g})")


# ---------------------------------------------------------------------------
# nets


@dataclass(frozen=True)
class NetResult:
    """An eps-net over a candidate cloud.

    kind "greedy_cover": centers cover the sampled cloud at radius eps and
    are pairwise more than eps apart, so count upper-bounds the covering
    number of the cloud and lower-bounds the packing number of the body
    restricted to it.  kind "packing_lower": only the separation property is
    claimed.  kind "volume_lower": count = ceil(volume ratio), no centers.
    """

    eps: float
    centers: np.ndarray
    count: int
    kind: str
    metadata: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "eps": self.eps,
            "count": self.count,
            "kind": self.kind,
            "metadata": dict(self.metadata),
            "centers": [[float(v) for v in row] for row in np.atleast_2d(self.centers)]
            if self.centers.size else [],
        }


def _candidate_cloud(body: BodyOracle, candidates: int, seed: int) -> np.ndarray:
    gen = derived_rng(seed, _CLOUD_STREAM)
    n = body.dimension
    n_boundary = int(round(candidates * _BOUNDARY_SHARE))
    n_interior = candidates - n_boundary
    dirs = gen.standard_normal((n_boundary, n))
    dirs /= np.maximum(np.linalg.norm(dirs, axis=1, keepdims=True), 1e-300)
    cloud = [body.boundary_points(dirs)]
    if n_interior:
        dirs2 = gen.standard_normal((n_interior, n))
        dirs2 /= np.maximum(np.linalg.norm(dirs2, axis=1, keepdims=True), 1e-300)
        # u^(1/n) radial dilation makes the interior points uniform for a
        # euclidean ball and serviceable for any star body
        dil = gen.random(n_interior) ** (1.0 / n)
        cloud.append(body.center + (body.boundary_points(dirs2) - body.center) * dil[:, None])
    return np.vstack(cloud)


def _farthest_point(cloud: np.ndarray, eps: float,
                    max_centers: Optional[int]) -> tuple[np.ndarray, bool]:
    # start at the first candidate; ties in the farthest scan break to the
    # lowest index (np.argmax first hit), which keeps runs reproducible
    eps2 = eps * eps
    idx = [0]
    d2 = ((cloud - cloud[0]) ** 2).sum(axis=1)
    truncated = False
    while True:
        far = int(np.argmax(d2))
        if d2[far] <= eps2:
            break
        if max_centers is not None and len(idx) >= max_centers:
            truncated = True
            break
        idx.append(far)
        d2 = np.minimum(d2, ((cloud - cloud[far]) ** 2).sum(axis=1))
    return cloud[idx], truncated


def greedy_net(body: BodyOracle, eps: float, metric: str = "euclidean",
               candidates: int = DEFAULT_CANDIDATES, seed: int = 0,
               max_centers: Optional[int] = None) -> NetResult:
    """Farthest-point net of a candidate cloud drawn on/in the body.

    The returned centers are an eps-cover of the cloud and a (> eps)-packing;
    the count is a cloud-based stand-in for the covering number, never an
    exact value.  `max_centers` stops the traversal early (the cover claim is
    then void; metadata records the truncation).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if metric != "euclidean":
        raise ValueError("only the euclidean metric is supported")
    if candidates < 1000:
        raise ValueError("need at least 1000 candidates")
    cloud = _candidate_cloud(body, candidates, seed)
    centers, truncated = _farthest_point(cloud, eps, max_centers)
    meta = {
        "seed": seed,
        "candidates": candidates,
        "boundary_points": int(round(candidates * _BOUNDARY_SHARE)),
        "cloud_based": True,
        "covers_cloud_at": eps if not truncated else None,
        "packing_separation": eps,
        "truncated": truncated,
        "body": body.label,
    }
    return NetResult(eps=float(eps), centers=centers, count=len(centers),
                     kind="greedy_cover", metadata=meta)


def packing_net(body: BodyOracle, eps: float, candidates: int = DEFAULT_CANDIDATES,
                seed: int = 0, max_centers: Optional[int] = None) -> NetResult:
    """Same traversal as greedy_net, reported as an explicit packing.

    The centers are pairwise more than eps apart, so the count is a certified
    lower bound on the packing number of the body (the points all lie in it).
    """
    net = greedy_net(body, eps, candidates=candidates, seed=seed,
                     max_centers=max_centers)
    return NetResult(eps=net.eps, centers=net.centers, count=net.count,
                     kind="packing_lower", metadata=net.metadata)


# ---------------------------------------------------------------------------
# volumes


def unit_ball_volume(dimension: int) -> float:
    return math.pi ** (dimension / 2.0) / math.gamma(dimension / 2.0 + 1.0)


def body_volume(body: BodyOracle, mc_points: int = 200_000,
                seed: int = 0) -> tuple[float, float]:
    """(volume, standard error); exact bodies report zero error.

    Monte Carlo rejection from the bounding ball; requires outer_radius and
    dimension <= 8 (the hit rate degrades too fast beyond that).
    """
    if body.volume is not None:
        return float(body.volume), 0.0
    if body.outer_radius is None:
        raise ValueError("cannot estimate the volume of an unbounded body")
    n = body.dimension
    if n > MAX_MC_VOLUME_DIM:
        raise ValueError(f"MC volume limited to dimension <= {MAX_MC_VOLUME_DIM}")
    gen = derived_rng(seed, _VOLUME_STREAM)
    r = body.outer_radius
    pts = gen.standard_normal((mc_points, n))
    pts /= np.maximum(np.linalg.norm(pts, axis=1, keepdims=True), 1e-300)
    pts *= r * gen.random(mc_points)[:, None] ** (1.0 / n)
    hits = body.contains(body.center + pts)
    rate = hits.mean()
    vol_ball = unit_ball_volume(n) * r**n
    se = vol_ball * math.sqrt(max(rate * (1.0 - rate), 0.0) / mc_points)
    return float(vol_ball * rate), float(se)


def volume_lower_bound(body: BodyOracle, eps: float, mc_points: int = 200_000,
                       seed: int = 0) -> float:
    """vol(body) / vol(eps B_2^n), a lower bound on the covering number."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    vol, _ = body_volume(body, mc_points=mc_points, seed=seed)
    return vol / (unit_ball_volume(body.dimension) * eps**body.dimension)


def volume_net(body: BodyOracle, eps: float, mc_points: int = 200_000,
               seed: int = 0) -> NetResult:
    """volume_lower_bound packaged as a NetResult (no centers)."""
    vol, se = body_volume(body, mc_points=mc_points, seed=seed)
    denom = unit_ball_volume(body.dimension) * eps**body.dimension
    ratio = vol / denom
    meta = {"seed": seed, "volume": vol, "volume_se": se, "ratio": ratio,
            "body": body.label}
    return NetResult(eps=float(eps), centers=np.empty((0, body.dimension)),
                     count=max(1, math.ceil(ratio - 1e-12)), kind="volume_lower",
                     metadata=meta)


# ---------------------------------------------------------------------------
# entropy pipeline


def entropy_to_centroid_bound(spec: dists.DistributionSpec, p: float, eps: float,
                              net: NetResult, lam: Optional[float] = None) -> float:
    """Upper bound on (E ||X||^2 in the dual norm)^(1/2) from a covering.

    eps*sqrt(n) + (e*lam/p) * max(p, log count): the net resolves directions
    to eps in the euclidean metric and the moment-growth constant lam pays
    for the union bound over centers.
    """
    from . import norms

    if not spec.is_isotropic:
        raise ValueError("the entropy bound is stated for isotropic laws")
    if lam is None:
        lam = norms.growth_prefactor(spec)
    if lam is None:
        raise ValueError("no moment-growth prefactor known; pass lam explicitly")
    n = spec.dim
    return eps * math.sqrt(n) + (math.e * lam / p) * max(p, math.log(net.count))


def minoration_covering_check(spec: dists.DistributionSpec, p: float, cx: float,
                              opts: Optional[dual.DualSolveOptions] = None,
                              candidates: int = DEFAULT_CANDIDATES,
                              seed: int = 0) -> dict:
    """Covering test at radius e*cx/sqrt(p) against the budget e^p.

    A greedy count within budget is evidence for the claimed minoration
    constant; a packing at double the radius that exceeds the budget is a
    genuine refutation (packings at 2r lower-bound coverings at r).
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    if cx <= 0:
        raise ValueError("cx must be positive")
    radius = math.e * cx / math.sqrt(p)
    bound = math.exp(p)
    cap = min(candidates, math.ceil(bound) + 1)
    body = moment_ball(spec, p, opts)
    net = greedy_net(body, radius, candidates=candidates, seed=seed,
                     max_centers=cap)
    packing = packing_net(body, 2.0 * radius, candidates=candidates, seed=seed,
                          max_centers=cap)
    return {
        "net_count": net.count,
        "bound": bound,
        "passed": (not net.metadata["truncated"]) and net.count <= bound,
        "radius": radius,
        "packing_count": packing.count,
        "refuted": packing.count > bound,
        "net": net,
        "packing": packing,
    }


def eps_grid(lo: float, hi: float, per_decade: int = 12) -> np.ndarray:
    """Log-spaced radii, `per_decade` points per factor of ten."""
    if not (0 < lo < hi):
        raise ValueError("need 0 < lo < hi")
    count = max(2, int(math.ceil(math.log10(hi / lo) * per_decade)) + 1)
    return np.geomspace(lo, hi, count)
