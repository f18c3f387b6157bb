"""Random vector families with exact moment oracles and reproducible sampling.

Each family is described by an immutable DistributionSpec.  Structural flags
(isotropy, unconditionality, log-concavity, availability of exact moments)
are derived from the family, never user-settable, so downstream assertions
can trust them.

Families
--------
gaussian      standard normal on R^n
exponential   iid symmetric exponential (Laplace) with unit variance,
              density prop. to exp(-sqrt(2) * ||x||_1)
rademacher    iid uniform signs
sphere        R * U with U uniform on the unit sphere and R an independent
              radial law: constant r, chi(n) (which reproduces the standard
              normal), or generalized Gamma(a, d, power) with density
              prop. to r^(d-1) exp(-(r/a)^power)
cube          uniform on [-sqrt(3), sqrt(3)]^n, isotropic
sparse        atoms +-sqrt(n) e_i, each with probability 1/(2n); isotropic
              but with extremely heavy single-coordinate concentration
product       independent symmetric marginals, one per coordinate
linear_image  A @ X for a base spec X

Sampling is blocked: a cache of `count` rows is drawn in fixed blocks of
rng.BLOCK_ROWS rows, each block from its own derived stream, so the bytes of
a cache depend only on (spec, seed, count) and never on scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .multiindices import odd_double_factorial
from .rng import block_slices, derived_rng

_SQRT3 = math.sqrt(3.0)
_LAPLACE_SCALE = 1.0 / math.sqrt(2.0)


class ExactUnavailable(ValueError):
    """Raised when an exact moment is requested from a family lacking one."""


# ---------------------------------------------------------------------------
# marginal laws for the product family


class Marginal:
    """Symmetric scalar law: sampling plus exact absolute moments."""

    kind: str = ""

    def sample(self, gen: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def abs_moment(self, p: float) -> float:
        """E|X|^p for real p > 0 (p = 0 gives 1)."""
        raise NotImplementedError

    @property
    def is_log_concave(self) -> bool:
        raise NotImplementedError

    @property
    def variance(self) -> float:
        return self.abs_moment(2.0)

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class TwoPoint(Marginal):
    """Uniform on {-value, +value}."""

    value: float = 1.0
    kind: str = field(default="two_point", init=False, repr=False)

    def sample(self, gen, size):
        return (2.0 * gen.integers(0, 2, size=size) - 1.0) * self.value

    def abs_moment(self, p):
        return float(self.value) ** p

    @property
    def is_log_concave(self):
        return False

    def to_config(self):
        return {"kind": self.kind, "value": self.value}


@dataclass(frozen=True)
class UniformMarginal(Marginal):
    """Uniform on [-half_width, half_width]."""

    half_width: float = _SQRT3
    kind: str = field(default="uniform", init=False, repr=False)

    def sample(self, gen, size):
        return gen.uniform(-self.half_width, self.half_width, size=size)

    def abs_moment(self, p):
        return self.half_width**p / (p + 1.0)

    @property
    def is_log_concave(self):
        return True

    def to_config(self):
        return {"kind": self.kind, "half_width": self.half_width}


@dataclass(frozen=True)
class LaplaceMarginal(Marginal):
    """Symmetric exponential with density exp(-|x|/scale) / (2 scale)."""

    scale: float = _LAPLACE_SCALE
    kind: str = field(default="exponential", init=False, repr=False)

    def sample(self, gen, size):
        return gen.laplace(0.0, self.scale, size=size)

    def abs_moment(self, p):
        return math.gamma(p + 1.0) * self.scale**p

    @property
    def is_log_concave(self):
        return True

    def to_config(self):
        return {"kind": self.kind, "scale": self.scale}


@dataclass(frozen=True)
class GaussianMarginal(Marginal):
    sigma: float = 1.0
    kind: str = field(default="gaussian", init=False, repr=False)

    def sample(self, gen, size):
        return self.sigma * gen.standard_normal(size)

    def abs_moment(self, p):
        # E|sigma g|^p = sigma^p 2^(p/2) Gamma((p+1)/2) / sqrt(pi)
        return self.sigma**p * 2.0 ** (p / 2.0) * math.gamma((p + 1.0) / 2.0) / math.sqrt(math.pi)

    @property
    def is_log_concave(self):
        return True

    def to_config(self):
        return {"kind": self.kind, "sigma": self.sigma}


@dataclass(frozen=True)
class PowerExponential(Marginal):
    """Density prop. to exp(-(|x|/scale)^power); power >= 1 is log-concave."""

    scale: float = 1.0
    power: float = 1.0
    kind: str = field(default="power_exponential", init=False, repr=False)

    @classmethod
    def unit_variance(cls, power: float) -> "PowerExponential":
        scale = math.sqrt(math.gamma(1.0 / power) / math.gamma(3.0 / power))
        return cls(scale=scale, power=power)

    def sample(self, gen, size):
        # |X|/scale has density prop. to exp(-r^power):  r = W^(1/power)
        # for W ~ Gamma(1/power, 1).
        mag = gen.gamma(1.0 / self.power, 1.0, size=size) ** (1.0 / self.power)
        sign = 2.0 * gen.integers(0, 2, size=size) - 1.0
        return self.scale * mag * sign

    def abs_moment(self, p):
        return self.scale**p * math.gamma((p + 1.0) / self.power) / math.gamma(1.0 / self.power)

    @property
    def is_log_concave(self):
        return self.power >= 1.0

    def to_config(self):
        return {"kind": self.kind, "scale": self.scale, "power": self.power}


_MARGINAL_KINDS = {
    "two_point": TwoPoint,
    "uniform": UniformMarginal,
    "exponential": LaplaceMarginal,
    "gaussian": GaussianMarginal,
    "power_exponential": PowerExponential,
}


def marginal_from_config(cfg: dict) -> Marginal:
    cfg = dict(cfg)
    kind = cfg.pop("kind")
    try:
        cls = _MARGINAL_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown marginal kind {kind!r}") from None
    return cls(**cfg)


# ---------------------------------------------------------------------------
# radial laws for the sphere family


@dataclass(frozen=True)
class RadialLaw:
    """Law of the radius for the sphere family."""

    kind: str = "constant"
    radius: float = 1.0  # constant law
    a: float = 1.0  # generalized gamma scale
    d: float = 1.0  # generalized gamma shape
    power: float = 2.0  # generalized gamma exponent

    def moment(self, p: float, dim: int) -> float:
        """E R^p."""
        if self.kind == "constant":
            return self.radius**p
        if self.kind == "chi":
            return math.exp(
                (p / 2.0) * math.log(2.0)
                + math.lgamma((dim + p) / 2.0)
                - math.lgamma(dim / 2.0)
            )
        if self.kind == "generalized_gamma":
            return self.a**p * math.exp(
                math.lgamma((self.d + p) / self.power) - math.lgamma(self.d / self.power)
            )
        raise ValueError(f"unknown radial law {self.kind!r}")

    def sample(self, gen: np.random.Generator, size: int, dim: int) -> np.ndarray:
        if self.kind == "constant":
            return np.full(size, self.radius)
        if self.kind == "chi":
            return np.sqrt(gen.chisquare(dim, size=size))
        if self.kind == "generalized_gamma":
            return self.a * gen.gamma(self.d / self.power, 1.0, size=size) ** (1.0 / self.power)
        raise ValueError(f"unknown radial law {self.kind!r}")

    def is_log_concave(self, dim: int) -> bool:
        # The resulting density on R^n is prop. to r^(d-n) exp(-(r/a)^power);
        # log-concavity is guaranteed only when the radial power term stands
        # alone (d == n, power >= 1) or the law reproduces the Gaussian.
        if self.kind == "chi":
            return True
        if self.kind == "generalized_gamma":
            return self.d == dim and self.power >= 1.0
        return False

    def to_config(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "radius": self.radius}
        if self.kind == "chi":
            return {"kind": "chi"}
        return {"kind": "generalized_gamma", "a": self.a, "d": self.d, "power": self.power}


# ---------------------------------------------------------------------------
# distribution specs

_FAMILIES = (
    "gaussian",
    "exponential",
    "rademacher",
    "sphere",
    "cube",
    "sparse",
    "product",
    "linear_image",
)


@dataclass(frozen=True, eq=False)
class DistributionSpec:
    family: str
    dim: int
    radial: Optional[RadialLaw] = None
    marginals: Optional[tuple[Marginal, ...]] = None
    matrix: Optional[np.ndarray] = None
    base: Optional["DistributionSpec"] = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.family == "sphere" and self.radial is None:
            object.__setattr__(self, "radial", RadialLaw())
        if self.family == "product":
            if not self.marginals or len(self.marginals) != self.dim:
                raise ValueError("product family needs one marginal per coordinate")
        if self.family == "linear_image":
            if self.matrix is None or self.base is None:
                raise ValueError("linear_image needs matrix and base")
            m = np.asarray(self.matrix, dtype=float)
            if m.ndim != 2 or m.shape != (self.dim, self.base.dim):
                raise ValueError("matrix must be (dim, base.dim)")
            m = m.copy()
            m.flags.writeable = False
            object.__setattr__(self, "matrix", m)

    # -- structural flags ---------------------------------------------------

    @property
    def is_isotropic(self) -> bool:
        cov = covariance(self)
        return bool(np.allclose(cov, np.eye(self.dim), atol=1e-9))

    @property
    def is_unconditional(self) -> bool:
        if self.family in ("gaussian", "exponential", "rademacher", "cube",
                           "sphere", "sparse", "product"):
            return True
        return bool(_is_signed_permutation(self.matrix)) and self.base.is_unconditional

    @property
    def is_log_concave(self) -> bool:
        if self.family in ("gaussian", "exponential", "cube"):
            return True
        if self.family == "sphere":
            return self.radial.is_log_concave(self.dim)
        if self.family == "product":
            return all(m.is_log_concave for m in self.marginals)
        if self.family == "linear_image":
            return self.base.is_log_concave
        return False

    @property
    def has_exact_mixed_moments(self) -> bool:
        if self.family == "linear_image":
            return _is_diagonal(self.matrix) and self.base.has_exact_mixed_moments
        return True

    @property
    def has_exact_marginal_moments(self) -> bool:
        return self.has_exact_mixed_moments

    # -- config round trip ---------------------------------------------------

    def to_config(self) -> dict:
        cfg: dict = {"family": self.family, "dim": self.dim}
        if self.family == "sphere":
            cfg["radial"] = self.radial.to_config()
        if self.family == "product":
            cfg["marginals"] = [m.to_config() for m in self.marginals]
        if self.family == "linear_image":
            cfg["matrix"] = [list(map(float, row)) for row in self.matrix]
            cfg["base"] = self.base.to_config()
        return cfg


def spec_from_config(cfg: dict) -> DistributionSpec:
    family = cfg["family"]
    if family == "sphere":
        radial = RadialLaw(**cfg["radial"]) if "radial" in cfg else RadialLaw()
        return DistributionSpec(family, int(cfg["dim"]), radial=radial)
    if family == "product":
        margs = tuple(marginal_from_config(m) for m in cfg["marginals"])
        return DistributionSpec(family, len(margs), marginals=margs)
    if family == "linear_image":
        base = spec_from_config(cfg["base"])
        matrix = np.asarray(cfg["matrix"], dtype=float)
        return DistributionSpec(family, matrix.shape[0], matrix=matrix, base=base)
    return DistributionSpec(family, int(cfg["dim"]))


# convenience constructors


def gaussian(dim: int) -> DistributionSpec:
    return DistributionSpec("gaussian", dim)


def exponential(dim: int) -> DistributionSpec:
    return DistributionSpec("exponential", dim)


def rademacher(dim: int) -> DistributionSpec:
    return DistributionSpec("rademacher", dim)


def sphere(dim: int, radial: Optional[RadialLaw] = None) -> DistributionSpec:
    return DistributionSpec("sphere", dim, radial=radial or RadialLaw())


def cube(dim: int) -> DistributionSpec:
    return DistributionSpec("cube", dim)


def sparse(dim: int) -> DistributionSpec:
    return DistributionSpec("sparse", dim)


def product(marginals: Sequence[Marginal]) -> DistributionSpec:
    return DistributionSpec("product", len(marginals), marginals=tuple(marginals))


def linear_image(matrix: np.ndarray, base: DistributionSpec) -> DistributionSpec:
    matrix = np.asarray(matrix, dtype=float)
    return DistributionSpec("linear_image", matrix.shape[0], matrix=matrix, base=base)


def _is_diagonal(m: np.ndarray) -> bool:
    return m.shape[0] == m.shape[1] and np.count_nonzero(m - np.diag(np.diag(m))) == 0


def _is_signed_permutation(m: np.ndarray) -> bool:
    if m.shape[0] != m.shape[1]:
        return False
    nz = m != 0
    return bool(np.all(nz.sum(axis=0) == 1) and np.all(nz.sum(axis=1) == 1))


# ---------------------------------------------------------------------------
# exact moments


def covariance(spec: DistributionSpec) -> np.ndarray:
    """Exact covariance matrix (every family provides one)."""
    n = spec.dim
    if spec.family in ("gaussian", "exponential", "rademacher", "cube", "sparse"):
        return np.eye(n)
    if spec.family == "sphere":
        return (spec.radial.moment(2.0, n) / n) * np.eye(n)
    if spec.family == "product":
        return np.diag([m.variance for m in spec.marginals])
    if spec.family == "linear_image":
        return spec.matrix @ covariance(spec.base) @ spec.matrix.T
    raise ValueError(spec.family)


def marginal_abs_moment(spec: DistributionSpec, p: float, coord: int = 0) -> float:
    """Exact E|X_coord|^p for real p > 0."""
    if p <= 0:
        raise ValueError("p must be positive")
    n = spec.dim
    if not 0 <= coord < n:
        raise IndexError("coordinate out of range")
    if spec.family == "gaussian":
        return GaussianMarginal().abs_moment(p)
    if spec.family == "exponential":
        return LaplaceMarginal().abs_moment(p)
    if spec.family == "rademacher":
        return 1.0
    if spec.family == "cube":
        return UniformMarginal().abs_moment(p)
    if spec.family == "sparse":
        # |X_i| is sqrt(n) with probability 1/n, else 0.
        return float(n) ** (p / 2.0 - 1.0)
    if spec.family == "sphere":
        # E|X_1|^p = E R^p * Gamma((p+1)/2) Gamma(n/2) / (sqrt(pi) Gamma((n+p)/2))
        log_u = (
            math.lgamma((p + 1.0) / 2.0)
            + math.lgamma(n / 2.0)
            - 0.5 * math.log(math.pi)
            - math.lgamma((n + p) / 2.0)
        )
        return spec.radial.moment(p, n) * math.exp(log_u)
    if spec.family == "product":
        return spec.marginals[coord].abs_moment(p)
    if spec.family == "linear_image":
        if not _is_diagonal(spec.matrix):
            raise ExactUnavailable("marginal moments exact only for diagonal images")
        return abs(spec.matrix[coord, coord]) ** p * marginal_abs_moment(spec.base, p, coord)
    raise ValueError(spec.family)


def mixed_even_moment(spec: DistributionSpec, alpha: Sequence[int]) -> float:
    """Exact E prod_i X_i^(2 alpha_i)."""
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != spec.dim:
        raise ValueError("alpha length must equal dim")
    if any(a < 0 for a in alpha):
        raise ValueError("alpha entries must be nonnegative")
    k = sum(alpha)
    if k == 0:
        return 1.0
    n = spec.dim
    if spec.family == "gaussian":
        out = 1.0
        for a in alpha:
            out *= odd_double_factorial(a)
        return out
    if spec.family == "exponential":
        out = 1.0
        for a in alpha:
            out *= math.factorial(2 * a) / 2.0**a
        return out
    if spec.family == "rademacher":
        return 1.0
    if spec.family == "cube":
        out = 1.0
        for a in alpha:
            out *= 3.0**a / (2 * a + 1.0)
        return out
    if spec.family == "sparse":
        # Only one coordinate is ever nonzero.
        support = [i for i, a in enumerate(alpha) if a > 0]
        if len(support) > 1:
            return 0.0
        return float(n) ** (k - 1)
    if spec.family == "sphere":
        # E U^(2 alpha) = prod (2 a_i - 1)!! / prod_{j<k} (n + 2j)
        num = 1.0
        for a in alpha:
            num *= odd_double_factorial(a)
        den = 1.0
        for j in range(k):
            den *= n + 2 * j
        return spec.radial.moment(2.0 * k, n) * num / den
    if spec.family == "product":
        out = 1.0
        for m, a in zip(spec.marginals, alpha):
            if a:
                out *= m.abs_moment(2.0 * a)
        return out
    if spec.family == "linear_image":
        if not _is_diagonal(spec.matrix):
            raise ExactUnavailable("mixed moments exact only for diagonal images")
        scale = 1.0
        for i, a in enumerate(alpha):
            scale *= spec.matrix[i, i] ** (2 * a)
        return scale * mixed_even_moment(spec.base, alpha)
    raise ValueError(spec.family)


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True, eq=False)
class SampleCache:
    """Immutable (count, dim) draw identified by (spec, seed, count)."""

    spec: DistributionSpec
    seed: int
    count: int
    data: np.ndarray

    @property
    def dim(self) -> int:
        return self.spec.dim


def sample(spec: DistributionSpec, count: int, seed: int) -> SampleCache:
    """Draw `count` rows; bytes depend only on (spec, seed, count)."""
    count = int(count)
    if count < 1:
        raise ValueError("count must be >= 1")
    data = np.empty((count, spec.dim), dtype=np.float64)
    for b, start, stop in block_slices(count):
        gen = derived_rng(seed, b)
        data[start:stop] = _draw_block(spec, gen, stop - start)
    data.flags.writeable = False
    return SampleCache(spec=spec, seed=seed, count=count, data=data)


def _draw_block(spec: DistributionSpec, gen: np.random.Generator, rows: int) -> np.ndarray:
    n = spec.dim
    if spec.family == "gaussian":
        return gen.standard_normal((rows, n))
    if spec.family == "exponential":
        return gen.laplace(0.0, _LAPLACE_SCALE, size=(rows, n))
    if spec.family == "rademacher":
        return 2.0 * gen.integers(0, 2, size=(rows, n)) - 1.0
    if spec.family == "cube":
        return gen.uniform(-_SQRT3, _SQRT3, size=(rows, n))
    if spec.family == "sparse":
        out = np.zeros((rows, n))
        idx = gen.integers(0, n, size=rows)
        signs = 2.0 * gen.integers(0, 2, size=rows) - 1.0
        out[np.arange(rows), idx] = signs * math.sqrt(n)
        return out
    if spec.family == "sphere":
        g = gen.standard_normal((rows, n))
        norms = np.linalg.norm(g, axis=1, keepdims=True)
        # A zero row has probability 0; guard regardless.
        np.maximum(norms, 1e-300, out=norms)
        radii = spec.radial.sample(gen, rows, n)
        return g * (radii[:, None] / norms)
    if spec.family == "product":
        out = np.empty((rows, n))
        for i, m in enumerate(spec.marginals):
            out[:, i] = m.sample(gen, rows)
        return out
    if spec.family == "linear_image":
        return _draw_block(spec.base, gen, rows) @ spec.matrix.T
    raise ValueError(spec.family)


# ---------------------------------------------------------------------------
# derived operations


def isotropize(spec: DistributionSpec, *, mc_samples: int = 100_000, seed: int = 0,
               cond_cap: float = 1e6) -> DistributionSpec:
    """Whitened linear image of spec, exact whenever covariance is exact.

    Falls back to a Monte Carlo covariance estimate (mc_samples rows) only if
    the exact path is unavailable; ill-conditioned covariance (condition
    number above cond_cap) raises.
    """
    if spec.is_isotropic:
        return spec
    try:
        cov = covariance(spec)
    except ExactUnavailable:
        cache = sample(spec, mc_samples, seed)
        cov = cache.data.T @ cache.data / cache.count
    vals, vecs = np.linalg.eigh(cov)
    if vals[0] <= 0 or vals[-1] / vals[0] > cond_cap:
        cond = math.inf if vals[0] <= 0 else vals[-1] / vals[0]
        raise ValueError(
            f"covariance condition number {cond:.3g} exceeds {cond_cap:g}"
        )
    white = vecs @ np.diag(vals**-0.5) @ vecs.T
    if spec.family == "linear_image":
        return linear_image(white @ spec.matrix, spec.base)
    return linear_image(white, spec)


@dataclass(frozen=True)
class ScalarEstimate:
    value: float
    ci_low: float
    ci_high: float
    count: int


def order_statistic_mean(spec: DistributionSpec, rank: int, count: int,
                         seed: int) -> ScalarEstimate:
    """Mean of the rank-th largest of |X_1|, ..., |X_n| (rank 1 = maximum).

    Monte Carlo over `count` draws; the CI is a normal two-sigma band for the
    mean.
    """
    n = spec.dim
    if not 1 <= rank <= n:
        raise ValueError("rank must be in 1..dim")
    total = 0.0
    total_sq = 0.0
    seen = 0
    for b, start, stop in block_slices(count):
        gen = derived_rng(seed, b)
        block = np.abs(_draw_block(spec, gen, stop - start))
        kth = np.partition(block, n - rank, axis=1)[:, n - rank]
        total += float(kth.sum())
        total_sq += float((kth * kth).sum())
        seen += kth.size
    mean = total / seen
    var = max(total_sq / seen - mean * mean, 0.0)
    half = 2.0 * math.sqrt(var / seen)
    return ScalarEstimate(mean, mean - half, mean + half, seen)
