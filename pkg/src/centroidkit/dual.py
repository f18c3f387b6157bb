"""Dual (centroid) norms by support-function maximization.

The dual norm of s under a moment norm ||.|| = ||.||_(p,X) is

    ||s||* = sup { <t, s> : ||t|| <= 1 } = max over unit t of <t,s> / ||t||,

the support function of the moment-norm unit ball.  There is no closed-form
projection onto that ball, so the solver maximizes the scale-invariant ratio
on the Euclidean unit sphere by normalized gradient ascent with multi-start;
every iterate is feasible after rescaling, so the best objective found is
always a certified lower bound, carried as a witness.

Norm oracles
------------
The solver talks to the moment norm through an oracle with vectorized
`norm(T)` / `norm_and_grad(T)` over batches of directions (rows of T):

* closed forms: Gaussian and sphere projections are one-dimensional laws
  scaled by |t|_2, and the sparse family gives a weighted ell_p norm; any
  real p >= 2;
* exact even moments: for independent-coordinate families, E <t,X>^(2k) is
  assembled by convolving per-coordinate moment series in O(n k^2) per
  direction (algebraically identical to the multiindex expansion in
  `norms.projection_even_moment`, which stays the cross-checked reference);
* SAA: a frozen sample cache turns the norm into a smooth deterministic
  empirical objective; one cache serves the whole solve.

All multi-starts advance together as columns of a single matrix, so each
ascent iteration costs one matrix product regardless of the start count.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import distributions as dists
from . import norms as norms_mod
from .multiindices import enumerate_multiindices, multiindex_count, multinomial
from .rng import derive_seed, derived_rng

Source = Union[dists.DistributionSpec, dists.SampleCache]

_SAA_STREAM = 4101
_OUTER_STREAM = 4102
_WITNESS_STREAM = 4103
_START_STREAM = 4104

# Cauchy-Schwarz certificates enumerate multiindices; skip past this count.
_MAX_CERT_TERMS = 500_000


@dataclass(frozen=True)
class DualSolveOptions:
    """Knobs for the support-function ascent."""

    starts: int = 8
    max_iters: int = 500
    step_rule: str = "backtracking"  # or "fixed"
    tolerance: float = 1e-9  # relative objective change
    sample_budget: int = 100_000  # SAA size
    seed: int = 0  # derives SAA draws and random starts
    evaluator: str = "auto"  # auto | exact | saa

    def __post_init__(self):
        if self.starts < 1:
            raise ValueError("starts must be >= 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.step_rule not in ("fixed", "backtracking"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")
        if self.evaluator not in ("auto", "exact", "saa"):
            raise ValueError(f"unknown evaluator {self.evaluator!r}")


# ---------------------------------------------------------------------------
# norm oracles


class _EllTwoOracle:
    """||t|| = coef * |t|_2 (Gaussian / sphere projections, p = 2 isotropic)."""

    exact = True

    def __init__(self, coef: float):
        self.coef = coef

    def norm(self, T: np.ndarray) -> np.ndarray:
        return self.coef * np.linalg.norm(T, axis=1)

    def norm_and_grad(self, T: np.ndarray):
        vals = np.linalg.norm(T, axis=1)
        grads = self.coef * T / np.maximum(vals, 1e-300)[:, None]
        return self.coef * vals, grads


class _EllPOracle:
    """||t|| = coef * (sum |t_i|^p)^(1/p) (sparse family: coef = n^(1/2 - 1/p))."""

    exact = True

    def __init__(self, coef: float, p: float):
        self.coef = coef
        self.p = p

    def norm(self, T: np.ndarray) -> np.ndarray:
        a = np.abs(T)
        amax = np.maximum(a.max(axis=1), 1e-300)
        s = ((a / amax[:, None]) ** self.p).sum(axis=1)
        return self.coef * amax * s ** (1.0 / self.p)

    def norm_and_grad(self, T: np.ndarray):
        p = self.p
        a = np.abs(T)
        amax = np.maximum(a.max(axis=1), 1e-300)[:, None]
        w = (a / amax) ** (p - 1.0)
        s = (w * (a / amax)).sum(axis=1, keepdims=True)
        vals = (self.coef * amax * s ** (1.0 / p))[:, 0]
        # grad of coef (sum|t|^p)^(1/p): coef * s^(1/p-1) * |t_i|^(p-1) sgn(t_i)
        grads = self.coef * s ** (1.0 / p - 1.0) * w * np.sign(T)
        return vals, grads


class _ProductEvenOracle:
    """Exact even moment norm for independent coordinates via series convolution.

    E <t,X>^(2k) = (2k)! [z^k] prod_i S_i(z),  S_i(z) = sum_j t_i^(2j) m_i(j) z^j / (2j)!

    with m_i(j) = E X_i^(2j).  Cost O(n k^2) per direction; gradients reuse
    prefix/suffix products of the series.
    """

    exact = True

    def __init__(self, moments: np.ndarray, p: int):
        # moments[i, j] = E X_i^(2j), shape (n, k+1)
        self.k = p // 2
        self.p = p
        fact = np.array([math.factorial(2 * j) for j in range(self.k + 1)], dtype=float)
        self.coeff = moments / fact  # m_i(j) / (2j)!
        self.total_fact = math.factorial(p)

    def _series(self, T: np.ndarray) -> np.ndarray:
        # series[m, i, j] = t_(m,i)^(2j) * coeff[i, j]
        k = self.k
        tsq = T * T
        powers = np.empty(T.shape + (k + 1,))
        powers[..., 0] = 1.0
        for j in range(1, k + 1):
            powers[..., j] = powers[..., j - 1] * tsq
        return powers * self.coeff[None, :, :]

    @staticmethod
    def _conv(a: np.ndarray, b: np.ndarray, k: int) -> np.ndarray:
        out = np.zeros(a.shape)
        for d in range(k + 1):
            for j in range(d + 1):
                out[..., d] += a[..., j] * b[..., d - j]
        return out

    def _moment(self, T: np.ndarray) -> np.ndarray:
        series = self._series(T)
        k = self.k
        acc = series[:, 0, :]
        for i in range(1, T.shape[1]):
            acc = self._conv(acc, series[:, i, :], k)
        return self.total_fact * acc[:, k]

    def norm(self, T: np.ndarray) -> np.ndarray:
        return np.maximum(self._moment(T), 0.0) ** (1.0 / self.p)

    def norm_and_grad(self, T: np.ndarray):
        m, n = T.shape
        k = self.k
        series = self._series(T)
        # prefix[i] = conv of coords < i, suffix[i] = conv of coords > i
        prefix = np.empty((n, m, k + 1))
        suffix = np.empty((n, m, k + 1))
        unit = np.zeros((m, k + 1))
        unit[:, 0] = 1.0
        acc = unit
        for i in range(n):
            prefix[i] = acc
            acc = self._conv(acc, series[:, i, :], k)
        total = self.total_fact * acc[:, k]
        acc = unit
        for i in range(n - 1, -1, -1):
            suffix[i] = acc
            acc = self._conv(acc, series[:, i, :], k)
        # derivative series: d/dt_i t_i^(2j) coeff = 2j t_i^(2j-1) coeff
        grads = np.empty((m, n))
        for i in range(n):
            dseries = np.zeros((m, k + 1))
            ti = T[:, i]
            tpow = np.ones(m)  # t_i^(2j-1) built as t_i * (t_i^2)^(j-1)
            tsq = ti * ti
            for j in range(1, k + 1):
                dseries[:, j] = 2 * j * self.coeff[i, j] * ti * tpow
                tpow = tpow * tsq
            both = self._conv(prefix[i], suffix[i], k)
            grads[:, i] = self.total_fact * self._conv(both, dseries, k)[:, k]
        vals_p = np.maximum(total, 0.0)
        vals = vals_p ** (1.0 / self.p)
        scale = np.where(vals_p > 0, vals_p, 1.0) ** (1.0 / self.p - 1.0) / self.p
        return vals, scale[:, None] * grads


class _EnumEvenOracle:
    """Fallback exact even oracle by multiindex enumeration (small cases)."""

    exact = True

    def __init__(self, spec: dists.DistributionSpec, p: int):
        self.p = p
        self.k = p // 2
        alphas = list(enumerate_multiindices(spec.dim, self.k))
        coeffs = np.array(
            [
                multinomial(p, tuple(2 * a for a in alpha))
                * dists.mixed_even_moment(spec, alpha)
                for alpha in alphas
            ]
        )
        keep = coeffs != 0.0
        self.alphas = np.array(alphas, dtype=np.int64)[keep]
        self.coeffs = coeffs[keep]

    def _powers(self, T: np.ndarray) -> np.ndarray:
        # powers[m, i, j] = T[m, i]^j for j up to 2k; avoids any division.
        out = np.empty(T.shape + (2 * self.k + 1,))
        out[..., 0] = 1.0
        for j in range(1, 2 * self.k + 1):
            out[..., j] = out[..., j - 1] * T
        return out

    def norm(self, T: np.ndarray) -> np.ndarray:
        vals_p = self._moment(T, self._powers(T))
        return np.maximum(vals_p, 0.0) ** (1.0 / self.p)

    def _moment(self, T: np.ndarray, pw: np.ndarray) -> np.ndarray:
        m = T.shape[0]
        vals = np.zeros(m)
        for alpha, c in zip(self.alphas, self.coeffs):
            term = np.full(m, c)
            for i, a in enumerate(alpha):
                if a:
                    term = term * pw[:, i, 2 * a]
            vals += term
        return vals

    def norm_and_grad(self, T: np.ndarray):
        m, n = T.shape
        pw = self._powers(T)
        vals_p = np.zeros(m)
        grads = np.zeros((m, n))
        for alpha, c in zip(self.alphas, self.coeffs):
            term = np.full(m, c)
            for i, a in enumerate(alpha):
                if a:
                    term = term * pw[:, i, 2 * a]
            vals_p += term
            for i, a in enumerate(alpha):
                if a:
                    part = np.full(m, 2 * a * c)
                    for j, aj in enumerate(alpha):
                        if aj:
                            e = 2 * aj - (1 if j == i else 0)
                            if e:
                                part = part * pw[:, j, e]
                    grads[:, i] += part
        vals_p = np.maximum(vals_p, 0.0)
        vals = vals_p ** (1.0 / self.p)
        scale = np.where(vals_p > 0, vals_p, 1.0) ** (1.0 / self.p - 1.0) / self.p
        return vals, scale[:, None] * grads


class _SaaOracle:
    """Empirical moment norm on a frozen cache (deterministic SAA objective).

    Even integer p takes a single-precision path: with z = X t the moment
    mean(z^p) is the self inner product of z^(p/2), and the gradient weight
    z^(p-1) is one extra product, so the whole evaluation is a short chain of
    elementwise multiplies plus two matrix products.  Single precision is
    three orders of magnitude below the SAA sampling error; an overflow guard
    (max row norm to the p-th power) reroutes heavy cases to the scaled
    double-precision path.
    """

    exact = False

    def __init__(self, data: np.ndarray, p: float):
        self.data = data
        self.p = float(p)
        self.count = data.shape[0]
        self._cov = None
        self._data32 = None
        if self.p == 2.0:
            # p = 2 collapses to a quadratic form; precompute the Gram matrix.
            self._cov = data.T @ data / self.count
            return
        row_max = float(np.sqrt((data * data).sum(axis=1).max()))
        if self.p == int(self.p) and int(self.p) % 2 == 0:
            if row_max ** self.p < 1e30:
                self._data32 = data.astype(np.float32)
                # single precision: objective noise ~1e-7 relative; the
                # ascent loop must not chase gains below this
                self.noise_floor = 1e-6

    def _even_chain(self, z: np.ndarray, want_grad: bool):
        # Returns (mean z^p per column, z^(p-1) or None).
        k2 = int(self.p) // 2
        cache = {1: z}

        def power(e: int) -> np.ndarray:
            if e in cache:
                return cache[e]
            half = power(e // 2)
            out = half * half if e % 2 == 0 else power(e - e // 2) * power(e // 2)
            cache[e] = out
            return out

        zh = power(k2)
        mp = np.einsum("ij,ij->j", zh, zh, dtype=np.float64) / self.count
        wg = None
        if want_grad:
            wg = zh * power(k2 - 1) if k2 > 1 else zh
        return mp, wg

    def norm(self, T: np.ndarray) -> np.ndarray:
        if self._cov is not None:
            q = np.einsum("mi,ij,mj->m", T, self._cov, T)
            return np.sqrt(np.maximum(q, 0.0))
        if self._data32 is not None:
            z = self._data32 @ T.astype(np.float32).T
            mp, _ = self._even_chain(z, want_grad=False)
            return np.maximum(mp, 0.0) ** (1.0 / self.p)
        return self._slow(T, want_grad=False)[0]

    def norm_and_grad(self, T: np.ndarray):
        if self._cov is not None:
            ct = T @ self._cov
            q = np.maximum((ct * T).sum(axis=1), 1e-300)
            vals = np.sqrt(q)
            return vals, ct / vals[:, None]
        if self._data32 is not None:
            z = self._data32 @ T.astype(np.float32).T
            mp, wg = self._even_chain(z, want_grad=True)
            mp = np.maximum(mp, 1e-300)
            vals = mp ** (1.0 / self.p)
            grads = (self._data32.T @ wg).astype(np.float64).T / self.count
            return vals, grads * (mp ** (1.0 / self.p - 1.0))[:, None]
        return self._slow(T, want_grad=True)

    def _slow(self, T: np.ndarray, want_grad: bool):
        # Generic real p >= 2, double precision, scaled by the column max.
        p = self.p
        z = self.data @ T.T  # (N, m)
        a = np.abs(z)
        amax = np.maximum(a.max(axis=0), 1e-300)
        a /= amax
        w = a**p
        mp = np.maximum(w.mean(axis=0), 1e-300)
        vals = amax * mp ** (1.0 / p)
        if not want_grad:
            return vals, None
        wg = a ** (p - 1.0) * np.sign(z)
        # d/dt (mean|<t,x>|^p)^(1/p) = m^(1/p-1) mean(|z|^(p-1) sgn z * x);
        # the amax powers cancel between the two factors.
        grads = (self.data.T @ wg).T / self.count
        return vals, grads * (mp ** (1.0 / p - 1.0))[:, None]


def _is_product_like(spec: dists.DistributionSpec) -> bool:
    if spec.family in ("gaussian", "exponential", "rademacher", "cube", "product"):
        return True
    if spec.family == "linear_image":
        return dists._is_diagonal(spec.matrix) and _is_product_like(spec.base)
    return False


def _closed_form_oracle(spec: dists.DistributionSpec, p: float):
    """Oracle for families whose projection law is one-dimensional, any real p."""
    if spec.family in ("gaussian", "sphere"):
        # <t, X> is distributed as |t|_2 times the first marginal.
        return _EllTwoOracle(dists.marginal_abs_moment(spec, p) ** (1.0 / p))
    if spec.family == "sparse":
        n = spec.dim
        return _EllPOracle(float(n) ** (0.5 - 1.0 / p), p)
    if p == 2.0:
        cov = dists.covariance(spec)
        if np.allclose(cov, cov[0, 0] * np.eye(spec.dim), atol=1e-12):
            return _EllTwoOracle(math.sqrt(cov[0, 0]))
    return None


def build_norm_oracle(source: Source, p: float,
                      opts: Optional[DualSolveOptions] = None):
    """Moment-norm oracle for the solver and for covering gauges.

    A SampleCache always yields the SAA oracle on its own data.  A spec uses
    opts.evaluator: "auto" prefers closed forms, then exact even moments,
    then SAA with opts.sample_budget rows; "exact" raises when no exact route
    exists; "saa" forces sampling.
    """
    opts = opts or DualSolveOptions()
    if isinstance(source, dists.SampleCache):
        return _SaaOracle(source.data, p)
    spec = source
    if opts.evaluator in ("auto", "exact"):
        oracle = _closed_form_oracle(spec, p)
        if oracle is not None:
            return oracle
        if p >= 2 and p == int(p) and int(p) % 2 == 0 and spec.has_exact_mixed_moments:
            p_int = int(p)
            if _is_product_like(spec):
                k = p_int // 2
                moments = np.array(
                    [
                        [
                            dists.mixed_even_moment(spec, _unit_alpha(spec.dim, i, j))
                            for j in range(k + 1)
                        ]
                        for i in range(spec.dim)
                    ]
                )
                return _ProductEvenOracle(moments, p_int)
            if multiindex_count(spec.dim, p_int // 2) <= _MAX_CERT_TERMS:
                return _EnumEvenOracle(spec, p_int)
        if opts.evaluator == "exact":
            raise dists.ExactUnavailable(
                f"no exact norm evaluator for family {spec.family!r} at p={p}"
            )
    cache = dists.sample(spec, opts.sample_budget, derive_seed(opts.seed, _SAA_STREAM))
    return _SaaOracle(cache.data, p)


def _unit_alpha(n: int, i: int, j: int) -> tuple[int, ...]:
    alpha = [0] * n
    alpha[i] = j
    return tuple(alpha)


# ---------------------------------------------------------------------------
# ascent


def _ascend(oracle, s: np.ndarray, T0: np.ndarray, opts: DualSolveOptions):
    """Maximize <t,s>/||t|| over unit t, all starts as rows of T0.

    Returns (best_value, best_unit_t, iterations, converged_flag).
    """
    T = T0 / np.maximum(np.linalg.norm(T0, axis=1, keepdims=True), 1e-300)
    m = T.shape[0]

    def objective(Tm):
        vals, grads = oracle.norm_and_grad(Tm)
        vals = np.maximum(vals, 1e-300)
        f = (Tm @ s) / vals
        # gradient of the ratio, then projected onto the sphere tangent
        g = (s[None, :] - f[:, None] * grads) / vals[:, None]
        g -= (g * Tm).sum(axis=1, keepdims=True) * Tm
        return f, g

    # Orient starts toward s so the ratio starts nonnegative.
    signs = np.sign(T @ s)
    signs[signs == 0] = 1.0
    T *= signs[:, None]

    f, g = objective(T)
    # Floor the gradient norm well above denormals: a start sitting at a
    # stationary point would otherwise get an astronomical first step.
    gnorm = np.maximum(np.linalg.norm(g, axis=1), 1e-12)
    # Initial step targets a ~0.3 radian move regardless of objective scale.
    step = 0.3 / gnorm
    alive = np.ones(m, dtype=bool)
    quiet = np.zeros(m, dtype=np.int64)
    rejects = np.zeros(m, dtype=np.int64)
    iters = 0
    backtracking = opts.step_rule == "backtracking"
    tol = max(opts.tolerance, getattr(oracle, "noise_floor", 0.0))
    while alive.any() and iters < opts.max_iters:
        iters += 1
        Tn = T + step[:, None] * g
        Tn /= np.maximum(np.linalg.norm(Tn, axis=1, keepdims=True), 1e-300)
        fn, gn = objective(Tn)
        if backtracking:
            better = fn >= f
            gain = np.where(better, fn - f, 0.0)
            accept = better & alive
            T = np.where(accept[:, None], Tn, T)
            g = np.where(accept[:, None], gn, g)
            f = np.where(accept, fn, f)
            step = np.where(accept, step * 1.3, step * 0.5)
            small = gain <= tol * np.maximum(np.abs(f), 1e-30)
            quiet = np.where(accept & small, quiet + 1, np.where(accept, 0, quiet))
            rejects = np.where(accept, 0, rejects + 1)
            # 20 consecutive rejections = step shrank a millionfold with no
            # progress; the row started at (or reached) a local optimum
            alive &= ~((quiet >= 3) | (rejects >= 20) | (step < 1e-14))
        else:
            gain = np.abs(fn - f)
            T, g, f = Tn, gn, fn
            alive &= gain > tol * np.maximum(np.abs(f), 1e-30)
    best = int(np.argmax(f))  # ties: lowest start index (argmax first hit)
    return float(f[best]), T[best], iters, not bool(alive[best])


def _start_battery(s_unit: np.ndarray, n_starts: int, dim: int,
                   gen: np.random.Generator) -> np.ndarray:
    """s itself, then signed axes of the largest |s_i|, then random fill."""
    rows = [s_unit]
    order = np.argsort(-np.abs(s_unit))
    for i in order[: min(4, dim)]:
        if len(rows) >= n_starts:
            break
        e = np.zeros(dim)
        e[i] = 1.0 if s_unit[i] >= 0 else -1.0
        rows.append(e)
    while len(rows) < n_starts:
        rows.append(gen.standard_normal(dim))
    return np.array(rows[:n_starts])


# ---------------------------------------------------------------------------
# dual norm


def centroid_norm(source: Source, p: float, s: np.ndarray,
                  opts: Optional[DualSolveOptions] = None) -> norms_mod.NormEstimate:
    """Dual norm sup{<t,s> : ||t||_(p,X) <= 1} by multi-start ascent.

    The returned estimate carries the maximizing direction (rescaled to unit
    moment norm) as a witness: any feasible t certifies value >= <t,s>.  For
    unconditional families with exact even moments at even p, a closed-form
    upper-bound certificate is attached, so value is sandwiched.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    opts = opts or DualSolveOptions()
    s = np.asarray(s, dtype=float)
    smag = float(np.linalg.norm(s))
    spec = source.spec if isinstance(source, dists.SampleCache) else source
    if s.shape != (spec.dim,):
        raise ValueError("s must have shape (dim,)")
    if smag == 0.0:
        return norms_mod.NormEstimate(0.0, 0.0, 0.0, "exact_even")
    oracle = build_norm_oracle(source, p, opts)
    gen = derived_rng(opts.seed, _START_STREAM)
    T0 = _start_battery(s / smag, opts.starts, spec.dim, gen)
    value, t_best, iters, converged = _ascend(oracle, s, T0, opts)
    nrm = float(oracle.norm(t_best[None, :])[0])
    witness = t_best / max(nrm, 1e-300)
    method = "exact_even" if oracle.exact else "monte_carlo"
    if oracle.exact:
        lo = hi = value
    else:
        # CI from the SAA noise of the witness norm: value = <w,s>/||w||.
        w = np.abs(oracle.data @ t_best)
        wmax = float(w.max())
        pow_w = (w / max(wmax, 1e-300)) ** p
        blo, bhi = norms_mod.bootstrap_mean_ci(
            pow_w, 400, derived_rng(opts.seed, _START_STREAM, 1)
        )
        lo = value * float(pow_w.mean()) ** (1.0 / p) / max(bhi, 1e-300) ** (1.0 / p)
        hi = value * float(pow_w.mean()) ** (1.0 / p) / max(blo, 1e-300) ** (1.0 / p)
    upper = upper_src = None
    if p == int(p) and int(p) % 2 == 0 and spec.is_unconditional and spec.has_exact_mixed_moments:
        upper = _cauchy_schwarz_upper(spec, int(p), s)
        upper_src = "cauchy_schwarz" if upper is not None else None
    return norms_mod.NormEstimate(
        value=value,
        ci_low=lo,
        ci_high=hi,
        method=method,
        witness=witness,
        witness_value=value,
        upper_bound=upper,
        upper_bound_source=upper_src,
        diagnostics={"iterations": iters, "converged": converged,
                     "lower_bound_only": not converged, "starts": opts.starts},
    )


def _cauchy_schwarz_upper(spec: dists.DistributionSpec, p: int,
                          s: np.ndarray) -> Optional[float]:
    """Closed-form upper certificate for unconditional exact-moment families.

    (sum over |alpha| = k of multinomial(k, alpha)^2 / binom(2k, 2 alpha)
     * s^(2 alpha) / E X^(2 alpha))^(1/2k)

    Valid only when E X^(2 alpha) > 0 for every alpha with s^(2 alpha) > 0;
    returns None otherwise (and for term counts past the enumeration cap).
    """
    k = p // 2
    n = spec.dim
    if multiindex_count(n, k) > _MAX_CERT_TERMS:
        return None
    total = 0.0
    for alpha in enumerate_multiindices(n, k):
        s_pow = 1.0
        for si, ai in zip(s, alpha):
            if ai:
                s_pow *= si ** (2 * ai)
        if s_pow == 0.0:
            continue
        mom = dists.mixed_even_moment(spec, alpha)
        if mom <= 0.0:
            return None
        m = multinomial(k, alpha)
        total += m * m / multinomial(p, tuple(2 * a for a in alpha)) * s_pow / mom
    return total ** (1.0 / p)


# ---------------------------------------------------------------------------
# nested moments


@dataclass(frozen=True)
class CentroidMomentReport:
    """Outcome of a nested dual-norm moment estimate.

    estimate is ((1/outer) sum_j ||x_j||^q)^(1/q) over fresh realizations
    x_j, with a log-domain bootstrap CI.  certified_lower recomputes the same
    statistic from per-sample witnesses evaluated outside the search: exactly
    when exact moments exist, else on an independent cache, so optimization
    bias cannot inflate it.
    """

    p: float
    q: float
    dim: int
    outer_samples: int
    estimate: norms_mod.NormEstimate
    certified_lower: float
    ratio_to_envelope: float
    capped_fraction: float
    mean_iterations: float
    evaluator: str
    seed: int
    spec_config: dict = field(repr=False, default_factory=dict)
    options: dict = field(repr=False, default_factory=dict)


def envelope(dim: int, p: float, mode: str = "mixed") -> float:
    """Reference envelope sqrt((n+p)/p), or sqrt(n/p) in proportional mode."""
    if mode == "mixed":
        return math.sqrt((dim + p) / p)
    if mode == "proportional":
        return math.sqrt(dim / p)
    raise ValueError(f"unknown mode {mode!r}")


def envelope_ratio(report: CentroidMomentReport, mode: str = "mixed") -> float:
    """estimate / envelope; pure arithmetic on the report."""
    return report.estimate.value / envelope(report.dim, report.p, mode)


def centroid_norm_moment(spec: dists.DistributionSpec, p: float, q: float,
                         outer: int, opts: Optional[DualSolveOptions] = None,
                         seed: int = 0) -> CentroidMomentReport:
    """(E ||X||^q under the p-dual norm)^(1/q) by a nested Monte Carlo solve.

    `outer` fresh realizations (independent of any SAA cache behind the norm)
    are each sent through the ascent, warm-started from the previous optimum
    and from x/|x|; the first sample gets the full start battery.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    if q < 1:
        raise ValueError("q must be >= 1")
    if outer < 100:
        raise ValueError("outer must be >= 100")
    opts = opts or DualSolveOptions()
    oracle = build_norm_oracle(spec, p, opts)
    xs = dists.sample(spec, outer, derive_seed(seed, _OUTER_STREAM)).data
    witness_oracle = oracle
    if not oracle.exact:
        # Independent cache for certified witness values: re-evaluating the
        # witness outside the search removes the SAA optimization bias.
        wit_cache = dists.sample(spec, opts.sample_budget,
                                 derive_seed(seed, _WITNESS_STREAM))
        witness_oracle = _SaaOracle(wit_cache.data, p)
    gen = derived_rng(opts.seed, _START_STREAM, 2)
    values = np.empty(outer)
    witness_values = np.empty(outer)
    capped = 0
    iters_total = 0
    prev = None
    for j in range(outer):
        x = xs[j]
        xmag = float(np.linalg.norm(x))
        if xmag == 0.0:
            values[j] = 0.0
            witness_values[j] = 0.0
            continue
        if prev is None:
            T0 = _start_battery(x / xmag, opts.starts, spec.dim, gen)
        else:
            T0 = np.vstack([prev, x / xmag])
        val, t_best, iters, converged = _ascend(oracle, x, T0, opts)
        values[j] = val
        iters_total += iters
        if not converged:
            capped += 1
        prev = t_best
        if witness_oracle is oracle:
            witness_values[j] = val
        else:
            wn = float(witness_oracle.norm(t_best[None, :])[0])
            witness_values[j] = float(t_best @ x) / max(wn, 1e-300)
    est_val, lo, hi = _power_mean_ci(values, q, derived_rng(seed, _OUTER_STREAM, 10**6))
    cert, _, _ = _power_mean_ci(witness_values, q, None)
    estimate = norms_mod.NormEstimate(
        value=est_val, ci_low=lo, ci_high=hi,
        method="exact_even" if oracle.exact else "monte_carlo",
        witness_value=cert,
        diagnostics={"outer_samples": outer, "capped": capped},
    )
    return CentroidMomentReport(
        p=p, q=q, dim=spec.dim, outer_samples=outer,
        estimate=estimate,
        certified_lower=cert,
        ratio_to_envelope=est_val / envelope(spec.dim, p),
        capped_fraction=capped / outer,
        mean_iterations=iters_total / outer,
        evaluator="exact" if oracle.exact else "saa",
        seed=seed,
        spec_config=spec.to_config(),
        options={
            "starts": opts.starts, "max_iters": opts.max_iters,
            "step_rule": opts.step_rule, "tolerance": opts.tolerance,
            "sample_budget": opts.sample_budget, "seed": opts.seed,
            "evaluator": opts.evaluator,
        },
    )


def _power_mean_ci(values: np.ndarray, q: float, gen):
    """((1/m) sum v^q)^(1/q) with percentile bootstrap in the scaled domain."""
    vmax = float(np.max(values))
    if vmax <= 0.0:
        return 0.0, 0.0, 0.0
    w = (values / vmax) ** q
    point = vmax * float(w.mean()) ** (1.0 / q)
    if gen is None:
        return point, point, point
    lo, hi = norms_mod.bootstrap_mean_ci(w, 400, gen)
    return point, vmax * max(lo, 0.0) ** (1.0 / q), vmax * hi ** (1.0 / q)


# ---------------------------------------------------------------------------
# exponential family tail witness


def exponential_tail_witness(spec: dists.DistributionSpec, p: float,
                             t_grid, samples: int, seed: int) -> dict:
    """Tail lower bounds for the dual norm of the symmetric exponential family.

    The direction (2/p) e_1 has moment norm (2/p) ||X_1||_p <= 1, so it is
    feasible and P(||X||_dual >= t sqrt(n/p)) >= P((2/p)|X_1| >= t sqrt(n/p)).
    Each grid row reports that empirical frequency (binomial two-sigma CI)
    and the analytic bound exp(-t sqrt(np) / sqrt(2)).  The moment form at
    q = sqrt(np) is exact arithmetic: (2/p) ||X_1||_q.
    """
    if spec.family != "exponential":
        raise ValueError("witness requires the exponential family")
    n = spec.dim
    gauge = (2.0 / p) * dists.marginal_abs_moment(spec, p) ** (1.0 / p)
    if gauge > 1.0 + 1e-9:
        raise ValueError(f"witness direction infeasible: gauge {gauge:.6f} > 1")
    thresholds = np.array([t * math.sqrt(n * p) / 2.0 for t in t_grid])
    # The event depends on a single coordinate; sample the 1-d marginal.
    draws = dists.sample(dists.exponential(1), samples, seed).data[:, 0]
    a = np.abs(draws)
    counts = (a[:, None] >= thresholds[None, :]).sum(axis=0)
    total = a.size
    rows = []
    for t, thr, c in zip(t_grid, thresholds, counts):
        freq = c / total
        se = math.sqrt(max(freq * (1 - freq), 0.0) / total)
        rows.append({
            "t": float(t),
            "threshold": float(thr),
            "frequency": freq,
            "ci_low": max(freq - 2 * se, 0.0),
            "ci_high": min(freq + 2 * se, 1.0),
            "analytic_bound": math.exp(-t * math.sqrt(n * p) / math.sqrt(2.0)),
            "samples": total,
        })
    qm = math.sqrt(n * p)
    moment_witness = (2.0 / p) * dists.marginal_abs_moment(spec, qm) ** (1.0 / qm)
    # independent route to the same quantity: E|X_1|^q = Gamma(q+1) 2^(-q/2)
    # for the unit-variance two-sided exponential marginal
    moment_reference = (2.0 / p) * math.exp(
        (math.lgamma(qm + 1.0) - qm * math.log(2.0) / 2.0) / qm)
    return {
        "p": p,
        "dim": n,
        "witness_gauge": gauge,
        "rows": rows,
        "moment_q": qm,
        "moment_witness": moment_witness,
        "moment_reference": moment_reference,
    }


# ---------------------------------------------------------------------------
# sparse + euclidean decomposition for unconditional laws


class _CappedOracle:
    """max(base norm, cap * |t|_2): gauge of the intersection body."""

    def __init__(self, base, cap: float):
        self.base = base
        self.cap = cap
        self.exact = base.exact

    def norm(self, T):
        return np.maximum(self.base.norm(T), self.cap * np.linalg.norm(T, axis=1))

    def norm_and_grad(self, T):
        bv, bg = self.base.norm_and_grad(T)
        ev = self.cap * np.linalg.norm(T, axis=1)
        eg = self.cap * T / np.maximum(np.linalg.norm(T, axis=1), 1e-300)[:, None]
        pick = bv >= ev
        return np.where(pick, bv, ev), np.where(pick[:, None], bg, eg)


def unconditional_decomposition(spec: dists.DistributionSpec, p: float,
                                s: np.ndarray,
                                opts: Optional[DualSolveOptions] = None) -> dict:
    """Split the dual norm into a sparse part and a Euclidean-capped part.

    For unconditional X normalized to E|X_i| = 1 the dual norm is bounded by
    the best support of size floor(p) plus a constant times the sup over the
    doubly-capped body {||t|| <= 1, |t|_2 <= p^(-1/2)}.  Returns lhs, both
    terms, and the constant the split implies on this instance.  The input
    spec is rescaled internally to the E|X_i| = 1 normalization.
    """
    opts = opts or DualSolveOptions()
    n = spec.dim
    if not spec.is_unconditional:
        raise ValueError("decomposition requires an unconditional family")
    if n > 12 or p > n:
        raise ValueError("guard: need n <= 12 and p <= n")
    h = int(math.floor(p))
    if math.comb(n, h) > 10**6:
        raise ValueError("support enumeration too large")
    means = np.array([dists.marginal_abs_moment(spec, 1.0, i) for i in range(n)])
    if np.any(means <= 0):
        raise ValueError("degenerate coordinate: E|X_i| = 0")
    rescaled = not np.allclose(means, 1.0, atol=1e-12)
    norm_spec = (
        dists.linear_image(np.diag(1.0 / means), spec) if rescaled else spec
    )
    s = np.asarray(s, dtype=float)
    oracle = build_norm_oracle(norm_spec, p, opts)
    gen = derived_rng(opts.seed, _START_STREAM, 3)

    def solve(vec, orac, mask=None):
        vmag = np.linalg.norm(vec)
        if vmag == 0.0:
            return 0.0
        T0 = _start_battery(vec / vmag, max(opts.starts, 4), n, gen)
        if mask is not None:
            T0 = T0 * mask
            keep = np.linalg.norm(T0, axis=1) > 1e-12
            if not keep.any():
                return 0.0
            T0 = T0[keep]
            masked = _MaskedOracle(orac, mask)
            val, _, _, _ = _ascend(masked, vec * mask, T0, opts)
            return val
        val, _, _, _ = _ascend(orac, vec, T0, opts)
        return val

    lhs = solve(s, oracle)
    term_sparse = 0.0
    for support in itertools.combinations(range(n), h):
        mask = np.zeros(n)
        mask[list(support)] = 1.0
        if np.all(s * mask == 0.0):
            continue
        term_sparse = max(term_sparse, solve(s, oracle, mask=mask))
    capped = _CappedOracle(oracle, math.sqrt(p))
    term_euclid = solve(s, capped)
    gap = lhs - term_sparse
    implied = gap / term_euclid if (gap > 0 and term_euclid > 0) else None
    return {
        "lhs": lhs,
        "term_sparse": term_sparse,
        "term_euclid": term_euclid,
        "implied_constant": implied,
        "support_size": h,
        "rescaled": rescaled,
    }


class _MaskedOracle:
    """Restrict an oracle to directions supported on a coordinate mask."""

    def __init__(self, base, mask: np.ndarray):
        self.base = base
        self.mask = mask
        self.exact = base.exact

    def norm(self, T):
        return self.base.norm(T * self.mask)

    def norm_and_grad(self, T):
        vals, grads = self.base.norm_and_grad(T * self.mask)
        return vals, grads * self.mask
