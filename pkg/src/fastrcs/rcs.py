"""Residual congruent subset (RCS) outlyingness and the FastRCS search.

The search draws many random (p+1)-subsets, grows each one to size h in a
few stages by ranking all observations on their averaged normalised squared
residuals, scores the grown subsets with the I-index (mean log-ratio of the
subset's mean squared residual to that of the h best fitted points, over
random elemental hyperplanes drawn from the subset) and keeps the subset with
the smallest score. The raw OLS fit on that subset is then re-weighted once.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .numkit import (
    SingularMatrixError,
    add_intercept,
    normal_quantile,
    ols_fit,
    solve_linear_batched,
)

MAX_SINGULAR_DRAWS = 100


class DegenerateDataError(ValueError):
    """No candidate subset could be evaluated (e.g. collinear design)."""


class _SkipSubset(Exception):
    pass


@dataclass
class Dataset:
    """Response ``y`` (n,) and predictors ``X`` (n, p-1); the model adds an intercept."""

    X: np.ndarray
    y: np.ndarray
    Z: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.y, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValueError(f"X has shape {X.shape} but y has length {y.shape[0]}")
        if X.shape[1] < 1:
            raise ValueError("at least one predictor is required")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise ValueError("data must be finite")
        if X.shape[0] <= X.shape[1] + 1:
            raise ValueError(f"need n > p, got n={X.shape[0]}, p={X.shape[1] + 1}")
        self.X = X
        self.y = y
        self.Z = add_intercept(X)

    @property
    def n(self):
        return self.y.shape[0]

    @property
    def p(self):
        return self.Z.shape[1]

    def zero_tol(self, tol):
        """Absolute residual size treated as zero for a relative tolerance ``tol``."""
        return tol * (1.0 + float(np.abs(self.y).max()))


@dataclass(frozen=True)
class Hyperplane:
    intercept: float
    slopes: np.ndarray

    @property
    def coef(self):
        return np.concatenate([[self.intercept], self.slopes])

    @classmethod
    def from_coef(cls, coef):
        coef = np.asarray(coef, dtype=float)
        return cls(float(coef[0]), coef[1:].copy())


@dataclass
class RcsConfig:
    alpha: float = 0.5
    K: int = 25
    L: int = 3
    num_starts: int | None = None
    seed: int = 1
    reweight_cutoff: float = 2.5
    exact_fit_tol: float = 1e-12
    n_jobs: int = 1

    def __post_init__(self):
        if not 0.5 <= self.alpha < 1.0:
            raise ValueError(f"alpha must lie in [0.5, 1), got {self.alpha}")
        if self.K < 1 or self.L < 1:
            raise ValueError("K and L must be at least 1")
        if self.num_starts is not None and self.num_starts < 1:
            raise ValueError("num_starts must be at least 1")
        if self.n_jobs < 1:
            raise ValueError("n_jobs must be at least 1")


@dataclass
class OutlyingnessReport:
    standardized_residuals: np.ndarray
    h_plus: np.ndarray
    good_set: np.ndarray
    flags: np.ndarray


@dataclass
class FitResult:
    """Output shared by FastRCS and the LTS baseline."""

    h: int
    h_star: np.ndarray
    raw_fit: tuple
    final_fit: tuple
    exact_fit: bool
    report: OutlyingnessReport
    reweighted_set: np.ndarray
    reweight_fallback: bool = False
    n_skipped: int = 0


@dataclass
class RcsResult(FitResult):
    i_index_of_best: float = 0.0


# ---------------------------------------------------------------------------
# small building blocks


def subset_size_h(n, p, alpha=0.5):
    """Size of the active subset for an assumed clean fraction ``alpha``."""
    h_half = -(-(n + p + 1) // 2)
    h = math.floor(h_half + (alpha - 0.5) * 2 * (n - h_half) + 1e-9)
    return int(min(max(h, h_half), n))


def candidate_rng(seed, index):
    """Independent generator for candidate ``index`` under master ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(int(index),))
    return np.random.Generator(np.random.PCG64(ss))


def exact_hyperplane(x, y):
    """Hyperplane through exactly p points; ``x`` has shape (p, p-1)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(y, dtype=float)
    if x.shape[0] != x.shape[1] + 1 or y.shape != (x.shape[0],):
        raise ValueError("need exactly p points in p-1 predictors")
    coef, singular = solve_linear_batched(add_intercept(x)[None], y[None])
    if singular[0]:
        raise SingularMatrixError("points are affinely degenerate")
    return Hyperplane.from_coef(coef[0])


def residual_distances(plane, data):
    coef = plane.coef if isinstance(plane, Hyperplane) else np.asarray(plane, dtype=float)
    return np.abs(data.y - data.Z @ coef)


def h_smallest(values, h):
    """Indices of the ``h`` smallest values, ties broken by lower index, sorted."""
    values = np.asarray(values, dtype=float)
    return np.sort(np.argsort(values, kind="stable")[:h])


def _smallest_by_rank(values, q):
    return np.argsort(values, kind="stable")[:q]


def _draw_planes(subset, data, K, rng):
    """K elemental hyperplanes through p distinct members of ``subset``.

    Singular draws are redrawn; after MAX_SINGULAR_DRAWS consecutive failures
    for one slot the subset is abandoned.
    """
    subset = np.asarray(subset)
    p = data.p
    s = subset.size
    if s < p:
        raise _SkipSubset
    coef = np.empty((K, p))
    todo = np.arange(K)
    for _ in range(MAX_SINGULAR_DRAWS):
        keys = rng.random((todo.size, s))
        pick = subset[np.argsort(keys, axis=1)[:, :p]]
        theta, singular = solve_linear_batched(data.Z[pick], data.y[pick])
        coef[todo] = theta
        todo = todo[singular]
        if todo.size == 0:
            return coef
    raise _SkipSubset


def _all_planes(subset, data):
    combos = np.array(list(itertools.combinations(np.asarray(subset), data.p)))
    theta, singular = solve_linear_batched(data.Z[combos], data.y[combos])
    return theta[~singular]


def _squared_residuals(coef, data):
    r = data.y[None, :] - coef @ data.Z.T
    return r * r


def _incongruence_rows(r2, subset, h, zero2):
    num = r2[:, subset].mean(axis=1)
    den = np.partition(r2, h - 1, axis=1)[:, :h].mean(axis=1)
    out = np.empty(r2.shape[0])
    both = (num <= zero2) & (den <= zero2)
    only_den = (den <= zero2) & ~both
    ok = ~(both | only_den)
    out[both] = 0.0
    out[only_den] = np.inf
    out[ok] = np.log(num[ok] / den[ok])
    return out


def incongruence(subset, plane, data, h, exact_fit_tol=1e-12):
    """Log-ratio of mean squared residual over ``subset`` to that over the h best fitted points."""
    subset = np.asarray(subset)
    if subset.size == 0:
        raise ValueError("subset must be non-empty")
    coef = plane.coef if isinstance(plane, Hyperplane) else np.asarray(plane, dtype=float)
    r2 = _squared_residuals(coef[None, :], data)
    zero2 = data.zero_tol(exact_fit_tol) ** 2
    return float(_incongruence_rows(r2, subset, h, zero2)[0])


def i_index(subset, data, K, rng, h=None, exact_fit_tol=1e-12, exhaustive=False):
    """Average incongruence of ``subset`` over K random in-subset hyperplanes.

    With ``exhaustive=True`` the average runs over every non-degenerate
    hyperplane through p members of the subset instead.
    """
    subset = np.asarray(subset)
    h = subset.size if h is None else h
    if exhaustive:
        coef = _all_planes(subset, data)
        if coef.shape[0] == 0:
            raise _SkipSubset
    else:
        coef = _draw_planes(subset, data, K, rng)
    r2 = _squared_residuals(coef, data)
    zero2 = data.zero_tol(exact_fit_tol) ** 2
    return float(_incongruence_rows(r2, subset, h, zero2).mean())


def growing_schedule(p, h, L):
    """Subset sizes after each of the L growing stages; the last one is h."""
    return [p + 1 + -(-(h - p - 1) * l // L) for l in range(1, L + 1)]


def grow_subset(start, data, h, K, L, rng, exact_fit_tol=1e-12):
    """Grow a (p+1)-subset to size h in L stages.

    Returns ``(subset, exact)``. ``exact`` is True when some drawn hyperplane
    fits h or more observations exactly; the subset then holds h of them.
    """
    current = np.asarray(start)
    zero = data.zero_tol(exact_fit_tol)
    zero2 = zero * zero
    for q in growing_schedule(data.p, h, L):
        coef = _draw_planes(current, data, K, rng)
        r2 = _squared_residuals(coef, data)
        on_plane = (r2 <= zero2).sum(axis=1)
        hits = np.flatnonzero(on_plane >= h)
        if hits.size:
            return np.sort(_smallest_by_rank(r2[hits[0]], h)), True
        den = np.maximum(r2[:, current].mean(axis=1), zero2)
        R = (r2 / den[:, None]).mean(axis=0)
        current = _smallest_by_rank(R, q)
    return np.sort(current), False


# ---------------------------------------------------------------------------
# re-weighting and reporting


def reweight(raw_coef, data, cutoff=2.5, exact_fit_tol=1e-12):
    """One-step re-weighting of a raw fit.

    Returns ``(coef, sigma2, kept_indices, fallback)``. ``fallback`` is True
    when fewer than p points survive, or their design is singular, and the
    raw fit is returned unchanged.
    """
    r = residual_distances(raw_coef, data)
    zero = data.zero_tol(exact_fit_tol)
    s = float(np.median(r)) / normal_quantile(0.75)
    if s <= zero:
        keep = r <= zero
    else:
        keep = r / s <= cutoff
    kept = np.flatnonzero(keep)
    if kept.size >= data.p:
        try:
            coef, sigma2 = ols_fit(data.X, data.y, keep)
            return coef, sigma2, kept, False
        except SingularMatrixError:
            pass
    raw_coef = np.asarray(raw_coef, dtype=float)
    return raw_coef, None, kept, True


def outlyingness_report(coef, sigma2, data, h, cutoff=2.5, exact_fit_tol=1e-12):
    r = residual_distances(coef, data)
    sigma = math.sqrt(sigma2)
    if sigma > 0:
        std = r / sigma
    else:
        std = np.where(r <= data.zero_tol(exact_fit_tol), 0.0, np.inf)
    good = std <= cutoff
    return OutlyingnessReport(
        standardized_residuals=std,
        h_plus=h_smallest(r, h),
        good_set=np.flatnonzero(good),
        flags=~good,
    )


def finish_fit(h_star, data, h, cutoff, exact_fit_tol, exact=False):
    """Raw OLS fit on ``h_star`` followed by re-weighting and the report."""
    theta_star, sigma2_star = ols_fit(data.X, data.y, _mask(h_star, data.n))
    if exact:
        sigma2_star = 0.0
    coef, sigma2, kept, fallback = reweight(theta_star, data, cutoff, exact_fit_tol)
    if fallback:
        sigma2 = sigma2_star
    report = outlyingness_report(coef, sigma2, data, h, cutoff, exact_fit_tol)
    return dict(
        h=h,
        h_star=np.sort(np.asarray(h_star)),
        raw_fit=(theta_star, sigma2_star),
        final_fit=(coef, sigma2),
        exact_fit=exact,
        report=report,
        reweighted_set=kept,
        reweight_fallback=fallback,
    )


def _mask(idx, n):
    m = np.zeros(n, dtype=bool)
    m[idx] = True
    return m


# ---------------------------------------------------------------------------
# the search


def _evaluate_candidate(data, h, cfg, m):
    rng = candidate_rng(cfg.seed, m)
    start = rng.choice(data.n, size=data.p + 1, replace=False)
    try:
        subset, exact = grow_subset(start, data, h, cfg.K, cfg.L, rng, cfg.exact_fit_tol)
        if exact:
            return subset, 0.0, True
        score = i_index(subset, data, cfg.K, rng, h=h, exact_fit_tol=cfg.exact_fit_tol)
    except _SkipSubset:
        return None
    return subset, score, False


def _map_candidates(func, count, n_jobs):
    if n_jobs == 1:
        for m in range(count):
            out = func(m)
            yield out
            if out is not None and out[2]:
                return
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            yield from pool.map(func, range(count))


def fastrcs(data, cfg=None):
    """Run FastRCS on ``data`` and return an :class:`RcsResult`."""
    from .simgen import mp_starts

    cfg = cfg or RcsConfig()
    h = subset_size_h(data.n, data.p, cfg.alpha)
    num_starts = cfg.num_starts or mp_starts(data.p, cfg.alpha)

    best = None
    skipped = 0
    for out in _map_candidates(lambda m: _evaluate_candidate(data, h, cfg, m),
                               num_starts, cfg.n_jobs):
        if out is None:
            skipped += 1
            continue
        subset, score, exact = out
        if exact:
            best = out
            break
        # strict comparison keeps the first candidate on ties
        if best is None or score < best[1]:
            best = out
    if best is None:
        raise DegenerateDataError(
            f"all {num_starts} candidate subsets were degenerate")

    subset, score, exact = best
    try:
        fit = finish_fit(subset, data, h, cfg.reweight_cutoff, cfg.exact_fit_tol, exact)
    except SingularMatrixError as exc:
        raise DegenerateDataError("selected subset has a singular design") from exc
    return RcsResult(**fit, n_skipped=skipped, i_index_of_best=score)
