"""Least trimmed squares baseline (random starts plus concentration steps)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numkit import SingularMatrixError, ols_fit
from .rcs import (
    MAX_SINGULAR_DRAWS,
    DegenerateDataError,
    FitResult,
    _mask,
    _smallest_by_rank,
    candidate_rng,
    finish_fit,
    subset_size_h,
)

MAX_CSTEPS = 200


@dataclass
class LtsConfig:
    alpha: float = 0.5
    num_starts: int | None = None
    num_csteps_short: int = 2
    num_finalists: int = 10
    seed: int = 1
    reweight_cutoff: float = 2.5
    exact_fit_tol: float = 1e-12

    def __post_init__(self):
        if not 0.5 <= self.alpha < 1.0:
            raise ValueError(f"alpha must lie in [0.5, 1), got {self.alpha}")
        if self.num_starts is not None and self.num_starts < 1:
            raise ValueError("num_starts must be at least 1")
        if self.num_finalists < 1 or self.num_csteps_short < 0:
            raise ValueError("invalid C-step settings")


@dataclass
class LtsResult(FitResult):
    trimmed_rss: float = 0.0


def trimmed_rss(subset, data):
    """Residual sum of squares of the OLS fit on ``subset`` over its own members."""
    coef, _ = ols_fit(data.X, data.y, _mask(subset, data.n))
    r = data.y[subset] - data.Z[subset] @ coef
    return float(r @ r)


def c_step(current, data, h=None):
    """One concentration step: refit on ``current`` and keep the h best fitted points.

    Returns ``(new_subset, converged)``; a singular fit keeps ``current``.
    """
    current = np.asarray(current)
    h = current.size if h is None else h
    try:
        coef, _ = ols_fit(data.X, data.y, _mask(current, data.n))
    except SingularMatrixError:
        return np.sort(current), True
    r = data.y - data.Z @ coef
    new = np.sort(_smallest_by_rank(r * r, h))
    return new, bool(np.array_equal(new, np.sort(current)))


def _objective(subset, data):
    try:
        return trimmed_rss(subset, data)
    except SingularMatrixError:
        return np.inf


def _start(data, h, rng):
    for _ in range(MAX_SINGULAR_DRAWS):
        start = rng.choice(data.n, size=data.p + 1, replace=False)
        try:
            coef, _ = ols_fit(data.X, data.y, _mask(start, data.n))
        except SingularMatrixError:
            continue
        r = data.y - data.Z @ coef
        return np.sort(_smallest_by_rank(r * r, h))
    return None


def fastlts(data, cfg=None):
    """LTS fit with the same re-weighting and report as FastRCS."""
    from .simgen import mp_starts

    cfg = cfg or LtsConfig()
    h = subset_size_h(data.n, data.p, cfg.alpha)
    num_starts = cfg.num_starts or mp_starts(data.p, cfg.alpha)

    pool = []
    skipped = 0
    for m in range(num_starts):
        subset = _start(data, h, candidate_rng(cfg.seed, m))
        if subset is None:
            skipped += 1
            continue
        for _ in range(cfg.num_csteps_short):
            subset, done = c_step(subset, data, h)
            if done:
                break
        pool.append((_objective(subset, data), m, subset))
    if not pool:
        raise DegenerateDataError(f"all {num_starts} starting subsets were degenerate")

    pool.sort(key=lambda t: (t[0], t[1]))
    best = None
    for _, m, subset in pool[: cfg.num_finalists]:
        for _ in range(MAX_CSTEPS):
            subset, done = c_step(subset, data, h)
            if done:
                break
        obj = _objective(subset, data)
        if best is None or obj < best[0]:
            best = (obj, subset)

    obj, subset = best
    zero = data.zero_tol(cfg.exact_fit_tol)
    exact = obj <= zero * zero
    try:
        fit = finish_fit(subset, data, h, cfg.reweight_cutoff, cfg.exact_fit_tol, exact)
    except SingularMatrixError as exc:
        raise DegenerateDataError("selected subset has a singular design") from exc
    return LtsResult(**fit, n_skipped=skipped, trimmed_rss=obj)
