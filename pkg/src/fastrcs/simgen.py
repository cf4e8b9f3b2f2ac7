"""Adversarial contamination generator (Shift and Point-mass outliers)."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .datasets import atomic_write
from .numkit import chisq_quantile, normal_quantile
from .rcs import Dataset

TIGHT_VARIANCE = 1e-4


class Configuration(str, Enum):
    SHIFT = "shift"
    POINTMASS = "pointmass"


@dataclass
class ContaminationConfig:
    p: int
    epsilon: float
    configuration: Configuration = Configuration.POINTMASS
    d_x: float = 8.0
    nu: float = 1.0
    alpha: float = 0.5
    seed: int = 0
    n: int | None = None

    def __post_init__(self):
        self.configuration = Configuration(self.configuration)
        if self.p < 2:
            raise ValueError("p must be at least 2")
        if not 0.0 <= self.epsilon < 0.5:
            raise ValueError("epsilon must lie in [0, 0.5)")
        if self.nu < 0 or self.d_x < 0:
            raise ValueError("nu and d_x must be non-negative")
        if self.n is None:
            self.n = 25 * self.p
        if self.n <= self.p:
            raise ValueError("n must exceed p")

    @property
    def n_outliers(self):
        return int(math.floor(self.epsilon * self.n + 1e-9))


@dataclass
class GeneratedSample:
    data: Dataset
    outlier_indices: np.ndarray
    true_theta: np.ndarray
    sigma2: float = 1.0


def leverage_width(x, n, sigma=1.0):
    """Half-width of the asymptotic LS prediction interval at ``x`` under a unit design covariance."""
    x = np.asarray(x, dtype=float)
    xx = np.sum(x * x, axis=-1)
    return normal_quantile(0.975) * sigma * np.sqrt(1.0 + 1.0 / n + xx / (n - 1))


def mp_starts(p, alpha=0.5, confidence=0.99):
    """Number of random (p+1)-subsets needed to draw a clean one with the given confidence."""
    eps0 = 4.0 * (1.0 - alpha) / 5.0
    clean = (1.0 - eps0) ** (p + 1)
    if clean >= 1.0:
        return 1
    if clean <= 0.0:
        raise ValueError("contamination bound leaves no clean subsets")
    return max(1, math.ceil(math.log(1.0 - confidence) / math.log(1.0 - clean) - 1e-9))


def _translation(z, radius):
    # smallest shift t along the first axis with min_i ||z_i + t e1|| = radius
    rest2 = np.sum(z[:, 1:] ** 2, axis=1)
    feasible = rest2 <= radius * radius
    if not feasible.any():
        raise ValueError("outlier cloud too wide for the requested d_x")
    t = -z[feasible, 0] + np.sqrt(radius * radius - rest2[feasible])
    return float(t.max())


def generate(cfg):
    """Draw a contaminated sample; outliers occupy the last rows."""
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    n, p = cfg.n, cfg.p
    n_c = cfg.n_outliers
    n_u = n - n_c

    X_u = rng.standard_normal((n_u, p - 1))
    y_u = rng.standard_normal(n_u)
    if n_c == 0:
        X, y = X_u, y_u
    else:
        var = 1.0 if cfg.configuration is Configuration.SHIFT else TIGHT_VARIANCE
        sd = math.sqrt(var)
        X_c = sd * rng.standard_normal((n_c, p - 1))
        radius = cfg.d_x * math.sqrt(chisq_quantile(0.95, p - 1))
        X_c[:, 0] += _translation(X_c, radius)
        e = sd * rng.standard_normal(n_c)
        W = leverage_width(X_c, n)
        offset = float(np.max(cfg.nu * W - e))
        y_c = offset + e
        X = np.vstack([X_u, X_c])
        y = np.concatenate([y_u, y_c])

    return GeneratedSample(
        data=Dataset(X, y),
        outlier_indices=np.arange(n_u, n),
        true_theta=np.zeros(p),
        sigma2=1.0,
    )


def write_sample(sample, path, response="y"):
    """Write a sample as CSV plus ``<path>.outliers`` (one zero-based index per line)."""
    X, y = sample.data.X, sample.data.y
    header = [f"x{j + 1}" for j in range(X.shape[1])] + [response]
    atomic_write(path, lambda fh: _write_rows(fh, header, np.column_stack([X, y])))
    atomic_write(str(path) + ".outliers",
                 lambda fh: fh.writelines(f"{i}\n" for i in sample.outlier_indices))


def read_outlier_indices(path):
    with open(path) as fh:
        return np.array([int(line) for line in fh if line.strip()], dtype=int)


def _write_rows(fh, header, rows):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) for v in row])
