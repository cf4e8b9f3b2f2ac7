"""Bias, misclassification rate and curve summaries for the simulation harness."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, fields

import numpy as np

GROUP_KEYS = ("algorithm", "configuration", "p", "epsilon", "d_x", "alpha", "nu")


@dataclass
class CurvePoint:
    algorithm: str
    configuration: str
    p: int
    epsilon: float
    d_x: float
    alpha: float
    nu: float
    replication: int
    bias: float
    mis_rate: float


def bias(theta_hat):
    """Euclidean norm of the fitted coefficients (truth is the zero vector)."""
    return float(np.linalg.norm(np.asarray(theta_hat, dtype=float)))


def mis_rate(outliers, h_plus):
    """Share of the true outliers that made it into ``h_plus``; 0 when there are none."""
    outliers = np.asarray(outliers)
    if outliers.size == 0:
        return 0.0
    return float(np.isin(outliers, np.asarray(h_plus)).sum() / outliers.size)


def summarize(points, keys=GROUP_KEYS):
    """Median and 75th percentile (lower interpolation) of bias and mis_rate per group."""
    groups = {}
    for pt in points:
        key = tuple(getattr(pt, k) for k in keys)
        groups.setdefault(key, []).append(pt)
    rows = []
    for key, members in groups.items():
        b = np.array([m.bias for m in members])
        r = np.array([m.mis_rate for m in members])
        row = dict(zip(keys, key))
        row.update(
            replications=len(members),
            bias_median=float(np.percentile(b, 50, method="lower")),
            bias_p75=float(np.percentile(b, 75, method="lower")),
            mis_rate_median=float(np.percentile(r, 50, method="lower")),
            mis_rate_p75=float(np.percentile(r, 75, method="lower")),
        )
        rows.append(row)
    return rows


def write_points(points, fh):
    w = csv.writer(fh, lineterminator="\n")
    names = [f.name for f in fields(CurvePoint)]
    w.writerow(names)
    for pt in points:
        d = asdict(pt)
        w.writerow([d[k] for k in names])


def write_summary(rows, fh):
    if not rows:
        return
    w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
