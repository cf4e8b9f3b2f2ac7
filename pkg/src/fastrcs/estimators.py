"""scikit-learn compatible wrappers around :func:`fastrcs` and :func:`fastlts`."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .lts import LtsConfig, fastlts
from .rcs import Dataset, RcsConfig, fastrcs


def _seed(random_state):
    if random_state is None:
        return int(np.random.SeedSequence().entropy % 2**63)
    if isinstance(random_state, (int, np.integer)):
        return int(random_state)
    raise ValueError("random_state must be an int or None")


class _RobustRegressor(RegressorMixin, BaseEstimator):

    def _run(self, data):
        raise NotImplementedError

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True, dtype=float)
        self.n_features_in_ = X.shape[1]
        result = self._run(Dataset(X, y))
        coef, sigma2 = result.final_fit
        raw_coef, raw_sigma2 = result.raw_fit
        self.intercept_ = float(coef[0])
        self.coef_ = np.asarray(coef[1:])
        self.scale_ = float(np.sqrt(sigma2))
        self.raw_intercept_ = float(raw_coef[0])
        self.raw_coef_ = np.asarray(raw_coef[1:])
        self.raw_scale_ = float(np.sqrt(raw_sigma2))
        self.h_ = result.h
        self.h_subset_ = result.h_star
        self.h_plus_ = result.report.h_plus
        self.standardized_residuals_ = result.report.standardized_residuals
        self.outlier_mask_ = result.report.flags
        self.support_ = ~result.report.flags
        self.exact_fit_ = result.exact_fit
        self.result_ = result
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return self.intercept_ + X @ self.coef_


class FastRCSRegressor(_RobustRegressor):
    """Linear regression fitted on the residual congruent subset, then re-weighted.

    Parameters
    ----------
    alpha : float, default=0.5
        Assumed minimal fraction of clean observations, in [0.5, 1).
    n_hyperplanes : int, default=25
        Random elemental hyperplanes per subset (K).
    n_stages : int, default=3
        Growing stages (L).
    n_starts : int or None
        Random starting subsets; None picks the count from the 99% rule.
    cutoff : float, default=2.5
        Standardized residual threshold for flagging outliers.
    random_state : int or None, default=1
    n_jobs : int, default=1
        Threads used to evaluate candidates; results do not depend on it.

    Attributes
    ----------
    coef_, intercept_, scale_ : re-weighted fit
    raw_coef_, raw_intercept_, raw_scale_ : fit on the selected h-subset
    h_subset_ : indices of the selected h-subset
    outlier_mask_ : True for observations beyond ``cutoff``
    i_index_ : I-index of the selected subset
    """

    def __init__(self, alpha=0.5, n_hyperplanes=25, n_stages=3, n_starts=None,
                 cutoff=2.5, exact_fit_tol=1e-12, random_state=1, n_jobs=1):
        self.alpha = alpha
        self.n_hyperplanes = n_hyperplanes
        self.n_stages = n_stages
        self.n_starts = n_starts
        self.cutoff = cutoff
        self.exact_fit_tol = exact_fit_tol
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _run(self, data):
        cfg = RcsConfig(alpha=self.alpha, K=self.n_hyperplanes, L=self.n_stages,
                        num_starts=self.n_starts, seed=_seed(self.random_state),
                        reweight_cutoff=self.cutoff, exact_fit_tol=self.exact_fit_tol,
                        n_jobs=self.n_jobs)
        result = fastrcs(data, cfg)
        self.i_index_ = result.i_index_of_best
        return result


class FastLTSRegressor(_RobustRegressor):
    """Least trimmed squares with concentration steps and the same re-weighting."""

    def __init__(self, alpha=0.5, n_starts=None, n_csteps_short=2, n_finalists=10,
                 cutoff=2.5, exact_fit_tol=1e-12, random_state=1):
        self.alpha = alpha
        self.n_starts = n_starts
        self.n_csteps_short = n_csteps_short
        self.n_finalists = n_finalists
        self.cutoff = cutoff
        self.exact_fit_tol = exact_fit_tol
        self.random_state = random_state

    def _run(self, data):
        cfg = LtsConfig(alpha=self.alpha, num_starts=self.n_starts,
                        num_csteps_short=self.n_csteps_short,
                        num_finalists=self.n_finalists, seed=_seed(self.random_state),
                        reweight_cutoff=self.cutoff, exact_fit_tol=self.exact_fit_tol)
        result = fastlts(data, cfg)
        self.trimmed_rss_ = result.trimmed_rss
        return result
