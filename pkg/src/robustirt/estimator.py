"""Scikit-learn style estimator facade over the fitting drivers."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .fitting import FitConfig, fit
from .model import DEFAULT_SCALE, ItemBank, log_icc_curves
from .objectives import mmle_objective
from .quadrature import build_gauss_hermite
from .validation import check_binary_matrix, check_theta

__all__ = ["RaschDifficultyEstimator"]


class RaschDifficultyEstimator(BaseEstimator):
    """Item-difficulty estimator for binary response matrices.

    Parameters
    ----------
    method : {"mmle", "dpd", "gamma"}
        Estimation objective: marginal maximum likelihood or one of the
        robust divergence objectives.
    alpha : float or None
        Robustness hyperparameter in (0, 1]; required for "dpd"/"gamma",
        ignored for "mmle".  Values near 0 recover MMLE.
    scale : float
        Logistic scale constant of the item characteristic curve.
    n_nodes : int
        Gauss-Hermite node count for the ability prior.
    tol : float
        Convergence threshold on max |b_j change| between iterations.
    max_iter : int
        Iteration budget.
    compute_se : bool
        Also compute the sandwich covariance and standard errors.

    Attributes
    ----------
    difficulties_ : ndarray of shape (n_items,)
    converged_ : bool
    n_iter_ : int
    stationarity_norm_ : float
    objective_trace_ : ndarray
    covariance_ : ndarray or None
    standard_errors_ : ndarray or None
    result_ : FitResult
    """

    def __init__(self, method="mmle", alpha=None, scale=DEFAULT_SCALE, n_nodes=21,
                 init=None, tol=1e-4, max_iter=1000, compute_se=False):
        self.method = method
        self.alpha = alpha
        self.scale = scale
        self.n_nodes = n_nodes
        self.init = init
        self.tol = tol
        self.max_iter = max_iter
        self.compute_se = compute_se

    def fit(self, X, y=None):
        X = check_binary_matrix(X)
        config = FitConfig(
            method=self.method,
            alpha=self.alpha,
            n_nodes=self.n_nodes,
            init=None if self.init is None else np.asarray(self.init, dtype=float),
            tol=self.tol,
            max_iter=self.max_iter,
            scale=self.scale,
            compute_se=self.compute_se,
        )
        result = fit(X, config)
        self.result_ = result
        self.difficulties_ = result.difficulties
        self.converged_ = result.converged
        self.n_iter_ = result.iterations
        self.stationarity_norm_ = result.stationarity_norm
        self.objective_trace_ = result.objective_trace
        self.covariance_ = result.covariance
        self.standard_errors_ = result.standard_errors
        self.n_features_in_ = X.shape[1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "difficulties_"):
            raise NotFittedError("this estimator has not been fitted yet")

    def predict_proba(self, theta):
        """Correct-response probabilities P(u_j = 1 | theta) per item.

        Returns an array of shape (len(theta), n_items).
        """
        self._check_fitted()
        t = check_theta(theta)
        bank = ItemBank(self.difficulties_, scale=self.scale)
        log_p, _ = log_icc_curves(bank, t)
        return np.exp(log_p)

    def score(self, X, y=None):
        """Mean marginal log-likelihood of ``X`` under the fitted difficulties."""
        self._check_fitted()
        X = check_binary_matrix(X)
        bank = ItemBank(self.difficulties_, scale=self.scale)
        grid = build_gauss_hermite(self.n_nodes)
        return -mmle_objective(X, bank, grid)
