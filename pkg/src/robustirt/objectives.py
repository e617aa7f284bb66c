"""Divergence objectives, posterior weights, majorizers, and model-side moments.

Three empirical objectives share one set of building blocks: the
marginal-likelihood deviance (the MMLE target), the density-power
objective, and the gamma-divergence objective.  The model-side integrals
are evaluated with the local-independence factorization so no 2^J pattern
enumeration ever occurs; every factorized moment is validated against
enumeration in the test suite.

Per-respondent marginals are the dominant cost (I x K x J); they are
computed once per parameter value in a `LikelihoodTable` and shared by
objective, posterior, gradient and estimating-function code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .model import ItemBank, ResponseMatrix, log_icc_curves
from .quadrature import QuadratureGrid

__all__ = [
    "METHODS",
    "validate_method_alpha",
    "LikelihoodTable",
    "likelihood_table",
    "posterior_weights",
    "ModelMoments",
    "model_moments",
    "model_power_integral",
    "mmle_objective",
    "dpd_objective",
    "gamma_objective",
    "dpd_majorizer",
    "gamma_majorizer",
    "dpd_surrogate",
    "gamma_surrogate",
    "surrogate_gradient_hessian",
]

METHODS = ("mmle", "dpd", "gamma")


def validate_method_alpha(method: str, alpha: float | None) -> float:
    """Check the (method, alpha) combination; returns the effective alpha.

    DPD and gamma require 0 < alpha <= 1; MMLE ignores alpha and maps to 0.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    if method == "mmle":
        return 0.0
    if alpha is None:
        raise ValueError(f"method {method!r} requires alpha in (0, 1]")
    alpha = float(alpha)
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must satisfy 0 < alpha <= 1, got {alpha}")
    return alpha


@dataclass(frozen=True)
class LikelihoodTable:
    """Cached per-(data, difficulties) likelihood arrays.

    u           : (I, J) responses as float
    log_p, log_q: (K, J) log item probabilities on the grid
    log_cond    : (I, K) log q(u_i | theta_k; b)
    log_marg    : (I,)   log of the quadrature marginal q(u_i; b)
    """

    u: np.ndarray
    log_p: np.ndarray
    log_q: np.ndarray
    log_cond: np.ndarray
    log_marg: np.ndarray

    @property
    def marginals(self) -> np.ndarray:
        return np.exp(self.log_marg)

    @property
    def p(self) -> np.ndarray:
        return np.exp(self.log_p)


def likelihood_table(
    u: np.ndarray, bank: ItemBank, grid: QuadratureGrid
) -> LikelihoodTable:
    """Build the shared likelihood cache for response rows ``u``."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    log_p, log_q = log_icc_curves(bank, grid.nodes)
    log_cond = u @ log_p.T + (1.0 - u) @ log_q.T
    log_marg = logsumexp(log_cond + grid.log_weights[None, :], axis=1)
    return LikelihoodTable(u=u, log_p=log_p, log_q=log_q, log_cond=log_cond, log_marg=log_marg)


def _table(data, bank, grid) -> LikelihoodTable:
    if isinstance(data, LikelihoodTable):
        return data
    u = data.responses if isinstance(data, ResponseMatrix) else data
    return likelihood_table(u, bank, grid)


def posterior_weights(data, bank: ItemBank, grid: QuadratureGrid) -> np.ndarray:
    """Discrete posterior of theta_i on the grid, one row per respondent.

    Row i, node k: w_k q(u_i | theta_k; b) / sum_m w_m q(u_i | theta_m; b).
    Rows sum to 1 exactly up to rounding.
    """
    t = _table(data, bank, grid)
    h = np.exp(t.log_cond + grid.log_weights[None, :] - t.log_marg[:, None])
    return h / h.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# model-side factorized moments


@dataclass(frozen=True)
class ModelMoments:
    """Factorized integrals of q(u | theta; b)^(1+alpha) against the prior.

    With s_j = P_j^(1+a) + Q_j^(1+a) per node, the full-pattern integrals
    reduce to products over items:

    power_integral : C      = sum_k w_k prod_j s_j(theta_k)
    xi_integral    : T1_j   = integral of q^(1+a) xi_j        (J,)
    xi2_integral   : T2_jl  = integral of q^(1+a) [(1+a) xi xi' + Sigma]  (J, J)

    T1 is grad(C) / (1+a) and T2 is its Jacobian, so grad and Hessian of the
    power integral come for free.
    """

    alpha: float
    power_integral: float
    xi_integral: np.ndarray
    xi2_integral: np.ndarray

    @property
    def grad_power_integral(self) -> np.ndarray:
        return (1.0 + self.alpha) * self.xi_integral

    @property
    def hess_power_integral(self) -> np.ndarray:
        return (1.0 + self.alpha) * self.xi2_integral


def model_moments(bank: ItemBank, grid: QuadratureGrid, alpha: float) -> ModelMoments:
    scale = bank.scale
    log_p, log_q = log_icc_curves(bank, grid.nodes)
    p = np.exp(log_p)
    pa = np.exp((1.0 + alpha) * log_p)
    qa = np.exp((1.0 + alpha) * log_q)
    s = pa + qa
    e = scale * (pa * (p - 1.0) + qa * p)
    d = scale**2 * (pa * (p - 1.0) ** 2 + qa * p * p)
    sig = -(scale**2) * np.exp(log_p + log_q)
    log_s_total = np.sum(np.log(s), axis=1)
    ws = np.exp(grid.log_weights + log_s_total)          # w_k prod_j s_j
    c_val = float(ws.sum())
    ratio_e = e / s
    t1 = ws @ ratio_e
    x = (ws[:, None] * ratio_e).T @ ratio_e
    np.fill_diagonal(x, ws @ (d / s))
    y = np.diag(ws @ sig)
    t2 = (1.0 + alpha) * x + y
    return ModelMoments(alpha=alpha, power_integral=c_val, xi_integral=t1, xi2_integral=t2)


def model_power_integral(bank: ItemBank, grid: QuadratureGrid, alpha: float) -> float:
    """C(b) = integral of q(u | theta; b)^(1+alpha) f(theta) over theta and u."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    return model_moments(bank, grid, alpha).power_integral


# ---------------------------------------------------------------------------
# empirical objectives


def mmle_objective(data, bank: ItemBank, grid: QuadratureGrid) -> float:
    """Negative mean marginal log-likelihood."""
    t = _table(data, bank, grid)
    return float(-np.mean(t.log_marg))


def dpd_objective(data, bank: ItemBank, grid: QuadratureGrid, beta: float) -> float:
    """-(1/beta) mean_i q(u_i; b)^beta + (1/(1+beta)) C(b)."""
    validate_method_alpha("dpd", beta)
    t = _table(data, bank, grid)
    c_val = model_power_integral(bank, grid, beta)
    return float(-np.mean(np.exp(beta * t.log_marg)) / beta + c_val / (1.0 + beta))


def gamma_objective(data, bank: ItemBank, grid: QuadratureGrid, gamma: float) -> float:
    """-(1/gamma) log mean_i q(u_i; b)^gamma + (1/(1+gamma)) log C(b)."""
    validate_method_alpha("gamma", gamma)
    t = _table(data, bank, grid)
    c_val = model_power_integral(bank, grid, gamma)
    log_mean_pow = logsumexp(gamma * t.log_marg) - np.log(t.log_marg.shape[0])
    return float(-log_mean_pow / gamma + np.log(c_val) / (1.0 + gamma))


# ---------------------------------------------------------------------------
# majorizers (tangent upper bounds) and MM update surrogates
#
# Two fixed-weight functionals appear.  The *majorizer* carries the anchor
# correction (w_k^a h_ik^(1-a) in place of h_ik); it is tangent to the
# objective at the anchor and dominates it everywhere, which is what makes
# the descent audit possible.  The *surrogate* uses the plain anchor weights
# h_ik; it is not an upper bound, but its stationary point under
# self-consistent anchoring solves the estimating equations psi = 0 that
# define the estimator, so the MM update step minimizes it.


def _anchor_power_weights(weights: np.ndarray, grid: QuadratureGrid, alpha: float) -> np.ndarray:
    """w_k^alpha h_ik^(1-alpha), the tangency-preserving reweighting."""
    logw = grid.log_weights[None, :]
    with np.errstate(divide="ignore"):
        logh = np.log(weights)
    return np.exp(alpha * logw + (1.0 - alpha) * logh)


def _check_weights(weights: np.ndarray, n_rows: int, n_nodes: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.shape != (n_rows, n_nodes):
        raise ValueError(f"weights must have shape ({n_rows}, {n_nodes}), got {w.shape}")
    return w


def dpd_majorizer(data, bank_eval: ItemBank, weights: np.ndarray,
                  grid: QuadratureGrid, beta: float) -> float:
    """Tangent upper bound of dpd_objective for anchor posterior ``weights``.

    Equals the objective when evaluated at the anchor difficulties and
    dominates it at any other point.
    """
    validate_method_alpha("dpd", beta)
    t = _table(data, bank_eval, grid)
    omega = _anchor_power_weights(_check_weights(weights, *t.log_cond.shape), grid, beta)
    first = float(np.mean(np.sum(omega * np.exp(beta * t.log_cond), axis=1)))
    c_val = model_power_integral(bank_eval, grid, beta)
    return -first / beta + c_val / (1.0 + beta)


def gamma_majorizer(data, bank_eval: ItemBank, weights: np.ndarray,
                    grid: QuadratureGrid, gamma: float) -> float:
    """Tangent upper bound of gamma_objective for anchor posterior ``weights``."""
    validate_method_alpha("gamma", gamma)
    t = _table(data, bank_eval, grid)
    omega = _anchor_power_weights(_check_weights(weights, *t.log_cond.shape), grid, gamma)
    first = float(np.mean(np.sum(omega * np.exp(gamma * t.log_cond), axis=1)))
    c_val = model_power_integral(bank_eval, grid, gamma)
    return -np.log(first) / gamma + np.log(c_val) / (1.0 + gamma)


def dpd_surrogate(data, bank_eval: ItemBank, weights: np.ndarray,
                  grid: QuadratureGrid, beta: float) -> float:
    """Fixed-weight MM update surrogate for the DPD fit.

    -(1/beta)(1/I) sum_ik h_ik q(u_i | theta_k; b)^beta + (1/(1+beta)) C(b).
    Its self-anchored stationary points are the DPD estimating-equation
    roots; see `asymptotics.psi`.
    """
    validate_method_alpha("dpd", beta)
    t = _table(data, bank_eval, grid)
    h = _check_weights(weights, *t.log_cond.shape)
    first = float(np.mean(np.sum(h * np.exp(beta * t.log_cond), axis=1)))
    c_val = model_power_integral(bank_eval, grid, beta)
    return -first / beta + c_val / (1.0 + beta)


def gamma_surrogate(data, bank_eval: ItemBank, weights: np.ndarray,
                    grid: QuadratureGrid, gamma: float) -> float:
    """Fixed-weight MM update surrogate for the gamma fit (log-mean form)."""
    validate_method_alpha("gamma", gamma)
    t = _table(data, bank_eval, grid)
    h = _check_weights(weights, *t.log_cond.shape)
    first = float(np.mean(np.sum(h * np.exp(gamma * t.log_cond), axis=1)))
    c_val = model_power_integral(bank_eval, grid, gamma)
    return -np.log(first) / gamma + np.log(c_val) / (1.0 + gamma)


def _weighted_score_sums(w_ik: np.ndarray, u: np.ndarray, p: np.ndarray, scale: float):
    """Aggregated score sums for weights over (respondent, node) pairs.

    Returns (score, quad, sig_diag) where, with xi_ikj = D (P_kj - u_ij),

    score    = sum_ik w_ik xi_ik                  (J,)
    quad     = sum_ik w_ik xi_ik xi_ik'           (J, J)
    sig_diag = sum_ik w_ik sigma_j(theta_k)       (J,)  [sigma = -D^2 P Q]
    """
    wk = w_ik.sum(axis=0)
    wi = w_ik.sum(axis=1)
    score = scale * (wk @ p - wi @ u)
    m1 = p.T @ (w_ik.T @ u)
    quad = scale**2 * (p.T @ (wk[:, None] * p) - m1 - m1.T + u.T @ (wi[:, None] * u))
    sig_diag = -(scale**2) * (wk @ (p * (1.0 - p)))
    return score, quad, sig_diag


def surrogate_gradient_hessian(table: LikelihoodTable, bank: ItemBank,
                               weights: np.ndarray, grid: QuadratureGrid,
                               method: str, alpha: float):
    """Analytic gradient and Hessian of the MM update surrogate at ``bank``.

    ``table`` must be built at ``bank``.  For MMLE the surrogate is the
    EM complete-data objective -(1/I) sum_ik h_ik log q(u_i | theta_k; b).
    At a self-consistent anchor the gradient equals the estimating function
    mean for the corresponding method.
    """
    i_count = table.u.shape[0]
    p = table.p
    if method == "mmle":
        score, quad, sig_diag = _weighted_score_sums(weights, table.u, p, bank.scale)
        grad = score / i_count
        hess = -np.diag(sig_diag) / i_count
        return grad, hess
    mom = model_moments(bank, grid, alpha)
    w_ik = weights * np.exp(alpha * table.log_cond)
    score, quad, sig_diag = _weighted_score_sums(w_ik, table.u, p, bank.scale)
    if method == "dpd":
        grad = -score / i_count + mom.grad_power_integral / (1.0 + alpha)
        hess = -(alpha * quad + np.diag(sig_diag)) / i_count
        hess = hess + mom.hess_power_integral / (1.0 + alpha)
        return grad, hess
    if method == "gamma":
        s_val = w_ik.sum() / i_count
        g_s = alpha * score / i_count
        h_s = alpha * (alpha * quad + np.diag(sig_diag)) / i_count
        c_val = mom.power_integral
        g_c = mom.grad_power_integral
        h_c = mom.hess_power_integral
        grad = -g_s / (alpha * s_val) + g_c / ((1.0 + alpha) * c_val)
        hess = -(h_s / s_val - np.outer(g_s, g_s) / s_val**2) / alpha
        hess = hess + (h_c / c_val - np.outer(g_c, g_c) / c_val**2) / (1.0 + alpha)
        return grad, hess
    raise ValueError(f"unknown method {method!r}")
