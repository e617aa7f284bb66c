"""Estimating functions, their Jacobians, and the sandwich covariance.

The three estimators are M-estimators: each fitted difficulty vector
solves (1/I) sum_i psi(b; u_i) = 0 for its method's psi.  This module
evaluates psi for arbitrary patterns, its exact Jacobian in b, and the
plug-in sandwich covariance V^-1 K V^-T / I at a fitted parameter.

All model-side integrals use the factorized moments from `objectives`;
data-side terms are empirical means.  Expectations over patterns are
never Monte Carlo.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ItemBank, ResponseMatrix
from .objectives import (
    LikelihoodTable,
    ModelMoments,
    likelihood_table,
    model_moments,
    validate_method_alpha,
)
from .quadrature import QuadratureGrid

__all__ = [
    "SandwichCovariance",
    "psi",
    "psi_jacobian",
    "mean_psi",
    "sandwich_covariance",
    "mmle_item_score",
    "CONDITION_LIMIT",
]

CONDITION_LIMIT = 1e12


class SingularJacobianError(np.linalg.LinAlgError):
    """Mean psi-Jacobian is numerically singular (condition number > 1e12)."""


@dataclass(frozen=True)
class SandwichCovariance:
    """Plug-in sandwich pieces: V = mean Jacobian, K = mean psi psi', cov = V^-1 K V^-T / I."""

    v: np.ndarray
    k: np.ndarray
    cov: np.ndarray
    n_respondents: int

    @property
    def standard_errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))


def _resolve(u, bank, grid, table):
    if table is None:
        rows = u.responses if isinstance(u, ResponseMatrix) else u
        table = likelihood_table(rows, bank, grid)
    return table


def _data_moments(table: LikelihoodTable, bank: ItemBank, grid: QuadratureGrid,
                  alpha: float, with_jacobian: bool):
    """Per-row integrals against the prior.

    q  : (n,)   marginal
    av : (n,)   integral of q(u|theta)^(1+alpha)
    a  : (n,J)  integral of q^(1+alpha) xi
    c  : (n,J)  integral of q^1 xi
    m  : (n,J,J) integral of q^(1+alpha) [(1+alpha) xi xi' + Sigma]  (if requested)
    m1 : (n,J,J) integral of q [xi xi' + Sigma]                      (if requested)
    """
    p = table.p
    u = table.u
    scale = bank.scale
    q = np.exp(table.log_marg)
    w1 = np.exp(table.log_cond + grid.log_weights[None, :])
    wa = np.exp((1.0 + alpha) * table.log_cond + grid.log_weights[None, :])
    c = scale * (w1 @ p - w1.sum(axis=1, keepdims=True) * u)
    a = scale * (wa @ p - wa.sum(axis=1, keepdims=True) * u)
    av = wa.sum(axis=1)
    if not with_jacobian:
        return q, av, a, c, None, None
    xi = scale * (p[None, :, :] - u[:, None, :])
    sig = -(scale**2) * (p * (1.0 - p))
    j_items = u.shape[1]
    eye = np.eye(j_items)
    m = (1.0 + alpha) * np.einsum("nk,nkj,nkl->njl", wa, xi, xi, optimize=True)
    m += np.einsum("nk,kj->nj", wa, sig)[:, :, None] * eye[None, :, :]
    m1 = np.einsum("nk,nkj,nkl->njl", w1, xi, xi, optimize=True)
    m1 += np.einsum("nk,kj->nj", w1, sig)[:, :, None] * eye[None, :, :]
    return q, av, a, c, m, m1


def psi(method: str, alpha: float | None, bank: ItemBank, u,
        grid: QuadratureGrid, table: LikelihoodTable | None = None) -> np.ndarray:
    """Estimating function psi(b; u) for one pattern or a batch of rows.

    mmle : -[int q xi f] / q(u; b)
    dpd  : -[int q^(1+b) xi f] / q(u; b) + T1
    gamma: -[int q^(1+g) xi f] / q(u; b) * C + [int q^(1+g) f] / q(u; b) * T1

    Returns (J,) for a single pattern, (n, J) for a batch.
    """
    alpha = validate_method_alpha(method, alpha)
    single = np.asarray(u).ndim <= 1 and table is None
    table = _resolve(u, bank, grid, table)
    q, av, a, c, _, _ = _data_moments(table, bank, grid, alpha, with_jacobian=False)
    if np.any(q <= 0.0):
        bad = int(np.argmin(q))
        raise FloatingPointError(
            f"marginal probability underflowed to 0 for pattern row {bad}"
        )
    if method == "mmle":
        out = -c / q[:, None]
    elif method == "dpd":
        mom = model_moments(bank, grid, alpha)
        out = -a / q[:, None] + mom.xi_integral[None, :]
    else:
        mom = model_moments(bank, grid, alpha)
        out = (-a / q[:, None]) * mom.power_integral \
            + (av / q)[:, None] * mom.xi_integral[None, :]
    return out[0] if single else out


def psi_jacobian(method: str, alpha: float | None, bank: ItemBank, u,
                 grid: QuadratureGrid, table: LikelihoodTable | None = None) -> np.ndarray:
    """Exact Jacobian of psi in b, shape (J, J) or (n, J, J) for a batch.

    The gamma Jacobian carries the cross terms (1+g) [T1 a' - a T1'] / q that
    arise from differentiating the model-side factors; they are required for
    the finite-difference identity d psi / d b' to hold.
    """
    alpha = validate_method_alpha(method, alpha)
    single = np.asarray(u).ndim <= 1 and table is None
    table = _resolve(u, bank, grid, table)
    q, av, a, c, m, m1 = _data_moments(table, bank, grid, alpha, with_jacobian=True)
    if method == "mmle":
        out = -m1 / q[:, None, None] + np.einsum("nj,nl->njl", c, c) / (q**2)[:, None, None]
    elif method == "dpd":
        mom = model_moments(bank, grid, alpha)
        out = -m / q[:, None, None] \
            + np.einsum("nj,nl->njl", a, c) / (q**2)[:, None, None] \
            + mom.xi2_integral[None, :, :]
    else:
        mom = model_moments(bank, grid, alpha)
        c_val = mom.power_integral
        t1 = mom.xi_integral
        out = -m / q[:, None, None] * c_val
        out += np.einsum("nj,nl->njl", a, c) / (q**2)[:, None, None] * c_val
        out -= np.einsum("j,nl->njl", t1, c) * (av / q**2)[:, None, None]
        out += (av / q)[:, None, None] * mom.xi2_integral[None, :, :]
        cross = np.einsum("j,nl->njl", t1, a) - np.einsum("nj,l->njl", a, t1)
        out += (1.0 + alpha) * cross / q[:, None, None]
    return out[0] if single else out


def mean_psi(method: str, alpha: float | None, bank: ItemBank, data,
             grid: QuadratureGrid, table: LikelihoodTable | None = None) -> np.ndarray:
    """(1/I) sum_i psi(b; u_i); zero at the method's estimator."""
    table = _resolve(data, bank, grid, table)
    return psi(method, alpha, bank, table.u, grid, table=table).mean(axis=0)


def _solve_guarded(v: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    cond = np.linalg.cond(v)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SingularJacobianError(
            f"mean psi-Jacobian condition number {cond:.2e} exceeds {CONDITION_LIMIT:.0e}; "
            "more respondents or a smaller alpha may be needed"
        )
    return np.linalg.solve(v, rhs)


def sandwich_covariance(method: str, alpha: float | None, bank: ItemBank, data,
                        grid: QuadratureGrid) -> SandwichCovariance:
    """Plug-in sandwich covariance at ``bank`` (normally a converged fit).

    V-hat is the empirical mean psi-Jacobian over the data, K-hat the
    empirical mean outer product; cov = V^-1 K V^-T / I.  Standard errors
    are square roots of the diagonal.
    """
    alpha = validate_method_alpha(method, alpha)
    table = _resolve(data, bank, grid, None)
    n = table.u.shape[0]
    psis = psi(method, alpha, bank, table.u, grid, table=table)
    jacs = psi_jacobian(method, alpha, bank, table.u, grid, table=table)
    v = jacs.mean(axis=0)
    k = psis.T @ psis / n
    vinv_k = _solve_guarded(v, k)
    cov = _solve_guarded(v, vinv_k.T).T / n
    cov = 0.5 * (cov + cov.T)
    return SandwichCovariance(v=v, k=k, cov=cov, n_respondents=n)


def mmle_item_score(u_j, bank: ItemBank, j: int, grid: QuadratureGrid) -> float:
    """Single-item marginal score for item j at responses ``u_j``.

    mean_i of [int q(u_ij | theta; b_j) xi_j f dtheta / int q(u_ij | theta; b_j) f dtheta].
    Depends only on b_j and column j of the data; the full-pattern psi does
    not share this separability because the posterior couples items.
    """
    sub_bank = ItemBank(difficulties=bank.difficulties[j : j + 1], scale=bank.scale)
    u = np.asarray(u_j, dtype=float).reshape(-1, 1)
    table = likelihood_table(u, sub_bank, grid)
    return float(-mean_psi("mmle", None, sub_bank, u, grid, table=table)[0])
