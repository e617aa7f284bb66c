"""One-parameter logistic (Rasch) response model.

Pure functions of item difficulties ``b`` and ability ``theta``:
item characteristic curves, response-pattern probabilities conditional on
ability, quadrature marginals, the per-item score vector and its Jacobian.
All heavy consumers work in the log domain; probabilities that enter a
logarithm are floored at 1e-300.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .quadrature import QuadratureGrid

__all__ = [
    "DEFAULT_SCALE",
    "ItemBank",
    "ResponseMatrix",
    "icc",
    "log_icc_curves",
    "pattern_prob_given_theta",
    "log_pattern_prob_given_theta",
    "log_pattern_prob_matrix",
    "marginal_pattern_prob",
    "log_marginal_pattern_prob",
    "score_vector_xi",
    "score_jacobian_sigma",
    "enumerate_patterns",
]

DEFAULT_SCALE = 1.702
PROB_FLOOR = 1e-300
_PROB_CEIL = 1.0 - 1e-16


@dataclass(frozen=True)
class ItemBank:
    """Item difficulties on the logit scale plus the logistic scale constant."""

    difficulties: np.ndarray
    scale: float = DEFAULT_SCALE

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.difficulties, dtype=float))
        object.__setattr__(self, "difficulties", b)
        if b.ndim != 1 or len(b) < 1:
            raise ValueError("difficulties must be a non-empty 1-d array")
        if not np.all(np.isfinite(b)):
            raise ValueError("difficulties must be finite")
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    @property
    def n_items(self) -> int:
        return len(self.difficulties)


@dataclass(frozen=True)
class ResponseMatrix:
    """Binary response data: one row per respondent, one column per item."""

    responses: np.ndarray
    row_ids: tuple = ()

    def __post_init__(self):
        u = np.asarray(self.responses)
        if u.ndim != 2 or u.shape[0] < 1 or u.shape[1] < 1:
            raise ValueError("responses must be a non-empty 2-d array")
        if not np.isin(u, (0, 1)).all():
            raise ValueError("responses must contain only 0 and 1")
        object.__setattr__(self, "responses", u.astype(np.int8))
        ids = self.row_ids
        if not ids:
            ids = tuple(str(i + 1) for i in range(u.shape[0]))
        elif len(ids) != u.shape[0]:
            raise ValueError("row_ids length must match number of rows")
        object.__setattr__(self, "row_ids", tuple(str(r) for r in ids))

    @property
    def n_respondents(self) -> int:
        return self.responses.shape[0]

    @property
    def n_items(self) -> int:
        return self.responses.shape[1]


def _as_pattern_array(u, n_items: int) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(u, dtype=float))
    if arr.shape[-1] != n_items:
        raise ValueError(f"pattern length {arr.shape[-1]} != number of items {n_items}")
    return arr


def log_icc_curves(bank: ItemBank, theta) -> tuple[np.ndarray, np.ndarray]:
    """(log P, log Q) on a theta grid, shape (K, J), computed without underflow."""
    t = np.atleast_1d(np.asarray(theta, dtype=float))
    z = bank.scale * (t[:, None] - bank.difficulties[None, :])
    log_p = -np.logaddexp(0.0, -z)
    log_q = -np.logaddexp(0.0, z)
    return log_p, log_q


def icc(theta, j: int, bank: ItemBank):
    """P(u_j = 1 | theta) = 1 / (1 + exp(-D (theta - b_j))), clamped to (0, 1)."""
    if not 0 <= j < bank.n_items:
        raise IndexError(f"item index {j} out of range for {bank.n_items} items")
    log_p, _ = log_icc_curves(bank, theta)
    p = np.clip(np.exp(log_p[:, j]), PROB_FLOOR, _PROB_CEIL)
    return p if np.ndim(theta) else float(p[0])


def log_pattern_prob_matrix(u, bank: ItemBank, theta) -> np.ndarray:
    """log q(u | theta_k; b) for each pattern row and node, shape (n, K)."""
    arr = _as_pattern_array(u, bank.n_items)
    log_p, log_q = log_icc_curves(bank, theta)
    return arr @ log_p.T + (1.0 - arr) @ log_q.T


def log_pattern_prob_given_theta(u, theta: float, bank: ItemBank) -> float:
    """log of the locally independent product prod_j P_j^u_j Q_j^(1-u_j)."""
    return float(log_pattern_prob_matrix(u, bank, theta)[0, 0])


def pattern_prob_given_theta(u, theta: float, bank: ItemBank) -> float:
    return float(np.exp(log_pattern_prob_given_theta(u, theta, bank)))


def log_marginal_pattern_prob(u, bank: ItemBank, grid: QuadratureGrid) -> np.ndarray:
    """log of sum_k w_k q(u | theta_k; b), one value per pattern row."""
    lqm = log_pattern_prob_matrix(u, bank, grid.nodes)
    return logsumexp(lqm + grid.log_weights[None, :], axis=1)


def marginal_pattern_prob(u, bank: ItemBank, grid: QuadratureGrid):
    """Quadrature approximation of the marginal pattern probability q(u; b)."""
    out = np.exp(log_marginal_pattern_prob(u, bank, grid))
    return out if np.asarray(u).ndim > 1 else float(out[0])


def score_vector_xi(u, theta, bank: ItemBank) -> np.ndarray:
    """Gradient of log q(u | theta; b) in b: component j is D (P_j(theta) - u_j).

    Equals D (P_j - 1) for a correct response and D P_j for an incorrect one.
    Shapes broadcast as (n_patterns, K, J); scalar inputs collapse to (J,).
    """
    arr = _as_pattern_array(u, bank.n_items)
    log_p, _ = log_icc_curves(bank, theta)
    p = np.exp(log_p)
    xi = bank.scale * (p[None, :, :] - arr[:, None, :])
    if np.asarray(u).ndim <= 1 and np.ndim(theta) == 0:
        return xi[0, 0]
    return xi


def score_jacobian_sigma(theta, bank: ItemBank) -> np.ndarray:
    """Jacobian of xi in b: diagonal with entries -D^2 P_j(theta) (1 - P_j(theta)).

    Independent of the response pattern.  Scalar theta gives (J, J); a theta
    grid gives the diagonal entries with shape (K, J).
    """
    log_p, log_q = log_icc_curves(bank, theta)
    diag = -bank.scale**2 * np.exp(log_p + log_q)
    if np.ndim(theta) == 0:
        return np.diag(diag[0])
    return diag


def enumerate_patterns(n_items: int) -> np.ndarray:
    """All 2^J binary patterns, ordered with the last item varying fastest."""
    if n_items > 20:
        raise ValueError("pattern enumeration is capped at 20 items (2^20 patterns)")
    idx = np.arange(2**n_items, dtype=np.int64)
    shifts = np.arange(n_items - 1, -1, -1)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(np.int8)
