"""Gauss-Hermite quadrature for the standard-normal ability prior.

Every marginal quantity in this package is an integral of the form
``int g(theta) phi(theta) dtheta`` with ``phi`` the N(0, 1) density.  The
grid produced here discretizes that integral as ``sum_k w_k g(theta_k)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite import hermgauss

__all__ = ["QuadratureGrid", "build_gauss_hermite", "expect_over_theta"]

MIN_NODES = 2
MAX_NODES = 200


@dataclass(frozen=True)
class QuadratureGrid:
    """Nodes and probability weights for integration against N(0, 1).

    Invariants: nodes strictly increasing and symmetric about zero,
    weights strictly positive and summing to one.
    """

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise ValueError("nodes and weights must be 1-d arrays of equal length")
        if len(nodes) < MIN_NODES:
            raise ValueError(f"need at least {MIN_NODES} quadrature nodes")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise ValueError("weights must be strictly positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 within 1e-12")

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def log_weights(self) -> np.ndarray:
        return np.log(self.weights)


def build_gauss_hermite(n_nodes: int = 21) -> QuadratureGrid:
    """Build the Gauss-Hermite rule transformed for the N(0, 1) prior.

    Physicists' nodes/weights (x_k, v_k) become theta_k = sqrt(2) x_k and
    w_k = v_k / sqrt(pi); the weights are renormalized to sum exactly to 1
    so total-probability identities hold without quadrature slack.
    """
    if not MIN_NODES <= n_nodes <= MAX_NODES:
        raise ValueError(
            f"n_nodes must satisfy {MIN_NODES} <= n_nodes <= {MAX_NODES}, got {n_nodes}"
        )
    x, v = hermgauss(n_nodes)
    nodes = np.sqrt(2.0) * x
    weights = v / np.sqrt(np.pi)
    weights = weights / weights.sum()
    return QuadratureGrid(nodes=nodes, weights=weights)


def expect_over_theta(g, grid: QuadratureGrid):
    """Approximate E[g(theta)] under the standard-normal prior.

    ``g`` maps a scalar node to a scalar or array; outputs are combined as
    ``sum_k w_k g(theta_k)``.
    """
    values = [np.asarray(g(t), dtype=float) for t in grid.nodes]
    acc = np.zeros_like(values[0])
    for w, val in zip(grid.weights, values):
        acc = acc + w * val
    return acc
