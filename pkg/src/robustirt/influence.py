"""Empirical influence functions and the pattern-level influence table.

For an M-estimator with estimating function psi, the influence of a
response pattern u at the fitted parameter is -V^-1 psi(b-hat; u) with V
the empirical mean psi-Jacobian over the fitted data.  The table driver
repeats simulate/fit/evaluate cycles on clean data and averages the
per-pattern influence norms; gross-error sensitivity is the maximum of a
method's averaged norms over all patterns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .asymptotics import psi, psi_jacobian, _solve_guarded
from .fitting import FitConfig, fit
from .model import ItemBank, ResponseMatrix, enumerate_patterns, marginal_pattern_prob
from .objectives import likelihood_table
from .quadrature import QuadratureGrid, build_gauss_hermite
from .simulation import method_label

__all__ = ["InfluenceReport", "influence_function", "influence_table", "PATTERN_CAP"]

PATTERN_CAP = 20
MAX_FAILURE_FRACTION = 0.05


@dataclass(frozen=True)
class InfluenceReport:
    """Per-pattern influence norms for each method, with model probabilities.

    Rows are sorted by descending pattern probability; ties break
    lexicographically by pattern bits, descending.  ``norms[label]`` holds
    the averaged L2 norms aligned with ``patterns``;
    ``gross_error_sensitivity[label]`` is their maximum.
    """

    patterns: np.ndarray
    probabilities: np.ndarray
    norms: dict
    gross_error_sensitivity: dict
    true_bank: ItemBank
    n_respondents: int
    replications: int
    skipped: int = 0


def influence_function(method: str, alpha: float | None, bank_hat: ItemBank, u,
                       data, grid: QuadratureGrid,
                       mean_jacobian: np.ndarray | None = None) -> np.ndarray:
    """-V^-1 psi(b-hat; u) with V the empirical mean Jacobian over ``data``.

    ``u`` may be a single pattern (returns (J,)) or a batch (returns (n, J)).
    Precomputing ``mean_jacobian`` skips the pass over the data.
    """
    if mean_jacobian is None:
        rows = data.responses if isinstance(data, ResponseMatrix) else np.asarray(data)
        table = likelihood_table(rows, bank_hat, grid)
        mean_jacobian = psi_jacobian(
            method, alpha, bank_hat, table.u, grid, table=table
        ).mean(axis=0)
    single = np.asarray(u).ndim <= 1
    values = psi(method, alpha, bank_hat, np.atleast_2d(u), grid)
    out = -_solve_guarded(mean_jacobian, values.T).T
    return out[0] if single else out


def _sort_order(patterns: np.ndarray, probabilities: np.ndarray) -> np.ndarray:
    keys = [patterns[:, j] for j in range(patterns.shape[1] - 1, -1, -1)]
    order = np.lexsort(keys + [probabilities])
    return order[::-1]


def influence_table(true_bank: ItemBank, n_respondents: int, methods,
                    replications: int, seed: int,
                    n_nodes: int = 21) -> InfluenceReport:
    """Averaged influence norms over simulate/fit/evaluate replications.

    Each replication draws clean 1PL data at ``true_bank``, fits every
    method, and evaluates the influence norm of all 2^J patterns with that
    replication's fitted parameter and empirical Jacobian.  Probabilities
    are analytic at ``true_bank`` and independent of the fits.  Failed
    replications are skipped and counted; more than 5% aborts.
    """
    j_count = true_bank.n_items
    if j_count > PATTERN_CAP:
        raise ValueError(
            f"pattern enumeration is capped at {PATTERN_CAP} items; got {j_count}"
        )
    configs = list(methods)
    grid = build_gauss_hermite(n_nodes)
    patterns = enumerate_patterns(j_count).astype(float)
    probabilities = marginal_pattern_prob(patterns, true_bank, grid)

    sums = {method_label(cfg): np.zeros(len(patterns)) for cfg in configs}
    counts = {method_label(cfg): 0 for cfg in configs}
    skipped = 0
    for rep in range(replications):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(rep,)))
        theta = rng.standard_normal(n_respondents)
        p = 1.0 / (
            1.0
            + np.exp(-true_bank.scale * (theta[:, None] - true_bank.difficulties[None, :]))
        )
        data_rows = (rng.random(p.shape) < p).astype(np.int8)
        for cfg in configs:
            label = method_label(cfg)
            try:
                res = fit(data_rows, cfg)
                bank_hat = ItemBank(res.difficulties, scale=cfg.scale)
                table = likelihood_table(data_rows, bank_hat, grid)
                vbar = psi_jacobian(
                    cfg.method, cfg.alpha, bank_hat, table.u, grid, table=table
                ).mean(axis=0)
                if_values = influence_function(
                    cfg.method, cfg.alpha, bank_hat, patterns, data_rows, grid,
                    mean_jacobian=vbar,
                )
                sums[label] += np.linalg.norm(if_values, axis=1)
                counts[label] += 1
            except Exception:
                skipped += 1
                if skipped > MAX_FAILURE_FRACTION * replications * len(configs):
                    raise RuntimeError(
                        f"more than {MAX_FAILURE_FRACTION:.0%} of influence replications failed"
                    )

    order = _sort_order(patterns, probabilities)
    norms = {}
    ges = {}
    for label in sums:
        if counts[label] == 0:
            raise RuntimeError(f"all replications failed for method {label}")
        avg = sums[label] / counts[label]
        norms[label] = avg[order]
        ges[label] = float(avg.max())
    return InfluenceReport(
        patterns=patterns[order].astype(np.int8),
        probabilities=probabilities[order],
        norms=norms,
        gross_error_sensitivity=ges,
        true_bank=true_bank,
        n_respondents=n_respondents,
        replications=replications,
        skipped=skipped,
    )
