"""Fitting drivers: MMLE via EM, and the divergence fits via MM iterations.

All three fitters share the alternating structure: recompute the discrete
posterior of ability at the current difficulties (the majorization step),
then move the difficulties by minimizing a fixed-weight surrogate (the
minimization step).  For MMLE the surrogate is the EM complete-data
objective and each item separates into a one-dimensional problem; the
recorded objective trace is the marginal deviance, which EM drives down
monotonically.  For the divergence fits the update surrogate's
self-anchored stationary points are the estimating-equation roots
(`asymptotics.psi`), and the recorded objective trace is the solver's
merit ||mean psi||_2, enforced non-increasing by a line search.  The
divergence objective itself is recorded alongside for diagnostics; it is
not a Lyapunov function of these iterations (see the majorizer notes in
`objectives`).

Convergence follows the max |b_j change| < tol criterion, after which
iterations continue until the stationarity audit passes or the iteration
budget runs out.
"""

from __future__ import annotations

import warnings as _warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .asymptotics import mean_psi, sandwich_covariance
from .model import ItemBank, ResponseMatrix
from .objectives import (
    dpd_objective,
    dpd_surrogate,
    gamma_objective,
    gamma_surrogate,
    likelihood_table,
    mmle_objective,
    posterior_weights,
    surrogate_gradient_hessian,
    validate_method_alpha,
)
from .quadrature import QuadratureGrid, build_gauss_hermite

__all__ = [
    "InnerSolveConfig",
    "FitConfig",
    "FitResult",
    "FitError",
    "inner_minimize",
    "fit",
    "fit_mmle",
    "fit_dpd",
    "fit_gamma",
    "DIFFICULTY_BOUND",
]

DIFFICULTY_BOUND = 6.0
MMLE_AUDIT_TOL = 1e-6   # infinity norm of mean psi_KL
ROBUST_AUDIT_TOL = 5e-6  # 2-norm of mean psi, margin under the 1e-5 contract


class FitError(RuntimeError):
    """Inner solve failed to make progress; carries the outer iteration index."""

    def __init__(self, message: str, iteration: int):
        super().__init__(f"{message} (outer iteration {iteration})")
        self.iteration = iteration


@dataclass(frozen=True)
class InnerSolveConfig:
    """Guarded-Newton settings for one minimization step."""

    max_newton_steps: int = 25
    max_backtracks: int = 50
    levenberg_init: float = 1e-4
    levenberg_factor: float = 10.0
    step_tol: float = 1e-8


@dataclass(frozen=True)
class FitConfig:
    method: str = "mmle"
    alpha: float | None = None
    n_nodes: int = 21
    init: np.ndarray | None = None
    tol: float = 1e-4
    max_iter: int = 1000
    inner: InnerSolveConfig = field(default_factory=InnerSolveConfig)
    scale: float = 1.702
    compute_se: bool = False

    def __post_init__(self):
        validate_method_alpha(self.method, self.alpha)
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass(frozen=True)
class FitResult:
    difficulties: np.ndarray
    method: str
    alpha: float | None
    iterations: int
    converged: bool
    objective_trace: np.ndarray
    divergence_trace: np.ndarray
    stationarity_norm: float
    warnings: tuple = ()
    clamped_items: tuple = ()
    covariance: np.ndarray | None = None
    standard_errors: np.ndarray | None = None

    @property
    def n_items(self) -> int:
        return len(self.difficulties)


def inner_minimize(value_fn, grad_hess_fn, b_start: np.ndarray,
                   config: InnerSolveConfig = InnerSolveConfig(),
                   bound: float = DIFFICULTY_BOUND) -> np.ndarray:
    """Minimize a smooth function by guarded Newton steps inside a box.

    Each step solves (H + lam I) d = -g with a Levenberg shift escalated
    until the system is positive definite, then halves the step until the
    value does not increase.  Stops when the step is below ``step_tol`` or
    the Newton budget runs out.  Raises if 50 halvings cannot produce a
    non-increasing value.
    """
    b = np.asarray(b_start, dtype=float).copy()
    n = len(b)
    for _ in range(config.max_newton_steps):
        g, h = grad_hess_fn(b)
        lam = 0.0
        for _attempt in range(60):
            try:
                np.linalg.cholesky(h + lam * np.eye(n))
                break
            except np.linalg.LinAlgError:
                lam = config.levenberg_init if lam == 0.0 else lam * config.levenberg_factor
        else:
            raise np.linalg.LinAlgError("could not regularize Hessian to positive definite")
        direction = np.linalg.solve(h + lam * np.eye(n), -g)
        v0 = value_fn(b)
        step = 1.0
        for _bt in range(config.max_backtracks):
            candidate = np.clip(b + step * direction, -bound, bound)
            if value_fn(candidate) <= v0:
                break
            step *= 0.5
        else:
            raise np.linalg.LinAlgError(
                f"line search failed after {config.max_backtracks} halvings"
            )
        moved = np.max(np.abs(candidate - b))
        b = candidate
        if moved < config.step_tol:
            break
    return b


def _degenerate_columns(u: np.ndarray) -> list[int]:
    col = u.mean(axis=0)
    return [int(j) for j in np.flatnonzero((col == 0.0) | (col == 1.0))]


def _free_mask(b: np.ndarray) -> np.ndarray:
    return np.abs(b) < DIFFICULTY_BOUND - 1e-9


def _merit(method, alpha, bank, table, grid) -> float:
    m = mean_psi(method, alpha, bank, table.u, grid, table=table)
    return float(np.linalg.norm(m[_free_mask(bank.difficulties)]))


def _prepare(data, config: FitConfig):
    u = data.responses if isinstance(data, ResponseMatrix) else np.asarray(data)
    u = np.atleast_2d(u).astype(float)
    if not np.isin(u, (0.0, 1.0)).all():
        raise ValueError("responses must be binary")
    n_items = u.shape[1]
    if config.init is None or len(np.atleast_1d(config.init)) == 0:
        b0 = np.zeros(n_items)
    else:
        b0 = np.asarray(config.init, dtype=float).copy()
        if b0.shape != (n_items,):
            raise ValueError(f"init must have length {n_items}")
    grid = build_gauss_hermite(config.n_nodes)
    warn: list[str] = []
    degenerate = _degenerate_columns(u)
    if degenerate:
        warn.append(
            f"items {degenerate} have constant responses; their difficulties "
            f"diverge and are clamped to +-{DIFFICULTY_BOUND}"
        )
    return u, b0, grid, warn, degenerate


def _finalize(b, config, grid, u, method, alpha, trace, div_trace, iters, converged,
              warn) -> FitResult:
    bank = ItemBank(b, scale=config.scale)
    table = likelihood_table(u, bank, grid)
    stat = _merit(method, alpha, bank, table, grid)
    audit_tol = MMLE_AUDIT_TOL if method == "mmle" else 1e-5
    if stat >= audit_tol and converged:
        warn.append(
            f"stationarity audit: ||mean psi||={stat:.2e} >= {audit_tol:.0e} "
            "although the step criterion passed"
        )
    clamped = tuple(
        int(j) for j in np.flatnonzero(np.abs(b) >= DIFFICULTY_BOUND - 1e-9)
    )
    cov = se = None
    if config.compute_se:
        sand = sandwich_covariance(method, alpha, bank, u, grid)
        cov, se = sand.cov, sand.standard_errors
    return FitResult(
        difficulties=b.copy(),
        method=method,
        alpha=None if method == "mmle" else alpha,
        iterations=iters,
        converged=converged,
        objective_trace=np.asarray(trace),
        divergence_trace=np.asarray(div_trace),
        stationarity_norm=stat,
        warnings=tuple(warn),
        clamped_items=clamped,
        covariance=cov,
        standard_errors=se,
    )


def fit_mmle(data, config: FitConfig | None = None) -> FitResult:
    """Marginal maximum likelihood via EM with exact per-item M-steps.

    The E-step computes the discrete ability posterior; the M-step solves
    J separate one-dimensional problems by clipped Newton (the expected
    per-node counts make each item's problem strictly concave).  The
    recorded objective trace is the negative mean marginal log-likelihood.
    """
    config = config or FitConfig(method="mmle")
    u, b, grid, warn, _ = _prepare(data, config)
    n_items = u.shape[1]
    totals = u.sum(axis=0)
    scale = config.scale

    bank = ItemBank(b, scale=scale)
    table = likelihood_table(u, bank, grid)
    trace = [mmle_objective(table, bank, grid)]
    converged = False
    iters = 0
    for iters in range(1, config.max_iter + 1):
        h = posterior_weights(table, bank, grid)
        n_k = h.sum(axis=0)
        b_new = b.copy()
        for _ in range(60):
            p = 1.0 / (1.0 + np.exp(-scale * (grid.nodes[:, None] - b_new[None, :])))
            g = scale * (n_k @ p - totals)
            curv = -(scale**2) * (n_k @ (p * (1.0 - p)))
            step = -g / curv
            b_new = np.clip(b_new + step, -DIFFICULTY_BOUND, DIFFICULTY_BOUND)
            if np.max(np.abs(step)) < 1e-12:
                break
        moved = np.max(np.abs(b_new - b))
        b = b_new
        bank = ItemBank(b, scale=scale)
        table = likelihood_table(u, bank, grid)
        trace.append(mmle_objective(table, bank, grid))
        if moved < config.tol:
            converged = True
            free = _free_mask(b)
            audit = np.max(np.abs(mean_psi("mmle", None, bank, u, grid, table=table)[free]))
            if audit < MMLE_AUDIT_TOL or iters == config.max_iter:
                break
    return _finalize(b, config, grid, u, "mmle", 0.0, trace, trace, iters, converged, warn)


def _fit_divergence(data, config: FitConfig) -> FitResult:
    method, alpha = config.method, validate_method_alpha(config.method, config.alpha)
    u, b, grid, warn, _ = _prepare(data, config)
    objective = dpd_objective if method == "dpd" else gamma_objective

    bank = ItemBank(b, scale=config.scale)
    table = likelihood_table(u, bank, grid)
    merit = _merit(method, alpha, bank, table, grid)
    trace = [merit]
    div_trace = [objective(table, bank, grid, alpha)]
    converged = False
    iters = 0
    for iters in range(1, config.max_iter + 1):
        h = posterior_weights(table, bank, grid)

        surrogate_fn = dpd_surrogate if method == "dpd" else gamma_surrogate

        def surrogate_value(b_eval):
            bank_eval = ItemBank(b_eval, scale=config.scale)
            return surrogate_fn(u, bank_eval, h, grid, alpha)

        def surrogate_gh(b_eval):
            bank_eval = ItemBank(b_eval, scale=config.scale)
            t_eval = likelihood_table(u, bank_eval, grid)
            return surrogate_gradient_hessian(t_eval, bank_eval, h, grid, method, alpha)

        proposal = inner_minimize(surrogate_value, surrogate_gh, b, config.inner)

        # merit line search keeps the recorded trace non-increasing
        accepted = None
        direction = proposal - b
        step = 1.0
        for _bt in range(config.inner.max_backtracks):
            candidate = b + step * direction
            bank_c = ItemBank(candidate, scale=config.scale)
            table_c = likelihood_table(u, bank_c, grid)
            merit_c = _merit(method, alpha, bank_c, table_c, grid)
            if merit_c <= merit:
                accepted = (candidate, bank_c, table_c, merit_c)
                break
            step *= 0.5
        if accepted is None:
            if merit < 1e-5:
                warn.append("merit line search stalled below the audit tolerance")
                converged = True
                break
            raise FitError("minimization step could not reduce the stationarity merit", iters)

        candidate, bank, table, merit_new = accepted
        moved = np.max(np.abs(candidate - b))
        b = candidate
        merit = merit_new
        trace.append(merit)
        div_trace.append(objective(table, bank, grid, alpha))
        if moved < config.tol:
            converged = True
            if merit < ROBUST_AUDIT_TOL or iters == config.max_iter:
                break
    return _finalize(b, config, grid, u, method, alpha, trace, div_trace, iters,
                     converged, warn)


def fit_dpd(data, config: FitConfig | None = None, *, beta: float | None = None) -> FitResult:
    """Density-power-divergence fit (alternating posterior/minimization steps)."""
    if config is None:
        config = FitConfig(method="dpd", alpha=beta)
    if config.method != "dpd":
        config = replace(config, method="dpd")
    return _fit_divergence(data, config)


def fit_gamma(data, config: FitConfig | None = None, *, gamma: float | None = None) -> FitResult:
    """Gamma-divergence fit (alternating posterior/minimization steps)."""
    if config is None:
        config = FitConfig(method="gamma", alpha=gamma)
    if config.method != "gamma":
        config = replace(config, method="gamma")
    return _fit_divergence(data, config)


def fit(data, config: FitConfig) -> FitResult:
    """Dispatch on config.method."""
    if config.method == "mmle":
        return fit_mmle(data, config)
    if config.method == "dpd":
        return fit_dpd(data, config)
    if config.method == "gamma":
        return fit_gamma(data, config)
    raise ValueError(f"unknown method {config.method!r}")
