"""Data generation for the aberrant-response scenarios and the study harness.

Three scenarios: guessing uniform in ability ("uniform_guess", driven by
prevalence and severity), guessing with ability-dependent probability
("ability_dependent", mechanisms R1/R2), and clean 1PL data ("clean").
Unbiased guessing replaces cells by Bernoulli(0.5), biased by
Bernoulli(0.2).  Replacement indicators are drawn per cell; the guess mask
records every replacement event even when the drawn value coincides with
the clean one.

Replication streams derive from numpy SeedSequence spawning, so results
are identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fitting import FitConfig, FitResult, fit
from .model import DEFAULT_SCALE, ItemBank, ResponseMatrix

__all__ = [
    "SCENARIOS",
    "GUESS_TYPES",
    "MECHANISMS",
    "ScenarioSpec",
    "SimulatedDataset",
    "MetricsSummary",
    "true_difficulties",
    "guess_success_rate",
    "mechanism_curve",
    "generate",
    "bias_rmse",
    "run_study",
    "method_label",
]

SCENARIOS = ("uniform_guess", "ability_dependent", "clean")
GUESS_TYPES = ("unbiased", "biased")
MECHANISMS = ("R1", "R2")
GUESS_RATES = {"unbiased": 0.5, "biased": 0.2}
MAX_FAILURE_FRACTION = 0.05


@dataclass(frozen=True)
class ScenarioSpec:
    scenario: str = "clean"
    guess_type: str = "unbiased"
    prevalence: float = 0.0
    severity: float = 0.0
    mechanism: str = "R1"
    n_respondents: int = 1000
    n_items: int = 15
    scale: float = DEFAULT_SCALE

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.guess_type not in GUESS_TYPES:
            raise ValueError(f"guess_type must be one of {GUESS_TYPES}, got {self.guess_type!r}")
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"mechanism must be one of {MECHANISMS}, got {self.mechanism!r}")
        if not 0.0 <= self.prevalence <= 1.0:
            raise ValueError("prevalence must lie in [0, 1]")
        if not 0.0 <= self.severity <= 1.0:
            raise ValueError("severity must lie in [0, 1]")
        if self.n_respondents < 1 or self.n_items < 1:
            raise ValueError("n_respondents and n_items must be positive")


@dataclass(frozen=True)
class SimulatedDataset:
    responses: ResponseMatrix
    abilities: np.ndarray
    true_bank: ItemBank
    guess_mask: np.ndarray
    guesser_flags: np.ndarray


@dataclass(frozen=True)
class MetricsSummary:
    method: str
    replications: int
    bias: float
    rmse: float
    bias_se: float
    rmse_se: float
    per_item: np.ndarray  # (J, 2) mean per-item bias and rmse
    failures: int = 0


def true_difficulties(n_items: int, scale: float = DEFAULT_SCALE) -> ItemBank:
    """Equally spaced difficulties spanning [-2, 2], endpoints included.

    A single item sits at 0.
    """
    if n_items < 1:
        raise ValueError("n_items must be at least 1")
    b = np.zeros(1) if n_items == 1 else np.linspace(-2.0, 2.0, n_items)
    return ItemBank(difficulties=b, scale=scale)


def guess_success_rate(guess_type: str) -> float:
    """P(guessed response = 1): 0.5 unbiased, 0.2 biased."""
    return GUESS_RATES[guess_type]


def mechanism_curve(mechanism: str, theta) -> np.ndarray:
    """Ability-dependent guessing probability R1 or R2 evaluated at theta."""
    t = np.asarray(theta, dtype=float)
    if mechanism == "R1":
        return 1.0 / (1.0 + np.exp(0.5 * (t + 5.0)))
    if mechanism == "R2":
        return 1.0 / (1.0 + np.exp(1.5 * (t + 2.0)))
    raise ValueError(f"mechanism must be one of {MECHANISMS}, got {mechanism!r}")


def generate(spec: ScenarioSpec, seed) -> SimulatedDataset:
    """Simulate one dataset under ``spec``.

    Abilities are standard normal; clean responses follow the 1PL at the
    evenly spaced difficulty bank.  Contamination replaces cells with
    Bernoulli(r) draws according to the scenario; ``guess_mask`` records
    replacement events and ``guesser_flags`` the per-respondent guesser
    indicator (scenario 1) or any-replacement flag (scenario 2).
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    i_count, j_count = spec.n_respondents, spec.n_items
    bank = true_difficulties(j_count, scale=spec.scale)
    theta = rng.standard_normal(i_count)
    p = 1.0 / (1.0 + np.exp(-spec.scale * (theta[:, None] - bank.difficulties[None, :])))
    u = (rng.random((i_count, j_count)) < p).astype(np.int8)

    mask = np.zeros((i_count, j_count), dtype=bool)
    flags = np.zeros(i_count, dtype=bool)
    if spec.scenario == "uniform_guess" and spec.prevalence > 0.0:
        r = guess_success_rate(spec.guess_type)
        flags = rng.random(i_count) < spec.prevalence
        severity_mask = rng.random((i_count, j_count)) < spec.severity
        mask = flags[:, None] & severity_mask
        draws = (rng.random((i_count, j_count)) < r).astype(np.int8)
        u = np.where(mask, draws, u)
    elif spec.scenario == "ability_dependent":
        r = guess_success_rate(spec.guess_type)
        prob = mechanism_curve(spec.mechanism, theta)
        mask = rng.random((i_count, j_count)) < prob[:, None]
        draws = (rng.random((i_count, j_count)) < r).astype(np.int8)
        u = np.where(mask, draws, u)
        flags = mask.any(axis=1)

    return SimulatedDataset(
        responses=ResponseMatrix(responses=u),
        abilities=theta,
        true_bank=bank,
        guess_mask=mask,
        guesser_flags=flags,
    )


def bias_rmse(b_hat, b_true):
    """Mean per-item error and root mean squared per-item error.

    bias = (1/J) sum_j (bhat_j - b_j); rmse = sqrt((1/J) sum_j (bhat_j - b_j)^2).
    Returns (bias, rmse, per_item) with per_item of shape (J, 2) holding the
    signed error and its absolute value per item.
    """
    b_hat = np.asarray(b_hat, dtype=float)
    b_true = np.asarray(b_true, dtype=float)
    if b_hat.shape != b_true.shape:
        raise ValueError(f"length mismatch: {b_hat.shape} vs {b_true.shape}")
    err = b_hat - b_true
    per_item = np.column_stack([err, np.abs(err)])
    return float(err.mean()), float(np.sqrt(np.mean(err**2))), per_item


def method_label(config: FitConfig) -> str:
    if config.method == "mmle":
        return "mmle"
    return f"{config.method}:{config.alpha:g}"


def _replication_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Child stream for one replication; pure function of (seed, index)."""
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))


def _run_one(args):
    spec, configs, master_seed, index = args
    rng = np.random.default_rng(_replication_seed(master_seed, index))
    data = generate(spec, rng)
    out = []
    for cfg in configs:
        try:
            res: FitResult = fit(data.responses, cfg)
            err_bias, err_rmse, per_item = bias_rmse(
                res.difficulties, data.true_bank.difficulties
            )
            out.append((err_bias, err_rmse, per_item))
        except Exception:
            out.append(None)
    return index, out


def run_study(spec: ScenarioSpec, methods, replications: int, seed: int,
              workers: int = 1) -> list[MetricsSummary]:
    """Fit every method on identical per-replication datasets; aggregate metrics.

    Replication r uses the child stream spawned from (seed, r); all methods
    see the same dataset within a replication.  Per-replication fit
    failures are skipped and counted; more than 5% failures aborts.
    Aggregation is ordered by replication index, so results do not depend
    on the worker count.
    """
    if replications < 1:
        raise ValueError("replications must be at least 1")
    configs = list(methods)
    tasks = [(spec, configs, seed, r) for r in range(replications)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_run_one, tasks, chunksize=max(1, replications // (4 * workers))))
    else:
        raw = [_run_one(t) for t in tasks]
    raw.sort(key=lambda item: item[0])

    summaries = []
    for m, cfg in enumerate(configs):
        rows = [res[m] for _, res in raw if res[m] is not None]
        failures = replications - len(rows)
        if failures > MAX_FAILURE_FRACTION * replications:
            raise RuntimeError(
                f"{failures}/{replications} replications failed for {method_label(cfg)}"
            )
        biases = np.array([r[0] for r in rows])
        rmses = np.array([r[1] for r in rows])
        per_item = np.mean([r[2] for r in rows], axis=0)
        n = len(rows)
        summaries.append(
            MetricsSummary(
                method=method_label(cfg),
                replications=n,
                bias=float(biases.mean()),
                rmse=float(rmses.mean()),
                bias_se=float(biases.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
                rmse_se=float(rmses.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
                per_item=per_item,
                failures=failures,
            )
        )
    return summaries
