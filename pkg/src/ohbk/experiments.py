"""Multi-trial runners and summary statistics for the momentum experiments.

Trial ``i`` of an experiment is seeded with ``base_seed + i``. Inside a trial
every momentum value runs on the same measurement stream, so comparisons
across ``beta`` are paired.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .solver import run_paired, _check_beta
from .sources import MeasurementSource, SourceSpec

DEFAULT_BETAS = tuple(np.linspace(0.0, 0.6, 25))
EPS_GRID = tuple(np.linspace(0.0, 0.95, 21))
LENGTHS = (50, 100, 500, 1000)


def percentile(values, p):
    """Percentile by linear interpolation between closest ranks."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("percentile of an empty sequence")
    if not 0.0 <= p <= 100.0:
        raise ValueError(f"p must be in [0, 100], got {p}")
    return float(np.percentile(values, p, method="linear"))


def log10_error(errors):
    # exact zeros only happen at the consistency fixed point; clamp to stay finite
    return np.log10(np.maximum(errors, np.finfo(np.float64).tiny))


@dataclass
class ExperimentConfig:
    source: SourceSpec
    betas: tuple
    trials: int = 10
    T: int = 100
    base_seed: int = 0
    record_every: int = 1

    def __post_init__(self):
        if self.trials < 1 or self.T < 1:
            raise ValueError("trials and T must be at least 1")
        if len(self.betas) == 0:
            raise ValueError("need at least one beta")
        self.betas = tuple(_check_beta(b) for b in self.betas)


@dataclass
class TrialSet:
    """Trajectories of every (trial, beta) pair, ``errors[trial, beta_index, k]``."""

    betas: tuple
    seeds: tuple
    steps: np.ndarray
    errors: np.ndarray
    trajectories: list = field(repr=False)

    def by_beta(self, beta):
        i = self.betas.index(beta)
        return [row[i] for row in self.trajectories]

    def at(self, t):
        """Errors after ``t`` measurements, shape ``(trials, len(betas))``."""
        idx = np.searchsorted(self.steps, t)
        if idx >= len(self.steps) or self.steps[idx] != t:
            raise KeyError(f"iteration {t} was not recorded")
        return self.errors[:, :, idx]

    def mean_curve(self):
        return self.errors.mean(axis=0)


def run_trials(config):
    seeds = tuple(config.base_seed + i for i in range(config.trials))
    rows = []
    for seed in seeds:
        src = MeasurementSource(config.source.with_seed(seed))
        rows.append(run_paired(src, config.betas, config.T, record_every=config.record_every))
    lengths = {len(tr.steps) for row in rows for tr in row}
    if len(lengths) != 1:
        raise ValueError("trials ended at different lengths; use a fixed-length source")
    steps = rows[0][0].steps
    errors = np.array([[tr.errors for tr in row] for row in rows])
    return TrialSet(config.betas, seeds, steps, errors, rows)


@dataclass
class SweepResult:
    """Per-axis-value statistics of one error functional over trials.

    ``center`` is ``"median"`` or ``"mean"`` and picks the curve whose
    minimizer becomes ``argmin``.
    """

    axis: str
    values: np.ndarray
    functional: str
    median: np.ndarray
    p25: np.ndarray
    p75: np.ndarray
    mean: np.ndarray
    trials: int
    center: str = "median"

    @property
    def center_values(self):
        return self.median if self.center == "median" else self.mean

    @property
    def argmin_index(self):
        return int(np.argmin(self.center_values))

    @property
    def argmin(self):
        return float(self.values[self.argmin_index])


def summarize(axis, values, samples, functional, center):
    """``samples[trial, k]`` holds the functional for axis value ``values[k]``."""
    samples = np.asarray(samples, dtype=np.float64)
    return SweepResult(
        axis=axis,
        values=np.asarray(values, dtype=np.float64),
        functional=functional,
        median=np.array([percentile(samples[:, k], 50) for k in range(samples.shape[1])]),
        p25=np.array([percentile(samples[:, k], 25) for k in range(samples.shape[1])]),
        p75=np.array([percentile(samples[:, k], 75) for k in range(samples.shape[1])]),
        mean=samples.mean(axis=0),
        trials=samples.shape[0],
        center=center,
    )


def sweep_beta(config, error_at=None):
    """Median and quartiles of ``||x_{error_at} - x*||`` per beta."""
    error_at = config.T if error_at is None else error_at
    if not 0 <= error_at <= config.T:
        raise ValueError(f"error_at must lie in [0, T={config.T}]")
    trials = run_trials(config)
    return summarize("beta", config.betas, trials.at(error_at), "error", "median")


def sweep_epsilon(eps_grid, betas, n=50, T=4000, trials=10, base_seed=0):
    """Mean ``log10 ||x_T - x*||`` on ``U[eps, 1]`` measurements, one result per beta over the eps axis."""
    eps_grid = tuple(float(e) for e in eps_grid)
    if any(not 0.0 <= e < 1.0 for e in eps_grid):
        raise ValueError("eps values must lie in [0, 1)")
    betas = tuple(_check_beta(b) for b in betas)
    per_eps = []
    for eps in eps_grid:
        cfg = ExperimentConfig(SourceSpec("uniform", n, lo=eps, hi=1.0), betas, trials, T, base_seed,
                               record_every=T)
        per_eps.append(log10_error(run_trials(cfg).at(T)))
    stack = np.stack(per_eps, axis=1)  # (trials, eps, beta)
    return {b: summarize("eps", eps_grid, stack[:, :, j], "log10_error", "mean")
            for j, b in enumerate(betas)}


def sweep_length(n_set, beta_grid, T=4000, trials=10, base_seed=0, lo=0.0, hi=1.0):
    """Per signal length, the mean ``log10 ||x_T - x*||`` curve over beta and its minimizer."""
    out = {}
    for n in n_set:
        if n < 1:
            raise ValueError("signal lengths must be positive")
        cfg = ExperimentConfig(SourceSpec("uniform", int(n), lo=lo, hi=hi), tuple(beta_grid), trials, T,
                               base_seed, record_every=T)
        out[int(n)] = summarize("beta", cfg.betas, log10_error(run_trials(cfg).at(T)), "log10_error",
                                "mean")
    return out


def iterations_to_tolerance(curve, rel_tol, steps=None):
    """First recorded iteration at which ``curve`` falls below ``rel_tol * curve[0]``, else ``None``."""
    curve = np.asarray(curve)
    hits = np.flatnonzero(curve < rel_tol * curve[0])
    if hits.size == 0:
        return None
    k = int(hits[0])
    return int(steps[k]) if steps is not None else k


def dataset_run(rows, betas, seed=0, shuffle=False):
    """One single pass over a dataset for every beta on the same stream."""
    spec = SourceSpec("dataset", rows.shape[1], seed=seed, rows=rows, row_mode="once", shuffle=shuffle)
    src = MeasurementSource(spec)
    return run_paired(src, betas, rows.shape[0])
