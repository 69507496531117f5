"""Online Kaczmarz iteration with heavy-ball momentum.

Each measurement ``(phi, y)`` moves the iterate onto the hyperplane
``<phi, x> = y`` and then adds ``beta * (x_t - x_{t-1})``. With ``beta = 0``
this is plain online Kaczmarz.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import DimensionError, as_vector
from .sources import MeasurementSource

DEGENERATE_NORM_SQ = 1e-24


def _check_beta(beta):
    beta = float(beta)
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"momentum parameter must lie in [0, 1), got {beta}")
    return beta


@dataclass(frozen=True)
class SolverState:
    x_curr: np.ndarray
    x_prev: np.ndarray
    beta: float
    t: int = 0
    skipped: int = 0

    @property
    def n(self):
        return self.x_curr.shape[0]


def init(x0, beta):
    """Starting state; the previous iterate equals ``x0`` so the first step has no momentum."""
    beta = _check_beta(beta)
    x0 = as_vector(x0).copy()
    return SolverState(x_curr=x0, x_prev=x0.copy(), beta=beta)


def step(state, m):
    """Apply one measurement and return the next state.

    Measurements with ``||phi||^2 < 1e-24`` are skipped: the returned state
    keeps both iterates and only bumps ``skipped``.
    """
    phi = np.asarray(m.phi, dtype=np.float64)
    if phi.shape != state.x_curr.shape:
        raise DimensionError(f"measurement length {phi.shape} does not match state {state.x_curr.shape}")
    y = float(m.y)
    if not (np.all(np.isfinite(phi)) and np.isfinite(y)):
        raise ValueError("measurement has non-finite entries")
    nsq = float((phi * phi).sum())
    if nsq < DEGENERATE_NORM_SQ:
        return replace(state, skipped=state.skipped + 1)
    x = state.x_curr
    r = (float((phi * x).sum()) - y) / nsq
    x_next = (x - r * phi) + state.beta * (x - state.x_prev)
    return SolverState(x_curr=x_next, x_prev=x, beta=state.beta, t=state.t + 1, skipped=state.skipped)


@dataclass
class Trajectory:
    """Errors ``||x_t - x*||`` of one run, ``errors[k]`` taken after ``steps[k]`` measurements."""

    errors: np.ndarray
    beta: float
    seed: int
    source: str
    steps: np.ndarray = field(default=None)
    skipped: int = 0

    def __post_init__(self):
        if self.steps is None:
            self.steps = np.arange(len(self.errors))

    @property
    def final_error(self):
        return float(self.errors[-1])

    def error_at(self, t):
        idx = np.searchsorted(self.steps, t)
        if idx >= len(self.steps) or self.steps[idx] != t:
            raise KeyError(f"iteration {t} was not recorded")
        return float(self.errors[idx])


def _record_mask(T, every):
    mask = np.zeros(T + 1, dtype=bool)
    mask[::every] = True
    mask[T] = True
    return mask


def run_paired(source, betas, T, x0=None, record_every=1):
    """Run one iterate per ``beta`` against the same measurement stream.

    All iterates see identical measurements, so the runs form a paired
    comparison. Stops early if a single-pass dataset runs out. Returns one
    ``Trajectory`` per beta, in the order given.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    if record_every < 1:
        raise ValueError("record_every must be at least 1")
    betas = np.array([_check_beta(b) for b in betas], dtype=np.float64)
    n = source.spec.n
    x_star = source.x_star
    x0 = np.zeros(n) if x0 is None else as_vector(x0)
    if x0.shape != (n,):
        raise DimensionError(f"x0 has shape {x0.shape}, expected ({n},)")

    B = betas.size
    X = np.tile(x0, (B, 1))
    Xp = X.copy()
    bcol = betas[:, None]
    mask = _record_mask(T, record_every)
    errs = np.empty((B, int(mask.sum())))
    steps = np.flatnonzero(mask)
    errs[:, 0] = np.sqrt(((X - x_star) ** 2).sum(axis=1))
    k = 1
    skipped = 0
    t = 0
    while t < T:
        phis, ys = source.take(min(4096, T - t))
        if len(ys) == 0:
            break
        nsqs = (phis * phis).sum(axis=1)
        for phi, y, nsq in zip(phis, ys, nsqs):
            t += 1
            if nsq < DEGENERATE_NORM_SQ:
                skipped += 1
            else:
                # row-wise reductions keep each iterate independent of its companions
                r = ((X * phi).sum(axis=1) - y) / nsq
                X, Xp = (X - r[:, None] * phi) + bcol * (X - Xp), X
            if mask[t]:
                errs[:, k] = np.sqrt(((X - x_star) ** 2).sum(axis=1))
                k += 1
    if t < T:
        # stream ended early; keep what was recorded and always include the final state
        steps, errs = steps[:k], errs[:, :k]
        if steps[-1] != t:
            steps = np.append(steps, t)
            errs = np.hstack([errs, np.sqrt(((X - x_star) ** 2).sum(axis=1))[:, None]])
    seed = source.spec.seed
    desc = source.spec.describe()
    return [Trajectory(errors=errs[i].copy(), beta=float(betas[i]), seed=seed, source=desc,
                       steps=steps.copy(), skipped=skipped)
            for i in range(B)]


def run(spec, x0=None, beta=0.0, T=1, ground_truth=None, record_every=1):
    """Single OHBK(beta) run on a fresh stream from ``spec``."""
    source = MeasurementSource(spec, x_star=ground_truth)
    return run_paired(source, [beta], T, x0=x0, record_every=record_every)[0]
